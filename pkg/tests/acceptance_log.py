"""Collects one PASS/FAIL line per acceptance check for the terminal summary."""

LINES: list[str] = []


def report(criterion: str, label: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {label}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def info(criterion: str, label: str, detail: str) -> None:
    line = f"INFO criterion {criterion}: {label}: {detail}"
    LINES.append(line)
    print(line)
