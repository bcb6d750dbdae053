"""Trend statistics over convergence-sweep rows (plateaus, orders, growth)."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable

from .experiments import SweepRow


def cells(rows: Iterable[SweepRow], method: str, policy: str, h: float) -> list[SweepRow]:
    """Successful rows of one (method, policy, h) line, largest eps first."""
    sel = [r for r in rows if r.method == method and r.policy == policy
           and math.isclose(r.h, h, rel_tol=1e-12) and r.status in ("ok", "low-margin")]
    return sorted(sel, key=lambda r: -r.eps)


def _values(rows, method, policy, h, metric, n):
    sel = cells(rows, method, policy, h)
    if len(sel) < n:
        raise ValueError(f"need {n} successful cells for {method}/{policy} h={h}, got {len(sel)}")
    return [getattr(r, metric) for r in sel[-n:]]


def plateau_spread(rows, method: str, policy: str, h: float, metric: str = "err_x",
                   n: int = 4) -> float:
    """max/min of ``metric`` over the ``n`` smallest eps."""
    vals = _values(rows, method, policy, h, metric, n)
    return max(vals) / min(vals)


def plateau_level(rows, method: str, policy: str, h: float, metric: str = "err_x",
                  n: int = 4) -> float:
    """Geometric mean of ``metric`` over the ``n`` smallest eps."""
    vals = _values(rows, method, policy, h, metric, n)
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


def order_ratios(rows, method: str, policy: str, hs, metric: str = "err_x",
                 n: int = 4) -> list[tuple[float, float, float]]:
    """``(h, h/2, plateau(h)/plateau(h/2))`` for consecutive step sizes."""
    hs = sorted(hs, reverse=True)
    out = []
    for a, b in zip(hs, hs[1:]):
        out.append((a, b, plateau_level(rows, method, policy, a, metric, n)
                    / plateau_level(rows, method, policy, b, metric, n)))
    return out


def halving_ratios(rows, method: str, policy: str, h: float, metric: str = "err_x",
                   regime: Callable[[float], bool] | None = None
                   ) -> list[tuple[float, float]]:
    """``(eps, err(eps/2)/err(eps))`` over consecutive halvings inside ``regime``."""
    sel = [r for r in cells(rows, method, policy, h) if regime is None or regime(r.eps)]
    out = []
    for a, b in zip(sel, sel[1:]):
        if math.isclose(b.eps, a.eps / 2, rel_tol=1e-9):
            out.append((a.eps, getattr(b, metric) / getattr(a, metric)))
    return out


def longest_run_in_band(ratios: Iterable[float], lo: float, hi: float) -> int:
    best = cur = 0
    for q in ratios:
        cur = cur + 1 if lo <= q <= hi else 0
        best = max(best, cur)
    return best
