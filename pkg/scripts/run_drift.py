"""Perpendicular motion against the slow drift flow for three integrator set-ups.

    python scripts/run_drift.py
"""

from _common import CONFIGS, enter_script_dir

from gyrostep.harness import load_scenario, run_drift_experiment

SETUPS = (("boris", "modified"), ("boris", "raw"), ("filtered", "raw"))


def main() -> None:
    enter_script_dir()
    base = load_scenario(CONFIGS / "drift_boris_modified.json")
    for method, policy in SETUPS:
        cfg = base.replace(method=method, start_policy=policy,
                           output=f"out/drift_{method}_{policy}.csv")
        s = run_drift_experiment(cfg).summary
        print(f"{method:>9}+{policy:<8} sup deviation {s['sup_deviation']:.4e}  "
              f"revolutions {s['revolutions_numerical']:.3f} "
              f"(drift {s['revolutions_drift']:.3f})  -> {cfg.output}")


if __name__ == "__main__":
    main()
