"""Long-time energy and magnetic-moment behaviour in the tilted field.

    python scripts/run_energy.py [--t-end T] [--full]

``--full`` runs to t = 1e7 (1e9 steps per method; hours).
"""

import argparse

from _common import CONFIGS, enter_script_dir

from gyrostep.harness import load_scenario, run_longtime_energy

SETUPS = (("filtered", "raw"), ("variational", "modified"), ("boris", "modified"),
          ("boris", "raw"), ("variational", "raw"))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-end", type=float, default=None)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    enter_script_dir()
    base = load_scenario(CONFIGS / "energy_filtered.json")
    if args.t_end:
        base = base.replace(t_end=args.t_end)
    for method, policy in SETUPS:
        cfg = base.replace(method=method, start_policy=policy,
                           output=f"out/energy_{method}_{policy}.csv")
        res = run_longtime_energy(cfg, full=args.full)
        s = res.summary
        print(f"{method:>11}+{policy:<8} {res.status:<7} max|dH| {s['max_H_err']:.3e}  "
              f"slope*T {s['slope_times_T']:+.2e}  I in [{s['I_min']:.2e}, {s['I_max']:.2e}]  "
              f"{s['timing']['wall_time_s']:.0f} s")


if __name__ == "__main__":
    main()
