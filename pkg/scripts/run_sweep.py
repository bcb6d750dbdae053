"""Global error against eps for several step sizes, with plateau and order summaries.

    python scripts/run_sweep.py [config.json]
"""

import sys
import time
import warnings

from _common import CONFIGS, enter_script_dir

from gyrostep.filters import ResonanceWarning
from gyrostep.harness import load_sweep, run_convergence_sweep
from gyrostep.harness.analysis import cells, halving_ratios, plateau_level, plateau_spread


def main(path=CONFIGS / "sweep_cubic.json") -> None:
    enter_script_dir()
    cfg = load_sweep(path)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResonanceWarning)
        rows = run_convergence_sweep(cfg)
    print(f"{len(rows)} cells in {time.perf_counter() - t0:.1f} s -> {cfg.output}")
    for method in cfg.methods:
        for policy in cfg.policies:
            m, p = method.value, policy.value
            print(f"\n{m}+{p}")
            for h in cfg.h_list:
                errs = " ".join(f"{r.err_x:.2e}" for r in cells(rows, m, p, h))
                print(f"  h={h:<6} err_x: {errs}")
                print(f"           plateau {plateau_level(rows, m, p, h):.3e}, "
                      f"spread {plateau_spread(rows, m, p, h):.2f}")
            if p == "raw" and m == "boris":
                for h in cfg.h_list:
                    q = halving_ratios(rows, m, p, h, regime=lambda e, h=h: h * h >= 8 * e)
                    print(f"  h={h} halving ratios (h^2 >= 8 eps): "
                          + " ".join(f"{v:.2f}" for _, v in q))


if __name__ == "__main__":
    main(*sys.argv[1:])
