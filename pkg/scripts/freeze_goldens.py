"""Measure the regression constants used by the acceptance tests and store them.

Run once after an intentional numerical change:

    python scripts/freeze_goldens.py

Each constant is written next to its bound (measured value times SLACK).
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from gyrostep.diagnostics import drift_solution
from gyrostep.filters import projections
from gyrostep.harness import ScenarioConfig, run_drift_experiment, run_longtime_energy
from gyrostep.reference import reference_trajectory

SLACK = 1.5
OUT = Path(__file__).resolve().parent.parent / "tests" / "golden" / "acceptance.json"

DRIFT = dict(field="cubic", eps=1e-2, h=0.05, t_end=500.0)
ENERGY = dict(field="tilted", eps=1e-4, h=1e-2, t_end=1e4, method="variational",
              start_policy="modified")


def entry(measured: float, scale: float, scale_name: str) -> dict:
    c = measured / scale
    return {"measured": measured, "C": c, "scale": scale_name, "C_bound": SLACK * c}


def reference_drift_deviation(eps: float = 1e-2, t_end: float = 500.0,
                              h_ref: float = 1e-4, output_dt: float = 0.05) -> float:
    cfg = ScenarioConfig.from_dict({**DRIFT, "eps": eps, "t_end": t_end})
    model = cfg.model()
    _, Pperp = projections(model.b0)
    x0 = np.asarray(cfg.x0)
    ref = reference_trajectory(model, cfg.x0, cfg.v0, t_end, h_ref=h_ref, output_dt=output_dt)
    y = drift_solution(model, Pperp @ x0, ref.times, float(model.b0 @ x0))
    return float(np.max(np.linalg.norm(ref.xs @ Pperp.T - y, axis=1)))


def main() -> None:
    h = DRIFT["h"]
    out: dict = {"slack": SLACK}
    t0 = time.perf_counter()
    bm = run_drift_experiment(ScenarioConfig.from_dict(
        {**DRIFT, "method": "boris", "start_policy": "modified"})).sup_deviation
    fr = run_drift_experiment(ScenarioConfig.from_dict(
        {**DRIFT, "method": "filtered", "start_policy": "raw"})).sup_deviation
    ref = reference_drift_deviation()
    out["drift_boris_modified"] = entry(bm, h ** 2, "h^2")
    out["drift_filtered_raw"] = entry(fr, h, "h")
    out["drift_reference"] = entry(ref, DRIFT["eps"], "eps")
    res = run_longtime_energy(ScenarioConfig.from_dict(ENERGY))
    out["energy_variational_modified"] = entry(res.summary["max_H_err"], ENERGY["h"] ** 2, "h^2")
    OUT.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))
    print(f"measured in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
