import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from gyrostep.harness import (ConfigError, ScenarioConfig, SweepConfig, load_scenario,
                              load_sweep, run_convergence_sweep, run_drift_experiment,
                              run_longtime_energy, run_scenario)
from gyrostep.harness.analysis import (halving_ratios, longest_run_in_band, order_ratios,
                                       plateau_level, plateau_spread)
from gyrostep.harness.cli import main
from gyrostep.harness.experiments import (DRIFT_COLUMNS, ENERGY_COLUMNS, SWEEP_COLUMNS,
                                          TRAJECTORY_COLUMNS, SweepRow, check_resonance_cmd)

GOLDEN = Path(__file__).parent / "golden"
SCRIPTS = Path(__file__).parent.parent / "scripts" / "configs"

BASE = {"field": "cubic", "eps": 1e-2, "h": 1e-2, "t_end": math.pi / 2,
        "method": "filtered", "start_policy": "raw"}


def write_cfg(tmp_path, name="cfg.json", **changes):
    p = tmp_path / name
    p.write_text(json.dumps({**BASE, **changes}))
    return str(p)


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


# --- configuration ---------------------------------------------------------------------

@pytest.mark.parametrize("key,value", [("h", 0), ("h", -1e-3), ("eps", 0.0), ("t_end", -1),
                                       ("method", "rk4"), ("start_policy", "lazy"),
                                       ("x0", [1, 2]), ("sample_every", 0),
                                       ("field", "nope"), ("fp_max_iter", 0)])
def test_invalid_config_names_field(key, value):
    with pytest.raises(ConfigError, match=key):
        ScenarioConfig.from_dict({**BASE, key: value})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="hh"):
        ScenarioConfig.from_dict({**BASE, "hh": 0.1})


def test_missing_required_key():
    data = dict(BASE)
    del data["eps"]
    with pytest.raises(ConfigError, match="eps"):
        ScenarioConfig.from_dict(data)


def test_cost_guard():
    with pytest.raises(ConfigError, match="cost guard"):
        ScenarioConfig.from_dict({**BASE, "h": 1e-9, "t_end": 1e3})


def test_inline_field_requires_initial_data():
    spec = {"b0": [0, 0, 1], "B1_matrix": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}
    with pytest.raises(ConfigError, match="x0"):
        ScenarioConfig.from_dict({**BASE, "field": spec})


def test_config_round_trip():
    cfg = ScenarioConfig.from_dict(BASE)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.x0 == (0.3, 0.2, -1.4) and cfg.v0 == (-0.7, 0.08, 0.2)


def test_example_configs_load():
    for p in sorted(SCRIPTS.glob("*.json")):
        data = json.loads(p.read_text())
        (load_sweep if "eps_list" in data else load_scenario)(p)


def test_sweep_config_validation():
    with pytest.raises(ConfigError, match="eps_list"):
        SweepConfig.from_dict({"base": {"field": "cubic"}, "eps_list": [], "h_list": [0.1],
                               "t_eval": 1.0})
    with pytest.raises(ConfigError, match="bogus"):
        SweepConfig.from_dict({"base": {"field": "cubic"}, "eps_list": [1e-2],
                               "h_list": [0.1], "t_eval": 1.0, "bogus": 1})


# --- simulate -------------------------------------------------------------------------------

@pytest.mark.parametrize("every", [1, 10, 7])
def test_row_count(tmp_path, every):
    out = tmp_path / "traj.csv"
    cfg = ScenarioConfig.from_dict({**BASE, "sample_every": every, "output": str(out)})
    res = run_scenario(cfg)
    rows = read_csv(out)
    assert len(rows) - 1 == math.ceil(cfg.t_end / (cfg.h * every)) + 1
    assert len(res.trajectory) == len(rows) - 1
    assert math.isfinite(res.summary["max_H_err"])


def test_summary_file_segregates_timing(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", write_cfg(tmp_path), "--output", str(out)]) == 0
    summary = json.loads((tmp_path / "traj.summary.json").read_text())
    assert "wall_time_s" in summary["timing"]
    for key in ("x_final", "v_final", "max_H_err", "max_I_err", "max_iterations"):
        assert key in summary


def test_csv_headers_match_golden(tmp_path):
    golden = json.loads((GOLDEN / "csv_headers.json").read_text())
    assert ",".join(TRAJECTORY_COLUMNS) == golden["trajectory"]
    assert ",".join(SWEEP_COLUMNS) == golden["sweep"]
    assert ",".join(DRIFT_COLUMNS) == golden["drift"]
    assert ",".join(ENERGY_COLUMNS) == golden["energy"]
    out = tmp_path / "t.csv"
    run_scenario(ScenarioConfig.from_dict({**BASE, "output": str(out)}))
    assert out.read_text().splitlines()[0] == golden["trajectory"]


def test_potential_free_field_leaves_energy_column_empty(tmp_path):
    spec = {"b0": [0, 0, 1], "B1_matrix": [[0, 0, 0], [0, 0, 0], [0, 0, 0]],
            "E": [[0, 0.1, 0, 0, 0]]}
    out = tmp_path / "t.csv"
    cfg = ScenarioConfig.from_dict({**BASE, "field": spec, "x0": [0, 0, 0], "v0": [1, 0, 0],
                                    "t_end": 0.1, "method": "boris", "output": str(out)})
    run_scenario(cfg)
    rows = read_csv(out)[1:]
    assert all(r[7] == "" and r[8] != "" for r in rows)


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", write_cfg(tmp_path), "--output", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


# --- exit codes ------------------------------------------------------------------------------

def test_exit_config_error(tmp_path, capsys):
    assert main(["simulate", write_cfg(tmp_path, h=0)]) == 1
    assert "h" in capsys.readouterr().err


def test_exit_bad_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["simulate", str(p)]) == 1


def test_exit_resonance(tmp_path):
    # h / (2 eps) = pi / 2
    assert main(["simulate", write_cfg(tmp_path, eps=1e-2, h=math.pi * 1e-2)]) == 2


def test_exit_nonconvergence(tmp_path, capsys):
    cfg = write_cfg(tmp_path, method="variational", fp_tol=1e-300, fp_max_iter=1)
    assert main(["simulate", cfg]) == 3
    assert "step" in capsys.readouterr().err


# uniform parallel acceleration: x3 = t^2 / 2 leaves the ball of radius 5 near t = 3.2
ACCELERATING = {"field": {"b0": [0, 0, 1], "phi": [[-1.0, 0, 0, 1]]}, "x0": [0, 0, 0],
                "v0": [1, 0, 0], "method": "boris", "blowup_radius": 5.0, "t_end": 10.0}


def test_exit_blowup_writes_partial_output(tmp_path):
    out = tmp_path / "t.csv"
    cfg = write_cfg(tmp_path, **ACCELERATING, sample_every=1)
    assert main(["simulate", cfg, "--output", str(out)]) == 4
    rows = read_csv(out)
    assert 300 <= len(rows) - 1 <= 330


def test_energy_blowup_exit(tmp_path):
    cfg = write_cfg(tmp_path, **ACCELERATING)
    assert main(["energy", cfg, "--output", str(tmp_path / "e.csv")]) == 4
    assert json.loads((tmp_path / "e.summary.json").read_text())["status"] == "blowup"


# --- check-resonance ------------------------------------------------------------------------

def test_check_resonance_fifty_radians(capsys):
    code = main(["check-resonance", "--h", "1e-2", "--eps", "1e-4", "--N", "3"])
    line = capsys.readouterr().out.strip()
    margin = float(line.split()[0].split("=")[1])
    th = 50.0
    cands = [abs(f(k * th)) for k in (1, 2, 3) for f in (math.sin, math.cos)]
    cands += [abs(math.tan(k * th) - math.tan(th)) for k in (2, 3)]
    assert margin == pytest.approx(min(cands), abs=1e-12)
    assert code == (0 if margin >= 0.05 else 2)
    again = main(["check-resonance", "--h", "1e-2", "--eps", "1e-4", "--N", "3"])
    assert again == code and capsys.readouterr().out.strip() == line


def test_check_resonance_quarter_pi():
    assert check_resonance_cmd(math.pi / 2, 1.0, 2)[1] == 2


def test_check_resonance_single_mode(capsys):
    assert main(["check-resonance", "--h", "1.4", "--eps", "1", "--N", "1"]) == 0
    margin = float(capsys.readouterr().out.split()[0].split("=")[1])
    assert margin == pytest.approx(math.sin(0.7), abs=1e-15)
    assert margin == pytest.approx(0.6442, abs=1e-4)


def test_check_resonance_bad_input():
    assert main(["check-resonance", "--h", "-1", "--eps", "1"]) == 1


# --- sweep / drift / energy commands ---------------------------------------------------------

def test_small_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = SweepConfig.from_dict({"base": {"field": "cubic"}, "eps_list": [2 ** -6, 2 ** -7],
                                 "h_list": [0.1, 0.05], "t_eval": 0.4, "workers": 1,
                                 "output": str(out)})
    rows = run_convergence_sweep(cfg)
    assert len(rows) == 2 * 2 * 2 * 2
    keys = [(r.method, r.policy, r.eps, r.h) for r in rows]
    assert keys == sorted(keys)
    assert all(r.status in ("ok", "low-margin") for r in rows)
    lines = read_csv(out)
    assert lines[0] == list(SWEEP_COLUMNS) and len(lines) == 17


def test_sweep_marks_unreachable_grid():
    cfg = SweepConfig.from_dict({"base": {"field": "cubic"}, "eps_list": [2 ** -6],
                                 "h_list": [0.3], "t_eval": 0.4, "workers": 1,
                                 "methods": ["boris"], "policies": ["raw"]})
    assert run_convergence_sweep(cfg)[0].status == "off-grid"


def test_sweep_marks_resonant_cells():
    eps = 0.05 / math.pi    # h / (2 eps) = pi / 2
    cfg = SweepConfig.from_dict({"base": {"field": "cubic"}, "eps_list": [eps],
                                 "h_list": [0.1], "t_eval": 0.4, "workers": 1,
                                 "methods": ["filtered"], "policies": ["raw"]})
    row = run_convergence_sweep(cfg)[0]
    assert row.status == "resonance" and math.isnan(row.err_x)


def test_sweep_parallel_matches_serial():
    d = {"base": {"field": "cubic"}, "eps_list": [2 ** -6, 2 ** -7], "h_list": [0.1],
         "t_eval": 0.4, "methods": ["boris"], "policies": ["modified"]}
    serial = run_convergence_sweep(SweepConfig.from_dict({**d, "workers": 1}))
    parallel = run_convergence_sweep(SweepConfig.from_dict({**d, "workers": 2}))
    assert [r.as_csv() for r in serial] == [r.as_csv() for r in parallel]


def test_drift_command(tmp_path, capsys):
    out = tmp_path / "drift.csv"
    cfg = write_cfg(tmp_path, method="boris", start_policy="modified", h=0.05, t_end=20.0)
    assert main(["drift", cfg, "--output", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    rows = read_csv(out)
    assert rows[0] == list(DRIFT_COLUMNS)
    assert summary["sup_deviation"] == pytest.approx(max(float(r[-1]) for r in rows[1:]))


def test_drift_experiment_counts_revolutions():
    cfg = ScenarioConfig.from_dict({**BASE, "h": 0.05, "t_end": 500.0})
    res = run_drift_experiment(cfg)
    assert res.summary["revolutions_drift"] == pytest.approx(5 / (2 * math.pi), rel=1e-6)
    assert res.summary["revolutions_numerical"] == pytest.approx(5 / (2 * math.pi), rel=0.05)


def test_energy_command_rows_and_perturbation(tmp_path, capsys):
    out = tmp_path / "e.csv"
    cfg = write_cfg(tmp_path, field="tilted", eps=1e-4, t_end=200.0)
    assert main(["energy", cfg, "--output", str(out), "--perturb", "1e-14", "--trials", "2",
                 "--seed", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert len(summary["trials"]) == 2
    rows = read_csv(out)
    assert rows[0] == list(ENERGY_COLUMNS) and len(rows) - 1 <= 10_001


def test_energy_trial_seed_is_reproducible():
    cfg = ScenarioConfig.from_dict({**BASE, "field": "tilted", "eps": 1e-4, "t_end": 50.0,
                                    "x0": None, "v0": None})
    a = run_longtime_energy(cfg, perturb=1e-14, trials=2, seed=5).trials
    b = run_longtime_energy(cfg, perturb=1e-14, trials=2, seed=5).trials
    assert [t["max_H_err"] for t in a] == [t["max_H_err"] for t in b]


# --- analysis helpers -----------------------------------------------------------------------

def _rows(values, method="boris", policy="modified", h=0.1):
    return [SweepRow(method, policy, 2.0 ** -j, h, v, v, v, "ok") for j, v in values]


def test_plateau_helpers():
    rows = _rows([(6, 1.0), (7, 2.0), (8, 2.0), (9, 4.0), (10, 1.0)])
    assert plateau_spread(rows, "boris", "modified", 0.1, n=4) == 4.0
    assert plateau_level(rows, "boris", "modified", 0.1, n=2) == pytest.approx(2.0)
    rows += _rows([(9, 1.0), (10, 0.25)], h=0.05)
    assert order_ratios(rows, "boris", "modified", [0.1, 0.05], n=2) == [
        (0.1, 0.05, pytest.approx(4.0))]


def test_halving_ratios_and_band():
    rows = _rows([(12, 1.0), (13, 2.0), (14, 4.2), (15, 8.0)], policy="raw")
    r = halving_ratios(rows, "boris", "raw", 0.1)
    np.testing.assert_allclose([q for _, q in r], [2.0, 2.1, 8 / 4.2])
    np.testing.assert_allclose([e for e, _ in r], [2.0 ** -12, 2.0 ** -13, 2.0 ** -14])
    assert longest_run_in_band([q for _, q in r], 1.5, 2.7) == 3
    assert longest_run_in_band([2, 3, 2, 2], 1.5, 2.7) == 2
