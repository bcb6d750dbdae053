"""Experiment runners behind the CLI subcommands."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..diagnostics import drift_solution
from ..filters import ResonanceError, ResonanceWarning, projections, resonance_margin
from ..integrators import BlowUpError, ConvergenceError, MethodKind, StartPolicy, integrate
from ..reference import ReferenceCostError, global_error, reference_trajectory
from ..trajectory import Trajectory
from .config import ScenarioConfig, SweepConfig

TRAJECTORY_COLUMNS = ("t", "x1", "x2", "x3", "v1", "v2", "v3", "H_err", "I_err")
SWEEP_COLUMNS = ("method", "policy", "eps", "h", "err_x", "err_vpar", "err_vperp", "status")
DRIFT_COLUMNS = ("t", "xperp1", "xperp2", "xperp3", "yperp1", "yperp2", "yperp3", "deviation")
ENERGY_COLUMNS = ("t", "H_err", "I_err")
ENERGY_MAX_ROWS = 10_000


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def summary_path(output: str | Path) -> Path:
    p = Path(output)
    return p.with_name(p.stem + ".summary.json")


def _write_summary(path, summary: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def trajectory_rows(traj: Trajectory):
    H = traj.H_err if traj.H_err is not None else [None] * len(traj)
    I = traj.I_err if traj.I_err is not None else [None] * len(traj)
    for t, x, v, dh, di in zip(traj.times, traj.xs, traj.vs, H, I):
        yield [_fmt(t), *map(_fmt, x), *map(_fmt, v), _fmt(dh), _fmt(di)]


def write_trajectory_csv(path, traj: Trajectory) -> None:
    _write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def _trajectory_summary(traj: Trajectory, cfg: ScenarioConfig, n_steps: int) -> dict:
    return {
        "field": cfg.field, "method": cfg.method.value, "start_policy": cfg.start_policy.value,
        "eps": cfg.eps, "h": cfg.h, "n_steps": n_steps, "t_final": traj.t_end,
        "x_final": traj.xs[-1].tolist(), "v_final": traj.vs[-1].tolist(),
        "H0": traj.H0, "I0": traj.I0, "max_H_err": traj.max_H_err, "max_I_err": traj.max_I_err,
        "I_min": traj.I_min, "I_max": traj.I_max, "energy_slope": traj.energy_slope,
        "total_iterations": traj.total_iterations, "max_iterations": traj.max_iterations,
    }


def _filtered_margin(cfg: ScenarioConfig, model) -> float | None:
    if cfg.method is not MethodKind.FILTERED:
        return None
    return resonance_margin(cfg.h, model.eps_eff, cfg.resonance_N)[0]


@dataclass
class RunResult:
    trajectory: Trajectory
    summary: dict
    status: str = "ok"


def _run(cfg: ScenarioConfig, sample_every: int, x0=None, v0=None) -> tuple[Trajectory, dict]:
    model = cfg.model()
    t0 = time.perf_counter()
    traj = integrate(model, cfg.method, cfg.start_policy, cfg.x0 if x0 is None else x0,
                     cfg.v0 if v0 is None else v0, cfg.h, cfg.n_steps, cfg.params(),
                     sample_every=sample_every)
    summary = _trajectory_summary(traj, cfg, cfg.n_steps)
    summary["resonance_margin"] = _filtered_margin(cfg, model)
    summary["timing"] = {"wall_time_s": time.perf_counter() - t0}
    return traj, summary


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Integrate one scenario; writes ``output`` (CSV) and its ``.summary.json``.

    Resonance, non-convergence and blow-up propagate as exceptions (a blow-up
    still writes the partial trajectory first).
    """
    try:
        traj, summary = _run(cfg, cfg.resolved_sample_every())
    except BlowUpError as exc:
        if cfg.output:
            write_trajectory_csv(cfg.output, exc.trajectory)
        raise
    if cfg.output:
        write_trajectory_csv(cfg.output, traj)
        _write_summary(summary_path(cfg.output), summary)
    return RunResult(traj, summary)


# --- convergence sweep -----------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    method: str
    policy: str
    eps: float
    h: float
    err_x: float
    err_vpar: float
    err_vperp: float
    status: str

    def as_csv(self) -> list[str]:
        return [self.method, self.policy, _fmt(self.eps), _fmt(self.h), _fmt(self.err_x),
                _fmt(self.err_vpar), _fmt(self.err_vperp), self.status]


def _cell(base: ScenarioConfig, model, ref, method, policy, h, t_eval) -> SweepRow:
    nan = math.nan
    n = round(t_eval / h)
    if n < 1 or abs(n * h - t_eval) > 1e-9 * t_eval:
        return SweepRow(method.value, policy.value, base.eps, h, nan, nan, nan, "off-grid")
    status = "ok"
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ResonanceWarning)
            traj = integrate(model, method, policy, base.x0, base.v0, h, n, base.params(),
                             sample_every=n)
        if any(issubclass(w.category, ResonanceWarning) for w in caught):
            status = "low-margin"
    except ResonanceError:
        return SweepRow(method.value, policy.value, base.eps, h, nan, nan, nan, "resonance")
    except ConvergenceError:
        return SweepRow(method.value, policy.value, base.eps, h, nan, nan, nan, "nonconvergence")
    except BlowUpError:
        return SweepRow(method.value, policy.value, base.eps, h, nan, nan, nan, "blowup")
    rep = global_error(traj, ref, model.b0, traj.times[-1])
    return SweepRow(method.value, policy.value, base.eps, h, rep.rel_err_x, rep.rel_err_vpar,
                    rep.rel_err_vperp, status)


def _sweep_eps(cfg: SweepConfig, eps: float) -> list[SweepRow]:
    base = cfg.base.replace(eps=eps, t_end=cfg.t_eval)
    model = base.model()
    cells = [(m, p, h) for m in cfg.methods for p in cfg.policies for h in cfg.h_list]
    try:
        ref = reference_trajectory(model, base.x0, base.v0, cfg.t_eval, h_ref=cfg.h_ref,
                                   output_dt=cfg.t_eval)
    except ReferenceCostError:
        nan = math.nan
        return [SweepRow(m.value, p.value, eps, h, nan, nan, nan, "reference-cost")
                for m, p, h in cells]
    return [_cell(base, model, ref, m, p, h, cfg.t_eval) for m, p, h in cells]


def sort_rows(rows) -> list[SweepRow]:
    return sorted(rows, key=lambda r: (r.method, r.policy, r.eps, r.h))


def run_convergence_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Errors at ``t_eval`` against a fine-step reference for every cell.

    One reference per ``eps`` is shared by its cells; ``eps`` groups run in
    parallel worker processes. Rows come back sorted by
    ``(method, policy, eps, h)`` and are written to ``cfg.output`` if set.
    """
    if cfg.n_workers == 1:
        groups = [_sweep_eps(cfg, e) for e in cfg.eps_list]
    else:
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as pool:
            groups = list(pool.map(_sweep_eps, [cfg] * len(cfg.eps_list), cfg.eps_list))
    rows = sort_rows(r for g in groups for r in g)
    if cfg.output:
        _write_csv(cfg.output, SWEEP_COLUMNS, (r.as_csv() for r in rows))
    return rows


# --- drift ------------------------------------------------------------------

@dataclass
class DriftResult:
    trajectory: Trajectory
    xperp: np.ndarray
    yperp: np.ndarray
    deviation: np.ndarray
    summary: dict = field(default_factory=dict)

    @property
    def sup_deviation(self) -> float:
        return float(self.deviation.max())


def _revolutions(pts: np.ndarray, b0: np.ndarray) -> float:
    # unwrapped polar angle in the plane orthogonal to b0
    e1 = np.cross(b0, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 0.5:
        e1 = np.cross(b0, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(b0, e1)
    ang = np.unwrap(np.arctan2(pts @ e2, pts @ e1))
    return float((ang[-1] - ang[0]) / (2 * np.pi))


def run_drift_experiment(cfg: ScenarioConfig) -> DriftResult:
    """Compare the perpendicular motion with the slow drift flow.

    The drift starts from the perpendicular part of the unshifted initial
    position, with the parallel coordinate frozen at its initial value.
    """
    traj, summary = _run(cfg, cfg.resolved_sample_every())
    model = cfg.model()
    Ppar, Pperp = projections(model.b0)
    x0 = np.asarray(cfg.x0)
    y = drift_solution(model, Pperp @ x0, traj.times, float(model.b0 @ x0))
    xp = traj.xs @ Pperp.T
    dev = np.linalg.norm(xp - y, axis=1)
    summary.update(sup_deviation=float(dev.max()), revolutions_numerical=_revolutions(xp, model.b0),
                   revolutions_drift=_revolutions(y, model.b0))
    if cfg.output:
        _write_csv(cfg.output, DRIFT_COLUMNS,
                   ([_fmt(t), *map(_fmt, a), *map(_fmt, b), _fmt(d)]
                    for t, a, b, d in zip(traj.times, xp, y, dev)))
        _write_summary(summary_path(cfg.output), summary)
    return DriftResult(traj, xp, y, dev, summary)


# --- long-time conservation -----------------------------------------------

FULL_T_END = 1e7


@dataclass
class EnergyResult:
    trajectory: Trajectory
    summary: dict
    status: str = "ok"
    trials: list = field(default_factory=list)


def _energy_rows(traj: Trajectory):
    H = traj.H_err if traj.H_err is not None else [None] * len(traj)
    for t, dh, di in zip(traj.times, H, traj.I_err):
        yield [_fmt(t), _fmt(dh), _fmt(di)]


def _energy_summary(traj: Trajectory, cfg: ScenarioConfig, status: str, fail_step=None) -> dict:
    T = traj.t_end
    slope = traj.energy_slope
    return {
        "status": status, "fail_step": fail_step, "t_end": T,
        "max_H_err": traj.max_H_err, "max_I_err": traj.max_I_err, "H0": traj.H0, "I0": traj.I0,
        "I_min": traj.I_min, "I_max": traj.I_max, "energy_slope": slope,
        "slope_times_T": None if slope is None else slope * T,
    }


def _energy_run(cfg: ScenarioConfig, sample_every: int, x0=None, v0=None):
    try:
        traj, _ = _run(cfg, sample_every, x0, v0)
        return traj, "ok", None
    except BlowUpError as exc:
        return exc.trajectory, "blowup", exc.step


def run_longtime_energy(cfg: ScenarioConfig, full: bool = False, perturb: float | None = None,
                        trials: int = 1, seed: int | None = None) -> EnergyResult:
    """Stream energy and magnetic-moment errors over a long run.

    Conservation statistics see every step; at most ``ENERGY_MAX_ROWS``
    subsampled rows are stored. ``full`` extends the run to ``t = 1e7``.
    With ``perturb`` the initial data of ``trials`` extra runs are shifted by
    Gaussian noise of that size (seeded) and their outcomes summarised.
    """
    if full:
        cfg = cfg.replace(t_end=FULL_T_END)
    every = cfg.sample_every or max(1, math.ceil(cfg.n_steps / ENERGY_MAX_ROWS))
    t0 = time.perf_counter()
    traj, status, fail = _energy_run(cfg, every)
    summary = _energy_summary(traj, cfg, status, fail)
    summary.update(method=cfg.method.value, start_policy=cfg.start_policy.value, eps=cfg.eps,
                   h=cfg.h, field=cfg.field)
    out_trials = []
    if perturb:
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        x0, v0 = np.asarray(cfg.x0), np.asarray(cfg.v0)
        for i in range(trials):
            dx, dv = rng.normal(scale=perturb, size=(2, 3))
            tr, st, fs = _energy_run(cfg, every, x0 + dx, v0 + dv)
            rec = _energy_summary(tr, cfg, st, fs)
            rec["trial"] = i
            out_trials.append(rec)
        summary["trials"] = out_trials
    summary["timing"] = {"wall_time_s": time.perf_counter() - t0}
    if cfg.output:
        _write_csv(cfg.output, ENERGY_COLUMNS, _energy_rows(traj))
        _write_summary(summary_path(cfg.output), summary)
    return EnergyResult(traj, summary, status, out_trials)


# --- resonance ----------------------------------------------------------------

def check_resonance_cmd(h: float, eps: float, N: int, floor: float = 0.05) -> tuple[str, int]:
    """One text line with the margin and minimising ``k``; exit code 0 or 2."""
    if not (h > 0 and eps > 0) or N < 1:
        raise ValueError("need h > 0, eps > 0 and N >= 1")
    margin, k = resonance_margin(h, eps, N)
    ok = margin >= floor
    line = (f"margin={margin!r} k={k} h/(2eps)={h / (2 * eps)!r} N={N} floor={floor!r} "
            f"{'non-resonant' if ok else 'resonant'}")
    return line, 0 if ok else 2
