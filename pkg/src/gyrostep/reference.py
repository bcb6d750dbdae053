"""Ground-truth solutions: closed form for uniform fields and a fine-step
Boris reference, plus relative error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import FieldModel
from .filters import projections, rotation_about
from .integrators import MethodKind, SolverParams, StartPolicy, integrate
from .trajectory import Trajectory

MAX_REFERENCE_STEPS = 10**10


class ReferenceCostError(RuntimeError):
    pass


def exact_constant_solution(b0, eps: float, E_const, x0, v0, t: float
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Exact solution of ``x'' = x' × b0/eps + E`` for uniform ``E``.

    Parallel motion is uniformly accelerated, the perpendicular velocity is the
    drift ``eps E × b0`` plus a gyration at angular frequency ``1/eps``.
    """
    b0, E, x0, v0 = (np.asarray(a, dtype=float) for a in (b0, E_const, x0, v0))
    Ppar, Pperp = projections(b0)
    E_par, E_perp = Ppar @ E, Pperp @ E
    v_par = Ppar @ v0
    vd = eps * np.cross(E_perp, b0)
    u0 = Pperp @ v0 - vd
    # v × b0 = -b0 × v, i.e. clockwise about b0
    u = rotation_about(b0, -t / eps) @ u0
    s, c = math.sin(t / eps), math.cos(t / eps)
    x = (x0 + v_par * t + 0.5 * E_par * t * t + vd * t
         + eps * (s * u0 + (c - 1.0) * np.cross(b0, u0)))
    v = v_par + E_par * t + vd + u
    return x, v


def reference_trajectory(model: FieldModel, x0, v0, t_end: float, h_ref: float | None = None,
                         output_dt: float | None = None, track: bool = False) -> Trajectory:
    """Fine-step Boris run from the raw initial data.

    ``h_ref`` defaults to ``eps_eff/100`` and is shrunk so that it divides
    ``output_dt`` (default ``t_end``); samples are stored every ``output_dt``.
    Velocities are rotation-corrected central differences. Conservation
    statistics are only streamed over every step when ``track`` is set.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    output_dt = t_end if output_dt is None else output_dt
    n_out = round(t_end / output_dt)
    if n_out < 1 or abs(n_out * output_dt - t_end) > 1e-9 * t_end:
        raise ValueError("t_end must be a multiple of output_dt")
    h_target = model.eps_eff / 100.0 if h_ref is None else h_ref
    per_out = max(1, math.ceil(output_dt / h_target * (1 - 1e-12)))
    n_steps = per_out * n_out
    if n_steps > MAX_REFERENCE_STEPS:
        raise ReferenceCostError(
            f"reference needs {n_steps:.3e} steps (> {MAX_REFERENCE_STEPS:.0e}); "
            f"estimated {n_steps * 1e-7 / 60:.0f}+ CPU minutes")
    h = output_dt / per_out
    traj = integrate(model, MethodKind.BORIS, StartPolicy.RAW, x0, v0, h, n_steps,
                     SolverParams(blowup_radius=math.inf), sample_every=per_out,
                     reference_velocity=True, track=track)
    traj.meta["h_ref"] = h
    return traj


@dataclass(frozen=True)
class ErrorReport:
    rel_err_x: float
    rel_err_vpar: float
    rel_err_vperp: float
    t_eval: float


def global_error(traj: Trajectory, ref: Trajectory, b0, t_eval: float) -> ErrorReport:
    """Errors at ``t_eval`` normalised by ``max(1, |reference quantity|)``."""
    i, j = traj.index_of(t_eval), ref.index_of(t_eval)
    Ppar, Pperp = projections(b0)
    xn, xr = traj.xs[i], ref.xs[j]
    vn, vr = traj.vs[i], ref.vs[j]

    def rel(a, b):
        return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))

    return ErrorReport(rel(xn, xr), rel(Ppar @ vn, Ppar @ vr), rel(Pperp @ vn, Pperp @ vr),
                       float(t_eval))
