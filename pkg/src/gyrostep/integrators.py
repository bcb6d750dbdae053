"""Boris, variational and filtered variational steppers on the staggered grid
``(x^n, v^{n-1/2})``, with their starting procedures and velocity recovery."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .fields import FieldModel, eval_total_A, eval_total_B
from .filters import FilterPair, check_resonance, filter_pair, hat, projections
from .trajectory import Trajectory


class MethodKind(str, enum.Enum):
    BORIS = "boris"
    VARIATIONAL = "variational"
    FILTERED = "filtered"

    @property
    def code(self) -> int:
        return {"boris": K.BORIS, "variational": K.VARIATIONAL, "filtered": K.FILTERED}[self.value]


class StartPolicy(str, enum.Enum):
    RAW = "raw"
    MODIFIED = "modified"
    MODIFIED_VELOCITY_ONLY = "modified-velocity"


@dataclass(frozen=True)
class SolverParams:
    fp_tol: float = 1e-12
    fp_max_iter: int = 50
    resonance_floor: float = 0.05
    resonance_N: int = 2
    blowup_radius: float = 1e3

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be >= 1")


@dataclass(frozen=True)
class StaggeredState:
    n: int
    x: np.ndarray
    v_half: np.ndarray
    x_prev: np.ndarray


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, step: int = -1, residual: float = math.nan,
                 iterations: int = 0):
        super().__init__(message)
        self.step = step
        self.residual = residual
        self.iterations = iterations


class BlowUpError(RuntimeError):
    def __init__(self, message: str, step: int, trajectory: Trajectory):
        super().__init__(message)
        self.step = step
        self.trajectory = trajectory


def _vec(v) -> np.ndarray:
    out = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite vector {v!r}")
    return out


def _packed(model: FieldModel) -> tuple:
    # FieldModel is frozen; cache the kernel tables on the instance.
    fa = model.__dict__.get("_packed")
    if fa is None:
        fa = model.packed()
        model.__dict__["_packed"] = fa
    return fa


def modified_initial_velocity(model: FieldModel, x0, xdot0) -> np.ndarray:
    """Parallel part of ``xdot0`` plus the O(eps) perpendicular correction."""
    x0, xdot0 = _vec(x0), _vec(xdot0)
    Ppar, _ = projections(model.b0)
    vpar = Ppar @ xdot0
    vperp = model.eps_eff * np.cross(np.cross(vpar, model.B1(x0)) + model.E(x0), model.b0)
    return vpar + vperp


def start_data(model: FieldModel, policy: StartPolicy, x0, xdot0) -> tuple[np.ndarray, np.ndarray]:
    """Apply a start policy to initial data; returns ``(x^0, v^0)``."""
    x0, xdot0 = _vec(x0), _vec(xdot0)
    policy = StartPolicy(policy)
    if policy is StartPolicy.RAW:
        return x0, xdot0
    if policy is StartPolicy.MODIFIED:
        x0 = x0 + model.eps_eff * np.cross(xdot0, model.b0)
    return x0, modified_initial_velocity(model, x0, xdot0)


def _filters_for(model: FieldModel, h: float, params: SolverParams) -> FilterPair:
    check_resonance(h, model.eps_eff, params.resonance_N, params.resonance_floor)
    return filter_pair(h, model.eps_eff, model.b0)


def _first_half_velocity(model, method, x0, v0, h, params, filters):
    method = MethodKind(method)
    fa = _packed(model)
    if method is MethodKind.FILTERED:
        vh, _, its, ok, upd = K.filtered_start(fa, x0, v0, h, filters.psi, filters.phi_inv,
                                               filters.vel_corr, params.fp_tol,
                                               params.fp_max_iter)
        if not ok:
            raise ConvergenceError(f"starting fixed point did not converge "
                                   f"(update {upd:.3e})", 0, upd, its)
        return vh
    return v0 + 0.5 * h * (np.cross(v0, eval_total_B(model, x0)) + model.E(x0))


def _half_rotated_velocity(model, x0, v0, h):
    # Boris half step whose rotation-corrected central velocity at n = 0 is v0 itself
    B = eval_total_B(model, x0)
    nb = np.linalg.norm(B)
    vpar = (v0 @ B) / (nb * nb) * B
    vperp = v0 - vpar
    rot = (vperp + 0.5 * h * np.cross(vperp, B)) / math.sqrt(1.0 + (0.5 * h * nb) ** 2)
    return vpar + rot + 0.5 * h * model.E(x0)


def prepare_start(model: FieldModel, method, policy, x0, v0, h: float,
                  params: SolverParams = SolverParams(), filters: FilterPair | None = None
                  ) -> StaggeredState:
    """Staggered state ``(x^1, v^{1/2})`` with ``x_prev = x^0``."""
    if h <= 0:
        raise ValueError("h must be positive")
    method = MethodKind(method)
    if method is MethodKind.FILTERED and filters is None:
        filters = _filters_for(model, h, params)
    xs, vs = start_data(model, policy, x0, v0)
    vh = _first_half_velocity(model, method, xs, vs, h, params, filters)
    return StaggeredState(1, xs + h * vh, vh, xs)


def boris_rotate(v_plus, B, h: float) -> np.ndarray:
    return K.boris_rotate(_vec(v_plus), _vec(B), float(h))


def step_boris(model: FieldModel, s: StaggeredState, h: float) -> StaggeredState:
    x, vh = K.boris_step(_packed(model), s.x, s.v_half, h)
    return StaggeredState(s.n + 1, x, vh, s.x)


def _implicit(model, s, h, params, psi, n_label):
    x, vh, its, ok, upd = K.implicit_step(_packed(model), s.x, s.x_prev, s.v_half, h, psi,
                                          params.fp_tol, params.fp_max_iter)
    if not ok:
        raise ConvergenceError(f"fixed point did not converge at step {n_label} "
                               f"after {its} iterations (update {upd:.3e})", n_label, upd, its)
    return StaggeredState(s.n + 1, x, vh, s.x), its


def step_variational(model: FieldModel, s: StaggeredState, h: float,
                     params: SolverParams = SolverParams()) -> StaggeredState:
    return _implicit(model, s, h, params, np.eye(3), s.n)[0]


def step_filtered(model: FieldModel, s: StaggeredState, h: float,
                  params: SolverParams = SolverParams(),
                  filters: FilterPair | None = None) -> StaggeredState:
    if filters is None:
        filters = _filters_for(model, h, params)
    return _implicit(model, s, h, params, filters.psi, s.n)[0]


def step_iterations(model, method, s, h, params=SolverParams(), filters=None) -> int:
    """Fixed-point iteration count of one implicit step (0 for Boris)."""
    method = MethodKind(method)
    if method is MethodKind.BORIS:
        return 0
    psi = np.eye(3) if method is MethodKind.VARIATIONAL else filters.psi
    return _implicit(model, s, h, params, psi, s.n)[1]


def recover_velocity(method, model: FieldModel, x_prev, x_next, x_cur, h: float,
                     filters: FilterPair | None = None) -> np.ndarray:
    method = MethodKind(method)
    c = (_vec(x_next) - _vec(x_prev)) / (2.0 * h)
    if method is not MethodKind.FILTERED:
        return c
    if filters is None:
        raise ValueError("filtered velocity recovery needs the filter matrices")
    return filters.phi @ c + filters.vel_corr * np.cross(model.E(x_cur), model.b0)


def integrate(model: FieldModel, method, policy, x0, v0, h: float, n_steps: int,
              params: SolverParams = SolverParams(), sample_every: int = 1,
              reference_velocity: bool = False, track: bool = True) -> Trajectory:
    """Run ``n_steps`` steps and sample ``(t, x, v)`` every ``sample_every`` steps.

    One extra step past ``n_steps`` is taken so the last sample has a
    central-difference velocity. With ``track=False`` the conservation
    statistics only see the stored samples (faster for reference runs).
    """
    if n_steps < 1 or sample_every < 1:
        raise ValueError("n_steps and sample_every must be >= 1")
    method, policy = MethodKind(method), StartPolicy(policy)
    filters = _filters_for(model, h, params) if method is MethodKind.FILTERED else None
    xs0, vs0 = start_data(model, policy, x0, v0)
    if reference_velocity and method is MethodKind.BORIS:
        vh = _half_rotated_velocity(model, xs0, vs0, h)
    else:
        vh = _first_half_velocity(model, method, xs0, vs0, h, params, filters)
    x1 = xs0 + h * vh
    psi = filters.psi if filters else np.eye(3)
    phi = filters.phi if filters else np.eye(3)
    corr = filters.vel_corr if filters else 0.0
    fa = _packed(model)
    ts, xs, vs, hs, ms, st, status, fail, upd = K.run(
        method.code, fa, model.has_phi, xs0, vs0, x1, vh, float(h), int(n_steps),
        int(sample_every), psi, phi, corr, params.fp_tol, params.fp_max_iter,
        params.blowup_radius, reference_velocity, track)
    slope = None
    if model.has_phi and st[12] > 1:
        n = st[12]
        den = n * st[11] - st[10] ** 2
        slope = float((n * st[9] - st[10] * st[8]) / den) if den > 0 else 0.0
    traj = Trajectory(
        ts, xs, vs, float(h), method.value, policy.value, int(sample_every),
        hs if model.has_phi else None, ms,
        float(st[4]) if model.has_phi else None, float(st[5]),
        float(st[0]) if model.has_phi else None, float(st[1]), float(st[2]), float(st[3]),
        slope, int(st[6]), int(st[7]), is_reference=reference_velocity,
    )
    if status == K.NONCONVERGED:
        raise ConvergenceError(f"fixed point did not converge at step {fail} "
                               f"(update {upd:.3e})", int(fail), float(upd), params.fp_max_iter)
    if status == K.BLOWUP:
        raise BlowUpError(f"|x| exceeded {params.blowup_radius:g} at step {fail}", int(fail), traj)
    return traj


def two_step_residual(method, model: FieldModel, x_m, x_0, x_p, h: float,
                      filters: FilterPair | None = None) -> np.ndarray:
    """Left minus right side of the two-step form at ``(x^{n-1}, x^n, x^{n+1})``."""
    method = MethodKind(method)
    x_m, x_0, x_p = _vec(x_m), _vec(x_0), _vec(x_p)
    lhs = (x_p - 2.0 * x_0 + x_m) / h ** 2
    c = (x_p - x_m) / (2.0 * h)
    if method is MethodKind.BORIS:
        return lhs - (np.cross(c, eval_total_B(model, x_0)) + model.E(x_0))
    # evaluated with the full potential A, independent of the stepper's A1 form
    rhs = (_full_jac(model, x_0).T @ c
           - (eval_total_A(model, x_p) - eval_total_A(model, x_m)) / (2.0 * h)
           + model.E(x_0))
    if method is MethodKind.FILTERED:
        if filters is None:
            raise ValueError("filtered residual needs the filter matrices")
        rhs = filters.psi @ rhs
    return lhs - rhs


def _full_jac(model: FieldModel, x) -> np.ndarray:
    # d/dx of -(1/2) x × b0 is (1/2) hat(b0)
    return 0.5 * hat(model.b0) / model.eps_eff + model.A1_jac(x)
