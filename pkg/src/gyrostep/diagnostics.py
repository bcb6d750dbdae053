"""Energy, magnetic moment, guiding-centre drift and oscillation diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .fields import FieldModel, eval_total_B
from .filters import projections
from .trajectory import Trajectory

__all__ = [
    "Trajectory", "ModulationFit", "energy", "magnetic_moment", "drift_solution",
    "drift_deviation", "split_smooth_oscillatory", "modulation_fit",
]


def energy(model: FieldModel, x, v) -> float:
    if model.phi is None:
        raise ValueError("field has no scalar potential; energy is undefined")
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ v) + model.phi(x)


def magnetic_moment(model: FieldModel, x, v) -> float:
    B = eval_total_B(model, x)
    nb = np.linalg.norm(B)
    if nb == 0.0:
        raise ZeroDivisionError("magnetic field vanishes")
    vb = np.cross(np.asarray(v, dtype=float), B)
    return float(vb @ vb) / (2.0 * model.eps_eff * nb ** 3)


def _is_affine(model: FieldModel) -> bool:
    return all(sum(p) <= 1 for _, _, p in model.E.terms)


def drift_solution(model: FieldModel, y_perp0, t, par0: float = 0.0) -> np.ndarray:
    """Solve ``y' = eps E_perp(y) × b0`` from ``y_perp0``.

    ``E`` is evaluated with the parallel coordinate frozen at ``par0``. Affine
    fields use the matrix exponential; others use classical RK4 with step
    ``0.01 / (eps * L)`` (``L`` a local Lipschitz estimate). ``t`` may be a
    scalar or an increasing array; the result has matching leading shape.
    """
    b0, eps = model.b0, model.eps_eff
    _, Pperp = projections(b0)
    y0 = Pperp @ np.asarray(y_perp0, dtype=float)
    shift = par0 * b0
    ts = np.atleast_1d(np.asarray(t, dtype=float))

    def rhs(y):
        return eps * np.cross(Pperp @ model.E(y + shift), b0)

    if _is_affine(model):
        G = np.zeros((3, 3))
        for i, c, p in model.E.terms:
            if sum(p) == 1:
                G[i, p.index(1)] += c
        L = np.array([eps * np.cross(Pperp @ G[:, j], b0) for j in range(3)]).T
        f = rhs(np.zeros(3))
        aug = np.zeros((4, 4))
        aug[:3, :3] = L
        aug[:3, 3] = f
        out = np.array([(expm(aug * tk) @ np.append(y0, 1.0))[:3] for tk in ts])
    else:
        lip = max(1.0, float(np.linalg.norm(model.E.jacobian(y0 + shift), 2)))
        dt_max = 0.01 / (eps * lip)
        out = np.empty((len(ts), 3))
        y, tc = y0.copy(), 0.0
        for k, tk in enumerate(ts):
            n = max(1, math.ceil((tk - tc) / dt_max)) if tk > tc else 0
            if n:
                dt = (tk - tc) / n
                for _ in range(n):
                    k1 = rhs(y)
                    k2 = rhs(y + 0.5 * dt * k1)
                    k3 = rhs(y + 0.5 * dt * k2)
                    k4 = rhs(y + dt * k3)
                    y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                tc = tk
            out[k] = y
    return out[0] if np.ndim(t) == 0 else out


def drift_deviation(traj: Trajectory, model: FieldModel, y_perp0=None,
                    par0: float | None = None) -> float:
    """``sup_n |P_perp x^n - y_perp(t_n)|`` over the stored samples.

    The drift starts from ``P_perp x^0`` unless ``y_perp0`` is given (e.g. the
    unshifted initial position).
    """
    Ppar, Pperp = projections(model.b0)
    x0 = traj.xs[0] if y_perp0 is None else np.asarray(y_perp0, dtype=float)
    if par0 is None:
        par0 = float(model.b0 @ x0)
    y = drift_solution(model, Pperp @ x0, traj.times, par0)
    xp = traj.xs @ Pperp.T
    return float(np.max(np.linalg.norm(xp - y, axis=1)))


def split_smooth_oscillatory(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x^n = y_n + (-1)^n z_n`` with the stencil ``(x^{n+1} + 2x^n + x^{n-1})/4``.

    Requires consecutive steps; returns arrays for samples ``1 .. len-2``.
    """
    if len(traj) < 3:
        raise ValueError("need at least three samples")
    if traj.sample_every != 1:
        raise ValueError("split needs consecutive steps (sample_every = 1)")
    x = traj.xs
    y = (x[2:] + 2.0 * x[1:-1] + x[:-2]) / 4.0
    n = np.rint(traj.times[1:-1] / traj.h).astype(np.int64)
    sign = np.where(n % 2 == 0, 1.0, -1.0)[:, None]
    z = sign * (x[1:-1] - y)
    return y, z


@dataclass(frozen=True)
class ModulationFit:
    t_center: float
    half_width: float
    ks: np.ndarray
    coeffs: np.ndarray  # (len(ks), 3) complex
    trend: np.ndarray  # higher polynomial terms of the k = 0 mode, (degree, 3)
    residual: float
    condition: float

    def coefficient(self, k: int) -> np.ndarray:
        return self.coeffs[int(np.flatnonzero(self.ks == k)[0])]

    def amplitude(self, k: int) -> float:
        return float(np.linalg.norm(self.coefficient(k)))


def modulation_fit(times, xs, eps: float, K: int = 2, trend_degree: int = 2,
                   max_condition: float = 1e8) -> ModulationFit:
    """Least-squares fit of ``x(t) ~ sum_k z^k exp(i k t / eps)`` over a window.

    Coefficients with ``k != 0`` are constant; the ``k = 0`` mode additionally
    carries a polynomial trend in ``t - t_center`` of degree ``trend_degree``
    to absorb the guiding-centre motion across the window.
    """
    t = np.asarray(times, dtype=float)
    X = np.asarray(xs, dtype=float)
    if len(t) < 4 * K + 2 + trend_degree:
        raise ValueError("window too short for the requested number of modes")
    tc = 0.5 * (t[0] + t[-1])
    hw = 0.5 * (t[-1] - t[0])
    s = (t - tc) / hw
    ks = np.arange(-K, K + 1)
    cols = [np.exp(1j * k * t / eps) for k in ks]
    cols += [s ** d + 0j for d in range(1, trend_degree + 1)]
    A = np.column_stack(cols)
    cond = float(np.linalg.cond(A))
    if cond > max_condition:
        raise ValueError(f"ill-conditioned modulation fit (cond {cond:.2e}); "
                         "sample on a grid that resolves the 1/eps oscillation")
    sol, *_ = np.linalg.lstsq(A, X.astype(complex), rcond=None)
    resid = float(np.sqrt(np.mean(np.abs(A @ sol - X) ** 2)))
    return ModulationFit(tc, hw, ks, sol[: len(ks)], sol[len(ks):], resid, cond)
