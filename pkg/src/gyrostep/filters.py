"""3x3 algebra around the strong-field direction: hat map, projectors,
rotations, filter matrices and the resonance margin of the filtered scheme."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

RESONANCE_FLOOR = 0.05
RESONANCE_HARD = 1e-8


class ResonanceError(ValueError):
    def __init__(self, message: str, margin: float = 0.0, k: int | None = None):
        super().__init__(message)
        self.margin = margin
        self.k = k


class ResonanceWarning(UserWarning):
    pass


def hat(b0) -> np.ndarray:
    """Skew matrix with ``-hat(b0) @ v == v × b0``."""
    b = np.asarray(b0, dtype=float)
    return np.array([[0.0, -b[2], b[1]],
                     [b[2], 0.0, -b[0]],
                     [-b[1], b[0], 0.0]])


def projections(b0) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(b0, dtype=float)
    Ppar = np.outer(b, b)
    return Ppar, np.eye(3) - Ppar


def rotation_about(b0, theta: float) -> np.ndarray:
    """Rodrigues rotation by ``theta`` (right-handed) about unit axis ``b0``."""
    K = hat(b0)
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def boris_rotation_angle(h: float, eps: float) -> float:
    return 2.0 * math.atan(h / (2.0 * eps))


def tanc(x: float) -> float:
    return 1.0 if x == 0.0 else math.tan(x) / x


def sinc(x: float) -> float:
    return 1.0 if x == 0.0 else math.sin(x) / x


@dataclass(frozen=True)
class FilterPair:
    """``psi`` filters the force, ``phi`` the velocity recovery.

    ``vel_corr`` is the scalar ``eps (1 - 1/sinc(h/eps))`` multiplying
    ``E × b0`` in the filtered velocity.
    """

    psi: np.ndarray
    phi: np.ndarray
    phi_inv: np.ndarray
    h: float
    eps: float
    b0: np.ndarray
    vel_corr: float


def filter_pair(h: float, eps: float, b0) -> FilterPair:
    if h <= 0 or eps <= 0:
        raise ValueError("h and eps must be positive")
    r = h / eps
    if abs(math.cos(r / 2)) < RESONANCE_HARD or abs(math.sin(r)) < RESONANCE_HARD:
        raise ResonanceError(f"filter undefined at h/eps = {r!r}", 0.0)
    K2 = hat(b0) @ hat(b0)
    inv_sinc = 1.0 / sinc(r)
    psi = np.eye(3) + (1.0 - tanc(r / 2)) * K2
    phi = np.eye(3) + (1.0 - inv_sinc) * K2
    phi_inv = np.eye(3) + (1.0 - sinc(r)) * K2
    return FilterPair(psi, phi, phi_inv, h, eps, np.asarray(b0, dtype=float),
                      eps * (1.0 - inv_sinc))


def resonance_margin(h: float, eps: float, N: int) -> tuple[float, int | None]:
    """Smallest non-resonance quantity over ``k <= N`` and the ``k`` attaining it.

    The tan-difference terms are skipped whenever ``|cos(k h / 2 eps)|`` is below
    the hard floor; the cos term then already sets the margin.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    theta = h / (2.0 * eps)
    t1 = math.tan(theta)
    best, best_k = math.inf, None
    for k in range(1, N + 1):
        s, c = abs(math.sin(k * theta)), abs(math.cos(k * theta))
        cands = [s, c]
        if k >= 2 and c >= RESONANCE_HARD and abs(math.cos(theta)) >= RESONANCE_HARD:
            cands.append(abs(math.tan(k * theta) - t1))
        m = min(cands)
        if m < best:
            best, best_k = m, k
    return best, best_k


def check_resonance(h: float, eps: float, N: int, floor: float = RESONANCE_FLOOR) -> float:
    """Raise below the hard floor, warn below ``floor``; return the margin."""
    margin, k = resonance_margin(h, eps, N)
    if margin < RESONANCE_HARD:
        raise ResonanceError(f"resonant step: h/(2 eps) = {h / (2 * eps):.12g}, "
                             f"margin {margin:.3e} at k={k}", margin, k)
    if margin < floor:
        warnings.warn(f"near-resonant step: margin {margin:.3e} at k={k} below {floor}",
                      ResonanceWarning, stacklevel=2)
    return margin
