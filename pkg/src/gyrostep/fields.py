"""Magnetic/electric field models ``B(x) = b0/eps + B1(x)``.

All non-constant parts are sparse polynomials (see :mod:`gyrostep.polynomial`),
which keeps derivatives exact and lets the compiled steppers evaluate them from
term tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .polynomial import PolyScalar, PolyVector

DEFAULT_FD_STEP = 1e-5


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class FieldModel:
    """Immutable field model.

    ``b0_raw`` may be non-unit; it is folded into ``eps_eff`` so that
    ``b0_raw / eps == b0 / eps_eff`` with ``|b0| = 1``.
    """

    b0_raw: np.ndarray
    eps: float
    B1: PolyVector
    A1: PolyVector
    E: PolyVector
    phi: PolyScalar | None = None
    name: str = "custom"
    b0: np.ndarray = field(init=False)
    eps_eff: float = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.b0_raw, dtype=float).reshape(3)
        if not np.all(np.isfinite(b)) or np.linalg.norm(b) == 0.0:
            raise FieldError("b0 must be a finite non-zero vector")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise FieldError("eps must be positive")
        nb = float(np.linalg.norm(b))
        b.setflags(write=False)
        unit = b / nb
        unit.setflags(write=False)
        object.__setattr__(self, "b0_raw", b)
        object.__setattr__(self, "b0", unit)
        object.__setattr__(self, "eps_eff", float(self.eps) / nb)

    @property
    def has_phi(self) -> bool:
        return self.phi is not None

    def A1_jac(self, x) -> np.ndarray:
        return self.A1.jacobian(x)

    def with_eps(self, eps: float) -> "FieldModel":
        return FieldModel(self.b0_raw, eps, self.B1, self.A1, self.E, self.phi, self.name)

    def packed(self) -> tuple:
        """Term tables in the layout expected by :mod:`gyrostep._kernels`."""
        return (
            np.array(self.b0),
            1.0 / self.eps_eff,
            self.B1.table(),
            self.A1.table(),
            self.A1.jacobian_table(),
            self.E.table(),
            self.phi.table() if self.phi is not None else np.zeros((0, 4)),
        )


def eval_total_B(model: FieldModel, x) -> np.ndarray:
    return model.b0 / model.eps_eff + model.B1(x)


def eval_total_A(model: FieldModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return -0.5 * np.cross(x, model.b0) / model.eps_eff + model.A1(x)


def potential_for_linear_B1(M, tol: float = 1e-12) -> tuple[PolyVector, Callable]:
    """Vector potential ``A1(x) = -(1/3) x × (M x)`` of the field ``B1(x) = M x``.

    Valid for trace-free ``M``; returns the potential and its exact Jacobian.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise FieldError("M must be 3x3")
    if abs(np.trace(M)) > tol:
        raise FieldError(f"B1(x) = Mx is not divergence-free (trace {np.trace(M):.3e})")
    # (x × Mx)_i = eps_ijk x_j (M x)_k = eps_ijk M_kl x_j x_l
    items = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        for l in range(3):
            for a, b, sgn in ((j, k, 1.0), (k, j, -1.0)):
                p = [0, 0, 0]
                p[a] += 1
                p[l] += 1
                items.append(((i, tuple(p)), -sgn * M[b, l] / 3.0))
    A1 = PolyVector.from_items(items)
    return A1, A1.jacobian


# --- catalog -------------------------------------------------------------

CUBIC_X0 = (0.3, 0.2, -1.4)
CUBIC_V0 = (-0.7, 0.08, 0.2)
TILTED_X0 = (0.0, 1.0, 0.1)
TILTED_V0 = (0.09, 0.05, 0.2)

TILTED_B0 = (1.0, 0.0, 0.5)
TILTED_M = np.array([[0.0, 1.0, -1.0], [1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]])


def cubic_field(eps: float) -> FieldModel:
    """Vertical strong field with a cubic non-uniform part, ``E = -x``."""
    B1 = PolyVector.from_components([
        {(1, 0, 1): 1.0, (1, 1, 0): -1.0},
        {(1, 1, 0): 1.0, (0, 1, 1): -1.0},
        {(0, 1, 1): 1.0, (1, 0, 1): -1.0},
    ])
    A1 = PolyVector.from_components([{(1, 1, 1): 1.0}] * 3)
    E = PolyVector.linear(-np.eye(3))
    phi = PolyScalar.from_dict({(2, 0, 0): 0.5, (0, 2, 0): 0.5, (0, 0, 2): 0.5})
    return FieldModel(np.array([0.0, 0.0, 1.0]), eps, B1, A1, E, phi, name="cubic")


def tilted_field(eps: float) -> FieldModel:
    """Tilted strong field ``(1, 0, 0.5)/eps`` plus a linear part, quartic potential."""
    B1 = PolyVector.linear(TILTED_M)
    A1, _ = potential_for_linear_B1(TILTED_M)
    phi = PolyScalar.from_dict({
        (3, 0, 0): 1.0, (0, 3, 0): -1.0, (4, 0, 0): 0.2, (0, 4, 0): 1.0, (0, 0, 4): 1.0,
    })
    E = phi.gradient().scaled(-1.0)
    return FieldModel(np.array(TILTED_B0), eps, B1, A1, E, phi, name="tilted")


def constant_field(eps: float, E_const: Sequence[float] = (0.0, 0.0, 0.0),
                   b0: Sequence[float] = (0.0, 0.0, 1.0)) -> FieldModel:
    """Uniform magnetic field with a uniform electric field (``phi = -E·x``)."""
    E_const = np.asarray(E_const, dtype=float)
    E = PolyVector.constant(E_const)
    phi = PolyScalar.from_dict({(1, 0, 0): -E_const[0], (0, 1, 0): -E_const[1],
                                (0, 0, 1): -E_const[2]})
    return FieldModel(np.asarray(b0, dtype=float), eps, PolyVector(), PolyVector(), E, phi,
                      name="constant")


CATALOG = {
    "cubic": (cubic_field, CUBIC_X0, CUBIC_V0),
    "tilted": (tilted_field, TILTED_X0, TILTED_V0),
    "constant": (constant_field, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
}


def catalog(name: str, eps: float) -> FieldModel:
    try:
        factory = CATALOG[name][0]
    except KeyError:
        raise FieldError(f"unknown field {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(eps)


def field_from_spec(spec: dict, eps: float) -> FieldModel:
    """Build a polynomial field from a config mapping.

    Keys: ``b0`` (3-vector), ``B1_matrix`` (trace-free 3x3, optional),
    ``phi`` (rows ``[coef, p1, p2, p3]``), ``E`` (rows ``[comp, coef, p1, p2, p3]``).
    ``E`` defaults to ``-grad phi``; without ``phi`` energy diagnostics are off.
    """
    allowed = {"b0", "B1_matrix", "phi", "E"}
    unknown = set(spec) - allowed
    if unknown:
        raise FieldError(f"unknown field keys: {sorted(unknown)}")
    b0 = np.asarray(spec.get("b0", (0.0, 0.0, 1.0)), dtype=float)
    if "B1_matrix" in spec:
        M = np.asarray(spec["B1_matrix"], dtype=float)
        B1 = PolyVector.linear(M)
        A1, _ = potential_for_linear_B1(M)
    else:
        B1, A1 = PolyVector(), PolyVector()
    phi = None
    if "phi" in spec:
        phi = PolyScalar.from_dict({tuple(int(e) for e in r[1:4]): float(r[0]) for r in spec["phi"]})
    if "E" in spec:
        E = PolyVector.from_items(
            ((int(r[0]), tuple(int(e) for e in r[2:5])), float(r[1])) for r in spec["E"]
        )
    elif phi is not None:
        E = phi.gradient().scaled(-1.0)
    else:
        E = PolyVector()
    return FieldModel(b0, eps, B1, A1, E, phi)


# --- consistency ----------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyReport:
    curl_residual: float
    jacobian_residual: float
    grad_residual: float | None

    @property
    def max_residual(self) -> float:
        vals = [self.curl_residual, self.jacobian_residual]
        if self.grad_residual is not None:
            vals.append(self.grad_residual)
        return max(vals)


def fd_jacobian(f: Callable, x: np.ndarray, step: float) -> np.ndarray:
    J = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        J[:, j] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step)
    return J


def fd_curl(f: Callable, x: np.ndarray, step: float) -> np.ndarray:
    J = fd_jacobian(f, x, step)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_gradient(f: Callable, x: np.ndarray, step: float) -> np.ndarray:
    g = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        g[j] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def check_consistency(model: FieldModel, points, fd_step: float = DEFAULT_FD_STEP
                      ) -> ConsistencyReport:
    """Max central-difference residuals of ``curl A1 = B1``, ``A1'`` and ``-grad phi = E``."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    curl_r = jac_r = 0.0
    grad_r = 0.0 if model.has_phi else None
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        curl_r = max(curl_r, float(np.max(np.abs(fd_curl(model.A1, x, fd_step) - model.B1(x)))))
        jac_r = max(jac_r, float(np.max(np.abs(fd_jacobian(model.A1, x, fd_step)
                                               - model.A1_jac(x)))))
        if model.has_phi:
            g = fd_gradient(model.phi, x, fd_step)
            grad_r = max(grad_r, float(np.max(np.abs(-g - model.E(x)))))
    return ConsistencyReport(curl_r, jac_r, grad_r)
