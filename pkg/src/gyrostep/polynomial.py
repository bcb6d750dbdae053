"""Sparse polynomial scalar and vector fields on R^3.

Fields are stored as monomial term tables so that they can be differentiated
exactly and handed to the compiled kernels as plain float arrays.

Vector-field table rows: ``(component, coef, p1, p2, p3)``.
Scalar-field table rows: ``(coef, p1, p2, p3)``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Exponent = tuple[int, int, int]


def _monomial(x: np.ndarray, p: Exponent) -> float:
    return float(x[0] ** p[0] * x[1] ** p[1] * x[2] ** p[2])


def _d_monomial(coef: float, p: Exponent, j: int) -> tuple[float, Exponent] | None:
    if p[j] == 0:
        return None
    q = list(p)
    q[j] -= 1
    return coef * p[j], (q[0], q[1], q[2])


def _collect(terms: Iterable[tuple]) -> dict:
    acc: dict = defaultdict(float)
    for key, coef in terms:
        acc[key] += coef
    return {k: c for k, c in acc.items() if c != 0.0}


@dataclass(frozen=True)
class PolyScalar:
    """Scalar polynomial ``sum coef * x1^p1 x2^p2 x3^p3``."""

    terms: tuple[tuple[float, Exponent], ...] = ()

    @classmethod
    def from_dict(cls, d: dict[Exponent, float]) -> "PolyScalar":
        items = _collect(((tuple(int(e) for e in p), float(c)) for p, c in d.items()))
        return cls(tuple((c, p) for p, c in sorted(items.items())))

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return sum(c * _monomial(x, p) for c, p in self.terms)

    def gradient(self) -> "PolyVector":
        out = []
        for c, p in self.terms:
            for j in range(3):
                d = _d_monomial(c, p, j)
                if d is not None:
                    out.append(((j, d[1]), d[0]))
        return PolyVector.from_items(out)

    def table(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, 4))
        return np.array([[c, *p] for c, p in self.terms], dtype=float)


@dataclass(frozen=True)
class PolyVector:
    """Vector polynomial field; each term contributes to one component."""

    terms: tuple[tuple[int, float, Exponent], ...] = ()

    @classmethod
    def from_items(cls, items: Iterable[tuple[tuple[int, Exponent], float]]) -> "PolyVector":
        acc = _collect(items)
        return cls(tuple((i, c, p) for (i, p), c in sorted(acc.items())))

    @classmethod
    def from_components(cls, comps: Sequence[dict[Exponent, float]]) -> "PolyVector":
        if len(comps) != 3:
            raise ValueError("need three components")
        items = []
        for i, d in enumerate(comps):
            for p, c in d.items():
                items.append(((i, tuple(int(e) for e in p)), float(c)))
        return cls.from_items(items)

    @classmethod
    def linear(cls, M) -> "PolyVector":
        """The field ``x -> M x``."""
        M = np.asarray(M, dtype=float)
        unit = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        return cls.from_items(((i, unit[j]), M[i, j]) for i in range(3) for j in range(3))

    @classmethod
    def constant(cls, c) -> "PolyVector":
        return cls.from_items(((i, (0, 0, 0)), float(c[i])) for i in range(3))

    def __add__(self, other: "PolyVector") -> "PolyVector":
        return PolyVector.from_items(
            [((i, p), c) for i, c, p in self.terms] + [((i, p), c) for i, c, p in other.terms]
        )

    def scaled(self, s: float) -> "PolyVector":
        return PolyVector.from_items(((i, p), s * c) for i, c, p in self.terms)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(3)
        for i, c, p in self.terms:
            out[i] += c * _monomial(x, p)
        return out

    def partial(self, j: int) -> "PolyVector":
        out = []
        for i, c, p in self.terms:
            d = _d_monomial(c, p, j)
            if d is not None:
                out.append(((i, d[1]), d[0]))
        return PolyVector.from_items(out)

    def jacobian_terms(self) -> list[tuple[int, int, float, Exponent]]:
        rows = []
        for j in range(3):
            for i, c, p in self.partial(j).terms:
                rows.append((i, j, c, p))
        return rows

    def jacobian(self, x) -> np.ndarray:
        """Derivative matrix ``J[i, j] = d_j F_i`` at ``x``."""
        x = np.asarray(x, dtype=float)
        J = np.zeros((3, 3))
        for i, j, c, p in self.jacobian_terms():
            J[i, j] += c * _monomial(x, p)
        return J

    def curl(self) -> "PolyVector":
        d = [self.partial(j) for j in range(3)]

        items = []
        # (d2 F3 - d3 F2, d3 F1 - d1 F3, d1 F2 - d2 F1)
        for k, (a, ai, b, bi) in enumerate([(1, 2, 2, 1), (2, 0, 0, 2), (0, 1, 1, 0)]):
            items += [((k, p), c) for i, c, p in d[a].terms if i == ai]
            items += [((k, p), -c) for i, c, p in d[b].terms if i == bi]
        return PolyVector.from_items(items)

    def divergence(self) -> PolyScalar:
        acc: dict = defaultdict(float)
        for j in range(3):
            for i, c, p in self.partial(j).terms:
                if i == j:
                    acc[p] += c
        return PolyScalar.from_dict(acc)

    def table(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, 5))
        return np.array([[i, c, *p] for i, c, p in self.terms], dtype=float)

    def jacobian_table(self) -> np.ndarray:
        rows = self.jacobian_terms()
        if not rows:
            return np.zeros((0, 6))
        return np.array([[i, j, c, *p] for i, j, c, p in rows], dtype=float)

    @property
    def is_zero(self) -> bool:
        return not self.terms
