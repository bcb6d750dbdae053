from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trajectory:
    """Sampled numerical solution plus streamed conservation statistics.

    ``H_err``/``I_err`` hold ``H - H0`` and ``I - I0`` at the samples
    (``H_err`` is None when the field has no scalar potential). The ``max_*``
    and ``I_min``/``I_max`` fields are accumulated over every step, not just
    the stored samples.
    """

    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    h: float
    method: str
    policy: str = "raw"
    sample_every: int = 1
    H_err: np.ndarray | None = None
    I_err: np.ndarray | None = None
    H0: float | None = None
    I0: float = float("nan")
    max_H_err: float | None = None
    max_I_err: float = float("nan")
    I_min: float = float("nan")
    I_max: float = float("nan")
    energy_slope: float | None = None
    total_iterations: int = 0
    max_iterations: int = 0
    is_reference: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def index_of(self, t: float, rtol: float = 1e-9) -> int:
        """Index of the sample at time ``t``; raises KeyError if absent."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no sample at t={t!r} (nearest {self.times[i]!r})")
        return i

    def window(self, start: int, stop: int) -> "Trajectory":
        sl = slice(start, stop)
        return Trajectory(
            self.times[sl], self.xs[sl], self.vs[sl], self.h, self.method, self.policy,
            self.sample_every,
            None if self.H_err is None else self.H_err[sl],
            None if self.I_err is None else self.I_err[sl],
            self.H0, self.I0, is_reference=self.is_reference, meta=dict(self.meta),
        )
