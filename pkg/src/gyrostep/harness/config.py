"""Declarative run descriptions loaded from JSON files.

Every key of a config file must be a field name of the corresponding
dataclass; unknown keys are rejected so that typos do not silently fall back
to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..fields import CATALOG, FieldError, FieldModel, catalog, field_from_spec
from ..integrators import MethodKind, SolverParams, StartPolicy

MAX_STEPS = 10**10
MAX_STORED_SAMPLES = 10**6


class ConfigError(ValueError):
    """Invalid run description; the message names the offending field."""


def _vec3(name: str, value) -> tuple[float, float, float]:
    try:
        arr = np.asarray(value, dtype=float).reshape(3)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a 3-vector, got {value!r}") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: components must be finite")
    return tuple(float(a) for a in arr)


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{name}: must be positive and finite, got {value!r}")
    return v


def _enum(name: str, cls, value):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"{name}: {value!r} is not one of {choices}") from None


def _check_keys(cls, data: dict, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


@dataclass(frozen=True)
class ScenarioConfig:
    field: str | dict
    eps: float
    h: float
    t_end: float
    method: MethodKind = MethodKind.BORIS
    start_policy: StartPolicy = StartPolicy.RAW
    x0: tuple | None = None
    v0: tuple | None = None
    sample_every: int | None = None
    seed: int = 0
    output: str | None = None
    fp_tol: float = 1e-12
    fp_max_iter: int = 50
    resonance_floor: float = 0.05
    resonance_N: int = 2
    blowup_radius: float = 1e3

    def __post_init__(self):
        set_ = object.__setattr__
        if isinstance(self.field, str):
            if self.field not in CATALOG:
                raise ConfigError(f"field: unknown catalog name {self.field!r}; "
                                  f"choose from {sorted(CATALOG)}")
        elif not isinstance(self.field, dict):
            raise ConfigError("field: expected a catalog name or an inline field object")
        for name in ("eps", "h", "t_end", "fp_tol", "resonance_floor", "blowup_radius"):
            set_(self, name, _positive(name, getattr(self, name)))
        set_(self, "method", _enum("method", MethodKind, self.method))
        set_(self, "start_policy", _enum("start_policy", StartPolicy, self.start_policy))
        for name in ("x0", "v0"):
            val = getattr(self, name)
            if val is None:
                if not isinstance(self.field, str):
                    raise ConfigError(f"{name}: required for an inline field")
                val = CATALOG[self.field][1 if name == "x0" else 2]
            set_(self, name, _vec3(name, val))
        for name, lo in (("fp_max_iter", 1), ("resonance_N", 1)):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < lo:
                raise ConfigError(f"{name}: must be an integer >= {lo}, got {val!r}")
        if self.sample_every is not None and (
                not isinstance(self.sample_every, int) or self.sample_every < 1):
            raise ConfigError(f"sample_every: must be a positive integer, got {self.sample_every!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed: must be an integer, got {self.seed!r}")
        if self.t_end / self.h > MAX_STEPS:
            raise ConfigError(f"t_end: t_end/h = {self.t_end / self.h:.3e} exceeds the "
                              f"{MAX_STEPS:.0e}-step cost guard")

    @classmethod
    def from_dict(cls, data: dict, where: str = "scenario") -> "ScenarioConfig":
        _check_keys(cls, data, where)
        missing = [n for n in ("field", "eps", "h", "t_end") if n not in data]
        if missing:
            raise ConfigError(f"{where}: missing required keys {missing}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["method"] = self.method.value
        d["start_policy"] = self.start_policy.value
        d["x0"], d["v0"] = list(self.x0), list(self.v0)
        return d

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.h - 1e-9))

    def resolved_sample_every(self, max_samples: int = MAX_STORED_SAMPLES) -> int:
        if self.sample_every is not None:
            return self.sample_every
        return max(1, math.ceil(self.n_steps / max_samples))

    def model(self) -> FieldModel:
        try:
            if isinstance(self.field, str):
                return catalog(self.field, self.eps)
            return field_from_spec(self.field, self.eps)
        except FieldError as exc:
            raise ConfigError(f"field: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field: malformed inline field ({exc})") from None

    def params(self) -> SolverParams:
        return SolverParams(self.fp_tol, self.fp_max_iter, self.resonance_floor,
                            self.resonance_N, self.blowup_radius)


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig
    eps_list: tuple
    h_list: tuple
    t_eval: float
    methods: tuple = (MethodKind.BORIS, MethodKind.FILTERED)
    policies: tuple = (StartPolicy.RAW, StartPolicy.MODIFIED)
    h_ref: float | None = None
    workers: int | None = None
    output: str | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        for name in ("eps_list", "h_list", "methods", "policies"):
            val = getattr(self, name)
            if isinstance(val, (str, bytes)) or not hasattr(val, "__iter__") or len(val) == 0:
                raise ConfigError(f"{name}: must be a non-empty list")
        set_(self, "eps_list", tuple(_positive("eps_list", e) for e in self.eps_list))
        set_(self, "h_list", tuple(_positive("h_list", h) for h in self.h_list))
        set_(self, "methods", tuple(_enum("methods", MethodKind, m) for m in self.methods))
        set_(self, "policies", tuple(_enum("policies", StartPolicy, p) for p in self.policies))
        set_(self, "t_eval", _positive("t_eval", self.t_eval))
        if self.h_ref is not None:
            set_(self, "h_ref", _positive("h_ref", self.h_ref))
        if self.workers is not None and (not isinstance(self.workers, int) or self.workers < 1):
            raise ConfigError(f"workers: must be a positive integer, got {self.workers!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        _check_keys(cls, data, "sweep")
        for key in ("base", "eps_list", "h_list", "t_eval"):
            if key not in data:
                raise ConfigError(f"sweep: missing required key {key!r}")
        base = dict(data["base"]) if isinstance(data["base"], dict) else data["base"]
        if not isinstance(base, dict):
            raise ConfigError("base: expected an object")
        # per-cell values are filled in by the sweep; only the field is mandatory
        base.setdefault("eps", 1.0)
        base.setdefault("h", 1.0)
        base.setdefault("t_end", data["t_eval"])
        rest = {k: v for k, v in data.items() if k != "base"}
        return cls(base=ScenarioConfig.from_dict(base, "base"), **rest)

    @property
    def n_workers(self) -> int:
        return self.workers or max(1, min(len(self.eps_list), os.cpu_count() or 1))


def load_json(path: str | os.PathLike) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_scenario(source: str | os.PathLike | dict) -> ScenarioConfig:
    data = source if isinstance(source, dict) else load_json(source)
    return ScenarioConfig.from_dict(data)


def load_sweep(source: str | os.PathLike | dict) -> SweepConfig:
    data = source if isinstance(source, dict) else load_json(source)
    if not isinstance(data, dict):
        raise ConfigError("sweep: expected an object")
    return SweepConfig.from_dict(data)
