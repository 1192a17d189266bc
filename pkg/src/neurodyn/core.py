"""Shared value types: state vectors, stimulus protocols and the model contract.

Time is in milliseconds everywhere. Voltage and current units are model
native; each model in :mod:`neurodyn.models` documents its own scaling.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any

Derivative = Callable[[float, Sequence[float], float], tuple[float, ...]]


class NeurodynError(Exception):
    """Base class for all library errors."""


class ValidationError(NeurodynError, ValueError):
    pass


class DimensionMismatch(ValidationError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"state has {got} entries, model expects {expected}")
        self.expected = expected
        self.got = got


class NonFiniteValue(ValidationError):
    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite value {value!r} at index {index}")
        self.index = index
        self.value = value


class InvalidParameter(ValidationError):
    pass


class InvalidInput(ValidationError):
    pass


@dataclass(frozen=True)
class StateVector:
    """Immutable ordered state of one model instance."""

    values: tuple[float, ...]

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        for i, v in enumerate(vals):
            if not math.isfinite(v):
                raise NonFiniteValue(i, v)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


STIMULUS_KINDS = ("constant", "pulse", "step")


@dataclass(frozen=True)
class StimulusProtocol:
    """Piecewise-constant injected current.

    ``constant`` ignores onset and duration, ``step`` switches on at
    ``onset`` and stays on, ``pulse`` is on over ``[onset, onset+duration)``.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    onset: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        if self.kind not in STIMULUS_KINDS:
            raise InvalidParameter(f"unknown stimulus kind {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise InvalidParameter("stimulus amplitude must be finite")
        if not (self.onset >= 0 and math.isfinite(self.onset)):
            raise InvalidParameter("stimulus onset must be >= 0")
        if self.kind == "pulse" and not (self.duration is not None and self.duration > 0):
            raise InvalidParameter("pulse stimulus needs duration > 0")

    @classmethod
    def constant(cls, amplitude: float) -> StimulusProtocol:
        return cls("constant", amplitude)

    @classmethod
    def pulse(cls, amplitude: float, onset: float, duration: float) -> StimulusProtocol:
        return cls("pulse", amplitude, onset, duration)

    @classmethod
    def step(cls, amplitude: float, onset: float = 0.0) -> StimulusProtocol:
        return cls("step", amplitude, onset)

    def __call__(self, t: float) -> float:
        return evaluate_stimulus(self, t)

    def to_dict(self) -> dict[str, Any]:
        d = {"kind": self.kind, "amplitude": self.amplitude, "onset": self.onset}
        if self.duration is not None:
            d["duration"] = self.duration
        return d


def evaluate_stimulus(p: StimulusProtocol, t: float) -> float:
    if p.kind == "constant":
        return p.amplitude
    if t < p.onset:
        return 0.0
    if p.kind == "step":
        return p.amplitude
    return p.amplitude if t < p.onset + p.duration else 0.0


@dataclass(frozen=True)
class Reset:
    """Discrete state map applied when ``guard`` holds after a step.

    ``apply`` must return its input unchanged whenever ``guard`` is false.
    """

    guard: Callable[[Sequence[float]], bool]
    apply: Callable[[Sequence[float]], tuple[float, ...]]


@dataclass(frozen=True)
class ModelSystem:
    """A right-hand side plus everything needed to integrate and label it.

    ``rhs(t, y, I)`` is pure and returns a tuple of derivatives. ``clamp``
    lists ``(index, lo, hi)`` bounds enforced after every integration step
    (gating variables). ``voltage_indices`` names the membrane-potential
    channels, one per cell.
    """

    name: str
    dimension: int
    rhs: Derivative
    labels: tuple[str, ...]
    parameters: Mapping[str, Any] = field(default_factory=dict)
    reset: Reset | None = None
    clamp: tuple[tuple[int, float, float], ...] = ()
    voltage_indices: tuple[int, ...] = (0,)
    units: tuple[str, ...] = ()

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidParameter("dimension must be positive")
        if len(self.labels) != self.dimension:
            raise InvalidParameter("one label per state variable required")
        if not isinstance(self.parameters, MappingProxyType):
            object.__setattr__(self, "parameters", MappingProxyType(dict(self.parameters)))

    def __getstate__(self):
        state = dict(self.__dict__)
        state["parameters"] = dict(self.parameters)
        return state

    def __setstate__(self, state):
        state["parameters"] = MappingProxyType(state["parameters"])
        for k, v in state.items():
            object.__setattr__(self, k, v)

    @property
    def cells(self) -> int:
        return len(self.voltage_indices)

    def __call__(self, t: float, y: Sequence[float], current: float) -> tuple[float, ...]:
        return self.rhs(t, y, current)


def validate_state(s: Sequence[float] | StateVector, m: ModelSystem) -> StateVector:
    """Check ``s`` against ``m``; returns it as a :class:`StateVector`."""
    values = s.values if isinstance(s, StateVector) else tuple(s)
    if len(values) != m.dimension:
        raise DimensionMismatch(m.dimension, len(values))
    return s if isinstance(s, StateVector) else StateVector(values)
