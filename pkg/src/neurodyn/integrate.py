"""Fixed-step Euler / RK4 integration with post-step reset and clamping."""

from __future__ import annotations

import io
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import (
    InvalidInput,
    ModelSystem,
    NeurodynError,
    StateVector,
    StimulusProtocol,
    ValidationError,
    evaluate_stimulus,
    validate_state,
)

DIVERGENCE_BOUND = 1e9
METHODS = ("euler", "rk4")


class InvalidConfig(ValidationError):
    pass


class UnknownChannel(NeurodynError, KeyError):
    def __str__(self):
        return f"unknown channel {self.args[0]!r}"


class Divergence(NeurodynError):
    """State left the finite / bounded region; carries the truncated trajectory."""

    def __init__(self, t: float, trajectory: Trajectory | None = None):
        super().__init__(f"integration diverged at t={t:.9g} ms")
        self.t = t
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 0.01
    t_end: float = 100.0
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidConfig(f"method must be one of {METHODS}, got {self.method!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidConfig("dt must be > 0")
        if not (math.isfinite(self.t_end) and self.t_end >= self.dt):
            raise InvalidConfig("t_end must be >= dt")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise InvalidConfig("record_stride must be a positive integer")

    @property
    def dt_effective(self) -> float:
        return self.dt * self.record_stride

    @property
    def n_records(self) -> int:
        """Samples after t0; the run stops on the last record at or before t_end."""
        return _floor(self.t_end / self.dt_effective)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dt": self.dt,
            "t_end": self.t_end,
            "record_stride": self.record_stride,
        }


def _floor(x: float) -> int:
    # tolerate t_end/dt landing a hair below an integer
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True)
class Trajectory:
    t0: float
    dt_effective: float
    samples: np.ndarray
    labels: tuple[str, ...]
    events: tuple[float, ...] = ()
    model: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(self.labels):
            raise ValueError("samples must be (n, len(labels))")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt_effective

    @property
    def t_final(self) -> float:
        return self.t0 + (len(self) - 1) * self.dt_effective

    def index(self, channel: str | int) -> int:
        if isinstance(channel, int):
            if 0 <= channel < len(self.labels):
                return channel
            raise UnknownChannel(channel)
        try:
            return self.labels.index(channel)
        except ValueError:
            raise UnknownChannel(channel) from None

    def channel(self, channel: str | int) -> np.ndarray:
        return self.samples[:, self.index(channel)]

    def final_state(self) -> StateVector:
        return StateVector(self.samples[-1])

    def shifted(self, delta: float) -> Trajectory:
        return Trajectory(
            self.t0 + delta,
            self.dt_effective,
            self.samples,
            self.labels,
            tuple(e + delta for e in self.events),
            self.model,
        )

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        """Serialize as ``time,<labels...>`` with ``%.9g`` numbers.

        Returns the text; also writes it when ``path`` is given.
        """
        buf = io.StringIO()
        data = np.column_stack([self.times, self.samples])
        np.savetxt(buf, data, fmt="%.9g", delimiter=",", header=",".join(("time",) + self.labels), comments="")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _check_bounded(y: Sequence[float]) -> bool:
    s = sum(map(abs, y))
    if s < DIVERGENCE_BOUND:
        return True
    return all(abs(v) <= DIVERGENCE_BOUND for v in y)


def integrate(
    m: ModelSystem,
    s0: Sequence[float] | StateVector,
    stim: StimulusProtocol,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Integrate ``m`` from ``s0`` at t=0 on a fixed grid.

    After every step the clamp bounds are enforced, then the state is
    recorded if the step index is a multiple of ``record_stride``, then the
    reset map fires if its guard holds. Recorded samples are therefore the
    pre-reset peaks; the next step starts from the reset state. Stimulus is
    sampled at the step start (Euler) or at the RK4 stage times.
    """
    y0 = validate_state(s0, m).values
    if not isinstance(cfg, IntegratorConfig):
        raise InvalidConfig("cfg must be an IntegratorConfig")

    rhs = m.rhs
    dt = cfg.dt
    half = dt / 2.0
    sixth = dt / 6.0
    stride = cfg.record_stride
    n_steps = cfg.n_records * stride
    clamp = m.clamp
    guard = m.reset.guard if m.reset is not None else None
    apply_reset = m.reset.apply if m.reset is not None else None
    euler = cfg.method == "euler"
    stim_at = evaluate_stimulus

    records = [y0]
    events: list[float] = []
    y = list(y0)

    def partial_trajectory():
        return Trajectory(0.0, cfg.dt_effective, np.array(records), m.labels, tuple(events), m.name)

    for k in range(n_steps):
        t = k * dt
        if euler:
            f = rhs(t, y, stim_at(stim, t))
            y = [a + dt * b for a, b in zip(y, f)]
        else:
            i_mid = stim_at(stim, t + half)
            k1 = rhs(t, y, stim_at(stim, t))
            k2 = rhs(t + half, [a + half * b for a, b in zip(y, k1)], i_mid)
            k3 = rhs(t + half, [a + half * b for a, b in zip(y, k2)], i_mid)
            k4 = rhs(t + dt, [a + dt * b for a, b in zip(y, k3)], stim_at(stim, t + dt))
            y = [
                a + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
            ]
        for i, lo, hi in clamp:
            if y[i] < lo:
                y[i] = lo
            elif y[i] > hi:
                y[i] = hi
        if not _check_bounded(y):
            raise Divergence((k + 1) * dt, partial_trajectory())
        if (k + 1) % stride == 0:
            records.append(tuple(y))
        if guard is not None and guard(y):
            events.append((k + 1) * dt)
            y = list(apply_reset(y))

    return Trajectory(0.0, cfg.dt_effective, np.array(records), m.labels, tuple(events), m.name)


@dataclass(frozen=True)
class ConvergenceResult:
    order: float | None
    dts: tuple[float, ...]
    errors: tuple[float, ...]
    status: str = "ok"

    @property
    def degenerate(self) -> bool:
        return self.status == "degenerate-zero-error"


def convergence_order(
    m: ModelSystem,
    s0: Sequence[float] | StateVector,
    stim: StimulusProtocol,
    dts: Sequence[float],
    t_end: float,
    method: str = "rk4",
) -> ConvergenceResult:
    """Empirical order from the log-log slope of final-state error vs dt.

    The reference is the same method at ``min(dts) / 10``; error is the
    max-norm difference of the final states.
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise InvalidInput("need at least 3 step sizes")
    for big, small in zip(dts, dts[1:]):
        if not math.isclose(big, 2.0 * small, rel_tol=1e-12):
            raise InvalidInput("each dt must halve the previous one")

    def final(dt):
        tr = integrate(m, s0, stim, IntegratorConfig(method, dt, t_end))
        return tr.samples[-1]

    ref = final(dts[-1] / 10.0)
    errors = tuple(float(np.max(np.abs(final(dt) - ref))) for dt in dts)
    if any(e == 0.0 for e in errors):
        return ConvergenceResult(None, tuple(dts), errors, "degenerate-zero-error")
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    return ConvergenceResult(float(slope), tuple(dts), errors)
