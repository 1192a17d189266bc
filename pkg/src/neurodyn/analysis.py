"""Spike trains, periods, f-I sweeps, synchronization and acceleration."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInput, ModelSystem, StimulusProtocol, ValidationError
from .coupled import build_pair
from .integrate import Divergence, IntegratorConfig, Trajectory, integrate

DEFAULT_THRESHOLDS = {
    "hh": 0.0,
    "ml": 0.0,
    "coupled_ml": 0.0,
    "izhikevich": 29.9,
    "fhn": 1.0,
    "fhn_cell": 1.0,
    "coupled_fhn": 1.0,
    "hr": 1.0,
    "hr_network": 1.0,
}

MAX_CV = 0.05
LOCK_JITTER = 1.0


class AllNotPeriodic(ValidationError):
    pass


@dataclass(frozen=True)
class SpikeDetectorConfig:
    threshold: float = 0.0
    refractory: float = 0.0
    direction: str = "rising"

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise InvalidInput("threshold must be finite")
        if not (math.isfinite(self.refractory) and self.refractory >= 0):
            raise InvalidInput("refractory must be >= 0")
        if self.direction != "rising":
            raise InvalidInput("only rising crossings are supported")

    @classmethod
    def for_model(cls, model: ModelSystem | str, refractory: float = 0.0) -> SpikeDetectorConfig:
        name = model if isinstance(model, str) else model.name
        if name.startswith("pair["):
            name = name[5:].split(",", 1)[0]
        return cls(DEFAULT_THRESHOLDS.get(name, 0.0), refractory)

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "refractory": self.refractory, "direction": self.direction}


@dataclass(frozen=True)
class SpikeTrain:
    times: np.ndarray
    channel: str
    detector: SpikeDetectorConfig

    def __post_init__(self):
        arr = np.asarray(self.times, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "times", arr)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)


def detect_spikes(tr: Trajectory, channel: str | int, cfg: SpikeDetectorConfig) -> SpikeTrain:
    """Rising threshold crossings, linearly interpolated between samples."""
    idx = tr.index(channel)
    x = tr.samples[:, idx]
    thr = cfg.threshold
    below = x[:-1] < thr
    above = x[1:] >= thr
    hits = np.flatnonzero(below & above)
    times = []
    last = -math.inf
    for i in hits:
        x0, x1 = x[i], x[i + 1]
        frac = (thr - x0) / (x1 - x0)
        t = tr.t0 + (i + frac) * tr.dt_effective
        if times and t - last < cfg.refractory:
            continue
        times.append(t)
        last = t
    return SpikeTrain(np.array(times), tr.labels[idx], cfg)


@dataclass(frozen=True)
class NotPeriodic:
    reason: str

    def __bool__(self):
        return False


def estimate_period(st: SpikeTrain | Sequence[float], discard_transient: int = 0) -> float | NotPeriodic:
    """Mean ISI after dropping the first ``discard_transient`` spikes.

    Needs at least 3 remaining intervals with coefficient of variation
    at most 0.05; bursting trains come back :class:`NotPeriodic`.
    """
    times = np.asarray(st.times if isinstance(st, SpikeTrain) else st, dtype=float)
    times = times[discard_transient:]
    isi = np.diff(times)
    if len(isi) < 3:
        return NotPeriodic(f"only {len(isi)} intervals after transient")
    mean = float(np.mean(isi))
    cv = float(np.std(isi)) / mean
    if cv > MAX_CV:
        return NotPeriodic(f"interval CV {cv:.3g} exceeds {MAX_CV}")
    return mean


def _ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class _PulseRun:
    model: ModelSystem
    s0: tuple
    cfg: IntegratorConfig
    onset: float
    window: float
    channel: int
    detector: SpikeDetectorConfig

    def __call__(self, amplitude: float):
        stim = StimulusProtocol.pulse(amplitude, self.onset, self.window)
        tr = integrate(self.model, self.s0, stim, self.cfg)
        return detect_spikes(tr, self.channel, self.detector).times


@dataclass(frozen=True)
class FIPoint:
    amplitude: float
    count: int
    rate: float


def _check_increasing(amplitudes: Sequence[float]) -> list[float]:
    amps = [float(a) for a in amplitudes]
    if len(amps) < 2:
        raise InvalidInput("need at least 2 amplitudes")
    if any(b <= a for a, b in zip(amps, amps[1:])):
        raise InvalidInput("amplitudes must be strictly increasing")
    return amps


def fi_sweep(
    m: ModelSystem,
    amplitudes: Sequence[float],
    window: float,
    detector: SpikeDetectorConfig,
    *,
    s0: Sequence[float],
    dt: float = 0.01,
    method: str = "rk4",
    onset: float = 0.0,
    workers: int = 1,
) -> list[FIPoint]:
    """Spike count and rate (per second) for one pulse of each amplitude.

    Each pulse lasts ``window`` ms from ``onset``; spikes are counted inside
    the pulse. Rates assume ms time; for dimensionless models read them as
    spikes per 1000 time units.
    """
    amps = _check_increasing(amplitudes)
    cfg = IntegratorConfig(method, dt, onset + window)
    run = _PulseRun(m, tuple(s0), cfg, onset, window, m.voltage_indices[0], detector)
    try:
        results = _ordered_map(run, amps, workers)
    except Divergence as exc:
        # find the offending amplitude deterministically
        for a in amps:
            try:
                run(a)
            except Divergence as inner:
                raise SweepDivergence(a, inner.t) from exc
        raise
    out = []
    for a, times in zip(amps, results):
        n = int(np.count_nonzero((times >= onset) & (times < onset + window)))
        out.append(FIPoint(a, n, n / window * 1000.0))
    return out


class SweepDivergence(Divergence):
    def __init__(self, amplitude: float, t: float):
        super().__init__(t)
        self.amplitude = amplitude
        self.args = (f"integration diverged at t={t:.9g} ms for amplitude {amplitude!r}",)


@dataclass(frozen=True)
class SyncReport:
    rms: float
    offset_mean: float | None
    jitter: float | None
    locked: bool
    pairs: int
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "rms": self.rms,
            "offset_mean": self.offset_mean,
            "jitter": self.jitter,
            "locked": self.locked,
            "pairs": self.pairs,
            "status": self.status,
        }


def match_spikes(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    """Monotone mutual-nearest pairing of two sorted spike-time arrays."""
    pairs = []
    if len(a) == 0 or len(b) == 0:
        return pairs

    def nearest(arr, t):
        j = int(np.searchsorted(arr, t))
        if j == 0:
            return 0
        if j == len(arr):
            return len(arr) - 1
        return j if arr[j] - t < t - arr[j - 1] else j - 1

    last_j = -1
    for i, t in enumerate(a):
        j = nearest(b, t)
        if j <= last_j:
            continue
        if nearest(a, b[j]) != i:
            continue
        pairs.append((i, j))
        last_j = j
    return pairs


def sync_report(
    tr: Trajectory,
    ch_a: str | int,
    ch_b: str | int,
    window: tuple[float, float] | None,
    detector: SpikeDetectorConfig,
    lock_tolerance: float = LOCK_JITTER,
) -> SyncReport:
    """RMS voltage difference and spike-offset statistics inside ``window``.

    Offsets are ``t_b - t_a`` over mutually-nearest spike pairs; jitter is
    their population standard deviation. Fewer than 3 spikes in either train
    gives ``status="insufficient_spikes"``, ``locked=False`` and no jitter.
    """
    ia, ib = tr.index(ch_a), tr.index(ch_b)
    times = tr.times
    lo, hi = window if window is not None else (tr.t0, tr.t_final)
    if lo < tr.t0 - 1e-9 or hi > tr.t_final + 1e-9 or hi <= lo:
        raise InvalidInput(f"window {lo, hi} outside trajectory span")
    mask = (times >= lo) & (times <= hi)
    diff = tr.samples[mask, ia] - tr.samples[mask, ib]
    rms = float(np.sqrt(np.mean(diff * diff)))

    def in_window(st):
        t = st.times
        return t[(t >= lo) & (t <= hi)]

    sa = in_window(detect_spikes(tr, ia, detector))
    sb = in_window(detect_spikes(tr, ib, detector))
    if len(sa) < 3 or len(sb) < 3:
        return SyncReport(rms, None, None, False, 0, "insufficient_spikes")
    pairs = match_spikes(sa, sb)
    if len(pairs) < 3:
        return SyncReport(rms, None, None, False, len(pairs), "insufficient_spikes")
    offsets = np.array([sb[j] - sa[i] for i, j in pairs])
    mean = float(np.mean(offsets))
    jitter = float(np.std(offsets))
    # a missing partner for most spikes means no 1:1 lock even if matched ones agree
    coverage = len(pairs) / max(len(sa), len(sb))
    locked = jitter < lock_tolerance and coverage >= 0.9
    return SyncReport(rms, mean, jitter, locked, len(pairs))


@dataclass(frozen=True)
class AccelerationResult:
    ratio: float
    accelerated: bool

    @property
    def verdict(self) -> str:
        return "accelerated" if self.accelerated else "not accelerated"


def acceleration_ratio(isolated_periods: Sequence[float], coupled_period: float) -> AccelerationResult:
    periods = [float(p) for p in isolated_periods]
    if not periods:
        raise InvalidInput("need at least one isolated period")
    if any(not (p > 0 and math.isfinite(p)) for p in periods + [coupled_period]):
        raise InvalidInput("periods must be positive and finite")
    shortest = min(periods)
    return AccelerationResult(coupled_period / shortest, coupled_period < shortest)


@dataclass(frozen=True)
class FrequencyReport:
    span: float
    amplitudes: tuple[float, ...]
    rates: tuple[float | None, ...]
    excluded: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "span": self.span,
            "amplitudes": list(self.amplitudes),
            "rates": list(self.rates),
            "excluded": list(self.excluded),
        }


@dataclass(frozen=True)
class _StepPeriod:
    model: ModelSystem
    s0: tuple
    cfg: IntegratorConfig
    channel: int
    detector: SpikeDetectorConfig
    discard: int

    def __call__(self, amplitude: float):
        tr = integrate(self.model, self.s0, StimulusProtocol.step(amplitude), self.cfg)
        return estimate_period(detect_spikes(tr, self.channel, self.detector), self.discard)


def frequency_sensitivity(
    m: ModelSystem,
    amplitudes: Sequence[float],
    window: float,
    detector: SpikeDetectorConfig,
    *,
    s0: Sequence[float],
    dt: float = 0.01,
    method: str = "rk4",
    discard_transient: int = 2,
    workers: int = 1,
) -> FrequencyReport:
    """Relative spread ``(max - min) / mean`` of firing rate over ``amplitudes``.

    Amplitudes whose response is not periodic are excluded and listed.
    """
    amps = [float(a) for a in amplitudes]
    if not amps:
        raise InvalidInput("need at least one amplitude")
    run = _StepPeriod(m, tuple(s0), IntegratorConfig(method, dt, window), m.voltage_indices[0], detector, discard_transient)
    periods = _ordered_map(run, amps, workers)
    rates = tuple(1000.0 / p if isinstance(p, float) else None for p in periods)
    good = [r for r in rates if r is not None]
    if not good:
        raise AllNotPeriodic("no amplitude produced periodic firing")
    excluded = tuple(a for a, r in zip(amps, rates) if r is None)
    span = (max(good) - min(good)) / (sum(good) / len(good))
    return FrequencyReport(span, tuple(amps), rates, excluded)


# ---------------------------------------------------------------------------
# Acceleration experiment: isolated cells vs a diffusive pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccelerationRow:
    gain: float
    period: float | None
    ratio: float | None
    verdict: str

    def to_dict(self) -> dict:
        return {"gain": self.gain, "period": self.period, "ratio": self.ratio, "verdict": self.verdict}


@dataclass(frozen=True)
class AccelerationExperiment:
    isolated_periods: tuple[float, float]
    rows: tuple[AccelerationRow, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "isolated_periods": list(self.isolated_periods),
            "rows": [r.to_dict() for r in self.rows],
        }


def pair_period(
    tr: Trajectory,
    channels: tuple[int, int],
    detector: SpikeDetectorConfig,
    discard_transient: int,
    agree: float = 0.01,
) -> float | NotPeriodic:
    """Common period of both cells, or NotPeriodic if they do not fire 1:1."""
    pa = estimate_period(detect_spikes(tr, channels[0], detector), discard_transient)
    pb = estimate_period(detect_spikes(tr, channels[1], detector), discard_transient)
    if not isinstance(pa, float):
        return pa
    if not isinstance(pb, float):
        return pb
    if abs(pa - pb) > agree * min(pa, pb):
        return NotPeriodic(f"cells fire at different periods {pa:.6g} and {pb:.6g}")
    return 0.5 * (pa + pb)


@dataclass(frozen=True)
class _IsolatedPeriod:
    stim: StimulusProtocol
    cfg: IntegratorConfig
    detector: SpikeDetectorConfig
    discard: int

    def __call__(self, job):
        model, s0 = job
        tr = integrate(model, s0, self.stim, self.cfg)
        return estimate_period(detect_spikes(tr, model.voltage_indices[0], self.detector), self.discard)


@dataclass(frozen=True)
class _CoupledPeriod:
    model_a: ModelSystem
    model_b: ModelSystem
    s0: tuple
    stim: StimulusProtocol
    cfg: IntegratorConfig
    detector: SpikeDetectorConfig
    discard: int

    def __call__(self, gain: float):
        pair = build_pair(self.model_a, gain, "diffusive", partner=self.model_b)
        tr = integrate(pair, self.s0, self.stim, self.cfg)
        return pair_period(tr, pair.voltage_indices, self.detector, self.discard)


def acceleration_experiment(
    model_a: ModelSystem,
    model_b: ModelSystem,
    gains: Sequence[float],
    *,
    s0_a: Sequence[float],
    s0_b: Sequence[float],
    stim: StimulusProtocol,
    cfg: IntegratorConfig,
    detector: SpikeDetectorConfig,
    discard_transient: int = 5,
    workers: int = 1,
) -> AccelerationExperiment:
    """Compare each cell's isolated period with the diffusive pair's period per gain."""
    iso = _ordered_map(
        _IsolatedPeriod(stim, cfg, detector, discard_transient),
        [(model_a, tuple(s0_a)), (model_b, tuple(s0_b))],
        workers,
    )
    for p in iso:
        if not isinstance(p, float):
            raise InvalidInput(f"isolated cell is not periodic: {p.reason}")
    runner = _CoupledPeriod(model_a, model_b, tuple(s0_a) + tuple(s0_b), stim, cfg, detector, discard_transient)
    gains = [float(g) for g in gains]
    periods = _ordered_map(runner, gains, workers)
    rows = []
    for g, p in zip(gains, periods):
        if isinstance(p, float):
            res = acceleration_ratio(iso, p)
            rows.append(AccelerationRow(g, p, res.ratio, res.verdict))
        else:
            rows.append(AccelerationRow(g, None, None, "not periodic"))
    return AccelerationExperiment((iso[0], iso[1]), tuple(rows))
