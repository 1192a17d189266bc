"""Independent computations behind every pinned fixture.

Root searches use scipy; everything else is a plain simulation with the
settings fixed below. ``verify --regen`` calls these and stores the results;
``verify`` and the test-suite call them again and compare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root

from .analysis import (
    AccelerationExperiment,
    SpikeDetectorConfig,
    SyncReport,
    acceleration_experiment,
    detect_spikes,
    fi_sweep,
    frequency_sensitivity,
    sync_report,
)
from .core import StimulusProtocol
from .coupled import CoupledFHNParams, build_pair, coupled_fhn_model
from .integrate import IntegratorConfig, integrate
from .models import FHNCellParams, FHNParams, fhn_cell_model, hr_model
from .presets import get_preset

# simulation settings behind the fixtures
IZH_AMPLITUDES = (0.0, 5.0, 10.0, 15.0)
IZH_SPAN_AMPLITUDES = (8.0, 10.0, 12.0)
FHN_SPAN_AMPLITUDES = (0.5, 0.75, 1.0, 1.25)
HH_SPAN_AMPLITUDES = (10.0, 15.0, 20.0, 30.0)
DRIVE_GRID = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
HR_GAIN_GRID = (0.1, 0.2, 0.3, 0.5, 0.75, 1.0)
ACCEL_EPS2_GRID = (0.082, 0.09, 0.1, 0.12, 0.15)
ACCEL_GAIN_GRID = (0.002, 0.01, 0.03, 0.1, 0.3, 1.0)
EQUILIBRIUM_PRESETS = ("hh_squid", "fhn_default", "ml_hopf")

SYNC_TRANSIENT = 500.0
HR_RMS_LIMIT = 1e-6

FHN_PAIR_S0 = (0.5, 0.0, -1.0, 0.3)
HR_PAIR_S0 = (-1.0, 0.0, 0.0, 1.0, -2.0, 0.3)


def equilibrium(preset: str, I: float = 0.0) -> tuple[float, ...]:
    """Rest state of a preset by Powell hybrid root search from its s0."""
    p = get_preset(preset)
    m = p.model()
    sol = root(lambda y: m.rhs(0.0, list(y), I), p.s0, method="hybr", tol=1e-14)
    return tuple(float(v) for v in sol.x)


def fhn_nullcline_point(p: FHNParams | None = None) -> tuple[float, float]:
    """Intersection of u = v - v^3/3 with v - b u + a = 0 (I = 0)."""
    p = p or FHNParams()
    f = lambda v: v - p.b * (v - v**3 / 3.0) + p.a
    v = brentq(f, -3.0, 3.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return v, v - v**3 / 3.0


def hr_peak(t_end: float = 2000.0, dt: float = 0.01) -> float:
    p = get_preset("hr_bursting")
    tr = integrate(hr_model(), p.s0, StimulusProtocol.constant(2.0), IntegratorConfig("rk4", dt, t_end))
    return float(np.max(np.abs(tr.channel("v"))))


@dataclass(frozen=True)
class IzhStepRun:
    events: int
    max_v: float
    bound: float


def izh_step_run(amplitude: float = 10.0, dt: float = 0.01, t_end: float = 1000.0) -> IzhStepRun:
    """Step-driven regular-spiking run; ``bound`` is threshold plus one step of the largest v'."""
    p = get_preset("izh_rs")
    m = p.model()
    tr = integrate(m, p.s0, StimulusProtocol.step(amplitude), IntegratorConfig("rk4", dt, t_end))
    v = tr.channel("v")
    vdot = max(m.rhs(0.0, s, amplitude)[0] for s in tr.samples[:-1])
    return IzhStepRun(len(tr.events), float(v.max()), p.params["threshold"] + abs(vdot) * dt)


def izh_fi_counts() -> list[int]:
    p = get_preset("izh_rs")
    det = SpikeDetectorConfig.for_model("izhikevich")
    return [pt.count for pt in fi_sweep(p.model(), IZH_AMPLITUDES, 1000.0, det, s0=p.s0, dt=0.01)]


def span(preset: str, amplitudes, window: float, dt: float) -> float:
    p = get_preset(preset)
    m = p.model()
    return frequency_sensitivity(m, amplitudes, window, SpikeDetectorConfig.for_model(m), s0=p.s0, dt=dt).span


def izh_span() -> float:
    return span("izh_rs", IZH_SPAN_AMPLITUDES, 1000.0, 0.01)


def fhn_span() -> float:
    return span("fhn_default", FHN_SPAN_AMPLITUDES, 300.0, 0.02)


def hh_span() -> float:
    return span("hh_squid", HH_SPAN_AMPLITUDES, 300.0, 0.01)


def hh_pulse_count(amplitude: float, window: float = 100.0) -> int:
    p = get_preset("hh_squid")
    m = p.model()
    tr = integrate(m, p.s0, StimulusProtocol.pulse(amplitude, 0.0, window), IntegratorConfig("rk4", 0.01, window))
    return len(detect_spikes(tr, "V", SpikeDetectorConfig(0.0)))


def hh_rheobase(lo: float = 0.0, hi: float = 20.0, tol: float = 0.01) -> float:
    """Smallest 100 ms pulse amplitude that fires at least once, by bisection."""
    if hh_pulse_count(hi) < 1 or hh_pulse_count(lo) > 0:
        raise ValueError("rheobase not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hh_pulse_count(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def driven_fhn_report(D: float, t_end: float = 2000.0) -> SyncReport:
    m = coupled_fhn_model(CoupledFHNParams(0.08, 0.0, 0.1, 0.0, D))
    tr = integrate(m, FHN_PAIR_S0, StimulusProtocol.constant(0.0), IntegratorConfig("rk4", 0.05, t_end))
    return sync_report(tr, "V1", "V2", (SYNC_TRANSIENT, t_end), SpikeDetectorConfig(1.0))


def driven_fhn_search(grid=DRIVE_GRID) -> float | None:
    """Smallest drive gain on the grid at which the pair locks."""
    for D in grid:
        if driven_fhn_report(D).locked:
            return D
    return None


def fhn_pair_report(k: float = 0.3, t_end: float = 2000.0) -> SyncReport:
    a = fhn_cell_model(FHNCellParams(0.08))
    b = fhn_cell_model(FHNCellParams(0.1))
    tr = integrate(build_pair(a, k, partner=b), FHN_PAIR_S0, StimulusProtocol.constant(0.0),
                   IntegratorConfig("rk4", 0.05, t_end))
    return sync_report(tr, "V_1", "V_2", (SYNC_TRANSIENT, t_end), SpikeDetectorConfig(1.0))


def hr_pair_rms(gain: float, t_end: float = 2000.0, transient: float = 1000.0) -> float:
    pair = build_pair(hr_model(), gain)
    tr = integrate(pair, HR_PAIR_S0, StimulusProtocol.constant(2.0), IntegratorConfig("rk4", 0.05, t_end))
    return sync_report(tr, "v_1", "v_2", (transient, t_end), SpikeDetectorConfig(1.0)).rms


def hr_pair_search(grid=HR_GAIN_GRID) -> float | None:
    for g in grid:
        if hr_pair_rms(g) < HR_RMS_LIMIT:
            return g
    return None


ACCEL_CFG = IntegratorConfig("rk4", 0.05, 1500.0)


def acceleration_point(eps2: float, gains, eps1: float = 0.08) -> AccelerationExperiment:
    return acceleration_experiment(
        fhn_cell_model(FHNCellParams(eps1)),
        fhn_cell_model(FHNCellParams(eps2)),
        gains,
        s0_a=(0.5, 0.0),
        s0_b=(-1.0, 0.3),
        stim=StimulusProtocol.constant(0.0),
        cfg=ACCEL_CFG,
        detector=SpikeDetectorConfig(1.0),
    )


def acceleration_search(eps2_grid=ACCEL_EPS2_GRID, gains=ACCEL_GAIN_GRID) -> dict:
    """Brute-force (gain, eps mismatch) sweep; returns the point with the lowest ratio."""
    best = None
    for eps2 in eps2_grid:
        exp = acceleration_point(eps2, gains)
        for row in exp.rows:
            if row.ratio is not None and (best is None or row.ratio < best["ratio"]):
                best = {
                    "eps1": 0.08,
                    "eps2": eps2,
                    "gain": row.gain,
                    "ratio": row.ratio,
                    "period": row.period,
                    "isolated": list(exp.isolated_periods),
                }
    return best


REGRESSION_T = {"hh_squid": 50.0, "izh_rs": 200.0, "fhn_default": 50.0, "fhn_cell": 100.0,
                "hr_bursting": 200.0, "ml_hopf": 200.0}


def preset_regression(name: str) -> list[float]:
    """State of a preset at a fixed time under its default drive."""
    p = get_preset(name)
    tr = integrate(p.model(), p.s0, StimulusProtocol.constant(p.current),
                   IntegratorConfig("rk4", p.dt, REGRESSION_T[name]))
    return [float(v) for v in tr.samples[-1]]


def isclose_all(a, b, tol: float) -> bool:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol)) and all(map(math.isfinite, a))
