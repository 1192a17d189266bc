"""Single-neuron models and the Maeda circuit constants.

State layouts (fixed, they are also the CSV column order):

==============  ===================  =====================================
family          state                units
==============  ===================  =====================================
hh              V, m, h, n           mV, gates dimensionless; I in uA/cm^2
izhikevich      v, u                 mV-like, I model native
fhn             v, u                 dimensionless
fhn_cell        V, W                 dimensionless (relaxation cell)
hr              v, u, w              dimensionless
ml              V, N                 mV; I in uA/cm^2
==============  ===================  =====================================

Every rhs below is a plain function ``f(state, params, current)`` returning a
tuple. ``*_model(params)`` wraps one into a picklable :class:`ModelSystem`.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from functools import partial

from .core import InvalidParameter, ModelSystem, Reset


def _require_finite(obj) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            raise InvalidParameter(f"{type(obj).__name__}.{f.name} must be finite")


def _coerce_floats(obj) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, int) and not isinstance(v, bool):
            object.__setattr__(obj, f.name, float(v))


# ---------------------------------------------------------------------------
# Hodgkin-Huxley
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HHParams:
    """Squid axon at 6.3 C, rest shifted to about -65 mV."""

    C_m: float = 1.0
    g_Na_max: float = 120.0
    g_K_max: float = 36.0
    g_L: float = 0.3
    V_Na: float = 50.0
    V_K: float = -77.0
    V_L: float = -54.387

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if not self.C_m > 0:
            raise InvalidParameter("C_m must be > 0")
        if min(self.g_Na_max, self.g_K_max, self.g_L) < 0:
            raise InvalidParameter("maximal conductances must be >= 0")


def hh_conductance(I_ch: float, V_m: float, V_rev: float) -> float:
    """Chord conductance of one channel, ``I / (V_m - V_rev)``."""
    if V_m == V_rev:
        raise ZeroDivisionError(f"V_m equals reversal potential {V_rev}")
    return I_ch / (V_m - V_rev)


def _vtrap(x: float, y: float) -> float:
    # x / (exp(x/y) - 1) with the removable singularity at x = 0
    if abs(x / y) < 1e-6:
        return y * (1.0 - x / y / 2.0)
    return x / (math.exp(x / y) - 1.0)


def hh_rates(V: float) -> tuple[float, float, float, float, float, float]:
    """Opening/closing rates (alpha_m, beta_m, alpha_h, beta_h, alpha_n, beta_n) in 1/ms."""
    a_m = 0.1 * _vtrap(-(V + 40.0), 10.0)
    b_m = 4.0 * math.exp(-(V + 65.0) / 18.0)
    a_h = 0.07 * math.exp(-(V + 65.0) / 20.0)
    b_h = 1.0 / (1.0 + math.exp(-(V + 35.0) / 10.0))
    a_n = 0.01 * _vtrap(-(V + 55.0), 10.0)
    b_n = 0.125 * math.exp(-(V + 65.0) / 80.0)
    return a_m, b_m, a_h, b_h, a_n, b_n


def hh_rhs(s: Sequence[float], p: HHParams, I: float = 0.0) -> tuple[float, float, float, float]:
    V, m, h, n = s
    a_m, b_m, a_h, b_h, a_n, b_n = hh_rates(V)
    i_na = p.g_Na_max * m * m * m * h * (V - p.V_Na)
    i_k = p.g_K_max * n * n * n * n * (V - p.V_K)
    i_l = p.g_L * (V - p.V_L)
    return (
        (I - i_na - i_k - i_l) / p.C_m,
        a_m * (1.0 - m) - b_m * m,
        a_h * (1.0 - h) - b_h * h,
        a_n * (1.0 - n) - b_n * n,
    )


def hh_steady_state(V: float) -> tuple[float, float, float]:
    a_m, b_m, a_h, b_h, a_n, b_n = hh_rates(V)
    return a_m / (a_m + b_m), a_h / (a_h + b_h), a_n / (a_n + b_n)


# ---------------------------------------------------------------------------
# Izhikevich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IzhikevichParams:
    a: float = 0.02
    b: float = 0.2
    c: float = -65.0
    d: float = 8.0
    threshold: float = 30.0

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if not self.a > 0:
            raise InvalidParameter("a must be > 0")


def izh_rhs(s: Sequence[float], p: IzhikevichParams, I: float = 0.0) -> tuple[float, float]:
    v, u = s
    return 0.04 * v * v + 5.0 * v + 140.0 - u + I, p.a * (p.b * v - u)


def izh_spiked(s: Sequence[float], p: IzhikevichParams) -> bool:
    return s[0] >= p.threshold


def izh_reset(s: Sequence[float], p: IzhikevichParams) -> tuple[float, float]:
    """``v >= threshold`` maps ``(v, u)`` to ``(c, u + d)``; otherwise identity."""
    v, u = s
    if v >= p.threshold:
        return p.c, u + p.d
    return v, u


# ---------------------------------------------------------------------------
# FitzHugh-Nagumo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FHNParams:
    a: float = 0.7
    b: float = 0.8
    c: float = 3.0

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if self.c == 0:
            raise InvalidParameter("c must be nonzero")


def fhn_rhs(s: Sequence[float], p: FHNParams, I: float = 0.0) -> tuple[float, float]:
    if p.c == 0:
        raise InvalidParameter("c must be nonzero")
    v, u = s
    return p.c * (v - u + I - v**3 / 3.0), (v - p.b * u + p.a) / p.c


RECOVERY_FUNCTIONS = ("linear",)


@dataclass(frozen=True)
class FHNCellParams:
    """One cell of the driven FitzHugh-Nagumo pair: fast V, slow W."""

    eps: float = 0.08
    eta: float = 0.0
    g: str = "linear"

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if not self.eps > 0:
            raise InvalidParameter("eps must be > 0")
        if self.g not in RECOVERY_FUNCTIONS:
            raise InvalidParameter(f"unknown recovery function {self.g!r}")


def fhn_cell_derivative(V: float, W: float, eps: float, eta: float, I: float) -> tuple[float, float]:
    # g(V) = V is the only registered recovery activation
    return V - V**3 / 3.0 - W + I, eps * (V - W - eta)


def fhn_cell_rhs(s: Sequence[float], p: FHNCellParams, I: float = 0.0) -> tuple[float, float]:
    V, W = s
    return fhn_cell_derivative(V, W, p.eps, p.eta, I)


# ---------------------------------------------------------------------------
# Hindmarsh-Rose
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HRParams:
    b: float = 3.0
    mu: float = 0.01
    s: float = 4.0
    v_rest: float = -1.6

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if not self.mu > 0:
            raise InvalidParameter("mu must be > 0")


def hr_rhs(s: Sequence[float], p: HRParams, I: float = 0.0) -> tuple[float, float, float]:
    v, u, w = s
    return (
        u - v**3 + p.b * v * v + I - w,
        1.0 - 5.0 * v * v - u,
        p.mu * (p.s * (v - p.v_rest) - w),
    )


# ---------------------------------------------------------------------------
# Morris-Lecar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MLParams:
    """Barnacle-muscle parameters in the Hopf regime (Rinzel and Ermentrout)."""

    C: float = 20.0
    g_L: float = 2.0
    g_Ca: float = 4.4
    g_K: float = 8.0
    V_L: float = -60.0
    V_Ca: float = 120.0
    V_K: float = -84.0
    V1: float = -1.2
    V2: float = 18.0
    V3: float = 2.0
    V4: float = 30.0
    phi: float = 0.04

    def __post_init__(self):
        _coerce_floats(self)
        _require_finite(self)
        if not self.C > 0:
            raise InvalidParameter("C must be > 0")
        if self.V2 == 0 or self.V4 == 0:
            raise InvalidParameter("V2 and V4 must be nonzero")
        if not self.phi > 0:
            raise InvalidParameter("phi must be > 0")


def ml_m_ss(V: float, p: MLParams) -> float:
    return 0.5 * (1.0 + math.tanh((V - p.V1) / p.V2))


def ml_n_ss(V: float, p: MLParams) -> float:
    return 0.5 * (1.0 + math.tanh((V - p.V3) / p.V4))


def ml_tau_n(V: float, p: MLParams) -> float:
    return 1.0 / (p.phi * math.cosh((V - p.V3) / (2.0 * p.V4)))


def ml_membrane_current(V: float, N: float, p: MLParams, I: float) -> float:
    """Net inward current ``C dV/dt`` before any coupling term."""
    return (
        I
        - p.g_L * (V - p.V_L)
        - p.g_Ca * ml_m_ss(V, p) * (V - p.V_Ca)
        - p.g_K * N * (V - p.V_K)
    )


def ml_rhs(s: Sequence[float], p: MLParams, I: float = 0.0) -> tuple[float, float]:
    V, N = s
    return (
        ml_membrane_current(V, N, p, I) / p.C,
        (ml_n_ss(V, p) - N) / ml_tau_n(V, p),
    )


# ---------------------------------------------------------------------------
# Maeda hardware-neuron constants (documentation only, no dynamics)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaedaCircuitPreset:
    C: str = "0.5 mF"
    C_n: str = "1.0 mF"
    R_L: str = "100 kOhm"
    R_1: str = "200 kOhm"
    R_2: str = "2 kOhm"
    R_3: str = "100 kOhm"
    E_Na: str = "5 V"
    E_K: str = "-0.4 V"
    E_L: str = "0 V"
    I_ext: str = "0.025 mA"
    T1: str = "NPN 2N3904"
    T2: str = "PNP 2N3906"
    T3: str = "NPN 2N3904"

    def values(self) -> dict[str, str]:
        return asdict(self)


MAEDA_CIRCUIT = MaedaCircuitPreset()


# ---------------------------------------------------------------------------
# ModelSystem wrappers
# ---------------------------------------------------------------------------


def _bind(fn, p, t, y, I):
    return fn(y, p, I)


def _izh_guard(p, y):
    return y[0] >= p.threshold


def _izh_apply(p, y):
    return izh_reset(y, p)


def hh_model(p: HHParams | None = None) -> ModelSystem:
    p = p or HHParams()
    return ModelSystem(
        name="hh",
        dimension=4,
        rhs=partial(_bind, hh_rhs, p),
        labels=("V", "m", "h", "n"),
        parameters=asdict(p),
        clamp=((1, 0.0, 1.0), (2, 0.0, 1.0), (3, 0.0, 1.0)),
        units=("mV", "1", "1", "1"),
    )


def izhikevich_model(p: IzhikevichParams | None = None) -> ModelSystem:
    p = p or IzhikevichParams()
    return ModelSystem(
        name="izhikevich",
        dimension=2,
        rhs=partial(_bind, izh_rhs, p),
        labels=("v", "u"),
        parameters=asdict(p),
        reset=Reset(guard=partial(_izh_guard, p), apply=partial(_izh_apply, p)),
        units=("mV", "1"),
    )


def fhn_model(p: FHNParams | None = None) -> ModelSystem:
    p = p or FHNParams()
    return ModelSystem(
        name="fhn",
        dimension=2,
        rhs=partial(_bind, fhn_rhs, p),
        labels=("v", "u"),
        parameters=asdict(p),
        units=("1", "1"),
    )


def fhn_cell_model(p: FHNCellParams | None = None) -> ModelSystem:
    p = p or FHNCellParams()
    return ModelSystem(
        name="fhn_cell",
        dimension=2,
        rhs=partial(_bind, fhn_cell_rhs, p),
        labels=("V", "W"),
        parameters=asdict(p),
        units=("1", "1"),
    )


def hr_model(p: HRParams | None = None) -> ModelSystem:
    p = p or HRParams()
    return ModelSystem(
        name="hr",
        dimension=3,
        rhs=partial(_bind, hr_rhs, p),
        labels=("v", "u", "w"),
        parameters=asdict(p),
        units=("1", "1", "1"),
    )


def ml_model(p: MLParams | None = None) -> ModelSystem:
    p = p or MLParams()
    return ModelSystem(
        name="ml",
        dimension=2,
        rhs=partial(_bind, ml_rhs, p),
        labels=("V", "N"),
        parameters=asdict(p),
        clamp=((1, 0.0, 1.0),),
        units=("mV", "1"),
    )


FAMILIES = {
    "hh": (HHParams, hh_model),
    "izhikevich": (IzhikevichParams, izhikevich_model),
    "fhn": (FHNParams, fhn_model),
    "fhn_cell": (FHNCellParams, fhn_cell_model),
    "hr": (HRParams, hr_model),
    "ml": (MLParams, ml_model),
}


def make_model(family: str, **params) -> ModelSystem:
    try:
        cls, builder = FAMILIES[family]
    except KeyError:
        raise InvalidParameter(f"unknown model family {family!r}") from None
    known = {f.name for f in fields(cls)}
    extra = set(params) - known
    if extra:
        raise InvalidParameter(f"unknown {family} parameters: {sorted(extra)}")
    return builder(cls(**params))
