"""Named parameter sets and the model catalog.

Each preset bundles model parameters with a sensible initial state, drive
and step size. The equation anchors in :data:`PRESETS` are catalog data:
they map a preset back to the published model equations it realizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

from .core import InvalidParameter, ModelSystem
from .models import MAEDA_CIRCUIT, make_model


class UnknownPreset(InvalidParameter):
    def __init__(self, name: str):
        super().__init__(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
        self.name = name


@dataclass(frozen=True)
class Preset:
    name: str
    family: str | None
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    s0: tuple[float, ...] = ()
    current: float = 0.0
    dt: float = 0.01
    anchors: str = ""
    notes: str = ""

    @property
    def metadata_only(self) -> bool:
        return self.family is None

    def model(self, **overrides) -> ModelSystem:
        if self.metadata_only:
            raise InvalidParameter(f"preset {self.name!r} is metadata only and has no dynamics")
        return make_model(self.family, **{**self.params, **overrides})


def _p(**kw) -> MappingProxyType:
    return MappingProxyType(kw)


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "hh_squid",
            "hh",
            _p(C_m=1.0, g_Na_max=120.0, g_K_max=36.0, g_L=0.3, V_Na=50.0, V_K=-77.0, V_L=-54.387),
            (-64.9964, 0.052955, 0.59599, 0.31773),
            10.0,
            0.01,
            "Eqs. 1-3 conductances G=I/(V_m-V_rev); Eq. 4 membrane current",
            "gating rates: squid axon at 6.3 C (not given with the equations)",
        ),
        Preset(
            "izh_rs",
            "izhikevich",
            _p(a=0.02, b=0.2, c=-65.0, d=8.0, threshold=30.0),
            (-65.0, -13.0),
            10.0,
            0.01,
            "Eqs. 5-6 ODE; Eq. 7 reset: v>=30 → v←c, u←u+d",
            "printed Eq. 5 drops the v in 0.04v^2; canonical quadratic used",
        ),
        Preset(
            "fhn_default",
            "fhn",
            _p(a=0.7, b=0.8, c=3.0),
            (-1.2, -0.6),
            0.5,
            0.02,
            "Eqs. 8-9",
            "a, b, c are the classical values; none are given with the equations",
        ),
        Preset(
            "fhn_cell",
            "fhn_cell",
            _p(eps=0.08, eta=0.0, g="linear"),
            (0.5, 0.0),
            0.0,
            0.05,
            "Eqs. 20-23 single cell (D=0)",
            "g(V)=V linear recovery",
        ),
        Preset(
            "hr_bursting",
            "hr",
            _p(b=3.0, mu=0.01, s=4.0, v_rest=-1.6),
            (-1.6045, -11.873, -0.018),
            2.0,
            0.05,
            "Eqs. 10-12",
            "Eq. 10 'bx^2' read as b*v^2; Eq. 11 read as u' = 1-5v^2-u",
        ),
        Preset(
            "ml_hopf",
            "ml",
            _p(C=20.0, g_L=2.0, g_Ca=4.4, g_K=8.0, V_L=-60.0, V_Ca=120.0, V_K=-84.0,
               V1=-1.2, V2=18.0, V3=2.0, V4=30.0, phi=0.04),
            (-60.8554, 0.014915),
            100.0,
            0.01,
            "Eqs. 13-14",
            "M_ss, N_ss, tau_N use the standard tanh/cosh forms",
        ),
        Preset(
            "maeda_circuit",
            None,
            _p(**MAEDA_CIRCUIT.values()),
            anchors="hardware neuron constants",
            notes="metadata only; no ODE consumes these values",
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPreset(name) from None


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def catalog_entry(p: Preset) -> str:
    kind = "metadata only" if p.metadata_only else p.family
    lines = [f"{p.name}  [{kind}]"]
    lines.append("  params: " + " ".join(f"{k}={_fmt(v)}" for k, v in p.params.items()))
    if not p.metadata_only:
        m = p.model()
        s0 = ", ".join(_fmt(v) for v in p.s0)
        lines.append(f"  state: {', '.join(m.labels)}  s0=({s0})  I={_fmt(p.current)}  dt={_fmt(p.dt)}")
    if p.anchors:
        lines.append(f"  anchors: {p.anchors}")
    if p.notes:
        lines.append(f"  notes: {p.notes}")
    return "\n".join(lines)


def list_presets() -> str:
    """Catalog text, one block per registered preset."""
    return "\n\n".join(catalog_entry(p) for p in PRESETS.values()) + "\n"
