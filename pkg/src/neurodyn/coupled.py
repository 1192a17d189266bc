"""Coupled-cell systems over stacked state vectors.

* synaptically coupled Morris-Lecar pair, layout ``[V1, N1, Z, V2, N2]``
* one-way driven FitzHugh-Nagumo pair, layout ``[V1, W1, V2, W2]``
* Hindmarsh-Rose network of N cells, layout ``[v1, u1, w1, v2, ...]``
* :func:`build_pair`, a generic two-cell diffusive/drive composite

Each family reduces bitwise to stacked isolated evaluations when its
coupling is zeroed.
"""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from functools import partial

from .core import InvalidParameter, ModelSystem, Reset, ValidationError
from .models import (
    FHNCellParams,
    HRParams,
    MLParams,
    _coerce_floats,
    fhn_cell_derivative,
    hr_rhs,
    ml_membrane_current,
    ml_n_ss,
    ml_tau_n,
)


class TopologyMismatch(ValidationError):
    pass


class InvalidGain(ValidationError):
    pass


def sigmoid(V: float, theta: float, slope: float) -> float:
    x = -(V - theta) / slope
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


@dataclass(frozen=True)
class NetworkState:
    """Per-cell blocks concatenated in cell order."""

    values: tuple[float, ...]
    cells: int
    cell_dim: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.cells < 1 or self.cell_dim < 1:
            raise InvalidParameter("cells and cell_dim must be positive")
        if len(self.values) != self.cells * self.cell_dim:
            raise InvalidParameter(
                f"{len(self.values)} values cannot hold {self.cells} cells of dimension {self.cell_dim}"
            )

    @classmethod
    def from_cells(cls, blocks: Sequence[Sequence[float]]) -> NetworkState:
        dims = {len(b) for b in blocks}
        if len(dims) != 1:
            raise InvalidParameter("all cell blocks must share one dimension")
        return cls(tuple(v for b in blocks for v in b), len(blocks), dims.pop())

    def cell(self, i: int) -> tuple[float, ...]:
        return self.values[i * self.cell_dim : (i + 1) * self.cell_dim]


# ---------------------------------------------------------------------------
# Morris-Lecar pair with a chemical synapse 1 -> 2
# ---------------------------------------------------------------------------

RECOVERY_MODES = ("ml", "sigmoid")


@dataclass(frozen=True)
class CoupledMLParams:
    """Two Morris-Lecar cells; cell 1 drives a synaptic gate Z onto cell 2.

    ``G="ml"`` keeps the cells' own recovery, ``lam * (N_ss - N) / tau_N``;
    ``G="sigmoid"`` uses ``lam * (-N + sigmoid(V))``. ``F`` is always the
    sigmoid with threshold ``theta`` and slope ``sigma_s``.
    """

    cell1: MLParams = field(default_factory=MLParams)
    cell2: MLParams = field(default_factory=MLParams)
    lam: float = 1.0
    tau: float = 10.0
    alpha: float = 1.0
    gamma: float = -80.0
    theta: float = 0.0
    sigma_s: float = 2.0
    F: str = "sigmoid"
    G: str = "ml"

    def __post_init__(self):
        _coerce_floats(self)
        if not self.tau > 0:
            raise InvalidParameter("tau must be > 0")
        if not self.lam > 0:
            raise InvalidParameter("lam must be > 0")
        if self.sigma_s == 0:
            raise InvalidParameter("sigma_s must be nonzero")
        if self.F != "sigmoid":
            raise InvalidParameter(f"unknown activation F={self.F!r}")
        if self.G not in RECOVERY_MODES:
            raise InvalidParameter(f"unknown recovery G={self.G!r}")


def _ml_recovery(V: float, N: float, cell: MLParams, p: CoupledMLParams) -> float:
    if p.G == "ml":
        return p.lam * ((ml_n_ss(V, cell) - N) / ml_tau_n(V, cell))
    return p.lam * (-N + sigmoid(V, p.theta, p.sigma_s))


def coupled_ml_rhs(s: Sequence[float], p: CoupledMLParams, I: float = 0.0) -> tuple[float, ...]:
    V1, N1, Z, V2, N2 = s
    c1, c2 = p.cell1, p.cell2
    return (
        ml_membrane_current(V1, N1, c1, I) / c1.C,
        _ml_recovery(V1, N1, c1, p),
        (p.alpha * sigmoid(V1, p.theta, p.sigma_s) - Z) / p.tau,
        (ml_membrane_current(V2, N2, c2, I) - Z * (V2 - p.gamma)) / c2.C,
        _ml_recovery(V2, N2, c2, p),
    )


# ---------------------------------------------------------------------------
# FitzHugh-Nagumo pair, cell 1 drives cell 2 through D*V1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoupledFHNParams:
    eps1: float = 0.08
    eta1: float = 0.0
    eps2: float = 0.1
    eta2: float = 0.0
    D: float = 0.0
    g: str = "linear"

    def __post_init__(self):
        _coerce_floats(self)
        for v in (self.eps1, self.eta1, self.eps2, self.eta2, self.D):
            if not math.isfinite(v):
                raise InvalidParameter("coupled FHN parameters must be finite")
        # validates eps > 0 and the recovery selection
        self.cells()

    def cells(self) -> tuple[FHNCellParams, FHNCellParams]:
        return (
            FHNCellParams(self.eps1, self.eta1, self.g),
            FHNCellParams(self.eps2, self.eta2, self.g),
        )


def coupled_fhn_rhs(s: Sequence[float], p: CoupledFHNParams, I: float = 0.0) -> tuple[float, ...]:
    """Autonomous pair; ``I`` is accepted for the common rhs signature and ignored."""
    V1, W1, V2, W2 = s
    dV1, dW1 = fhn_cell_derivative(V1, W1, p.eps1, p.eta1, 0.0)
    dV2, dW2 = fhn_cell_derivative(V2, W2, p.eps2, p.eta2, 0.0)
    return dV1, dW1, dV2 + p.D * V1, dW2


# ---------------------------------------------------------------------------
# Hindmarsh-Rose network
# ---------------------------------------------------------------------------

KERNELS = ("diffusive", "sigmoidal")
GATES = ("one", "sigmoid")


@dataclass(frozen=True)
class HRNetworkParams:
    """Hindmarsh-Rose cells coupled through an adjacency matrix ``C``.

    Each cell gets ``-g_s * sigma(v_i) * sum_j C[i][j] * Gamma(v_i, v_j)``.
    ``diffusive``: ``Gamma = v_j - v_i``, so a negative ``g_s`` pulls cells
    together. ``sigmoidal``: ``Gamma = (v_i - E_syn) / (1 + exp(-syn_lambda (v_j - syn_theta)))``.
    """

    C: tuple[tuple[float, ...], ...]
    hr: HRParams = field(default_factory=HRParams)
    g_s: float = 0.0
    kernel: str = "diffusive"
    sigma: str = "one"
    E_syn: float = 2.0
    syn_lambda: float = 10.0
    syn_theta: float = -0.25
    gate_theta: float = 0.0
    gate_slope: float = 1.0

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in row) for row in self.C)
        object.__setattr__(self, "C", rows)
        _coerce_floats(self)
        n = len(rows)
        if n < 1:
            raise TopologyMismatch("coupling matrix needs at least one cell")
        if any(len(r) != n for r in rows):
            raise TopologyMismatch(f"coupling matrix is not square ({n} rows)")
        if any(not math.isfinite(x) for r in rows for x in r):
            raise InvalidParameter("coupling weights must be finite")
        if any(rows[i][i] != 0.0 for i in range(n)):
            raise InvalidParameter("coupling matrix diagonal must be zero")
        if not math.isfinite(self.g_s):
            raise InvalidParameter("g_s must be finite")
        if self.kernel not in KERNELS:
            raise InvalidParameter(f"unknown kernel {self.kernel!r}")
        if self.sigma not in GATES:
            raise InvalidParameter(f"unknown gate {self.sigma!r}")

    @property
    def cells(self) -> int:
        return len(self.C)


def diffusive_kernel(vi: float, vj: float) -> float:
    return vj - vi


def _gamma(p: HRNetworkParams, vi: float, vj: float) -> float:
    if p.kernel == "diffusive":
        return vj - vi
    return (vi - p.E_syn) * sigmoid(vj, p.syn_theta, 1.0 / p.syn_lambda)


def _gate(p: HRNetworkParams, v: float) -> float:
    if p.sigma == "one":
        return 1.0
    return sigmoid(v, p.gate_theta, p.gate_slope)


def coupled_hr_rhs(s: Sequence[float], p: HRNetworkParams, I: float = 0.0) -> tuple[float, ...]:
    n = p.cells
    if len(s) != 3 * n:
        raise TopologyMismatch(f"state of length {len(s)} does not match a {n}-cell network")
    vs = s[0::3]
    out: list[float] = []
    for i in range(n):
        dv, du, dw = hr_rhs(s[3 * i : 3 * i + 3], p.hr, I)
        vi = vs[i]
        row = p.C[i]
        total = 0.0
        for j in range(n):
            total += row[j] * _gamma(p, vi, vs[j])
        out += (dv - p.g_s * _gate(p, vi) * total, du, dw)
    return tuple(out)


def read_matrix(path: str | os.PathLike) -> tuple[tuple[float, ...], ...]:
    """Whitespace-separated rows; blank lines and ``#`` comments are skipped."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(tuple(float(x) for x in line.split()))
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise TopologyMismatch(f"{path}: expected a square matrix")
    return tuple(rows)


def ring_matrix(n: int, weight: float = 1.0) -> tuple[tuple[float, ...], ...]:
    rows = [[0.0] * n for _ in range(n)]
    for i in range(n):
        if n > 1:
            rows[i][(i + 1) % n] = weight
            rows[i][(i - 1) % n] = weight
    return tuple(tuple(r) for r in rows)


# ---------------------------------------------------------------------------
# ModelSystem wrappers
# ---------------------------------------------------------------------------


def _bind(fn, p, t, y, I):
    return fn(y, p, I)


def coupled_ml_model(p: CoupledMLParams | None = None) -> ModelSystem:
    p = p or CoupledMLParams()
    return ModelSystem(
        name="coupled_ml",
        dimension=5,
        rhs=partial(_bind, coupled_ml_rhs, p),
        labels=("V1", "N1", "Z", "V2", "N2"),
        parameters=asdict(p),
        clamp=((1, 0.0, 1.0), (4, 0.0, 1.0)),
        voltage_indices=(0, 3),
    )


def coupled_fhn_model(p: CoupledFHNParams | None = None) -> ModelSystem:
    p = p or CoupledFHNParams()
    return ModelSystem(
        name="coupled_fhn",
        dimension=4,
        rhs=partial(_bind, coupled_fhn_rhs, p),
        labels=("V1", "W1", "V2", "W2"),
        parameters=asdict(p),
        voltage_indices=(0, 2),
    )


def hr_network_model(p: HRNetworkParams) -> ModelSystem:
    n = p.cells
    labels = tuple(f"{name}{i + 1}" for i in range(n) for name in ("v", "u", "w"))
    return ModelSystem(
        name="hr_network",
        dimension=3 * n,
        rhs=partial(_bind, coupled_hr_rhs, p),
        labels=labels,
        parameters=asdict(p),
        voltage_indices=tuple(3 * i for i in range(n)),
    )


# ---------------------------------------------------------------------------
# Generic pair builder
# ---------------------------------------------------------------------------

PAIR_KERNELS = ("diffusive", "drive")


@dataclass(frozen=True)
class _PairRHS:
    rhs_a: object
    rhs_b: object
    dim: int
    vi: int
    gain: float
    kernel: str

    def __call__(self, t, y, I):
        d, vi = self.dim, self.vi
        da = list(self.rhs_a(t, y[:d], I))
        db = list(self.rhs_b(t, y[d:], I))
        va, vb = y[vi], y[d + vi]
        if self.kernel == "diffusive":
            da[vi] = da[vi] + self.gain * (vb - va)
            db[vi] = db[vi] + self.gain * (va - vb)
        else:
            da[vi] = da[vi] + self.gain * vb
            db[vi] = db[vi] + self.gain * va
        return tuple(da + db)


@dataclass(frozen=True)
class _PairGuard:
    guard_a: object
    guard_b: object
    dim: int

    def __call__(self, y):
        d = self.dim
        return bool(
            (self.guard_a is not None and self.guard_a(y[:d]))
            or (self.guard_b is not None and self.guard_b(y[d:]))
        )


@dataclass(frozen=True)
class _PairApply:
    reset_a: Reset | None
    reset_b: Reset | None
    dim: int

    def __call__(self, y):
        d = self.dim
        a, b = tuple(y[:d]), tuple(y[d:])
        if self.reset_a is not None and self.reset_a.guard(a):
            a = tuple(self.reset_a.apply(a))
        if self.reset_b is not None and self.reset_b.guard(b):
            b = tuple(self.reset_b.apply(b))
        return a + b


def build_pair(
    model: ModelSystem,
    coupling_gain: float,
    kernel: str = "diffusive",
    partner: ModelSystem | None = None,
) -> ModelSystem:
    """Two cells coupled through their voltage variable.

    ``diffusive`` adds ``k (V_other - V_self)`` to each voltage equation,
    ``drive`` adds ``k V_other``. ``partner`` replaces the second copy of
    ``model`` (same layout required) for mismatched pairs.
    """
    partner = partner or model
    k = float(coupling_gain)
    if not math.isfinite(k):
        raise InvalidGain(f"coupling gain must be finite, got {coupling_gain!r}")
    if kernel not in PAIR_KERNELS:
        raise InvalidParameter(f"unknown pair kernel {kernel!r}")
    if model.cells != 1 or partner.cells != 1:
        raise InvalidParameter("build_pair needs single-cell models with one voltage index")
    if (model.dimension, model.voltage_indices) != (partner.dimension, partner.voltage_indices):
        raise InvalidParameter("partner must share the state layout of model")
    d = model.dimension
    vi = model.voltage_indices[0]

    reset = None
    if model.reset is not None or partner.reset is not None:
        reset = Reset(
            guard=_PairGuard(
                model.reset.guard if model.reset else None,
                partner.reset.guard if partner.reset else None,
                d,
            ),
            apply=_PairApply(model.reset, partner.reset, d),
        )
    clamp = tuple(model.clamp) + tuple((i + d, lo, hi) for i, lo, hi in partner.clamp)
    return ModelSystem(
        name=f"pair[{model.name},{partner.name}]",
        dimension=2 * d,
        rhs=_PairRHS(model.rhs, partner.rhs, d, vi, k, kernel),
        labels=tuple(f"{l}_1" for l in model.labels) + tuple(f"{l}_2" for l in partner.labels),
        parameters={
            "cell_1": dict(model.parameters),
            "cell_2": dict(partner.parameters),
            "gain": k,
            "kernel": kernel,
        },
        reset=reset,
        clamp=clamp,
        voltage_indices=(vi, d + vi),
        units=tuple(model.units) + tuple(partner.units),
    )

