"""Declarative scenario runs: YAML config in, CSV + JSON report + manifest out.

A config looks like::

    name: fhn_minimal
    model: {preset: fhn_default}
    stimulus: {kind: constant, amplitude: 0.5}
    integrator: {method: rk4, dt: 0.02, t_end: 1000}
    analysis: {spikes: true, period: {discard_transient: 2}}
    output_dir: out/fhn_minimal

Optional blocks: ``coupling`` (pair, coupled_fhn, coupled_ml, hr_network)
and the analysis entries ``fi_sweep``, ``frequency``, ``sync`` and
``acceleration``. Everything is validated before the first integration.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import time
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .analysis import (
    SpikeDetectorConfig,
    acceleration_experiment,
    detect_spikes,
    estimate_period,
    fi_sweep,
    frequency_sensitivity,
    sync_report,
)
from .core import ModelSystem, NeurodynError, StimulusProtocol, ValidationError, validate_state
from .coupled import (
    CoupledFHNParams,
    CoupledMLParams,
    HRNetworkParams,
    build_pair,
    coupled_fhn_model,
    coupled_ml_model,
    hr_network_model,
    read_matrix,
)
from .integrate import Divergence, IntegratorConfig, Trajectory, integrate
from .models import FAMILIES, HRParams, MLParams, make_model
from .presets import get_preset

OUTPUT_ROOT_ENV = "NEURODYN_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_DIVERGENCE = 4

TOP_KEYS = {"name", "model", "coupling", "stimulus", "integrator", "analysis", "output_dir"}
ANALYSIS_KEYS = {"workers", "detector", "spikes", "period", "fi_sweep", "frequency", "sync", "acceleration"}
COUPLING_FAMILIES = ("pair", "coupled_fhn", "coupled_ml", "hr_network")


class ConfigParseError(NeurodynError):
    pass


class ConfigError(ValidationError):
    pass


def config_digest(config: Mapping) -> str:
    """sha256 of the canonical JSON form; insensitive to key order and layout."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# parsing and validation
# ---------------------------------------------------------------------------


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    return dict(value)


def _check_keys(block: Mapping, allowed: set[str], where: str) -> None:
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _floats(seq, where: str) -> tuple[float, ...]:
    if not isinstance(seq, (list, tuple)):
        raise ConfigError(f"{where} must be a list of numbers")
    try:
        return tuple(float(x) for x in seq)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of numbers") from None


@dataclass(frozen=True)
class ModelChoice:
    """A single-cell model plus its default initial state and drive."""

    model: ModelSystem
    s0: tuple[float, ...]
    current: float | None = None


def _model_choice(block: Mapping, where: str) -> ModelChoice:
    block = _mapping(block, where)
    _check_keys(block, {"preset", "family", "params", "s0"}, where)
    params = _mapping(block.get("params"), f"{where}.params")
    if "preset" in block:
        if "family" in block:
            raise ConfigError(f"{where}: give either preset or family, not both")
        preset = get_preset(str(block["preset"]))
        model = preset.model(**params)
        s0, current = preset.s0, preset.current
    elif "family" in block:
        family = str(block["family"])
        if family not in FAMILIES:
            raise ConfigError(f"{where}: unknown family {family!r}")
        model = make_model(family, **params)
        if "s0" not in block:
            raise ConfigError(f"{where}: inline models need an explicit s0")
        s0, current = (), None
    else:
        raise ConfigError(f"{where} needs a preset or a family")
    if "s0" in block:
        s0 = _floats(block["s0"], f"{where}.s0")
    validate_state(s0, model)
    return ModelChoice(model, tuple(s0), current)


def _build_coupled(block: Mapping, base: ModelChoice, base_dir: Path) -> tuple[ModelSystem, tuple[float, ...]]:
    block = _mapping(block, "coupling")
    family = block.get("family")
    if family not in COUPLING_FAMILIES:
        raise ConfigError(f"coupling.family must be one of {COUPLING_FAMILIES}, got {family!r}")
    s0 = _floats(block["s0"], "coupling.s0") if "s0" in block else None

    if family == "pair":
        _check_keys(block, {"family", "gain", "kernel", "partner", "s0"}, "coupling")
        partner = _model_choice(block["partner"], "coupling.partner") if "partner" in block else base
        m = build_pair(base.model, block.get("gain", 0.0), block.get("kernel", "diffusive"), partner.model)
        default = base.s0 + partner.s0
    elif family == "coupled_fhn":
        _check_keys(block, {"family", "params", "s0"}, "coupling")
        m = coupled_fhn_model(CoupledFHNParams(**_mapping(block.get("params"), "coupling.params")))
        default = (0.5, 0.0, -1.0, 0.3)
    elif family == "coupled_ml":
        _check_keys(block, {"family", "params", "cell1", "cell2", "s0"}, "coupling")
        params = _mapping(block.get("params"), "coupling.params")
        cells = {k: MLParams(**_mapping(block.get(k), f"coupling.{k}")) for k in ("cell1", "cell2")}
        m = coupled_ml_model(CoupledMLParams(**cells, **params))
        rest = get_preset("ml_hopf").s0
        default = rest + (0.0,) + rest
    else:
        _check_keys(block, {"family", "params", "hr", "matrix", "matrix_file", "s0"}, "coupling")
        if ("matrix" in block) == ("matrix_file" in block):
            raise ConfigError("hr_network needs exactly one of matrix or matrix_file")
        if "matrix_file" in block:
            path = base_dir / str(block["matrix_file"])
            if not path.is_file():
                raise ConfigError(f"matrix file not readable: {path}")
            C = read_matrix(path)
        else:
            C = tuple(_floats(r, "coupling.matrix row") for r in block["matrix"])
        hr = HRParams(**_mapping(block.get("hr"), "coupling.hr"))
        m = hr_network_model(HRNetworkParams(C, hr, **_mapping(block.get("params"), "coupling.params")))
        default = get_preset("hr_bursting").s0 * len(C)
    s0 = s0 if s0 is not None else default
    validate_state(s0, m)
    return m, tuple(s0)


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario, ready to run."""

    name: str
    model: ModelSystem
    s0: tuple[float, ...]
    stimulus: StimulusProtocol
    integrator: IntegratorConfig
    detector: SpikeDetectorConfig
    analysis: Mapping[str, Any]
    output_dir: Path
    raw: Mapping[str, Any] = field(compare=False)
    acceleration_partner: ModelChoice | None = None
    base_cell: ModelChoice | None = None

    @property
    def digest(self) -> str:
        return config_digest(self.raw)


def resolve_output_dir(output_dir: str | None, name: str, base_dir: Path) -> Path:
    """Relative dirs resolve against the config file, or the env override root."""
    target = Path(output_dir) if output_dir else Path("out") / name
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        return Path(root) / (target.name if target.is_absolute() else target)
    return target if target.is_absolute() else base_dir / target


def parse_config(raw: Any, base_dir: str | os.PathLike = ".") -> ScenarioConfig:
    base_dir = Path(base_dir)
    if not isinstance(raw, Mapping):
        raise ConfigParseError("config must be a mapping at the top level")
    raw = dict(raw)
    _check_keys(raw, TOP_KEYS, "config")
    name = raw.get("name")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError("name must be a non-empty string without '/'")
    if "model" not in raw:
        raise ConfigError("config needs a model block")
    base = _model_choice(raw["model"], "model")

    model, s0 = base.model, base.s0
    if raw.get("coupling") is not None:
        model, s0 = _build_coupled(raw["coupling"], base, base_dir)

    stim_block = _mapping(raw.get("stimulus"), "stimulus")
    _check_keys(stim_block, {"kind", "amplitude", "onset", "duration"}, "stimulus")
    if not stim_block and base.current is not None:
        stim_block = {"kind": "constant", "amplitude": base.current}
    stim = StimulusProtocol(**stim_block)

    int_block = _mapping(raw.get("integrator"), "integrator")
    _check_keys(int_block, {"method", "dt", "t_end", "record_stride"}, "integrator")
    cfg = IntegratorConfig(**int_block)

    analysis = _mapping(raw.get("analysis"), "analysis")
    _check_keys(analysis, ANALYSIS_KEYS, "analysis")
    det_block = _mapping(analysis.get("detector"), "analysis.detector")
    _check_keys(det_block, {"threshold", "refractory"}, "analysis.detector")
    default_det = SpikeDetectorConfig.for_model(model)
    detector = SpikeDetectorConfig(
        float(det_block.get("threshold", default_det.threshold)),
        float(det_block.get("refractory", 0.0)),
    )
    workers = analysis.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("analysis.workers must be a positive integer")

    for key in ("fi_sweep", "frequency"):
        if key in analysis:
            blk = _mapping(analysis[key], f"analysis.{key}")
            _check_keys(blk, {"amplitudes", "window", "onset", "discard_transient"}, f"analysis.{key}")
            _floats(blk.get("amplitudes"), f"analysis.{key}.amplitudes")
            if not float(blk.get("window", 0)) > 0:
                raise ConfigError(f"analysis.{key}.window must be > 0")
            if model.cells != 1:
                raise ConfigError(f"analysis.{key} needs a single-cell model")
    for i, pair in enumerate(analysis.get("sync") or ()):
        pair = _mapping(pair, f"analysis.sync[{i}]")
        _check_keys(pair, {"a", "b", "window"}, f"analysis.sync[{i}]")
        for ch in (pair.get("a"), pair.get("b")):
            if ch not in model.labels:
                raise ConfigError(f"analysis.sync[{i}]: unknown channel {ch!r}")
        if "window" in pair:
            lo, hi = _floats(pair["window"], f"analysis.sync[{i}].window")
            if not 0 <= lo < hi <= cfg.n_records * cfg.dt_effective + 1e-9:
                raise ConfigError(f"analysis.sync[{i}].window outside the run")

    partner = None
    if "acceleration" in analysis:
        blk = _mapping(analysis["acceleration"], "analysis.acceleration")
        _check_keys(blk, {"partner", "gains", "discard_transient"}, "analysis.acceleration")
        if raw.get("coupling") is not None:
            raise ConfigError("analysis.acceleration builds its own pair; drop the coupling block")
        if "partner" not in blk:
            raise ConfigError("analysis.acceleration needs a partner model")
        partner = _model_choice(blk["partner"], "analysis.acceleration.partner")
        gains = _floats(blk.get("gains"), "analysis.acceleration.gains")
        if not gains or any(not math.isfinite(g) for g in gains):
            raise ConfigError("analysis.acceleration.gains must be finite and non-empty")

    out = resolve_output_dir(raw.get("output_dir"), name, base_dir)
    return ScenarioConfig(name, model, s0, stim, cfg, detector, analysis, out, raw, partner, base)


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"{path}: {exc}") from None
    try:
        return parse_config(raw, path.parent)
    except TypeError as exc:
        # dataclass constructors reject unknown field names with TypeError
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write to a temp file in the same directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _clean(x):
    # JSON has no NaN/inf
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _analyse(sc: ScenarioConfig, tr: Trajectory) -> dict:
    a = sc.analysis
    det = sc.detector
    workers = a.get("workers", 1)
    out: dict[str, Any] = {"detector": det.to_dict()}
    if a.get("spikes") or "period" in a:
        spikes = {}
        discard = int(_mapping(a.get("period"), "period").get("discard_transient", 0))
        for vi in sc.model.voltage_indices:
            st = detect_spikes(tr, vi, det)
            entry = {"count": len(st), "times": [round(float(t), 9) for t in st.times]}
            if "period" in a:
                p = estimate_period(st, discard)
                entry["period"] = p if isinstance(p, float) else None
                if not isinstance(p, float):
                    entry["not_periodic"] = p.reason
            spikes[tr.labels[vi]] = entry
        out["spikes"] = spikes
    if "fi_sweep" in a:
        blk = a["fi_sweep"]
        pts = fi_sweep(
            sc.model, blk["amplitudes"], float(blk["window"]), det, s0=sc.s0,
            dt=sc.integrator.dt, method=sc.integrator.method, onset=float(blk.get("onset", 0.0)),
            workers=workers,
        )
        out["fi_sweep"] = [asdict(p) for p in pts]
    if "frequency" in a:
        blk = a["frequency"]
        rep = frequency_sensitivity(
            sc.model, blk["amplitudes"], float(blk["window"]), det, s0=sc.s0,
            dt=sc.integrator.dt, method=sc.integrator.method,
            discard_transient=int(blk.get("discard_transient", 2)), workers=workers,
        )
        out["frequency"] = rep.to_dict()
    if a.get("sync"):
        rows = []
        for pair in a["sync"]:
            window = tuple(pair["window"]) if "window" in pair else None
            r = sync_report(tr, pair["a"], pair["b"], window, det)
            d = {k: _clean(v) for k, v in asdict(r).items()}
            rows.append({"a": pair["a"], "b": pair["b"], "window": window, **d})
        out["sync"] = rows
    if "acceleration" in a:
        blk = a["acceleration"]
        exp = acceleration_experiment(
            sc.base_cell.model, sc.acceleration_partner.model, blk["gains"],
            s0_a=sc.base_cell.s0, s0_b=sc.acceleration_partner.s0, stim=sc.stimulus,
            cfg=sc.integrator, detector=det,
            discard_transient=int(blk.get("discard_transient", 5)), workers=workers,
        )
        out["acceleration"] = exp.to_dict()
    return out


@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    tool_version: str
    started: float
    finished: float
    files: tuple[dict, ...]
    status: str
    runs: tuple[dict, ...] = ()
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["files"] = list(self.files)
        d["runs"] = list(self.runs)
        return d

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.status == "ok" else EXIT_DIVERGENCE


def _file_entry(out_dir: Path, path: Path) -> dict:
    return {"path": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}


def execute(sc: ScenarioConfig) -> RunManifest:
    """Run a validated scenario and write its outputs."""
    started = time.time()
    out = sc.output_dir
    csv_path = out / f"{sc.name}.csv"
    report_path = out / "report.json"
    report: dict[str, Any] = {
        "scenario": sc.name,
        "config": sc.raw,
        "config_digest": sc.digest,
        "model": sc.model.name,
        "labels": list(sc.model.labels),
        "integrator": sc.integrator.to_dict(),
        "stimulus": sc.stimulus.to_dict(),
    }
    status, error = "ok", None
    try:
        tr = integrate(sc.model, sc.s0, sc.stimulus, sc.integrator)
    except Divergence as exc:
        tr = exc.trajectory
        status, error = "diverged", str(exc)
        report["divergence"] = {"t": exc.t}
    files = []
    if tr is not None:
        atomic_write(csv_path, tr.to_csv())
        files.append(csv_path)
        report["samples"] = len(tr)
        report["reset_events"] = len(tr.events)
    if status == "ok":
        try:
            report["analysis"] = _analyse(sc, tr)
        except Divergence as exc:
            status, error = "diverged", str(exc)
            report["divergence"] = {"t": exc.t, "during": "analysis"}
    report["status"] = status
    atomic_write(report_path, _json(report))
    files.append(report_path)
    manifest = RunManifest(
        sc.digest,
        __version__,
        started,
        time.time(),
        tuple(_file_entry(out, f) for f in files),
        status,
        ({"name": sc.name, "status": status},),
        error,
    )
    atomic_write(out / "manifest.json", _json(manifest.to_dict()))
    return manifest


def run_scenario(path: str | os.PathLike) -> RunManifest:
    """Parse, validate and execute the scenario file at ``path``."""
    return execute(load_config(path))
