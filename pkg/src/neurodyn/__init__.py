"""Deterministic simulation of single and coupled neuron models."""

__version__ = "0.1.0"

from .analysis import (
    NotPeriodic,
    SpikeDetectorConfig,
    SpikeTrain,
    SyncReport,
    acceleration_experiment,
    acceleration_ratio,
    detect_spikes,
    estimate_period,
    fi_sweep,
    frequency_sensitivity,
    sync_report,
)
from .core import (
    DimensionMismatch,
    InvalidInput,
    InvalidParameter,
    ModelSystem,
    NeurodynError,
    NonFiniteValue,
    Reset,
    StateVector,
    StimulusProtocol,
    ValidationError,
    evaluate_stimulus,
    validate_state,
)
from .coupled import build_pair, coupled_fhn_model, coupled_ml_model, hr_network_model
from .integrate import Divergence, IntegratorConfig, Trajectory, convergence_order, integrate
from .models import make_model
from .presets import PRESETS, get_preset, list_presets

__all__ = [
    "__version__",
    "DimensionMismatch",
    "Divergence",
    "IntegratorConfig",
    "InvalidInput",
    "InvalidParameter",
    "ModelSystem",
    "NeurodynError",
    "NonFiniteValue",
    "NotPeriodic",
    "PRESETS",
    "Reset",
    "SpikeDetectorConfig",
    "SpikeTrain",
    "StateVector",
    "StimulusProtocol",
    "SyncReport",
    "Trajectory",
    "ValidationError",
    "acceleration_experiment",
    "acceleration_ratio",
    "build_pair",
    "convergence_order",
    "coupled_fhn_model",
    "coupled_ml_model",
    "detect_spikes",
    "estimate_period",
    "evaluate_stimulus",
    "fi_sweep",
    "frequency_sensitivity",
    "get_preset",
    "hr_network_model",
    "integrate",
    "list_presets",
    "make_model",
    "sync_report",
    "validate_state",
]
