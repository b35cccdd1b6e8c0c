"""Throughput model and simulator for TCP striped round-robin over heterogeneous links."""

from .core import (
    DelayDataset,
    Link,
    ModelConfig,
    PathSet,
    Scenario,
    ValidationError,
    kbps,
    load_scenario,
    mbps,
    ms,
    segments_for_bytes,
    validate_scenario,
)
from .metrics import (
    avg_bandwidth_asymmetry,
    avg_delay_asymmetry,
    prediction_accuracy,
    synth_bandwidths,
    synth_delays,
)
from .model import model_throughput, run_model
from .simulator import SimOptions, run_sim

__version__ = "0.1.0"
