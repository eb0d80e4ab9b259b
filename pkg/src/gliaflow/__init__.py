"""gliaflow: coupled neuron-vasculature and neuron-astrocyte simulations."""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    MODEL_A,
    MODEL_B_COUPLED,
    MODEL_B_PURE,
    SimConfig,
    default_config,
    validate_config,
)
from .engine import detect_cycle, run_config, run_model_a, run_model_b, summarize  # noqa: F401
from .rng import derive_stream  # noqa: F401
