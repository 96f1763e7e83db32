"""Metric-aligning motion matching.

Aligns a skeletal motion clip to an arbitrary temporal control sequence
(sketch, waveform, labels, audio features, or another motion) by coupling
patches through a fused semi-unbalanced Gromov-Wasserstein transport plan.
Only within-domain distances are ever computed, so no cross-domain mapping
has to be defined or learned.
"""

from .backend import BACKEND_NAME, HAS_COMPILED
from .exceptions import (
    BvhError,
    InfeasibleRowError,
    MammError,
    PipelineError,
    RotationProjectionError,
    SolverError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "HAS_COMPILED",
    "MammError",
    "BvhError",
    "RotationProjectionError",
    "SolverError",
    "InfeasibleRowError",
    "PipelineError",
    "__version__",
]
