"""Survival and trapping of a delta-bound state under harmonic delta forcing."""

from .config import (
    KernelTable,
    ModelConfig,
    PoleResult,
    Potential,
    StabilizationPoint,
    SurvivalTrace,
)

__version__ = "0.1.0"

__all__ = [
    "KernelTable",
    "ModelConfig",
    "PoleResult",
    "Potential",
    "StabilizationPoint",
    "SurvivalTrace",
    "__version__",
]
