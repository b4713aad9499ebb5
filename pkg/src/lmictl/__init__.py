"""Stochastic LQ control under limited, full and statistical model information."""

from .analysis import compare_information, degradation_ratio, is_ms_stable, policy_value_infinite
from .kernels import BACKEND
from .model import BlockStructure, CostSpec, StochasticSystem, StochasticTerm, validate
from .synthesis import (
    NotFullyActuated,
    NotStabilizable,
    deadbeat,
    evaluate_finite,
    finite_fmi,
    finite_lmi,
    infinite_fmi,
    infinite_lmi,
    infinite_smi,
)

__all__ = [
    "BACKEND",
    "BlockStructure",
    "CostSpec",
    "NotFullyActuated",
    "NotStabilizable",
    "StochasticSystem",
    "StochasticTerm",
    "compare_information",
    "deadbeat",
    "degradation_ratio",
    "evaluate_finite",
    "finite_fmi",
    "finite_lmi",
    "infinite_fmi",
    "infinite_lmi",
    "infinite_smi",
    "is_ms_stable",
    "policy_value_infinite",
    "validate",
]
