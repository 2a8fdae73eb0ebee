"""Activation functions and their Gaussian-chaos statistics"""

from .base import Activation, ShiftedActivation, add_linear, residual
from .builtin import AbsActivation, IdentityActivation, LinearActivation, NegPartActivation, ShiftedReluActivation
from .hermite import DEFAULT_ORDER, ActivationStats, check_growth, gaussian_expectation, gaussian_rule, hermite_stats
from .registry import ActivationRegistry, get_activation, get_registry
from .tabulated import TabulatedActivation

__all__ = [
    "Activation",
    "ShiftedActivation",
    "add_linear",
    "residual",
    "IdentityActivation",
    "NegPartActivation",
    "AbsActivation",
    "ShiftedReluActivation",
    "LinearActivation",
    "TabulatedActivation",
    "ActivationStats",
    "DEFAULT_ORDER",
    "hermite_stats",
    "gaussian_rule",
    "gaussian_expectation",
    "check_growth",
    "ActivationRegistry",
    "get_registry",
    "get_activation",
]
