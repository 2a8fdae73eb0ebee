"""Base classes for activation functions."""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from ..errors import EvaluationError, UnsupportedCaseError


class Activation(ABC):
    """
    A pointwise activation, given through its derivative phi = sigma'.

    The kernel K only involves phi; the conjugate kernel needs sigma itself, so
    subclasses that know an antiderivative override ``sigma``.
    """

    @property
    @abstractmethod
    def activation_id(self) -> str:
        """Identifier used in experiment configs."""
        pass

    @property
    @abstractmethod
    def display_name(self) -> str:
        """Human-readable name."""
        pass

    @property
    def description(self) -> str:
        return self.display_name

    @abstractmethod
    def phi(self, x: np.ndarray) -> np.ndarray:
        """Derivative sigma' evaluated entrywise."""
        pass

    def sigma(self, x: np.ndarray) -> np.ndarray:
        """Activation sigma evaluated entrywise."""
        raise UnsupportedCaseError(f"Activation '{self.activation_id}' has no antiderivative")

    @property
    def has_sigma(self) -> bool:
        return type(self).sigma is not Activation.sigma

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Points where phi is not smooth; quadrature splits the real line there."""
        return ()

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def evaluate(self, x) -> np.ndarray:
        """phi(x) with a finiteness check."""
        values = np.asarray(self.phi(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise EvaluationError(f"Activation '{self.activation_id}' returned non-finite values")
        return values

    def evaluate_sigma(self, x) -> np.ndarray:
        values = np.asarray(self.sigma(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise EvaluationError(f"Activation '{self.activation_id}' sigma returned non-finite values")
        return values

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.activation_id!r})"


class ShiftedActivation(Activation):
    """phi(x) - c - slope * x, with sigma adjusted to match."""

    def __init__(self, base: Activation, c: float = 0.0, slope: float = 0.0):
        self.base = base
        self.c = float(c)
        self.slope = float(slope)

    @property
    def activation_id(self) -> str:
        return f"{self.base.activation_id}-shifted({self.c:.6g},{self.slope:.6g})"

    @property
    def display_name(self) -> str:
        return f"{self.base.display_name} minus {self.c:.4g} + {self.slope:.4g} x"

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.base.phi(x) - self.c - self.slope * x

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return self.base.sigma(x) - self.c * x - 0.5 * self.slope * x**2

    @property
    def has_sigma(self) -> bool:
        return self.base.has_sigma

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self.base.breakpoints


def add_linear(base: Activation, t: float) -> Activation:
    """x -> phi(x) + t x."""
    return ShiftedActivation(base, 0.0, -t)


def residual(base: Activation, c: float, alpha: float) -> Activation:
    """psi(x) = phi(x) - c - alpha x, the part beyond the first two Hermite modes."""
    return ShiftedActivation(base, c, alpha)
