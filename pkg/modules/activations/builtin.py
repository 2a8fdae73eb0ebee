"""Built-in activations, each given by phi = sigma' together with sigma."""

from typing import Tuple

import numpy as np

from .base import Activation

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class IdentityActivation(Activation):
    """sigma(x) = x^2 / 2, so phi(x) = x."""

    activation_id = "identity"
    display_name = "Identity (sigma = x^2/2)"

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * x**2


class NegPartActivation(Activation):
    """sigma(x) = min(x, 0)^2 / 2, so phi(x) = min(x, 0)."""

    activation_id = "neg_part"
    display_name = "Negative part (sigma = min(x,0)^2/2)"
    breakpoints: Tuple[float, ...] = (0.0,)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(x, 0.0)

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * np.minimum(x, 0.0) ** 2


class AbsActivation(Activation):
    """sigma(x) = x|x| / 2, so phi(x) = |x|."""

    activation_id = "abs"
    display_name = "Absolute value (sigma = x|x|/2)"
    breakpoints: Tuple[float, ...] = (0.0,)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.abs(x)

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * x * np.abs(x)


class ShiftedReluActivation(Activation):
    """Centered ReLU: phi(x) = max(x, 0) - 1/sqrt(2 pi), so E phi(z) = 0."""

    activation_id = "shifted_relu"
    display_name = "Centered ReLU"
    breakpoints: Tuple[float, ...] = (0.0,)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0) - INV_SQRT_2PI

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * np.maximum(x, 0.0) ** 2 - INV_SQRT_2PI * x


class LinearActivation(Activation):
    """phi(x) = a x + b."""

    def __init__(self, a: float = 1.0, b: float = 0.0):
        self.a = float(a)
        self.b = float(b)

    @property
    def activation_id(self) -> str:
        return f"linear:{self.a:g},{self.b:g}"

    @property
    def display_name(self) -> str:
        return f"Linear ({self.a:g} x + {self.b:g})"

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.a * x + self.b

    def sigma(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * self.a * x**2 + self.b * x
