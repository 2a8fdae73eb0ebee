"""Gaussian-chaos statistics (c, alpha, beta^2) of an activation derivative."""

from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.stats import norm

from ..errors import DomainError, EvaluationError, ValidationError
from .base import Activation

DEFAULT_ORDER = 200
MIN_ORDER = 32
# The standard normal density is below 1e-42 beyond this range
TRUNCATION = 14.0


@dataclass(frozen=True)
class ActivationStats:
    """phi = c + alpha x + psi with psi orthogonal to 1 and x; beta_sq = E[psi^2]."""

    c: float
    alpha: float
    beta_sq: float

    @property
    def alpha_sq(self) -> float:
        return self.alpha**2

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "ActivationStats":
        return cls(c=float(data["c"]), alpha=float(data["alpha"]), beta_sq=float(data["beta_sq"]))


@lru_cache(maxsize=32)
def _hermite_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = hermegauss(order)
    return nodes, weights / np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=32)
def _piecewise_rule(order: int, breakpoints: Tuple[float, ...]) -> Tuple[np.ndarray, np.ndarray]:
    edges = [-TRUNCATION] + [b for b in sorted(set(breakpoints)) if -TRUNCATION < b < TRUNCATION] + [TRUNCATION]
    base_nodes, base_weights = leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        x = half * base_nodes + 0.5 * (hi + lo)
        nodes.append(x)
        weights.append(half * base_weights * norm.pdf(x))
    return np.concatenate(nodes), np.concatenate(weights)


def gaussian_rule(order: int = DEFAULT_ORDER, breakpoints: Sequence[float] = ()) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for E[f(z)], z ~ N(0, 1).

    Smooth integrands use probabilists' Gauss-Hermite; integrands with kinks
    use Gauss-Legendre on each smooth piece against the normal density.

    Args:
        order: Number of nodes (per piece when breakpoints are given)
        breakpoints: Points where the integrand is not smooth

    Returns:
        (nodes, weights) with weights summing to 1
    """
    if order < MIN_ORDER:
        raise DomainError(f"Quadrature order must be at least {MIN_ORDER}, got {order}")
    if breakpoints:
        return _piecewise_rule(int(order), tuple(float(b) for b in breakpoints))
    return _hermite_rule(int(order))


def gaussian_expectation(f: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_ORDER, breakpoints=()) -> float:
    """E[f(z)] for standard normal z."""
    nodes, weights = gaussian_rule(order, breakpoints)
    values = np.asarray(f(nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError("Integrand returned non-finite values at quadrature nodes")
    return float(np.dot(weights, values))


def hermite_stats(phi: Activation, order: int = DEFAULT_ORDER) -> ActivationStats:
    """
    Project phi onto the first two Hermite modes under the standard Gaussian.

    Args:
        phi: Activation (its derivative phi is what gets projected)
        order: Quadrature order, at least 32

    Returns:
        ActivationStats with beta_sq computed as E[(phi - c - alpha z)^2] directly
    """
    nodes, weights = gaussian_rule(order, phi.breakpoints)
    values = phi.evaluate(nodes)

    c = float(np.dot(weights, values))
    alpha = float(np.dot(weights, nodes * values))
    beta_sq = float(np.dot(weights, (values - c - alpha * nodes) ** 2))
    if beta_sq < -1e-10:
        raise EvaluationError(f"Negative residual variance {beta_sq:.3g}")
    return ActivationStats(c=c, alpha=alpha, beta_sq=max(beta_sq, 0.0))


def check_growth(phi: Activation, degree: int = 3, bound: float = 1e8, span: float = 20.0, samples: int = 4001):
    """
    Numerical pseudo-Lipschitz check: |phi(x)| <= C (1 + |x|^degree) on [-span, span].

    Returns:
        The smallest admissible constant C

    Raises:
        ValidationError: if C exceeds ``bound``
    """
    x = np.linspace(-span, span, samples)
    values = phi.evaluate(x)
    constant = float(np.max(np.abs(values) / (1.0 + np.abs(x) ** degree)))
    if constant > bound:
        raise ValidationError(
            f"Activation '{phi.activation_id}' grows too fast: |phi| <= C(1+|x|^{degree}) needs C = {constant:.3g}"
        )
    return constant
