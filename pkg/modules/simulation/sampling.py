"""Counter-based random streams and model sampling."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import ModelParams, XLaw

# One independent Philox stream per matrix, so results never depend on draw order
STREAMS = {"x": 0, "w": 1, "d2": 2, "x_tilde": 3, "surrogate": 4}


def stream(seed: int, name: str) -> np.random.Generator:
    """Generator for the named matrix of a given seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name],))))


def sample_data(rng: np.random.Generator, n: int, d: int, law: XLaw) -> np.ndarray:
    if law is XLaw.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=(n, d)) - 1.0
    return rng.standard_normal((n, d))


@dataclass(frozen=True, eq=False)
class SampledModel:
    """X (n x d), W (d x p) and the diagonal D^2 (length p) of one draw."""

    X: np.ndarray
    W: np.ndarray
    d2: np.ndarray
    params: Optional[ModelParams] = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @property
    def D(self) -> np.ndarray:
        """Nonnegative square root of D^2; only D^2 enters the kernels."""
        return np.sqrt(self.d2)

    def preactivations(self) -> np.ndarray:
        """XW / sqrt(d)."""
        return self.X @ self.W / np.sqrt(self.d)

    def x_tilde(self) -> np.ndarray:
        """Fresh standard Gaussian n x p matrix, independent of X and W."""
        seed = self.params.seed if self.params is not None else 0
        return stream(seed, "x_tilde").standard_normal((self.n, self.p))


def sample_model(params: ModelParams) -> SampledModel:
    """Draw X, W and D^2 for ``params``; deterministic in ``params.seed``."""
    X = sample_data(stream(params.seed, "x"), params.n, params.d, params.x_law)
    W = stream(params.seed, "w").standard_normal((params.d, params.p))
    d2 = params.nu.sample(stream(params.seed, "d2"), params.p)
    return SampledModel(X=X, W=W, d2=d2, params=params)
