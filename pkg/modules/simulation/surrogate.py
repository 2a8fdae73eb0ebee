"""Gaussian Gram surrogate: rows i.i.d. N(0, Q), the oracle for the MP map of ESD(Q)."""

from typing import Union

import numpy as np
from scipy.linalg import LinAlgError, eigh

from ..errors import NumericalError, ValidationError
from ..tensor import PSD_TOLERANCE, TensorQ
from .sampling import stream


def symmetric_root(matrix: np.ndarray, tolerance: float = PSD_TOLERANCE) -> np.ndarray:
    """Q^{1/2} from the eigendecomposition; fails when Q is not PSD within ``tolerance`` relative."""
    try:
        eigenvalues, vectors = eigh(matrix)
    except LinAlgError as e:
        raise NumericalError(f"Eigendecomposition failed: {e}") from e
    top = max(float(eigenvalues[-1]), 0.0)
    if eigenvalues[0] < -tolerance * max(top, 1e-300):
        raise ValidationError(f"Covariance is not PSD: min eigenvalue {eigenvalues[0]:.3g}, max {top:.3g}")
    return (vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))[None, :]) @ vectors.T


def gaussian_gram_surrogate(Q: Union[TensorQ, np.ndarray], n: int, seed: int = 0) -> np.ndarray:
    """
    G G^T / dim with the n rows of G drawn i.i.d. from N(0, Q).

    Args:
        Q: A TensorQ or a symmetric PSD matrix
        n: Number of rows
        seed: Seed of the surrogate stream

    Returns:
        n x n Gram matrix
    """
    matrix = Q.flat if isinstance(Q, TensorQ) else np.asarray(Q, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"Expected a square covariance, got shape {matrix.shape}")
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    dim = matrix.shape[0]
    root = symmetric_root(matrix)
    rows = stream(seed, "surrogate").standard_normal((n, dim)) @ root
    gram = rows @ rows.T / dim
    return 0.5 * (gram + gram.T)
