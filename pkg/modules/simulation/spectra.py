"""Eigenvalues of symmetric matrices, batched over seeds."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence, TypeVar

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh

from ..errors import NumericalError, ValidationError
from ..measures import SpectralMeasure

logger = logging.getLogger(__name__)

T = TypeVar("T")


def spectrum(matrix: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"Expected a square matrix, got shape {matrix.shape}")
    try:
        return eigvalsh(matrix, check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise NumericalError(f"Eigensolve failed: {e}") from e


def run_seeds(seeds: Sequence[int], task: Callable[[int], T], jobs: int = 1) -> Dict[int, T]:
    """
    Run ``task(seed)`` for every seed, up to ``jobs`` at a time.

    Each task draws from its own seed's streams, so the result does not depend
    on scheduling order.
    """
    if jobs < 1:
        raise ValidationError(f"jobs must be at least 1, got {jobs}")
    if jobs == 1 or len(seeds) <= 1:
        return {seed: task(seed) for seed in seeds}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {seed: pool.submit(task, seed) for seed in seeds}
        return {seed: futures[seed].result() for seed in seeds}


def pooled_esd(eigenvalue_sets: List[np.ndarray]) -> SpectralMeasure:
    """Mean ESD over seeds: every eigenvalue of every run as an equal-mass atom."""
    if not eigenvalue_sets:
        raise ValidationError("No spectra to pool")
    sizes = {len(e) for e in eigenvalue_sets}
    if len(sizes) != 1:
        raise ValidationError(f"Spectra of different sizes cannot be averaged: {sorted(sizes)}")
    return SpectralMeasure.from_atoms(np.concatenate(eigenvalue_sets))


def zero_fraction(eigenvalues: np.ndarray, relative_tolerance: float = 1e-6) -> float:
    """Fraction of eigenvalues within ``relative_tolerance * max |lambda|`` of 0."""
    scale = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    if scale == 0:
        return 1.0 if len(eigenvalues) else 0.0
    return float(np.mean(np.abs(eigenvalues) <= relative_tolerance * scale))
