"""Distances between probability measures and between eigenvalue samples."""

from typing import Sequence

import numpy as np
from scipy.stats import ks_2samp, wasserstein_distance

from .algebra import breakpoints, cdf_values
from .measure import SpectralMeasure


def _cdfs_on_union(mu_a: SpectralMeasure, mu_b: SpectralMeasure):
    xs = breakpoints(mu_a, mu_b)
    return xs, cdf_values(mu_a, xs), cdf_values(mu_b, xs)


def distance_ks(mu_a: SpectralMeasure, mu_b: SpectralMeasure) -> float:
    """
    Kolmogorov-Smirnov distance sup |F_A - F_B|.

    Both right-continuous values and left limits at every breakpoint of the
    union grid are compared, so jumps at atoms are seen from both sides.
    """
    mu_a.require_normalized("first measure")
    mu_b.require_normalized("second measure")
    xs, cdf_a, cdf_b = _cdfs_on_union(mu_a, mu_b)
    left_a = cdf_values(mu_a, xs, side="left")
    left_b = cdf_values(mu_b, xs, side="left")
    return float(max(np.max(np.abs(cdf_a - cdf_b)), np.max(np.abs(left_a - left_b))))


def distance_w1(mu_a: SpectralMeasure, mu_b: SpectralMeasure) -> float:
    """Wasserstein-1 distance, the integral of |F_A - F_B| (midpoint rule between breakpoints)."""
    mu_a.require_normalized("first measure")
    mu_b.require_normalized("second measure")
    xs = breakpoints(mu_a, mu_b)
    if xs.size < 2:
        return 0.0
    mids = 0.5 * (xs[1:] + xs[:-1])
    gap = np.abs(cdf_values(mu_a, mids) - cdf_values(mu_b, mids))
    return float(np.sum(gap * np.diff(xs)))


def w1_samples(values_a: Sequence[float], values_b: Sequence[float]) -> float:
    """W1 between two empirical spectra."""
    return float(wasserstein_distance(np.asarray(values_a, dtype=float), np.asarray(values_b, dtype=float)))


def ks_samples(values_a: Sequence[float], values_b: Sequence[float]) -> float:
    """Two-sample KS statistic between two empirical spectra."""
    return float(ks_2samp(np.asarray(values_a, dtype=float), np.asarray(values_b, dtype=float)).statistic)
