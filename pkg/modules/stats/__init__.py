"""Histogram, gap and comparison statistics for simulated spectra"""

from .gaps import GAP_DENSITY_THRESHOLD, GAP_MIN_STEPS, Gap, detect_gaps, gap_masses, has_disconnected_support
from .histograms import HISTOGRAM_COLUMNS, freedman_diaconis_edges, histogram_frame
from .summary import ComparisonMetrics, compare_spectra, continuous_theory, excise_smallest

__all__ = [
    "HISTOGRAM_COLUMNS",
    "freedman_diaconis_edges",
    "histogram_frame",
    "GAP_DENSITY_THRESHOLD",
    "GAP_MIN_STEPS",
    "Gap",
    "detect_gaps",
    "has_disconnected_support",
    "gap_masses",
    "ComparisonMetrics",
    "compare_spectra",
    "continuous_theory",
    "excise_smallest",
]
