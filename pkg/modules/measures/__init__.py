"""Spectral measures: atoms plus gridded densities and their algebra"""

from .algebra import affine, cdf, convolve_classical, mixture, quantile, quantiles, stieltjes, superpose
from .distances import distance_ks, distance_w1, ks_samples, w1_samples
from .io import (
    load_measure_csv,
    load_measure_json,
    measure_from_dict,
    measure_to_dict,
    measure_to_frames,
    save_measure_csv,
    save_measure_json,
)
from .measure import ATOM_MERGE_TOLERANCE, DEFAULT_GRID_POINTS, MASS_TOLERANCE, MIN_ATOM_MASS, Grid, SpectralMeasure

__all__ = [
    "Grid",
    "SpectralMeasure",
    "DEFAULT_GRID_POINTS",
    "MASS_TOLERANCE",
    "ATOM_MERGE_TOLERANCE",
    "MIN_ATOM_MASS",
    "stieltjes",
    "convolve_classical",
    "affine",
    "mixture",
    "superpose",
    "cdf",
    "quantile",
    "quantiles",
    "distance_ks",
    "distance_w1",
    "w1_samples",
    "ks_samples",
    "measure_to_dict",
    "measure_from_dict",
    "save_measure_json",
    "load_measure_json",
    "measure_to_frames",
    "save_measure_csv",
    "load_measure_csv",
]
