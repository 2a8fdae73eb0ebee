"""Covariance tensors Q-hat and Q, their exact spectrum and eigenvector checks"""

from .covariance import DEFAULT_DP_CAP, PSD_TOLERANCE, SYMMETRY_TOLERANCE, TensorQ, apply_qhat, build_q, build_qhat
from .dump import load_tensor, save_tensor
from .spectrum import (
    EigenvectorReport,
    ExactSpectrum,
    esd_of,
    exact_qhat_spectrum,
    max_spectrum_error,
    verify_eigenvectors,
)

__all__ = [
    "DEFAULT_DP_CAP",
    "PSD_TOLERANCE",
    "SYMMETRY_TOLERANCE",
    "TensorQ",
    "build_qhat",
    "build_q",
    "apply_qhat",
    "ExactSpectrum",
    "exact_qhat_spectrum",
    "max_spectrum_error",
    "EigenvectorReport",
    "verify_eigenvectors",
    "esd_of",
    "save_tensor",
    "load_tensor",
]
