"""Random-matrix simulation of the NTK model and its Gram surrogate"""

from .kernels import KernelEnsemble, KernelKind, build_k, build_k_ck, build_k_ntk, build_k_tilde
from .params import ModelParams, NuSpec, XLaw
from .sampling import STREAMS, SampledModel, sample_data, sample_model, stream
from .spectra import pooled_esd, run_seeds, spectrum, zero_fraction
from .surrogate import gaussian_gram_surrogate, symmetric_root

__all__ = [
    "XLaw",
    "NuSpec",
    "ModelParams",
    "STREAMS",
    "stream",
    "sample_data",
    "SampledModel",
    "sample_model",
    "KernelKind",
    "KernelEnsemble",
    "build_k",
    "build_k_ck",
    "build_k_ntk",
    "build_k_tilde",
    "spectrum",
    "run_seeds",
    "pooled_esd",
    "zero_fraction",
    "gaussian_gram_surrogate",
    "symmetric_root",
]
