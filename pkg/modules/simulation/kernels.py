"""The four n x n kernels of the model: K, the conjugate kernel, the NTK and K-tilde."""

from enum import Enum
from typing import Dict, Optional

import numpy as np

from ..activations import Activation, ActivationStats, hermite_stats
from ..errors import ValidationError
from .sampling import SampledModel
from .spectra import spectrum


class KernelKind(Enum):
    """Kernels an experiment can simulate."""

    K = "k"
    K_NTK = "k_ntk"
    K_TILDE = "k_tilde"
    K_CK = "k_ck"


def _symmetric(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def _hadamard_kernel(model: SampledModel, features: np.ndarray) -> np.ndarray:
    """(XX^T / d) ⊙ (F D^2 F^T / p), each factor built on its own."""
    data_gram = model.X @ model.X.T / model.d
    feature_gram = (features * model.d2[None, :]) @ features.T / model.p
    return _symmetric(data_gram * feature_gram)


def build_k(model: SampledModel, phi: Activation) -> np.ndarray:
    """K = (XX^T/d) ⊙ (Y D^2 Y^T / p) with Y = phi(XW/sqrt(d))."""
    return _hadamard_kernel(model, phi.evaluate(model.preactivations()))


def build_k_ck(model: SampledModel, phi: Activation) -> np.ndarray:
    """Conjugate kernel sigma(XW/sqrt(d)) sigma(XW/sqrt(d))^T / p."""
    features = phi.evaluate_sigma(model.preactivations())
    return _symmetric(features @ features.T / model.p)


def build_k_ntk(model: SampledModel, phi: Activation) -> np.ndarray:
    """NTK Gram matrix: conjugate kernel plus K."""
    return build_k_ck(model, phi) + build_k(model, phi)


def build_k_tilde(model: SampledModel, phi: Activation, stats: Optional[ActivationStats] = None) -> np.ndarray:
    """
    K with phi(XW/sqrt(d)) replaced by alpha XW/sqrt(d) + psi(X-tilde).

    psi = phi - c - alpha x and X-tilde is a fresh n x p Gaussian matrix, so the
    constant mode c is dropped and the nonlinear part decoupled from X.
    """
    stats = stats or hermite_stats(phi)
    x_tilde = model.x_tilde()
    psi = phi.evaluate(x_tilde) - stats.c - stats.alpha * x_tilde
    return _hadamard_kernel(model, stats.alpha * model.preactivations() + psi)


class KernelEnsemble:
    """Kernels of one sampled model, built on first use and cached with their spectra."""

    def __init__(self, model: SampledModel, phi: Activation, stats: Optional[ActivationStats] = None):
        self.model = model
        self.phi = phi
        self._stats = stats
        self._kernels: Dict[KernelKind, np.ndarray] = {}
        self._eigenvalues: Dict[KernelKind, np.ndarray] = {}

    @property
    def stats(self) -> ActivationStats:
        if self._stats is None:
            self._stats = hermite_stats(self.phi)
        return self._stats

    def kernel(self, kind: KernelKind) -> np.ndarray:
        if kind not in self._kernels:
            if kind is KernelKind.K:
                self._kernels[kind] = build_k(self.model, self.phi)
            elif kind is KernelKind.K_CK:
                self._kernels[kind] = build_k_ck(self.model, self.phi)
            elif kind is KernelKind.K_NTK:
                self._kernels[kind] = self.kernel(KernelKind.K_CK) + self.kernel(KernelKind.K)
            elif kind is KernelKind.K_TILDE:
                self._kernels[kind] = build_k_tilde(self.model, self.phi, self.stats)
            else:
                raise ValidationError(f"Unknown kernel kind {kind}")
        return self._kernels[kind]

    def eigenvalues(self, kind: KernelKind) -> np.ndarray:
        if kind not in self._eigenvalues:
            self._eigenvalues[kind] = spectrum(self.kernel(kind))
        return self._eigenvalues[kind]

    def ntk_identity_error(self) -> float:
        """max |K_ntk - K - K_ck|."""
        residual = self.kernel(KernelKind.K_NTK) - self.kernel(KernelKind.K) - self.kernel(KernelKind.K_CK)
        return float(np.max(np.abs(residual)))

    def ck_rank(self, tolerance: float = 1e-9) -> int:
        eigs = self.eigenvalues(KernelKind.K_CK)
        return int(np.count_nonzero(eigs > tolerance * max(eigs[-1], 1e-300)))

    def release(self, kind: KernelKind):
        """Drop a cached matrix, keeping its eigenvalues."""
        self._kernels.pop(kind, None)
