"""Exact spectrum of Q-hat from the SVD of W, and numerical checks against the dense matrix."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh

from ..errors import NumericalError, ValidationError
from ..measures import SpectralMeasure
from .covariance import DEFAULT_DP_CAP, as_weight_matrix, build_qhat


@dataclass(frozen=True, eq=False)
class ExactSpectrum:
    """
    The eigenvalues of Q-hat in three families.

    paired: (alpha^2/d)(s_i + s_j) + beta^2 for i <= j < min(d, p), s = squared singular values
    tail: (alpha^2/d) s_j + beta^2, once per left singular vector beyond p (only when d > p)
    kernel: beta^2 with the remaining multiplicity
    """

    d: int
    p: int
    paired: np.ndarray
    tail: np.ndarray
    kernel_value: float
    kernel_multiplicity: int

    def __post_init__(self):
        if self.paired.size + self.tail.size + self.kernel_multiplicity != self.d * self.p:
            raise ValidationError("Eigenvalue families do not add up to dp")

    def eigenvalues(self) -> np.ndarray:
        """Full multiset, ascending."""
        kernel = np.full(self.kernel_multiplicity, self.kernel_value)
        return np.sort(np.concatenate([self.paired, self.tail, kernel]))

    def to_measure(self) -> SpectralMeasure:
        return SpectralMeasure.from_atoms(self.eigenvalues())

    def summary(self) -> Dict[str, Any]:
        return {
            "paired": int(self.paired.size),
            "tail": int(self.tail.size),
            "kernel_multiplicity": self.kernel_multiplicity,
            "kernel_value": self.kernel_value,
        }


def exact_qhat_spectrum(W, alpha: float, beta: float) -> ExactSpectrum:
    """Spectrum of Q-hat from the singular values of W."""
    W = as_weight_matrix(W)
    d, p = W.shape
    m = min(d, p)
    s2 = np.linalg.svd(W, compute_uv=False) ** 2
    scale = alpha**2 / d
    beta_sq = beta**2

    i, j = np.triu_indices(m)
    paired = scale * (s2[i] + s2[j]) + beta_sq
    tail = np.repeat(scale * s2 + beta_sq, d - p) if d > p else np.zeros(0)
    kernel = d * p - paired.size - tail.size
    return ExactSpectrum(d=d, p=p, paired=paired, tail=tail, kernel_value=beta_sq, kernel_multiplicity=kernel)


def max_spectrum_error(W, alpha: float, beta: float, cap: int = DEFAULT_DP_CAP) -> float:
    """Largest gap between the sorted exact and numeric eigenvalues of Q-hat."""
    exact = exact_qhat_spectrum(W, alpha, beta).eigenvalues()
    numeric = build_qhat(W, alpha, beta, cap).eigenvalues()
    return float(np.max(np.abs(exact - numeric)))


@dataclass
class EigenvectorReport:
    """Residuals ||Q-hat x - lambda x|| of the closed-form eigenvectors, x normalized."""

    checked: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((c["residual"] for c in self.checked), default=0.0)

    def passed(self, tolerance: float = 1e-8) -> bool:
        return self.max_residual <= tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {"max_residual": self.max_residual, "checked": self.checked}


def _eigenvector_families(
    U: np.ndarray, s: np.ndarray, V: np.ndarray, i: int, j: int, scale: float, beta_sq: float
) -> List[Tuple[str, np.ndarray, float]]:
    """Closed-form eigenvectors attached to the index pair (i, j)."""
    m = s.size
    d, p = U.shape[0], V.shape[0]
    out = []
    if i < m and j < m:
        ui, uj, vi, vj = U[:, i], U[:, j], V[:, i], V[:, j]
        if i == j:
            out.append(("paired", np.kron(ui, vi), 2 * scale * s[i] ** 2 + beta_sq))
        else:
            paired = s[j] * np.kron(ui, vj) + s[i] * np.kron(uj, vi)
            kernel = s[i] * np.kron(ui, vj) - s[j] * np.kron(uj, vi)
            out.append(("paired", paired, scale * (s[i] ** 2 + s[j] ** 2) + beta_sq))
            out.append(("kernel", kernel, beta_sq))
    if d > p and j < m:
        out.append(("tail", np.kron(U[:, m + (i % (d - m))], V[:, j]), scale * s[j] ** 2 + beta_sq))
    if p > d and i < m:
        out.append(("kernel", np.kron(U[:, i], V[:, m + (j % (p - m))]), beta_sq))
    return [(family, x / np.linalg.norm(x), value) for family, x, value in out if np.linalg.norm(x) > 0]


def verify_eigenvectors(
    W, alpha: float, beta: float, count: int = 10, rng: Optional[np.random.Generator] = None
) -> EigenvectorReport:
    """
    Check the closed-form eigenvectors of Q-hat on ``count`` random index pairs plus every diagonal pair.

    Args:
        W: d x p weights
        alpha: Linear Hermite coefficient
        beta: Residual standard deviation
        count: Number of off-diagonal pairs to sample (at most the number of paired eigenvalues)
        rng: Random generator for the sampled pairs

    Returns:
        EigenvectorReport
    """
    W = as_weight_matrix(W)
    d, p = W.shape
    m = min(d, p)
    if count > m * (m + 1) // 2:
        raise ValidationError(f"count {count} exceeds the {m * (m + 1) // 2} paired eigenvalues")
    rng = rng or np.random.default_rng(0)
    U, s, Vt = np.linalg.svd(W, full_matrices=True)
    V = Vt.T
    flat = build_qhat(W, alpha, beta).flat
    scale, beta_sq = alpha**2 / d, beta**2

    pairs = [(i, i) for i in range(m)]
    for _ in range(count):
        i, j = sorted(rng.integers(0, m, size=2))
        pairs.append((int(i), int(j)))

    report = EigenvectorReport()
    for i, j in pairs:
        for family, x, value in _eigenvector_families(U, s, V, i, j, scale, beta_sq):
            residual = float(np.linalg.norm(flat @ x - value * x))
            report.checked.append({"family": family, "i": i, "j": j, "eigenvalue": value, "residual": residual})
    return report


def esd_of(matrix, bandwidth: Optional[float] = None, symmetry_tolerance: float = 1e-10) -> SpectralMeasure:
    """
    Empirical spectral measure of a symmetric matrix.

    Args:
        matrix: Square symmetric matrix
        bandwidth: None for atoms of mass 1/dim, else Gaussian-smoothed density

    Returns:
        SpectralMeasure
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"Expected a square matrix, got shape {matrix.shape}")
    scale = max(float(np.max(np.abs(matrix))), 1.0)
    if np.max(np.abs(matrix - matrix.T)) > symmetry_tolerance * scale:
        raise ValidationError("Matrix is not symmetric")
    try:
        eigenvalues = eigvalsh(matrix)
    except LinAlgError as e:
        raise NumericalError(f"Eigensolve failed: {e}") from e
    return SpectralMeasure.from_samples(eigenvalues, bandwidth)
