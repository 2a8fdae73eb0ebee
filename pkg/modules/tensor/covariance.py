"""
The covariance tensors Q-hat and Q on R^d ⊗ R^p as dense dp x dp matrices.

Index convention: the pair (q, r) with q < d, r < p is row q * p + r.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh

from ..errors import NumericalError, ResourceCapError, ValidationError
from ..measures import SpectralMeasure

DEFAULT_DP_CAP = 6000
SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class TensorQ:
    """A built tensor and the sample it came from; ``D`` is None for Q-hat."""

    d: int
    p: int
    alpha: float
    beta: float
    flat: np.ndarray
    W: np.ndarray
    D: Optional[np.ndarray] = None
    mu4: Optional[float] = None

    def __post_init__(self):
        if self.flat.shape != (self.dim, self.dim):
            raise ValidationError(f"Tensor of shape {self.flat.shape} does not match d={self.d}, p={self.p}")
        for name in ("flat", "W", "D"):
            value = getattr(self, name)
            if value is not None:
                value.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.d * self.p

    @property
    def alpha_sq_over_d(self) -> float:
        return self.alpha**2 / self.d

    @property
    def beta_sq(self) -> float:
        return self.beta**2

    @property
    def is_qhat(self) -> bool:
        return self.D is None

    def entry(self, q: int, r: int, s: int, t: int) -> float:
        return float(self.flat[q * self.p + r, s * self.p + t])

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.flat - self.flat.T))) if self.dim else 0.0

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the dense matrix."""
        try:
            return eigvalsh(self.flat)
        except LinAlgError as e:
            raise NumericalError(f"Eigensolve of the {self.dim} x {self.dim} tensor failed: {e}") from e

    def psd_violation(self, eigenvalues: Optional[np.ndarray] = None) -> float:
        """-min eigenvalue / max eigenvalue, positive when PSD fails by that relative amount."""
        eigs = self.eigenvalues() if eigenvalues is None else eigenvalues
        scale = max(abs(eigs[-1]), 1e-300)
        return float(-eigs[0] / scale)

    def esd(self, bandwidth: Optional[float] = None) -> SpectralMeasure:
        return SpectralMeasure.from_samples(self.eigenvalues(), bandwidth)

    def header(self) -> Dict[str, Any]:
        kind = "qhat" if self.is_qhat else "q"
        return {"d": self.d, "p": self.p, "alpha": self.alpha, "beta": self.beta, "kind": kind}


def _check_cap(d: int, p: int, cap: int):
    if d * p > cap:
        raise ResourceCapError(f"dp = {d * p} exceeds the tensor cap of {cap}")


def as_weight_matrix(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or min(W.shape) < 1:
        raise ValidationError(f"W must be a non-empty d x p matrix, got shape {W.shape}")
    return W


def _fill_qhat(W: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    d, p = W.shape
    scale = alpha**2 / d
    gram = W.T @ W
    gram = 0.5 * (gram + gram.T)
    flat = np.empty((d * p, d * p))
    blocks = flat.reshape(d, p, d, p)
    # one row block q at a time keeps the peak memory at a single dp x dp array
    for q in range(d):
        np.multiply.outer(W[q], W, out=blocks[q].transpose(2, 1, 0))
        blocks[q] *= scale
        blocks[q, :, q, :] += scale * gram
    flat[np.diag_indices(d * p)] += beta**2
    return flat


def build_qhat(W, alpha: float, beta: float, cap: int = DEFAULT_DP_CAP) -> TensorQ:
    """
    Q-hat with entries (alpha^2/d)[delta_qs (W^T W)_rt + W_qt W_sr] + beta^2 delta_qs delta_rt.

    Args:
        W: d x p weights
        alpha: Linear Hermite coefficient
        beta: Residual standard deviation
        cap: Largest allowed dp

    Returns:
        TensorQ without D
    """
    W = as_weight_matrix(W)
    d, p = W.shape
    _check_cap(d, p, cap)
    return TensorQ(d=d, p=p, alpha=float(alpha), beta=float(beta), flat=_fill_qhat(W, alpha, beta), W=W.copy())


def build_q(W, D, alpha: float, beta: float, cap: int = DEFAULT_DP_CAP, mu4: Optional[float] = None) -> TensorQ:
    """
    Q = D Q-hat D, with D acting on the p factor.

    Args:
        W: d x p weights
        D: Length-p diagonal
        alpha: Linear Hermite coefficient
        beta: Residual standard deviation
        cap: Largest allowed dp
        mu4: If given, adds the finite-size remainder (alpha^2/d) mu4 (WD)_qr (WD)_qt on the (q, r), (q, t) entries

    Returns:
        TensorQ carrying D
    """
    W = as_weight_matrix(W)
    D = np.asarray(D, dtype=float).ravel()
    d, p = W.shape
    if D.size != p:
        raise ValidationError(f"D has {D.size} entries, W has {p} columns")
    _check_cap(d, p, cap)

    flat = _fill_qhat(W, alpha, beta)
    dvec = np.tile(D, d)
    flat *= dvec[:, None]
    flat *= dvec[None, :]

    if mu4 is not None:
        scaled = W * D[None, :]
        blocks = flat.reshape(d, p, d, p)
        for q in range(d):
            blocks[q, :, q, :] += (alpha**2 / d) * mu4 * np.outer(scaled[q], scaled[q])

    return TensorQ(d=d, p=p, alpha=float(alpha), beta=float(beta), flat=flat, W=W.copy(), D=D.copy(), mu4=mu4)


def apply_qhat(W, X, alpha: float, beta: float) -> np.ndarray:
    """Q-hat acting on a d x p matrix: (alpha^2/d)(X W^T W + W X^T W) + beta^2 X."""
    W = as_weight_matrix(W)
    X = np.asarray(X)
    if X.shape != W.shape:
        raise ValidationError(f"X of shape {X.shape} does not match W of shape {W.shape}")
    d = W.shape[0]
    return (alpha**2 / d) * (X @ (W.T @ W) + W @ X.T @ W) + beta**2 * X
