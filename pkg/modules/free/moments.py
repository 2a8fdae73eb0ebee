"""Trace moments of Q: the composition-sum prediction and its direct counterparts."""

from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import eigvalsh

from ..errors import DomainError, ValidationError

MAX_ORDER = 8


@lru_cache(maxsize=None)
def compositions(total: int, parts: int) -> Tuple[Tuple[int, ...], ...]:
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        return ((total,),) if total >= 1 else ()
    out = []
    for first in range(1, total - parts + 2):
        out.extend((first,) + rest for rest in compositions(total - first, parts - 1))
    return tuple(out)


def _canonical_rotation(word: Tuple[int, ...]) -> Tuple[int, ...]:
    return min(word[i:] + word[:i] for i in range(len(word)))


def moment_inputs(W: np.ndarray, D: np.ndarray, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    H and G = (alpha^2/d) D W^T W D from one sample, with H = beta^2 D^2 + G.

    Args:
        W: d x p weight matrix
        D: Length-p diagonal
        alpha: Linear Hermite coefficient
        beta: Residual standard deviation

    Returns:
        (H, G), both p x p
    """
    W = np.asarray(W, dtype=float)
    D = np.asarray(D, dtype=float).ravel()
    if W.ndim != 2 or W.shape[1] != D.size:
        raise ValidationError(f"W of shape {W.shape} does not match D of length {D.size}")
    d = W.shape[0]
    gram = (alpha**2 / d) * (D[:, None] * (W.T @ W) * D[None, :])
    return beta**2 * np.diag(D**2) + gram, gram


class _TraceWords:
    """Tr(H^{n_1 - 1} G ... H^{n_l - 1} G), cached per cyclic class of the word n."""

    def __init__(self, H: np.ndarray, gram: np.ndarray, max_power: int):
        self.gram = gram
        self.powers = [np.eye(H.shape[0])]
        for _ in range(max_power):
            self.powers.append(self.powers[-1] @ H)
        self.cache: Dict[Tuple[int, ...], float] = {}

    def __call__(self, word: Tuple[int, ...]) -> float:
        key = _canonical_rotation(word)
        if key not in self.cache:
            product = np.eye(self.gram.shape[0])
            for n in key:
                product = product @ self.powers[n - 1] @ self.gram
            self.cache[key] = float(np.trace(product))
        return self.cache[key]


def q_moment_formula(H: np.ndarray, k: int, d: int, p: int, gram: np.ndarray) -> float:
    """
    Prediction for (1/pd) Tr(Q^k).

    (1/p) Tr(H^k) + (1/dp) sum over pairs of compositions (n, n') with the same
    number of parts and |n| + |n'| = k of n_1 Tr[M(n)] Tr[M(n')], where
    Tr[M(n_1) ... M(n_l)] = Tr(H^{n_1 - 1} G ... H^{n_l - 1} G).

    Args:
        H: p x p matrix beta^2 D^2 + G
        k: Moment order, 1..8
        d: Input dimension
        p: Width
        gram: G = (alpha^2/d) D W^T W D from the same sample

    Returns:
        Predicted normalized trace moment
    """
    if not 1 <= k <= MAX_ORDER:
        raise DomainError(f"Moment order must lie in 1..{MAX_ORDER}, got {k}")
    H = np.asarray(H, dtype=float)
    if H.shape != (p, p) or np.shape(gram) != (p, p):
        raise ValidationError(f"H and G must be {p} x {p}")

    traces = _TraceWords(H, np.asarray(gram, dtype=float), k)
    value = float(np.trace(traces.powers[k])) / p
    cross = 0.0
    for parts in range(1, k // 2 + 1):
        for left_total in range(parts, k - parts + 1):
            right = compositions(k - left_total, parts)
            for word in compositions(left_total, parts):
                left = word[0] * traces(word)
                cross += left * sum(traces(other) for other in right)
    return value + cross / (d * p)


def moment_formula_binomial(h_eigs: np.ndarray, k: int, gamma2: float) -> float:
    """(1 - g) E[A^k] + (g/2) E[(A + B)^k] with A, B independent draws from the eigenvalues of H."""
    h = np.asarray(h_eigs, dtype=float).ravel()
    pair_sums = h[:, None] + h[None, :]
    return float((1.0 - gamma2) * np.mean(h**k) + 0.5 * gamma2 * np.mean(pair_sums**k))


def direct_moment(Q: np.ndarray, k: int) -> float:
    """(1/dim) Tr(Q^k) from the eigenvalues of a symmetric matrix."""
    return float(np.mean(eigvalsh(Q) ** k))
