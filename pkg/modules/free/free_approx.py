"""
Finite-dimensional approximation of the limit law of Q for general (nu, phi).

The Stieltjes transform of the limit resums the trace-moment expansion into

    f(w) = tau(R) + gamma2 * tau⊗tau[(R ⊗ 1)(A ⊗ A)(1 - A ⊗ A)^{-1}],
    R = (X - w)^{-1},  A = R Y,

with X = beta^2 D + gamma2 alpha^2 D P and Y = gamma2 alpha^2 D P, where D is
diagonal with entries distributed as nu and P is free from D with the law of
W^T W / p (W of size d x p, d = p / gamma2). tau is approximated by the
normalized trace at a finite dimension and averaged over replicas.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from ..activations import ActivationStats
from ..errors import NumericalError, ValidationError
from ..measures import Grid, SpectralMeasure, quantiles
from .marchenko_pastur import INVERSIONS, RICHARDSON, finish_density, inversion_kernel, invert_density

logger = logging.getLogger(__name__)

MIN_DIM = 32
DENSE_DIM_LIMIT = 256
STRATEGIES = ("auto", "dense", "stochastic")
ATOM_THRESHOLD = 1e-3
MAX_NEGATIVE_MASS = 1e-2
_BATCH = 64


@dataclass(frozen=True)
class FreeApproxConfig:
    """Settings of the finite free approximation and of its Stieltjes inversion."""

    dim: int = 64
    replicas: int = 8
    strategy: str = "auto"
    probes: int = 64
    solver_tolerance: float = 1e-8
    grid_points: int = 1024
    grid: Optional[Grid] = None
    eta: Optional[float] = None
    eta_relative: float = 2.5e-3
    inversion: str = RICHARDSON
    condition_limit: float = 1e10
    seed: int = 0

    def __post_init__(self):
        if self.dim < MIN_DIM:
            raise ValidationError(f"Free approximation dimension must be at least {MIN_DIM}, got {self.dim}")
        if self.replicas < 1:
            raise ValidationError("At least one replica is needed")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"Unknown strategy '{self.strategy}', expected one of {STRATEGIES}")
        if self.inversion not in INVERSIONS:
            raise ValidationError(f"Unknown inversion '{self.inversion}'")
        if self.probes < 1:
            raise ValidationError("At least one probe is needed")
        if self.eta is not None and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")

    @property
    def resolved_strategy(self) -> str:
        if self.strategy != "auto":
            return self.strategy
        return "dense" if self.dim <= DENSE_DIM_LIMIT else "stochastic"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["grid"] = self.grid.to_dict() if self.grid is not None else None
        return data


@dataclass
class FreeApproxDiagnostics:
    strategy: str
    dim: int
    replicas: int
    eta: float
    grid_points: int
    herglotz_violations: int = 0
    kronecker_fallbacks: int = 0
    atoms: List[Tuple[float, float]] = field(default_factory=list)
    clipped_points: int = 0
    negative_mass: float = 0.0
    mass_deficit: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class FreeApprox:
    """
    One finite sample (D, P) and the matrices X, Y derived from it.

    Args:
        d_sample: Diagonal of D (values distributed as nu)
        p_matrix: Wishart-type matrix with the law of W^T W / p
        gamma2: Aspect ratio p/d
        stats: Activation statistics (alpha, beta^2)
    """

    def __init__(self, d_sample: np.ndarray, p_matrix: np.ndarray, gamma2: float, stats: ActivationStats):
        self.d_sample = np.asarray(d_sample, dtype=float)
        self.p_matrix = np.asarray(p_matrix, dtype=float)
        self.gamma2 = float(gamma2)
        self.stats = stats
        dp = self.d_sample[:, None] * self.p_matrix
        self.y = gamma2 * stats.alpha_sq * dp
        self.x = stats.beta_sq * np.diag(self.d_sample) + self.y

    @property
    def dim(self) -> int:
        return self.d_sample.size

    @classmethod
    def sample(
        cls, nu: SpectralMeasure, gamma2: float, stats: ActivationStats, dim: int, rng: np.random.Generator
    ) -> "FreeApprox":
        """Stratified nu-quantiles for D, a fresh Gaussian W for P."""
        if dim < MIN_DIM:
            raise ValidationError(f"Free approximation dimension must be at least {MIN_DIM}, got {dim}")
        if not gamma2 > 0:
            raise ValidationError(f"gamma2 must be positive, got {gamma2}")
        nu.require_normalized("nu")
        if nu.support()[0] < 0:
            raise ValidationError("nu must be supported on [0, inf)")

        d_sample = quantiles(nu, (np.arange(dim) + 0.5) / dim)
        rows = max(1, int(round(dim / gamma2)))
        w = rng.standard_normal((rows, dim))
        return cls(d_sample, w.T @ w / dim, gamma2, stats)

    def resolvent(self, w: np.ndarray) -> np.ndarray:
        """Batch of (X - w)^{-1} for the points ``w``."""
        eye = np.eye(self.dim)
        shifted = self.x[None, :, :] - w[:, None, None] * eye[None, :, :]
        try:
            return np.linalg.inv(shifted)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"X - w is singular at Im w > 0: {e}") from e

    def stieltjes_dense(self, w: np.ndarray, condition_limit: float = 1e10) -> Tuple[np.ndarray, int]:
        """
        f(w) through the eigenbasis of A = R Y.

        With A = V diag(l) V^{-1}, the tensor term is
        (1/p^2) sum_ij c_i l_i l_j / (1 - l_i l_j), c = diag(V^{-1} R V).
        Points whose eigenbasis is ill-conditioned use the explicit p^2 x p^2 solve.

        Returns:
            (values, number of Kronecker fallbacks)
        """
        p = self.dim
        resolvent = self.resolvent(w)
        a = resolvent @ self.y
        trace_r = np.trace(resolvent, axis1=1, axis2=2) / p

        eigenvalues, vectors = np.linalg.eig(a)
        conditions = np.linalg.cond(vectors)
        good = np.isfinite(conditions) & (conditions < condition_limit)

        tensor_term = np.zeros(w.size, dtype=complex)
        if np.any(good):
            inv_vectors = np.linalg.inv(vectors[good])
            c = np.einsum("bij,bjk,bki->bi", inv_vectors, resolvent[good], vectors[good])
            lam = eigenvalues[good]
            products = lam[:, :, None] * lam[:, None, :]
            tensor_term[good] = np.sum(c[:, :, None] * products / (1.0 - products), axis=(1, 2)) / p**2

        fallbacks = np.flatnonzero(~good)
        for b in fallbacks:
            tensor_term[b] = self._tensor_term_kronecker(resolvent[b], a[b])
        return trace_r + self.gamma2 * tensor_term, int(fallbacks.size)

    def _tensor_term_kronecker(self, resolvent: np.ndarray, a: np.ndarray) -> complex:
        p = self.dim
        kron = np.kron(a, a)
        try:
            m = np.linalg.solve(np.eye(p * p) - kron, kron)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Kronecker system is singular: {e}") from e
        return complex(np.einsum("ij,jkik->", resolvent, m.reshape(p, p, p, p)) / p**2)

    def stieltjes_stochastic(
        self, w: np.ndarray, probes: int, tolerance: float, rng: np.random.Generator
    ) -> np.ndarray:
        """f(w) with the tensor term estimated by Hutchinson probes and GMRES solves of (1 - A⊗A) u = (A⊗A) z."""
        p = self.dim
        resolvent = self.resolvent(w)
        values = np.trace(resolvent, axis1=1, axis2=2) / p
        for b in range(w.size):
            r, a = resolvent[b], resolvent[b] @ self.y

            def matvec(v, a=a):
                block = v.reshape(p, p)
                return (block - a @ block @ a.T).ravel()

            operator = LinearOperator((p * p, p * p), matvec=matvec, dtype=complex)
            total = 0.0j
            for _ in range(probes):
                z = rng.choice([-1.0, 1.0], size=(p, p))
                rhs = (a @ z @ a.T).ravel()
                u, info = gmres(operator, rhs, rtol=tolerance, atol=0.0, restart=min(p * p, 60), maxiter=200)
                if info != 0:
                    logger.debug("gmres did not reach tolerance at w=%s (info=%s)", w[b], info)
                total += np.sum(z * (r @ u.reshape(p, p)))
            values[b] += self.gamma2 * total / (probes * p**2)
        return values

    def stieltjes(self, w, strategy: str = "dense", probes: int = 64, tolerance: float = 1e-8, rng=None):
        """f(w) by the requested strategy; scalar in, scalar out."""
        points = np.atleast_1d(np.asarray(w, dtype=complex))
        if strategy == "stochastic":
            values = self.stieltjes_stochastic(points, probes, tolerance, rng or np.random.default_rng(0))
        else:
            values, _ = self.stieltjes_dense(points)
        return complex(values[0]) if np.ndim(w) == 0 else values

    def support_bound(self) -> float:
        """Upper bound beta^2 max D + 2 lambda_max(Y) for the limit support."""
        lam = np.linalg.eigvals(self.y).real
        return float(self.stats.beta_sq * self.d_sample.max() + 2.0 * max(lam.max(), 0.0))


def _atom_candidates(nu: SpectralMeasure, stats: ActivationStats) -> List[float]:
    candidates = [0.0] + [stats.beta_sq * t for t in nu.atom_locations]
    return sorted(set(round(c, 12) for c in candidates))


def q_limit_general_with_diagnostics(
    nu: SpectralMeasure, gamma2: float, stats: ActivationStats, cfg: Optional[FreeApproxConfig] = None
) -> Tuple[SpectralMeasure, FreeApproxDiagnostics]:
    """
    Limit law of Q for arbitrary (nu, phi) from the finite free approximation.

    Args:
        nu: Normalized measure on [0, inf)
        gamma2: Aspect ratio p/d
        stats: Activation statistics
        cfg: Approximation and inversion settings

    Returns:
        (measure, diagnostics)
    """
    cfg = cfg or FreeApproxConfig()
    rng = np.random.default_rng(cfg.seed)
    approximations = [FreeApprox.sample(nu, gamma2, stats, cfg.dim, rng) for _ in range(cfg.replicas)]

    hi = max(a.support_bound() for a in approximations)
    if hi <= 0:
        return SpectralMeasure.delta(0.0), FreeApproxDiagnostics(cfg.resolved_strategy, cfg.dim, cfg.replicas, 0.0, 0)
    grid = cfg.grid or Grid.spanning(0.0, hi, cfg.grid_points, floor=0.0)
    eta = cfg.eta or cfg.eta_relative * max(abs(grid.start), abs(grid.stop))
    strategy = cfg.resolved_strategy
    diagnostics = FreeApproxDiagnostics(strategy, cfg.dim, cfg.replicas, eta, grid.n)

    def averaged(w: np.ndarray) -> np.ndarray:
        total = np.zeros(w.size, dtype=complex)
        for approx in approximations:
            for start in range(0, w.size, _BATCH):
                chunk = w[start : start + _BATCH]
                if strategy == "dense":
                    values, fallbacks = approx.stieltjes_dense(chunk, cfg.condition_limit)
                    diagnostics.kronecker_fallbacks += fallbacks
                else:
                    values = approx.stieltjes_stochastic(chunk, cfg.probes, cfg.solver_tolerance, rng)
                total[start : start + _BATCH] += values
        return total / len(approximations)

    points = grid.points
    offsets = [eta] if cfg.inversion != RICHARDSON else [eta, 2 * eta]
    imag_parts = []
    for offset in offsets:
        values = averaged(points + 1j * offset)
        diagnostics.herglotz_violations += int(np.count_nonzero(values.imag <= 0))
        imag_parts.append(values.imag)

    epsilon = 1e-6 * max(hi, 1.0)
    candidates = np.array(_atom_candidates(nu, stats), dtype=float)
    near_axis = averaged(candidates + 1j * epsilon)
    masses = np.clip(epsilon * near_axis.imag, 0.0, 1.0)
    keep = masses >= ATOM_THRESHOLD
    atom_locs, atom_masses = candidates[keep], masses[keep]
    if atom_masses.sum() > 1.0:
        atom_masses = atom_masses / atom_masses.sum()
    diagnostics.atoms = [(float(x), float(m)) for x, m in zip(atom_locs, atom_masses)]

    density = invert_density(imag_parts[0], imag_parts[-1], cfg.inversion)
    for loc, mass in zip(atom_locs, atom_masses):
        density = density - mass * inversion_kernel(points - loc, eta, cfg.inversion)
    measure, report = finish_density(grid, density, atom_locs, atom_masses, "free approximation")
    diagnostics.clipped_points = report.clipped_points
    diagnostics.negative_mass = report.negative_mass
    diagnostics.mass_deficit = report.mass_deficit
    if report.negative_mass > MAX_NEGATIVE_MASS:
        raise NumericalError(f"Inverted density has negative mass {report.negative_mass:.3g}")
    if diagnostics.herglotz_violations:
        logger.warning("Im f(w) <= 0 at %d grid points", diagnostics.herglotz_violations)
    return measure, diagnostics


def q_limit_general(
    nu: SpectralMeasure, gamma2: float, stats: ActivationStats, cfg: Optional[FreeApproxConfig] = None
) -> SpectralMeasure:
    """Limit law of Q for arbitrary (nu, phi); see ``q_limit_general_with_diagnostics``."""
    measure, _ = q_limit_general_with_diagnostics(nu, gamma2, stats, cfg)
    return measure
