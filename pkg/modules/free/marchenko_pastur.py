"""Marchenko-Pastur laws and the MP map, solved as a Stieltjes fixed point."""

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from ..errors import DomainError, SolverError, ValidationError
from ..measures import ATOM_MERGE_TOLERANCE, DEFAULT_GRID_POINTS, MIN_ATOM_MASS, Grid, SpectralMeasure

logger = logging.getLogger(__name__)

COVARIANCE = "covariance"
GRAM = "gram"
ORIENTATIONS = (COVARIANCE, GRAM)
POISSON = "poisson"
RICHARDSON = "richardson"
INVERSIONS = (POISSON, RICHARDSON)

# Largest unconverged fraction of grid points tolerated before failing
MAX_UNCONVERGED_FRACTION = 0.01
NEGATIVE_DENSITY_TOLERANCE = 1e-6
# Largest mass below 0 dropped from an MP-map input as inversion leakage
NEGATIVE_SUPPORT_TOLERANCE = 1e-3
_CDF_CELLS = 1 << 16


@dataclass(frozen=True)
class MpMapConfig:
    """Numerical settings of the MP-map solver and of Stieltjes inversion."""

    eta: Optional[float] = None
    eta_relative: float = 1e-4
    grid_points: int = DEFAULT_GRID_POINTS
    grid: Optional[Grid] = None
    tolerance: float = 1e-10
    max_iters: int = 500
    damping: float = 0.5
    picard_iters: int = 20
    block_size: Optional[int] = None
    inversion: str = RICHARDSON
    max_nodes: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValidationError(f"Solver tolerance must be positive, got {self.tolerance}")
        if not 0 < self.damping <= 1:
            raise ValidationError(f"Damping must lie in (0, 1], got {self.damping}")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")
        if self.eta is not None and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not self.eta_relative > 0:
            raise ValidationError(f"eta_relative must be positive, got {self.eta_relative}")
        if self.grid_points < 2:
            raise ValidationError("grid_points must be at least 2")
        if self.block_size is not None and self.block_size < 1:
            raise ValidationError("block_size must be positive")
        if self.inversion not in INVERSIONS:
            raise ValidationError(f"Unknown inversion '{self.inversion}', expected one of {INVERSIONS}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["grid"] = self.grid.to_dict() if self.grid is not None else None
        return data


@dataclass
class MpMapDiagnostics:
    """Solver report for one MP-map evaluation."""

    gamma: float
    orientation: str
    eta: float
    grid_points: int
    iterations_mean: float = 0.0
    iterations_max: int = 0
    max_residual: float = 0.0
    unconverged_points: int = 0
    atom_mass: float = 0.0
    mass_deficit: float = 0.0
    clipped_points: int = 0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# Closed forms


def mp_edges(gamma: float) -> Tuple[float, float]:
    """Edges ((1 - sqrt(gamma))^2, (1 + sqrt(gamma))^2) of the MP bulk."""
    if not gamma > 0:
        raise DomainError(f"MP shape must be positive, got {gamma}")
    root = np.sqrt(gamma)
    return float((1 - root) ** 2), float((1 + root) ** 2)


def mp_density(x, gamma: float) -> np.ndarray:
    """Continuous part of MP(gamma) (mass min(1, 1/gamma))."""
    lo, hi = mp_edges(gamma)
    x = np.asarray(x, dtype=float)
    inside = (x > lo) & (x < hi)
    safe = np.where(inside, x, 1.0)
    values = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (2 * np.pi * gamma * safe)
    return np.where(inside, values, 0.0)


def mp_stieltjes(z, gamma: float):
    """Closed-form Stieltjes transform of MP(gamma), branch with Im s > 0."""
    if not gamma > 0:
        raise DomainError(f"MP shape must be positive, got {gamma}")
    z = np.asarray(z, dtype=complex)
    root = np.sqrt((z - 1 - gamma) ** 2 - 4 * gamma)
    s_plus = (1 - gamma - z + root) / (2 * gamma * z)
    s_minus = (1 - gamma - z - root) / (2 * gamma * z)
    s = np.where(s_plus.imag > 0, s_plus, s_minus)
    return complex(s) if s.ndim == 0 else s


def _mp_continuous_cdf(x: np.ndarray, gamma: float) -> np.ndarray:
    """CDF of the continuous part, integrated in the angle x = c - r cos(theta) where it is smooth."""
    lo, hi = mp_edges(gamma)
    r = 0.5 * (hi - lo)
    theta_edges = np.linspace(0.0, np.pi, _CDF_CELLS + 1)
    theta_mid = 0.5 * (theta_edges[1:] + theta_edges[:-1])
    position = lo + 2 * r * np.sin(0.5 * theta_mid) ** 2
    integrand = r**2 * np.sin(theta_mid) ** 2 / (2 * np.pi * gamma * position)
    cumulative = np.concatenate([[0.0], np.cumsum(integrand * (np.pi / _CDF_CELLS))])

    c = 0.5 * (hi + lo)
    theta = np.arccos(np.clip((c - np.asarray(x, dtype=float)) / r, -1.0, 1.0))
    return np.interp(theta, theta_edges, cumulative)


def mp_cdf(x, gamma: float):
    """Distribution function of MP(gamma), atom at 0 included."""
    x = np.asarray(x, dtype=float)
    atom = max(0.0, 1.0 - 1.0 / gamma)
    values = _mp_continuous_cdf(x, gamma) + np.where(x >= 0, atom, 0.0)
    return float(values) if values.ndim == 0 else values


def mp_measure(gamma: float, grid_points: int = DEFAULT_GRID_POINTS) -> SpectralMeasure:
    """
    Marchenko-Pastur law with shape gamma as a SpectralMeasure.

    Density values are cell averages of the closed form, so the gridded mass is
    exact even at the 1/sqrt(x) edge of gamma = 1.
    """
    lo, hi = mp_edges(gamma)
    atom = max(0.0, 1.0 - 1.0 / gamma)
    grid = Grid.spanning(0.0 if atom > 0 else lo, hi, grid_points)
    points = grid.points
    half = 0.5 * grid.step
    density = (_mp_continuous_cdf(points + half, gamma) - _mp_continuous_cdf(points - half, gamma)) / grid.step
    density[0] = density[-1] = 0.0

    atoms_at, masses = ([0.0], [atom]) if atom > 0 else ([], [])
    return SpectralMeasure.from_density(grid, density, atoms_at, masses).normalized()


def reduced_mp_measure(gamma: float, grid_points: int = DEFAULT_GRID_POINTS) -> SpectralMeasure:
    """gamma * (MP(gamma) - (1 - 1/gamma) delta_0): the MP bulk with the rank-deficiency atom removed."""
    mp = mp_measure(gamma, grid_points)
    atom = gamma * mp.atom_mass_at(0.0) - (gamma - 1.0)
    locs, masses = ([0.0], [atom]) if atom > 1e-12 else ([], [])
    return SpectralMeasure.from_density(mp.grid, gamma * mp.density, locs, masses).normalized()


# The MP map


def zero_atom_mass(nu: SpectralMeasure, gamma: float, orientation: str = COVARIANCE) -> float:
    """
    Mass at 0 of the MP map of nu, from the rank of the underlying random matrix.

    covariance: A^{1/2} Y Y^T A^{1/2} / b has rank min(rank A, b).
    gram: G G^T / M with rows N(0, Q) has rank min(n, rank Q).
    """
    free_fraction = 1.0 - nu.atom_mass_at(0.0) / nu.total_mass
    if orientation == COVARIANCE:
        return float(max(0.0, 1.0 - min(free_fraction, 1.0 / gamma)))
    return float(max(0.0, 1.0 - min(1.0, free_fraction / gamma)))


class _FixedPoint:
    """The map s -> F(s) of one orientation at a fixed z, with its derivative."""

    def __init__(self, nodes: np.ndarray, weights: np.ndarray, gamma: float, orientation: str):
        self.t = nodes
        self.w = weights
        self.gamma = gamma
        self.orientation = orientation

    def __call__(self, s: complex, z: complex) -> Tuple[complex, complex]:
        t, w, g = self.t, self.w, self.gamma
        if self.orientation == COVARIANCE:
            den = t * (1.0 - g * (1.0 + z * s)) - z
            value = np.sum(w / den)
            slope = g * z * np.sum(w * t / den**2)
            return complex(value), complex(slope)

        den = 1.0 + g * t * s
        u = z - np.sum(w * t / den)
        value = -1.0 / u
        slope = g * np.sum(w * t * t / den**2) / u**2
        return complex(value), complex(slope)


def _solve_point(fp: _FixedPoint, z: complex, s: complex, cfg: MpMapConfig, cold: bool) -> Tuple[complex, int, float]:
    damping = cfg.damping
    for iteration in range(1, cfg.max_iters + 1):
        value, slope = fp(s, z)
        residual = abs(s - value)
        if residual < cfg.tolerance:
            return s, iteration, residual

        picard = (1.0 - damping) * s + damping * value
        if cold and iteration <= cfg.picard_iters:
            s = picard
            continue
        denom = 1.0 - slope
        newton = s - (s - value) / denom if denom != 0 else complex(np.nan)
        s = newton if np.isfinite(newton) and newton.imag > 0 else picard

    value, _ = fp(s, z)
    return s, cfg.max_iters, abs(s - value)


def _solve_grid(fp: _FixedPoint, points: np.ndarray, eta: float, cfg: MpMapConfig):
    """Sweep each block from its right end, where s(z) ~ -1/z, warm-starting leftwards."""
    n = points.size
    block = cfg.block_size or n
    values = np.empty(n, dtype=complex)
    iterations = np.empty(n, dtype=int)
    residuals = np.empty(n)
    for stop in range(n, 0, -block):
        s = None
        for k in range(stop - 1, max(stop - block, 0) - 1, -1):
            z = complex(points[k], eta)
            cold = s is None
            s, iterations[k], residuals[k] = _solve_point(fp, z, -1.0 / z if cold else s, cfg, cold)
            values[k] = s
    return values, iterations, residuals


def _companion_solve(fp: _FixedPoint, points: np.ndarray, eta: float, gamma: float, cfg: MpMapConfig):
    """
    Stieltjes transform at ratio gamma > 1 from the other orientation at 1 / gamma.

    The companion matrix shares the nonzero eigenvalues, scaled by gamma, so
    s(z) = s'(z / gamma) / gamma^2 - (1 - 1/gamma) / z.
    """
    values, iterations, residuals = _solve_grid(fp, points / gamma, eta / gamma, cfg)
    values = values / gamma**2 - (1.0 - 1.0 / gamma) / (points + 1j * eta)
    return values, iterations, residuals


def nonnegative_part(nu: SpectralMeasure, what: str = "MP map input") -> SpectralMeasure:
    """
    nu restricted to [0, inf) and renormalized.

    Inversion leakage below 0 up to NEGATIVE_SUPPORT_TOLERANCE of the mass is
    dropped; more than that is a validation error.
    """
    below = nu.atom_locations < -ATOM_MERGE_TOLERANCE
    mass = float(nu.atom_masses[below].sum())
    density = nu.density
    if not nu.grid.is_empty:
        negative_x = nu.grid.points < 0
        mass += float(trapezoid(np.where(negative_x, density, 0.0), dx=nu.grid.step))
        density = np.where(negative_x, 0.0, density)
    if mass > NEGATIVE_SUPPORT_TOLERANCE:
        raise ValidationError(f"{what} must live on [0, inf); mass {mass:.3g} lies below 0")
    if not below.any() and np.array_equal(density, nu.density):
        return nu
    return SpectralMeasure(nu.atom_locations[~below], nu.atom_masses[~below], nu.grid, density).normalized()


def _support_estimate(nu: SpectralMeasure, gamma: float) -> Tuple[float, float]:
    lo_nu, hi_nu = nu.support()
    hi = hi_nu * (1 + np.sqrt(gamma)) ** 2
    lo = lo_nu * (1 - np.sqrt(gamma)) ** 2 if gamma < 1 else 0.0
    return float(lo), float(hi)


def inversion_kernel(x: np.ndarray, eta: float, inversion: str) -> np.ndarray:
    """Smoothing kernel that Stieltjes inversion at offset eta applies to a unit atom at 0."""
    poisson = eta / (np.pi * (x**2 + eta**2))
    if inversion == POISSON:
        return poisson
    return 2.0 * poisson - 2.0 * eta / (np.pi * (x**2 + 4 * eta**2))


def invert_density(imag_eta: np.ndarray, imag_2eta: Optional[np.ndarray], inversion: str) -> np.ndarray:
    """Density from Im s on the grid; the two-offset form cancels the Cauchy tails and the O(eta) bias."""
    if inversion == POISSON:
        return imag_eta / np.pi
    return (2.0 * imag_eta - imag_2eta) / np.pi


@dataclass
class InversionReport:
    """What happened between Im s and the returned measure."""

    clipped_points: int = 0
    negative_mass: float = 0.0
    mass_deficit: float = 0.0


def finish_density(
    grid: Grid,
    density: np.ndarray,
    atom_locations: Sequence[float] = (),
    atom_masses: Sequence[float] = (),
    what: str = "density",
) -> Tuple[SpectralMeasure, InversionReport]:
    """
    Turn an inverted density into a probability measure.

    Values above -1e-6 * peak are clipped silently; deeper negatives are clipped
    with a warning. A mass deficit of the continuous part joins the atom at 0,
    a surplus rescales the continuous part.
    """
    report = InversionReport()
    peak = float(np.max(density)) if density.size else 0.0
    negative = np.clip(density, None, 0.0)
    report.negative_mass = float(-trapezoid(negative, dx=grid.step))
    report.clipped_points = int(np.count_nonzero(density < -NEGATIVE_DENSITY_TOLERANCE * peak))
    if report.clipped_points:
        warnings.warn(f"{what}: clipped {report.clipped_points} negative density values", RuntimeWarning)
    density = np.clip(density, 0.0, None)

    atom_masses = np.clip(np.asarray(atom_masses, dtype=float), 0.0, 1.0)
    atom_total = float(atom_masses.sum())
    if atom_total > 1.0:
        atom_masses = atom_masses / atom_total
        atom_total = 1.0
    if atom_total >= 1.0 - MIN_ATOM_MASS:
        density = np.zeros_like(density)

    mass = float(trapezoid(density, dx=grid.step))
    report.mass_deficit = (1.0 - atom_total) - mass
    if report.mass_deficit < 0 and mass > 0:
        density = density * ((1.0 - atom_total) / mass)

    locs = list(atom_locations) + [0.0]
    masses = list(atom_masses) + [max(report.mass_deficit, 0.0)]
    return SpectralMeasure.from_density(grid, density, locs, masses).normalized(), report


def mp_map_with_diagnostics(
    nu: SpectralMeasure, gamma: float, cfg: Optional[MpMapConfig] = None, orientation: str = COVARIANCE
) -> Tuple[SpectralMeasure, MpMapDiagnostics]:
    """
    Free multiplicative convolution of nu with MP(gamma), with a solver report.

    Args:
        nu: Normalized measure on [0, inf)
        gamma: MP shape
        cfg: Solver settings
        orientation: ``covariance`` (the sample-covariance fixed point
            s = ∫ dnu(t) / (t (1 - gamma (1 + z s)) - z)) or ``gram`` (the n x n
            Gram matrix fixed point m = -1 / (z - ∫ t dnu(t) / (1 + gamma t m)))

    Returns:
        (measure, diagnostics)
    """
    cfg = cfg or MpMapConfig()
    if not gamma > 0:
        raise DomainError(f"MP shape must be positive, got {gamma}")
    if orientation not in ORIENTATIONS:
        raise ValidationError(f"Unknown orientation '{orientation}', expected one of {ORIENTATIONS}")
    nu.require_normalized("input measure")
    nu = nonnegative_part(nu)

    atom = zero_atom_mass(nu, gamma, orientation)
    if atom >= 1.0 - 1e-12:
        return SpectralMeasure.delta(0.0), MpMapDiagnostics(gamma, orientation, 0.0, 0, atom_mass=1.0)

    if nu.grid.n > cfg.max_nodes:
        nu = nu.regridded(cfg.max_nodes)
    nodes, weights = nu.quadrature_nodes()
    companion = gamma > 1.0
    if companion:
        fp = _FixedPoint(nodes, weights, 1.0 / gamma, GRAM if orientation == COVARIANCE else COVARIANCE)
    else:
        fp = _FixedPoint(nodes, weights, gamma, orientation)

    lo, hi = _support_estimate(nu, gamma)
    grid = cfg.grid or Grid.spanning(lo, hi, cfg.grid_points, floor=0.0)
    eta = cfg.eta or cfg.eta_relative * max(abs(lo), abs(hi))
    points = grid.points
    diagnostics = MpMapDiagnostics(gamma=gamma, orientation=orientation, eta=eta, grid_points=grid.n)
    if companion:
        diagnostics.notes.append(f"solved through the {fp.orientation} companion at ratio {1.0 / gamma:.6g}")

    offsets = [eta] if cfg.inversion == POISSON else [eta, 2 * eta]
    imag_parts = []
    for offset in offsets:
        if companion:
            values, iterations, residuals = _companion_solve(fp, points, offset, gamma, cfg)
        else:
            values, iterations, residuals = _solve_grid(fp, points, offset, cfg)
        unconverged = residuals >= cfg.tolerance
        diagnostics.unconverged_points += int(np.count_nonzero(unconverged))
        diagnostics.max_residual = max(diagnostics.max_residual, float(residuals.max()))
        diagnostics.iterations_max = max(diagnostics.iterations_max, int(iterations.max()))
        diagnostics.iterations_mean = float(iterations.mean())
        if np.count_nonzero(unconverged) > MAX_UNCONVERGED_FRACTION * points.size:
            raise SolverError(
                f"MP map fixed point failed at {np.count_nonzero(unconverged)} of {points.size} grid points "
                f"(worst residual {residuals.max():.3g})",
                worst_residual=float(residuals.max()),
            )
        imag_parts.append(values.imag)

    density = invert_density(imag_parts[0], imag_parts[-1], cfg.inversion)
    density = density - atom * inversion_kernel(points, eta, cfg.inversion)
    measure, report = finish_density(grid, density, [0.0], [atom], "MP map")
    diagnostics.atom_mass = atom
    diagnostics.mass_deficit = report.mass_deficit
    diagnostics.clipped_points = report.clipped_points
    logger.debug("mp_map gamma=%s orientation=%s: %s", gamma, orientation, diagnostics.to_dict())
    return measure, diagnostics


def mp_map(
    nu: SpectralMeasure, gamma: float, cfg: Optional[MpMapConfig] = None, orientation: str = COVARIANCE
) -> SpectralMeasure:
    """MP(gamma) ⊠ nu on a grid; see ``mp_map_with_diagnostics``."""
    measure, _ = mp_map_with_diagnostics(nu, gamma, cfg, orientation)
    return measure
