"""Operations on SpectralMeasure values: Stieltjes transforms, convolution, mixtures, CDFs."""

from typing import List, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..errors import DomainError, ValidationError
from .measure import Grid, SpectralMeasure

ComplexLike = Union[complex, np.ndarray]

# Largest grid an operation may produce when aligning mismatched steps
MAX_COMBINED_POINTS = 1 << 22
CLIP_TOLERANCE = 1e-9
_CHUNK = 512


def stieltjes(mu: SpectralMeasure, z: ComplexLike) -> ComplexLike:
    """
    Stieltjes transform s(z) = ∫ dmu(t) / (t - z).

    Args:
        mu: Normalized measure
        z: Evaluation point(s) in the open upper half-plane

    Returns:
        Complex value(s) of the same shape as ``z``
    """
    mu.require_normalized()
    points = np.asarray(z, dtype=complex)
    if np.any(points.imag <= 0):
        raise DomainError("Stieltjes transform requires Im z > 0")

    nodes, weights = mu.quadrature_nodes()
    flat = points.ravel()
    values = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, _CHUNK):
        block = flat[start : start + _CHUNK]
        values[start : start + _CHUNK] = (weights[None, :] / (nodes[None, :] - block[:, None])).sum(axis=1)

    if np.ndim(z) == 0:
        return complex(values[0])
    return values.reshape(points.shape)


def _common_step(measures: Sequence[SpectralMeasure]) -> float:
    steps = [m.grid.step for m in measures if not m.grid.is_empty]
    if not steps:
        raise ValidationError("No density grid to align")
    return min(steps)


def _aligned_grid(starts: Sequence[float], stops: Sequence[float], step: float) -> Grid:
    start, stop = min(starts), max(stops)
    n = int(np.ceil((stop - start) / step - 1e-9)) + 1
    if n > MAX_COMBINED_POINTS:
        raise ValidationError(f"Incompatible grids: aligning them needs {n} points")
    return Grid(start=start, step=step, n=max(n, 2))


def _resample(grid: Grid, density: np.ndarray, target: Grid) -> np.ndarray:
    return np.interp(target.points, grid.points, density, left=0.0, right=0.0)


def superpose(weights: Sequence[float], measures: Sequence[SpectralMeasure]) -> SpectralMeasure:
    """
    Nonnegative combination ``sum(w_i * mu_i)`` without any unit-sum requirement.

    Densities are resampled onto one grid with the finest step among the inputs.
    """
    if len(weights) != len(measures):
        raise ValidationError("Weights and measures differ in length")
    if any(w < 0 for w in weights):
        raise ValidationError("Superposition weights must be nonnegative")

    locs = np.concatenate([m.atom_locations for m in measures] or [np.zeros(0)])
    masses = np.concatenate([w * m.atom_masses for w, m in zip(weights, measures)] or [np.zeros(0)])

    gridded = [(w, m) for w, m in zip(weights, measures) if not m.grid.is_empty and w > 0]
    if not gridded:
        return SpectralMeasure(locs, masses, Grid.empty(), np.zeros(0))

    step = _common_step([m for _, m in gridded])
    target = _aligned_grid([m.grid.start for _, m in gridded], [m.grid.stop for _, m in gridded], step)
    density = np.zeros(target.n)
    for w, m in gridded:
        density += w * _resample(m.grid, m.density, target)
    return SpectralMeasure(locs, masses, target, density)


def mixture(weights: Sequence[float], mus: Sequence[SpectralMeasure]) -> SpectralMeasure:
    """
    Convex combination of probability measures.

    Args:
        weights: Nonnegative weights summing to 1 within 1e-12
        mus: Normalized measures

    Returns:
        Normalized mixture
    """
    if len(weights) == 0 or len(weights) != len(mus):
        raise ValidationError("Mixture needs one weight per measure")
    if any(w < 0 for w in weights):
        raise ValidationError("Mixture weights must be nonnegative")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValidationError(f"Mixture weights sum to {sum(weights):.15g}, not 1")
    for mu in mus:
        mu.require_normalized("mixture component")
    return superpose(weights, mus).normalized()


def affine(mu: SpectralMeasure, a: float, b: float) -> SpectralMeasure:
    """Pushforward of ``mu`` under t -> a t + b; ``a = 0`` collapses to a point mass at b."""
    if a == 0:
        return SpectralMeasure.delta(b)

    locs = a * mu.atom_locations + b
    if mu.grid.is_empty:
        return SpectralMeasure(locs, mu.atom_masses, Grid.empty(), np.zeros(0))

    density = mu.density / abs(a)
    if a > 0:
        grid = Grid(start=a * mu.grid.start + b, step=a * mu.grid.step, n=mu.grid.n)
    else:
        grid = Grid(start=a * mu.grid.stop + b, step=-a * mu.grid.step, n=mu.grid.n)
        density = density[::-1]
    return SpectralMeasure(locs, mu.atom_masses, grid, density)


def _next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _fft_convolve(density1: np.ndarray, density2: np.ndarray, step: float) -> np.ndarray:
    size = density1.size + density2.size - 1
    n_fft = _next_power_of_two(density1.size + density2.size)
    spectrum = np.fft.rfft(density1, n_fft) * np.fft.rfft(density2, n_fft)
    out = step * np.fft.irfft(spectrum, n_fft)[:size]
    # ringing below -CLIP_TOLERANCE and round-off noise alike
    out[out < 0] = 0.0
    return out


def _on_step(mu: SpectralMeasure, step: float) -> Grid:
    n = int(np.ceil((mu.grid.stop - mu.grid.start) / step - 1e-9)) + 1
    if n > MAX_COMBINED_POINTS:
        raise ValidationError(f"Incompatible grids: resampling needs {n} points")
    return Grid(start=mu.grid.start, step=step, n=max(n, 2))


def convolve_classical(mu1: SpectralMeasure, mu2: SpectralMeasure) -> SpectralMeasure:
    """
    Law of X + Y for independent X ~ mu1, Y ~ mu2.

    Atom pairs give atoms; atom-density pairs give shifted densities; the
    density-density part is an FFT convolution on a common uniform grid.
    """
    mu1.require_normalized("first convolution factor")
    mu2.require_normalized("second convolution factor")
    for mu in (mu1, mu2):
        if mu.grid.n == 0 and mu.atom_masses.size == 0:
            raise ValidationError("Cannot convolve an empty measure")

    locs = (mu1.atom_locations[:, None] + mu2.atom_locations[None, :]).ravel()
    masses = (mu1.atom_masses[:, None] * mu2.atom_masses[None, :]).ravel()

    # (weight, grid, density) pieces of the continuous part
    pieces: List[tuple] = []
    for loc, mass in zip(mu1.atom_locations, mu1.atom_masses):
        if not mu2.grid.is_empty:
            pieces.append((mass, Grid(mu2.grid.start + loc, mu2.grid.step, mu2.grid.n), mu2.density))
    for loc, mass in zip(mu2.atom_locations, mu2.atom_masses):
        if not mu1.grid.is_empty:
            pieces.append((mass, Grid(mu1.grid.start + loc, mu1.grid.step, mu1.grid.n), mu1.density))

    if not mu1.grid.is_empty and not mu2.grid.is_empty:
        step = min(mu1.grid.step, mu2.grid.step)
        grid1, grid2 = _on_step(mu1, step), _on_step(mu2, step)
        density1 = _resample(mu1.grid, mu1.density, grid1)
        density2 = _resample(mu2.grid, mu2.density, grid2)
        conv = _fft_convolve(density1, density2, step)
        pieces.append((1.0, Grid(grid1.start + grid2.start, step, conv.size), conv))

    if not pieces:
        return SpectralMeasure(locs, masses, Grid.empty(), np.zeros(0)).normalized()

    step = min(grid.step for _, grid, _ in pieces)
    target = _aligned_grid([g.start for _, g, _ in pieces], [g.stop for _, g, _ in pieces], step)
    density = np.zeros(target.n)
    for weight, grid, values in pieces:
        density += weight * _resample(grid, values, target)
    return SpectralMeasure(locs, masses, target, density).normalized()


def cdf_values(mu: SpectralMeasure, x: np.ndarray, side: str = "right") -> np.ndarray:
    """CDF values at sorted or unsorted points; ``side="left"`` gives left limits."""
    cumulative_atoms = np.concatenate([[0.0], np.cumsum(mu.atom_masses)])
    values = cumulative_atoms[np.searchsorted(mu.atom_locations, x, side=side)]
    if mu.grid.is_empty:
        return values

    points, density = mu.grid.points, mu.density
    cumulative = cumulative_trapezoid(density, dx=mu.grid.step, initial=0.0)
    idx = np.clip(np.searchsorted(points, x, side="right") - 1, 0, mu.grid.n - 2)
    inside = (x >= points[0]) & (x <= points[-1])
    offset = x - points[idx]
    local = np.interp(x, points, density)
    partial = cumulative[idx] + 0.5 * offset * (density[idx] + local)
    continuous = np.where(x < points[0], 0.0, np.where(inside, partial, cumulative[-1]))
    return values + continuous


def cdf(mu: SpectralMeasure, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Right-continuous cumulative distribution function."""
    mu.require_normalized()
    points = np.atleast_1d(np.asarray(x, dtype=float))
    values = np.clip(cdf_values(mu, points), 0.0, 1.0)
    return float(values[0]) if np.ndim(x) == 0 else values


def breakpoints(*measures: SpectralMeasure) -> np.ndarray:
    """Sorted union of atom locations and grid abscissas."""
    parts = []
    for mu in measures:
        parts.append(mu.atom_locations)
        if not mu.grid.is_empty:
            parts.append(mu.grid.points)
    return np.unique(np.concatenate(parts))


def quantile(mu: SpectralMeasure, q: float) -> float:
    """Generalized inverse ``inf{x : F(x) >= q}``."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"Quantile level must lie in [0, 1], got {q}")
    mu.require_normalized()
    xs = breakpoints(mu)
    values = cdf_values(mu, xs) / mu.total_mass
    i = int(np.searchsorted(values, q - 1e-15, side="left"))
    if i >= xs.size:
        return float(xs[-1])
    if i == 0:
        return float(xs[0])

    left_limit = values[i] - mu.atom_mass_at(xs[i]) / mu.total_mass
    if left_limit < q:
        return float(xs[i])
    lo_value = values[i - 1]
    if left_limit <= lo_value:
        return float(xs[i])
    frac = (q - lo_value) / (left_limit - lo_value)
    return float(xs[i - 1] + frac * (xs[i] - xs[i - 1]))


def quantiles(mu: SpectralMeasure, levels: Sequence[float]) -> np.ndarray:
    return np.array([quantile(mu, q) for q in levels])
