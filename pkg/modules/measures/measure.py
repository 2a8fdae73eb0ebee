"""Probability measures on the real line: finite atoms plus a uniform-grid density."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from ..errors import ValidationError

MASS_TOLERANCE = 1e-6
ATOM_MERGE_TOLERANCE = 1e-12
MIN_ATOM_MASS = 1e-12
DEFAULT_GRID_POINTS = 4096
GRID_MARGIN = 0.1


@dataclass(frozen=True)
class Grid:
    """Uniform abscissas ``start + k * step`` for ``k = 0 .. n - 1``."""

    start: float
    step: float
    n: int

    def __post_init__(self):
        if self.n < 0 or self.n == 1:
            raise ValidationError(f"Grid needs 0 or at least 2 points, got {self.n}")
        if self.n > 0 and not (np.isfinite(self.step) and self.step > 0):
            raise ValidationError(f"Grid step must be positive, got {self.step}")
        if not np.isfinite(self.start):
            raise ValidationError("Grid start must be finite")

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.n - 1) if self.n else self.start

    @property
    def is_empty(self) -> bool:
        return self.n == 0

    @classmethod
    def empty(cls) -> "Grid":
        return cls(start=0.0, step=0.0, n=0)

    @classmethod
    def spanning(
        cls,
        lo: float,
        hi: float,
        n: int = DEFAULT_GRID_POINTS,
        margin: float = GRID_MARGIN,
        floor: Optional[float] = None,
    ) -> "Grid":
        """
        Grid covering ``[lo, hi]`` widened by ``margin`` of its width on both sides.

        Args:
            lo: Lower support estimate
            hi: Upper support estimate
            n: Number of points
            margin: Relative padding on each side
            floor: If given, the grid never starts below it

        Returns:
            Grid with ``n`` points
        """
        if n < 2:
            raise ValidationError(f"Grid needs at least 2 points, got {n}")
        width = hi - lo
        if width <= 0:
            width = max(abs(hi), abs(lo), 1.0)
        pad = margin * width
        start, stop = lo - pad, hi + pad
        if floor is not None:
            start = max(start, floor)
        return cls(start=float(start), step=float((stop - start) / (n - 1)), n=int(n))

    def to_dict(self) -> Dict[str, Any]:
        return {"start": self.start, "step": self.step, "n": self.n}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Grid":
        return cls(start=float(data["start"]), step=float(data["step"]), n=int(data["n"]))


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Quadrature weights reproducing the trapezoid rule on ``grid``."""
    if grid.is_empty:
        return np.zeros(0)
    weights = np.full(grid.n, grid.step)
    weights[0] = weights[-1] = 0.5 * grid.step
    return weights


def merge_atoms(locations: Sequence[float], masses: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Sort atoms, merge locations closer than the merge tolerance and drop negligible masses."""
    locs = np.asarray(locations, dtype=float).ravel()
    weights = np.asarray(masses, dtype=float).ravel()
    if locs.shape != weights.shape:
        raise ValidationError("Atom locations and masses differ in length")
    if locs.size == 0:
        return np.zeros(0), np.zeros(0)
    order = np.argsort(locs, kind="stable")
    locs, weights = locs[order], weights[order]

    merged_locs: List[float] = [locs[0]]
    merged_masses: List[float] = [weights[0]]
    for loc, mass in zip(locs[1:], weights[1:]):
        if loc - merged_locs[-1] <= ATOM_MERGE_TOLERANCE:
            merged_masses[-1] += mass
        else:
            merged_locs.append(loc)
            merged_masses.append(mass)

    merged_locs_arr = np.array(merged_locs)
    merged_masses_arr = np.array(merged_masses)
    keep = merged_masses_arr >= MIN_ATOM_MASS
    return merged_locs_arr[keep], merged_masses_arr[keep]


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """
    A finite measure on the real line: atoms plus a density on a uniform grid.

    Instances are immutable. Probability measures have total mass 1 within
    ``MASS_TOLERANCE``; intermediate pieces (for example the continuous part of
    a measure) may carry less.
    """

    atom_locations: np.ndarray
    atom_masses: np.ndarray
    grid: Grid
    density: np.ndarray

    def __post_init__(self):
        locs, masses = merge_atoms(self.atom_locations, self.atom_masses)
        density = np.asarray(self.density, dtype=float).ravel()

        if np.any(~np.isfinite(locs)) or np.any(~np.isfinite(masses)):
            raise ValidationError("Atoms must be finite")
        if np.any(masses < 0):
            raise ValidationError("Atom masses must be nonnegative")
        if density.size != self.grid.n:
            raise ValidationError(f"Density has {density.size} values for a grid of {self.grid.n} points")
        if np.any(~np.isfinite(density)):
            raise ValidationError("Density must be finite")
        if np.any(density < 0):
            raise ValidationError("Density must be nonnegative")

        object.__setattr__(self, "atom_locations", _frozen(locs))
        object.__setattr__(self, "atom_masses", _frozen(masses))
        object.__setattr__(self, "density", _frozen(density))

    # Constructors

    @classmethod
    def delta(cls, location: float) -> "SpectralMeasure":
        return cls(np.array([location]), np.array([1.0]), Grid.empty(), np.zeros(0))

    @classmethod
    def from_atoms(cls, locations: Sequence[float], masses: Optional[Sequence[float]] = None) -> "SpectralMeasure":
        """Purely atomic measure; equal masses when ``masses`` is omitted."""
        locs = np.asarray(locations, dtype=float).ravel()
        if masses is None:
            masses = np.full(locs.size, 1.0 / max(locs.size, 1))
        return cls(locs, np.asarray(masses, dtype=float), Grid.empty(), np.zeros(0))

    @classmethod
    def from_density(
        cls,
        grid: Grid,
        density: Sequence[float],
        atom_locations: Sequence[float] = (),
        atom_masses: Sequence[float] = (),
    ) -> "SpectralMeasure":
        return cls(np.asarray(atom_locations, dtype=float), np.asarray(atom_masses, dtype=float), grid, density)

    @classmethod
    def uniform(cls, a: float, b: float, n: int = DEFAULT_GRID_POINTS) -> "SpectralMeasure":
        """Uniform law on ``[a, b]``, gridded exactly on the interval."""
        if not b > a:
            raise ValidationError(f"Uniform law needs a < b, got [{a}, {b}]")
        grid = Grid(start=float(a), step=float((b - a) / (n - 1)), n=n)
        return cls.from_density(grid, np.full(n, 1.0 / (b - a)))

    @classmethod
    def from_samples(
        cls, values: Sequence[float], bandwidth: Optional[float] = None, grid_points: int = DEFAULT_GRID_POINTS
    ) -> "SpectralMeasure":
        """
        Empirical measure of ``values``.

        Args:
            values: Samples (eigenvalues), each carrying mass 1/len(values)
            bandwidth: If given, Gaussian-kernel smoothed density instead of raw atoms
            grid_points: Grid size for the smoothed variant

        Returns:
            SpectralMeasure
        """
        samples = np.asarray(values, dtype=float).ravel()
        if samples.size == 0:
            raise ValidationError("Cannot build an empirical measure from zero samples")
        if bandwidth is None:
            return cls.from_atoms(samples)
        if bandwidth <= 0:
            raise ValidationError(f"Bandwidth must be positive, got {bandwidth}")

        grid = Grid.spanning(samples.min() - 4 * bandwidth, samples.max() + 4 * bandwidth, grid_points, margin=0.0)
        points = grid.points
        density = np.zeros(grid.n)
        for chunk in np.array_split(samples, max(1, samples.size // 512)):
            density += norm.pdf((points[:, None] - chunk[None, :]) / bandwidth).sum(axis=1)
        density /= samples.size * bandwidth
        return cls.from_density(grid, density).normalized()

    # Mass and moments

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return [(float(x), float(m)) for x, m in zip(self.atom_locations, self.atom_masses)]

    @property
    def has_density(self) -> bool:
        return self.grid.n > 0 and bool(np.any(self.density > 0))

    @property
    def atom_mass(self) -> float:
        return float(self.atom_masses.sum())

    @property
    def continuous_mass(self) -> float:
        if self.grid.is_empty:
            return 0.0
        return float(trapezoid(self.density, dx=self.grid.step))

    @property
    def total_mass(self) -> float:
        return self.atom_mass + self.continuous_mass

    def is_normalized(self, tolerance: float = MASS_TOLERANCE) -> bool:
        return abs(self.total_mass - 1.0) <= tolerance

    def require_normalized(self, what: str = "measure"):
        if not self.is_normalized():
            raise ValidationError(f"{what} is not normalized (total mass {self.total_mass:.9g})")

    def normalized(self) -> "SpectralMeasure":
        """Copy rescaled to unit total mass."""
        total = self.total_mass
        if total <= 0:
            raise ValidationError("Cannot normalize a measure with zero mass")
        return SpectralMeasure(self.atom_locations, self.atom_masses / total, self.grid, self.density / total)

    def quadrature_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Locations and weights such that ``sum(w * f(t))`` integrates ``f`` against the measure."""
        weights = trapezoid_weights(self.grid) * self.density
        keep = weights > 0
        nodes = np.concatenate([self.atom_locations, self.grid.points[keep]])
        return nodes, np.concatenate([self.atom_masses, weights[keep]])

    def moment(self, k: int) -> float:
        nodes, weights = self.quadrature_nodes()
        return float(np.sum(weights * nodes**k))

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        return self.moment(2) - self.mean**2

    def support(self) -> Tuple[float, float]:
        """Smallest interval containing every atom and every positive density value."""
        points = list(self.atom_locations)
        if self.has_density:
            positive = self.grid.points[self.density > 0]
            points.extend([positive[0], positive[-1]])
        if not points:
            raise ValidationError("Empty measure has no support")
        return float(min(points)), float(max(points))

    @property
    def radius(self) -> float:
        lo, hi = self.support()
        return max(abs(lo), abs(hi))

    def atom_mass_at(self, location: float, tolerance: float = ATOM_MERGE_TOLERANCE) -> float:
        hit = np.abs(self.atom_locations - location) <= tolerance
        return float(self.atom_masses[hit].sum())

    def continuous_part(self) -> "SpectralMeasure":
        """The density alone, unnormalized."""
        return SpectralMeasure(np.zeros(0), np.zeros(0), self.grid, self.density)

    def without_atom_at(self, location: float, tolerance: float = ATOM_MERGE_TOLERANCE) -> "SpectralMeasure":
        """Copy with the atom at ``location`` removed, unnormalized."""
        keep = np.abs(self.atom_locations - location) > tolerance
        return SpectralMeasure(self.atom_locations[keep], self.atom_masses[keep], self.grid, self.density)

    def regridded(self, n: int) -> "SpectralMeasure":
        """Density resampled onto ``n`` points over the same interval; atoms unchanged."""
        if self.grid.is_empty or n == self.grid.n:
            return self
        grid = Grid(start=self.grid.start, step=(self.grid.stop - self.grid.start) / (n - 1), n=n)
        density = np.interp(grid.points, self.grid.points, self.density)
        mass = trapezoid(density, dx=grid.step)
        if mass > 0:
            density *= self.continuous_mass / mass
        return SpectralMeasure(self.atom_locations, self.atom_masses, grid, density)

    def __repr__(self) -> str:
        return (
            f"SpectralMeasure(atoms={len(self.atom_masses)}, grid_points={self.grid.n}, "
            f"mass={self.total_mass:.6g}, mean={self.mean:.6g})"
        )
