"""Theory-versus-simulation comparison metrics"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from ..errors import ValidationError
from ..measures import SpectralMeasure, distance_ks, distance_w1

ZERO_ATOM_TOLERANCE = 1e-9


def excise_smallest(eigenvalues: Sequence[float], fraction: float) -> np.ndarray:
    """Sorted eigenvalues with the round(fraction * n) smallest removed."""
    values = np.sort(np.asarray(eigenvalues, dtype=float))
    drop = int(round(fraction * values.size))
    return values[drop:]


def continuous_theory(theory: SpectralMeasure) -> SpectralMeasure:
    """Theory law without its atom at 0, renormalized; the full law when nothing else remains."""
    rest = theory.without_atom_at(0.0, tolerance=ZERO_ATOM_TOLERANCE)
    if rest.total_mass <= 1e-12:
        return theory
    return rest.normalized()


@dataclass
class ComparisonMetrics:
    """W1 and KS on the continuous parts, plus the separate atom-at-0 comparison."""

    w1: float
    ks: float
    atom_mass_theory: float
    atom_mass_simulated: float
    per_seed_w1: List[float] = field(default_factory=list)
    per_seed_ks: List[float] = field(default_factory=list)

    @property
    def atom_mass_error(self) -> float:
        return abs(self.atom_mass_theory - self.atom_mass_simulated)

    @property
    def seed_spread(self) -> float:
        return float(np.std(self.per_seed_w1)) if len(self.per_seed_w1) > 1 else 0.0

    @property
    def metric_sanity(self) -> bool:
        """W1 of the pooled ESD is within the per-seed W1 plus twice the seed spread."""
        if not self.per_seed_w1:
            return True
        return self.w1 <= float(np.mean(self.per_seed_w1)) + 2.0 * self.seed_spread + 1e-12

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.update(
            atom_mass_error=self.atom_mass_error, seed_spread=self.seed_spread, metric_sanity=self.metric_sanity
        )
        return data


def compare_spectra(
    theory: SpectralMeasure, eigenvalue_sets: Sequence[np.ndarray], zero_fractions: Sequence[float] = ()
) -> ComparisonMetrics:
    """
    Compare a theory law with simulated spectra.

    The theory atom at 0 and the same fraction of smallest simulated
    eigenvalues are excised before W1/KS; atom masses are compared separately.

    Args:
        theory: Normalized limit law
        eigenvalue_sets: One eigenvalue array per seed
        zero_fractions: Simulated fraction of (numerically) zero eigenvalues per seed

    Returns:
        ComparisonMetrics
    """
    if not eigenvalue_sets:
        raise ValidationError("No simulated spectra to compare")
    theory.require_normalized("theory law")
    m0 = theory.atom_mass_at(0.0, tolerance=ZERO_ATOM_TOLERANCE)
    reference = continuous_theory(theory)

    def measure_of(values: np.ndarray) -> SpectralMeasure:
        kept = excise_smallest(values, m0) if reference is not theory else np.asarray(values, dtype=float)
        if kept.size == 0:
            kept = np.sort(values)[-1:]
        return SpectralMeasure.from_atoms(kept)

    per_seed = [measure_of(values) for values in eigenvalue_sets]
    pooled = measure_of(np.concatenate(eigenvalue_sets))

    return ComparisonMetrics(
        w1=distance_w1(reference, pooled),
        ks=distance_ks(reference, pooled),
        atom_mass_theory=m0,
        atom_mass_simulated=float(np.mean(zero_fractions)) if len(zero_fractions) else 0.0,
        per_seed_w1=[distance_w1(reference, m) for m in per_seed],
        per_seed_ks=[distance_ks(reference, m) for m in per_seed],
    )
