"""Internal gaps of a density: detecting disconnected support"""

from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

import numpy as np

from ..measures import SpectralMeasure

GAP_DENSITY_THRESHOLD = 1e-4
GAP_MIN_STEPS = 5


@dataclass(frozen=True)
class Gap:
    """An interval inside the support where the density stays below the threshold."""

    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def detect_gaps(
    mu: SpectralMeasure, threshold: float = GAP_DENSITY_THRESHOLD, min_steps: int = GAP_MIN_STEPS
) -> List[Gap]:
    """
    Runs of at least ``min_steps`` grid steps with density below ``threshold``,
    strictly between the first and last grid points where the density reaches it.

    Atoms are ignored: only the gridded density is inspected.
    """
    if mu.grid.is_empty:
        return []
    above = np.flatnonzero(mu.density >= threshold)
    if above.size < 2:
        return []
    points = mu.grid.points

    gaps = []
    # consecutive above-threshold indices at least min_steps apart bound a gap
    jumps = np.flatnonzero(np.diff(above) >= min_steps)
    for k in jumps:
        left, right = above[k], above[k + 1]
        gaps.append(Gap(lo=float(points[left]), hi=float(points[right])))
    return gaps


def has_disconnected_support(mu: SpectralMeasure, **kwargs) -> bool:
    return len(detect_gaps(mu, **kwargs)) > 0


def gap_masses(eigenvalues: Sequence[float], gaps: Sequence[Gap]) -> List[float]:
    """Fraction of simulated eigenvalues falling inside each gap."""
    values = np.asarray(eigenvalues, dtype=float)
    if values.size == 0:
        return [0.0 for _ in gaps]
    return [float(np.mean((values > g.lo) & (values < g.hi))) for g in gaps]
