"""Law(chi) and the special-case limit laws built from it."""

import logging
from typing import Optional

from ..activations import ActivationStats
from ..errors import InternalConsistencyError, UnsupportedCaseError, ValidationError
from ..measures import MIN_ATOM_MASS, SpectralMeasure, affine, convolve_classical, superpose
from .marchenko_pastur import COVARIANCE, MpMapConfig, mp_map, zero_atom_mass

logger = logging.getLogger(__name__)

SHIFT_FREE_TOLERANCE = 1e-12
_WEIGHT_TOLERANCE = 1e-12


def is_unit_delta(nu: SpectralMeasure, tolerance: float = 1e-9) -> bool:
    """True when nu is the point mass at 1."""
    return not nu.has_density and nu.atom_mass_at(1.0) >= 1.0 - tolerance


def chi_law(nu: SpectralMeasure, gamma2: float, cfg: Optional[MpMapConfig] = None) -> SpectralMeasure:
    """
    Law(chi) = (g/2) M*M + (1 - g) M + (g/2) delta_0 with M = MP(g) ⊠ nu, g = gamma2.

    M has an atom m0 at 0 and a continuous part M_c of mass 1 - m0. Expanding
    the convolution, every atom term lands at 0 and the continuous part gets
    the weight c1 = 1 - g (1 - m0), which is nonnegative because
    m0 >= 1 - 1/g. Combining the atoms first keeps every weight nonnegative,
    including for g > 1 where 1 - g < 0.

    Args:
        nu: Normalized measure on [0, inf)
        gamma2: Aspect ratio p/d
        cfg: MP-map solver settings

    Returns:
        Normalized Law(chi)
    """
    if not gamma2 > 0:
        raise ValidationError(f"gamma2 must be positive, got {gamma2}")
    mp = mp_map(nu, gamma2, cfg, orientation=COVARIANCE)

    m0 = zero_atom_mass(nu, gamma2, COVARIANCE)
    zero_atom = 0.5 * gamma2 * m0**2 + (1.0 - gamma2) * m0 + 0.5 * gamma2
    c1 = 1.0 - gamma2 * (1.0 - m0)
    if c1 < -_WEIGHT_TOLERANCE:
        raise InternalConsistencyError(f"Negative continuous weight {c1:.3g} in Law(chi) at gamma2={gamma2}")
    c1 = max(c1, 0.0)

    continuous = mp.without_atom_at(0.0)
    free_mass = 1.0 - m0
    if free_mass <= MIN_ATOM_MASS or continuous.total_mass <= 0:
        return SpectralMeasure.delta(0.0)

    unit = continuous.normalized()
    self_conv = convolve_classical(unit, unit)
    law = superpose(
        [zero_atom, c1 * free_mass, 0.5 * gamma2 * free_mass**2],
        [SpectralMeasure.delta(0.0), unit, self_conv],
    )
    if abs(law.total_mass - 1.0) > 1e-6:
        raise InternalConsistencyError(f"Law(chi) has total mass {law.total_mass:.9g}")
    logger.debug("chi_law gamma2=%s: zero atom %.6g, continuous weight %.6g", gamma2, zero_atom, c1)
    return law.normalized()


def q_limit_special(
    nu: SpectralMeasure, gamma2: float, stats: ActivationStats, cfg: Optional[MpMapConfig] = None
) -> SpectralMeasure:
    """
    Limit law of Q in the two cases where it reduces to Law(chi).

    nu = delta_1 gives Law(alpha^2 chi + beta^2); beta^2 = 0 gives
    Law(alpha^2 chi_nu) with nu inside the MP maps and no shift.

    Raises:
        UnsupportedCaseError: for any other (nu, stats); use q_limit_general
    """
    if is_unit_delta(nu):
        return affine(chi_law(SpectralMeasure.delta(1.0), gamma2, cfg), stats.alpha_sq, stats.beta_sq)
    if stats.beta_sq <= SHIFT_FREE_TOLERANCE:
        return affine(chi_law(nu, gamma2, cfg), stats.alpha_sq, 0.0)
    raise UnsupportedCaseError(
        "The Law(chi) formula holds only for nu = delta_1 or beta^2 = 0 "
        f"(got beta^2 = {stats.beta_sq:.6g} and a non-degenerate nu); use q_limit_general"
    )
