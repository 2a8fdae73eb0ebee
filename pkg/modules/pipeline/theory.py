"""Limit laws of the model: mu_{nu,phi} by the special or general route, then the MP map with gamma1."""

import logging
from typing import Any, Dict, Optional, Tuple

from ..activations import ActivationStats
from ..errors import ValidationError
from ..free import (
    GRAM,
    FreeApproxConfig,
    MpMapConfig,
    is_unit_delta,
    mp_map_with_diagnostics,
    q_limit_general_with_diagnostics,
    q_limit_special,
)
from ..measures import SpectralMeasure, affine
from .cache import MeasureCache, cache_key

logger = logging.getLogger(__name__)


def special_case_applies(nu: SpectralMeasure, stats: ActivationStats) -> bool:
    return is_unit_delta(nu) or stats.beta_sq <= 1e-12


def resolve_route(route: str, nu: SpectralMeasure, stats: ActivationStats) -> str:
    if route == "auto":
        return "special" if special_case_applies(nu, stats) else "general"
    if route not in ("special", "general"):
        raise ValidationError(f"Unknown route '{route}'")
    return route


def limit_law(
    nu: SpectralMeasure,
    gamma2: float,
    stats: ActivationStats,
    route: str = "auto",
    mp_cfg: Optional[MpMapConfig] = None,
    free_cfg: Optional[FreeApproxConfig] = None,
) -> Tuple[SpectralMeasure, Dict[str, Any]]:
    """
    mu_{nu,phi}, the limit law of Q.

    Returns:
        (measure, diagnostics) where diagnostics records the route taken
    """
    resolved = resolve_route(route, nu, stats)
    if resolved == "special":
        return q_limit_special(nu, gamma2, stats, mp_cfg), {"route": "special"}
    if stats.alpha_sq == 0:
        return affine(nu, stats.beta_sq, 0.0), {"route": "general", "note": "alpha = 0: Q = beta^2 D^2"}
    measure, diagnostics = q_limit_general_with_diagnostics(nu, gamma2, stats, free_cfg)
    return measure, {"route": "general", "free_approx": diagnostics.to_dict()}


def theory_density(
    nu: SpectralMeasure,
    gamma1: float,
    gamma2: float,
    stats: ActivationStats,
    route: str = "auto",
    mp_cfg: Optional[MpMapConfig] = None,
    free_cfg: Optional[FreeApproxConfig] = None,
    cache: Optional[MeasureCache] = None,
) -> Tuple[SpectralMeasure, Dict[str, Any]]:
    """
    Limit spectral law of K: the Gram-form MP map with shape gamma1 applied to mu_{nu,phi}.

    Args:
        nu: Law of a^2
        gamma1: n / (d p)
        gamma2: p / d
        stats: Activation statistics
        route: ``auto``, ``special`` or ``general``
        mp_cfg: MP-map settings
        free_cfg: Settings of the general route
        cache: Optional measure cache

    Returns:
        (measure, diagnostics)
    """
    if not gamma1 > 0 or not gamma2 > 0:
        raise ValidationError(f"gamma1 and gamma2 must be positive, got {gamma1}, {gamma2}")
    mp_cfg = mp_cfg or MpMapConfig()
    cache = cache or MeasureCache()
    diagnostics: Dict[str, Any] = {}

    def compute_limit() -> SpectralMeasure:
        measure, info = limit_law(nu, gamma2, stats, route, mp_cfg, free_cfg)
        diagnostics.update(info)
        return measure

    inputs = {
        "nu": cache_key({"atoms": nu.atoms, "grid": nu.grid.to_dict(), "density": nu.density.tolist()}),
        "gamma2": gamma2,
        "stats": stats.to_dict(),
        "route": resolve_route(route, nu, stats),
        "mp": mp_cfg.to_dict(),
        "free": free_cfg.to_dict() if free_cfg is not None else None,
    }
    limit = cache.get_or_compute(inputs, compute_limit)
    diagnostics.setdefault("route", inputs["route"])

    def compute_theory() -> SpectralMeasure:
        measure, mp_diagnostics = mp_map_with_diagnostics(limit, gamma1, mp_cfg, orientation=GRAM)
        diagnostics["mp_map"] = mp_diagnostics.to_dict()
        return measure

    theory = cache.get_or_compute({**inputs, "gamma1": gamma1, "stage": "theory"}, compute_theory)
    logger.debug("theory_density gamma1=%s gamma2=%s route=%s", gamma1, gamma2, diagnostics["route"])
    return theory, diagnostics

