"""Free-probability limit laws: MP map, Law(chi), general route and trace moments"""

from .chi import chi_law, is_unit_delta, q_limit_special
from .free_approx import (
    FreeApprox,
    FreeApproxConfig,
    FreeApproxDiagnostics,
    q_limit_general,
    q_limit_general_with_diagnostics,
)
from .marchenko_pastur import (
    COVARIANCE,
    GRAM,
    MpMapConfig,
    MpMapDiagnostics,
    mp_cdf,
    mp_density,
    mp_edges,
    mp_map,
    mp_map_with_diagnostics,
    mp_measure,
    mp_stieltjes,
    nonnegative_part,
    reduced_mp_measure,
    zero_atom_mass,
)
from .moments import compositions, direct_moment, moment_formula_binomial, moment_inputs, q_moment_formula

__all__ = [
    "COVARIANCE",
    "GRAM",
    "MpMapConfig",
    "MpMapDiagnostics",
    "mp_edges",
    "mp_density",
    "mp_stieltjes",
    "mp_cdf",
    "mp_measure",
    "reduced_mp_measure",
    "zero_atom_mass",
    "nonnegative_part",
    "mp_map",
    "mp_map_with_diagnostics",
    "chi_law",
    "is_unit_delta",
    "q_limit_special",
    "FreeApprox",
    "FreeApproxConfig",
    "FreeApproxDiagnostics",
    "q_limit_general",
    "q_limit_general_with_diagnostics",
    "compositions",
    "moment_inputs",
    "q_moment_formula",
    "moment_formula_binomial",
    "direct_moment",
]
