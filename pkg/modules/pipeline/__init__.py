"""Experiment orchestration: configs, theory densities, simulations and report bundles"""

from .cache import CACHE_ENV, MeasureCache, cache_key
from .config import ExperimentConfig, ExperimentConfigManager, TheoryConfig, load_config, save_config, scaffold
from .report import ExperimentReport, esd_frame, load_report, write_report, write_spectra, write_theory
from .runner import ExperimentRunner, SeedResult, gamma_scan, run_experiment
from .theory import limit_law, resolve_route, special_case_applies, theory_density

__all__ = [
    "CACHE_ENV",
    "MeasureCache",
    "cache_key",
    "TheoryConfig",
    "ExperimentConfig",
    "ExperimentConfigManager",
    "load_config",
    "save_config",
    "scaffold",
    "ExperimentReport",
    "esd_frame",
    "load_report",
    "write_report",
    "write_spectra",
    "write_theory",
    "ExperimentRunner",
    "SeedResult",
    "run_experiment",
    "gamma_scan",
    "limit_law",
    "resolve_route",
    "special_case_applies",
    "theory_density",
]
