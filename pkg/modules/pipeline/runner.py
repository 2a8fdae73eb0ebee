"""End-to-end experiment: theory density, matched simulations, metrics and artifacts."""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..activations import ActivationStats, get_activation, hermite_stats
from ..errors import ResourceCapError
from ..measures import SpectralMeasure
from ..simulation import KernelEnsemble, KernelKind, run_seeds, sample_model, zero_fraction
from ..stats import compare_spectra, detect_gaps, gap_masses
from .cache import MeasureCache
from .config import ExperimentConfig
from .report import ExperimentReport, write_report, write_spectra, write_theory
from .theory import theory_density

PSD_RELATIVE_TOLERANCE = 1e-8
NTK_IDENTITY_TOLERANCE = 1e-10

# kernels whose limit law is theory_density; K_CK has rank at most p
COMPARED_KERNELS = (KernelKind.K, KernelKind.K_TILDE, KernelKind.K_NTK)


@dataclass
class SeedResult:
    """Spectra and per-seed checks of one simulated model."""

    seed: int
    eigenvalues: Dict[KernelKind, np.ndarray] = field(default_factory=dict)
    ntk_identity_error: Optional[float] = None
    ck_rank: Optional[int] = None

    def min_relative_eigenvalue(self) -> float:
        worst = 0.0
        for eigs in self.eigenvalues.values():
            scale = max(float(np.max(np.abs(eigs))), 1e-300)
            worst = min(worst, float(eigs[0]) / scale)
        return worst


class ExperimentRunner:
    """Runs one experiment config and writes its report bundle."""

    def __init__(self, config: ExperimentConfig, quiet: bool = False, cache: Optional[MeasureCache] = None):
        self.config = config
        self.quiet = quiet
        self.cache = cache if cache is not None else MeasureCache.from_env()
        self.activation = get_activation(config.activation)
        self._stats: Optional[ActivationStats] = None

    def _say(self, message: str):
        if not self.quiet:
            print(message)

    @property
    def stats(self) -> ActivationStats:
        if self._stats is None:
            self._stats = hermite_stats(self.activation, order=self.config.quadrature_order)
        return self._stats

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    def check_caps(self):
        if self.config.seeds and self.config.n > self.config.n_cap:
            raise ResourceCapError(f"n = {self.config.n} exceeds n_cap = {self.config.n_cap}")

    def compute_theory(
        self, gamma1: Optional[float] = None, gamma2: Optional[float] = None
    ) -> Tuple[SpectralMeasure, Dict[str, Any]]:
        """theory_density at the config's ratios (or the given ones)."""
        cfg = self.config
        nu = cfg.nu_spec.to_measure(cfg.theory.grid_points)
        seed = cfg.seeds[0] if cfg.seeds else 0
        return theory_density(
            nu,
            gamma1 if gamma1 is not None else cfg.gamma1,
            gamma2 if gamma2 is not None else cfg.gamma2,
            self.stats,
            route=cfg.theory.route,
            mp_cfg=cfg.theory.mp_config(),
            free_cfg=cfg.theory.free_config(seed),
            cache=self.cache,
        )

    def _simulate_seed(self, seed: int) -> SeedResult:
        model = sample_model(self.config.model_params(seed))
        ensemble = KernelEnsemble(model, self.activation, self.stats)
        result = SeedResult(seed=seed)
        kinds = self.config.kernels
        for kind in kinds:
            result.eigenvalues[kind] = ensemble.eigenvalues(kind)
        if KernelKind.K_NTK in kinds:
            result.ntk_identity_error = ensemble.ntk_identity_error()
        if KernelKind.K_CK in kinds or KernelKind.K_NTK in kinds:
            result.ck_rank = ensemble.ck_rank()
        for kind in list(KernelKind):
            ensemble.release(kind)
        return result

    def simulate(self) -> Dict[int, SeedResult]:
        return run_seeds(self.config.seeds, self._simulate_seed, jobs=self.config.jobs)

    def run(self, write: bool = True) -> ExperimentReport:
        """
        Theory, simulation over every configured seed, metrics and invariant checks.

        Args:
            write: Write the artifact bundle to the config's output_dir

        Returns:
            ExperimentReport; ``report.passed`` is False when an invariant check failed
        """
        cfg = self.config
        self.check_caps()
        self._say(f"🎯 Experiment {cfg.id}: n={cfg.n} d={cfg.d} p={cfg.p} nu={cfg.nu} activation={cfg.activation}")
        timing: Dict[str, float] = {}
        results: Dict[int, SeedResult] = {}

        started = time.perf_counter()
        theory, diagnostics = self.compute_theory()
        timing["theory_seconds"] = time.perf_counter() - started
        self._say(f"   ✅ Theory density ({diagnostics.get('route')} route) in {timing['theory_seconds']:.1f}s")

        gaps = detect_gaps(theory)
        report = ExperimentReport(
            experiment=cfg.to_dict(),
            gamma1=cfg.gamma1,
            gamma2=cfg.gamma2,
            activation_stats=self.stats.to_dict(),
            theory=theory,
            theory_summary={
                "total_mass": theory.total_mass,
                "atom_at_zero": theory.atom_mass_at(0.0),
                "mean": theory.mean,
                "support": list(theory.support()),
            },
            gaps=[g.to_dict() for g in gaps],
            diagnostics=diagnostics,
            timing=timing,
        )
        report.invariants["theory_mass"] = theory.is_normalized()
        if gaps:
            self._say(f"   🔍 Disconnected support detected: {len(gaps)} gap(s)")

        if cfg.seeds:
            started = time.perf_counter()
            self._say(f"   🔍 Simulating {len(cfg.seeds)} seed(s) with {cfg.jobs} job(s)...")
            results = self.simulate()
            timing["simulation_seconds"] = time.perf_counter() - started
            self._record_simulation(report, theory, results, gaps)
        else:
            self._say("   ⚠️  No seeds configured: theory-only report")

        if write:
            self.write(report, theory, diagnostics, results)

        if report.passed:
            self._say(f"✅ Experiment {cfg.id} complete")
        else:
            self._say(f"❌ Invariant checks failed: {', '.join(report.failed_invariants)}")
        return report

    def _record_simulation(self, report: ExperimentReport, theory: SpectralMeasure, results, gaps):
        seeds = sorted(results)
        for kind in self.config.kernels:
            sets = [results[s].eigenvalues[kind] for s in seeds]
            if gaps:
                report.gap_masses[kind.value] = gap_masses(np.concatenate(sets), gaps)
            if kind not in COMPARED_KERNELS:
                continue
            metrics = compare_spectra(theory, sets, [zero_fraction(e) for e in sets])
            report.metrics[kind.value] = metrics.to_dict()
            report.invariants[f"metric_sanity_{kind.value}"] = metrics.metric_sanity
            self._say(f"   📊 {kind.value}: W1={metrics.w1:.4f} KS={metrics.ks:.4f} spread={metrics.seed_spread:.4f}")

        report.invariants["psd"] = all(
            results[s].min_relative_eigenvalue() >= -PSD_RELATIVE_TOLERANCE for s in seeds
        )
        identity = [results[s].ntk_identity_error for s in seeds if results[s].ntk_identity_error is not None]
        if identity:
            report.invariants["ntk_identity"] = max(identity) <= NTK_IDENTITY_TOLERANCE
        ranks = [results[s].ck_rank for s in seeds if results[s].ck_rank is not None]
        if ranks:
            report.invariants["ck_rank"] = max(ranks) <= min(self.config.n, self.config.p)

    def write(self, report: ExperimentReport, theory, diagnostics, results: Dict[int, SeedResult]):
        out = self.output_dir
        write_theory(theory, diagnostics, out)
        for kind in self.config.kernels:
            write_spectra(kind.value, {s: r.eigenvalues[kind] for s, r in results.items()}, out)
        path = write_report(report, out)
        self._say(f"   💾 Saved report to {path}")


def run_experiment(config: ExperimentConfig, quiet: bool = False, write: bool = True) -> ExperimentReport:
    return ExperimentRunner(config, quiet=quiet).run(write=write)


def gamma_scan(
    config: ExperimentConfig, pairs: Sequence[Tuple[float, float]], quiet: bool = False
) -> pd.DataFrame:
    """
    Theory densities over (gamma1, gamma2) pairs, with detected gaps.

    Returns:
        One row per pair: gamma1, gamma2, gaps, largest_gap, disconnected_support
    """
    runner = ExperimentRunner(config, quiet=quiet)
    rows: List[Dict[str, Any]] = []
    for gamma1, gamma2 in pairs:
        theory, _ = runner.compute_theory(gamma1, gamma2)
        gaps = detect_gaps(theory)
        rows.append(
            {
                "gamma1": gamma1,
                "gamma2": gamma2,
                "gaps": len(gaps),
                "largest_gap": max((g.length for g in gaps), default=0.0),
                "disconnected_support": bool(gaps),
            }
        )
        runner._say(f"   📊 gamma1={gamma1:g} gamma2={gamma2:g}: {len(gaps)} gap(s)")
    return pd.DataFrame(rows, columns=["gamma1", "gamma2", "gaps", "largest_gap", "disconnected_support"])
