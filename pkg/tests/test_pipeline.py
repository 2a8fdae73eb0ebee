"""Tests for experiment configs, theory densities, the runner and report bundles"""

import json
from pathlib import Path

import numpy as np
import pytest

from modules.activations import NegPartActivation, hermite_stats
from modules.errors import ResourceCapError, ValidationError
from modules.free import MpMapConfig
from modules.measures import SpectralMeasure, distance_w1
from modules.pipeline import (
    ExperimentConfig,
    ExperimentConfigManager,
    ExperimentReport,
    ExperimentRunner,
    MeasureCache,
    TheoryConfig,
    cache_key,
    esd_frame,
    gamma_scan,
    load_config,
    load_report,
    resolve_route,
    save_config,
    scaffold,
    theory_density,
)
from modules.simulation import KernelKind
from modules.stats import detect_gaps

EXPERIMENTS_DIR = Path(__file__).parent.parent / "config" / "experiments"
FAST_MP = MpMapConfig(grid_points=1024, max_nodes=1024)


def small_config(tmp_path, **overrides) -> ExperimentConfig:
    """A quick linear-activation experiment writing into tmp_path."""
    base = {"n": 120, "d": 12, "p": 10, "grid": 1024, "output_dir": str(tmp_path)}
    base.update(overrides)
    return scaffold("small").with_overrides(**base)


def minimal_dict(**extra):
    data = {"id": "t", "n": 100, "d": 10, "p": 8, "nu": "delta:1", "activation": "identity"}
    data.update(extra)
    return data


class TestExperimentConfig:
    """Test strict config parsing."""

    def test_minimal(self):
        """Required keys alone give a valid config with defaults."""
        config = ExperimentConfig.from_dict(minimal_dict())
        assert config.kernels == [KernelKind.K]
        assert config.seeds == []
        assert config.theory.route == "auto"
        assert config.gamma1 == pytest.approx(100 / 80)

    def test_missing_key(self):
        """A missing required key is rejected."""
        data = minimal_dict()
        del data["nu"]
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(data)

    def test_unknown_key(self):
        """Unknown keys are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(minimal_dict(width=3))

    @pytest.mark.parametrize("key,value", [("n", "100"), ("n", True), ("seeds", "0,1"), ("kernels", ["ntk"])])
    def test_bad_values(self, key, value):
        """Wrong types and enum values are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(minimal_dict(**{key: value}))

    def test_bad_theory_section(self):
        """Unknown theory keys and routes are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(minimal_dict(theory={"grid": 10}))
        with pytest.raises(ValidationError):
            TheoryConfig(route="fast")

    def test_solver_settings_validated(self):
        """Theory settings go through the solver validation."""
        with pytest.raises(ValidationError):
            TheoryConfig(damping=2.0)

    def test_bad_nu(self):
        """The nu spec is parsed at construction."""
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict(minimal_dict(nu="two_point:1,2"))

    def test_ratio_overrides(self):
        """gamma2 sets p and gamma1 then sets n."""
        config = ExperimentConfig.from_dict(minimal_dict()).with_overrides(gamma2=0.5, gamma1=2.0)
        assert config.p == 5
        assert config.n == 100
        assert config.gamma1 == pytest.approx(2.0)

    def test_theory_overrides(self):
        """grid and eta go to the theory section."""
        config = ExperimentConfig.from_dict(minimal_dict()).with_overrides(grid=512, eta=1e-3)
        assert config.theory.grid_points == 512
        assert config.theory.eta == pytest.approx(1e-3)

    @pytest.mark.parametrize("suffix", [".yaml", ".json"])
    def test_save_load_round_trip(self, tmp_path, suffix):
        """Configs survive a write and read in both formats."""
        config = scaffold("round")
        loaded = load_config(save_config(config, tmp_path / f"round{suffix}"))
        assert loaded.to_dict() == config.to_dict()

    def test_unreadable_file(self, tmp_path):
        """Missing files are a validation error."""
        with pytest.raises(ValidationError):
            load_config(tmp_path / "missing.yaml")

    @pytest.mark.parametrize("name", ["linear_delta_g05", "linear_delta_g1", "two_point_gap", "neg_part_delta"])
    def test_shipped_configs(self, name):
        """The shipped experiment configs load."""
        config = load_config(EXPERIMENTS_DIR / f"{name}.yaml")
        assert config.id == name
        assert config.seeds


class TestExperimentConfigManager:
    """Test loading a directory of configs."""

    def test_load_and_tags(self, tmp_path):
        """Configs load by id; invalid files are skipped."""
        save_config(scaffold("one"), tmp_path / "one.yaml")
        (tmp_path / "broken.yaml").write_text("id: broken\nn: [1\n")
        manager = ExperimentConfigManager(str(tmp_path))
        assert [c.id for c in manager.list_experiments()] == ["one"]
        assert manager.get_experiment("one").n == 600
        assert [c.id for c in manager.get_experiments_by_tag("example")] == ["one"]

    def test_save_experiment(self, tmp_path):
        """Saved configs are visible to a fresh manager."""
        ExperimentConfigManager(str(tmp_path)).save_experiment(scaffold("two"))
        assert ExperimentConfigManager(str(tmp_path)).get_experiment("two") is not None

    def test_missing_directory(self, tmp_path):
        """A missing directory means no experiments."""
        assert ExperimentConfigManager(str(tmp_path / "none")).list_experiments() == []


class TestCache:
    """Test the measure cache."""

    def test_key_is_order_free(self):
        """Dict order does not change the key."""
        assert cache_key({"a": 1, "b": [1, 2]}) == cache_key({"b": [1, 2], "a": 1})

    def test_computes_once(self, tmp_path):
        """A second lookup reads the stored measure."""
        cache = MeasureCache(tmp_path)
        calls = []

        def compute():
            calls.append(1)
            return SpectralMeasure.from_atoms([1.0, 2.0])

        first = cache.get_or_compute({"x": 1}, compute)
        second = cache.get_or_compute({"x": 1}, compute)
        assert len(calls) == 1
        assert second.atoms == first.atoms

    def test_unreadable_entry(self, tmp_path):
        """Corrupt entries are ignored and recomputed."""
        cache = MeasureCache(tmp_path)
        cache.path_for(cache_key({"x": 2})).write_text("not json")
        measure = cache.get_or_compute({"x": 2}, lambda: SpectralMeasure.delta(3.0))
        assert measure.atoms == [(3.0, 1.0)]

    def test_disabled(self):
        """A cache without a directory stores nothing."""
        cache = MeasureCache()
        assert not cache.enabled
        assert cache.get("anything") is None


class TestTheoryDensity:
    """Test the limit law of K."""

    def test_route_resolution(self):
        """auto picks the special route for delta_1 and the general one otherwise."""
        stats = hermite_stats(NegPartActivation())
        assert resolve_route("auto", SpectralMeasure.delta(1.0), stats) == "special"
        assert resolve_route("auto", SpectralMeasure.from_atoms([1.0, 3.0]), stats) == "general"
        with pytest.raises(ValidationError):
            resolve_route("fast", SpectralMeasure.delta(1.0), stats)

    def test_special_route(self):
        """min(x, 0) with nu = delta_1 keeps the mean alpha^2 + beta^2 of the limit law."""
        stats = hermite_stats(NegPartActivation())
        theory, diagnostics = theory_density(SpectralMeasure.delta(1.0), 0.5, 0.8, stats, mp_cfg=FAST_MP)
        assert diagnostics["route"] == "special"
        assert "mp_map" in diagnostics
        assert theory.total_mass == pytest.approx(1.0, abs=1e-9)
        assert theory.mean == pytest.approx(0.25 + stats.beta_sq, rel=5e-3)

    def test_small_gamma1(self):
        """gamma1 = 1e-3 and 1e-4 give laws within W1 2e-2 concentrating at the mean."""
        stats = hermite_stats(NegPartActivation())
        nu = SpectralMeasure.delta(1.0)
        coarse, _ = theory_density(nu, 1e-3, 0.8, stats)
        fine, _ = theory_density(nu, 1e-4, 0.8, stats)
        assert distance_w1(coarse, fine) <= 2e-2
        assert fine.mean == pytest.approx(0.25 + stats.beta_sq, rel=5e-3)

    def test_bad_ratios(self):
        """Ratios must be positive."""
        with pytest.raises(ValidationError):
            theory_density(SpectralMeasure.delta(1.0), 0.0, 0.8, hermite_stats(NegPartActivation()))

    def test_cached_result(self, tmp_path):
        """A cached theory density equals the computed one."""
        stats = hermite_stats(NegPartActivation())
        cache = MeasureCache(tmp_path)
        first, _ = theory_density(SpectralMeasure.delta(1.0), 0.5, 0.8, stats, mp_cfg=FAST_MP, cache=cache)
        second, _ = theory_density(SpectralMeasure.delta(1.0), 0.5, 0.8, stats, mp_cfg=FAST_MP, cache=cache)
        assert np.array_equal(first.density, second.density)
        assert len(list(tmp_path.iterdir())) == 2


class TestExperimentRunner:
    """Test the end-to-end runner."""

    def test_theory_only(self, tmp_path):
        """No seeds gives a theory-only report and bundle."""
        report = ExperimentRunner(small_config(tmp_path, seeds=[]), quiet=True).run()
        assert report.passed
        assert report.metrics == {}
        for name in ["report.json", "theory.csv", "theory_diagnostics.json", "esd_k.csv"]:
            assert (tmp_path / name).exists(), name

    def test_simulation_invariants(self, tmp_path):
        """Simulated kernels pass the PSD, NTK identity and rank checks."""
        config = small_config(tmp_path, kernels=["k", "k_ntk"], seeds=[0, 1])
        report = ExperimentRunner(config, quiet=True).run()
        assert report.passed, report.failed_invariants
        assert {"psd", "ntk_identity", "ck_rank", "theory_mass"} <= set(report.invariants)
        assert set(report.metrics) == {"k", "k_ntk"}
        assert (tmp_path / "histogram_k_ntk.csv").exists()

    def test_report_round_trip(self, tmp_path):
        """report.json loads back with the same theory and flags."""
        report = ExperimentRunner(small_config(tmp_path, seeds=[0]), quiet=True).run()
        loaded = load_report(tmp_path)
        assert loaded.passed == report.passed
        assert loaded.metrics == json.loads(json.dumps(report.metrics))
        assert distance_w1(loaded.theory, report.theory) <= 1e-12
        data = json.loads((tmp_path / "report.json").read_text())
        assert isinstance(data["disconnected_support"], bool)

    def test_schema_version(self):
        """Reports of another schema version are rejected."""
        with pytest.raises(ValidationError):
            ExperimentReport.from_dict({"schema_version": 99})

    def test_deterministic(self, tmp_path):
        """Same config, same bytes, whatever the number of jobs."""
        ExperimentRunner(small_config(tmp_path / "a", seeds=[0, 1]), quiet=True).run()
        ExperimentRunner(small_config(tmp_path / "b", seeds=[0, 1], jobs=2), quiet=True).run()
        for name in ["esd_k.csv", "histogram_k.csv", "theory.csv"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_n_cap(self, tmp_path):
        """Simulating above n_cap is a resource error."""
        config = small_config(tmp_path, seeds=[0], n_cap=100)
        with pytest.raises(ResourceCapError):
            ExperimentRunner(config, quiet=True).run()

    @pytest.mark.parametrize(
        "name",
        [
            "linear_delta_g05",
            "linear_delta_g1",
            "neg_part_delta",
            pytest.param("two_point_gap", marks=pytest.mark.slow),
        ],
    )
    def test_shipped_theory(self, name, tmp_path):
        """Every shipped config yields a normalized theory law supported on [0, inf)."""
        config = load_config(EXPERIMENTS_DIR / f"{name}.yaml").with_overrides(
            output_dir=str(tmp_path), seeds=[], grid=2048
        )
        theory, _ = ExperimentRunner(config, quiet=True).compute_theory()
        assert theory.total_mass == pytest.approx(1.0, abs=1e-6)
        assert theory.grid.start >= 0.0
        assert np.all(theory.density >= 0.0)
        assert np.all(theory.atom_locations >= 0.0)

    def test_esd_frame(self):
        """Long-format table sorted by seed, then eigenvalue."""
        frame = esd_frame({1: np.array([3.0, 1.0]), 0: np.array([2.0])})
        assert frame["seed"].tolist() == [0, 1, 1]
        assert frame["eigenvalue"].tolist() == [2.0, 1.0, 3.0]

    def test_gamma_scan(self, tmp_path):
        """One row per ratio pair."""
        table = gamma_scan(small_config(tmp_path, seeds=[]), [(0.5, 0.8), (1.0, 0.8)], quiet=True)
        assert table["gamma1"].tolist() == [0.5, 1.0]
        assert list(table.columns) == ["gamma1", "gamma2", "gaps", "largest_gap", "disconnected_support"]

    @pytest.mark.slow
    def test_linear_end_to_end(self, tmp_path):
        """phi = x, nu = delta_1, n = 1000, d = 50, p = 40: pooled W1 to the theory at most 0.08."""
        config = load_config(EXPERIMENTS_DIR / "linear_delta_g05.yaml").with_overrides(output_dir=str(tmp_path))
        report = ExperimentRunner(config, quiet=True).run()
        assert report.metrics["k"]["w1"] <= 0.08
        assert report.passed

    @pytest.mark.slow
    def test_two_point_gap(self, tmp_path):
        """nu = (delta_1 + delta_30)/2 gives a disconnected theory support."""
        config = load_config(EXPERIMENTS_DIR / "two_point_gap.yaml").with_overrides(output_dir=str(tmp_path), seeds=[])
        theory, _ = ExperimentRunner(config, quiet=True).compute_theory()
        assert detect_gaps(theory)

    @pytest.mark.slow
    def test_two_point_gap_is_empty_in_simulation(self, tmp_path):
        """At n = 1500 at most 1% of the simulated eigenvalues fall inside the theory gap."""
        config = load_config(EXPERIMENTS_DIR / "two_point_gap.yaml").with_overrides(
            output_dir=str(tmp_path), seeds=[0, 1]
        )
        report = ExperimentRunner(config, quiet=True).run(write=False)
        assert report.gaps
        assert max(report.gap_masses["k"]) <= 0.01

    @pytest.mark.slow
    def test_gap_widens_with_atom_separation(self, tmp_path):
        """Moving the upper atom of nu from 30 to 60 keeps the gap and widens it."""
        base = load_config(EXPERIMENTS_DIR / "two_point_gap.yaml").with_overrides(output_dir=str(tmp_path), seeds=[])
        widths = []
        for nu in ["two_point:1,30,0.5", "two_point:1,60,0.5"]:
            theory, _ = ExperimentRunner(base.with_overrides(nu=nu), quiet=True).compute_theory()
            gaps = detect_gaps(theory)
            assert gaps, nu
            widths.append(max(g.length for g in gaps))
        assert widths[1] > widths[0]

    @pytest.mark.slow
    def test_k_distance_shrinks_with_size(self, tmp_path):
        """At gamma1 = 0.5, gamma2 = 0.8 the pooled W1 of K does not grow from n = 250 to n = 1000."""
        base = load_config(EXPERIMENTS_DIR / "linear_delta_g05.yaml")
        distances = []
        for n, d, p in [(250, 25, 20), (640, 40, 32), (1000, 50, 40)]:
            config = base.with_overrides(n=n, d=d, p=p, kernels=["k"], seeds=[0, 1], output_dir=str(tmp_path))
            report = ExperimentRunner(config, quiet=True).run(write=False)
            distances.append(report.metrics["k"]["w1"])
        assert distances[1] <= distances[0] + 5e-3
        assert distances[2] <= distances[1] + 5e-3

    @pytest.mark.slow
    def test_two_point_gap_scan(self, tmp_path):
        """Some ratio pairs around the two-point configuration separate the support."""
        config = load_config(EXPERIMENTS_DIR / "two_point_gap.yaml").with_overrides(output_dir=str(tmp_path), seeds=[])
        pairs = [(g1, g2) for g1 in [0.5, 1.0, 2.0, 4.0, 8.0] for g2 in [0.25, 0.5]]
        table = gamma_scan(config, pairs, quiet=True)
        assert table["disconnected_support"].any()

