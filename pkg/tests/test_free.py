"""Tests for the MP map, Law(chi), the free approximation and the trace-moment formula"""

import numpy as np
import pytest

from modules.activations import ActivationStats, IdentityActivation, NegPartActivation, hermite_stats
from modules.errors import DomainError, SolverError, UnsupportedCaseError, ValidationError
from modules.free import (
    COVARIANCE,
    GRAM,
    FreeApprox,
    FreeApproxConfig,
    MpMapConfig,
    chi_law,
    compositions,
    direct_moment,
    moment_formula_binomial,
    moment_inputs,
    mp_cdf,
    mp_density,
    mp_edges,
    mp_map,
    mp_map_with_diagnostics,
    mp_measure,
    nonnegative_part,
    q_limit_general,
    q_limit_general_with_diagnostics,
    q_limit_special,
    q_moment_formula,
    reduced_mp_measure,
    zero_atom_mass,
)
from modules.free.marchenko_pastur import finish_density
from modules.measures import Grid, SpectralMeasure, affine, distance_w1
from modules.tensor import build_q, exact_qhat_spectrum

MP_SHAPES = [0.25, 0.5, 1.0, 2.0, 4.0]
SMALL_FREE = FreeApproxConfig(dim=32, replicas=1, grid_points=256)


def two_point(a: float = 1.0, b: float = 3.0) -> SpectralMeasure:
    return SpectralMeasure.from_atoms([a, b])


class TestMarchenkoPastur:
    """Test the closed-form MP law."""

    def test_edges_at_one(self):
        """gamma = 1 has support [0, 4]."""
        assert mp_edges(1.0) == pytest.approx((0.0, 4.0))

    def test_atom_above_one(self):
        """gamma = 4 has an atom of mass 3/4 at 0."""
        assert mp_measure(4.0).atom_mass_at(0.0) == pytest.approx(0.75, abs=1e-12)

    def test_no_atom_below_one(self):
        """gamma < 1 has no atom."""
        assert mp_measure(0.5).atom_mass_at(0.0) == 0.0

    @pytest.mark.parametrize("gamma,atom,mean", [(2.0, 0.0, 2.0), (0.5, 0.5, 0.5)])
    def test_reduced_law(self, gamma, atom, mean):
        """gamma * MP(gamma) without the rank-deficiency atom is a probability law with mean gamma."""
        reduced = reduced_mp_measure(gamma)
        assert reduced.atom_mass_at(0.0) == pytest.approx(atom, abs=1e-9)
        assert reduced.total_mass == pytest.approx(1.0, abs=1e-6)
        assert reduced.mean == pytest.approx(mean, rel=1e-3)

    def test_moments(self):
        """MP(0.5) has mean 1 and variance 0.5."""
        mu = mp_measure(0.5)
        assert mu.mean == pytest.approx(1.0, abs=1e-4)
        assert mu.variance == pytest.approx(0.5, abs=1e-3)

    @pytest.mark.parametrize("gamma", MP_SHAPES)
    def test_cdf_reaches_one(self, gamma):
        """The CDF is 1 past the upper edge and the atom mass just past 0."""
        lo, hi = mp_edges(gamma)
        assert mp_cdf(hi + 1e-9, gamma) == pytest.approx(1.0, abs=1e-6)
        assert mp_cdf(0.0, gamma) == pytest.approx(max(0.0, 1 - 1 / gamma), abs=1e-9)

    def test_bad_shape(self):
        """Non-positive shapes are a domain error."""
        with pytest.raises(DomainError):
            mp_edges(0.0)


class TestMpMap:
    """Test the Stieltjes fixed-point solver."""

    @pytest.mark.parametrize("gamma", MP_SHAPES)
    def test_unit_delta_gives_mp_density(self, gamma):
        """MP(gamma) ⊠ delta_1 matches the closed-form density away from the edges."""
        measure = mp_map(SpectralMeasure.delta(1.0), gamma)
        lo, hi = mp_edges(gamma)
        x = measure.grid.points
        interior = (x > lo + 0.05) & (x < hi - 0.05)
        error = np.max(np.abs(measure.density[interior] - mp_density(x[interior], gamma)))
        assert error <= 1e-3

    @pytest.mark.parametrize("gamma", MP_SHAPES)
    def test_unit_delta_w1(self, gamma):
        """W1 to the closed-form MP law is at most 5e-3."""
        measure = mp_map(SpectralMeasure.delta(1.0), gamma)
        assert distance_w1(measure, mp_measure(gamma)) <= 5e-3

    @pytest.mark.parametrize("gamma", [2.0, 4.0])
    def test_rank_atom(self, gamma):
        """The atom at 0 has mass 1 - 1/gamma."""
        measure = mp_map(SpectralMeasure.delta(1.0), gamma)
        assert measure.atom_mass_at(0.0) == pytest.approx(1 - 1 / gamma, abs=1e-3)

    def test_zero_measure_fixed(self):
        """delta_0 maps to delta_0."""
        measure = mp_map(SpectralMeasure.delta(0.0), 0.5)
        assert measure.atoms == [(0.0, 1.0)]
        assert not measure.has_density

    def test_first_moment_multiplicative(self):
        """The mean of the MP map equals the mean of nu."""
        measure = mp_map(two_point(), 0.5)
        assert measure.mean == pytest.approx(2.0, rel=1e-3)

    def test_converged_everywhere(self):
        """Every grid point meets the residual tolerance."""
        _, diagnostics = mp_map_with_diagnostics(two_point(), 0.5)
        assert diagnostics.unconverged_points == 0
        assert diagnostics.max_residual < MpMapConfig().tolerance

    def test_orientations_agree_at_unit_delta(self):
        """Both fixed points give MP(gamma) for nu = delta_1."""
        nu = SpectralMeasure.delta(1.0)
        covariance = mp_map(nu, 0.5, orientation=COVARIANCE)
        gram = mp_map(nu, 0.5, orientation=GRAM)
        assert distance_w1(covariance, gram) <= 5e-3

    def test_small_gamma_returns_nu(self):
        """The MP map tends to nu as gamma goes to 0."""
        nu = two_point()
        assert distance_w1(mp_map(nu, 1e-4), nu) <= 3e-2

    def test_matches_wishart_simulation(self):
        """nu = (delta_1 + delta_3)/2 at gamma = 0.1 matches A^1/2 Y Y^T A^1/2 / b."""
        a, b = 400, 4000
        measure = mp_map(two_point(), a / b)
        root = np.sqrt(np.repeat([1.0, 3.0], a // 2))
        distances = []
        for seed in range(5):
            y = np.random.default_rng(seed).standard_normal((a, b))
            cov = root[:, None] * (y @ y.T / b) * root[None, :]
            distances.append(distance_w1(measure, SpectralMeasure.from_samples(np.linalg.eigvalsh(cov))))
        assert np.mean(distances) <= 0.05

    def test_zero_atom_from_rank(self):
        """A nu with an atom at 0 keeps it when gamma is small."""
        nu = SpectralMeasure.from_atoms([0.0, 1.0], [0.3, 0.7])
        assert zero_atom_mass(nu, 0.5) == pytest.approx(0.3)
        assert zero_atom_mass(nu, 2.0) == pytest.approx(0.5)

    def test_negative_support_rejected(self):
        """The MP map needs a measure on [0, inf)."""
        with pytest.raises(ValidationError):
            mp_map(SpectralMeasure.from_atoms([-1.0, 1.0]), 0.5)

    def test_leakage_below_zero_dropped(self):
        """A sliver of mass below 0 is dropped and the rest renormalized."""
        nu = SpectralMeasure.from_atoms([-1e-3, 1.0], [5e-4, 1.0 - 5e-4])
        kept = nonnegative_part(nu)
        assert kept.atom_mass_at(1.0) == pytest.approx(1.0)
        assert mp_map(nu, 0.5).mean == pytest.approx(1.0, rel=1e-3)

    @pytest.mark.parametrize("orientation", [COVARIANCE, GRAM])
    def test_output_grid_starts_at_zero(self, orientation):
        """The inversion grid never reaches below 0."""
        measure = mp_map(two_point(), 0.5, orientation=orientation)
        assert measure.grid.start >= 0.0

    def test_chained_gram_map(self):
        """A gridded MP-map output is a valid input to the Gram-form map."""
        cfg = MpMapConfig(grid_points=1024)
        inner = mp_map(two_point(), 0.5, cfg)
        outer = mp_map(inner, 2.0, cfg, orientation=GRAM)
        assert outer.total_mass == pytest.approx(1.0, abs=1e-9)
        assert outer.atom_mass_at(0.0) == pytest.approx(zero_atom_mass(inner, 2.0, GRAM), abs=1e-3)

    def test_wide_ratio_uses_companion(self):
        """Ratios above 1 are solved through the other orientation at the inverse ratio."""
        _, diagnostics = mp_map_with_diagnostics(SpectralMeasure.delta(1.0), 4.0)
        assert any("companion" in note for note in diagnostics.notes)

    def test_atom_masses_above_one_rescaled(self):
        """Atom masses are clipped to [0, 1] and scaled down when they sum above 1."""
        grid = Grid(start=0.0, step=0.1, n=11)
        measure, _ = finish_density(grid, np.ones(grid.n), [1.0, 2.0, 3.0], [0.7, 0.5, -0.2])
        assert measure.total_mass == pytest.approx(1.0)
        assert measure.atom_mass_at(1.0) == pytest.approx(0.7 / 1.2)
        assert measure.atom_mass_at(2.0) == pytest.approx(0.5 / 1.2)
        assert not measure.has_density

    def test_solver_failure(self):
        """One iteration per point cannot meet the tolerance."""
        with pytest.raises(SolverError):
            mp_map(two_point(), 0.5, MpMapConfig(max_iters=1, grid_points=64))

    @pytest.mark.parametrize(
        "kwargs", [{"tolerance": 0.0}, {"damping": 0.0}, {"damping": 1.5}, {"max_iters": 0}, {"inversion": "lanczos"}]
    )
    def test_config_validation(self, kwargs):
        """Bad solver settings are a validation error."""
        with pytest.raises(ValidationError):
            MpMapConfig(**kwargs)


class TestChiLaw:
    """Test Law(chi)."""

    def test_half_atom_at_gamma_one(self):
        """nu = delta_1, gamma2 = 1 puts mass 1/2 at 0."""
        law = chi_law(SpectralMeasure.delta(1.0), 1.0)
        assert law.atom_mass_at(0.0) == pytest.approx(0.5, abs=2e-3)

    def test_mean(self):
        """nu = delta_1, gamma2 = 0.8 has mean 1."""
        law = chi_law(SpectralMeasure.delta(1.0), 0.8)
        assert law.mean == pytest.approx(1.0, abs=2e-3)

    @pytest.mark.parametrize("gamma2", [0.25, 0.8, 1.0, 2.0])
    def test_total_mass(self, gamma2):
        """Law(chi) is a probability measure."""
        assert chi_law(SpectralMeasure.delta(1.0), gamma2).total_mass == pytest.approx(1.0, abs=1e-6)

    def test_wide_layer_atom(self):
        """gamma2 = 2 combines the MP atom 1/2 with the gamma2/2 delta_0 term."""
        law = chi_law(SpectralMeasure.delta(1.0), 2.0)
        assert law.atom_mass_at(0.0) == pytest.approx(0.75, abs=2e-3)

    @pytest.mark.parametrize("gamma2,m0", [(0.5, 0.3), (2.0, 0.5)])
    def test_zero_atom_is_analytic(self, gamma2, m0):
        """The atom at 0 follows from the rank of the MP map, not from the inverted grid."""
        nu = SpectralMeasure.from_atoms([0.0, 1.0], [0.3, 0.7])
        law = chi_law(nu, gamma2)
        expected = 0.5 * gamma2 * m0**2 + (1.0 - gamma2) * m0 + 0.5 * gamma2
        assert law.atom_mass_at(0.0) == pytest.approx(expected, abs=1e-5)
        assert law.total_mass == pytest.approx(1.0, abs=1e-9)

    def test_wide_layer_matches_tensor(self):
        """gamma2 = 2 matches the exact Q-hat spectrum at d = 50, p = 100."""
        W = np.random.default_rng(0).standard_normal((50, 100))
        esd = exact_qhat_spectrum(W, 1.0, 0.0).to_measure()
        assert distance_w1(chi_law(SpectralMeasure.delta(1.0), 2.0), esd) <= 0.05

    @pytest.mark.parametrize("beta", [0.0, 0.5])
    def test_matches_tensor_spectrum(self, beta):
        """Law(chi) shifted by beta^2 matches the Q-hat spectrum at d = 80, p = 64."""
        law = affine(chi_law(SpectralMeasure.delta(1.0), 0.8), 1.0, beta**2)
        distances = []
        for seed in range(5):
            W = np.random.default_rng(seed).standard_normal((80, 64))
            distances.append(distance_w1(law, exact_qhat_spectrum(W, 1.0, beta).to_measure()))
        assert np.mean(distances) <= 0.05


class TestQLimitSpecial:
    """Test the special-case route."""

    def test_linear_activation(self):
        """phi(x) = x with nu = delta_1 gives Law(chi) itself."""
        stats = hermite_stats(IdentityActivation())
        limit = q_limit_special(SpectralMeasure.delta(1.0), 0.5, stats)
        assert distance_w1(limit, chi_law(SpectralMeasure.delta(1.0), 0.5)) <= 1e-6

    def test_neg_part_affine(self):
        """min(x, 0) scales by 1/4 and shifts by 1/4 - 1/(2 pi)."""
        stats = hermite_stats(NegPartActivation())
        limit = q_limit_special(SpectralMeasure.delta(1.0), 0.5, stats)
        shift = 0.25 - 1 / (2 * np.pi)
        assert limit.mean == pytest.approx(0.25 + shift, abs=1e-3)
        assert limit.atom_mass_at(shift) > 0.2

    def test_shift_free_general_nu(self):
        """beta^2 = 0 with a two-point nu gives alpha^2 chi_nu."""
        stats = ActivationStats(c=0.0, alpha=2.0, beta_sq=0.0)
        limit = q_limit_special(two_point(), 0.5, stats)
        assert distance_w1(limit, affine(chi_law(two_point(), 0.5), 4.0, 0.0)) <= 1e-9
        assert limit.mean == pytest.approx(8.0, rel=2e-3)

    def test_unsupported(self):
        """beta^2 > 0 with a non-degenerate nu needs the general route."""
        stats = hermite_stats(NegPartActivation())
        with pytest.raises(UnsupportedCaseError):
            q_limit_special(two_point(), 0.5, stats)


class TestFreeApprox:
    """Test the finite free approximation of the general route."""

    def test_resolvent_identity_without_alpha(self):
        """Y = 0 leaves f(w) = mean of 1 / (beta^2 d_i - w)."""
        stats = ActivationStats(c=0.0, alpha=0.0, beta_sq=0.25)
        approx = FreeApprox.sample(two_point(), 0.5, stats, 32, np.random.default_rng(0))
        w = np.array([0.5 + 0.1j, 2.0 + 0.5j, -1.0 + 1.0j])
        expected = np.mean(1.0 / (0.25 * approx.d_sample[None, :] - w[:, None]), axis=1)
        assert np.allclose(approx.stieltjes(w), expected, atol=1e-8)

    def test_herglotz(self):
        """Im f(w) > 0 in the upper half-plane."""
        approx = FreeApprox.sample(two_point(), 0.8, hermite_stats(NegPartActivation()), 32, np.random.default_rng(1))
        w = np.linspace(0.0, 4.0, 33) + 1.0j
        assert np.all(approx.stieltjes(w).imag > 0)

    def test_quantile_sample(self):
        """Stratified quantiles split a two-point nu evenly."""
        stats = ActivationStats(c=0.0, alpha=1.0, beta_sq=0.0)
        approx = FreeApprox.sample(two_point(1.0, 30.0), 0.5, stats, 64, np.random.default_rng(0))
        assert np.count_nonzero(approx.d_sample == 1.0) == 32
        assert np.count_nonzero(approx.d_sample == 30.0) == 32

    @pytest.mark.slow
    def test_dense_and_stochastic_agree(self):
        """The Kronecker eigenbasis and Hutchinson estimates agree within 2e-2."""
        stats = hermite_stats(NegPartActivation())
        approx = FreeApprox.sample(two_point(), 0.8, stats, 48, np.random.default_rng(2))
        w = np.array([0.3 + 0.5j, 1.0 + 0.5j])
        dense = approx.stieltjes(w, strategy="dense")
        stochastic = approx.stieltjes(w, strategy="stochastic", probes=256, rng=np.random.default_rng(3))
        assert np.max(np.abs(dense - stochastic)) <= 2e-2

    def test_small_dimension_rejected(self):
        """The approximation needs dimension at least 32."""
        with pytest.raises(ValidationError):
            FreeApproxConfig(dim=16)


class TestQLimitGeneral:
    """Test the general route end to end."""

    def test_no_linear_part_unit_delta(self):
        """alpha = 0 and nu = delta_1 give delta at beta^2."""
        stats = ActivationStats(c=0.0, alpha=0.0, beta_sq=0.25)
        limit = q_limit_general(SpectralMeasure.delta(1.0), 0.5, stats, SMALL_FREE)
        assert distance_w1(limit, SpectralMeasure.delta(0.25)) <= 1e-2

    def test_no_linear_part_two_point(self):
        """alpha = 0 gives Law(beta^2 D) with its two atoms."""
        stats = ActivationStats(c=0.0, alpha=0.0, beta_sq=0.25)
        limit, diagnostics = q_limit_general_with_diagnostics(two_point(1.0, 30.0), 0.5, stats, SMALL_FREE)
        expected = SpectralMeasure.from_atoms([0.25, 7.5])
        assert distance_w1(limit, expected) <= 0.05 * 7.5
        assert len(diagnostics.atoms) >= 2

    @pytest.mark.slow
    def test_probability_measure(self):
        """The general route returns a normalized measure."""
        stats = hermite_stats(NegPartActivation())
        limit = q_limit_general(two_point(), 0.8, stats)
        assert limit.total_mass == pytest.approx(1.0, abs=1e-9)
        assert limit.mean > 0

    @pytest.mark.slow
    @pytest.mark.parametrize("beta_sq", [0.0, 0.25])
    def test_agrees_with_special_route(self, beta_sq):
        """nu = delta_1: the general route matches Law(alpha^2 chi + beta^2) within W1 0.05."""
        stats = ActivationStats(c=0.0, alpha=1.0, beta_sq=beta_sq)
        nu = SpectralMeasure.delta(1.0)
        general = q_limit_general(nu, 0.8, stats)
        special = q_limit_special(nu, 0.8, stats)
        assert distance_w1(general, special) <= 0.05


class TestMomentFormula:
    """Test the composition-sum trace moments."""

    def test_compositions(self):
        """Compositions of 4 into 2 parts."""
        assert compositions(4, 2) == ((1, 3), (2, 2), (3, 1))

    @pytest.mark.parametrize("total,parts", [(5, 1), (6, 3), (8, 4)])
    def test_composition_count(self, total, parts):
        """There are C(total - 1, parts - 1) compositions."""
        from math import comb

        assert len(compositions(total, parts)) == comb(total - 1, parts - 1)

    def test_second_moment_closed_form(self):
        """k = 2 is (1/p) Tr H^2 + (1/dp) (Tr G)^2."""
        rng = np.random.default_rng(0)
        d, p = 20, 15
        W, D = rng.standard_normal((d, p)), rng.uniform(0.5, 1.5, p)
        H, G = moment_inputs(W, D, 0.5, 0.4)
        expected = np.trace(H @ H) / p + np.trace(G) ** 2 / (d * p)
        assert q_moment_formula(H, 2, d, p, G) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("k", [0, 9])
    def test_order_range(self, k):
        """Orders outside 1..8 are a domain error."""
        H = np.eye(4)
        with pytest.raises(DomainError):
            q_moment_formula(H, k, 4, 4, H)

    def test_shape_mismatch(self):
        """H must be p x p."""
        with pytest.raises(ValidationError):
            q_moment_formula(np.eye(3), 2, 4, 4, np.eye(4))

    def test_binomial_form_without_shift(self):
        """beta^2 = 0: the formula matches the binomial form within 5/sqrt(d)."""
        d, p = 60, 45
        for seed in range(3):
            rng = np.random.default_rng(seed)
            W, D = rng.standard_normal((d, p)), np.ones(p)
            H, G = moment_inputs(W, D, 1.0, 0.0)
            h_eigs = np.linalg.eigvalsh(H)
            for k in range(1, 6):
                formula = q_moment_formula(H, k, d, p, G)
                binomial = moment_formula_binomial(h_eigs, k, p / d)
                assert abs(formula - binomial) <= 5 / np.sqrt(d) * abs(binomial)

    @pytest.mark.slow
    def test_matches_direct_traces(self):
        """Formula against (1/pd) Tr Q^k for k = 1..5 at d = 60, p = 45."""
        d, p = 60, 45
        stats = hermite_stats(NegPartActivation())
        errors = {k: [] for k in range(1, 6)}
        for seed in range(5):
            rng = np.random.default_rng(seed)
            W, D = rng.standard_normal((d, p)), np.where(rng.random(p) < 0.5, 1.0, np.sqrt(3.0))
            H, G = moment_inputs(W, D, stats.alpha, np.sqrt(stats.beta_sq))
            Q = build_q(W, D, stats.alpha, np.sqrt(stats.beta_sq)).flat
            for k in errors:
                direct = direct_moment(Q, k)
                errors[k].append(abs(q_moment_formula(H, k, d, p, G) - direct) / abs(direct))
        for k, values in errors.items():
            assert np.mean(values) <= 5 / np.sqrt(d), f"k={k}"
