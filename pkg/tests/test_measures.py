"""Tests for spectral measures and their algebra"""

import json

import numpy as np
import pytest

from modules.errors import DomainError, ValidationError
from modules.free import mp_edges, mp_measure, mp_stieltjes
from modules.measures import (
    Grid,
    SpectralMeasure,
    affine,
    cdf,
    convolve_classical,
    distance_ks,
    distance_w1,
    load_measure_csv,
    load_measure_json,
    measure_to_dict,
    mixture,
    quantile,
    save_measure_csv,
    save_measure_json,
    stieltjes,
    ks_samples,
    w1_samples,
)


@pytest.fixture
def mp_half():
    return mp_measure(0.5)


class TestSpectralMeasure:
    """Test construction and invariants of SpectralMeasure."""

    def test_delta_has_unit_mass(self):
        """A point mass is normalized and has no density."""
        mu = SpectralMeasure.delta(2.0)
        assert mu.is_normalized()
        assert mu.atoms == [(2.0, 1.0)]
        assert not mu.has_density

    def test_close_atoms_merge(self):
        """Atoms closer than the merge tolerance become one."""
        mu = SpectralMeasure.from_atoms([1.0, 1.0 + 1e-13, 2.0], [0.25, 0.25, 0.5])
        assert len(mu.atoms) == 2
        assert mu.atom_mass_at(1.0) == pytest.approx(0.5)

    def test_tiny_atoms_dropped(self):
        """Masses below 1e-12 are dropped."""
        mu = SpectralMeasure.from_atoms([0.0, 1.0], [1.0, 1e-14])
        assert mu.atoms == [(0.0, 1.0)]

    def test_negative_density_rejected(self):
        """Negative density values are a validation error."""
        grid = Grid(start=0.0, step=0.5, n=3)
        with pytest.raises(ValidationError):
            SpectralMeasure.from_density(grid, [1.0, -0.1, 1.0])

    def test_density_length_must_match_grid(self):
        """Density and grid sizes must agree."""
        with pytest.raises(ValidationError):
            SpectralMeasure.from_density(Grid(start=0.0, step=1.0, n=4), [0.1, 0.2])

    def test_spanning_grid_floor(self):
        """The margin pads below lo unless a floor is given."""
        assert Grid.spanning(0.0, 4.0, 101).start < 0.0
        floored = Grid.spanning(0.0, 4.0, 101, floor=0.0)
        assert floored.start == 0.0
        assert floored.stop >= 4.0

    def test_arrays_are_read_only(self):
        """Measures are immutable values."""
        mu = SpectralMeasure.uniform(0.0, 1.0, 64)
        with pytest.raises(ValueError):
            mu.density[0] = 5.0

    def test_uniform_moments(self):
        """Uniform law on [0, 2] has mean 1 and variance 1/3."""
        mu = SpectralMeasure.uniform(0.0, 2.0, 4001)
        assert mu.is_normalized()
        assert mu.mean == pytest.approx(1.0, abs=1e-9)
        assert mu.variance == pytest.approx(1.0 / 3.0, abs=1e-6)

    def test_smoothed_samples_are_normalized(self):
        """Kernel-smoothed empirical measures carry unit mass."""
        values = np.random.default_rng(0).standard_normal(500)
        mu = SpectralMeasure.from_samples(values, bandwidth=0.2, grid_points=2048)
        assert mu.is_normalized()
        assert mu.mean == pytest.approx(values.mean(), abs=1e-3)

    def test_empty_samples_rejected(self):
        """No samples, no measure."""
        with pytest.raises(ValidationError):
            SpectralMeasure.from_samples([])


class TestStieltjes:
    """Test the Stieltjes transform."""

    def test_delta_zero_at_i(self):
        """s(i) = i for delta_0."""
        assert stieltjes(SpectralMeasure.delta(0.0), 1j) == pytest.approx(1j)

    def test_shifted_delta(self):
        """s(a + i) = i for delta_a."""
        assert stieltjes(SpectralMeasure.delta(3.0), 3.0 + 1j) == pytest.approx(1j)

    def test_matches_closed_form_mp(self, mp_half):
        """Gridded MP(0.5) reproduces the closed-form transform at 2 + 0.1i."""
        z = 2.0 + 0.1j
        assert abs(stieltjes(mp_half, z) - mp_stieltjes(z, 0.5)) < 1e-3

    def test_lower_half_plane_rejected(self):
        """Im z <= 0 is outside the domain."""
        with pytest.raises(DomainError):
            stieltjes(SpectralMeasure.delta(0.0), 1.0 - 0.5j)

    def test_unnormalized_rejected(self):
        """The transform needs a probability measure."""
        mu = SpectralMeasure.from_atoms([0.0], [0.5])
        with pytest.raises(ValidationError):
            stieltjes(mu, 1j)

    def test_herglotz_on_test_points(self, mp_half):
        """Im s > 0 on 100 points of the upper half-plane."""
        rng = np.random.default_rng(1)
        z = rng.uniform(-5, 10, 100) + 1j * rng.uniform(1e-3, 5, 100)
        assert np.all(stieltjes(mp_half, z).imag > 0)

    def test_large_z_asymptotics(self, mp_half):
        """|z s(z) + 1| <= 10 m1 / |z| far from the support."""
        z = 100.0 * mp_half.radius * np.exp(1j * np.linspace(0.1, 3.0, 7))
        values = stieltjes(mp_half, z)
        assert np.all(np.abs(z * values + 1) <= 10 * mp_half.mean / np.abs(z))


class TestAlgebra:
    """Test convolution, affine maps and mixtures."""

    def test_convolve_deltas(self):
        """delta_a * delta_b = delta_{a+b}."""
        mu = convolve_classical(SpectralMeasure.delta(1.0), SpectralMeasure.delta(2.5))
        assert mu.atoms == [(3.5, 1.0)]

    def test_delta_zero_is_identity(self, mp_half):
        """delta_0 * mu = mu."""
        mu = convolve_classical(SpectralMeasure.delta(0.0), mp_half)
        assert distance_w1(mu, mp_half) < 1e-9

    def test_mp_self_convolution_moments(self):
        """MP(0.75) * MP(0.75) has mean 2 and second moment 5.5."""
        mp = mp_measure(0.75)
        mu = convolve_classical(mp, mp)
        assert mu.is_normalized()
        assert mu.moment(1) == pytest.approx(2.0, abs=5e-3)
        assert mu.moment(2) == pytest.approx(5.5, abs=2e-2)

    def test_convolution_commutes(self, mp_half):
        """Both orderings agree within 1e-10 in W1."""
        uniform = SpectralMeasure.uniform(0.0, 1.0, 512)
        a = convolve_classical(mp_half, uniform)
        b = convolve_classical(uniform, mp_half)
        assert distance_w1(a, b) < 1e-10

    def test_affine_of_delta(self):
        """affine(delta_1, 2, 3) = delta_5."""
        assert affine(SpectralMeasure.delta(1.0), 2.0, 3.0).atoms == [(5.0, 1.0)]

    def test_affine_zero_slope_collapses(self, mp_half):
        """a = 0 gives a point mass at b."""
        assert affine(mp_half, 0.0, 1.5).atoms == [(1.5, 1.0)]

    def test_affine_scales_mp(self, mp_half):
        """affine(MP(0.5), 2, 0) has mean 2 and edges 2 (1 +- sqrt(0.5))^2."""
        mu = affine(mp_half, 2.0, 0.0)
        lo, hi = mp_edges(0.5)
        assert mu.mean == pytest.approx(2.0, abs=1e-3)
        support = mu.support()
        step = mu.grid.step
        assert support[0] == pytest.approx(2 * lo, abs=2 * step)
        assert support[1] == pytest.approx(2 * hi, abs=2 * step)

    def test_affine_inverse(self, mp_half):
        """Applying an affine map and its inverse is the identity."""
        back = affine(affine(mp_half, -3.0, 1.0), -1.0 / 3.0, 1.0 / 3.0)
        assert distance_w1(back, mp_half) < 1e-10

    def test_mixture_of_deltas(self):
        """mixture([0.5, 0.5], [delta_0, delta_2])."""
        mu = mixture([0.5, 0.5], [SpectralMeasure.delta(0.0), SpectralMeasure.delta(2.0)])
        assert mu.atoms == [(0.0, 0.5), (2.0, 0.5)]

    def test_mixture_weight_sum_checked(self):
        """Weights must sum to 1."""
        with pytest.raises(ValidationError):
            mixture([0.5, 0.4], [SpectralMeasure.delta(0.0), SpectralMeasure.delta(1.0)])

    def test_law_chi_style_mixture(self):
        """The three-part mixture at gamma2 = 0.8 has an atom of 0.4 at 0."""
        mp = mp_measure(0.8)
        g = 0.8
        mu = mixture([g / 2, 1 - g, g / 2], [convolve_classical(mp, mp), mp, SpectralMeasure.delta(0.0)])
        assert mu.is_normalized()
        # MP(0.8) has no atom, so the only zero mass is the explicit delta
        assert mu.atom_mass_at(0.0) == pytest.approx(0.4, abs=1e-9)
        assert cdf(mu, 0.0) == pytest.approx(0.4, abs=1e-6)


class TestCdfAndQuantile:
    """Test distribution functions."""

    def test_delta_cdf(self):
        """Right-continuous step at 0."""
        mu = SpectralMeasure.delta(0.0)
        assert cdf(mu, -1.0) == 0.0
        assert cdf(mu, 0.0) == 1.0

    def test_uniform_median(self):
        """Median of U[0, 1] is 0.5."""
        assert quantile(SpectralMeasure.uniform(0.0, 1.0, 1001), 0.5) == pytest.approx(0.5, abs=1e-9)

    def test_mp_cdf_at_upper_edge(self, mp_half):
        """The gridded MP(0.5) has all its mass below the upper edge."""
        assert cdf(mp_half, mp_edges(0.5)[1]) == pytest.approx(1.0, abs=1e-3)

    def test_quantile_level_checked(self):
        """Levels outside [0, 1] are a domain error."""
        with pytest.raises(DomainError):
            quantile(SpectralMeasure.delta(0.0), 1.5)

    def test_quantile_at_atom(self):
        """Quantiles inside an atom's jump return the atom."""
        mu = SpectralMeasure.from_atoms([0.0, 2.0], [0.5, 0.5])
        assert quantile(mu, 0.25) == 0.0
        assert quantile(mu, 0.75) == 2.0


class TestDistances:
    """Test KS and W1 distances."""

    def test_self_distances_vanish(self, mp_half):
        """A measure is at distance 0 from itself."""
        assert distance_ks(mp_half, mp_half) == 0.0
        assert distance_w1(mp_half, mp_half) == 0.0

    def test_w1_between_deltas(self):
        """W1(delta_0, delta_1) = 1."""
        assert distance_w1(SpectralMeasure.delta(0.0), SpectralMeasure.delta(1.0)) == pytest.approx(1.0)

    def test_w1_to_two_point(self):
        """W1(delta_0, (delta_0 + delta_2)/2) = 1."""
        two_point = SpectralMeasure.from_atoms([0.0, 2.0])
        assert distance_w1(SpectralMeasure.delta(0.0), two_point) == pytest.approx(1.0)

    def test_ks_sees_atom_jumps(self):
        """KS between two deltas is 1."""
        assert distance_ks(SpectralMeasure.delta(0.0), SpectralMeasure.delta(1e-3)) == pytest.approx(1.0)

    def test_atomic_w1_matches_scipy(self):
        """Measure W1 on empirical measures agrees with scipy's sample W1."""
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(200), rng.standard_normal(300) + 0.3
        expected = w1_samples(a, b)
        assert distance_w1(SpectralMeasure.from_atoms(a), SpectralMeasure.from_atoms(b)) == pytest.approx(expected)

    def test_sample_ks(self):
        """Sample KS is 0 for identical spectra and 1 for separated ones."""
        values = np.linspace(0.0, 1.0, 50)
        assert ks_samples(values, values) == 0.0
        assert ks_samples(values, values + 2.0) == pytest.approx(1.0)


class TestSerialization:
    """Test JSON and CSV formats."""

    def test_json_layout(self, tmp_path):
        """JSON has atoms, grid and density keys."""
        mu = mixture([0.5, 0.5], [SpectralMeasure.delta(0.0), SpectralMeasure.uniform(1.0, 2.0, 16)])
        path = tmp_path / "mu.json"
        save_measure_json(mu, path)
        data = json.loads(path.read_text())
        assert set(data) == {"atoms", "grid", "density"}
        assert data["grid"]["n"] == mu.grid.n
        assert distance_w1(load_measure_json(path), mu) < 1e-12

    def test_csv_blocks(self, tmp_path):
        """CSV holds the density block then the atom block."""
        mu = SpectralMeasure.from_density(Grid(0.0, 0.5, 5), [0.0, 0.4, 0.4, 0.4, 0.0], [3.0], [0.7])
        path = tmp_path / "mu.csv"
        save_measure_csv(mu, path)
        text = path.read_text()
        assert text.startswith("x,density")
        assert "atom_x,atom_mass" in text
        back = load_measure_csv(path)
        assert back.atoms == mu.atoms
        assert np.allclose(back.density, mu.density)

    def test_malformed_json_rejected(self, tmp_path):
        """Missing grid is a validation error."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"atoms": [[0, 1]]}))
        with pytest.raises(ValidationError):
            load_measure_json(path)

    def test_dict_atoms_are_pairs(self):
        """Atoms serialize as [x, m] pairs."""
        assert measure_to_dict(SpectralMeasure.delta(1.0))["atoms"] == [[1.0, 1.0]]
