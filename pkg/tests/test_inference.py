import math

import numpy as np
import pytest

from knotfit.curves import BasisKind, CurveEvaluator, KnotModel, build_grid
from knotfit.inference import (
    Dataset,
    PoissonCount,
    PriorSpec,
    UniformCount,
    build_prior_tables,
    gaussian_loglik,
    identity_forward,
    log_likelihood,
    log_prior,
    read_dataset_csv,
    write_dataset_csv,
)


@pytest.fixture
def example1_prior():
    return PriorSpec(UniformCount(2, 101), -10.0, 10.0)


@pytest.fixture
def grid101():
    return build_grid(-2, 2, 101)


class TestLogPrior:
    def test_example1_minimal_model(self, example1_prior, grid101):
        # n=2: -log(100) - log C(99,0) - 2 log 20, with C(99,0) = 1
        m = KnotModel(np.array([0, 100]), np.array([0.0, 0.0]))
        expected = -math.log(100) - 2 * math.log(20)
        assert log_prior(m, example1_prior, grid101) == pytest.approx(expected, abs=1e-12)

    def test_out_of_bounds_value(self, example1_prior, grid101):
        m = KnotModel(np.array([0, 100]), np.array([11.0, 0.0]))
        assert log_prior(m, example1_prior, grid101) == -np.inf

    def test_poisson_count_ratio(self, grid101):
        # consecutive-count log ratio carries log(lambda / (n+1))
        spec = PriorSpec(PoissonCount(22.0, 101), -300.0, 300.0)
        idx23 = np.sort(np.concatenate([[0, 100], np.arange(1, 22)]))
        idx22 = idx23[:-1].copy()
        idx22[-1] = 100
        m23 = KnotModel(idx23, np.zeros(23))
        m22 = KnotModel(idx22, np.zeros(22))
        lp23 = log_prior(m23, spec, grid101)
        lp22 = log_prior(m22, spec, grid101)
        count_part = (
            lp23 - lp22
            + math.log(600)  # one more value term
            - (math.log(math.comb(99, 20)) - math.log(math.comb(99, 21)))
        )
        assert count_part == pytest.approx(math.log(22.0 / 23.0), abs=1e-10)

    def test_count_outside_support(self, grid101):
        spec = PriorSpec(UniformCount(2, 5), -1.0, 1.0)
        m = KnotModel(np.array([0, 1, 2, 3, 4, 100]), np.zeros(6))
        assert log_prior(m, spec, grid101) == -np.inf

    def test_location_mass_uses_combinations(self, grid101, example1_prior):
        m4 = KnotModel(np.array([0, 10, 20, 100]), np.zeros(4))
        m2 = KnotModel(np.array([0, 100]), np.zeros(2))
        delta = log_prior(m4, example1_prior, grid101) - log_prior(m2, example1_prior, grid101)
        expected = -math.log(math.comb(99, 2)) - 2 * math.log(20)
        assert delta == pytest.approx(expected, abs=1e-10)

    def test_invariant_to_in_bounds_value_changes(self, example1_prior, grid101):
        idx = np.array([0, 30, 100])
        a = log_prior(KnotModel(idx, np.array([1.0, -2.0, 3.0])), example1_prior, grid101)
        b = log_prior(KnotModel(idx, np.array([-9.9, 9.9, 0.0])), example1_prior, grid101)
        assert a == b

    def test_tables_match_direct_evaluation(self, example1_prior, grid101):
        count, loc = build_prior_tables(example1_prior, grid101)
        for n in (2, 3, 50, 101):
            interior = np.linspace(1, 99, n - 2, dtype=int) if n > 2 else []
            idx = np.sort(np.concatenate([[0, 100], interior])).astype(int)
            m = KnotModel(idx, np.zeros(n))
            direct = log_prior(m, example1_prior, grid101)
            tabled = count[n] + loc[n] - n * math.log(example1_prior.a_range)
            assert direct == tabled


class TestLogLikelihood:
    def test_perfect_fit_single_point(self):
        # -0.5 * log(2 pi sigma^2) for one zero residual
        grid = build_grid(0, 1, 3)
        m = KnotModel(np.array([0, 2]), np.array([5.0, 5.0]))
        data = Dataset(np.array([0.5]), np.array([5.0]), 0.3)
        got = log_likelihood(m, data, identity_forward, grid, BasisKind.LINEAR)
        assert got == pytest.approx(-0.5 * math.log(2 * math.pi * 0.09), abs=1e-12)

    def test_one_sigma_residual(self):
        grid = build_grid(0, 1, 3)
        m = KnotModel(np.array([0, 2]), np.array([0.0, 0.0]))
        data = Dataset(np.array([0.5]), np.array([0.3]), 0.3)
        got = log_likelihood(m, data, identity_forward, grid, BasisKind.LINEAR)
        assert got == pytest.approx(-0.5 * math.log(2 * math.pi * 0.09) - 0.5, abs=1e-12)

    def test_doubling_residuals_scales_quadratic_term(self):
        grid = build_grid(0, 1, 3)
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, 40)
        resid = rng.standard_normal(40)
        m0 = KnotModel(np.array([0, 2]), np.array([0.0, 0.0]))
        d1 = Dataset(x, resid, 0.7)
        d2 = Dataset(x, 2 * resid, 0.7)
        ll1 = log_likelihood(m0, d1, identity_forward, grid, BasisKind.LINEAR)
        ll2 = log_likelihood(m0, d2, identity_forward, grid, BasisKind.LINEAR)
        quad1 = float(resid @ resid) / (2 * 0.49)
        assert ll2 - ll1 == pytest.approx(-3.0 * quad1, rel=1e-10)

    def test_permutation_invariance(self):
        grid = build_grid(0, 1, 5)
        rng = np.random.default_rng(11)
        m = KnotModel(np.array([0, 2, 4]), rng.standard_normal(3))
        x = rng.uniform(0, 1, 30)
        d = rng.standard_normal(30)
        perm = rng.permutation(30)
        ll1 = log_likelihood(m, Dataset(x, d, 1.1), identity_forward, grid, BasisKind.LINEAR)
        ll2 = log_likelihood(
            m, Dataset(x[perm], d[perm], 1.1), identity_forward, grid, BasisKind.LINEAR
        )
        assert ll1 == pytest.approx(ll2, abs=1e-9)

    @pytest.mark.parametrize("basis", [BasisKind.CONSTANT, BasisKind.LINEAR])
    def test_knot_at_interpolated_value_leaves_ll_unchanged(self, basis):
        grid = build_grid(0, 1, 11)
        rng = np.random.default_rng(2)
        m = KnotModel(np.array([0, 5, 10]), np.array([1.0, -0.5, 2.0]))
        data = Dataset(rng.uniform(0, 1, 25), rng.standard_normal(25), 0.5)
        site = 7
        a_p = float(CurveEvaluator(m, grid, basis)(grid.coords[site]))
        m2 = KnotModel(np.array([0, 5, 7, 10]), np.array([1.0, -0.5, a_p, 2.0]))
        ll1 = log_likelihood(m, data, identity_forward, grid, basis)
        ll2 = log_likelihood(m2, data, identity_forward, grid, basis)
        assert ll1 == pytest.approx(ll2, abs=1e-10)

    def test_spline_collinear_insertion_unchanged(self):
        grid = build_grid(0, 1, 11)
        m = KnotModel(np.array([0, 10]), np.array([0.0, 1.0]))
        rng = np.random.default_rng(4)
        data = Dataset(rng.uniform(0, 1, 20), rng.standard_normal(20), 0.5)
        m2 = KnotModel(np.array([0, 5, 10]), np.array([0.0, 0.5, 1.0]))
        ll1 = log_likelihood(m, data, identity_forward, grid, BasisKind.CUBIC_SPLINE)
        ll2 = log_likelihood(m2, data, identity_forward, grid, BasisKind.CUBIC_SPLINE)
        assert ll1 == pytest.approx(ll2, abs=1e-10)


class TestIdentityForward:
    def test_zero_curve(self):
        grid = build_grid(0, 1, 3)
        ev = CurveEvaluator(KnotModel(np.array([0, 2]), np.zeros(2)), grid, BasisKind.LINEAR)
        assert np.all(identity_forward(ev, np.array([0.1, 0.9])) == 0.0)

    def test_matches_interpolate(self):
        grid = build_grid(0, 2, 5)
        m = KnotModel(np.array([0, 4]), np.array([0.0, 4.0]))
        ev = CurveEvaluator(m, grid, BasisKind.LINEAR)
        assert identity_forward(ev, np.array([1.0]))[0] == pytest.approx(2.0)

    def test_residuals_are_data_minus_curve(self):
        grid = build_grid(0, 1, 5)
        rng = np.random.default_rng(9)
        m = KnotModel(np.array([0, 4]), np.array([1.0, 2.0]))
        ev = CurveEvaluator(m, grid, BasisKind.LINEAR)
        x = rng.uniform(0, 1, 10)
        d = rng.standard_normal(10)
        assert np.allclose(d - identity_forward(ev, x), d - ev(x))


class TestDataset:
    def test_csv_roundtrip(self, tmp_path):
        data = Dataset(np.array([0.0, 1.5, 2.25]), np.array([1.0, -2.0, 0.125]), 0.3)
        path = tmp_path / "data.csv"
        write_dataset_csv(path, data)
        back = read_dataset_csv(path, 0.3)
        assert np.array_equal(back.x, data.x)
        assert np.array_equal(back.d, data.d)
        assert back.noise_sd == 0.3

    def test_header_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_dataset_csv(path, 1.0)

    def test_positive_noise_required(self):
        with pytest.raises(ValueError):
            Dataset(np.array([0.0]), np.array([1.0]), 0.0)

    def test_gaussian_loglik_zero_residuals(self):
        assert gaussian_loglik(np.zeros(4), 2.0) == pytest.approx(
            -2.0 * math.log(2 * math.pi * 4.0), abs=1e-12
        )
