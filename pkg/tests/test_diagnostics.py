import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knotfit.diagnostics import (
    RunTrace,
    acf,
    convergence_length,
    pair_harness,
    posterior_summary,
    rc_stats,
    window_stats,
)
from knotfit.traceio import read_trace, write_trace


def make_trace(curves, n_steps=None, thin=10, seed=0):
    curves = np.asarray(curves, dtype=float)
    s = curves.shape[0]
    steps = thin * np.arange(1, s + 1)
    rng = np.random.default_rng(seed)
    return RunTrace(
        steps=steps,
        grid_curves=curves,
        n_values=rng.integers(2, 8, s),
        log_liks=rng.standard_normal(s),
        grid_coords=np.linspace(0, 1, curves.shape[1]),
        n_steps=int(n_steps if n_steps is not None else steps[-1]),
        thin_stride=thin,
        attempts={"move": 10, "birth": 5, "death": 5},
        accepts={"move": 3, "birth": 1, "death": 2},
    )


class TestRcStats:
    def test_identical_windows(self):
        mu = np.array([1.0, 2.0])
        sd = np.array([0.5, 0.5])
        assert rc_stats(mu, sd, mu, sd) == (0.0, 0.0)

    def test_hand_case_single_site(self):
        r1, r2 = rc_stats(np.array([1.0]), np.array([1.0]), np.array([2.0]), np.array([1.0]))
        assert r1 == pytest.approx(1.0)
        assert r2 == 0.0

    def test_degenerate_denominator_equal_means(self):
        r1, r2 = rc_stats(np.array([3.0]), np.array([0.0]), np.array([3.0]), np.array([0.0]))
        assert (r1, r2) == (0.0, 0.0)

    def test_degenerate_denominator_unequal_means(self):
        r1, _ = rc_stats(np.array([3.0]), np.array([0.0]), np.array([4.0]), np.array([0.0]))
        assert r1 == np.inf

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        mu1, mu2 = rng.standard_normal((2, 9))
        sd1, sd2 = rng.uniform(0.1, 2, (2, 9))
        assert rc_stats(mu1, sd1, mu2, sd2) == rc_stats(mu2, sd2, mu1, sd1)

    @given(scale=st.floats(0.01, 100.0))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance(self, scale):
        rng = np.random.default_rng(7)
        mu1, mu2 = rng.standard_normal((2, 5))
        sd1, sd2 = rng.uniform(0.1, 2, (2, 5))
        base = rc_stats(mu1, sd1, mu2, sd2)
        scaled = rc_stats(scale * mu1, scale * sd1, scale * mu2, scale * sd2)
        assert scaled[0] == pytest.approx(base[0], rel=1e-9)
        assert scaled[1] == pytest.approx(base[1], rel=1e-9)


class TestAcf:
    def test_lag_zero_is_one(self):
        rng = np.random.default_rng(0)
        assert acf(rng.standard_normal(500), 10)[0] == 1.0

    def test_iid_noise_decorrelates(self):
        rng = np.random.default_rng(3)
        out = acf(rng.standard_normal(100_000), 100)
        assert np.max(np.abs(out[1:])) < 0.02

    def test_ar1_coefficient(self):
        rng = np.random.default_rng(5)
        rho = 0.9
        x = np.empty(100_000)
        x[0] = 0.0
        eps = rng.standard_normal(100_000)
        for t in range(1, x.size):
            x[t] = rho * x[t - 1] + eps[t]
        out = acf(x, 3)
        assert out[1] == pytest.approx(rho, abs=0.02)

    def test_constant_trace_rejected(self):
        with pytest.raises(ValueError):
            acf(np.ones(100), 5)

    def test_max_lag_bound(self):
        with pytest.raises(ValueError):
            acf(np.arange(10.0), 10)


class TestConvergenceLength:
    def test_identical_runs_converge_immediately(self):
        rng = np.random.default_rng(2)
        curves = rng.standard_normal((100, 5))
        t1 = make_trace(curves)
        t2 = make_trace(curves.copy())
        rep = convergence_length(t1, t2, monitor_stride=200)
        assert rep.converged
        assert rep.convergence_length == 200
        assert np.all(rep.rc1 == 0.0)

    def test_disjoint_modes_never_converge(self):
        rng = np.random.default_rng(4)
        base = rng.standard_normal((200, 4))
        t1 = make_trace(base)
        t2 = make_trace(base + 50.0)
        rep = convergence_length(t1, t2, monitor_stride=500)
        assert not rep.converged
        assert rep.convergence_length is None
        assert np.all(rep.rc1 > 0.2)

    def test_lengths_are_stride_multiples(self):
        rng = np.random.default_rng(6)
        curves = rng.standard_normal((300, 3))
        t1 = make_trace(curves, seed=1)
        t2 = make_trace(rng.standard_normal((300, 3)), seed=2)
        rep = convergence_length(t1, t2, monitor_stride=700)
        assert np.all(rep.monitor_steps % 700 == 0)
        if rep.converged:
            assert rep.convergence_length % 700 == 0

    def test_window_is_second_half(self):
        curves = np.zeros((10, 2))
        curves[:5] = 100.0  # first half must be excluded at the final monitor step
        tr = make_trace(curves, thin=10)
        mu, sd = window_stats(tr, 100)
        assert np.allclose(mu, 0.0)
        assert np.allclose(sd, 0.0)


class TestPairHarness:
    def _traces(self, k, s=40, ng=3):
        rng = np.random.default_rng(11)
        return [make_trace(rng.standard_normal((s, ng)), seed=i) for i in range(k)]

    def test_pair_counts(self):
        for k, expected in [(2, 1), (4, 6), (20, 190)]:
            reports, summary = pair_harness(self._traces(k), monitor_stride=100)
            assert len(reports) == expected
            assert summary.n_pairs == expected

    def test_needs_two_runs(self):
        with pytest.raises(ValueError):
            pair_harness(self._traces(1), monitor_stride=100)

    def test_summary_statistics(self):
        rng = np.random.default_rng(0)
        shared = rng.standard_normal((100, 4))
        traces = [make_trace(shared.copy()) for _ in range(3)]
        reports, summary = pair_harness(traces, monitor_stride=250)
        assert summary.n_converged == 3
        assert summary.mean_length == 250
        assert summary.median_length == 250


class TestPosteriorSummary:
    def test_identical_curves_concentrate(self):
        curves = np.tile(np.array([1.0, 2.0, 3.0]), (50, 1))
        tr = make_trace(curves)
        summ = posterior_summary(tr, value_range=(0.0, 4.0), value_bins=8)
        assert np.allclose(summ.mean_curve, [1.0, 2.0, 3.0])
        for col in range(3):
            assert np.count_nonzero(summ.density[col]) == 1

    def test_two_curve_average(self):
        curves = np.vstack([np.zeros((30, 4)), np.full((30, 4), 2.0)])
        rng = np.random.default_rng(0)
        perm = rng.permutation(60)
        tr = make_trace(curves[perm], n_steps=600)
        summ = posterior_summary(tr, value_range=(-1.0, 3.0), burn_in_fraction=0.0)
        assert np.allclose(summ.mean_curve, 1.0)

    def test_burn_in_excludes_prefix(self):
        curves = np.vstack([np.full((50, 2), 9.0), np.zeros((50, 2))])
        tr = make_trace(curves)
        summ = posterior_summary(tr, value_range=(-1, 10), burn_in_fraction=0.5)
        assert np.allclose(summ.mean_curve, 0.0)
        assert summ.n_retained == 50

    def test_mean_matches_density_view(self):
        rng = np.random.default_rng(9)
        curves = rng.uniform(-1, 1, (200, 6))
        tr = make_trace(curves)
        summ = posterior_summary(tr, value_range=(-1, 1), burn_in_fraction=0.5, value_bins=50)
        retained = curves[tr.steps > 0.5 * tr.n_steps]
        assert np.max(np.abs(summ.mean_curve - retained.mean(axis=0))) < 1e-12
        assert summ.density.sum() == retained.size

    def test_empty_window_rejected(self):
        tr = make_trace(np.zeros((10, 2)))
        with pytest.raises(ValueError):
            posterior_summary(tr, value_range=(0, 1), burn_in_fraction=1.0)

    def test_n_histogram(self):
        tr = make_trace(np.zeros((40, 2)))
        summ = posterior_summary(tr, value_range=(-1, 1), burn_in_fraction=0.0)
        ns = tr.n_values
        assert summ.n_histogram.sum() == ns.size
        for n in np.unique(ns):
            assert summ.n_histogram[n] == np.sum(ns == n)


class TestTraceIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(13)
        tr = make_trace(rng.standard_normal((25, 4)))
        write_trace(tmp_path, tr)
        back = read_trace(tmp_path)
        assert np.array_equal(back.steps, tr.steps)
        assert np.array_equal(back.grid_curves, tr.grid_curves)
        assert np.array_equal(back.n_values, tr.n_values)
        assert np.array_equal(back.log_liks, tr.log_liks)
        assert np.array_equal(back.grid_coords, tr.grid_coords)
        assert back.n_steps == tr.n_steps
        assert back.thin_stride == tr.thin_stride
        assert back.attempts == tr.attempts
        assert back.accepts == tr.accepts

    def test_headers_present(self, tmp_path):
        tr = make_trace(np.zeros((5, 2)))
        write_trace(tmp_path, tr)
        assert (tmp_path / "trace_ll.csv").read_text().splitlines()[0] == "step,loglik"
        assert (tmp_path / "trace_n.csv").read_text().splitlines()[0] == "step,n"
        assert (tmp_path / "trace_grid.csv").read_text().splitlines()[0] == "step,f_1,f_2"
