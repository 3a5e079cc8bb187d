"""The compiled sweep engine must reproduce the reference loop bit for bit.

The reference loop composes the module-level operations (the ones the rest
of the suite validates against oracles); the engine exists purely for
speed. Matching RNG streams and shared numeric kernels make the two loops
identical, and this test holds them to it across every sampler variant,
basis, and instrumentation mode.
"""

import numpy as np
import pytest

from knotfit import (
    BasisKind,
    PriorSpec,
    Problem,
    SamplerSettings,
    UniformCount,
    build_grid,
    identity_forward,
    run_sampler,
)
from knotfit.generators import generate_example1
from knotfit.runner import SAMPLER_NAMES


@pytest.fixture(scope="module")
def problem_factory():
    data = generate_example1(120, seed=42)
    grid = build_grid(-2, 2, 61)
    priors = PriorSpec(UniformCount(2, 61), -10.0, 10.0)

    def make(basis):
        return Problem(grid=grid, basis=basis, priors=priors, data=data, fwd=identity_forward)

    return make


def assert_traces_identical(a, b):
    assert np.array_equal(a.steps, b.steps)
    assert np.array_equal(a.n_values, b.n_values)
    assert np.array_equal(a.log_liks, b.log_liks)
    assert np.array_equal(a.grid_curves, b.grid_curves)
    assert a.attempts == b.attempts
    assert a.accepts == b.accepts
    assert a.snapshot_attempts == b.snapshot_attempts
    assert a.snapshot_accepts == b.snapshot_accepts
    for name in ("adapt_drift", "scale_trace", "variance_track", "final_cov_diag"):
        x, y = getattr(a, name), getattr(b, name)
        assert (x is None) == (y is None)
        if x is not None:
            assert np.array_equal(x, y)


@pytest.mark.parametrize("sampler", SAMPLER_NAMES)
@pytest.mark.parametrize(
    "basis", [BasisKind.CONSTANT, BasisKind.LINEAR, BasisKind.CUBIC_SPLINE]
)
def test_engines_identical(problem_factory, sampler, basis):
    settings = SamplerSettings(
        sampler=sampler,
        n_steps=4000,
        t0=600,
        n_chains=4,
        ladder_window=300,
        thin_stride=10,
        variance_columns=(0, 30),
        variance_stride=500,
        counter_snapshot_at=2000,
    )
    prob = problem_factory(basis)
    ref = run_sampler(prob, settings, seed=17, engine="reference")
    fast = run_sampler(prob, settings, seed=17, engine="compiled")
    assert_traces_identical(ref, fast)


def test_engines_identical_instrumented(problem_factory):
    settings = SamplerSettings(
        sampler="ap-rjmcmc", n_steps=2500, t0=400, thin_stride=10, instrument=True
    )
    prob = problem_factory(BasisKind.CUBIC_SPLINE)
    ref = run_sampler(prob, settings, seed=23, engine="reference")
    fast = run_sampler(prob, settings, seed=23, engine="compiled")
    assert_traces_identical(ref, fast)
    assert ref.adapt_drift is not None
    assert ref.scale_trace is not None


def test_auto_dispatch_uses_compiled_for_identity(problem_factory):
    settings = SamplerSettings(sampler="rjmcmc", n_steps=500, thin_stride=10)
    prob = problem_factory(BasisKind.LINEAR)
    auto = run_sampler(prob, settings, seed=5)
    fast = run_sampler(prob, settings, seed=5, engine="compiled")
    assert_traces_identical(auto, fast)


def test_unknown_engine_rejected(problem_factory):
    settings = SamplerSettings(sampler="rjmcmc", n_steps=100)
    with pytest.raises(ValueError):
        run_sampler(problem_factory(BasisKind.LINEAR), settings, seed=1, engine="fastest")
