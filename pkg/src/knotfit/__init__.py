"""Trans-dimensional Bayesian curve fitting on a fixed candidate grid.

Conventional, adaptive-proposal, and parallel-tempered reversible jump
samplers over free-knot piecewise curves, with pluggable forward models
(identity regression, Euler-Bernoulli beam FEM), convergence diagnostics,
and a batch experiment CLI.
"""

from .curves import BasisKind, CandidateGrid, KnotModel, build_grid, curve_on_grid, interpolate
from .inference import (
    Dataset,
    PoissonCount,
    PriorSpec,
    UniformCount,
    identity_forward,
    log_likelihood,
    log_prior,
)
from .runner import Problem, SamplerSettings, run_sampler

__version__ = "0.1.0"

__all__ = [
    "BasisKind",
    "CandidateGrid",
    "KnotModel",
    "build_grid",
    "curve_on_grid",
    "interpolate",
    "Dataset",
    "PoissonCount",
    "PriorSpec",
    "UniformCount",
    "identity_forward",
    "log_likelihood",
    "log_prior",
    "Problem",
    "SamplerSettings",
    "run_sampler",
    "__version__",
]
