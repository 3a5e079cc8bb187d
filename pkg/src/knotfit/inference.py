"""Priors, Gaussian likelihood, and the forward-model interface.

A forward model is any callable ``g(curve, coords) -> predictions`` where
``curve`` itself is a callable ``f(x)``. Regression uses the identity map;
the beam module supplies an FEM-based one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import _kernels
from .curves import BasisKind, CandidateGrid, CurveEvaluator, KnotModel

CurveFn = Callable[[np.ndarray], np.ndarray]
ForwardModel = Callable[[CurveFn, np.ndarray], np.ndarray]

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Dataset:
    """Observed pairs (x_i, d_i) with the known noise scale of the errors."""

    x: np.ndarray
    d: np.ndarray
    noise_sd: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        d = np.asarray(self.d, dtype=float).copy()
        if x.ndim != 1 or d.ndim != 1 or x.size != d.size:
            raise ValueError("x and d must be 1-d arrays of equal length")
        if x.size < 1:
            raise ValueError("a dataset needs at least one observation")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        x.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)

    @property
    def k(self) -> int:
        return self.x.size


def read_dataset_csv(path: str | Path, noise_sd: float) -> Dataset:
    """Load observations from a CSV with header ``x,d``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header[:2]] != ["x", "d"]:
            raise ValueError(f"{path}: expected header 'x,d', got {header!r}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    xs, ds = zip(*rows)
    return Dataset(np.array(xs), np.array(ds), noise_sd)


def write_dataset_csv(path: str | Path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,d\n")
        for xi, di in zip(data.x, data.d):
            fh.write(f"{float(xi)!r},{float(di)!r}\n")


@dataclass(frozen=True)
class UniformCount:
    """Uniform knot-count prior on [n_min, n_max].

    Mass 1/(n_max - n_min + 1); the count-correct normalizer is used, which
    only shifts every log prior by a constant and cancels in all ratios.
    """

    n_min: int
    n_max: int

    def log_mass(self, n: int) -> float:
        if n < self.n_min or n > self.n_max:
            return -np.inf
        return -math.log(self.n_max - self.n_min + 1)


@dataclass(frozen=True)
class PoissonCount:
    """Poisson(lam) knot-count prior truncated to [2, n_cap], unnormalized.

    Only prior ratios enter acceptance probabilities, so the truncated
    normalization constant is omitted.
    """

    lam: float
    n_cap: int

    def log_mass(self, n: int) -> float:
        if n < 2 or n > self.n_cap:
            return -np.inf
        return n * math.log(self.lam) - self.lam - math.lgamma(n + 1)


CountPrior = Union[UniformCount, PoissonCount]


@dataclass(frozen=True)
class PriorSpec:
    """Joint prior: count prior, uniform locations, independent uniform values."""

    count: CountPrior
    a_min: float
    a_max: float

    def __post_init__(self):
        if not self.a_min < self.a_max:
            raise ValueError("a_min must be < a_max")

    @property
    def a_range(self) -> float:
        return self.a_max - self.a_min


def log_location_mass(n: int, n_grid: int) -> float:
    """log of 1/C(N_g-2, n-2): uniform without replacement over interior sites."""
    if n < 2 or n > n_grid:
        return -np.inf
    return -(math.lgamma(n_grid - 1) - math.lgamma(n - 1) - math.lgamma(n_grid - n + 1))


def log_prior(model: KnotModel, spec: PriorSpec, grid: CandidateGrid) -> float:
    """log p(n) + log p(r|n) + log p(a|n,r); -inf outside the support.

    Locations are uniform without replacement over the interior sites, mass
    1/C(N_g-2, n-2); values are iid uniform on [a_min, a_max].
    """
    n = model.n
    log_pn = spec.count.log_mass(n)
    if log_pn == -np.inf:
        return -np.inf
    vals = model.knot_values
    if vals.min() < spec.a_min or vals.max() > spec.a_max:
        return -np.inf
    log_pa = -n * math.log(spec.a_range)
    return log_pn + log_location_mass(n, grid.n_points) + log_pa


def build_prior_tables(spec: PriorSpec, grid: CandidateGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-n count and location log masses for kernel-side evaluation.

    Built from the same scalar expressions as log_prior, so tabled and
    direct evaluation agree bit-for-bit.
    """
    ng = grid.n_points
    count = np.array([spec.count.log_mass(n) for n in range(ng + 1)])
    loc = np.array([log_location_mass(n, ng) for n in range(ng + 1)])
    return count, loc


def identity_forward(curve: CurveFn, coords: np.ndarray) -> np.ndarray:
    """Regression forward model: predictions are the curve itself."""
    return curve(coords)


def gaussian_loglik(residuals: np.ndarray, noise_sd: float) -> float:
    """Independent zero-mean Gaussian log density of the residuals."""
    k = residuals.size
    var = noise_sd * noise_sd
    quad = _kernels.sumsq(np.ascontiguousarray(residuals, dtype=float))
    return -0.5 * k * (LOG_2PI + math.log(var)) - quad / (2.0 * var)


def log_likelihood(
    model: KnotModel,
    data: Dataset,
    fwd: ForwardModel,
    grid: CandidateGrid,
    basis: BasisKind,
) -> float:
    """Gaussian log likelihood of the data under the model's curve.

    Forward-model failures propagate as exceptions; they are not folded
    into the density.
    """
    curve = CurveEvaluator(model, grid, basis)
    pred = fwd(curve, data.x)
    return gaussian_loglik(data.d - np.asarray(pred, dtype=float), data.noise_sd)
