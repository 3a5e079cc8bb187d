"""Synthetic dataset generators for the controlled experiments.

Each generator is deterministic given its seed. The step generator leaves
an observation-free transition zone so the curve is prior-dominated there;
the beam twin produces deflection data from a known pressure truth through
the implemented FEM forward model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beam import BeamAssembly, BeamSpec
from .inference import Dataset


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def example1_truth(x: np.ndarray) -> np.ndarray:
    """Smooth bump-plus-wave test curve on [-2, 2]."""
    x = np.asarray(x, dtype=float)
    return np.sin(2.0 * x) + 2.0 * np.exp(-16.0 * x**2)


def generate_example1(k: int, seed, noise_sd: float = 0.3) -> Dataset:
    """k equally spaced noisy observations of the example-1 curve."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.linspace(-2.0, 2.0, k)
    d = example1_truth(x) + noise_sd * _rng(seed).standard_normal(k)
    return Dataset(x, d, noise_sd)


def step_function(breakpoints: np.ndarray, levels: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Piecewise constant truth: levels[i] on the i-th segment."""
    return np.asarray(levels, dtype=float)[
        np.searchsorted(np.asarray(breakpoints, dtype=float), x, side="right")
    ]


def generate_step_data(
    breakpoints,
    levels,
    k: int,
    noise_sd: float,
    seed,
    domain: tuple[float, float] = (0.0, 1.0),
    gap: tuple[float, float] | None = (0.4, 0.6),
) -> Dataset:
    """Noisy step-function data with an observation-free transition zone.

    ``k`` sites are placed equally spaced over the domain and the ones that
    fall strictly inside ``gap`` are dropped, which leaves the zone around
    the level change unconstrained by data.
    """
    breakpoints = np.atleast_1d(np.asarray(breakpoints, dtype=float))
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if levels.size != breakpoints.size + 1:
        raise ValueError("need exactly one more level than breakpoints")
    lo, hi = domain
    if np.any(breakpoints <= lo) or np.any(breakpoints >= hi):
        raise ValueError("breakpoints must lie strictly inside the domain")
    x = np.linspace(lo, hi, k)
    if gap is not None:
        x = x[(x <= gap[0]) | (x >= gap[1])]
    d = step_function(breakpoints, levels, x)
    if noise_sd > 0:
        d = d + noise_sd * _rng(seed).standard_normal(x.size)
    return Dataset(x, d, noise_sd if noise_sd > 0 else 1e-12)


EXAMPLE2_BREAKPOINTS = (0.5,)
EXAMPLE2_LEVELS = (100.0, -100.0)


def generate_example2(k: int, seed, noise_sd: float = 5.0) -> Dataset:
    """Two plateaus at +/-100 with a 20%-wide unobserved transition zone."""
    return generate_step_data(
        EXAMPLE2_BREAKPOINTS, EXAMPLE2_LEVELS, k, noise_sd, seed,
        domain=(0.0, 1.0), gap=(0.4, 0.6),
    )


@dataclass(frozen=True)
class BeamTwinTruth:
    """Known piecewise-linear pressure profile over the beam."""

    x: tuple[float, ...]
    pressure: tuple[float, ...]

    def __call__(self, q: np.ndarray) -> np.ndarray:
        return np.interp(q, self.x, self.pressure)


def generate_beam_twin(
    spec: BeamSpec,
    truth: BeamTwinTruth,
    n_sensors: int,
    noise_sd: float,
    seed,
) -> Dataset:
    """Deflection observations of a known pressure through the FEM solver.

    Sensors are equally spaced over the beam interior (endpoints excluded:
    the clamped end never deflects).
    """
    assembly = BeamAssembly(spec)
    sensors = np.linspace(0.0, spec.length, n_sensors + 2)[1:-1]
    sol = assembly.solve(truth)
    d = assembly.deflection_at(sol, sensors)
    if noise_sd > 0:
        d = d + noise_sd * _rng(seed).standard_normal(sensors.size)
    return Dataset(sensors, d, noise_sd if noise_sd > 0 else 1e-12)
