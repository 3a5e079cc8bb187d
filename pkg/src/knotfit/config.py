"""Run configuration: versioned JSON schema around plain dataclasses.

Every tunable of the sampling loop is reachable from the config file;
defaults follow the controlled-experiment settings (chain length 2e6,
t_0 = 1000, target acceptance 0.234, decay exponent 0.5, 10 chains).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .beam import BeamSpec, BoundaryCondition, clamped_base
from .curves import BasisKind, CandidateGrid, build_grid
from .generators import (
    BeamTwinTruth,
    generate_beam_twin,
    generate_example1,
    generate_example2,
    generate_step_data,
)
from .inference import Dataset, PoissonCount, PriorSpec, UniformCount, read_dataset_csv

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def _require(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str  # example1 | example2 | step | beam_twin
    k: int = 200
    noise_sd: Optional[float] = None
    seed: int = 0
    breakpoints: tuple[float, ...] = ()
    levels: tuple[float, ...] = ()
    domain: tuple[float, float] = (0.0, 1.0)
    gap: Optional[tuple[float, float]] = (0.4, 0.6)
    truth_x: tuple[float, ...] = ()
    truth_pressure: tuple[float, ...] = ()

    @staticmethod
    def from_dict(raw: dict) -> "GeneratorConfig":
        kind = _require(raw, "kind", "generator")
        if kind not in ("example1", "example2", "step", "beam_twin"):
            raise ConfigError(f"generator: unknown kind {kind!r}")
        return GeneratorConfig(
            kind=kind,
            k=int(raw.get("k", 200)),
            noise_sd=raw.get("noise_sd"),
            seed=int(raw.get("seed", 0)),
            breakpoints=tuple(raw.get("breakpoints", ())),
            levels=tuple(raw.get("levels", ())),
            domain=tuple(raw.get("domain", (0.0, 1.0))),
            gap=tuple(raw["gap"]) if raw.get("gap") is not None else None,
            truth_x=tuple(raw.get("truth_x", ())),
            truth_pressure=tuple(raw.get("truth_pressure", ())),
        )


@dataclass(frozen=True)
class BeamConfig:
    length: float
    n_elements: int
    flexural_rigidity: float | tuple[float, ...]
    boundary_conditions: tuple[tuple[int, str, float], ...] = ()
    sensor_coords: tuple[float, ...] = ()

    @staticmethod
    def from_dict(raw: dict) -> "BeamConfig":
        return BeamConfig(
            length=float(_require(raw, "length", "beam")),
            n_elements=int(_require(raw, "n_elements", "beam")),
            flexural_rigidity=raw.get("flexural_rigidity", raw.get("EI", 1.0)),
            boundary_conditions=tuple(
                (int(n), str(d), float(v)) for n, d, v in raw.get("boundary_conditions", ())
            ),
            sensor_coords=tuple(raw.get("sensor_coords", ())),
        )

    def to_spec(self) -> BeamSpec:
        ei = self.flexural_rigidity
        bcs = (
            tuple(BoundaryCondition(n, d, v) for n, d, v in self.boundary_conditions)
            or clamped_base()
        )
        return BeamSpec(
            length=self.length,
            n_elements=self.n_elements,
            flexural_rigidity=np.asarray(ei, dtype=float) if not np.isscalar(ei) else float(ei),
            boundary_conditions=bcs,
        )


@dataclass(frozen=True)
class RunConfig:
    sampler: str
    basis: str
    grid_x_lo: float
    grid_x_hi: float
    grid_n_points: int
    prior_kind: str  # uniform | poisson
    n_min: int
    n_max: int
    poisson_lambda: float
    a_min: float
    a_max: float
    dataset_path: Optional[str]
    dataset_noise_sd: Optional[float]
    generator: Optional[GeneratorConfig]
    forward: str  # identity | beam
    beam: Optional[BeamConfig]
    chain_length: int = 2_000_000
    t0: int = 1000
    n_chains: int = 10
    ladder_floor: float = 0.05
    ladder_window: int = 1000
    ladder_burn_in_fraction: float = 0.25
    epsilon: Optional[float] = None
    target_accept: float = 0.234
    gamma_exponent: float = 0.5
    sc_lo: float = 1e-10
    sc_hi: float = 1e10
    monitor_stride: int = 10_000
    thin_stride: int = 10
    summary_burn_in_fraction: float = 0.5
    value_bins: int = 200
    master_seed: int = 0
    replicas: int = 1
    out_dir: str = "out"
    variance_columns: tuple[int, ...] = ()
    variance_stride: int = 1000
    instrument: bool = False

    def grid(self) -> CandidateGrid:
        return build_grid(self.grid_x_lo, self.grid_x_hi, self.grid_n_points)

    def basis_kind(self) -> BasisKind:
        try:
            return BasisKind(self.basis)
        except ValueError:
            raise ConfigError(f"unknown basis {self.basis!r}") from None

    def prior_spec(self) -> PriorSpec:
        if self.prior_kind == "uniform":
            count = UniformCount(self.n_min, self.n_max)
        elif self.prior_kind == "poisson":
            count = PoissonCount(self.poisson_lambda, self.grid_n_points)
        else:
            raise ConfigError(f"unknown prior kind {self.prior_kind!r}")
        return PriorSpec(count=count, a_min=self.a_min, a_max=self.a_max)

    def dataset(self) -> Dataset:
        if self.dataset_path is not None:
            if self.dataset_noise_sd is None:
                raise ConfigError("dataset_noise_sd is required with dataset_path")
            return read_dataset_csv(self.dataset_path, self.dataset_noise_sd)
        if self.generator is None:
            raise ConfigError("either dataset_path or generator must be given")
        return build_dataset(self.generator, beam=self.beam)


def build_dataset(gen: GeneratorConfig, beam: Optional[BeamConfig] = None) -> Dataset:
    if gen.kind == "example1":
        return generate_example1(gen.k, gen.seed, gen.noise_sd if gen.noise_sd is not None else 0.3)
    if gen.kind == "example2":
        return generate_example2(gen.k, gen.seed, gen.noise_sd if gen.noise_sd is not None else 5.0)
    if gen.kind == "step":
        if gen.noise_sd is None:
            raise ConfigError("step generator requires noise_sd")
        return generate_step_data(
            gen.breakpoints, gen.levels, gen.k, gen.noise_sd, gen.seed,
            domain=gen.domain, gap=gen.gap,
        )
    if gen.kind == "beam_twin":
        if beam is None:
            raise ConfigError("beam_twin generator requires a beam config block")
        if gen.noise_sd is None:
            raise ConfigError("beam_twin generator requires noise_sd")
        truth = BeamTwinTruth(gen.truth_x, gen.truth_pressure)
        return generate_beam_twin(beam.to_spec(), truth, gen.k, gen.noise_sd, gen.seed)
    raise ConfigError(f"unknown generator kind {gen.kind!r}")


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_run_config(raw, base_dir=path.parent)


def parse_run_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    sampler = _require(raw, "sampler", "config")
    from .runner import SAMPLER_NAMES

    if sampler not in SAMPLER_NAMES:
        raise ConfigError(f"unknown sampler {sampler!r}; expected one of {SAMPLER_NAMES}")
    grid = _require(raw, "grid", "config")
    priors = _require(raw, "priors", "config")
    data = _require(raw, "data", "config")
    dataset_path = data.get("path")
    if dataset_path is not None and base_dir is not None:
        p = Path(dataset_path)
        dataset_path = str(p if p.is_absolute() else base_dir / p)
        if not Path(dataset_path).exists():
            raise ConfigError(f"dataset file not found: {dataset_path}")
    generator = GeneratorConfig.from_dict(data["generator"]) if "generator" in data else None
    forward = raw.get("forward", {"kind": "identity"})
    beam = BeamConfig.from_dict(forward["beam"]) if "beam" in forward else None
    cfg = RunConfig(
        sampler=sampler,
        basis=raw.get("basis", "linear"),
        grid_x_lo=float(_require(grid, "x_lo", "grid")),
        grid_x_hi=float(_require(grid, "x_hi", "grid")),
        grid_n_points=int(_require(grid, "n_points", "grid")),
        prior_kind=priors.get("kind", "uniform"),
        n_min=int(priors.get("n_min", 2)),
        n_max=int(priors.get("n_max", grid.get("n_points", 2))),
        poisson_lambda=float(priors.get("lambda", 22.0)),
        a_min=float(_require(priors, "a_min", "priors")),
        a_max=float(_require(priors, "a_max", "priors")),
        dataset_path=dataset_path,
        dataset_noise_sd=data.get("noise_sd"),
        generator=generator,
        forward=forward.get("kind", "identity"),
        beam=beam,
        chain_length=int(raw.get("chain_length", 2_000_000)),
        t0=int(raw.get("t0", 1000)),
        n_chains=int(raw.get("n_chains", 10)),
        ladder_floor=float(raw.get("ladder_floor", 0.05)),
        ladder_window=int(raw.get("ladder_window", 1000)),
        ladder_burn_in_fraction=float(raw.get("ladder_burn_in_fraction", 0.25)),
        epsilon=raw.get("epsilon"),
        target_accept=float(raw.get("target_accept", 0.234)),
        gamma_exponent=float(raw.get("gamma_exponent", 0.5)),
        sc_lo=float(raw.get("sc_lo", 1e-10)),
        sc_hi=float(raw.get("sc_hi", 1e10)),
        monitor_stride=int(raw.get("monitor_stride", 10_000)),
        thin_stride=int(raw.get("thin_stride", 10)),
        summary_burn_in_fraction=float(raw.get("summary_burn_in_fraction", 0.5)),
        value_bins=int(raw.get("value_bins", 200)),
        master_seed=int(raw.get("master_seed", 0)),
        replicas=int(raw.get("replicas", 1)),
        out_dir=raw.get("out_dir", "out"),
        variance_columns=tuple(raw.get("variance_columns", ())),
        variance_stride=int(raw.get("variance_stride", 1000)),
        instrument=bool(raw.get("instrument", False)),
    )
    if cfg.chain_length <= cfg.t0 and cfg.sampler.startswith("ap-"):
        raise ConfigError("chain_length must exceed t0")
    if cfg.replicas < 1:
        raise ConfigError("replicas must be >= 1")
    if cfg.forward not in ("identity", "beam"):
        raise ConfigError(f"unknown forward kind {cfg.forward!r}")
    if cfg.forward == "beam" and cfg.beam is None:
        raise ConfigError("forward kind 'beam' requires a beam block")
    return cfg


def load_generator_config(path: str | Path) -> tuple[GeneratorConfig, Optional[BeamConfig]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"generator file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    beam = BeamConfig.from_dict(raw["beam"]) if "beam" in raw else None
    return GeneratorConfig.from_dict(raw), beam
