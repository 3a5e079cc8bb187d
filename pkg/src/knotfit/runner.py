"""Sampling loops for the four sampler variants.

Variants differ along two axes: proposal source (conventional
identity-scaled vs adaptive history-driven) and chain count (single chain
vs a tempered ensemble with swaps). A single sweep-based loop covers all
four; T = 1 simply never swaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import adapt as ad
from .curves import BasisKind, CandidateGrid, KnotModel, curve_on_grid
from .diagnostics import RunTrace
from .inference import Dataset, ForwardModel, PriorSpec, log_likelihood, log_prior
from .rjmcmc import ProposalKind, StepContext, rjmcmc_step
from .tempering import Chain, ChainEnsemble, adapt_ladder, geometric_ladder, pt_sweep

SAMPLER_NAMES = ("rjmcmc", "ap-rjmcmc", "pt-rjmcmc", "ap-pt-rjmcmc")


@dataclass(frozen=True)
class Problem:
    """The target: grid, basis, priors, data, and forward model."""

    grid: CandidateGrid
    basis: BasisKind
    priors: PriorSpec
    data: Dataset
    fwd: ForwardModel


@dataclass
class SamplerSettings:
    """Loop-level tunables; defaults follow the controlled-experiment setup."""

    sampler: str
    n_steps: int
    t0: int = 1000
    n_chains: int = 10
    ladder_floor: float = 0.05
    ladder_window: int = 1000
    burn_in_fraction: float = 0.25
    epsilon: Optional[float] = None  # default 1e-8 * a_range^2
    target_accept: float = 0.234
    gamma_exponent: float = 0.5
    sc_bounds: tuple[float, float] = (ad.LOG_SC_LO, ad.LOG_SC_HI)
    thin_stride: int = 10
    instrument: bool = False
    variance_columns: tuple[int, ...] = ()
    variance_stride: int = 1000
    counter_snapshot_at: Optional[int] = None

    def __post_init__(self):
        if self.sampler not in SAMPLER_NAMES:
            raise ValueError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLER_NAMES}")
        if self.n_steps <= self.t0 and self.adaptive:
            raise ValueError("chain length must exceed t0")

    @property
    def adaptive(self) -> bool:
        return self.sampler.startswith("ap-")

    @property
    def tempered(self) -> bool:
        return "pt-" in self.sampler


def default_initial_state(grid: CandidateGrid) -> KnotModel:
    """Zero curve with 4 knots: the endpoints plus the two sites next to x_lo."""
    ng = grid.n_points
    if ng >= 4:
        idx = np.array([0, 1, 2, ng - 1])
    else:
        idx = np.arange(ng)
    return KnotModel(idx, np.zeros(idx.size))


def _conventional_params(epsilon: float):
    sd1 = ad.dimensional_scale(1)
    sigma_b2 = sd1 * (1.0 + epsilon)

    def move_cov(indices: np.ndarray) -> np.ndarray:
        n = indices.size
        return ad.dimensional_scale(n) * (1.0 + epsilon) * np.eye(n)

    return sigma_b2, move_cov


def _adaptive_params(state: ad.AdaptiveState):
    def sigma_b2(site: int) -> float:
        return ad.birth_variance(state, site)

    def move_cov(indices: np.ndarray) -> np.ndarray:
        return ad.move_covariance(state, indices)

    return sigma_b2, move_cov


def run_sampler(
    problem: Problem,
    settings: SamplerSettings,
    seed,
    initial: Optional[KnotModel] = None,
    engine: str = "auto",
) -> RunTrace:
    """Run one replica of the configured sampler and return its trace.

    ``seed`` may be anything numpy's SeedSequence accepts; chain streams
    and the swap stream are spawned from it, so a replica is reproducible
    in isolation.

    ``engine`` selects the loop implementation: "compiled" runs the jitted
    fast path, "reference" the module-level kernel composition, and "auto"
    picks compiled for identity-forward problems. Both produce identical
    traces (the suite asserts it); forward models that are arbitrary
    Python callables always use the reference loop.
    """
    from .inference import identity_forward

    if engine not in ("auto", "compiled", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "compiled" or (engine == "auto" and problem.fwd is identity_forward):
        from .engine import run_sampler_compiled

        return run_sampler_compiled(problem, settings, seed, initial)

    grid, basis, priors = problem.grid, problem.basis, problem.priors
    data, fwd = problem.data, problem.fwd
    n_chains = settings.n_chains if settings.tempered else 1
    eps = settings.epsilon if settings.epsilon is not None else ad.default_epsilon(priors.a_range)

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_chains + 1)
    state0 = initial if initial is not None else default_initial_state(grid)
    state0.validate_on_grid(grid)
    ll0 = log_likelihood(state0, data, fwd, grid, basis)
    lp0 = log_prior(state0, priors, grid)
    if lp0 == -np.inf:
        raise ValueError("initial state has zero prior probability")

    ladder = geometric_ladder(n_chains, settings.ladder_floor)
    chains = [
        Chain(
            model=state0,
            log_lik=ll0,
            log_prior=lp0,
            rng=np.random.Generator(np.random.PCG64(children[i])),
            rung=i,
            grid_curve=curve_on_grid(state0, grid, basis),
        )
        for i in range(n_chains)
    ]
    ensemble = ChainEnsemble(
        chains=chains,
        ladder=ladder,
        swap_rng=np.random.Generator(np.random.PCG64(children[n_chains])),
    )

    sigma_conv, move_conv = _conventional_params(eps)
    contexts = [
        StepContext(
            grid=grid, basis=basis, priors=priors, data=data, fwd=fwd,
            sigma_b2=sigma_conv, move_cov=move_conv, temperature=1.0,
        )
        for _ in range(n_chains)
    ]
    history: list[list[np.ndarray]] = [[] for _ in range(n_chains)] if settings.adaptive else []

    thin = settings.thin_stride
    n_rec = settings.n_steps // thin
    rec_steps = np.empty(n_rec, dtype=np.int64)
    rec_curves = np.empty((n_rec, grid.n_points))
    rec_n = np.empty(n_rec, dtype=np.int64)
    rec_ll = np.empty(n_rec)
    attempts = {k.value: 0 for k in ProposalKind}
    accepts = {k.value: 0 for k in ProposalKind}
    snapshot_attempts: dict[str, int] = {}
    snapshot_accepts: dict[str, int] = {}
    drift: list[tuple[int, float]] = []
    scale_trace: list[tuple[int, float]] = []
    var_track: list[tuple[int, int, float]] = []

    t = 0
    adapting = False

    def step_chain(chain: Chain, temperature: float) -> None:
        idx = chain.rung
        ctx = contexts[idx]
        ctx.temperature = temperature
        rec = rjmcmc_step(
            chain.model, ctx, chain.rng,
            current_log_lik=chain.log_lik,
            current_log_prior=chain.log_prior,
            grid_curve=chain.grid_curve,
        )
        is_target = idx == 0
        if is_target:
            attempts[rec.kind.value] += 1
            accepts[rec.kind.value] += int(rec.accepted)
        astate = chain.adapt_state
        if astate is not None and rec.kind is ProposalKind.MOVE:
            before = astate.log_sc
            ad.update_scale(astate, math.exp(rec.log_alpha))
            if settings.instrument and is_target:
                scale_trace.append((astate.move_counter, astate.log_sc - before))
        if rec.accepted:
            chain.model = rec.state
            chain.log_lik = rec.log_lik
            chain.log_prior = rec.log_prior
            chain.grid_curve = None
        need_curve = (
            astate is not None
            or (settings.adaptive and not adapting)
            or (is_target and t % thin == 0)
        )
        if need_curve and chain.grid_curve is None:
            chain.grid_curve = curve_on_grid(chain.model, grid, basis)
        if astate is not None:
            ad.update_history(astate, chain.grid_curve)
            if settings.instrument and is_target:
                drift.append((t, astate.last_drift_inf))
        elif settings.adaptive and not adapting:
            history[idx].append(chain.grid_curve)

    track_cols = tuple(settings.variance_columns)
    for t in range(1, settings.n_steps + 1):
        pt_sweep(ensemble, step_chain)
        if settings.adaptive and not adapting and t == settings.t0:
            for idx, chain in enumerate(ensemble.chains):
                chain.adapt_state = ad.init_history(
                    np.asarray(history[idx]),
                    epsilon=eps,
                    target_accept=settings.target_accept,
                    gamma_exponent=settings.gamma_exponent,
                    log_sc_bounds=settings.sc_bounds,
                    track_drift=settings.instrument,
                )
                contexts[idx].sigma_b2, contexts[idx].move_cov = _adaptive_params(chain.adapt_state)
            history = []
            adapting = True
        if (
            n_chains > 1
            and t % settings.ladder_window == 0
            and t <= settings.burn_in_fraction * settings.n_steps
        ):
            ensemble.ladder_rounds += 1
            ensemble.ladder = adapt_ladder(
                ensemble.ladder, ensemble.window_rates(), ensemble.ladder_rounds
            )
            ensemble.reset_swap_window()
        if t == settings.counter_snapshot_at:
            snapshot_attempts = dict(attempts)
            snapshot_accepts = dict(accepts)
        if t % thin == 0:
            chain0 = ensemble.chains[0]
            if chain0.grid_curve is None:
                chain0.grid_curve = curve_on_grid(chain0.model, grid, basis)
            r = t // thin - 1
            rec_steps[r] = t
            rec_curves[r] = chain0.grid_curve
            rec_n[r] = chain0.model.n
            rec_ll[r] = chain0.log_lik
        if track_cols and t % settings.variance_stride == 0:
            astate = ensemble.chains[0].adapt_state
            if astate is not None:
                for col in track_cols:
                    var_track.append((t, col, float(astate.cov[col, col])))

    final_astate = ensemble.chains[0].adapt_state
    return RunTrace(
        steps=rec_steps,
        grid_curves=rec_curves,
        n_values=rec_n,
        log_liks=rec_ll,
        grid_coords=np.asarray(grid.coords),
        n_steps=settings.n_steps,
        thin_stride=thin,
        attempts=attempts,
        accepts=accepts,
        snapshot_attempts=snapshot_attempts,
        snapshot_accepts=snapshot_accepts,
        adapt_drift=np.array(drift) if drift else None,
        scale_trace=np.array(scale_trace) if scale_trace else None,
        variance_track=np.array(var_track) if var_track else None,
        final_cov_diag=np.diag(final_astate.cov).copy() if final_astate is not None else None,
    )
