"""Trans-dimensional kernel: birth/death/move proposals and acceptance.

Proposal kinds are drawn with equal probability. Blocked proposals (birth
with every site occupied, death with only endpoint knots left) count as
rejected iterations, which preserves the 1/3 kind probabilities that the
proposal-ratio cancellations rely on.

The runtime acceptance ratio is always assembled generically from prior,
tempered likelihood, and proposal terms; the uniform-prior closed forms
serve as independent test oracles only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .curves import BasisKind, CandidateGrid, CurveEvaluator, KnotModel
from .inference import Dataset, ForwardModel, PriorSpec, log_likelihood, log_prior

LOG_2PI = math.log(2.0 * math.pi)

SigmaB2 = Union[float, Callable[[int], float]]
MoveCov = Callable[[np.ndarray], np.ndarray]


class ProposalKind(Enum):
    BIRTH = "birth"
    DEATH = "death"
    MOVE = "move"


@dataclass(frozen=True)
class ProposalOutcome:
    """A candidate state plus the log proposal densities both ways.

    For moves the perturbation is symmetric so the two densities are
    recorded as equal; for birth/death they carry the site-selection and
    value-perturbation terms.
    """

    kind: ProposalKind
    candidate: KnotModel
    log_forward_q: float
    log_reverse_q: float
    birth_site: Optional[int] = None
    birth_anchor: Optional[float] = None


@dataclass(frozen=True)
class StepRecord:
    """Outcome of one kernel step; rejected steps return the prior state."""

    accepted: bool
    kind: ProposalKind
    log_alpha: float
    state: KnotModel
    log_lik: float
    log_prior: float


def _log_normal_pdf(x: float, mu: float, var: float) -> float:
    return -0.5 * (LOG_2PI + math.log(var)) - (x - mu) ** 2 / (2.0 * var)


def _resolve_sigma(sigma_b2: SigmaB2, site: int) -> float:
    sig = sigma_b2(site) if callable(sigma_b2) else float(sigma_b2)
    if not sig > 0:
        raise ValueError("birth variance must be positive")
    return sig


def propose_birth(
    current: KnotModel,
    grid: CandidateGrid,
    basis: BasisKind,
    sigma_b2: SigmaB2,
    rng: np.random.Generator,
    grid_curve: Optional[np.ndarray] = None,
) -> Optional[ProposalOutcome]:
    """Add a knot at a uniformly chosen unoccupied site.

    The new value is a Gaussian perturbation around the current curve's
    value at that site. ``sigma_b2`` may be a constant or a site-indexed
    callable (adaptive case). Returns None when every site is occupied.
    ``grid_curve``, when supplied, must be the current curve on the grid
    and avoids re-interpolating for the anchor value.
    """
    ng = grid.n_points
    n_c = current.n
    n_free = ng - n_c
    if n_free == 0:
        return None
    free = np.setdiff1d(np.arange(ng), current.knot_indices, assume_unique=True)
    site = int(free[rng.integers(n_free)])
    if grid_curve is not None:
        a_p = float(grid_curve[site])
    else:
        a_p = float(CurveEvaluator(current, grid, basis)(grid.coords[site]))
    sig = _resolve_sigma(sigma_b2, site)
    a_b = a_p + math.sqrt(sig) * rng.standard_normal()
    pos = int(np.searchsorted(current.knot_indices, site))
    candidate = KnotModel(
        np.insert(current.knot_indices, pos, site),
        np.insert(current.knot_values, pos, a_b),
    )
    log_fwd = -math.log(n_free) + _log_normal_pdf(a_b, a_p, sig)
    log_rev = -math.log(candidate.n - 2)
    return ProposalOutcome(
        kind=ProposalKind.BIRTH,
        candidate=candidate,
        log_forward_q=log_fwd,
        log_reverse_q=log_rev,
        birth_site=site,
        birth_anchor=a_p,
    )


def propose_death(
    current: KnotModel,
    grid: CandidateGrid,
    basis: BasisKind,
    sigma_b2: SigmaB2,
    rng: np.random.Generator,
) -> Optional[ProposalOutcome]:
    """Delete a uniformly chosen interior knot.

    The reverse move is a birth from the reduced state, so the reverse
    density uses the deleted value against the post-deletion interpolation
    at that site. Returns None when only the endpoint knots remain.
    """
    n_c = current.n
    if n_c == 2:
        return None
    pick = 1 + int(rng.integers(n_c - 2))
    site = int(current.knot_indices[pick])
    deleted = float(current.knot_values[pick])
    candidate = KnotModel(
        np.delete(current.knot_indices, pick),
        np.delete(current.knot_values, pick),
    )
    a_p_after = float(CurveEvaluator(candidate, grid, basis)(grid.coords[site]))
    sig = _resolve_sigma(sigma_b2, site)
    log_fwd = -math.log(n_c - 2)
    log_rev = -math.log(grid.n_points - candidate.n) + _log_normal_pdf(deleted, a_p_after, sig)
    return ProposalOutcome(
        kind=ProposalKind.DEATH,
        candidate=candidate,
        log_forward_q=log_fwd,
        log_reverse_q=log_rev,
        birth_site=site,
        birth_anchor=a_p_after,
    )


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    chol = np.empty_like(cov)
    if _kernels.chol_with_jitter(cov.copy(), chol) < 0:
        raise ValueError("move covariance is not positive definite")
    return chol


def propose_move(
    current: KnotModel,
    cov: np.ndarray,
    rng: np.random.Generator,
) -> ProposalOutcome:
    """Jointly perturb all knot values with a Gaussian of covariance cov.

    Locations and count are unchanged. The proposal is symmetric, so both
    log densities are recorded as zero.
    """
    cov = np.ascontiguousarray(cov, dtype=float)
    n = current.n
    if cov.shape != (n, n):
        raise ValueError(f"covariance must be {n}x{n}")
    chol = _cholesky_with_jitter(cov)
    z = rng.standard_normal(n)
    step = np.empty(n)
    _kernels.matvec(chol, z, step)
    candidate = KnotModel(current.knot_indices, current.knot_values + step)
    return ProposalOutcome(
        kind=ProposalKind.MOVE,
        candidate=candidate,
        log_forward_q=0.0,
        log_reverse_q=0.0,
    )


def generic_log_alpha(
    delta_log_lik: float,
    delta_log_prior: float,
    outcome: ProposalOutcome,
    temperature: float = 1.0,
) -> float:
    """min(0, Tem*dLL + dLP + log q_rev - log q_fwd); |J| = 1 contributes 0."""
    if delta_log_prior == -np.inf:
        return -np.inf
    raw = (
        temperature * delta_log_lik
        + delta_log_prior
        + outcome.log_reverse_q
        - outcome.log_forward_q
    )
    return min(0.0, raw)


def log_accept_ratio(
    current: KnotModel,
    outcome: ProposalOutcome,
    priors: PriorSpec,
    data: Dataset,
    fwd: ForwardModel,
    grid: CandidateGrid,
    basis: BasisKind,
    temperature: float = 1.0,
) -> float:
    """Tempered log acceptance ratio for a proposal, from scratch.

    The sampling loop caches the current state's likelihood and prior and
    assembles the same expression through generic_log_alpha; this entry
    point recomputes both sides and exists for standalone use.
    """
    lp_c = log_prior(current, priors, grid)
    lp_s = log_prior(outcome.candidate, priors, grid)
    if lp_s == -np.inf:
        return -np.inf
    ll_c = log_likelihood(current, data, fwd, grid, basis)
    ll_s = log_likelihood(outcome.candidate, data, fwd, grid, basis)
    return generic_log_alpha(ll_s - ll_c, lp_s - lp_c, outcome, temperature)


@dataclass
class StepContext:
    """Everything a kernel step needs besides the state and the RNG.

    ``sigma_b2`` is a float or site-indexed callable; ``move_cov`` maps the
    occupied index vector to the move covariance. Conventional samplers
    bind these to identity-based values, adaptive ones to the history
    state.
    """

    grid: CandidateGrid
    basis: BasisKind
    priors: PriorSpec
    data: Dataset
    fwd: ForwardModel
    sigma_b2: SigmaB2
    move_cov: MoveCov
    temperature: float = 1.0


def rjmcmc_step(
    state: KnotModel,
    ctx: StepContext,
    rng: np.random.Generator,
    current_log_lik: Optional[float] = None,
    current_log_prior: Optional[float] = None,
    grid_curve: Optional[np.ndarray] = None,
) -> StepRecord:
    """One kernel iteration: draw a kind, propose, accept or reject.

    Cached current-state quantities can be passed to avoid recomputation
    in sampling loops; they are recomputed when omitted.
    """
    if current_log_lik is None:
        current_log_lik = log_likelihood(state, ctx.data, ctx.fwd, ctx.grid, ctx.basis)
    if current_log_prior is None:
        current_log_prior = log_prior(state, ctx.priors, ctx.grid)

    u = rng.integers(3)
    if u == 0:
        kind = ProposalKind.MOVE
        outcome = propose_move(state, ctx.move_cov(state.knot_indices), rng)
    elif u == 1:
        kind = ProposalKind.BIRTH
        outcome = propose_birth(state, ctx.grid, ctx.basis, ctx.sigma_b2, rng, grid_curve)
    else:
        kind = ProposalKind.DEATH
        outcome = propose_death(state, ctx.grid, ctx.basis, ctx.sigma_b2, rng)

    if outcome is None:
        return StepRecord(False, kind, -np.inf, state, current_log_lik, current_log_prior)

    lp_s = log_prior(outcome.candidate, ctx.priors, ctx.grid)
    if lp_s == -np.inf:
        # certain rejection; skip the forward evaluation
        return StepRecord(False, kind, -np.inf, state, current_log_lik, current_log_prior)
    ll_s = log_likelihood(outcome.candidate, ctx.data, ctx.fwd, ctx.grid, ctx.basis)
    log_alpha = generic_log_alpha(
        ll_s - current_log_lik, lp_s - current_log_prior, outcome, ctx.temperature
    )
    if rng.random() < math.exp(log_alpha):
        return StepRecord(True, kind, log_alpha, outcome.candidate, ll_s, lp_s)
    return StepRecord(False, kind, log_alpha, state, current_log_lik, current_log_prior)
