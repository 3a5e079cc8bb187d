"""Parallel tempering: ladder, non-reversible swaps, ladder adaptation.

Only the likelihood is tempered, so adjacent-swap acceptance depends on
the two chains' log likelihoods alone. Swaps follow the deterministic
even-odd scheme: disjoint adjacent pairs of one parity per sweep, parity
alternating between sweeps. On an accepted swap the model states move
between rungs while each rung keeps its own adaptation history and RNG
stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .adapt import AdaptiveState
from .curves import KnotModel


@dataclass(frozen=True)
class Ladder:
    """Descending inverse-temperature ladder; temps[0] is the target chain."""

    temps: np.ndarray

    def __post_init__(self):
        temps = np.asarray(self.temps, dtype=float).copy()
        if temps.size < 1 or temps[0] != 1.0:
            raise ValueError("temps[0] must be exactly 1")
        if np.any(np.diff(temps) >= 0) or np.any(temps <= 0):
            raise ValueError("temps must be strictly decreasing and positive")
        temps.setflags(write=False)
        object.__setattr__(self, "temps", temps)

    @property
    def size(self) -> int:
        return self.temps.size


def geometric_ladder(n_chains: int, floor: float = 0.05) -> Ladder:
    """temps[i] = r^i with r set so the hottest rung sits at ``floor``."""
    if n_chains == 1:
        return Ladder(np.array([1.0]))
    if not 0 < floor < 1:
        raise ValueError("ladder floor must lie in (0, 1)")
    r = floor ** (1.0 / (n_chains - 1))
    return Ladder(r ** np.arange(n_chains))


@dataclass
class Chain:
    """One rung's working state; owned by a single stepping task.

    ``rung`` is the fixed ladder position; swaps exchange the model state
    and its cached quantities between Chain objects, never the objects
    themselves, so the adaptation history and RNG stream stay with the
    temperature.
    """

    model: KnotModel
    log_lik: float
    log_prior: float
    rng: np.random.Generator
    rung: int = 0
    grid_curve: Optional[np.ndarray] = None
    adapt_state: Optional[AdaptiveState] = None


@dataclass
class ChainEnsemble:
    """T chains plus the ladder and swap bookkeeping."""

    chains: list[Chain]
    ladder: Ladder
    swap_rng: np.random.Generator
    sweep_index: int = 0
    ladder_rounds: int = 0
    swap_attempts: np.ndarray = field(default=None)  # type: ignore[assignment]
    swap_accepts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.chains) != self.ladder.size:
            raise ValueError("one chain per ladder rung required")
        n_pairs = max(self.ladder.size - 1, 0)
        if self.swap_attempts is None:
            self.swap_attempts = np.zeros(n_pairs, dtype=np.int64)
        if self.swap_accepts is None:
            self.swap_accepts = np.zeros(n_pairs, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.ladder.size

    def reset_swap_window(self) -> None:
        self.swap_attempts[:] = 0
        self.swap_accepts[:] = 0

    def window_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.where(
                self.swap_attempts > 0, self.swap_accepts / self.swap_attempts, np.nan
            )


def swap_log_alpha(ll_i: float, ll_j: float, temp_i: float, temp_j: float) -> float:
    """Log acceptance for exchanging two rungs' states.

    Priors are untempered and cancel; only the tempered likelihoods enter.
    """
    return min(0.0, (temp_i - temp_j) * (ll_j - ll_i))


def swap_round(ensemble: ChainEnsemble) -> None:
    """Attempt the disjoint adjacent pairs of the current parity."""
    temps = ensemble.ladder.temps
    parity = ensemble.sweep_index % 2
    for i in range(parity, ensemble.size - 1, 2):
        a, b = ensemble.chains[i], ensemble.chains[i + 1]
        log_alpha = swap_log_alpha(a.log_lik, b.log_lik, temps[i], temps[i + 1])
        ensemble.swap_attempts[i] += 1
        if ensemble.swap_rng.random() < math.exp(log_alpha):
            ensemble.swap_accepts[i] += 1
            a.model, b.model = b.model, a.model
            a.log_lik, b.log_lik = b.log_lik, a.log_lik
            a.log_prior, b.log_prior = b.log_prior, a.log_prior
            a.grid_curve, b.grid_curve = b.grid_curve, a.grid_curve
    ensemble.sweep_index += 1


def pt_sweep(ensemble: ChainEnsemble, step_chain: Callable[[Chain, float], None]) -> ChainEnsemble:
    """Advance every chain one step at its rung temperature, then swap.

    ``step_chain`` performs the within-chain kernel step (conventional or
    adaptive as the caller's phase dictates) and updates the chain's cached
    quantities in place. With a single rung this degrades to plain RJMCMC:
    no swap is ever attempted.
    """
    for chain, temp in zip(ensemble.chains, ensemble.ladder.temps):
        step_chain(chain, float(temp))
    if ensemble.size > 1:
        swap_round(ensemble)
    else:
        ensemble.sweep_index += 1
    return ensemble


def adapt_ladder(
    ladder: Ladder,
    window_rates: np.ndarray,
    round_index: int,
    band: tuple[float, float] = (0.1, 0.4),
) -> Ladder:
    """Rescale log-temperature gaps toward the target acceptance band.

    Pairs inside the band are left alone; a pair outside it moves its gap
    toward the band center, so the equilibrium sits strictly inside the
    band rather than parking on its edge. The step size decays as
    round_index^-1/2. Pairs with no attempts in the window (NaN rate) are
    skipped. temps[0] stays pinned at 1 and monotonicity is preserved by
    construction.
    """
    if ladder.size < 2:
        return ladder
    rates = np.asarray(window_rates, dtype=float)
    if rates.size != ladder.size - 1:
        raise ValueError("need one rate per adjacent pair")
    lo, hi = band
    mid = 0.5 * (lo + hi)
    delta = np.zeros_like(rates)
    known = ~np.isnan(rates)
    outside = known & ((rates < lo) | (rates > hi))
    delta[outside] = (rates - mid)[outside]
    gamma = max(round_index, 1) ** -0.5
    gaps = -np.diff(np.log(ladder.temps))
    # bounded gaps keep the ladder well-formed even when every swap is
    # accepted (or refused) for many windows in a row
    gaps = np.clip(gaps * np.exp(gamma * delta), 1e-4, 20.0)
    return Ladder(np.exp(-np.concatenate(([0.0], np.cumsum(gaps)))))
