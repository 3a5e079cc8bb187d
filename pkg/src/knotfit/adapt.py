"""Adaptive proposal machinery: grid-history mean/covariance and scalings.

The sampler records, at every step, the curve interpolated onto the full
candidate grid. A recursive mean/covariance of that history supplies move
covariances (submatrix at the occupied sites) and birth variances (single
diagonal entry), combined with the dimensional factor (2.4)^2/d and a
log-domain dynamic factor coercing move acceptance toward a target rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from ._kernels import SD_NUMERATOR

LOG_SC_LO = math.log(1e-10)
LOG_SC_HI = math.log(1e10)


def dimensional_scale(d: int) -> float:
    """(2.4)^2 / d, the classic random-walk scaling for dimension d."""
    return SD_NUMERATOR / d


@dataclass
class AdaptiveState:
    """Running history statistics for one chain.

    Owned exclusively by its chain; update methods mutate in place and
    return the state for call chaining.
    """

    mean: np.ndarray
    cov: np.ndarray
    t: int
    epsilon: float
    log_sc: float = 0.0
    move_counter: int = 0
    target_accept: float = 0.234
    gamma_exponent: float = 0.5
    log_sc_bounds: tuple[float, float] = (LOG_SC_LO, LOG_SC_HI)
    track_drift: bool = False
    last_drift_inf: float = math.nan

    def __post_init__(self):
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("cov must be N_g x N_g for a length-N_g mean")
        if self.t < 1:
            raise ValueError("step counter must be >= 1 after initialization")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def n_grid(self) -> int:
        return self.mean.size

    @property
    def s_c(self) -> float:
        return math.exp(self.log_sc)


def init_history(samples: np.ndarray, epsilon: float, **kwargs) -> AdaptiveState:
    """Batch-initialize from the first t_0 grid curves (one row each).

    Uses the unbiased (t_0 - 1) covariance denominator; the recursion then
    takes over from t = t_0.
    """
    samples = np.ascontiguousarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("need at least 2 history vectors to initialize")
    t0, ng = samples.shape
    mean = np.empty(ng)
    cov = np.empty((ng, ng))
    _kernels.batch_mean_cov(samples, mean, cov)
    return AdaptiveState(mean=mean, cov=cov, t=t0, epsilon=epsilon, **kwargs)


def update_history(state: AdaptiveState, curve: np.ndarray) -> AdaptiveState:
    """One recursion step: covariance first (both with the pre-update mean).

    cov += (dev dev^T - cov)/t', mean += dev/t', t' = t+1.
    """
    curve = np.ascontiguousarray(curve, dtype=float)
    if curve.shape != state.mean.shape:
        raise ValueError("curve vector length must match the grid size")
    drift = _kernels.update_history_kernel(
        state.cov, state.mean, curve, state.t, state.track_drift
    )
    if state.track_drift:
        state.last_drift_inf = float(drift)
    state.t += 1
    return state


def move_covariance(state: AdaptiveState, occupied: np.ndarray) -> np.ndarray:
    """Move proposal covariance s_c * s_d * (C[c, c] + eps*I), d = len(c)."""
    occupied = np.asarray(occupied, dtype=np.int64)
    d = occupied.size
    sub = state.cov[np.ix_(occupied, occupied)].copy()
    sub[np.diag_indices(d)] += state.epsilon
    sub *= state.s_c * dimensional_scale(d)
    return sub


def birth_variance(state: AdaptiveState, site: int) -> float:
    """Birth/death perturbation variance s_d * (C[j, j] + eps); no s_c."""
    return dimensional_scale(1) * (float(state.cov[site, site]) + state.epsilon)


def update_scale(state: AdaptiveState, alpha: float) -> AdaptiveState:
    """Stochastic-approximation step on log s_c after a move proposal.

    alpha is the Metropolis ratio min(1, e^{log alpha}) of the move,
    counted whether or not the move was accepted.
    """
    state.move_counter += 1
    gamma = state.move_counter ** (-state.gamma_exponent)
    lo, hi = state.log_sc_bounds
    state.log_sc = min(max(state.log_sc + gamma * (alpha - state.target_accept), lo), hi)
    return state


_SNAPSHOT_MAGIC = 0x4B46_4144  # "KFAD"


def save_snapshot(state: AdaptiveState, path: str | Path) -> None:
    """Binary checkpoint: header (magic, N_g, t) then mean, cov, log_sc.

    All fields little-endian 64-bit.
    """
    ng = state.n_grid
    with open(path, "wb") as fh:
        np.array([_SNAPSHOT_MAGIC, ng, state.t], dtype="<i8").tofile(fh)
        state.mean.astype("<f8").tofile(fh)
        state.cov.astype("<f8").tofile(fh)
        np.array([state.log_sc], dtype="<f8").tofile(fh)


def load_snapshot(path: str | Path, epsilon: float, **kwargs) -> AdaptiveState:
    with open(path, "rb") as fh:
        magic, ng, t = np.fromfile(fh, dtype="<i8", count=3)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not an adaptive-state snapshot")
        mean = np.fromfile(fh, dtype="<f8", count=ng)
        cov = np.fromfile(fh, dtype="<f8", count=ng * ng).reshape(ng, ng)
        log_sc = float(np.fromfile(fh, dtype="<f8", count=1)[0])
    return AdaptiveState(mean=mean, cov=cov, t=int(t), epsilon=epsilon, log_sc=log_sc, **kwargs)


def default_epsilon(a_range: float) -> float:
    """Ergodicity floor scaled to the prior value range."""
    return 1e-8 * a_range * a_range
