"""Convergence statistics, autocorrelation, and posterior summaries.

Two independent runs of the same sampler are compared through per-site
means and standard deviations of the sampled curves; agreement of both
statistics below a threshold declares convergence. The pair harness
applies this to every unordered pair of K replicate runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rjmcmc import ProposalKind

RC_THRESHOLD = 0.2


@dataclass
class RunTrace:
    """Thinned sampling history of one run.

    All sequences are recorded at the same stride; ``steps`` holds the raw
    1-based step indices of the records.
    """

    steps: np.ndarray
    grid_curves: np.ndarray
    n_values: np.ndarray
    log_liks: np.ndarray
    grid_coords: np.ndarray
    n_steps: int
    thin_stride: int
    attempts: dict[str, int] = field(default_factory=dict)
    accepts: dict[str, int] = field(default_factory=dict)
    # counter state captured at settings.counter_snapshot_at, for windowed rates
    snapshot_attempts: dict[str, int] = field(default_factory=dict)
    snapshot_accepts: dict[str, int] = field(default_factory=dict)
    adapt_drift: Optional[np.ndarray] = None  # (step, inf-norm of cov change)
    scale_trace: Optional[np.ndarray] = None  # (move index, log s_c delta)
    variance_track: Optional[np.ndarray] = None  # (step, z_index, recorded var)
    final_cov_diag: Optional[np.ndarray] = None  # adaptive history variance at the end

    def __post_init__(self):
        s = self.steps.size
        if not (self.grid_curves.shape[0] == self.n_values.size == self.log_liks.size == s):
            raise ValueError("trace sequences must share one length")

    @property
    def n_records(self) -> int:
        return self.steps.size


def rc_stats(
    mu1: np.ndarray, sd1: np.ndarray, mu2: np.ndarray, sd2: np.ndarray
) -> tuple[float, float]:
    """Between-run agreement of per-site means (rc1) and sds (rc2).

    A site with zero pooled sd contributes 0 when the means agree too and
    +inf otherwise (that run pair is simply reported non-converged).
    """
    denom = 0.5 * (sd1 + sd2)
    num1 = np.abs(mu1 - mu2)
    num2 = np.abs(sd1 - sd2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(denom > 0, num1 / denom, np.where(num1 == 0, 0.0, np.inf))
        t2 = np.where(denom > 0, num2 / denom, 0.0)
    return float(np.mean(t1)), float(np.mean(t2))


def window_stats(trace: RunTrace, up_to_step: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean/sd per grid site over the second half of samples up to a step."""
    mask = (trace.steps > up_to_step / 2) & (trace.steps <= up_to_step)
    window = trace.grid_curves[mask]
    if window.shape[0] == 0:
        raise ValueError(f"no samples recorded in window (0.5*{up_to_step}, {up_to_step}]")
    return window.mean(axis=0), window.std(axis=0)


@dataclass
class ConvergenceReport:
    monitor_steps: np.ndarray
    rc1: np.ndarray
    rc2: np.ndarray
    convergence_length: Optional[int]

    @property
    def converged(self) -> bool:
        return self.convergence_length is not None


def convergence_length(
    trace1: RunTrace,
    trace2: RunTrace,
    monitor_stride: int,
    threshold: float = RC_THRESHOLD,
) -> ConvergenceReport:
    """Monitor rc stats on a stride; first step with both below threshold."""
    horizon = min(trace1.n_steps, trace2.n_steps)
    monitor_steps = np.arange(monitor_stride, horizon + 1, monitor_stride)
    rc1s, rc2s = [], []
    length = None
    for t in monitor_steps:
        mu1, sd1 = window_stats(trace1, int(t))
        mu2, sd2 = window_stats(trace2, int(t))
        r1, r2 = rc_stats(mu1, sd1, mu2, sd2)
        rc1s.append(r1)
        rc2s.append(r2)
        if length is None and r1 < threshold and r2 < threshold:
            length = int(t)
    return ConvergenceReport(monitor_steps, np.array(rc1s), np.array(rc2s), length)


@dataclass
class HarnessSummary:
    n_pairs: int
    n_converged: int
    mean_length: Optional[float]
    median_length: Optional[float]


def pair_harness(
    traces: list[RunTrace],
    monitor_stride: int,
    threshold: float = RC_THRESHOLD,
) -> tuple[dict[tuple[int, int], ConvergenceReport], HarnessSummary]:
    """Convergence reports for all K(K-1)/2 unordered run pairs."""
    if len(traces) < 2:
        raise ValueError("pair harness needs at least 2 runs")
    reports: dict[tuple[int, int], ConvergenceReport] = {}
    for i in range(len(traces)):
        for j in range(i + 1, len(traces)):
            reports[(i, j)] = convergence_length(traces[i], traces[j], monitor_stride, threshold)
    lengths = [r.convergence_length for r in reports.values() if r.converged]
    summary = HarnessSummary(
        n_pairs=len(reports),
        n_converged=len(lengths),
        mean_length=float(np.mean(lengths)) if lengths else None,
        median_length=float(np.median(lengths)) if lengths else None,
    )
    return reports, summary


def acf(trace: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized autocovariance at lags 0..max_lag."""
    x = np.asarray(trace, dtype=float)
    if x.size <= max_lag:
        raise ValueError("trace must be longer than max_lag")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise ValueError("autocorrelation of a constant trace is undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for lag in range(1, max_lag + 1):
        out[lag] = float(xc[:-lag] @ xc[lag:]) / denom
    return out


@dataclass
class PosteriorSummary:
    mean_curve: np.ndarray
    density: np.ndarray  # (N_g, value_bins) counts
    bin_edges: np.ndarray
    n_histogram: np.ndarray  # counts indexed by n
    n_retained: int
    grid_coords: np.ndarray
    curve_variance: np.ndarray  # per-site population variance


def posterior_summary(
    trace: RunTrace,
    value_range: tuple[float, float],
    burn_in_fraction: float = 0.5,
    value_bins: int = 200,
) -> PosteriorSummary:
    """Mean curve, per-site value histogram, and knot-count histogram.

    Retains samples after the burn-in fraction of raw steps; the default
    half-chain matches the convergence-window convention.
    """
    cut = burn_in_fraction * trace.n_steps
    mask = trace.steps > cut
    curves = trace.grid_curves[mask]
    if curves.shape[0] == 0:
        raise ValueError("no samples retained after burn-in")
    lo, hi = value_range
    edges = np.linspace(lo, hi, value_bins + 1)
    ng = curves.shape[1]
    density = np.zeros((ng, value_bins), dtype=np.int64)
    for col in range(ng):
        density[col], _ = np.histogram(curves[:, col], bins=edges)
    ns = trace.n_values[mask].astype(int)
    return PosteriorSummary(
        mean_curve=curves.mean(axis=0),
        density=density,
        bin_edges=edges,
        n_histogram=np.bincount(ns),
        n_retained=int(curves.shape[0]),
        grid_coords=trace.grid_coords,
        curve_variance=curves.var(axis=0),
    )
