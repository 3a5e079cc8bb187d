"""CSV persistence for traces, summaries, and convergence reports.

All files carry headers, UTF-8, decimal-point reals formatted with repr
(shortest round-trip), so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .diagnostics import ConvergenceReport, HarnessSummary, PosteriorSummary, RunTrace


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(out_dir: str | Path, trace: RunTrace) -> None:
    """Write trace_ll.csv, trace_n.csv, trace_grid.csv plus sidecars."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace_ll.csv", "w") as fh:
        fh.write("step,loglik\n")
        for s, ll in zip(trace.steps, trace.log_liks):
            fh.write(f"{s},{_fmt(ll)}\n")
    with open(out / "trace_n.csv", "w") as fh:
        fh.write("step,n\n")
        for s, n in zip(trace.steps, trace.n_values):
            fh.write(f"{s},{int(n)}\n")
    ng = trace.grid_curves.shape[1]
    with open(out / "trace_grid.csv", "w") as fh:
        fh.write("step," + ",".join(f"f_{j + 1}" for j in range(ng)) + "\n")
        for s, row in zip(trace.steps, trace.grid_curves):
            fh.write(f"{s}," + ",".join(_fmt(v) for v in row) + "\n")
    with open(out / "grid.csv", "w") as fh:
        fh.write("z_index,z\n")
        for j, z in enumerate(trace.grid_coords):
            fh.write(f"{j},{_fmt(z)}\n")
    with open(out / "meta.csv", "w") as fh:
        fh.write("n_steps,thin_stride\n")
        fh.write(f"{trace.n_steps},{trace.thin_stride}\n")
    with open(out / "acceptance.csv", "w") as fh:
        fh.write("kind,attempts,accepts\n")
        for kind in sorted(trace.attempts):
            fh.write(f"{kind},{trace.attempts[kind]},{trace.accepts.get(kind, 0)}\n")
    if trace.variance_track is not None:
        with open(out / "variance_track.csv", "w") as fh:
            fh.write("step,z_index,recorded_variance\n")
            for step, zi, var in trace.variance_track:
                fh.write(f"{int(step)},{int(zi)},{_fmt(var)}\n")


def read_trace(out_dir: str | Path) -> RunTrace:
    out = Path(out_dir)
    ll = np.genfromtxt(out / "trace_ll.csv", delimiter=",", names=True)
    nn = np.genfromtxt(out / "trace_n.csv", delimiter=",", names=True)
    grid_rows = np.loadtxt(out / "trace_grid.csv", delimiter=",", skiprows=1, ndmin=2)
    coords = np.loadtxt(out / "grid.csv", delimiter=",", skiprows=1, ndmin=2)[:, 1]
    n_steps, thin = np.loadtxt(out / "meta.csv", delimiter=",", skiprows=1, dtype=np.int64)
    attempts: dict[str, int] = {}
    accepts: dict[str, int] = {}
    acc_path = out / "acceptance.csv"
    if acc_path.exists():
        with open(acc_path) as fh:
            next(fh)
            for line in fh:
                kind, att, acc = line.strip().split(",")
                attempts[kind] = int(att)
                accepts[kind] = int(acc)
    return RunTrace(
        steps=np.atleast_1d(ll["step"]).astype(np.int64),
        grid_curves=grid_rows[:, 1:],
        n_values=np.atleast_1d(nn["n"]).astype(np.int64),
        log_liks=np.atleast_1d(ll["loglik"]),
        grid_coords=coords,
        n_steps=int(n_steps),
        thin_stride=int(thin),
        attempts=attempts,
        accepts=accepts,
    )


def write_summary(out_dir: str | Path, summary: PosteriorSummary) -> None:
    """summary_mean.csv, density.csv (nonzero cells only), n_hist.csv, posterior_var.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary_mean.csv", "w") as fh:
        fh.write("z,mean\n")
        for z, m in zip(summary.grid_coords, summary.mean_curve):
            fh.write(f"{_fmt(z)},{_fmt(m)}\n")
    with open(out / "density.csv", "w") as fh:
        fh.write("z_index,bin_index,count\n")
        nz = np.argwhere(summary.density > 0)
        for zi, bi in nz:
            fh.write(f"{zi},{bi},{summary.density[zi, bi]}\n")
    with open(out / "density_bins.csv", "w") as fh:
        fh.write("bin_index,lower,upper\n")
        for b in range(summary.bin_edges.size - 1):
            fh.write(f"{b},{_fmt(summary.bin_edges[b])},{_fmt(summary.bin_edges[b + 1])}\n")
    with open(out / "n_hist.csv", "w") as fh:
        fh.write("n,count\n")
        for n, c in enumerate(summary.n_histogram):
            if c:
                fh.write(f"{n},{c}\n")
    with open(out / "posterior_var.csv", "w") as fh:
        fh.write("z_index,variance\n")
        for zi, v in enumerate(summary.curve_variance):
            fh.write(f"{zi},{_fmt(v)}\n")


def write_convergence(path: str | Path, report: ConvergenceReport) -> None:
    with open(path, "w") as fh:
        fh.write("monitor_step,rc1,rc2\n")
        for t, r1, r2 in zip(report.monitor_steps, report.rc1, report.rc2):
            fh.write(f"{int(t)},{_fmt(r1)},{_fmt(r2)}\n")


def write_pairs(
    path: str | Path,
    reports: dict[tuple[int, int], ConvergenceReport],
    summary: HarnessSummary,
) -> None:
    """Per-pair convergence lengths plus a trailing summary file."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("run_a,run_b,converged,convergence_length\n")
        for (i, j), rep in sorted(reports.items()):
            length = rep.convergence_length if rep.converged else ""
            fh.write(f"{i},{j},{int(rep.converged)},{length}\n")
    with open(path.with_name("pairs_summary.csv"), "w") as fh:
        fh.write("n_pairs,n_converged,mean_length,median_length\n")
        mean_s = _fmt(summary.mean_length) if summary.mean_length is not None else ""
        med_s = _fmt(summary.median_length) if summary.median_length is not None else ""
        fh.write(f"{summary.n_pairs},{summary.n_converged},{mean_s},{med_s}\n")


def write_acf(path: str | Path, values: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("lag,acf\n")
        for lag, v in enumerate(values):
            fh.write(f"{lag},{_fmt(v)}\n")
