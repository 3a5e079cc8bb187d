"""Batch command line: run experiments, generate data, diagnose, summarize.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, build_dataset, load_generator_config, load_run_config
from .diagnostics import acf, convergence_length, posterior_summary
from .experiment import run_experiment
from .inference import write_dataset_csv
from .traceio import read_trace, write_acf, write_convergence, write_summary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knotfit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment from a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_run.add_argument("--replicas", type=int, default=None, help="override the replica count")
    p_run.add_argument("--out", type=Path, default=None, help="override the output directory")
    p_run.add_argument("--threads", type=int, default=1, help="parallel replica workers")

    p_gen = sub.add_parser("generate", help="write a dataset CSV from a generator spec")
    p_gen.add_argument("generator", type=Path)
    p_gen.add_argument("output", type=Path)
    p_gen.add_argument("--seed", type=int, default=None, help="override the generator seed")

    p_diag = sub.add_parser("diagnose", help="pairwise convergence report for two trace dirs")
    p_diag.add_argument("trace_a", type=Path)
    p_diag.add_argument("trace_b", type=Path)
    p_diag.add_argument("--monitor-stride", type=int, default=10_000)
    p_diag.add_argument("--out", type=Path, default=None, help="write convergence.csv here")

    p_sum = sub.add_parser("summarize", help="posterior summaries for one trace dir")
    p_sum.add_argument("trace_dir", type=Path)
    p_sum.add_argument("--out", type=Path, default=None, help="output dir (default: trace dir)")
    p_sum.add_argument("--value-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p_sum.add_argument("--bins", type=int, default=200)
    p_sum.add_argument("--burn-in", type=float, default=0.5)
    p_sum.add_argument("--max-lag", type=int, default=100)
    return parser


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    from dataclasses import replace

    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.replicas is not None:
        cfg = replace(cfg, replicas=args.replicas)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    out = run_experiment(cfg, threads=args.threads)
    print(f"experiment complete: {out}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    gen, beam = load_generator_config(args.generator)
    if args.seed is not None:
        from dataclasses import replace

        gen = replace(gen, seed=args.seed)
    data = build_dataset(gen, beam=beam)
    write_dataset_csv(args.output, data)
    print(f"wrote {data.k} observations to {args.output}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    trace_a = read_trace(args.trace_a)
    trace_b = read_trace(args.trace_b)
    report = convergence_length(trace_a, trace_b, args.monitor_stride)
    for t, r1, r2 in zip(report.monitor_steps, report.rc1, report.rc2):
        print(f"step {t}: rc1={r1:.4f} rc2={r2:.4f}")
    if report.converged:
        print(f"converged at step {report.convergence_length}")
    else:
        print("did not converge within the recorded steps")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_convergence(args.out / "convergence.csv", report)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    trace = read_trace(args.trace_dir)
    if args.value_range is not None:
        vrange = tuple(args.value_range)
    else:
        vrange = (float(trace.grid_curves.min()), float(trace.grid_curves.max()))
    summary = posterior_summary(
        trace, value_range=vrange, burn_in_fraction=args.burn_in, value_bins=args.bins
    )
    out = args.out if args.out is not None else args.trace_dir
    write_summary(out, summary)
    first_site = trace.grid_curves[:, 0]
    max_lag = min(args.max_lag, first_site.size - 1)
    if max_lag >= 1 and np.ptp(first_site) > 0:
        write_acf(Path(out) / "acf.csv", acf(first_site, max_lag))
    print(f"summaries written to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "generate": _cmd_generate,
        "diagnose": _cmd_diagnose,
        "summarize": _cmd_summarize,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
