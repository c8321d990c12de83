"""Command line entry point: ``satoris {impute,bench,stability,synth,summarize}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .errors import DataError, SolverError
from .formulations import VARIANTS, ExplicitMethod, solve_explicit
from .harness import (
    ALIASES,
    MethodSpec,
    load_dataset,
    load_records,
    run,
    summarize,
    write_dataset,
)
from .masking import read_mask_csv
from .matrix_core import read_matrix_csv, write_matrix_csv
from .sdp import SolverOptions
from .subspace import build_prior, stability_series, write_stability_csv
from .synthetic import SyntheticGenerator, generate_synthetic_days

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _solver_args(p):
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)


def _solver_options(args, base: SolverOptions | None = None) -> SolverOptions:
    base = base or SolverOptions()
    changes = {k: v for k, v in (("tol", args.tol), ("max_iter", args.max_iter), ("rho", args.rho)) if v is not None}
    return dataclasses.replace(base, **changes)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="satoris", description="Subspace-informed matrix completion toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("impute", help="complete one matrix")
    p.add_argument("input", help="CSV matrix; empty/nan cells are missing unless --mask is given")
    p.add_argument("--mask", help="CSV of 0/1 (1 = observed)")
    p.add_argument("--method", default="sresi",
                   help="explicit variant (hresi, sresi, srrsi_delta, srrsi_reg, srwsi), "
                        "a base imputer (mean, knn, softimpute, itersvd, nnmin) or base-h / base-v")
    p.add_argument("--neighbor", help="fully observed neighbour CSV (explicit and stacked methods)")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--delta1", type=float)
    p.add_argument("--delta2", type=float)
    p.add_argument("--clip-negative", action="store_true")
    p.add_argument("--out", required=True)
    _solver_args(p)

    p = sub.add_parser("bench", help="run an experiment grid from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--out", help="override output_dir")
    p.add_argument("--method", action="append", help="restrict to these method labels (repeatable)")
    p.add_argument("--level", action="append", type=float, help="override missing levels (repeatable)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fresh", action="store_true", help="ignore records from an earlier run")
    p.add_argument("--no-summary", action="store_true")

    p = sub.add_parser("stability", help="adjacent-day subspace overlap series")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="directory of day_<i>.csv files")
    src.add_argument("--config", help="TOML config whose [dataset] is used")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset of day_<i>.csv files")
    p.add_argument("--config", help="TOML config with [dataset.synthetic]")
    p.add_argument("--rows", type=int, default=340)
    p.add_argument("--cols", type=int, default=24)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--independent", action="store_true", help="fresh subspaces every day")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("summarize", help="aggregate tables and plot data from bench records")
    p.add_argument("results", help="directory holding records.csv (or the file itself)")
    p.add_argument("--out", help="output directory (default: alongside the records)")
    return parser


def cmd_impute(args) -> int:
    if args.mask:
        Y = read_matrix_csv(args.input)
        mask = read_mask_csv(args.mask)
    else:
        raw = read_matrix_csv(args.input, allow_missing=True)
        mask = ~np.isnan(raw)
        Y = np.where(mask, raw, 0.0)
    if mask.shape != Y.shape:
        raise DataError(f"mask shape {mask.shape} != input shape {Y.shape}")
    neighbor = read_matrix_csv(args.neighbor) if args.neighbor else None
    options = _solver_options(args)
    name = ALIASES.get(args.method.lower(), args.method.lower())

    if name in VARIANTS:
        if neighbor is None:
            raise UsageError(f"--neighbor is required for {name}")
        params = {k: getattr(args, k) for k in ("alpha", "beta", "delta1", "delta2") if getattr(args, k) is not None}
        try:
            method = ExplicitMethod(name, k=args.k, **params)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        res = solve_explicit(Y, mask, build_prior(neighbor, args.k), method, options, args.clip_negative)
        for w in res.warnings:
            logging.getLogger("satoris").warning(w)
        logging.getLogger("satoris").info("solver: %s", res.solution.diagnostics())
        values = res.values
    else:
        base, _, suffix = name.partition("-")
        if base not in baselines.REGISTRY or suffix not in ("", "h", "v"):
            raise UsageError(f"unknown method {args.method!r}")
        kwargs = {"options": options} if base == "nnmin" else {}
        imputer = baselines.make_imputer(base, **kwargs)
        if suffix:
            if neighbor is None:
                raise UsageError(f"--neighbor is required for {name}")
            values = baselines.impute_stacked(imputer, Y, mask, neighbor, suffix.upper())
        else:
            values = baselines.impute(imputer, Y, mask)
        if args.clip_negative:
            values = np.where(mask, values, np.maximum(values, 0.0))
    write_matrix_csv(args.out, values)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .config import load_config

    spec = load_config(args.config)
    if args.seed is not None:
        spec.master_seed = args.seed
    if args.out:
        spec.output_dir = args.out
    if args.level:
        spec.missing_levels = args.level
    if args.method:
        known = {m.key for m in spec.methods}
        chosen = [m for m in spec.methods if m.key in args.method]
        for name in args.method:
            if name not in known:
                chosen.append(MethodSpec(name))
        spec.methods = chosen
    result = run(spec, jobs=args.jobs, resume=not args.fresh)
    if not args.no_summary:
        paths = summarize(result, spec.output_dir)
        sys.stdout.write(paths["ranking"].read_text())
    return EXIT_OK


def cmd_stability(args) -> int:
    if args.data:
        days = load_dataset(args.data)
    else:
        from .config import load_config
        from .harness import spec_days

        days = spec_days(load_config(args.config))
    series = stability_series(days, min(args.k, *days[0].shape), args.side)
    write_stability_csv(args.out, series)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.config:
        from .config import load_config

        spec = load_config(args.config)
        if spec.synthetic is None:
            raise UsageError("config has no [dataset.synthetic] table")
        gen, n_days = spec.synthetic, spec.n_days
    else:
        gen = SyntheticGenerator(
            rows=args.rows, cols=args.cols, rank=args.rank, shared=not args.independent,
            theta=args.theta, noise=args.noise, seed=args.seed,
        )
        n_days = args.days
    write_dataset(args.out, generate_synthetic_days(gen, n_days))
    return EXIT_OK


def cmd_summarize(args) -> int:
    result = load_records(args.results)
    src = Path(args.results)
    out = Path(args.out) if args.out else (src if src.is_dir() else src.parent)
    paths = summarize(result, out)
    sys.stdout.write(paths["ranking"].read_text())
    return EXIT_OK


COMMANDS = {
    "impute": cmd_impute,
    "bench": cmd_bench,
    "stability": cmd_stability,
    "synth": cmd_synth,
    "summarize": cmd_summarize,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"satoris: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"satoris: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, OSError) as exc:
        print(f"satoris: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # DimensionError is a DataError; plain ValueError is a bad argument/config value
        print(f"satoris: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
