"""Benchmark grid: days x missingness levels x trials x methods.

Masks come from a counter-based generator keyed on the cell coordinates
``(day, level, trial)``: ``SeedSequence(master_seed, spawn_key=(day,
round(level * 1e6), trial))``. Every method in a cell sees the same mask,
and neither method order nor execution order affects any mask.

Records are appended to ``records.jsonl`` as cells finish, which makes an
interrupted run resumable. At the end the records are rewritten sorted by
cell as ``records.csv`` (deterministic fields only) with wall times in
``timings.csv``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import baselines
from .errors import DataError, DimensionError, SatorisError
from .formulations import VARIANTS, ExplicitMethod, complete_from, solve_explicit
from .masking import ErrorReport, aggregate, evaluate, generate_mask, mask_digest
from .matrix_core import format_value, read_matrix_csv
from .sdp import SolverOptions
from .subspace import build_prior
from .synthetic import SyntheticGenerator, generate_synthetic_days

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)
ALIASES = {"srisi": "nnmin-h"}


@dataclass(frozen=True)
class MethodSpec:
    """A method name (``sresi``, ``knn-h``, ...) plus hyperparameters."""

    name: str
    params: dict = field(default_factory=dict)
    label: Optional[str] = None

    @property
    def key(self) -> str:
        return self.label or self.name

    def canonical(self) -> str:
        return ALIASES.get(self.name.lower(), self.name.lower())


@dataclass
class ExperimentSpec:
    methods: list[MethodSpec]
    dataset: Optional[str] = None
    synthetic: Optional[SyntheticGenerator] = None
    n_days: int = 7
    days: Optional[list[int]] = None
    neighbor_offset: int = 1
    neighbors: dict[int, int] = field(default_factory=dict)
    missing_levels: list[float] = field(default_factory=lambda: list(DEFAULT_LEVELS))
    trials_per_cell: int = 1
    master_seed: int = 0
    output_dir: str = "results"
    solver: SolverOptions = field(default_factory=SolverOptions)
    clip_negative: bool = True

    def validate(self) -> None:
        if (self.dataset is None) == (self.synthetic is None):
            raise ValueError("exactly one of dataset / synthetic must be given")
        if not self.methods:
            raise ValueError("no methods configured")
        keys = [m.key for m in self.methods]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate method labels: {keys}")
        for lvl in self.missing_levels:
            if not 0.0 <= lvl < 1.0:
                raise ValueError(f"missing level {lvl} outside [0, 1)")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        for m in self.methods:
            _check_method(m)


def _check_method(m: MethodSpec) -> None:
    name = m.canonical()
    if name in VARIANTS:
        ExplicitMethod(name, **m.params)
        return
    base, _, suffix = name.partition("-")
    if suffix not in ("", "h", "v"):
        raise ValueError(f"unknown stacking suffix in {m.name!r}")
    if base not in baselines.REGISTRY:
        raise ValueError(f"unknown method {m.name!r}")


@dataclass(frozen=True)
class Record:
    day: int
    neighbor: int
    method: str
    level: float
    trial: int
    rrmse: float
    mae: float
    n_holdout: int
    status: str
    mask_hash: str
    wall_time_seconds: float = 0.0

    @property
    def cell(self):
        return (self.day, self.level, self.trial, self.method)


DETERMINISTIC_FIELDS = [f.name for f in fields(Record) if f.name != "wall_time_seconds"]


@dataclass
class ExperimentResult:
    records: list[Record]

    def aggregate(self) -> dict[tuple[str, float], dict]:
        """``(method, level) -> {"rrmse": (mean, std), "mae": (mean, std), "n": count}``."""
        groups: dict[tuple[str, float], list[ErrorReport]] = {}
        for r in self.records:
            if math.isnan(r.rrmse):
                continue
            groups.setdefault((r.method, r.level), []).append(ErrorReport(r.rrmse, r.mae, r.n_holdout))
        out = {}
        for key in sorted(groups, key=lambda k: (k[1], k[0])):
            stats = aggregate(groups[key])
            stats["n"] = len(groups[key])
            out[key] = stats
        return out


# -- data -------------------------------------------------------------------

_DAY_FILE = re.compile(r"^day_(\d+)\.csv$")


def load_dataset(directory) -> list[np.ndarray]:
    """Read ``day_<index>.csv`` files sorted by integer index."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    found = []
    for p in directory.iterdir():
        m = _DAY_FILE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    if not found:
        raise DataError(f"no day_<index>.csv files in {directory}")
    found.sort()
    days = [read_matrix_csv(p) for _, p in found]
    shapes = {d.shape for d in days}
    if len(shapes) != 1:
        raise DimensionError(f"days have different shapes: {sorted(shapes)}")
    return days


def write_dataset(directory, days: Sequence[np.ndarray]) -> list[Path]:
    from .matrix_core import write_matrix_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, d in enumerate(days):
        p = directory / f"day_{i}.csv"
        write_matrix_csv(p, d)
        paths.append(p)
    return paths


def spec_days(spec: ExperimentSpec) -> list[np.ndarray]:
    if spec.dataset is not None:
        return load_dataset(spec.dataset)
    return generate_synthetic_days(spec.synthetic, spec.n_days)


def neighbor_of(spec: ExperimentSpec, day: int, n_days: int) -> int:
    nb = spec.neighbors.get(day, (day + spec.neighbor_offset) % n_days)
    if not 0 <= nb < n_days or nb == day:
        raise ValueError(f"day {day} has no valid neighbour (got {nb})")
    return nb


def cell_seed(master_seed: int, day: int, level: float, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(day, int(round(level * 1e6)), trial))


# -- execution ----------------------------------------------------------------


def run_method(method: MethodSpec, Y, mask, neighbor, solver: SolverOptions, clip_negative: bool):
    """Complete one masked day; returns ``(values, status)``."""
    name = method.canonical()
    if name in VARIANTS:
        em = ExplicitMethod(name, **method.params)
        prior = build_prior(neighbor, min(em.k, *neighbor.shape))
        if prior.k != em.k:
            em = ExplicitMethod(name, **{**method.params, "k": prior.k})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = solve_explicit(Y, mask, prior, em, solver, clip_negative)
        status = res.solution.status
        if res.variant_used != em.variant:
            status = f"infeasible->{res.variant_used}:{status}"
        return res.values, status

    base, _, suffix = name.partition("-")
    params = dict(method.params)
    if base == "nnmin":
        params.setdefault("options", solver)
    imputer = baselines.make_imputer(base, **params)
    if suffix:
        values = baselines.impute_stacked(imputer, Y, mask, neighbor, suffix.upper())
    else:
        values = baselines.impute(imputer, Y, mask)
    status = "ok"
    sol = getattr(imputer, "last_solution", None)
    if sol is not None:
        status = sol.status
    return complete_from(Y, mask, values, clip_negative), status


def run_cell(spec: ExperimentSpec, day: int, neighbor: int, level: float, trial: int,
             truth: np.ndarray, neighbor_data: np.ndarray, todo: Sequence[str]) -> list[Record]:
    mask = generate_mask(*truth.shape, level, cell_seed(spec.master_seed, day, level, trial))
    digest = mask_digest(mask)
    Y = np.where(mask, truth, 0.0)
    records = []
    for method in spec.methods:
        if method.key not in todo:
            continue
        t0 = time.perf_counter()
        try:
            values, status = run_method(method, Y, mask, neighbor_data, spec.solver, spec.clip_negative)
            rep = evaluate(truth, values, mask)
            rrmse, mae, n = rep.rrmse, rep.mae, rep.n_holdout
        except (SatorisError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("day %d level %g trial %d %s failed: %s", day, level, trial, method.key, exc)
            status = f"failed:{type(exc).__name__}"
            rrmse = mae = float("nan")
            n = int((~mask).sum())
        records.append(Record(
            day=day, neighbor=neighbor, method=method.key, level=float(level), trial=trial,
            rrmse=float(rrmse), mae=float(mae), n_holdout=n, status=status, mask_hash=digest,
            wall_time_seconds=time.perf_counter() - t0,
        ))
    return records


def _run_cell_star(args):
    return run_cell(*args)


def _read_journal(path: Path) -> list[Record]:
    if not path.exists():
        return []
    out = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                out.append(Record(**json.loads(line)))
            except (json.JSONDecodeError, TypeError):
                log.warning("skipping truncated journal line in %s", path)
    return out


def run(spec: ExperimentSpec, jobs: int = 1, resume: bool = True) -> ExperimentResult:
    """Execute the grid, persisting records as cells finish."""
    spec.validate()
    days = spec_days(spec)
    targets = spec.days if spec.days is not None else list(range(len(days)))
    for d in targets:
        if not 0 <= d < len(days):
            raise ValueError(f"target day {d} out of range (dataset has {len(days)} days)")

    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    journal = out / "records.jsonl"
    done: dict[tuple, Record] = {}
    if resume:
        for r in _read_journal(journal):
            done[r.cell] = r
    elif journal.exists():
        journal.unlink()

    tasks = []
    for day in targets:
        nb = neighbor_of(spec, day, len(days))
        for level in spec.missing_levels:
            for trial in range(spec.trials_per_cell):
                todo = [m.key for m in spec.methods if (day, float(level), trial, m.key) not in done]
                if todo:
                    tasks.append((spec, day, nb, level, trial, days[day], days[nb], todo))
    log.info("%d cells to run (%d records already done)", len(tasks), len(done))

    with journal.open("a") as fh:
        if journal.stat().st_size and not journal.read_bytes().endswith(b"\n"):
            fh.write("\n")  # seal a line truncated by an earlier crash

        def persist(records):
            for r in records:
                done[r.cell] = r
                fh.write(json.dumps(asdict(r)) + "\n")
            fh.flush()

        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for records in pool.map(_run_cell_star, tasks):
                    persist(records)
        else:
            for t in tasks:
                persist(run_cell(*t))

    method_order = {m.key: i for i, m in enumerate(spec.methods)}
    wanted = {(d, float(l), t, m.key) for d in targets for l in spec.missing_levels
              for t in range(spec.trials_per_cell) for m in spec.methods}
    records = sorted((done[c] for c in wanted),
                     key=lambda r: (r.day, r.level, r.trial, method_order[r.method]))
    result = ExperimentResult(records)
    write_records(out / "records.csv", result)
    write_timings(out / "timings.csv", result)
    return result


# -- persistence and summaries ---------------------------------------------


def _fmt(v):
    return format_value(v) if isinstance(v, float) else str(v)


def write_records(path, result: ExperimentResult) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETERMINISTIC_FIELDS)
        for r in result.records:
            w.writerow([_fmt(getattr(r, f)) for f in DETERMINISTIC_FIELDS])


def write_timings(path, result: ExperimentResult) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "method", "level", "trial", "wall_time_seconds"])
        for r in result.records:
            w.writerow([r.day, r.method, _fmt(r.level), r.trial, f"{r.wall_time_seconds:.6f}"])


def load_records(path) -> ExperimentResult:
    """Read ``records.csv`` (and ``timings.csv`` beside it when present)."""
    path = Path(path)
    if path.is_dir():
        path = path / "records.csv"
    if not path.exists():
        raise DataError(f"{path} not found")
    types = {f.name: f.type for f in fields(Record)}
    conv = {"int": int, "float": float, "str": str}
    records = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(Record(**{k: conv[types[k]](v) for k, v in row.items()}))
    timing_path = path.with_name("timings.csv")
    if timing_path.exists():
        times = {}
        with timing_path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                times[(int(row["day"]), float(row["level"]), int(row["trial"]), row["method"])] = float(row["wall_time_seconds"])
        records = [Record(**{**asdict(r), "wall_time_seconds": times.get(r.cell, 0.0)}) for r in records]
    return ExperimentResult(records)


def ranking_table(agg: dict) -> str:
    lines = []
    for level in sorted({lvl for _, lvl in agg}):
        rows = sorted(((v["rrmse"][0], m, v) for (m, lvl), v in agg.items() if lvl == level))
        lines.append(f"missing {level:.0%}")
        for rank, (_, method, v) in enumerate(rows, 1):
            lines.append(
                f"  {rank:>2}. {method:<16} rrmse {v['rrmse'][0]:.4f} +/- {v['rrmse'][1]:.4f}"
                f"   mae {v['mae'][0]:.4f} +/- {v['mae'][1]:.4f}"
            )
    return "\n".join(lines) + "\n"


def summarize(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write ``aggregate.csv``, ``ranking.txt`` and long-format ``plot_data.csv``."""
    if not result.records:
        raise DataError("result has no records")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agg = result.aggregate()
    paths = {"aggregate": out / "aggregate.csv", "ranking": out / "ranking.txt", "plot": out / "plot_data.csv"}
    with paths["aggregate"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "level", "rrmse_mean", "rrmse_std", "mae_mean", "mae_std", "n"])
        for (method, level), v in agg.items():
            w.writerow([method, _fmt(level), *map(_fmt, (*v["rrmse"], *v["mae"])), v["n"]])
    paths["ranking"].write_text(ranking_table(agg))
    with paths["plot"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "level", "day", "trial", "metric", "value"])
        for r in result.records:
            for metric in ("rrmse", "mae"):
                w.writerow([r.method, _fmt(r.level), r.day, r.trial, metric, _fmt(getattr(r, metric))])
    return paths


def read_aggregate(path) -> dict[tuple[str, float], dict]:
    out = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out[(row["method"], float(row["level"]))] = {
                "rrmse": (float(row["rrmse_mean"]), float(row["rrmse_std"])),
                "mae": (float(row["mae_mean"]), float(row["mae_std"])),
                "n": int(row["n"]),
            }
    return out
