"""TOML experiment configs mapped onto :class:`ExperimentSpec`.

Example::

    master_seed = 0
    missing_levels = [0.1, 0.25, 0.5, 0.75, 0.9]
    trials_per_cell = 1
    output_dir = "results/synthetic"
    clip_negative = true

    [dataset]
    path = "data/beijing"            # directory of day_<i>.csv files
    # or a generator instead of a path:
    # [dataset.synthetic]
    # rows = 340
    # cols = 24
    # rank = 10
    # theta = 0.1
    # n_days = 7

    [days]
    targets = [0, 1, 2]              # default: every day
    neighbor_offset = 1              # default: next day, wrapping

    [solver]
    tol = 1e-6
    max_iter = 5000
    rho = 1.0

    [[methods]]
    name = "sresi"
    k = 10

    [[methods]]
    name = "srrsi_reg"
    k = 10
    alpha = 1.0
    beta = 1.0
"""

from __future__ import annotations

import sys
from dataclasses import fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .harness import DEFAULT_LEVELS, ExperimentSpec, MethodSpec
from .sdp import SolverOptions
from .synthetic import SyntheticGenerator

_SOLVER_KEYS = {f.name for f in fields(SolverOptions)}
_GEN_KEYS = {f.name for f in fields(SyntheticGenerator)}


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    extra = set(table) - allowed
    if extra:
        raise ValueError(f"unknown keys in {where}: {sorted(extra)}")


def spec_from_dict(cfg: dict, base_dir: Path | None = None) -> ExperimentSpec:
    _reject_unknown(
        cfg,
        {"master_seed", "missing_levels", "trials_per_cell", "output_dir", "clip_negative",
         "dataset", "days", "solver", "methods"},
        "top level",
    )
    base_dir = base_dir or Path.cwd()

    ds = cfg.get("dataset", {})
    _reject_unknown(ds, {"path", "synthetic"}, "[dataset]")
    dataset = synthetic = None
    n_days = 7
    if "path" in ds:
        p = Path(ds["path"])
        dataset = str(p if p.is_absolute() else base_dir / p)
    if "synthetic" in ds:
        gen = dict(ds["synthetic"])
        n_days = int(gen.pop("n_days", n_days))
        _reject_unknown(gen, _GEN_KEYS, "[dataset.synthetic]")
        synthetic = SyntheticGenerator(**gen)

    days = cfg.get("days", {})
    _reject_unknown(days, {"targets", "neighbor_offset", "neighbors"}, "[days]")
    neighbors = {int(k): int(v) for k, v in days.get("neighbors", {}).items()}

    solver = cfg.get("solver", {})
    _reject_unknown(solver, _SOLVER_KEYS, "[solver]")

    methods = []
    for entry in cfg.get("methods", []):
        entry = dict(entry)
        if "name" not in entry:
            raise ValueError("every [[methods]] entry needs a name")
        name = entry.pop("name")
        label = entry.pop("label", None)
        methods.append(MethodSpec(name=name, params=entry, label=label))

    out_dir = Path(cfg.get("output_dir", "results"))
    spec = ExperimentSpec(
        methods=methods,
        dataset=dataset,
        synthetic=synthetic,
        n_days=n_days,
        days=days.get("targets"),
        neighbor_offset=int(days.get("neighbor_offset", 1)),
        neighbors=neighbors,
        missing_levels=[float(x) for x in cfg.get("missing_levels", DEFAULT_LEVELS)],
        trials_per_cell=int(cfg.get("trials_per_cell", 1)),
        master_seed=int(cfg.get("master_seed", 0)),
        output_dir=str(out_dir if out_dir.is_absolute() else base_dir / out_dir),
        solver=SolverOptions(**solver),
        clip_negative=bool(cfg.get("clip_negative", True)),
    )
    return spec


def load_config(path) -> ExperimentSpec:
    path = Path(path)
    with path.open("rb") as fh:
        cfg = tomllib.load(fh)
    return spec_from_dict(cfg, base_dir=path.parent)
