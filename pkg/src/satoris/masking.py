"""MCAR mask simulation and held-out error metrics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, EvaluationError
from .matrix_core import as_matrix, check_same_shape, read_matrix_csv, write_matrix_csv


def mask_rng(seed) -> np.random.Generator:
    """Counter-based generator for a seed or a ``SeedSequence``.

    Passing ``np.random.SeedSequence(master, spawn_key=(day, level, trial))``
    gives an independent stream per grid cell regardless of execution order.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def generate_mask(rows: int, cols: int, missing_fraction: float, seed) -> np.ndarray:
    """Boolean mask (True = observed), each entry missing with probability ``missing_fraction``."""
    if not 0.0 <= missing_fraction < 1.0:
        raise ValueError(f"missing_fraction must be in [0, 1), got {missing_fraction}")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    return mask_rng(seed).random((rows, cols)) >= missing_fraction


def as_mask(mask, shape=None) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise DimensionError(f"mask must be 2-D, got shape {m.shape}")
    if m.dtype != bool:
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("mask entries must be 0 or 1")
        m = m.astype(bool)
    if shape is not None and m.shape != tuple(shape):
        raise DimensionError(f"mask shape {m.shape} != matrix shape {tuple(shape)}")
    return m


def apply_mask(D, mask) -> np.ndarray:
    """Observed projection: keep observed entries, zero the rest."""
    D = as_matrix(D, "D")
    m = as_mask(mask, D.shape)
    return np.where(m, D, 0.0)


def mask_digest(mask) -> str:
    m = np.ascontiguousarray(as_mask(mask), dtype=np.uint8)
    h = hashlib.sha256(repr(m.shape).encode())
    h.update(m.tobytes())
    return h.hexdigest()[:16]


def read_mask_csv(path) -> np.ndarray:
    return as_mask(read_matrix_csv(path))


def write_mask_csv(path, mask) -> None:
    write_matrix_csv(path, as_mask(mask).astype(int), integer=True)


@dataclass(frozen=True)
class ErrorReport:
    rrmse: float
    mae: float
    n_holdout: int


def evaluate(truth, imputed, mask, held_out_only: bool = True) -> ErrorReport:
    """RRMSE and MAE over the missing entries of ``mask``.

    RRMSE is ``||(1-M)*(truth-imputed)||_F / ||(1-M)*truth||_F``. With
    ``held_out_only=False`` every entry is scored instead.
    """
    truth = as_matrix(truth, "truth")
    imputed = as_matrix(imputed, "imputed")
    check_same_shape(truth, imputed)
    m = as_mask(mask, truth.shape)
    sel = ~m if held_out_only else np.ones_like(m)
    n = int(sel.sum())
    if n == 0:
        raise EvaluationError("mask has no missing entries to evaluate")
    diff = (truth - imputed)[sel]
    denom = np.linalg.norm(truth[sel])
    if denom == 0.0:
        raise EvaluationError("held-out truth is identically zero")
    return ErrorReport(
        rrmse=float(np.linalg.norm(diff) / denom),
        mae=float(np.mean(np.abs(diff))),
        n_holdout=n,
    )


def aggregate(reports: Sequence[ErrorReport]) -> dict[str, tuple[float, float]]:
    """Per-metric ``(mean, population std)`` across reports."""
    if len(reports) == 0:
        raise ValueError("cannot aggregate an empty list of reports")
    out = {}
    for metric in ("rrmse", "mae"):
        vals = np.array([getattr(r, metric) for r in reports], dtype=float)
        out[metric] = (float(vals.mean()), float(vals.std()))
    return out
