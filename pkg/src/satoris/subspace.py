"""Subspace priors from a neighbour day and cross-day overlap measurement."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Literal, Sequence

import numpy as np

from .errors import DataError, DimensionError
from .matrix_core import SvdResult, as_matrix, format_value, truncated_svd


@dataclass(frozen=True)
class SubspacePrior:
    """Rank-``k`` SVD of a neighbour day with Gram priors ``A = U S U'``, ``B = V S V'``."""

    svd: SvdResult
    A: np.ndarray
    B: np.ndarray
    source_day: Hashable = None

    @property
    def k(self) -> int:
        return self.svd.k

    @property
    def U(self) -> np.ndarray:
        return self.svd.U

    @property
    def V(self) -> np.ndarray:
        return self.svd.V

    @property
    def sigma(self) -> np.ndarray:
        return self.svd.sigma


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def build_prior(neighbor, k: int, source_day: Hashable = None) -> SubspacePrior:
    """Gram priors from the rank-``k`` truncated SVD of a fully observed neighbour.

    A neighbour with gaps must be filled by the caller first; NaN is rejected.
    """
    neighbor = np.asarray(neighbor, dtype=float)
    if np.isnan(neighbor).any():
        raise DataError("neighbor day contains NaN; pre-impute it before building a prior")
    svd = truncated_svd(as_matrix(neighbor, "neighbor"), k)
    A = _sym((svd.U * svd.sigma) @ svd.U.T)
    B = _sym((svd.V * svd.sigma) @ svd.V.T)
    return SubspacePrior(svd=svd, A=A, B=B, source_day=source_day)


def _check_orthonormal(Q: np.ndarray, name: str, tol: float = 1e-8) -> None:
    G = Q.T @ Q
    if np.max(np.abs(G - np.eye(Q.shape[1]))) > tol:
        raise ValueError(f"{name} does not have orthonormal columns")


def subspace_overlap(U1, U2) -> tuple[float, float]:
    """Mean and population std of the cosines of the principal angles."""
    U1 = as_matrix(U1, "U1")
    U2 = as_matrix(U2, "U2")
    if U1.shape != U2.shape:
        raise DimensionError(f"shape mismatch: {U1.shape} vs {U2.shape}")
    _check_orthonormal(U1, "U1")
    _check_orthonormal(U2, "U2")
    s = np.linalg.svd(U1.T @ U2, compute_uv=False)
    s = np.clip(s, 0.0, 1.0)
    mean = float(s.mean())
    return mean, float(np.sqrt(np.mean((s - mean) ** 2)))


def stability_series(
    days: Sequence, k: int, side: Literal["left", "right"] = "left"
) -> list[tuple[float, float]]:
    """Overlap between each adjacent pair of days ``(t, t+1)``."""
    if len(days) < 2:
        raise ValueError("need at least two days")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    mats = [as_matrix(d, f"day {i}") for i, d in enumerate(days)]
    if len({m.shape for m in mats}) != 1:
        raise DimensionError("all days must share one shape")
    factors = []
    for m in mats:
        svd = truncated_svd(m, k)
        factors.append(svd.U if side == "left" else svd.V)
    return [subspace_overlap(a, b) for a, b in zip(factors, factors[1:])]


def write_stability_csv(path, series: Sequence[tuple[float, float]]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day_index", "mean", "std"])
        for i, (mean, std) in enumerate(series):
            w.writerow([i, format_value(mean), format_value(std)])
