"""Dense matrix helpers: validation, norms, SVD and CSV I/O.

Matrices are plain 2-D ``float64`` numpy arrays. The functions here validate
their inputs and never modify them in place.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError

ORTHO_TOL = 1e-10
RANK_RTOL = 1e-12


def as_matrix(X, name: str = "matrix") -> np.ndarray:
    """Return ``X`` as a finite 2-D float array (copying only when needed)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DimensionError(f"shape mismatch: {sorted(shapes)}")


def hadamard(X, Z) -> np.ndarray:
    X = as_matrix(X, "X")
    Z = as_matrix(Z, "Z")
    check_same_shape(X, Z)
    return X * Z


def frobenius_norm(X) -> float:
    return float(np.linalg.norm(as_matrix(X), "fro"))


def nuclear_norm_svd(X) -> float:
    """Sum of singular values from a full dense SVD."""
    X = as_matrix(X)
    try:
        s = np.linalg.svd(X, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - finite input
        raise ArithmeticError("SVD did not converge") from exc
    return float(s.sum())


def numerical_rank(X) -> int:
    s = np.linalg.svd(as_matrix(X), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


@dataclass(frozen=True)
class SvdResult:
    """Rank-``k`` factors with ``X ~= U @ diag(sigma) @ V.T``."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def truncated_svd(X, k: int) -> SvdResult:
    """Best rank-``k`` approximation factors (Eckart-Young), sign aligned."""
    X = as_matrix(X)
    kmax = min(X.shape)
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= kmax:
        raise ValueError(f"rank k must be an integer in [1, {kmax}], got {k!r}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return sign_align(SvdResult(U[:, :k].copy(), s[:k].copy(), Vt[:k].T.copy()))


def sign_align(svd: SvdResult) -> SvdResult:
    """Flip factor pairs so each ``U`` column's largest-magnitude entry is positive.

    Ties in magnitude resolve to the first index (``argmax`` order).
    """
    idx = np.argmax(np.abs(svd.U), axis=0)
    signs = np.sign(svd.U[idx, np.arange(svd.k)])
    signs[signs == 0] = 1.0
    return SvdResult(svd.U * signs, svd.sigma.copy(), svd.V * signs)


def _cell(v: str) -> float:
    v = v.strip()
    return float("nan") if v == "" else float(v)


def read_matrix_csv(path, allow_missing: bool = False) -> np.ndarray:
    """Read a header-less comma-separated matrix.

    With ``allow_missing`` empty cells and ``nan`` are kept as NaN.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [[_cell(v) for v in row] for row in csv.reader(fh) if row]
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    if len({len(r) for r in rows}) != 1:
        raise DataError(f"{path} has ragged rows")
    if allow_missing:
        arr = np.asarray(rows, dtype=float)
        if np.isinf(arr).any():
            raise DataError(f"{path} contains Inf")
        return arr
    return as_matrix(rows, str(path))


def format_value(v: float) -> str:
    return f"{v:.12g}"


def write_matrix_csv(path, X, integer: bool = False) -> None:
    """Write ``X`` as CSV with 12 significant digits (or plain integers)."""
    X = np.asarray(X)
    fmt = (lambda v: str(int(v))) if integer else format_value
    with Path(path).open("w", newline="") as fh:
        for row in X:
            fh.write(",".join(fmt(v) for v in row) + "\n")
