"""Subspace-unaware imputers and the stacking meta-algorithm.

Any object with an ``impute(Y, mask) -> ndarray`` method is an imputer.
:func:`impute_stacked` turns one into an implicitly subspace-informed
variant by completing the target next to a fully observed neighbour day.
"""

from __future__ import annotations

from typing import Callable, Literal, Optional, Protocol, runtime_checkable

import numpy as np

from .errors import DataError, DimensionError
from .masking import as_mask
from .matrix_core import as_matrix
from .sdp import SdpProblem, SolverOptions, solve


@runtime_checkable
class Imputer(Protocol):
    def impute(self, Y: np.ndarray, mask: np.ndarray) -> np.ndarray: ...


def impute(imputer: Imputer, Y, mask) -> np.ndarray:
    """Validate inputs, run ``imputer`` and enforce observed passthrough."""
    Y = np.asarray(Y, dtype=float)
    mask = as_mask(mask, Y.shape)
    if not mask.any():
        raise DataError("no observed entries")
    Y = as_matrix(np.where(mask, Y, 0.0), "Y")
    out = np.asarray(imputer.impute(Y, mask), dtype=float)
    if out.shape != Y.shape:
        raise DimensionError(f"imputer returned shape {out.shape}, expected {Y.shape}")
    out = np.where(mask, Y, out)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{type(imputer).__name__} produced non-finite values")
    return out


def _column_means(Y, mask):
    counts = mask.sum(axis=0)
    sums = np.where(mask, Y, 0.0).sum(axis=0)
    global_mean = sums.sum() / counts.sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), global_mean)
    return means


class MeanFill:
    """Column means (``strategy="column"``) or the overall observed mean.

    Columns without observations fall back to the overall mean.
    """

    def __init__(self, strategy: Literal["column", "global"] = "column"):
        if strategy not in ("column", "global"):
            raise ValueError("strategy must be 'column' or 'global'")
        self.strategy = strategy

    def impute(self, Y, mask):
        if self.strategy == "global":
            return np.full(Y.shape, Y[mask].mean())
        return np.broadcast_to(_column_means(Y, mask), Y.shape).copy()


class KnnImputer:
    """Row-neighbour averaging.

    Distances are mean squared differences over the columns two rows both
    observe. Each missing ``(i, j)`` averages column ``j`` over the
    ``n_neighbors`` closest rows that observe it; with no such row the
    column mean is used.
    """

    def __init__(self, n_neighbors: int = 5):
        if n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.n_neighbors = n_neighbors

    def row_distances(self, Y, mask):
        M = mask.astype(float)
        Yz = np.where(mask, Y, 0.0)
        Y2 = Yz**2
        sq = Y2 @ M.T + M @ Y2.T - 2.0 * Yz @ Yz.T
        count = M @ M.T
        with np.errstate(invalid="ignore", divide="ignore"):
            dist = np.where(count > 0, np.maximum(sq, 0.0) / np.maximum(count, 1), np.inf)
        np.fill_diagonal(dist, np.inf)
        return dist

    def impute(self, Y, mask):
        out = np.where(mask, Y, 0.0)
        fallback = _column_means(Y, mask)
        dist = self.row_distances(Y, mask)
        for i in np.flatnonzero(~mask.all(axis=1)):
            order = np.lexsort((np.arange(Y.shape[0]), dist[i]))
            order = order[np.isfinite(dist[i, order])]
            for j in np.flatnonzero(~mask[i]):
                donors = order[mask[order, j]][: self.n_neighbors]
                out[i, j] = Y[donors, j].mean() if donors.size else fallback[j]
        return out


def _svt(Z, lam):
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    s = np.maximum(s - lam, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep], float(s.sum())


class SoftImpute:
    """Iterative singular-value soft-thresholding along a decreasing ``lambda`` path.

    ``lambda`` runs geometrically over ``n_lambdas`` values from
    ``lambda_max_frac * sigma_max`` to ``lambda_min_frac * sigma_max`` of the
    zero-filled data, warm-starting each stage. When ``record_objective`` is
    set, ``objective_trace`` holds, per ``lambda``, the objective
    ``0.5 ||M*(Y - Z)||^2 + lambda ||Z||_*`` at the warm start and after each sweep.
    """

    def __init__(
        self,
        n_lambdas: int = 10,
        lambda_max_frac: float = 0.5,
        lambda_min_frac: float = 0.005,
        max_sweeps: int = 100,
        tol: float = 1e-5,
        record_objective: bool = False,
    ):
        self.n_lambdas = n_lambdas
        self.lambda_max_frac = lambda_max_frac
        self.lambda_min_frac = lambda_min_frac
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.record_objective = record_objective
        self.objective_trace: list[tuple[float, list[float]]] = []

    def lambdas(self, Y, mask):
        smax = np.linalg.norm(np.where(mask, Y, 0.0), 2)
        return np.geomspace(self.lambda_max_frac * smax, self.lambda_min_frac * smax, self.n_lambdas)

    def impute(self, Y, mask):
        Yo = np.where(mask, Y, 0.0)
        Z = np.zeros_like(Yo)
        self.objective_trace = []
        for lam in self.lambdas(Y, mask):
            trace = []
            if self.record_objective:
                nuc = np.linalg.svd(Z, compute_uv=False).sum()
                trace.append(0.5 * np.sum((Yo - Z)[mask] ** 2) + lam * nuc)
            for _ in range(self.max_sweeps):
                Z_new, nuc = _svt(np.where(mask, Yo, Z), lam)
                if self.record_objective:
                    trace.append(0.5 * np.sum((Yo - Z_new)[mask] ** 2) + lam * nuc)
                denom = max(np.sum(Z**2), 1e-300)
                delta = np.sum((Z_new - Z) ** 2) / denom
                Z = Z_new
                if delta < self.tol:
                    break
            if self.record_objective:
                self.objective_trace.append((float(lam), trace))
        return Z


class IterativeSvd:
    """Alternate between a rank-``rank`` SVD fit and refilling missing entries."""

    def __init__(self, rank: int = 10, max_iter: int = 100, tol: float = 1e-5):
        if rank < 1:
            raise ValueError("rank must be >= 1")
        self.rank = rank
        self.max_iter = max_iter
        self.tol = tol

    def impute(self, Y, mask):
        r = min(self.rank, *Y.shape)
        X = np.where(mask, Y, _column_means(Y, mask))
        for _ in range(self.max_iter):
            U, s, Vt = np.linalg.svd(X, full_matrices=False)
            low = (U[:, :r] * s[:r]) @ Vt[:r]
            X_new = np.where(mask, Y, low)
            change = np.linalg.norm(X_new - X) / max(np.linalg.norm(X), 1e-300)
            X = X_new
            if change < self.tol:
                break
        return X


class NNmin:
    """Nuclear-norm minimisation through the block-PSD solver.

    With ``data_weight=None`` (default) the observed entries are matched
    exactly: ``min ||X||_*`` s.t. ``X == Y`` on observed entries. A number
    gives the penalised form ``min data_weight ||M*(X - Y)||_F + ||X||_*``;
    note that for ``data_weight <= 1`` that program is minimised by ``X = 0``
    on the missing entries, since ``||X||_* >= ||M*X||_F``.
    """

    def __init__(self, data_weight: Optional[float] = None, options: SolverOptions | None = None):
        if data_weight is not None and data_weight < 0:
            raise ValueError("data_weight must be nonnegative")
        self.data_weight = data_weight
        self.options = options
        self.last_solution = None

    def problem(self, Y, mask) -> SdpProblem:
        if self.data_weight is None:
            return SdpProblem(Y=Y, mask=mask, data_mode="equality", gram_mode="trace")
        return SdpProblem(
            Y=Y, mask=mask, data_mode="residual", residual_weight=self.data_weight, gram_mode="trace"
        )

    def impute(self, Y, mask):
        sol = solve(self.problem(Y, mask), self.options)
        self.last_solution = sol
        return sol.X


class SklearnAdapter:
    """Wrap an estimator exposing ``fit_transform`` on NaN-marked arrays."""

    def __init__(self, estimator):
        self.estimator = estimator

    def impute(self, Y, mask):
        X = np.where(mask, Y, np.nan)
        return np.asarray(self.estimator.fit_transform(X), dtype=float)


StackingMode = Literal["H", "V"]


def impute_stacked(base: Imputer, Y1, mask1, D2_full, mode: StackingMode = "H") -> np.ndarray:
    """Complete ``Y1`` next to a fully observed neighbour and return the ``Y1`` block.

    ``"H"`` places the days side by side (shared rows, left subspace);
    ``"V"`` stacks them vertically (shared columns, right subspace).
    """
    mode = mode.upper()
    if mode not in ("H", "V"):
        raise ValueError("mode must be 'H' or 'V'")
    Y1 = np.asarray(Y1, dtype=float)
    mask1 = as_mask(mask1, Y1.shape)
    D2 = as_matrix(D2_full, "neighbor")
    axis = 1 if mode == "H" else 0
    if Y1.shape[1 - axis] != D2.shape[1 - axis]:
        raise DimensionError(f"cannot stack {Y1.shape} with {D2.shape} in mode {mode}")
    stackY = np.concatenate([np.where(mask1, Y1, 0.0), D2], axis=axis)
    stackM = np.concatenate([mask1, np.ones(D2.shape, dtype=bool)], axis=axis)
    full = impute(base, stackY, stackM)
    m, n = Y1.shape
    block = full[:m, :n]
    return np.where(mask1, Y1, block)


def srisi(Y1, mask1, D2_full, options: SolverOptions | None = None, data_weight: Optional[float] = None):
    """Nuclear-norm minimisation on the horizontal stack ``[Y1 | D2]`` (``nnmin-h``)."""
    return impute_stacked(NNmin(data_weight, options), Y1, mask1, D2_full, "H")


REGISTRY: dict[str, Callable[..., Imputer]] = {
    "mean": MeanFill,
    "knn": KnnImputer,
    "softimpute": SoftImpute,
    "itersvd": IterativeSvd,
    "nnmin": NNmin,
}


def register_imputer(name: str, factory: Callable[..., Imputer]) -> None:
    """Make an external imputer available to the harness (and its ``-h``/``-v`` variants)."""
    if "-" in name:
        raise ValueError("imputer names may not contain '-' (reserved for stacking suffixes)")
    REGISTRY[name.lower()] = factory


def make_imputer(name: str, **params) -> Imputer:
    try:
        factory = REGISTRY[name.lower()]
    except KeyError:
        raise ValueError(f"unknown imputer {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)
