"""Subspace-informed imputers built on the block-PSD solver.

Five explicit variants share one pipeline: build Gram priors from a
neighbour day, pose the block-PSD program, solve it, and keep observed
entries from the data while filling missing ones from the optimiser.

======================  ==============================================
variant                 program
======================  ==============================================
``hresi``               ``X == Y`` on observed entries, ``A, B`` fixed
``sresi``               min ``||M*(X - Y)||_F``, ``A, B`` fixed
``srrsi_delta``         as ``sresi`` with ``A, B`` in Frobenius balls
``srrsi_reg``           ``sresi`` + ``alpha||A-A0|| + beta||B-B0||``
``srwsi``               ``A = U diag(d) U'``, ``B = V diag(d) V'``
======================  ==============================================
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, SolverError
from .masking import as_mask
from .matrix_core import as_matrix, numerical_rank
from .sdp import SdpProblem, SdpSolution, SolverOptions, solve
from .subspace import SubspacePrior

log = logging.getLogger(__name__)

VARIANTS = ("hresi", "sresi", "srrsi_delta", "srrsi_reg", "srwsi")
DEFAULT_K = 10
DEFAULT_WEIGHT = 1.0
DEFAULT_RADIUS_FRACTION = 0.1


@dataclass(frozen=True)
class ExplicitMethod:
    """Variant name plus its hyperparameters.

    ``alpha``/``beta`` belong to ``srrsi_reg`` (default 1) and
    ``delta1``/``delta2`` to ``srrsi_delta`` (default ``0.1 * ||A0||_F`` and
    ``0.1 * ||B0||_F``, resolved once the prior is known).
    """

    variant: str = "sresi"
    k: int = DEFAULT_K
    alpha: Optional[float] = None
    beta: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None

    def __post_init__(self):
        v = self.variant.lower()
        object.__setattr__(self, "variant", v)
        if v not in VARIANTS:
            raise ValueError(f"unknown explicit variant {self.variant!r}; choose from {VARIANTS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if v != "srrsi_reg" and (self.alpha is not None or self.beta is not None):
            raise ValueError("alpha/beta only apply to srrsi_reg")
        if v != "srrsi_delta" and (self.delta1 is not None or self.delta2 is not None):
            raise ValueError("delta1/delta2 only apply to srrsi_delta")
        if v == "srrsi_reg":
            for name in ("alpha", "beta"):
                if getattr(self, name) is None:
                    object.__setattr__(self, name, DEFAULT_WEIGHT)
        for name in ("alpha", "beta", "delta1", "delta2"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be nonnegative")


def build_problem(Y, mask, prior: SubspacePrior, method: ExplicitMethod) -> SdpProblem:
    Y = as_matrix(Y, "Y")
    mask = as_mask(mask, Y.shape)
    if prior.A.shape[0] != Y.shape[0] or prior.B.shape[0] != Y.shape[1]:
        raise DimensionError(
            f"prior built for {prior.A.shape[0]}x{prior.B.shape[0]}, data is {Y.shape}"
        )
    if prior.k != method.k:
        raise ValueError(f"prior has rank {prior.k}, method expects k={method.k}")
    Y = np.where(mask, Y, 0.0)
    v = method.variant
    common = dict(Y=Y, mask=mask, A0=prior.A, B0=prior.B)
    if v == "hresi":
        return SdpProblem(data_mode="equality", gram_mode="fixed", **common)
    if v == "sresi":
        return SdpProblem(data_mode="residual", gram_mode="fixed", **common)
    if v == "srrsi_delta":
        d1 = method.delta1 if method.delta1 is not None else DEFAULT_RADIUS_FRACTION * np.linalg.norm(prior.A)
        d2 = method.delta2 if method.delta2 is not None else DEFAULT_RADIUS_FRACTION * np.linalg.norm(prior.B)
        return SdpProblem(data_mode="residual", gram_mode="ball", delta1=float(d1), delta2=float(d2), **common)
    if v == "srrsi_reg":
        return SdpProblem(
            data_mode="residual", gram_mode="penalty", alpha=method.alpha, beta=method.beta, **common
        )
    # srwsi: Gram blocks are functions of d; d starts at the prior's singular values.
    return SdpProblem(
        Y=Y, mask=mask, data_mode="residual", gram_mode="weighted",
        U=prior.U, V=prior.V, d0=prior.sigma.copy(),
    )


def complete_from(Y, mask, X_star, clip_negative: bool = False) -> np.ndarray:
    """Observed entries from ``Y``, missing entries from the optimiser."""
    out = np.where(mask, Y, X_star)
    if clip_negative:
        out = np.where(mask, out, np.maximum(out, 0.0))
    return out


@dataclass
class ExplicitResult:
    values: np.ndarray
    solution: SdpSolution
    variant_used: str
    warnings: list = field(default_factory=list)


def solve_explicit(
    Y,
    mask,
    prior: SubspacePrior,
    method: ExplicitMethod,
    options: SolverOptions | None = None,
    clip_negative: bool = False,
    on_infeasible: str = "fallback",
) -> ExplicitResult:
    """Run one explicit variant and keep the solver diagnostics.

    An infeasible ``hresi`` program falls back to ``sresi`` (recorded in
    ``warnings``) unless ``on_infeasible="raise"``.
    """
    Y = as_matrix(Y, "Y")
    mask = as_mask(mask, Y.shape)
    if not mask.any():
        raise ValueError("no observed entries")
    problem = build_problem(Y, mask, prior, method)
    sol = solve(problem, options)
    used = method.variant
    notes = []
    if sol.status == "infeasible":
        if on_infeasible == "raise" or method.variant != "hresi":
            raise SolverError(f"{method.variant} program reported infeasible", sol.diagnostics())
        msg = "hresi infeasible (observations outside the prior subspaces); fell back to sresi"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
        notes.append(msg)
        fallback = ExplicitMethod("sresi", k=method.k)
        sol = solve(build_problem(Y, mask, prior, fallback), options)
        used = "sresi"
    values = complete_from(Y, mask, sol.X, clip_negative)
    return ExplicitResult(values=values, solution=sol, variant_used=used, warnings=notes)


def impute_explicit(
    Y,
    mask,
    prior: SubspacePrior,
    method: ExplicitMethod,
    options: SolverOptions | None = None,
    clip_negative: bool = False,
) -> np.ndarray:
    """Completed matrix from one explicit subspace-injection variant."""
    return solve_explicit(Y, mask, prior, method, options, clip_negative).values


def nuclear_norm_sdp(X0, options: SolverOptions | None = None) -> float:
    """Nuclear norm as ``min (tr A + tr B)/2`` over PSD blocks with ``X`` pinned to ``X0``."""
    X0 = as_matrix(X0, "X0")
    problem = SdpProblem(
        Y=X0, mask=np.ones(X0.shape, dtype=bool), data_mode="equality", gram_mode="trace"
    )
    sol = solve(problem, options)
    if sol.status == "infeasible":
        raise SolverError("nuclear-norm program reported infeasible", sol.diagnostics())
    return 0.5 * float(np.trace(sol.A) + np.trace(sol.B))


def factorization_norm_oracle(X0, k: int) -> float:
    """``(||L||_F^2 + ||R||_F^2) / 2`` at the balanced SVD factorisation ``X0 = L R'``.

    ``L = U sqrt(S)`` and ``R = V sqrt(S)`` attain the minimum of the
    non-convex factorised characterisation, so the value equals the nuclear norm.
    """
    X0 = as_matrix(X0, "X0")
    kmax = min(X0.shape)
    if not 1 <= k <= kmax:
        raise ValueError(f"k must be in [1, {kmax}]")
    if k < numerical_rank(X0):
        raise ValueError(f"k={k} is below the numerical rank of X0")
    U, s, Vt = np.linalg.svd(X0, full_matrices=False)
    root = np.sqrt(s[:k])
    L = U[:, :k] * root
    R = Vt[:k].T * root
    return 0.5 * float(np.sum(L**2) + np.sum(R**2))
