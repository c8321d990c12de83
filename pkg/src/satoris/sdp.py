"""First-order solver for block-PSD programs in the variables ``(A, X, B)``.

Every program handled here has the shape::

    minimize    f_X(X) + f_G(A, B)
    subject to  [[A, X], [X', B]] is positive semidefinite

where ``f_X`` encodes how ``X`` relates to the data ``Y`` on the observed
entries and ``f_G`` encodes the treatment of the Gram blocks (fixed, traced,
ball-constrained, penalised or structurally weighted). Constraints live inside
``f_X`` / ``f_G`` as indicator functions.

The solver is consensus ADMM: the separable prox step on ``(A, X, B)`` is
closed form, the other copy ``Z`` is projected onto the PSD cone by a dense
symmetric eigendecomposition. When the Gram blocks are pinned to low-rank
ranges the projection is taken onto the corresponding face of the cone,
which restores strict feasibility and keeps the eigenproblem at ``2k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import DimensionError
from .masking import as_mask
from .matrix_core import as_matrix

log = logging.getLogger(__name__)

DataMode = Literal["equality", "residual", "free"]
GramMode = Literal["fixed", "trace", "ball", "penalty", "weighted", "free"]

_DATA_MODES = ("equality", "residual", "free")
_GRAM_MODES = ("fixed", "trace", "ball", "penalty", "weighted", "free")


@dataclass
class SdpProblem:
    """Structured block-PSD program.

    ``data_mode``
        ``"equality"``: ``X[i, j] == Y[i, j]`` on observed entries.
        ``"residual"``: adds ``residual_weight * ||mask * (X - Y)||_F``.
        ``"free"``: ``X`` is unconstrained by data.
    ``gram_mode``
        ``"fixed"``: ``A = A0``, ``B = B0``.
        ``"trace"``: adds ``trace_weight * (tr A + tr B) / 2``.
        ``"ball"``: ``||A - A0||_F <= delta1`` and ``||B - B0||_F <= delta2``.
        ``"penalty"``: adds ``alpha ||A - A0||_F + beta ||B - B0||_F``.
        ``"weighted"``: ``A = U diag(d) U'``, ``B = V diag(d) V'``, ``d >= 0``.
        ``"free"``: no restriction beyond the PSD block.
    """

    Y: np.ndarray
    mask: np.ndarray
    data_mode: DataMode = "residual"
    gram_mode: GramMode = "fixed"
    residual_weight: float = 1.0
    trace_weight: float = 1.0
    A0: Optional[np.ndarray] = None
    B0: Optional[np.ndarray] = None
    alpha: float = 0.0
    beta: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    d0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.Y = as_matrix(self.Y, "Y")
        self.mask = as_mask(self.mask, self.Y.shape)
        if self.data_mode not in _DATA_MODES:
            raise ValueError(f"unknown data_mode {self.data_mode!r}")
        if self.gram_mode not in _GRAM_MODES:
            raise ValueError(f"unknown gram_mode {self.gram_mode!r}")
        for name in ("residual_weight", "trace_weight", "alpha", "beta", "delta1", "delta2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        m, n = self.Y.shape
        if self.gram_mode in ("fixed", "ball", "penalty"):
            if self.A0 is None or self.B0 is None:
                raise ValueError(f"gram_mode {self.gram_mode!r} needs A0 and B0")
        if self.A0 is not None:
            self.A0 = as_matrix(self.A0, "A0")
            if self.A0.shape != (m, m):
                raise DimensionError(f"A0 must be {m}x{m}, got {self.A0.shape}")
        if self.B0 is not None:
            self.B0 = as_matrix(self.B0, "B0")
            if self.B0.shape != (n, n):
                raise DimensionError(f"B0 must be {n}x{n}, got {self.B0.shape}")
        if self.gram_mode == "weighted":
            if self.U is None or self.V is None:
                raise ValueError("gram_mode 'weighted' needs U and V")
            self.U = as_matrix(self.U, "U")
            self.V = as_matrix(self.V, "V")
            if self.U.shape[0] != m or self.V.shape[0] != n or self.U.shape[1] != self.V.shape[1]:
                raise DimensionError("U must be m x k and V must be n x k")
            k = self.U.shape[1]
            self.d0 = np.ones(k) if self.d0 is None else np.asarray(self.d0, dtype=float)
            if self.d0.shape != (k,):
                raise DimensionError(f"d0 must have length {k}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.Y.shape

    @property
    def block_dim(self) -> int:
        return sum(self.Y.shape)

    def data_scale(self) -> float:
        """Norm of the problem data used to make tolerances relative."""
        parts = [np.linalg.norm(self.Y[self.mask])]
        for M in (self.A0, self.B0):
            if M is not None:
                parts.append(np.linalg.norm(M))
        if self.gram_mode == "weighted":
            parts.append(np.linalg.norm(self.d0))
        return float(max(parts))

    def face_basis(self) -> Optional[np.ndarray]:
        """Orthonormal basis of the smallest PSD face containing every feasible block.

        When both Gram blocks are confined to known ranges (fixed priors,
        zero-radius balls or the weighted structure), a PSD block forces ``X = Ua S Vb'`` and the whole
        block lives on the face ``Q P Q'`` with ``Q = blkdiag(Ua, Vb)``.
        Returns ``None`` when the full cone is needed.
        """
        if self.gram_mode == "weighted":
            Ua, Vb = self.U, self.V
        elif self.gram_mode == "fixed" or (self.gram_mode == "ball" and self.delta1 == self.delta2 == 0.0):
            # zero-radius balls pin the Gram blocks exactly like "fixed"
            Ua, Vb = _range_basis(self.A0), _range_basis(self.B0)
        else:
            return None
        m, n = self.shape
        Q = np.zeros((m + n, Ua.shape[1] + Vb.shape[1]))
        Q[:m, : Ua.shape[1]] = Ua
        Q[m:, Ua.shape[1]:] = Vb
        return Q

    def objective(self, A, X, B) -> float:
        val = 0.0
        if self.data_mode == "residual":
            val += self.residual_weight * float(np.linalg.norm((X - self.Y)[self.mask]))
        if self.gram_mode == "trace":
            val += 0.5 * self.trace_weight * float(np.trace(A) + np.trace(B))
        elif self.gram_mode == "penalty":
            val += self.alpha * float(np.linalg.norm(A - self.A0))
            val += self.beta * float(np.linalg.norm(B - self.B0))
        return val


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 5000
    rho: float = 1.0
    relaxation: float = 1.0
    adaptive_rho: bool = True
    adapt_ratio: float = 10.0
    adapt_factor: float = 2.0
    adapt_interval: int = 25
    infeasible_window: int = 500
    infeasible_level: float = 1e-2


@dataclass
class SdpSolution:
    X: np.ndarray
    A: np.ndarray
    B: np.ndarray
    d: Optional[np.ndarray]
    objective_value: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: Literal["converged", "max_iter", "infeasible"]
    rho: float
    eps_primal: float
    eps_dual: float
    history: list = field(default_factory=list, repr=False)

    def block(self) -> np.ndarray:
        return assemble_block(self.A, self.X, self.B)

    def diagnostics(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective": self.objective_value,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "rho": self.rho,
        }


def assemble_block(A, X, B) -> np.ndarray:
    return np.block([[A, X], [X.T, B]])


def project_psd(M: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    pos = w > 0
    Qp = Q[:, pos]
    return (Qp * w[pos]) @ Qp.T


def _range_basis(G: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    w, Q = np.linalg.eigh(0.5 * (G + G.T))
    top = max(float(w[-1]), 0.0)
    return Q[:, w > rtol * top] if top > 0 else Q[:, :0]


def project_face(M: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Projection onto ``{Q P Q' : P PSD}`` for ``Q`` with orthonormal columns."""
    if Q.shape[1] == 0:
        return np.zeros_like(M)
    QP = Q @ project_psd(Q.T @ M @ Q)
    return QP @ Q.T


def _shrink(r: np.ndarray, thresh: float) -> np.ndarray:
    nr = np.linalg.norm(r)
    if nr <= thresh:
        return np.zeros_like(r)
    return r * (1.0 - thresh / nr)


def _ball(r: np.ndarray, radius: float) -> np.ndarray:
    nr = np.linalg.norm(r)
    if nr <= radius:
        return r
    return r * (radius / nr)


class _Prox:
    """Closed-form minimiser of ``f(A,X,B) + rho/2 ||blk(A,X,B) - T||_F^2``."""

    def __init__(self, p: SdpProblem):
        self.p = p
        m, n = p.shape
        self.m, self.n = m, n
        self.obs = p.mask
        self.Yobs = p.Y[p.mask]

    def __call__(self, T: np.ndarray, rho: float):
        p, m = self.p, self.m
        T11, T12, T22 = T[:m, :m], T[:m, m:], T[m:, m:]

        # X appears twice in the block, hence the 2*rho curvature.
        X = T12.copy()
        if p.data_mode == "equality":
            X[self.obs] = self.Yobs
        elif p.data_mode == "residual":
            r = T12[self.obs] - self.Yobs
            X[self.obs] = self.Yobs + _shrink(r, p.residual_weight / (2.0 * rho))

        d = None
        mode = p.gram_mode
        if mode == "fixed":
            A, B = p.A0, p.B0
        elif mode == "trace":
            shift = p.trace_weight / (2.0 * rho)
            A = T11 - shift * np.eye(m)
            B = T22 - shift * np.eye(self.n)
        elif mode == "ball":
            A = p.A0 + _ball(T11 - p.A0, p.delta1)
            B = p.B0 + _ball(T22 - p.B0, p.delta2)
        elif mode == "penalty":
            A = p.A0 + _shrink(T11 - p.A0, p.alpha / rho)
            B = p.B0 + _shrink(T22 - p.B0, p.beta / rho)
        elif mode == "weighted":
            qa = np.einsum("ik,ij,jk->k", p.U, T11, p.U)
            qb = np.einsum("ik,ij,jk->k", p.V, T22, p.V)
            d = np.maximum(0.5 * (qa + qb), 0.0)
            A = (p.U * d) @ p.U.T
            B = (p.V * d) @ p.V.T
        else:
            A, B = T11.copy(), T22.copy()
        return A, X, B, d


def initial_point(p: SdpProblem):
    """Warm start: ``X`` from the observed data, Gram blocks from priors or scaled identities."""
    m, n = p.shape
    X = np.where(p.mask, p.Y, 0.0)
    d = None
    if p.gram_mode == "weighted":
        d = np.maximum(p.d0, 0.0)
        A = (p.U * d) @ p.U.T
        B = (p.V * d) @ p.V.T
    elif p.A0 is not None and p.B0 is not None:
        A, B = p.A0.copy(), p.B0.copy()
    else:
        s = np.linalg.norm(X)
        A = (s / m) * np.eye(m)
        B = (s / n) * np.eye(n)
    return A, X, B, d


def solve(problem: SdpProblem, options: SolverOptions | None = None, record_history: bool = False) -> SdpSolution:
    """Run ADMM until both residuals fall under ``tol * (1 + data_scale)``.

    Returns the prox-side iterate ``(A, X, B)``: it satisfies the data and
    Gram constraints exactly and the PSD constraint up to the primal residual.
    On ``max_iter`` the iterate with the smallest normalised residual is
    returned.
    """
    opt = options or SolverOptions()
    p = problem
    prox = _Prox(p)
    rho = float(opt.rho)
    scale = 1.0 + p.data_scale()
    eps = opt.tol * scale

    Q = p.face_basis()
    project = project_psd if Q is None else (lambda M: project_face(M, Q))

    A, X, B, d = initial_point(p)
    W = assemble_block(A, X, B)
    Z = project(W)
    Lam = np.zeros_like(W)  # scaled dual, y = rho * Lam

    best = None
    best_score = np.inf
    history = []
    stuck = 0
    window_dual_norm = None
    status = "max_iter"
    r_pri = r_dual = np.inf
    it = 0
    relax = opt.relaxation

    for it in range(1, opt.max_iter + 1):
        A, X, B, d = prox(Z - Lam, rho)
        W = assemble_block(A, X, B)
        W_hat = relax * W + (1.0 - relax) * Z
        Z_prev = Z
        Z = project(W_hat + Lam)
        Lam = Lam + W_hat - Z

        r_pri = float(np.linalg.norm(W - Z))
        r_dual = float(rho * np.linalg.norm(Z - Z_prev))
        if record_history:
            history.append((r_pri, r_dual, rho))

        score = max(r_pri, r_dual) / eps
        if score < best_score:
            best_score = score
            best = (A, X, B, d, r_pri, r_dual, it)

        if r_pri <= eps and r_dual <= eps:
            status = "converged"
            break

        # Infeasibility: primal gap persists while the dual variable grows.
        dual_norm = rho * float(np.linalg.norm(Lam))
        if r_pri / scale > opt.infeasible_level:
            if stuck == 0:
                window_dual_norm = dual_norm
            stuck += 1
            if stuck >= opt.infeasible_window:
                if dual_norm > 2.0 * window_dual_norm + 1.0:
                    status = "infeasible"
                    break
                stuck = 0
        else:
            stuck = 0

        if opt.adaptive_rho and it % opt.adapt_interval == 0:
            if r_pri > opt.adapt_ratio * r_dual:
                rho *= opt.adapt_factor
                Lam /= opt.adapt_factor
            elif r_dual > opt.adapt_ratio * r_pri:
                rho /= opt.adapt_factor
                Lam *= opt.adapt_factor

    if status == "max_iter" and best is not None:
        A, X, B, d, r_pri, r_dual, _ = best
    log.debug("sdp solve: status=%s iterations=%d r_pri=%.3g r_dual=%.3g", status, it, r_pri, r_dual)
    return SdpSolution(
        X=X, A=A, B=B, d=d,
        objective_value=p.objective(A, X, B),
        primal_residual=r_pri,
        dual_residual=r_dual,
        iterations=it,
        status=status,
        rho=rho,
        eps_primal=eps,
        eps_dual=eps,
        history=history,
    )


@dataclass(frozen=True)
class KktReport:
    """Constraint violations recomputed from a returned point, relative to ``1 + data_scale``."""

    psd: float
    data_equality: float
    gram_fixed: float
    ball: float
    weights_nonneg: float

    @property
    def max_violation(self) -> float:
        return max(self.psd, self.data_equality, self.gram_fixed, self.ball, self.weights_nonneg)


def verify_kkt(problem: SdpProblem, solution: SdpSolution) -> KktReport:
    """Independent feasibility check of ``solution`` against ``problem``."""
    p = problem
    scale = 1.0 + p.data_scale()
    blk = assemble_block(solution.A, solution.X, solution.B)
    lam_min = float(np.linalg.eigvalsh(0.5 * (blk + blk.T))[0])
    psd = max(0.0, -lam_min)

    eq = 0.0
    if p.data_mode == "equality" and p.mask.any():
        eq = float(np.max(np.abs(solution.X - p.Y)[p.mask]))

    fixed = 0.0
    if p.gram_mode == "fixed":
        fixed = max(float(np.max(np.abs(solution.A - p.A0))), float(np.max(np.abs(solution.B - p.B0))))
    elif p.gram_mode == "weighted" and solution.d is not None:
        fixed = max(
            float(np.max(np.abs(solution.A - (p.U * solution.d) @ p.U.T))),
            float(np.max(np.abs(solution.B - (p.V * solution.d) @ p.V.T))),
        )

    ball = 0.0
    if p.gram_mode == "ball":
        ball = max(
            0.0,
            float(np.linalg.norm(solution.A - p.A0)) - p.delta1,
            float(np.linalg.norm(solution.B - p.B0)) - p.delta2,
        )

    nonneg = 0.0
    if solution.d is not None:
        nonneg = max(0.0, -float(np.min(solution.d)))

    return KktReport(
        psd=psd / scale,
        data_equality=eq / scale,
        gram_fixed=fixed / scale,
        ball=ball / scale,
        weights_nonneg=nonneg / scale,
    )
