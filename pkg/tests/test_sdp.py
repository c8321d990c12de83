import dataclasses

import numpy as np
import pytest

from satoris.errors import DimensionError
from satoris.formulations import nuclear_norm_sdp
from satoris.matrix_core import nuclear_norm_svd
from satoris.sdp import (
    SdpProblem,
    SdpSolution,
    SolverOptions,
    assemble_block,
    project_face,
    project_psd,
    solve,
    verify_kkt,
)

# nuclear norm of default_rng(42).standard_normal((8, 6)) from an eigen-oracle
NUC_8x6_SEED42 = 11.343242096333084


def nuclear_problem(X0):
    return SdpProblem(Y=X0, mask=np.ones(X0.shape, bool), data_mode="equality", gram_mode="trace")


def closed_form_problem(X0, data_mode="equality"):
    U, s, Vt = np.linalg.svd(X0, full_matrices=False)
    A0 = (U * s) @ U.T
    B0 = (Vt.T * s) @ Vt
    return SdpProblem(Y=X0, mask=np.ones(X0.shape, bool), data_mode=data_mode, gram_mode="fixed",
                      A0=0.5 * (A0 + A0.T), B0=0.5 * (B0 + B0.T))


def test_nuclear_diag():
    sol = solve(nuclear_problem(np.diag([3.0, 1.0])))
    assert sol.status == "converged"
    assert sol.objective_value == pytest.approx(4.0, rel=1e-4)


def test_nuclear_zero_matrix():
    assert nuclear_norm_sdp(np.zeros((3, 2))) == pytest.approx(0.0, abs=1e-6)


def test_nuclear_random_matches_frozen_oracle():
    X0 = np.random.default_rng(42).standard_normal((8, 6))
    assert nuclear_norm_svd(X0) == pytest.approx(NUC_8x6_SEED42, rel=1e-12)
    sol = solve(nuclear_problem(X0))
    assert sol.status == "converged"
    assert sol.objective_value == pytest.approx(NUC_8x6_SEED42, rel=1e-4)
    # duality-style lower bound
    assert sol.objective_value >= NUC_8x6_SEED42 - 1e-3 * (1 + NUC_8x6_SEED42)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_closed_form_fixed_grams(seed):
    X0 = np.random.default_rng(seed).standard_normal((7, 5))
    p = closed_form_problem(X0)
    sol = solve(p)
    assert sol.status == "converged"
    assert sol.primal_residual <= sol.eps_primal and sol.dual_residual <= sol.eps_dual
    assert np.allclose(sol.X, X0, atol=1e-5)
    assert verify_kkt(p, sol).max_violation <= 10 * SolverOptions().tol


def test_converged_solution_invariants():
    X0 = np.random.default_rng(3).standard_normal((6, 4))
    p = nuclear_problem(X0)
    sol = solve(p, record_history=True)
    assert sol.status == "converged"
    blk = sol.block()
    assert np.linalg.eigvalsh(blk)[0] >= -1e-6 * (1 + np.linalg.norm(blk))
    assert verify_kkt(p, sol).max_violation <= 10 * SolverOptions().tol
    assert min(max(pri, dual) for pri, dual, _ in sol.history) <= sol.eps_primal


def test_verify_kkt_flags_negative_eigenvalue():
    X0 = np.diag([3.0, 1.0])
    p = nuclear_problem(X0)
    sol = solve(p)
    bad = dataclasses.replace(sol, A=sol.A - 2.0 * np.eye(2))
    rep = verify_kkt(p, bad)
    assert rep.psd > SolverOptions().tol
    assert rep.max_violation > SolverOptions().tol


def test_verify_kkt_flags_equality_and_ball():
    X0 = np.eye(2)
    p = SdpProblem(Y=X0, mask=np.ones((2, 2), bool), data_mode="equality", gram_mode="ball",
                   A0=np.eye(2), B0=np.eye(2), delta1=0.1, delta2=0.1)
    fake = SdpSolution(X=X0 + 0.5, A=3 * np.eye(2), B=3 * np.eye(2), d=None, objective_value=0.0,
                       primal_residual=0.0, dual_residual=0.0, iterations=0, status="converged",
                       rho=1.0, eps_primal=0.0, eps_dual=0.0)
    rep = verify_kkt(p, fake)
    assert rep.data_equality > 0.1 and rep.ball > 0.1


def test_determinism():
    X0 = np.random.default_rng(5).standard_normal((6, 5))
    mask = np.random.default_rng(6).random((6, 5)) > 0.4
    p = SdpProblem(Y=np.where(mask, X0, 0), mask=mask, data_mode="equality", gram_mode="trace")
    a = solve(p, record_history=True)
    b = solve(p, record_history=True)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.A, b.A)
    assert a.iterations == b.iterations and a.history == b.history


@pytest.mark.parametrize("c", [0.5, 3.0, 100.0])
def test_scaling_equivariance(c):
    X0 = np.random.default_rng(8).standard_normal((5, 4))
    base = nuclear_norm_sdp(X0)
    assert nuclear_norm_sdp(c * X0) == pytest.approx(c * base, rel=1e-4)


def test_max_iter_status():
    X0 = np.random.default_rng(2).standard_normal((6, 5))
    sol = solve(nuclear_problem(X0), SolverOptions(max_iter=3))
    assert sol.status == "max_iter"
    assert sol.iterations == 3


def test_infeasible_detected():
    # observed entries outside the span of the fixed rank-1 priors
    A0 = np.diag([1.0, 0.0, 0.0])
    B0 = np.diag([1.0, 0.0, 0.0])
    Y = np.eye(3)
    mask = np.eye(3, dtype=bool)
    p = SdpProblem(Y=Y, mask=mask, data_mode="equality", gram_mode="fixed", A0=A0, B0=B0)
    sol = solve(p, SolverOptions(max_iter=3000))
    assert sol.status == "infeasible"


def test_weighted_mode_nonnegative_weights():
    rng = np.random.default_rng(9)
    U, _ = np.linalg.qr(rng.standard_normal((8, 2)))
    V, _ = np.linalg.qr(rng.standard_normal((5, 2)))
    X0 = (U * [4.0, 2.0]) @ V.T
    mask = rng.random((8, 5)) > 0.3
    p = SdpProblem(Y=np.where(mask, X0, 0), mask=mask, data_mode="residual", gram_mode="weighted",
                   U=U, V=V, d0=np.array([1.0, 1.0]))
    sol = solve(p)
    assert sol.status == "converged"
    assert sol.d.min() >= 0
    assert np.allclose(sol.A, (U * sol.d) @ U.T, atol=1e-8)
    assert np.linalg.norm(sol.X - X0) / np.linalg.norm(X0) < 1e-3


def test_projections():
    M = np.diag([2.0, -1.0])
    assert np.allclose(project_psd(M), np.diag([2.0, 0.0]))
    Q = np.array([[1.0], [0.0]])
    assert np.allclose(project_face(np.array([[1.0, 5.0], [5.0, 7.0]]), Q), np.diag([1.0, 0.0]))
    assert assemble_block(np.eye(2), np.ones((2, 3)), np.eye(3)).shape == (5, 5)


@pytest.mark.parametrize(
    "kwargs",
    [dict(data_mode="bogus"), dict(gram_mode="bogus"), dict(gram_mode="fixed"),
     dict(gram_mode="trace", alpha=-1.0), dict(gram_mode="weighted")],
)
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        SdpProblem(Y=np.eye(2), mask=np.ones((2, 2), bool), **kwargs)


def test_problem_shape_checks():
    with pytest.raises(DimensionError):
        SdpProblem(Y=np.ones((2, 3)), mask=np.ones((2, 3), bool), gram_mode="fixed",
                   A0=np.eye(3), B0=np.eye(3))
    p = nuclear_problem(np.ones((4, 3)))
    assert p.block_dim == 7 and p.shape == (4, 3)
