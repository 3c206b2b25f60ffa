"""Extended Krylov projection solver checked against dense solves on
instances small enough to lift everything."""

import numpy as np
import pytest
import scipy.sparse as sp

from triccati.errors import BasisBreakdownError
from triccati.krylov import ExtendedKrylovTSylv, residual_norm, solve_tsylv_krylov
from triccati.lowrank import LowRankPair, LowRankTRiccatiProblem, zero_pair
from triccati.tsylv_dense import solve_tsylv_dense

rng = np.random.default_rng(11)


def make_problem(n=48, p=1, q=2, seed=0, sparse=True):
    g = np.random.default_rng(seed)
    D = np.diag(4.0 + g.random(n)) - 0.2 * g.random((n, n)) / n
    A = -0.5 * np.eye(n) - 0.2 * g.random((n, n)) / n
    if sparse:
        D, A = sp.csr_matrix(D), sp.csr_matrix(A)
    B1 = g.random((n, p)) / n
    B2 = g.random((n, p)) / n
    C1 = -g.random((q, n))
    C2 = g.random((q, n))
    return LowRankTRiccatiProblem(A=A, D=D, B1=B1, B2=B2, C1=C1, C2=C2)


def dense_inner_data(prob, X):
    """Shifted coefficients and right-hand side of the step equation, dense."""
    A = prob.A.to_dense()
    D = prob.D.to_dense()
    B = prob.B1 @ prob.B2.T
    C = prob.C1.T @ prob.C2
    Xd = X.to_dense()
    return D - Xd.T @ B, A - B @ Xd, C + Xd.T @ B @ Xd


class TestAgainstDense:
    def test_first_step_matches_dense(self):
        # X = 0: the step equation is D Z + Z^T A = -C
        for seed in range(4):
            prob = make_problem(n=40, p=1, q=1, seed=seed)
            Dd, Ad, rhs = dense_inner_data(prob, zero_pair(prob.n))
            want = solve_tsylv_dense(Dd, Ad, -rhs)
            tol = 1e-10 * np.linalg.norm(rhs)
            Xt, rep = solve_tsylv_krylov(prob, zero_pair(prob.n), tol)
            assert rep.converged, rep.message
            err = np.linalg.norm(Xt.to_dense() - want) / np.linalg.norm(want)
            assert err <= 1e-8

    def test_shifted_step_matches_dense(self):
        # nonzero iterate: coefficients pick up the SMW low-rank shifts
        prob = make_problem(n=36, p=2, q=1, seed=5)
        X = LowRankPair(0.05 * rng.random((36, 2)), 0.05 * rng.random((36, 2)))
        Dd, Ad, rhs = dense_inner_data(prob, X)
        want = solve_tsylv_dense(Dd, Ad, -rhs)
        tol = 1e-10 * np.linalg.norm(rhs)
        Xt, rep = solve_tsylv_krylov(prob, X, tol)
        assert rep.converged, rep.message
        err = np.linalg.norm(Xt.to_dense() - want) / np.linalg.norm(want)
        assert err <= 1e-8

    def test_report_fields(self):
        prob = make_problem(n=40, p=1, q=1, seed=2)
        tol = 1e-8 * prob.c_norm()
        Xt, rep = solve_tsylv_krylov(prob, zero_pair(prob.n), tol)
        assert rep.converged
        assert rep.iterations == len(rep.residuals) >= 1
        assert rep.tol == tol
        assert rep.basis_dim >= Xt.rank
        assert rep.residuals[-1] <= tol


class TestResidualFormula:
    def test_matches_dense_residual_each_iteration(self):
        # the coupling-block shortcut must equal the fully formed residual
        for seed in (0, 3):
            prob = make_problem(n=60, p=1, q=2, seed=seed)
            X = zero_pair(prob.n)
            Dd, Ad, rhs = dense_inner_data(prob, X)
            rhs_norm = np.linalg.norm(rhs)
            seen = []

            def monitor(eng, m, Y, res):
                Xm = eng.V @ Y @ eng.W.T
                true = np.linalg.norm(Dd @ Xm + Xm.T @ Ad + rhs)
                seen.append((m, res, true))

            solve_tsylv_krylov(prob, X, 1e-9 * rhs_norm, monitor=monitor)
            assert len(seen) >= 2
            for m, res, true in seen:
                # 1e-9 relative plus the float noise of forming the dense
                # residual (intermediates live at the scale of rhs)
                assert abs(res - true) <= 1e-9 * true + 1e-12 * rhs_norm, \
                    (m, res, true)

    def test_basis_invariants(self):
        prob = make_problem(n=50, p=1, q=1, seed=7)
        X = zero_pair(prob.n)
        _, _, dhat, ahat = prob.shifted_coefficients(X)
        checks = []

        def monitor(eng, m, Y, res):
            V, W = eng.V, eng.W
            checks.append((
                np.linalg.norm(V.T @ V - np.eye(V.shape[1])),
                np.linalg.norm(W.T @ W - np.eye(W.shape[1])),
                np.linalg.norm(ahat.rmatvec(V) - W @ eng.U),
                np.linalg.norm(eng.T - W.T @ dhat.matvec(V)),
            ))

        solve_tsylv_krylov(prob, X, 1e-9 * prob.c_norm(), monitor=monitor)
        assert len(checks) >= 2
        for orthoV, orthoW, factor_defect, t_defect in checks:
            assert orthoV <= 1e-12
            assert orthoW <= 1e-12
            assert factor_defect <= 1e-9
            assert t_defect <= 1e-9

    def test_nested_bases(self):
        prob = make_problem(n=50, p=1, q=1, seed=9)
        snaps = []

        def monitor(eng, m, Y, res):
            snaps.append(eng.V.copy())

        solve_tsylv_krylov(prob, zero_pair(prob.n), 1e-9 * prob.c_norm(),
                           monitor=monitor)
        for a, b in zip(snaps, snaps[1:]):
            assert b.shape[1] >= a.shape[1]
            assert np.array_equal(b[:, :a.shape[1]], a)


class TestSmallSpaceBehaviour:
    def test_exact_on_saturated_space(self):
        # n small enough that the seed block already spans everything
        prob = make_problem(n=8, p=1, q=1, seed=1, sparse=False)
        Dd, Ad, rhs = dense_inner_data(prob, zero_pair(8))
        want = solve_tsylv_dense(Dd, Ad, -rhs)
        Xt, rep = solve_tsylv_krylov(prob, zero_pair(8),
                                     1e-11 * np.linalg.norm(rhs))
        assert rep.converged
        assert rep.iterations <= 2
        assert np.allclose(Xt.to_dense(), want, atol=1e-8)

    def test_space_exhaustion_reported(self):
        # unreachable tolerance: the engine saturates R^n and gives up cleanly
        prob = make_problem(n=10, p=1, q=1, seed=3, sparse=False)
        Xt, rep = solve_tsylv_krylov(prob, zero_pair(10), 0.0)
        assert Xt is None
        assert not rep.converged
        assert "exhausted" in rep.message
        assert rep.residuals[-1] <= 1e-10 * prob.c_norm()  # full space: tiny

    def test_m_max_reached(self):
        prob = make_problem(n=64, p=1, q=2, seed=4)
        Xt, rep = solve_tsylv_krylov(prob, zero_pair(64),
                                     1e-14 * prob.c_norm(), m_max=1)
        assert Xt is None
        assert not rep.converged
        assert "m_max" in rep.message
        assert len(rep.residuals) == 1

    def test_zero_rhs_short_circuits(self):
        n = 12
        prob = LowRankTRiccatiProblem(
            A=-np.eye(n), D=2.0 * np.eye(n),
            B1=np.ones((n, 1)), B2=np.ones((n, 1)),
            C1=np.zeros((1, n)), C2=np.zeros((1, n)))
        Xt, rep = solve_tsylv_krylov(prob, zero_pair(n), 1e-10)
        assert rep.converged and rep.iterations == 0
        assert Xt.rank == 0


class TestBreakdown:
    def test_degenerate_w_image_raises(self):
        # Ahat^T collapses the space onto one direction: W cannot be built
        n = 12
        d = np.ones(n); d[1:] = 1e-16
        prob = LowRankTRiccatiProblem(
            A=np.diag(d), D=np.diag(2.0 + np.arange(n, dtype=float)),
            B1=np.zeros((n, 1)), B2=np.zeros((n, 1)),
            C1=rng.random((2, n)), C2=rng.random((2, n)))
        with pytest.raises(BasisBreakdownError):
            solve_tsylv_krylov(prob, zero_pair(n), 1e-10 * prob.c_norm())


class TestEngineDirect:
    def test_module_level_residual_norm(self):
        prob = make_problem(n=30, p=1, q=1, seed=8)
        X = zero_pair(30)
        alpha = X.P1.T @ prob.B1
        beta = X.P1.T @ prob.B2
        rhs1 = np.hstack([prob.C1.T, X.P2 @ alpha])
        rhs2 = np.hstack([prob.C2.T, X.P2 @ beta])
        _, _, dhat, ahat = prob.shifted_coefficients(X)
        H = np.hstack([prob.C1.T, prob.C2.T, X.P2 @ alpha, X.P2 @ beta])
        eng = ExtendedKrylovTSylv(dhat, ahat, H, rhs1, rhs2)
        eng.stage()
        Y = eng.solve_reduced()
        assert residual_norm(eng, Y) == eng.residual_norm(Y)
        # extract truncates: tiny singular values of Y dropped
        pair = eng.extract(Y, trunc_tol=1e-10)
        assert pair.rank <= Y.shape[1]
