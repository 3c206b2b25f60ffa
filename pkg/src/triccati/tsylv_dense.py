"""Direct dense solver for the T-Sylvester equation  D X + X^T A = E.

Method: generalized real Schur (QZ) reduction of the pair (D, A^T),

    D = Q R Z^T,   A^T = Q L Z^T,

with R quasi upper triangular (1x1 / 2x2 diagonal blocks) and L upper
triangular.  Substituting Y = Z^T X Q turns the equation into

    R Y + Y^T L^T = Q^T E Q,

which couples the (I, J) and (J, I) blocks of Y pairwise and is solved by
back-substitution over block pairs in decreasing index order.  Each pair
yields a small linear system (at most 8 unknowns) assembled with Kronecker
identities; everything stays in real arithmetic.

The solver re-evaluates the residual of the returned X and tracks the
smallest reciprocal condition number seen among the small systems; a value
below ``rcond_limit`` raises :class:`SingularOperatorError`.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularOperatorError

__all__ = ["TSylvInfo", "TSylvSolver", "solve_tsylv_dense", "solve_tsylv_shifted"]


@dataclass
class TSylvInfo:
    relative_residual: float
    rcond_estimate: float


def _small_commutation(m, n):
    # K @ vec(M) = vec(M.T) for m-by-n M, column-major vec
    idx = np.arange(m * n)
    i = idx % m
    j = idx // m
    K = np.zeros((m * n, m * n))
    K[j + i * n, idx] = 1.0
    return K


def _quasi_blocks(R):
    # diagonal block partition of a quasi upper triangular matrix
    n = R.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and R[i + 1, i] != 0.0:
            blocks.append((i, i + 2))
            i += 2
        else:
            blocks.append((i, i + 1))
            i += 1
    return blocks


class TSylvSolver:
    """Factor the operator X -> D X + X^T A once, then solve many right-hand sides."""

    def __init__(self, D, A, rcond_limit=1e-14):
        D = np.asarray(D, dtype=float)
        A = np.asarray(A, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("D must be square")
        if A.shape != D.shape:
            raise ValueError("A must match the shape of D")
        self.n = D.shape[0]
        self.D = D
        self.A = A
        self.rcond_limit = rcond_limit
        if self.n:
            R, L, Q, Z = scipy.linalg.qz(D, A.T, output="real")
            self.R, self.L, self.Q, self.Z = R, L, Q, Z
            self.blocks = _quasi_blocks(R)
        else:
            self.blocks = []

    def _solve_pair(self, i0, i1, j0, j1, Fij, Fji):
        R, L = self.R, self.L
        a = i1 - i0
        b = j1 - j0
        Rii = R[i0:i1, i0:i1]
        Ljj = L[j0:j1, j0:j1]
        if i0 == j0:
            if a == 1:
                # scalar diagonal pair
                den = Rii[0, 0] + Ljj[0, 0]
                scale = abs(Rii[0, 0]) + abs(Ljj[0, 0]) + 1e-300
                rcond = abs(den) / scale
                if rcond < self.rcond_limit:
                    raise SingularOperatorError(
                        "T-Sylvester operator is singular to working precision",
                        rcond=rcond)
                return Fij / den, None, rcond
            M = np.kron(np.eye(a), Rii) + np.kron(Ljj, np.eye(a)) @ _small_commutation(a, a)
            f = Fij.flatten(order="F")
            rcond = self._checked_rcond(M)
            y = scipy.linalg.solve(M, f)
            return y.reshape((a, a), order="F"), None, rcond
        Rjj = R[j0:j1, j0:j1]
        Lii = L[i0:i1, i0:i1]
        if a == 1 and b == 1:
            # 2x2 coupled system in closed form
            r1, r2 = Rii[0, 0], Rjj[0, 0]
            l1, l2 = Lii[0, 0], Ljj[0, 0]
            det = r1 * r2 - l1 * l2
            scale = r1 * r1 + r2 * r2 + l1 * l1 + l2 * l2 + 1e-300
            rcond = abs(det) / scale
            if rcond < self.rcond_limit:
                raise SingularOperatorError(
                    "T-Sylvester operator is singular to working precision",
                    rcond=rcond)
            f1 = Fij[0, 0]
            f2 = Fji[0, 0]
            return (np.array([[(f1 * r2 - l2 * f2) / det]]),
                    np.array([[(r1 * f2 - l1 * f1) / det]]), rcond)
        # general coupled pair, at most 8 unknowns
        M = np.block([
            [np.kron(np.eye(b), Rii),
             np.kron(Ljj, np.eye(a)) @ _small_commutation(b, a)],
            [np.kron(Lii, np.eye(b)) @ _small_commutation(a, b),
             np.kron(np.eye(a), Rjj)],
        ])
        f = np.concatenate([Fij.flatten(order="F"), Fji.flatten(order="F")])
        rcond = self._checked_rcond(M)
        y = scipy.linalg.solve(M, f)
        return (y[:a * b].reshape((a, b), order="F"),
                y[a * b:].reshape((b, a), order="F"), rcond)

    def _checked_rcond(self, M):
        sv = scipy.linalg.svdvals(M)
        rcond = float(sv[-1] / (sv[0] + 1e-300))
        if rcond < self.rcond_limit:
            raise SingularOperatorError(
                "T-Sylvester operator is singular to working precision",
                rcond=rcond)
        return rcond

    def solve(self, E, return_info=False):
        """Solve D X + X^T A = E.

        With return_info=True also returns :class:`TSylvInfo` carrying the
        re-evaluated relative residual and the smallest reciprocal condition
        estimate among the back-substitution systems.
        """
        E = np.asarray(E, dtype=float)
        if E.shape != (self.n, self.n):
            raise ValueError("right-hand side must be %d-by-%d" % (self.n, self.n))
        n = self.n
        if n == 0:
            X = np.zeros((0, 0))
            return (X, TSylvInfo(0.0, 1.0)) if return_info else X
        R, L = self.R, self.L
        F = self.Q.T @ E @ self.Q
        Y = np.zeros((n, n))
        min_rcond = 1.0
        blocks = self.blocks
        for bi in range(len(blocks) - 1, -1, -1):
            i0, i1 = blocks[bi]
            for bj in range(len(blocks) - 1, bi - 1, -1):
                j0, j1 = blocks[bj]
                Fij = (F[i0:i1, j0:j1]
                       - R[i0:i1, i1:] @ Y[i1:, j0:j1]
                       - (L[j0:j1, j1:] @ Y[j1:, i0:i1]).T)
                if bj == bi:
                    Yij, _, rcond = self._solve_pair(i0, i1, j0, j1, Fij, None)
                    Y[i0:i1, i0:i1] = Yij
                else:
                    Fji = (F[j0:j1, i0:i1]
                           - R[j0:j1, j1:] @ Y[j1:, i0:i1]
                           - (L[i0:i1, i1:] @ Y[i1:, j0:j1]).T)
                    Yij, Yji, rcond = self._solve_pair(i0, i1, j0, j1, Fij, Fji)
                    Y[i0:i1, j0:j1] = Yij
                    Y[j0:j1, i0:i1] = Yji
                min_rcond = min(min_rcond, rcond)
        X = self.Z @ Y @ self.Q.T
        if not return_info:
            return X
        en = np.linalg.norm(E)
        res = np.linalg.norm(self.D @ X + X.T @ self.A - E)
        rel = res / en if en > 0 else res
        return X, TSylvInfo(rel, min_rcond)


def solve_tsylv_dense(D, A, E, return_info=False, rcond_limit=1e-14):
    """One-shot solve of D X + X^T A = E via QZ reduction of (D, A^T)."""
    return TSylvSolver(D, A, rcond_limit=rcond_limit).solve(E, return_info=return_info)


def solve_tsylv_shifted(D, A, U1, U2, E, return_info=False, rcond_limit=1e-14):
    """Solve (D - U1) X + X^T (A - U2) = E.

    Convenience wrapper for the shifted pencils arising in Newton steps; the
    residual contract matches :func:`solve_tsylv_dense` on the shifted data.
    """
    D = np.asarray(D, dtype=float)
    A = np.asarray(A, dtype=float)
    U1 = np.asarray(U1, dtype=float)
    U2 = np.asarray(U2, dtype=float)
    return solve_tsylv_dense(D - U1, A - U2, E, return_info=return_info,
                             rcond_limit=rcond_limit)
