"""Dense linear-algebra substrate: orderings, Kronecker forms, M-matrix tests.

Conventions
-----------
vec(.) stacks columns (column-major, Fortran order).  Under that convention

    commutation_matrix(n) @ vec(X) == vec(X.T)

and the matrix of the linear map X -> D X + X^T A acting on vec(X) is

    kron(I, D) + kron(A.T, I) @ commutation_matrix(n).

All elementwise comparisons in this package go through ``elementwise_leq``
with an explicit tolerance so that order-theoretic statements stay testable
in floating point.
"""

import warnings

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, SingularOperatorError

__all__ = [
    "MatrixClass",
    "elementwise_leq",
    "commutation_matrix",
    "tsylv_kron_matrix",
    "tsylv_kron_sparse",
    "classify_m_matrix",
    "tsylv_oracle_solve",
    "spectral_radius",
    "default_order_tol",
]


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("%s must be square, got shape %r" % (name, M.shape))
    return M


def default_order_tol(*mats):
    """Default tolerance for elementwise order tests: 1e-12 * max(1, scale)."""
    scale = 1.0
    for M in mats:
        if sp.issparse(M):
            nrm = spla.norm(M)
        else:
            nrm = np.linalg.norm(np.asarray(M, dtype=float))
        scale = max(scale, nrm)
    return 1e-12 * scale


def elementwise_leq(M, N, tol=None):
    """True if M <= N holds entrywise within tol.

    tol=None picks ``default_order_tol(M, N)``.  The comparison is
    M[i,j] <= N[i,j] + tol for every entry.
    """
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    if M.shape != N.shape:
        raise ValueError("shape mismatch %r vs %r" % (M.shape, N.shape))
    if tol is None:
        tol = default_order_tol(M, N)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if M.size == 0:
        return True
    return bool(np.all(N - M >= -tol))


def commutation_matrix(n):
    """Permutation K with K @ vec(X) = vec(X.T) for n-by-n X (column-major vec).

    K is its own inverse and its own transpose composed with itself:
    K @ K = I.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    idx = np.arange(n * n)
    i = idx % n
    j = idx // n
    K = np.zeros((n * n, n * n))
    K[idx, j + i * n] = 1.0
    return K


def _commutation_sparse(n):
    idx = np.arange(n * n)
    i = idx % n
    j = idx // n
    return sp.csr_matrix(
        (np.ones(n * n), (idx, j + i * n)), shape=(n * n, n * n)
    )


def tsylv_kron_matrix(D, A):
    """Dense matrix of X -> D X + X^T A on column-major vec(X).

    The result is n^2-by-n^2; intended for desk-scale verification only.
    """
    D = _as_square(D, "D")
    A = _as_square(A, "A")
    if D.shape != A.shape:
        raise ValueError("D and A must have the same shape")
    n = D.shape[0]
    return np.kron(np.eye(n), D) + np.kron(A.T, np.eye(n)) @ commutation_matrix(n)


def tsylv_kron_sparse(D, A):
    """Sparse twin of ``tsylv_kron_matrix`` (n^3-scale storage, not n^4)."""
    D = sp.csr_matrix(D) if not sp.issparse(D) else D.tocsr()
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    if D.shape[0] != D.shape[1] or D.shape != A.shape:
        raise ValueError("D and A must be square with matching shapes")
    n = D.shape[0]
    I = sp.identity(n, format="csr")
    return (sp.kron(I, D, format="csr")
            + sp.kron(A.T, I, format="csr") @ _commutation_sparse(n))


@dataclass
class MatrixClass:
    """Result of the Z-matrix / nonsingular M-matrix classification.

    certificate holds a vector v >= 0 with M v > 0 when one was computed;
    (s, rho_n) always record the splitting M = s I - N and the spectral
    radius estimate of N >= 0 that decided the test.
    """

    is_z_matrix: bool
    is_nonsingular_m_matrix: bool
    certificate: np.ndarray | None
    s: float
    rho_n: float


def _power_radius_nonneg(N, matvec, n, tol=1e-8, max_iter=10000):
    """Spectral radius of an (entrywise) nonnegative operator by power iteration.

    Returns (rho, converged).  Stagnation of the norm-ratio estimate over a
    few consecutive steps is the convergence test.
    """
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    stable = 0
    for _ in range(max_iter):
        w = matvec(v)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0, True
        if abs(nrm - lam) <= tol * max(nrm, 1e-300):
            stable += 1
            if stable >= 3:
                return nrm, True
        else:
            stable = 0
        lam = nrm
        v = w / nrm
    return lam, False


def classify_m_matrix(M, tol=None):
    """Classify a square matrix as Z-matrix / nonsingular M-matrix.

    Writes M = s I - N with s = max(diag) + 1 so that N >= 0 whenever M is
    a Z-matrix, then decides by comparing the spectral radius of N with s.
    For dense inputs of moderate size the power iteration falls back to a
    full eigensolve when it stagnates or lands near the boundary, and a
    certificate vector v = M^{-1} 1 (>= 0, with M v = 1 > 0) is attached.
    Sparse inputs are classified by the same splitting with matvec-only
    iterations and carry the (s, rho) evidence instead of a vector.
    """
    sparse = sp.issparse(M)
    if sparse:
        M = M.tocsr()
        if M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        n = M.shape[0]
        diag = M.diagonal()
        if tol is None:
            tol = 1e-12 * max(1.0, spla.norm(M))
        off = M - sp.diags(diag)
        off_max = off.data.max() if off.nnz else 0.0
    else:
        M = _as_square(M)
        n = M.shape[0]
        diag = np.diag(M).copy()
        if tol is None:
            tol = default_order_tol(M)
        off = M - np.diag(diag)
        off_max = off.max() if n else 0.0

    s = float(diag.max()) + 1.0 if n else 1.0
    is_z = bool(off_max <= tol)
    if not is_z or n == 0:
        return MatrixClass(is_z, False, None, s, np.nan)

    if sparse:
        N = sp.diags(np.full(n, s)) - M
        rho, ok = _power_radius_nonneg(N, N.dot, n)
        if not ok or abs(s - rho) <= 1e-6 * s:
            # near the boundary: sharpen with an Arnoldi eigensolve
            try:
                vals = spla.eigs(N, k=1, which="LM", v0=np.ones(n),
                                 return_eigenvectors=False, maxiter=5000)
                rho = float(np.max(np.abs(vals)))
            except Exception:
                if not ok:
                    raise ConvergenceError(
                        "spectral-radius iteration for the M-matrix test "
                        "did not converge") from None
    else:
        N = s * np.eye(n) - M
        rho, ok = _power_radius_nonneg(N, N.dot, n)
        if not ok or abs(s - rho) <= 1e-6 * s:
            rho = float(np.max(np.abs(np.linalg.eigvals(N))))

    is_m = bool(rho < s)
    cert = None
    if is_m and not sparse and n <= 2000:
        try:
            v = scipy.linalg.solve(M, np.ones(n))
        except scipy.linalg.LinAlgError:
            v = None
        if v is not None and np.all(v >= -tol) and np.all(M @ v > 0):
            cert = v
    return MatrixClass(True, is_m, cert, s, float(rho))


def tsylv_oracle_solve(D, A, rhs, cap=200):
    """Solve D X + X^T A = rhs by brute force on the n^2-by-n^2 system.

    Reference oracle for cross-checking structured solvers; refuses
    dimensions above ``cap`` rather than thrash memory.
    """
    D = _as_square(D, "D")
    A = _as_square(A, "A")
    rhs = _as_square(rhs, "rhs")
    n = D.shape[0]
    if not (D.shape == A.shape == rhs.shape):
        raise ValueError("D, A, rhs must share one square shape")
    if n > cap:
        raise ValueError("oracle refuses n=%d > cap=%d" % (n, cap))
    b = rhs.flatten(order="F")
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if n <= 40:
            K = tsylv_kron_matrix(D, A)
            try:
                x = scipy.linalg.solve(K, b)
            except scipy.linalg.LinAlgError as e:
                raise SingularOperatorError("oracle system is singular: %s" % e)
        else:
            K = tsylv_kron_sparse(D, A).tocsc()
            x = spla.spsolve(K, b)
        if not np.all(np.isfinite(x)):
            raise SingularOperatorError("oracle system is singular")
        kx = K @ x
    bn = np.linalg.norm(b)
    resid = np.linalg.norm(kx - b)
    # NaN-proof comparison: anything not provably small counts as singular
    if bn > 0 and not resid <= 1e-8 * bn:
        raise SingularOperatorError(
            "oracle solve inaccurate; operator is near singular",
            rcond=resid / bn)
    return x.reshape((n, n), order="F")


def spectral_radius(M, tol=1e-8, max_iter=10000):
    """Spectral radius of M.

    Dense inputs use a full eigensolve (the iteration tolerance is then
    irrelevant).  Sparse nonnegative inputs use the power iteration, which
    is exact for them in the limit; general sparse inputs go through an
    Arnoldi largest-magnitude eigensolve with a deterministic start.
    """
    if sp.issparse(M):
        M = M.tocsr()
        if M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        n = M.shape[0]
        if M.nnz == 0:
            return 0.0
        if np.all(M.data >= 0):
            rho, ok = _power_radius_nonneg(M, M.dot, n, tol=tol,
                                           max_iter=max_iter)
            if ok:
                return rho
        try:
            vals = spla.eigs(M, k=1, which="LM", v0=np.ones(n),
                             return_eigenvectors=False, maxiter=max_iter)
            return float(np.max(np.abs(vals)))
        except Exception as e:
            raise ConvergenceError("spectral radius estimate failed: %s" % e)
    M = _as_square(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))
