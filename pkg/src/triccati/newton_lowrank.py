"""Inexact Newton iteration for the quadratic matrix equation

    D X + X^T A - X^T B X + C = 0,   B = B1 B2^T,  C = C1^T C2,

working on factored iterates throughout.  Starting from X_0 = 0, each
sweep solves the Newton-step equation

    (D - X_k^T B) Xt + Xt^T (A - B X_k) = -C - X_k^T B X_k

only up to a relative tolerance eta_k (forcing sequence, default
1/(1+k^3) capped at eta_bar), by Krylov projection.  The update direction
S_k = Xt - X_k is damped by a step length chosen to minimize the exact
quartic

    ||R(X_k + lam*S_k)||_F^2 = ||(1-lam) R_k + lam L - lam^2 S_k^T B S_k||_F^2

over (0, theta_k], where L is the inner-solve residual and theta_k the
admissibility cap; every accepted step must shrink the residual norm by
the factor (1 - lam*alpha).  A step that fails the decrease test after
truncation is retried with halved lam a few times, then the run is
reported as Diverged.  Inner-solver failures (stagnation, basis
breakdown, singular projected equations) surface as InnerSolveFailed
reports carrying the full inner residual history.
"""

import time

import numpy as np

from dataclasses import dataclass

from .errors import ConvergenceError, InnerSolveError, SingularOperatorError
from .krylov import solve_tsylv_krylov
from .lowrank import (
    LowRankPair,
    lr_frobenius_norm,
    lr_inner_product,
    lr_quadratic_term,
    lr_riccati_residual,
    lr_step_and_Lresidual,
    lr_truncate,
    zero_pair,
)
from .reports import IterationRecord, SolveReport, Status
from .riccati_dense import LineSearchPoly, minimize_quartic

__all__ = [
    "InexactNewtonConfig",
    "default_eta_schedule",
    "compute_theta",
    "decrease_condition_check",
    "nonnegativity_monitor",
    "solve_inexact_newton",
]

_MAX_HALVINGS = 5


def default_eta_schedule(k):
    return 1.0 / (1.0 + k ** 3)


@dataclass
class InexactNewtonConfig:
    """Knobs for the outer iteration.

    eta_schedule maps the 0-based outer index to a forcing value; it is
    clamped into (0, eta_bar] before use.  rank_cap = None means
    4*(p+q)*m_max, the widest iterate the inner spaces could produce.
    force_sign_consistency is advisory metadata consumed by the problem
    generators (a factored C with mixed-sign product violates the
    nonnegativity theory); the iteration itself never alters C.
    """

    eps: float = 1e-6
    eta_bar: float = 0.5
    alpha: float = 0.1
    eta_schedule: object = None
    max_outer: int = 30
    m_max: int = 50
    trunc_tol: float = 1e-12
    force_sign_consistency: bool = True
    rank_cap: int = None

    def __post_init__(self):
        if not 0.0 < self.eta_bar < 1.0:
            raise ValueError("eta_bar must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0 - self.eta_bar:
            raise ValueError("alpha must lie in (0, 1 - eta_bar)")

    def eta(self, k):
        rule = self.eta_schedule or default_eta_schedule
        return min(max(float(rule(k)), 1e-15), self.eta_bar)


def compute_theta(alpha_k, delta_k, cfg):
    """Step-length cap; the full step is admitted when the quadratic term
    vanishes (or before the first residual exists)."""
    if alpha_k <= 0.0 or delta_k <= 0.0:
        return 1.0
    return min(1.0, (1.0 - cfg.alpha - cfg.eta_bar) * np.sqrt(alpha_k / delta_k))


def decrease_condition_check(res_old, res_new, lam, alpha):
    return res_new <= (1.0 - lam * alpha) * res_old * (1.0 + 1e-10)


def nonnegativity_monitor(X, sample=256, tol=1e-8, rng=None):
    """Entrywise X >= 0 check: dense below n = 200, sampled above.

    The iterates are only guaranteed nonnegative when the inner residuals
    are; this observes, it never enforces.
    """
    n = X.P1.shape[0]
    if n <= 200:
        if X.rank == 0:
            return True
        return bool(np.min(X.to_dense()) >= -tol)
    if X.rank == 0:
        return True
    if rng is None:
        rng = np.random.default_rng(0)
    rows = rng.integers(0, n, size=sample)
    cols = rng.integers(0, n, size=sample)
    vals = np.einsum("ij,ij->i", X.P1[rows], X.P2[cols])
    return bool(np.min(vals) >= -tol)


def _failure_row(k, res, rel, inner_its, rank, history):
    return IterationRecord(k=k, residual_norm=res, relative_residual=rel,
                           step_size=0.0, inner_iterations=inner_its,
                           iterate_rank=rank, inner_residuals=history)


def solve_inexact_newton(prob, cfg=None, keep_iterates=False):
    """Run the factored inexact Newton iteration; returns (X, SolveReport).

    Stops when ||R(X_k)||_F <= eps * ||C1^T C2||_F.  The report's
    memory_metric is the largest inner basis dimension built across all
    outer sweeps, and min_step_size the smallest accepted lam.
    """
    if cfg is None:
        cfg = InexactNewtonConfig()
    t0 = time.perf_counter()
    c_norm = prob.c_norm()
    stop = cfg.eps * c_norm
    cap = cfg.rank_cap
    if cap is None:
        cap = 4 * (prob.p + prob.q) * cfg.m_max

    X = zero_pair(prob.n)
    R = lr_riccati_residual(prob, X)
    res = lr_frobenius_norm(R)
    rel = res / c_norm if c_norm > 0.0 else res
    records = []
    warnings = []
    iterates = [X] if keep_iterates else None
    mem = 0
    min_lam = None

    def report(status):
        return SolveReport(
            status=status, iterations=records,
            wall_time=time.perf_counter() - t0,
            final_relative_residual=rel, rhs_norm=c_norm,
            memory_metric=mem, solution_rank=X.rank,
            min_step_size=min_lam, warnings=warnings, iterates=iterates)

    if res <= stop:
        records.append(IterationRecord(k=0, residual_norm=res,
                                       relative_residual=rel,
                                       iterate_rank=X.rank,
                                       nonnegative=True))
        return X, report(Status.CONVERGED)

    status = Status.MAX_ITERATIONS
    for k in range(cfg.max_outer):
        eta_k = cfg.eta(k)
        try:
            Xt, inner = solve_tsylv_krylov(prob, X, eta_k * res,
                                           m_max=cfg.m_max,
                                           trunc_tol=cfg.trunc_tol)
        except (InnerSolveError, SingularOperatorError) as e:
            history = list(getattr(e, "history", None) or [])
            records.append(_failure_row(k + 1, res, rel, len(history),
                                        X.rank, history))
            warnings.append("inner solve failed at sweep %d: %s" % (k + 1, e))
            status = Status.INNER_SOLVE_FAILED
            break
        mem = max(mem, inner.basis_dim)
        if Xt is None:
            records.append(_failure_row(k + 1, res, rel, inner.iterations,
                                        X.rank, list(inner.residuals)))
            warnings.append("inner solve stagnated at sweep %d: %s"
                            % (k + 1, inner.message))
            status = Status.INNER_SOLVE_FAILED
            break

        S, L = lr_step_and_Lresidual(prob, X, Xt)
        SBS = lr_quadratic_term(S, prob.B1, prob.B2)
        poly = LineSearchPoly(alpha_k=res * res,
                              beta_k=lr_inner_product(L, L),
                              gamma_k=lr_inner_product(R, L),
                              delta_k=lr_inner_product(SBS, SBS),
                              eps_k=lr_inner_product(R, SBS),
                              xi_k=lr_inner_product(L, SBS))
        theta = compute_theta(poly.alpha_k, poly.delta_k, cfg)
        lam = minimize_quartic(poly, theta)
        if abs(lam - 1.0) <= 1e-8:
            lam = 1.0

        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            cand = LowRankPair(np.hstack([X.P1, Xt.P1]),
                               np.hstack([(1.0 - lam) * X.P2, lam * Xt.P2]))
            Xn = lr_truncate(cand, tol=cfg.trunc_tol)
            Rn = lr_riccati_residual(prob, Xn)
            res_n = lr_frobenius_norm(Rn)
            if decrease_condition_check(res, res_n, lam, cfg.alpha):
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            records.append(_failure_row(k + 1, res, rel, inner.iterations,
                                        X.rank, list(inner.residuals)))
            warnings.append("step rejected at sweep %d: no decrease down to "
                            "lam = %.3e" % (k + 1, lam))
            status = Status.DIVERGED
            break
        if Xn.rank > cap:
            rel_n = res_n / c_norm if c_norm > 0.0 else res_n
            records.append(_failure_row(k + 1, res_n, rel_n, inner.iterations,
                                        Xn.rank, list(inner.residuals)))
            exc = ConvergenceError("iterate rank %d exceeds the configured "
                                   "cap %d" % (Xn.rank, cap))
            exc.records = list(records)
            raise exc

        X, R, res = Xn, Rn, res_n
        rel = res / c_norm if c_norm > 0.0 else res
        min_lam = lam if min_lam is None else min(min_lam, lam)
        records.append(IterationRecord(
            k=k + 1, residual_norm=res, relative_residual=rel,
            step_size=lam, inner_iterations=inner.iterations,
            iterate_rank=X.rank, inner_residuals=list(inner.residuals),
            nonnegative=nonnegativity_monitor(X)))
        if keep_iterates:
            iterates.append(X)
        if res <= stop:
            status = Status.CONVERGED
            break

    return X, report(status)
