"""Dual-based semi-proximal ADMM (with zero proximal terms) as a first-order baseline.

Iteration, for the same dual problem as the ALM solver:

    y  <- solve (I/sigma + A A^T) y = -b/sigma - A (z - x/sigma)
    z  <- w - prox_p(w),   w = x/sigma - A^T y
    x  <- x - tau * sigma * (A^T y + z)
"""
import math
import time
from dataclasses import dataclass, asdict

import numpy as np
from scipy import linalg

from .model import (PrimalDualPoint, SolveReport, dual_objective, nnz_estimate,
                    primal_objective)
from .prox import prox_p


@dataclass
class AdmmParams:
    sigma0: float = None
    tol: float = 1e-6
    max_iters: int = 10000
    tau: float = 1.618
    sigma_tuning: bool = True
    tune_every: int = 50
    tune_ratio: float = 5.0
    tune_factor: float = 2.0
    sigma_min: float = 1e-6
    sigma_max: float = 1e6

    def __post_init__(self):
        if not 0 < self.tau < (1 + math.sqrt(5)) / 2:
            raise ValueError("tau must lie in (0, (1 + sqrt 5)/2)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def initial_sigma(self, prob):
        if self.sigma0 is not None:
            return float(self.sigma0)
        return max(1.0, float(np.linalg.norm(prob.b)) / math.sqrt(prob.m))


class CholeskyCache:
    """Cholesky factor of ``I/sigma + A A^T``, refreshed only when ``sigma`` changes."""

    def __init__(self, A):
        self.gram = A.gram()
        self.sigma = None
        self.factor = None
        self.factorizations = 0

    def solve(self, rhs):
        return linalg.cho_solve(self.factor, rhs, check_finite=False)


def refactorize_on_sigma_change(cache: CholeskyCache, sigma):
    if cache.sigma == sigma and cache.factor is not None:
        return cache
    mat = cache.gram.copy()
    mat[np.diag_indices_from(mat)] += 1.0 / sigma
    try:
        cache.factor = linalg.cho_factor(mat, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise FloatingPointError("Cholesky factorization of I/sigma + A A^T failed") from exc
    cache.sigma = sigma
    cache.factorizations += 1
    return cache


def tune_sigma(sigma, feas, kkt, params: AdmmParams):
    """Balance dual feasibility ``feas`` against the primal residual ``kkt``."""
    if feas > params.tune_ratio * kkt:
        sigma *= params.tune_factor
    elif kkt > params.tune_ratio * feas:
        sigma /= params.tune_factor
    return min(max(sigma, params.sigma_min), params.sigma_max)


def admm_step(prob, cache, pt: PrimalDualPoint, sigma, tau):
    """One sweep; returns the new point (the input is not modified)."""
    A, b = prob.A, prob.b
    x, z = pt.x, pt.z
    y = cache.solve(-b / sigma - A.matvec(z - x / sigma))
    w = x / sigma - A.rmatvec(y)
    P = prox_p(prob, w)
    z = w - P
    x_new = x - tau * sigma * (A.rmatvec(y) + z)
    return PrimalDualPoint(x_new, y, z)


def admm_solve(prob, params: AdmmParams = None, start: PrimalDualPoint = None, callback=None):
    """Run the ADMM baseline until ``max(eta_gap, eta_dual) < tol`` or ``max_iters``.

    ``callback(record, point)`` is invoked after each iteration when given.
    """
    params = params or AdmmParams()
    t0 = time.perf_counter()
    pt = start.copy() if start is not None else PrimalDualPoint.zeros(prob)
    sigma = params.initial_sigma(prob)
    cache = refactorize_on_sigma_change(CholeskyCache(prob.A), sigma)
    bnorm = float(np.linalg.norm(prob.b))

    converged = False
    eta_gap = eta_dual = math.inf
    pobj = dobj = math.nan
    it = 0
    for it in range(1, params.max_iters + 1):
        pt = admm_step(prob, cache, pt, sigma, params.tau)
        ATy = prob.A.rmatvec(pt.y)
        pobj = primal_objective(prob, pt.x)
        dobj = dual_objective(prob, pt.y)
        eta_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        eta_dual = float(np.linalg.norm(ATy + pt.z) / (1 + np.linalg.norm(pt.z)))
        if callback is not None:
            callback({"iter": it, "sigma": sigma, "eta_gap": eta_gap, "eta_dual": eta_dual,
                      "pobj": pobj, "dobj": dobj}, pt)
        if max(eta_gap, eta_dual) < params.tol:
            converged = True
            break
        if params.sigma_tuning and it % params.tune_every == 0:
            kkt = float(np.linalg.norm(prob.A.matvec(pt.x) - pt.y - prob.b)) / (1 + bnorm)
            sigma = tune_sigma(sigma, eta_dual, kkt, params)
            refactorize_on_sigma_change(cache, sigma)

    report = SolveReport(
        pobj=pobj, dobj=dobj, eta_gap=eta_gap, eta_dual=eta_dual, nnz=nnz_estimate(pt.x),
        outer_iters=it, inner_iters=0, wall_seconds=time.perf_counter() - t0,
        solver_name="admm", converged=converged,
        config={"solver": "admm", **asdict(params), "sigma0_resolved": params.initial_sigma(prob),
                "factorizations": cache.factorizations},
    )
    return pt, report
