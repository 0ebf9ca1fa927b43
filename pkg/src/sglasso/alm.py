"""Inexact augmented Lagrangian method on the dual, with semismooth Newton inner solves.

The dual problem

    min_{y,z} <b, y> + 1/2 ||y||^2 + p*(z)   s.t.  A^T y + z = 0

is handled by an augmented Lagrangian loop whose multiplier is the primal
variable ``x``. Every outer iteration minimizes the inner function ``psi``
over ``y`` (see :mod:`sglasso.ssn`), then sets

    z = w - prox_p(w),   x_next = sigma * prox_p(w),   w = x / sigma - A^T y.
"""
import logging
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .model import (PrimalDualPoint, SolveReport, dual_objective, nnz_estimate,
                    primal_objective)
from .ssn import SsnParams, ssn_minimize

logger = logging.getLogger(__name__)


@dataclass
class AlmParams:
    """Settings of the outer loop.

    ``sigma0=None`` means ``max(1, ||b|| / sqrt(m))``. The inner tolerances are
    ``eps_k = eps_scale * eps_rate**k`` and
    ``delta_k = min(delta_cap, 1 / (k + 1)**2)``, both summable.
    """

    sigma0: Optional[float] = None
    sigma_growth: float = 3.0
    sigma_max: float = 1e6
    eps_scale: float = 1e-2
    eps_rate: float = 0.5
    delta_cap: float = 0.5
    tol: float = 1e-6
    max_outer: int = 200
    max_inner_total: int = 5000
    max_resumes: int = 3
    ssn: SsnParams = field(default_factory=SsnParams)

    def __post_init__(self):
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.sigma_growth <= 1:
            raise ValueError("sigma_growth must exceed 1")
        if self.sigma_max <= 0:
            raise ValueError("sigma_max must be positive")
        if not 0 < self.eps_rate < 1 or self.eps_scale <= 0:
            raise ValueError("eps sequence must be positive and summable")
        if not 0 <= self.delta_cap < 1:
            raise ValueError("delta_k must stay below 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def eps(self, k):
        return self.eps_scale * self.eps_rate**k

    def delta(self, k):
        return min(self.delta_cap, 1.0 / (k + 1) ** 2)

    def initial_sigma(self, prob):
        if self.sigma0 is not None:
            return float(self.sigma0)
        return max(1.0, float(np.linalg.norm(prob.b)) / math.sqrt(prob.m))

    def to_dict(self):
        d = asdict(self)
        d["sigma_max"] = self.sigma_max if math.isfinite(self.sigma_max) else "inf"
        return d


def sigma_update(k, params: AlmParams, sigma, progress=None):
    """Next penalty: geometric growth capped at ``sigma_max``.

    ``progress`` (primal/dual residual pair) is accepted for interface
    symmetry with adaptive rules; the geometric rule ignores it.
    """
    return min(params.sigma_max, params.sigma_growth * sigma)


def alm_solve(prob, params: AlmParams = None, start: PrimalDualPoint = None,
              callback: Optional[Callable] = None):
    """Solve the sparse group Lasso problem.

    Parameters
    ----------
    prob : SglProblem
    params : AlmParams, optional
    start : PrimalDualPoint, optional
        Warm start; zeros by default.
    callback : callable, optional
        Called as ``callback(record, point)`` after every outer iteration,
        where ``record`` is a JSON-serializable dict and ``point`` the current
        :class:`PrimalDualPoint`.

    Returns
    -------
    point : PrimalDualPoint
    report : SolveReport
    """
    params = params or AlmParams()
    t0 = time.perf_counter()
    pt = start.copy() if start is not None else PrimalDualPoint.zeros(prob)
    x, y = pt.x, pt.y
    z = pt.z
    sigma = params.initial_sigma(prob)
    inner_total = 0
    converged = False
    eta_gap = eta_dual = math.inf
    pobj = dobj = math.nan
    bnorm = float(np.linalg.norm(prob.b))
    k = 0

    for k in range(params.max_outer):
        budget = params.max_inner_total - inner_total
        if budget <= 0:
            break
        tol_in = params.eps(k) / math.sqrt(sigma)
        ssn_params = _with(params.ssn, grad_tol=tol_in, max_iters=min(params.ssn.max_iters, budget))
        res = ssn_minimize(prob, sigma, x, y, ssn_params)
        inner = res.iters
        grad_hist = list(res.grad_history)

        # relative inner test: ||grad|| <= delta_k / sqrt(sigma) * ||x_next - x||
        for _ in range(params.max_resumes):
            x_next = sigma * res.prox
            bound = params.delta(k) / math.sqrt(sigma) * float(np.linalg.norm(x_next - x))
            bound = max(bound, 1e-13 * (1.0 + bnorm))
            if res.grad_norm <= bound or res.stalled or inner >= budget:
                break
            res = ssn_minimize(prob, sigma, x, res.y,
                               _with(ssn_params, grad_tol=bound, max_iters=budget - inner))
            inner += res.iters
            grad_hist.extend(res.grad_history[1:])
        else:
            x_next = sigma * res.prox
            bound = params.delta(k) / math.sqrt(sigma) * float(np.linalg.norm(x_next - x))
            if res.grad_norm > max(bound, 1e-13 * (1.0 + bnorm)) and not res.stalled:
                logger.warning("outer iteration %d: accepting inner solution above the "
                               "relative tolerance (%.2e > %.2e)", k, res.grad_norm, bound)
        inner_total += inner

        y = res.y
        w = x / sigma - prob.A.rmatvec(y)
        z = w - res.prox
        x_next = sigma * res.prox

        pobj = primal_objective(prob, x_next)
        dobj = dual_objective(prob, y)
        eta_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        eta_dual = float(np.linalg.norm(prob.A.rmatvec(y) + z) / (1 + np.linalg.norm(z)))

        record = {
            "iter": k, "sigma": sigma, "grad_norm": res.grad_norm, "inner_iters": inner,
            "eta_gap": eta_gap, "eta_dual": eta_dual, "pobj": pobj, "dobj": dobj,
            "inner_grad_history": grad_hist,
        }
        x_prev = x
        x = x_next
        if callback is not None:
            callback(record, PrimalDualPoint(x.copy(), y.copy(), z.copy()))
        logger.debug("alm %3d sigma=%.2e inner=%d eta_g=%.2e eta_d=%.2e",
                     k, sigma, inner, eta_gap, eta_dual)
        if max(eta_gap, eta_dual) < params.tol:
            converged = True
            break
        sigma = sigma_update(k, params, sigma, (eta_dual, float(np.linalg.norm(x - x_prev))))

    wall = time.perf_counter() - t0
    report = SolveReport(
        pobj=pobj, dobj=dobj, eta_gap=eta_gap, eta_dual=eta_dual, nnz=nnz_estimate(x),
        outer_iters=k + 1, inner_iters=inner_total, wall_seconds=wall,
        solver_name="ssnal", converged=converged,
        config={"solver": "ssnal", **params.to_dict(), "sigma0_resolved": params.initial_sigma(prob)},
    )
    return PrimalDualPoint(x, y, z), report


def _with(ssn: SsnParams, **changes):
    d = asdict(ssn)
    d.update(changes)
    return SsnParams(**d)
