"""Semismooth Newton method for the inner subproblem of the augmented Lagrangian loop.

For fixed ``sigma`` and ``x_tilde`` the inner problem minimizes over ``y``

    psi(y) = <b, y> + 1/2 ||y||^2 + sigma/2 ||prox_p(w)||^2 - ||x_tilde||^2 / (2 sigma),
    w = x_tilde / sigma - A^T y,

which is strongly convex and once continuously differentiable with
``grad psi(y) = b + y - sigma A prox_p(w)``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .jacobian import derivative_info
from .newton_system import NewtonSystem, Strategy
from .prox import prox_p

logger = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """Raised when the line search cannot make progress from a non-stationary point."""


@dataclass
class SsnParams:
    mu: float = 1e-4
    eta_bar: float = 0.1
    tau: float = 0.5
    delta: float = 0.5
    grad_tol: float = 1e-6
    max_iters: int = 200
    max_backtracks: int = 50
    strategy: str = "auto"

    def __post_init__(self):
        if not 0 < self.mu < 0.5:
            raise ValueError("mu must lie in (0, 1/2)")
        if not 0 < self.eta_bar < 1:
            raise ValueError("eta_bar must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class SsnResult:
    y: np.ndarray
    grad_norm: float
    iters: int
    converged: bool
    prox: np.ndarray  # prox_p(w) at the returned y
    grad_history: list = field(default_factory=list)
    backtracks: int = 0
    fallbacks: int = 0
    stalled: bool = False

    def __iter__(self):
        return iter((self.y, self.grad_norm, self.iters))


def _w(prob, sigma, x_tilde, y):
    return x_tilde / sigma - prob.A.rmatvec(y)


def psi_value(prob, sigma, x_tilde, y):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    P = prox_p(prob, _w(prob, sigma, x_tilde, y))
    return (float(prob.b @ y) + 0.5 * float(y @ y) + 0.5 * sigma * float(P @ P)
            - float(x_tilde @ x_tilde) / (2 * sigma))


def psi_grad(prob, sigma, x_tilde, y):
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    P = prox_p(prob, _w(prob, sigma, x_tilde, y))
    return prob.b + y - sigma * prob.A.matvec(P)


class _Subproblem:
    """Caches ``w`` and ``prox_p(w)`` at the current point."""

    def __init__(self, prob, sigma, x_tilde):
        self.prob = prob
        self.sigma = sigma
        self.x_tilde = x_tilde

    def at(self, y):
        w = _w(self.prob, self.sigma, self.x_tilde, y)
        P = prox_p(self.prob, w)
        grad = self.prob.b + y - self.sigma * self.prob.A.matvec(P)
        return w, P, grad

    def change(self, y, w, P, grad, d, step, ATd):
        """``psi(y + step d) - psi(y)`` without cancellation between large terms.

        With ``z = w - prox_p(w)`` the change equals
        ``step <grad, d> + step^2/2 ||d||^2 - sigma <P, z_new - z> + sigma/2 ||P_new - P||^2``,
        every term of which is small near the minimizer. Returns the change and
        the trial prox.
        """
        w_new = w - step * ATd
        P_new = prox_p(self.prob, w_new)
        dz = (w_new - P_new) - (w - P)
        dP = P_new - P
        out = (step * float(grad @ d) + 0.5 * step**2 * float(d @ d)
               - self.sigma * float(P @ dz) + 0.5 * self.sigma * float(dP @ dP))
        return out, P_new


def ssn_minimize(prob, sigma, x_tilde, y0, params: SsnParams = None, callback=None) -> SsnResult:
    """Minimize ``psi`` by semismooth Newton steps with Armijo backtracking.

    Each iteration builds the Jacobian element at ``w = x_tilde/sigma - A^T y``,
    solves ``(I + sigma A M A^T) d = -grad`` to residual
    ``min(eta_bar, ||grad||^(1 + tau))`` and backtracks with factor ``delta``.
    """
    params = params or SsnParams()
    sub = _Subproblem(prob, sigma, np.asarray(x_tilde, dtype=float))
    y = np.array(y0, dtype=float)
    w, P, grad = sub.at(y)
    gnorm = float(np.linalg.norm(grad))
    history = [gnorm]
    total_bt = fallbacks = 0
    eps = np.finfo(float).eps
    colnorms = prob.A.column_norms()

    def grad_noise():
        # rounding level of the computed gradient
        on = P != 0
        spread = sigma * np.linalg.norm(colnorms[on] * w[on])
        return 4 * eps * (spread + np.linalg.norm(prob.b) + np.linalg.norm(y))

    j = 0
    stalled = False
    while gnorm > params.grad_tol and j < params.max_iters:
        if gnorm <= grad_noise():
            stalled = True
            break
        info = derivative_info(prob, w)
        system = NewtonSystem(prob.A, sigma, info, Strategy(params.strategy))
        lin_tol = min(params.eta_bar, gnorm ** (1 + params.tau))
        d, _, ok = system.solve(-grad, tol=lin_tol)
        if not ok or not float(grad @ d) < 0:
            d = -grad
            fallbacks += 1

        # rounding level of the computed change: prox_p(w) carries absolute
        # error ~ eps |w| on its support
        noise = 8 * eps * sigma * float(np.abs(P) @ np.abs(w))
        accepted = None
        only_noise = True
        for direction in (d, -grad):
            slope = float(grad @ direction)
            ATd = prob.A.rmatvec(direction)
            step = 1.0
            for _ in range(params.max_backtracks):
                change, _ = sub.change(y, w, P, grad, direction, step, ATd)
                target = params.mu * step * slope
                if change <= target:
                    accepted = (direction, step, None)
                    break
                if change <= target + noise + 8 * eps * abs(step * slope):
                    # decrease not resolvable in floating point; fall back to
                    # the gradient norm as merit
                    trial = sub.at(y + step * direction)
                    if np.linalg.norm(trial[2]) < gnorm:
                        accepted = (direction, step, trial)
                        break
                else:
                    only_noise = False
                step *= params.delta
                total_bt += 1
            if accepted is not None:
                break
            fallbacks += 1
            logger.debug("line search failed along Newton direction; retrying with -grad")
        if accepted is None:
            if only_noise:
                stalled = True
                break
            raise NumericalError(f"line search failed at ||grad psi|| = {gnorm:.3e}")

        direction, step, trial = accepted
        y = y + step * direction
        w, P, grad = trial if trial is not None else sub.at(y)
        gnorm = float(np.linalg.norm(grad))
        history.append(gnorm)
        j += 1
        if callback is not None:
            callback(j, y, gnorm, step, info)

    if stalled:
        logger.debug("semismooth Newton stalled at rounding level, ||grad|| = %.3e", gnorm)
    return SsnResult(y=y, grad_norm=gnorm, iters=j, converged=gnorm <= params.grad_tol,
                     prox=P, grad_history=history, backtracks=total_bt, fallbacks=fallbacks,
                     stalled=stalled)
