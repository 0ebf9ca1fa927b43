"""Linear systems ``(I + sigma A M A^T) d = rhs`` arising in the Newton steps.

Only the columns of ``A`` belonging to active coordinates enter ``A M A^T``:

    A M A^T = sum_l alpha_l A_l A_l^T + beta_l (A_l s_l)(A_l s_l)^T,

so with ``D = [A_J * sqrt(sigma alpha), A_l s_l * sqrt(sigma beta)]`` the
operator equals ``I + D D^T``. Three strategies solve it: a dense Cholesky
factorization of the ``m x m`` matrix, a Sherman-Morrison-Woodbury solve
that factors the small ``(r + r2) x (r + r2)`` matrix ``I + D^T D``, and
diagonally preconditioned CG using only products with ``D``.
"""
from enum import Enum

import numpy as np
from scipy import linalg

from .jacobian import ProxDerivativeInfo


class Strategy(str, Enum):
    DENSE = "dense"
    WOODBURY = "woodbury"
    PCG = "pcg"
    AUTO = "auto"


def choose_strategy(m, k):
    """Pick a solver for ``m`` rows and ``k = r + r2`` low-rank columns."""
    if k <= m / 4 and k <= 4000:
        return Strategy.WOODBURY
    if m <= 4000:
        return Strategy.DENSE
    return Strategy.PCG


class NewtonSystem:
    """The operator ``V = I + sigma A M A^T`` with a strategy-specific factorization."""

    def __init__(self, A, sigma, info: ProxDerivativeInfo, strategy=Strategy.AUTO):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)
        self.info = info
        self.m = A.m
        self.A_act = A.columns(info.active_idx) if info.r else np.zeros((A.m, 0))

        # A_l s_l for each active group, summed over the group's columns
        if info.r:
            self.As = np.add.reduceat(self.A_act * info.s, info.active_ptr[:-1], axis=1)
        else:
            self.As = np.zeros((A.m, 0))
        # rank-one terms vanish when lambda2 = 0
        keep = info.beta > 0
        with np.errstate(invalid="ignore", over="ignore"):
            col_b = self.A_act * np.sqrt(self.sigma * info.alpha)
            col_c = self.As[:, keep] * np.sqrt(self.sigma * info.beta[keep])
        self.D = np.hstack([col_b, col_c])
        if not np.all(np.isfinite(self.D)):
            raise FloatingPointError("non-finite entries in the Newton system")

        k = self.D.shape[1]
        strategy = Strategy(strategy)
        if strategy is Strategy.AUTO:
            strategy = choose_strategy(self.m, k)
        self.strategy = strategy
        self._factor = None
        if k == 0:
            return
        if strategy is Strategy.DENSE:
            V = self.D @ self.D.T
            V[np.diag_indices_from(V)] += 1.0
            self._factor = linalg.cho_factor(V, lower=True, check_finite=False)
        elif strategy is Strategy.WOODBURY:
            K = self.D.T @ self.D
            K[np.diag_indices_from(K)] += 1.0
            self._factor = linalg.cho_factor(K, lower=True, check_finite=False)
        else:
            self._diag = 1.0 + np.einsum("ij,ij->i", self.D, self.D)

    @property
    def rank(self):
        return self.D.shape[1]

    def amat(self):
        """Dense ``A M A^T`` assembled from the active blocks."""
        info = self.info
        out = (self.A_act * info.alpha) @ self.A_act.T
        out += (self.As * info.beta) @ self.As.T
        return out

    def apply(self, h):
        """``V @ h`` in ``O(m (r + r2))`` operations."""
        h = np.asarray(h, dtype=float)
        if self.rank == 0:
            return h.copy()
        return h + self.D @ (self.D.T @ h)

    def solve(self, rhs, tol=1e-12, max_iters=None):
        """Solve ``V d = rhs``.

        Returns
        -------
        d : ndarray
        residual_norm : float
            ``||V d - rhs||`` recomputed from ``d``.
        converged : bool
            Whether the residual meets ``tol``; direct strategies are reported
            converged regardless, since their residual is at rounding level.
        """
        rhs = np.asarray(rhs, dtype=float)
        if self.rank == 0:
            return rhs.copy(), 0.0, True
        if self.strategy is Strategy.DENSE:
            d = linalg.cho_solve(self._factor, rhs, check_finite=False)
        elif self.strategy is Strategy.WOODBURY:
            t = linalg.cho_solve(self._factor, self.D.T @ rhs, check_finite=False)
            d = rhs - self.D @ t
        else:
            d, ok = pcg(self.apply, rhs, 1.0 / self._diag, tol,
                        max_iters if max_iters is not None else max(50, 2 * self.m))
            res = float(np.linalg.norm(self.apply(d) - rhs))
            return d, res, ok
        res = float(np.linalg.norm(self.apply(d) - rhs))
        return d, res, True


def build_structured(A, sigma, info, strategy=Strategy.AUTO):
    return NewtonSystem(A, sigma, info, strategy)


def apply_V(system: NewtonSystem, h):
    return system.apply(h)


def pcg(apply, rhs, inv_diag, tol, max_iters):
    """Preconditioned CG for an SPD operator.

    Returns ``(x, converged)``; without convergence ``x`` is the iterate with
    the smallest residual seen.
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rnorm = float(np.linalg.norm(r))
    if rnorm <= tol:
        return x, True
    best, best_norm = x.copy(), rnorm
    zv = inv_diag * r
    p = zv.copy()
    rz = r @ zv
    for _ in range(max_iters):
        Ap = apply(p)
        step = rz / (p @ Ap)
        x += step * p
        r -= step * Ap
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol:
            return x, True
        if rnorm < best_norm:
            best, best_norm = x.copy(), rnorm
        zv = inv_diag * r
        rz_new = r @ zv
        p = zv + (rz_new / rz) * p
        rz = rz_new
    return best, False
