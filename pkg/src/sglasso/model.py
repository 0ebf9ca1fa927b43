"""Problem data, objective values and accuracy measures for the sparse group Lasso.

The problem solved throughout the package is

    min_x  1/2 ||A x - b||^2 + lambda1 ||x||_1 + lambda2 sum_l w_l ||x_{G_l}||

with a non-overlapping partition ``G_1, ..., G_g`` of the coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy import sparse


class DesignMatrix:
    """Dense or compressed-sparse-column wrapper around the data matrix ``A``.

    Only the three operations the solvers need are exposed: ``A @ x``,
    ``A.T @ y`` and gathering a subset of columns as a dense block.
    """

    def __init__(self, data):
        if sparse.issparse(data):
            mat = sparse.csc_matrix(data, dtype=float)
            mat.sum_duplicates()
            mat.sort_indices()
            self._check_csc(mat)
            self._mat = mat
            self.is_sparse = True
        else:
            mat = np.ascontiguousarray(data, dtype=float)
            if mat.ndim != 2:
                raise ValueError("design matrix must be two dimensional")
            self._mat = mat
            self.is_sparse = False
        self.m, self.n = self._mat.shape
        self._colnorms = None
        if self.m < 1 or self.n < 1:
            raise ValueError("design matrix must have positive dimensions")

    @classmethod
    def from_csc(cls, indptr, indices, values, shape):
        """Build from raw CSC arrays (column pointers, row indices, values)."""
        mat = sparse.csc_matrix(
            (np.asarray(values, float), np.asarray(indices), np.asarray(indptr)),
            shape=shape,
        )
        cls._check_csc(mat)
        return cls(mat)

    @staticmethod
    def _check_csc(mat):
        m = mat.shape[0]
        indptr, indices = mat.indptr, mat.indices
        if np.any(np.diff(indptr) < 0) or indptr[-1] != len(indices):
            raise ValueError("column pointers must be nondecreasing and end at nnz")
        if len(indices) and (indices.min() < 0 or indices.max() >= m):
            raise ValueError("row index out of range")
        # a non-increase is only legal where a new column starts
        bad = np.diff(indices) <= 0
        starts = indptr[1:-1]
        bad[starts[(starts > 0) & (starts < len(indices))] - 1] = False
        if np.any(bad):
            j = int(np.searchsorted(indptr, np.flatnonzero(bad)[0] + 1, side="right")) - 1
            raise ValueError(f"row indices of column {j} are not strictly increasing")

    @property
    def shape(self):
        return (self.m, self.n)

    def matvec(self, x):
        return self._mat @ x

    def rmatvec(self, y):
        return self._mat.T @ y

    def columns(self, idx):
        """Dense ``m x len(idx)`` block of the requested columns."""
        block = self._mat[:, idx]
        if self.is_sparse:
            return block.toarray()
        return np.asarray(block)

    def column_norms(self):
        """Euclidean norm of every column (cached)."""
        if self._colnorms is None:
            if self.is_sparse:
                sq = np.asarray(self._mat.multiply(self._mat).sum(axis=0)).ravel()
            else:
                sq = np.einsum("ij,ij->j", self._mat, self._mat)
            self._colnorms = np.sqrt(sq)
        return self._colnorms

    def gram(self):
        """Dense ``A A^T``."""
        if self.is_sparse:
            return (self._mat @ self._mat.T).toarray()
        return self._mat @ self._mat.T

    def toarray(self):
        if self.is_sparse:
            return self._mat.toarray()
        return self._mat.copy()

    @property
    def raw(self):
        """Underlying numpy array or scipy CSC matrix (do not mutate)."""
        return self._mat


def as_design_matrix(A):
    return A if isinstance(A, DesignMatrix) else DesignMatrix(A)


class GroupPartition:
    """Non-overlapping partition of ``{0, ..., n-1}`` into groups with weights.

    Parameters
    ----------
    groups : sequence of index arrays
        The groups, 0-based. Must be disjoint and cover every coordinate.
    weights : array-like or {"sqrt", "one"}
        Per-group positive weights. ``"sqrt"`` gives ``sqrt(|G_l|)``.
    """

    def __init__(self, groups: Sequence, weights="sqrt"):
        groups = [np.asarray(G, dtype=np.intp).ravel() for G in groups]
        if not groups:
            raise ValueError("partition needs at least one group")
        if any(len(G) == 0 for G in groups):
            raise ValueError("empty group")
        n = sum(len(G) for G in groups)
        group_id = np.full(n, -1, dtype=np.intp)
        for l, G in enumerate(groups):
            if G.min() < 0 or G.max() >= n:
                raise ValueError("group index out of range: groups must cover 0..n-1")
            if np.any(group_id[G] != -1) or len(np.unique(G)) != len(G):
                raise ValueError("groups overlap")
            group_id[G] = l
        if np.any(group_id < 0):
            raise ValueError("groups do not cover every coordinate")

        if isinstance(weights, str):
            sizes = np.array([len(G) for G in groups], dtype=float)
            if weights == "sqrt":
                weights = np.sqrt(sizes)
            elif weights == "one":
                weights = np.ones(len(groups))
            else:
                raise ValueError(f"unknown weight scheme {weights!r}")
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(groups),) or np.any(weights <= 0):
            raise ValueError("weights must be one positive value per group")

        self.groups = groups
        self.weights = weights
        self.group_id = group_id
        self.n = n
        self.sizes = np.array([len(G) for G in groups])

    @property
    def g(self):
        return len(self.groups)

    @classmethod
    def from_labels(cls, labels, weights="sqrt"):
        """Partition from one integer label per coordinate.

        Labels are renumbered densely in order of first appearance.
        """
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.intp)
        rank[np.argsort(first)] = np.arange(len(first))
        dense = rank[inverse.ravel()]
        groups = [np.flatnonzero(dense == l) for l in range(len(first))]
        return cls(groups, weights)

    @classmethod
    def contiguous(cls, sizes, weights="sqrt"):
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        return cls([np.arange(bounds[i], bounds[i + 1]) for i in range(len(sizes))], weights)

    def group_norms(self, x):
        return np.sqrt(np.bincount(self.group_id, weights=x * x, minlength=self.g))

    def labels(self):
        return self.group_id.copy()


class SglProblem:
    """Immutable bundle ``(A, b, lambda1, lambda2, partition)``."""

    def __init__(self, A, b, lambda1, lambda2, partition: GroupPartition):
        A = as_design_matrix(A)
        b = np.array(b, dtype=float).ravel()
        if b.shape != (A.m,):
            raise ValueError(f"b has length {b.size}, expected {A.m}")
        if partition.n != A.n:
            raise ValueError(f"partition covers {partition.n} coordinates, A has {A.n}")
        lambda1, lambda2 = float(lambda1), float(lambda2)
        if lambda1 < 0 or lambda2 < 0:
            raise ValueError("regularization parameters must be nonnegative")
        if lambda1 + lambda2 <= 0:
            raise ValueError("lambda1 + lambda2 must be positive")
        b.flags.writeable = False
        self.A = A
        self.b = b
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.partition = partition
        lam2 = lambda2 * partition.weights
        lam2.flags.writeable = False
        self.lambda2_scaled = lam2
        self._frozen = True

    def __setattr__(self, name, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("SglProblem is immutable")
        super().__setattr__(name, value)

    @property
    def m(self):
        return self.A.m

    @property
    def n(self):
        return self.A.n

    def with_lambdas(self, lambda1, lambda2):
        return SglProblem(self.A, self.b, lambda1, lambda2, self.partition)

    def regularizer(self, x):
        """``p(x) = lambda1 ||x||_1 + sum_l lambda2 w_l ||x_{G_l}||``."""
        return self.lambda1 * np.abs(x).sum() + self.lambda2_scaled @ self.partition.group_norms(x)


@dataclass
class PrimalDualPoint:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def zeros(cls, prob: SglProblem):
        return cls(np.zeros(prob.n), np.zeros(prob.m), np.zeros(prob.n))

    def copy(self):
        return PrimalDualPoint(self.x.copy(), self.y.copy(), self.z.copy())


@dataclass
class SolveReport:
    pobj: float
    dobj: float
    eta_gap: float
    eta_dual: float
    nnz: int
    outer_iters: int
    inner_iters: int
    wall_seconds: float
    solver_name: str
    converged: bool
    config: dict = field(default_factory=dict)

    @property
    def eta(self):
        """``max(eta_gap, eta_dual)``, the quantity compared with ``tol``."""
        return max(self.eta_gap, self.eta_dual)

    def to_dict(self):
        return asdict(self)


def _check_len(v, size, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (size,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({size},)")
    return v


def primal_objective(prob: SglProblem, x) -> float:
    x = _check_len(x, prob.n, "x")
    r = prob.A.matvec(x) - prob.b
    return 0.5 * float(r @ r) + float(prob.regularizer(x))


def dual_objective(prob: SglProblem, y) -> float:
    """``-<b, y> - 1/2 ||y||^2``; the conjugate term vanishes on feasible ``z``."""
    y = _check_len(y, prob.m, "y")
    return -float(prob.b @ y) - 0.5 * float(y @ y)


def eta_metrics(prob: SglProblem, pt: PrimalDualPoint):
    """Relative duality gap and relative dual infeasibility.

    Returns
    -------
    eta_gap : float
        ``|pobj - dobj| / (1 + |pobj| + |dobj|)``
    eta_dual : float
        ``||A^T y + z|| / (1 + ||z||)``
    """
    z = _check_len(pt.z, prob.n, "z")
    pobj = primal_objective(prob, pt.x)
    dobj = dual_objective(prob, pt.y)
    eta_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
    eta_dual = np.linalg.norm(prob.A.rmatvec(pt.y) + z) / (1 + np.linalg.norm(z))
    return eta_gap, float(eta_dual)


def nnz_estimate(x) -> int:
    """Smallest ``k`` whose ``k`` largest magnitudes hold 99.9% of ``||x||_1``."""
    mags = np.sort(np.abs(np.asarray(x, dtype=float)).ravel(), kind="stable")[::-1]
    total = mags.sum()
    if total == 0:
        return 0
    return int(np.searchsorted(np.cumsum(mags), 0.999 * total) + 1)


def kkt_residual(prob: SglProblem, x) -> float:
    """Norm of the proximal-gradient residual ``x - Prox_p(x - A^T (A x - b))``."""
    from .prox import prox_p

    x = _check_len(x, prob.n, "x")
    grad = prob.A.rmatvec(prob.A.matvec(x) - prob.b)
    return float(np.linalg.norm(x - prox_p(prob, x - grad)))


def lambda_max(A, b) -> float:
    """``||A^T b||_inf``, the scale used by the regularization strategies."""
    A = as_design_matrix(A)
    return float(np.max(np.abs(A.rmatvec(np.asarray(b, dtype=float)))))


STRATEGIES = ("s1", "s2", "s3")


def lambdas_from_strategy(strategy: str, gamma: float, lam_max: float):
    """Map ``(strategy, gamma)`` to ``(lambda1, lambda2)``.

    s1: ``lambda1 = lambda2 = gamma * lam_max``
    s2: ``lambda1 = 0.5 gamma lam_max``, ``lambda2 = 9.5 gamma lam_max``
    s3: ``lambda1 = gamma lam_max``, ``lambda2 = sqrt(lambda1)`` if ``lambda1 > 1``
        else ``lambda1 ** 2``
    """
    base = gamma * lam_max
    if strategy == "s1":
        return base, base
    if strategy == "s2":
        return 0.5 * base, 9.5 * base
    if strategy == "s3":
        return base, (np.sqrt(base) if base > 1 else base**2)
    raise ValueError(f"unknown strategy {strategy!r}")


def make_problem(A, b, partition, lambda1: Optional[float] = None, lambda2: Optional[float] = None,
                 strategy: Optional[str] = None, gamma: Optional[float] = None):
    """Convenience constructor accepting either explicit lambdas or a strategy."""
    A = as_design_matrix(A)
    if strategy is not None:
        lambda1, lambda2 = lambdas_from_strategy(strategy, gamma, lambda_max(A, b))
    return SglProblem(A, b, lambda1, lambda2, partition)
