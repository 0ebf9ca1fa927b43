"""Small instance factories and independent oracles shared by the tests."""
import numpy as np

from sglasso import GroupPartition, SglProblem


def random_sizes(rng, n, max_size):
    sizes = []
    while sum(sizes) < n:
        sizes.append(int(rng.integers(1, max_size + 1)))
    sizes[-1] -= sum(sizes) - n
    return [s for s in sizes if s > 0]


def random_problem(rng, m, n, lambda1=0.5, lambda2=0.5, max_group=5, sparse=False):
    A = rng.standard_normal((m, n))
    if sparse:
        from scipy import sparse as sp
        A = sp.csc_matrix(A * (rng.random((m, n)) < 0.3))
    b = rng.standard_normal(m)
    part = GroupPartition.contiguous(random_sizes(rng, n, max_group))
    return SglProblem(A, b, lambda1, lambda2, part)


def naive_regularizer(prob, x):
    """Term-by-term loop, independent of the vectorized model code."""
    l1 = 0.0
    for v in x:
        l1 += abs(v)
    grp = 0.0
    for G, w in zip(prob.partition.groups, prob.partition.weights):
        ss = 0.0
        for i in G:
            ss += x[i] * x[i]
        grp += w * ss ** 0.5
    return prob.lambda1 * l1 + prob.lambda2 * grp


def grid_prox_group(u, lam1, lam2, step=1e-3, tol=1e-10):
    """Minimize ``lam1 |x|_1 + lam2 ||x|| + 1/2 ||x - u||^2`` for ``len(u) <= 2``.

    The minimizer lies in the box spanned by 0 and ``u``. That box is searched
    on a coarse grid, then the grid is repeatedly shrunk around the incumbent
    (valid because the objective is convex) through spacing ``step`` down to
    ``tol``. Returns ``(x, value)``.
    """
    u = np.asarray(u, dtype=float)

    def f(X):
        return (lam1 * np.abs(X).sum(axis=-1) + lam2 * np.linalg.norm(X, axis=-1)
                + 0.5 * ((X - u) ** 2).sum(axis=-1))

    def search(axes):
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(u))
        vals = f(mesh)
        return mesh[np.argmin(vals)]

    lo = np.minimum(u, 0)
    hi = np.maximum(u, 0)
    h = max(float(np.max(hi - lo)) / 200, step)
    best = search([np.arange(l - 2 * h, v + 3 * h, h) for l, v in zip(lo, hi)])
    while h > tol:
        h_new = max(h / 10, tol / 10) if h > step else h / 10
        best = search([np.arange(c - 2 * h, c + 2 * h + h_new / 2, h_new) for c in best])
        h = h_new
    # zero is a likely minimizer that the grid may straddle
    cands = np.vstack([best, np.zeros_like(u)])
    vals = f(cands)
    return cands[np.argmin(vals)], float(vals.min())


def prox_objective(prob, x, u):
    return naive_regularizer(prob, x) + 0.5 * float(np.sum((x - u) ** 2))


def case_pattern(prob, u):
    """Coordinate activity and per-group exterior flags at ``u``."""
    v = np.sign(u) * np.maximum(np.abs(u) - prob.lambda1, 0)
    return (np.abs(u) > prob.lambda1, prob.partition.group_norms(v) > prob.lambda2_scaled)


def boundary_margin(prob, u):
    v = np.sign(u) * np.maximum(np.abs(u) - prob.lambda1, 0)
    return min(np.min(np.abs(np.abs(u) - prob.lambda1)),
               np.min(np.abs(prob.partition.group_norms(v) - prob.lambda2_scaled)))


def sample_smooth_point(rng, prob, t_max=1e-2, margin=1e-3, scale=2.0):
    """Random ``(u, d)`` with ``||d|| = 1`` such that ``u`` is ``margin`` away from
    every case boundary and the segment ``u + t d``, ``t <= t_max``, stays in
    the same case pattern."""
    while True:
        u = rng.standard_normal(prob.n) * scale
        if boundary_margin(prob, u) < margin:
            continue
        d = rng.standard_normal(prob.n)
        d /= np.linalg.norm(d)
        ref = case_pattern(prob, u)
        ts = np.linspace(0, t_max, 11)[1:]
        if all(boundary_margin(prob, u + t * d) >= 0 and
               all(np.array_equal(a, b) for a, b in zip(ref, case_pattern(prob, u + t * d)))
               for t in ts):
            return u, d
