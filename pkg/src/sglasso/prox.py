"""Closed-form proximal maps for the sparse group Lasso regularizer."""
import numpy as np


def soft_threshold(u, c, out=None):
    """Componentwise ``sign(u) * max(|u| - c, 0)``."""
    if c < 0:
        raise ValueError("threshold must be nonnegative")
    u = np.asarray(u, dtype=float)
    mag = np.maximum(np.abs(u) - c, 0.0)
    return np.multiply(np.sign(u), mag, out=out)


def group_shrink(u, c, out=None):
    """Prox of ``c ||.||``: scale ``u`` by ``max(0, 1 - c / ||u||)``; zero at ``u = 0``."""
    if c < 0:
        raise ValueError("threshold must be nonnegative")
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    scale = 1.0 - c / nrm if nrm > c else 0.0
    return np.multiply(u, scale, out=out)


def project_l2_ball(v, radius, out=None):
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    scale = radius / nrm if nrm > radius else 1.0
    return np.multiply(v, scale, out=out)


def _group_scale(prob, v):
    """Per-coordinate factor ``max(0, 1 - lambda2_l / ||v_l||)`` and the group norms."""
    part = prob.partition
    norms = part.group_norms(v)
    lam2 = prob.lambda2_scaled
    factor = np.zeros(part.g)
    ext = norms > lam2
    factor[ext] = 1.0 - lam2[ext] / norms[ext]
    return factor[part.group_id], norms


def prox_p(prob, u, out=None):
    """Proximal map of ``p = lambda1 ||.||_1 + sum_l lambda2 w_l ||._{G_l}||``.

    Computed as group shrinkage applied to the soft-thresholded input, which is
    exact for non-overlapping groups.
    """
    v = soft_threshold(u, prob.lambda1)
    scale, _ = _group_scale(prob, v)
    return np.multiply(v, scale, out=out)


def prox_conjugate_residual(prob, w, out=None):
    """``w - prox_p(w)``, a point in the domain of ``p*`` (so ``p*`` is zero there)."""
    w = np.asarray(w, dtype=float)
    return np.subtract(w, prox_p(prob, w), out=out)


def dual_feasibility_gap(prob, z):
    """How far ``z`` is outside ``dom p*``.

    ``dom p*`` is, group by group, the Minkowski sum of the box
    ``lambda1 * B_inf`` and the ball ``lambda2_l * B_2``. The returned value is
    ``max_l (||max(|z_l| - lambda1, 0)|| - lambda2_l)`` clamped at zero.
    """
    z = np.asarray(z, dtype=float)
    excess = np.maximum(np.abs(z) - prob.lambda1, 0.0)
    over = prob.partition.group_norms(excess) - prob.lambda2_scaled
    return float(max(over.max(), 0.0))
