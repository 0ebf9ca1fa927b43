"""One element of the generalized Jacobian of ``prox_p``, kept in structured form.

For ``v = soft_threshold(u, lambda1)`` and ``theta = (|u| > lambda1)`` the
selected element is block diagonal over groups. Groups with
``||v_l|| <= lambda2_l`` contribute a zero block. A group with
``||v_l|| > lambda2_l`` contributes, on its support ``Xi_l = G_l cap supp(v)``,

    (1 - lambda2_l / ||v_l||) I + (lambda2_l / ||v_l||^3) s_l s_l^T,

where ``s_l = v[Xi_l]``. Only the active coordinates are stored, which is
what makes the Newton systems cheap when the iterate is sparse.
"""
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .prox import soft_threshold


class GroupCase(IntEnum):
    INTERIOR = 0  # ||v_l|| < lambda2_l
    BOUNDARY = 1  # ||v_l|| == lambda2_l
    EXTERIOR = 2  # ||v_l|| > lambda2_l


@dataclass(frozen=True)
class ProxDerivativeInfo:
    """Structured encoding of the selected Jacobian element.

    Attributes
    ----------
    theta : bool array (n,)
        ``|u_i| > lambda1``.
    v_norms : array (g,)
        Group norms of the soft-thresholded point.
    case_tag : int array (g,)
        :class:`GroupCase` per group.
    active_groups : int array (r2,)
        Exterior groups, in increasing order.
    active_idx : int array (r,)
        Concatenation of ``Xi_l`` over ``active_groups``, group by group.
    active_ptr : int array (r2 + 1,)
        Offsets of each group's slice inside ``active_idx``.
    s : array (r,)
        ``v[active_idx]``.
    alpha : array (r,)
        Diagonal weight ``1 - lambda2_l / ||v_l||`` per active coordinate.
    beta : array (r2,)
        Rank-one weight ``lambda2_l / ||v_l||^3`` per active group.
    """

    n: int
    theta: np.ndarray
    v_norms: np.ndarray
    case_tag: np.ndarray
    active_groups: np.ndarray
    active_idx: np.ndarray
    active_ptr: np.ndarray
    s: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def r(self):
        return len(self.active_idx)

    @property
    def r2(self):
        return len(self.active_groups)

    @property
    def active_sets(self):
        return [self.active_idx[a:b] for a, b in zip(self.active_ptr[:-1], self.active_ptr[1:])]

    @property
    def s_vectors(self):
        return [self.s[a:b] for a, b in zip(self.active_ptr[:-1], self.active_ptr[1:])]

    @property
    def segment_labels(self):
        """Position of each active coordinate's group within ``active_groups``."""
        return np.repeat(np.arange(self.r2), np.diff(self.active_ptr))


def derivative_info(prob, u) -> ProxDerivativeInfo:
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.n,):
        raise ValueError(f"u has shape {u.shape}, expected ({prob.n},)")
    part = prob.partition
    lam2 = prob.lambda2_scaled

    theta = np.abs(u) > prob.lambda1
    v = soft_threshold(u, prob.lambda1)
    norms = part.group_norms(v)

    case = np.full(part.g, GroupCase.INTERIOR, dtype=np.int8)
    case[norms == lam2] = GroupCase.BOUNDARY
    exterior = norms > lam2
    case[exterior] = GroupCase.EXTERIOR

    # exterior groups always have v_l != 0, so theta selects exactly supp(v) there
    in_active = theta & exterior[part.group_id]
    cand = np.flatnonzero(in_active)
    gid = part.group_id[cand]
    order = np.argsort(gid, kind="stable")
    active_idx = cand[order]
    gid = gid[order]
    active_groups = np.flatnonzero(exterior)
    counts = np.bincount(gid, minlength=part.g)[active_groups]
    active_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)

    nv = norms[active_groups]
    coef = 1.0 - lam2[active_groups] / nv
    beta = lam2[active_groups] / nv**3
    alpha = np.repeat(coef, counts)
    s = v[active_idx]

    return ProxDerivativeInfo(
        n=prob.n,
        theta=theta,
        v_norms=norms,
        case_tag=case,
        active_groups=active_groups,
        active_idx=active_idx,
        active_ptr=active_ptr,
        s=s,
        alpha=alpha,
        beta=beta,
    )


def _apply_active(info, h_act):
    """``M`` restricted to the active coordinates, applied to ``h_act`` (length r)."""
    if info.r == 0:
        return h_act.copy()
    dots = np.add.reduceat(info.s * h_act, info.active_ptr[:-1])
    return info.alpha * h_act + np.repeat(info.beta * dots, np.diff(info.active_ptr)) * info.s


def apply_M(info: ProxDerivativeInfo, h):
    """``M @ h`` without forming ``M``."""
    h = np.asarray(h, dtype=float)
    if h.shape != (info.n,):
        raise ValueError(f"h has shape {h.shape}, expected ({info.n},)")
    out = np.zeros(info.n)
    if info.r:
        out[info.active_idx] = _apply_active(info, h[info.active_idx])
    return out


def assemble_dense_M(info: ProxDerivativeInfo, max_n=200):
    """Dense ``n x n`` matrix of the selected element (testing aid)."""
    if info.n > max_n:
        raise ValueError(f"refusing to assemble a dense {info.n}x{info.n} matrix (max_n={max_n})")
    M = np.zeros((info.n, info.n))
    for idx, sl, a, bt in zip(info.active_sets, info.s_vectors,
                              info.alpha[info.active_ptr[:-1]], info.beta):
        M[np.ix_(idx, idx)] = a * np.eye(len(idx)) + bt * np.outer(sl, sl)
    return M
