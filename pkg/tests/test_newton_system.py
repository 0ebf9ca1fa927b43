import time

import numpy as np
import pytest

from sglasso import (DesignMatrix, GroupPartition, SglProblem, apply_V, assemble_dense_M, build_structured,
                     derivative_info)
from sglasso.jacobian import ProxDerivativeInfo
from sglasso.newton_system import NewtonSystem, Strategy, choose_strategy, pcg

from helpers import random_problem

STRATS = (Strategy.DENSE, Strategy.WOODBURY, Strategy.PCG)


def system_pair(seed, m=30, n=120, lam=(0.6, 0.4), sigma=None, sparse=False):
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, m, n, *lam, max_group=6, sparse=sparse)
    info = derivative_info(prob, rng.standard_normal(n) * 2)
    sigma = sigma if sigma is not None else float(rng.uniform(0.1, 10))
    return prob, info, sigma, rng


def test_choose_strategy():
    assert choose_strategy(100, 25) is Strategy.WOODBURY
    assert choose_strategy(100, 26) is Strategy.DENSE
    assert choose_strategy(20000, 4000) is Strategy.WOODBURY
    assert choose_strategy(20000, 4001) is Strategy.PCG
    assert choose_strategy(5000, 3000) is Strategy.PCG


def test_empty_active_set_is_identity():
    prob, _, _, rng = system_pair(0)
    info = derivative_info(prob, np.zeros(prob.n))
    assert info.r == 0
    rhs = rng.standard_normal(prob.m)
    for st in STRATS:
        d, res, ok = build_structured(prob.A, 2.0, info, st).solve(rhs)
        np.testing.assert_array_equal(d, rhs)
        assert ok and res == 0.0


@pytest.mark.parametrize("sparse", [False, True])
def test_structured_matches_dense_oracle(sparse):
    for seed in range(10):
        prob, info, sigma, rng = system_pair(seed, m=25, n=40, sparse=sparse)
        A = prob.A.toarray()
        expected = A @ assemble_dense_M(info) @ A.T
        got = build_structured(prob.A, sigma, info).amat()
        assert np.linalg.norm(got - expected) <= 1e-10 * max(1.0, np.linalg.norm(expected))
        h = rng.standard_normal(prob.m)
        Vh = h + sigma * expected @ h
        np.testing.assert_allclose(apply_V(build_structured(prob.A, sigma, info), h), Vh,
                                   rtol=1e-12, atol=1e-12 * np.linalg.norm(Vh))


def test_strategies_agree():
    for seed in range(10):
        prob, info, sigma, rng = system_pair(seed)
        rhs = rng.standard_normal(prob.m)
        sols = [build_structured(prob.A, sigma, info, st).solve(rhs, tol=1e-12)[0]
                for st in STRATS]
        for d in sols[1:]:
            assert np.linalg.norm(d - sols[0]) <= 1e-6 * np.linalg.norm(sols[0])


def test_residuals_meet_tolerance_and_descent():
    for seed in range(10):
        prob, info, sigma, rng = system_pair(seed)
        rhs = rng.standard_normal(prob.m)
        for st in STRATS:
            sys_ = build_structured(prob.A, sigma, info, st)
            tol = 1e-6 * np.linalg.norm(rhs)
            d, res, ok = sys_.solve(rhs, tol=tol)
            assert ok and res <= tol
            assert res == pytest.approx(np.linalg.norm(sys_.apply(d) - rhs), abs=1e-14)
            assert d @ rhs > 0


def test_spectrum_and_woodbury_identity():
    for seed in range(10):
        prob, info, sigma, rng = system_pair(seed)
        sys_ = build_structured(prob.A, sigma, info, Strategy.WOODBURY)
        D = sys_.D
        for _ in range(5):
            h = rng.standard_normal(prob.m)
            assert h @ sys_.apply(h) / (h @ h) >= 1 - 1e-10
            inv = h - D @ np.linalg.solve(np.eye(D.shape[1]) + D.T @ D, D.T @ h)
            np.testing.assert_allclose(sys_.apply(inv), h, atol=1e-9 * np.linalg.norm(h))


def test_pcg_not_converged_flag():
    prob, info, sigma, rng = system_pair(1, sigma=100.0)
    sys_ = build_structured(prob.A, sigma, info, Strategy.PCG)
    rhs = rng.standard_normal(prob.m)
    d, res, ok = sys_.solve(rhs, tol=1e-14, max_iters=2)
    assert not ok
    assert res < np.linalg.norm(rhs)


def test_pcg_plain_spd():
    rng = np.random.default_rng(3)
    Q = rng.standard_normal((20, 20))
    V = Q @ Q.T + np.eye(20)
    rhs = rng.standard_normal(20)
    x, ok = pcg(lambda v: V @ v, rhs, 1 / np.diag(V), 1e-10, 200)
    assert ok
    np.testing.assert_allclose(V @ x, rhs, atol=1e-9)


def test_non_finite_rejected():
    info = ProxDerivativeInfo(n=2, theta=np.array([True, False]), v_norms=np.array([1.0]),
                              case_tag=np.array([2]), active_groups=np.array([0]),
                              active_idx=np.array([0]), active_ptr=np.array([0, 1]),
                              s=np.array([1.0]), alpha=np.array([0.5]), beta=np.array([np.inf]))
    with pytest.raises(FloatingPointError):
        NewtonSystem(DesignMatrix(np.eye(2)), 1.0, info)


def test_apply_cost_scales_with_active_set():
    # m = 500, n = 50000, r + r2 = 60
    rng = np.random.default_rng(0)
    m, n = 500, 50000
    A = DesignMatrix(rng.standard_normal((m, n)))
    g = n // 10
    prob = SglProblem(A, np.zeros(m), 1.0, 1.0, GroupPartition.contiguous([10] * g))
    u = np.zeros(n)
    for l in range(6):
        u[10 * l:10 * l + 9] = 10.0
    info = derivative_info(prob, u)
    assert info.r + info.r2 == 60
    sys_ = build_structured(A, 1.0, info)
    h, x = rng.standard_normal(m), rng.standard_normal(n)

    def best_of(f, reps=20):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            f()
            times.append(time.perf_counter() - t0)
        return min(times)

    t_apply = best_of(lambda: sys_.apply(h))
    t_dense = best_of(lambda: (A.matvec(x), A.rmatvec(h)))
    assert t_dense >= 10 * t_apply
