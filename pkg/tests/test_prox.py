import numpy as np
import pytest

from sglasso import (GroupPartition, SglProblem, dual_feasibility_gap, group_shrink,
                     project_l2_ball, prox_conjugate_residual, prox_p, soft_threshold)

from helpers import grid_prox_group, random_problem


def one_group(n, lam1, lam2, weights="one"):
    return SglProblem(np.eye(n), np.zeros(n), lam1, lam2,
                      GroupPartition([list(range(n))], weights))


class TestKernels:
    def test_soft_threshold(self):
        np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.5]), 1.0), [2.0, 0.0])
        u = np.array([1.0, -2.0, 0.0])
        np.testing.assert_array_equal(soft_threshold(u, 0.0), u)

    def test_soft_threshold_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            u, c = rng.standard_normal() * 3, rng.random() * 2
            xs, best = grid_prox_group([u], c, 0.0)
            x = soft_threshold(np.array([u]), c)[0]
            assert c * abs(x) + 0.5 * (x - u) ** 2 <= best + 1e-12
            assert x == pytest.approx(xs[0], abs=1e-6)

    def test_group_shrink(self):
        np.testing.assert_allclose(group_shrink(np.array([3.0, 4.0]), 1.0), [2.4, 3.2])
        np.testing.assert_array_equal(group_shrink(np.array([0.3, 0.4]), 0.5), [0.0, 0.0])
        np.testing.assert_array_equal(group_shrink(np.zeros(2), 0.0), [0.0, 0.0])

    def test_group_shrink_grid(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            u, c = rng.standard_normal(2) * 2, rng.random() * 2
            xs, best = grid_prox_group(u, 0.0, c)
            x = group_shrink(u, c)
            assert c * np.linalg.norm(x) + 0.5 * np.sum((x - u) ** 2) <= best + 1e-12
            np.testing.assert_allclose(x, xs, atol=1e-6)

    def test_project(self):
        np.testing.assert_allclose(project_l2_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])
        v = np.array([0.1, -0.2])
        np.testing.assert_array_equal(project_l2_ball(v, 1.0), v)
        with pytest.raises(ValueError):
            project_l2_ball(v, 0.0)

    def test_shrink_is_identity_minus_projection(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            v, c = rng.standard_normal(4), rng.random() * 3
            np.testing.assert_allclose(group_shrink(v, c), v - project_l2_ball(v, c),
                                       atol=1e-15)

    def test_out_buffer(self):
        u = np.array([3.0, -0.5])
        out = np.empty(2)
        res = soft_threshold(u, 1.0, out=out)
        assert res is out
        np.testing.assert_array_equal(out, [2.0, 0.0])


class TestProxP:
    def test_composed_example(self):
        np.testing.assert_allclose(prox_p(one_group(2, 1.0, 1.0), np.array([3.0, -0.5])),
                                   [1.0, 0.0])

    def test_lasso_reduction(self):
        rng = np.random.default_rng(3)
        prob = random_problem(rng, 3, 12, 0.7, 0.0)
        u = rng.standard_normal(12) * 2
        np.testing.assert_array_equal(prox_p(prob, u), soft_threshold(u, 0.7))

    def test_grid_oracle_small_groups(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            sizes = rng.integers(1, 3, size=rng.integers(1, 4))
            part = GroupPartition.contiguous(sizes)
            n = int(sizes.sum())
            l1, l2 = rng.random(2) * 1.5
            prob = SglProblem(np.eye(n), np.zeros(n), l1, l2 + 1e-3, part)
            u = rng.standard_normal(n) * 2
            x = prox_p(prob, u)
            for G, lam2 in zip(part.groups, prob.lambda2_scaled):
                xg, best = grid_prox_group(u[G], l1, lam2)
                val = (l1 * np.abs(x[G]).sum() + lam2 * np.linalg.norm(x[G])
                       + 0.5 * np.sum((x[G] - u[G]) ** 2))
                assert val <= best + 1e-6

    def test_moreau_identity(self):
        # z is formed as u - p, so p + z reproduces u up to the rounding of one
        # addition
        rng = np.random.default_rng(5)
        prob = random_problem(rng, 3, 40, 0.5, 0.8)
        for _ in range(20):
            u = rng.standard_normal(40) * 3
            p, z = prox_p(prob, u), prox_conjugate_residual(prob, u)
            np.testing.assert_array_equal(z, u - p)
            assert np.all(np.abs(p + z - u) <= np.spacing(np.abs(u)))

    @pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
    def test_homogeneity(self, sigma):
        rng = np.random.default_rng(6)
        prob = random_problem(rng, 3, 40, 0.5, 0.8)
        scaled = prob.with_lambdas(sigma * prob.lambda1, sigma * prob.lambda2)
        for _ in range(20):
            w = rng.standard_normal(40) * 2
            lhs, rhs = sigma * prox_p(prob, w), prox_p(scaled, sigma * w)
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))

    def test_nonexpansive_and_support(self):
        rng = np.random.default_rng(7)
        prob = random_problem(rng, 3, 30, 0.4, 0.6)
        for _ in range(100):
            u, v = rng.standard_normal((2, 30)) * 2
            assert (np.linalg.norm(prox_p(prob, u) - prox_p(prob, v))
                    <= np.linalg.norm(u - v) * (1 + 1e-14))
            supp = prox_p(prob, u) != 0
            assert np.all(soft_threshold(u, prob.lambda1)[supp] != 0)

    def test_optimality_conditions_large_groups(self):
        # x = prox_p(u) iff u - x lies in the subdifferential of p at x
        rng = np.random.default_rng(8)
        prob = random_problem(rng, 3, 60, 0.5, 0.5, max_group=12)
        u = rng.standard_normal(60) * 3
        x = prox_p(prob, u)
        g = u - x
        for G, lam2 in zip(prob.partition.groups, prob.lambda2_scaled):
            xg, gg = x[G], g[G]
            nrm = np.linalg.norm(xg)
            if nrm > 0:
                on = xg != 0
                np.testing.assert_allclose(gg[on], prob.lambda1 * np.sign(xg[on])
                                           + lam2 * xg[on] / nrm, atol=1e-10)
                assert np.all(np.abs(gg[~on]) <= prob.lambda1 + 1e-12)
            else:
                assert dual_feasibility_gap(one_group(len(G), prob.lambda1, lam2), gg) <= 1e-12


class TestConjugate:
    def test_small_arguments(self):
        rng = np.random.default_rng(9)
        prob = random_problem(rng, 3, 20, 0.5, 0.5)
        np.testing.assert_array_equal(prox_conjugate_residual(prob, np.zeros(20)), 0.0)
        w = rng.standard_normal(20) * 1e-3
        np.testing.assert_array_equal(prox_conjugate_residual(prob, w), w)

    def test_output_in_domain(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            prob = random_problem(rng, 3, 30, *(rng.random(2) * 2))
            w = rng.standard_normal(30) * 5
            assert dual_feasibility_gap(prob, prox_conjugate_residual(prob, w)) <= 1e-12

    def test_gap_examples(self):
        prob = one_group(3, 0.0, 1.0)
        assert dual_feasibility_gap(prob, np.zeros(3)) == 0.0
        assert dual_feasibility_gap(prob, np.array([2.0, 0.0, 0.0])) == pytest.approx(1.0)
        prob = one_group(2, 1.0, 1.0)
        assert dual_feasibility_gap(prob, np.array([1.5, -1.0])) == 0.0
        assert dual_feasibility_gap(prob, np.array([4.0, 5.0])) == pytest.approx(4.0)
