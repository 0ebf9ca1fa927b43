"""Walk a gamma grid under the three parameter strategies.

Each solve is warm started from the previous one, which is how the
scan helpers use the solver.

    python3 demos/regularization_path.py
"""
from sglasso import alm_solve, make_problem
from sglasso.data_io import gen_synthetic

A, b, part, _ = gen_synthetic(100, 1000, 20, seed=7)
gammas = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01]

for strategy in ("s1", "s2", "s3"):
    print(strategy)
    start = None
    for gamma in gammas:
        prob = make_problem(A, b, part, strategy=strategy, gamma=gamma)
        start, rep = alm_solve(prob, start=start)
        print(f"  gamma={gamma:<5g} lambda1={prob.lambda1:9.4g} lambda2={prob.lambda2:9.4g} "
              f"nnz={rep.nnz:4d} outer={rep.outer_iters} inner={rep.inner_iters:3d} "
              f"{rep.wall_seconds * 1e3:6.1f}ms")
