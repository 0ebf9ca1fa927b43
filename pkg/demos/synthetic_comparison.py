"""SSNAL against ADMM on the 300 x 3000 synthetic instance.

Picks gamma so the solution has between 80 and 150 nonzeros, then solves
from a cold start with both methods and prints the outer-iteration trace
of SSNAL.

    python3 demos/synthetic_comparison.py
"""
import numpy as np

from sglasso import admm_solve, alm_solve, make_problem
from sglasso.data_io import eta_p, gen_synthetic
from sglasso.protocol import gamma_scan

A, b, part, x_true = gen_synthetic(300, 3000, 100, seed=42)
scan = gamma_scan(A, b, part, [0.3, 0.25, 0.2, 0.17, 0.15, 0.13, 0.12, 0.1])
print(f"gamma = {scan.gamma:g}  lambda1 = lambda2 = {scan.lambda1:.4g}  nnz = {scan.nnz}")

prob = make_problem(A, b, part, scan.lambda1, scan.lambda2)


def show(rec, pt):
    print(f"  k={rec['iter']}  sigma={rec['sigma']:.3g}  inner={rec['inner_iters']:2d}  "
          f"eta_gap={rec['eta_gap']:.2e}  eta_dual={rec['eta_dual']:.2e}")


print("SSNAL")
x, ssnal = alm_solve(prob, callback=show)
_, admm = admm_solve(prob)

for r in (ssnal, admm):
    print(f"{r.solver_name:6s} pobj={r.pobj:.10g}  eta={r.eta:.1e}  "
          f"iters={r.outer_iters}  {r.wall_seconds:.2f}s")
print(f"eta_P(ADMM vs SSNAL) = {eta_p(admm, ssnal):.1e}")

# recovered support against the planted one
found = np.flatnonzero(np.abs(x.x) > 1e-8)
planted = np.flatnonzero(x_true)
print(f"support: {len(found)} found, {len(np.intersect1d(found, planted))} of "
      f"{len(planted)} planted")
