"""Experiment helpers: regularization scans, benchmark grids and performance profiles."""
import math
import time
from dataclasses import dataclass

from .admm import AdmmParams, admm_solve
from .alm import AlmParams, alm_solve
from .model import SglProblem, lambda_max, lambdas_from_strategy

CSV_FIELDS = ("instance", "solver", "strategy", "gamma", "pobj", "eta_s", "nnz",
              "outer", "inner", "seconds", "converged")


def run_solver(prob, solver, tol=1e-6, max_outer=None, max_iters=None, callback=None):
    """Dispatch to ``alm_solve`` (``"ssnal"``) or ``admm_solve`` (``"admm"``)."""
    if solver == "ssnal":
        params = AlmParams(tol=tol) if max_outer is None else AlmParams(tol=tol, max_outer=max_outer)
        return alm_solve(prob, params, callback=callback)
    if solver == "admm":
        params = AdmmParams(tol=tol) if max_iters is None else AdmmParams(tol=tol, max_iters=max_iters)
        return admm_solve(prob, params, callback=callback)
    raise ValueError(f"unknown solver {solver!r}")


@dataclass
class ScanResult:
    gamma: float
    lambda1: float
    lambda2: float
    nnz: int
    history: list


def gamma_scan(A, b, partition, gammas, nnz_range=(80, 150), strategy="s1", tol=1e-6,
               refine=8):
    """Find ``gamma`` whose solution has ``nnz_estimate`` inside ``nnz_range``.

    ``gammas`` are visited from largest to smallest, each solve warm-started
    from the previous one. If two neighbours bracket the range (too sparse,
    then too dense) the bracket is bisected up to ``refine`` times. Returns
    the first hit, or otherwise the visited gamma closest to the range.
    """
    lam_max = lambda_max(A, b)
    lo, hi = nnz_range
    history = []

    def run(gamma, start):
        l1, l2 = lambdas_from_strategy(strategy, gamma, lam_max)
        pt, rep = alm_solve(SglProblem(A, b, l1, l2, partition), AlmParams(tol=tol), start=start)
        history.append((gamma, rep.nnz))
        return pt, rep.nnz

    def hit(gamma, nnz):
        l1, l2 = lambdas_from_strategy(strategy, gamma, lam_max)
        return ScanResult(gamma, l1, l2, nnz, history)

    start = None
    prev = None
    for gamma in sorted(gammas, reverse=True):
        pt, nnz = run(gamma, start)
        if lo <= nnz <= hi:
            return hit(gamma, nnz)
        if nnz > hi and prev is not None and prev[1] < lo:
            # geometric bisection between a too-sparse and a too-dense gamma
            g_sparse, g_dense = prev[0], gamma
            warm = prev[2]
            for _ in range(refine):
                mid = math.sqrt(g_sparse * g_dense)
                warm, nnz_mid = run(mid, warm)
                if lo <= nnz_mid <= hi:
                    return hit(mid, nnz_mid)
                if nnz_mid < lo:
                    g_sparse = mid
                else:
                    g_dense = mid
            break
        prev = (gamma, nnz, pt)
        start = pt

    def distance(h):
        return max(lo - h[1], h[1] - hi, 0)

    # ties go to the most recent, i.e. the one reached last along the path
    gamma, nnz = min(reversed(history), key=distance)
    return hit(gamma, nnz)


def performance_profile(rows, solvers=None, key="seconds"):
    """Performance profile points from benchmark rows.

    ``rows`` are dicts with ``instance``, ``solver``, ``converged`` and the
    cost ``key``. A problem instance is identified by
    ``(instance, strategy, gamma)``. For each solver the returned list holds
    ``(ratio, fraction)`` breakpoints: the fraction of instances solved
    within ``ratio`` times the fastest successful solver. Failed runs count as
    unsolved at every ratio.
    """
    cells = {}
    for r in rows:
        cid = (r["instance"], r.get("strategy"), r.get("gamma"))
        cells.setdefault(cid, {})[r["solver"]] = r
    if solvers is None:
        solvers = sorted({r["solver"] for r in rows})
    n_cells = len(cells)
    ratios = {s: [] for s in solvers}
    for runs in cells.values():
        ok = [float(r[key]) for r in runs.values() if _truthy(r["converged"])]
        best = min(ok) if ok else None
        for s in solvers:
            r = runs.get(s)
            if r is None or best is None or not _truthy(r["converged"]):
                ratios[s].append(math.inf)
            else:
                # guard against zero timings
                ratios[s].append(max(float(r[key]), 1e-12) / max(best, 1e-12))
    profile = {}
    for s in solvers:
        finite = sorted(v for v in ratios[s] if math.isfinite(v))
        points = []
        for i, v in enumerate(finite):
            frac = (i + 1) / n_cells
            if points and points[-1][0] == v:
                points[-1] = (v, frac)
            else:
                points.append((v, frac))
        profile[s] = points
    return profile


def profile_value(points, ratio):
    """Fraction solved within ``ratio`` according to a profile's breakpoints."""
    frac = 0.0
    for x, y in points:
        if x <= ratio:
            frac = y
    return frac


def _truthy(v):
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes")
    return bool(v)


def bench_cell(name, A, b, partition, solver, strategy, gamma, tol=1e-6):
    """Run one grid cell; failures are captured in the row instead of raised."""
    row = {"instance": name, "solver": solver, "strategy": strategy, "gamma": gamma}
    try:
        l1, l2 = lambdas_from_strategy(strategy, gamma, lambda_max(A, b))
        prob = SglProblem(A, b, l1, l2, partition)
        t0 = time.perf_counter()
        _, rep = run_solver(prob, solver, tol=tol)
        seconds = time.perf_counter() - t0
        row.update(pobj=rep.pobj, eta_s=rep.eta, nnz=rep.nnz, outer=rep.outer_iters,
                   inner=rep.inner_iters, seconds=seconds, converged=rep.converged)
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the grid
        row.update(pobj=math.nan, eta_s=math.nan, nnz=0, outer=0, inner=0,
                   seconds=math.nan, converged=False, error=str(exc))
    return row


def eta_p_rows(rows, reference="ssnal"):
    """``(obj_other - pobj_ref) / (1 + |obj_other| + |pobj_ref|)`` per cell and solver."""
    ref = {(r["instance"], r["strategy"], r["gamma"]): r["pobj"]
           for r in rows if r["solver"] == reference}
    out = []
    for r in rows:
        key = (r["instance"], r["strategy"], r["gamma"])
        if r["solver"] == reference or key not in ref:
            continue
        a, p = float(r["pobj"]), float(ref[key])
        out.append({**dict(zip(("instance", "strategy", "gamma"), key)),
                    "solver": r["solver"], "eta_p": (a - p) / (1 + abs(a) + abs(p))})
    return out


def profile_to_rows(profile):
    return [{"solver": s, "ratio": x, "fraction": y} for s, pts in profile.items() for x, y in pts]


__all__ = ["CSV_FIELDS", "run_solver", "gamma_scan", "performance_profile", "profile_value",
           "bench_cell", "eta_p_rows", "profile_to_rows", "ScanResult"]
