"""Synthetic instances, LIBSVM files, group files and JSON reports.

File formats (all indices 1-based on disk, 0-based in memory):

* LIBSVM: one sample per line, ``<label> <idx>:<val> <idx>:<val> ...`` with
  strictly increasing feature indices. Blank lines and ``#`` comments are
  skipped.
* Groups: one positive integer group id per feature, one per line.
* Reports: a JSON object holding the :class:`~sglasso.model.SolveReport`
  fields, ``config`` included.
"""
import hashlib
import json
import re
import math
from pathlib import Path

import numpy as np
from scipy import sparse

from .model import DesignMatrix, GroupPartition, SolveReport


class ParseError(ValueError):
    pass


def make_rng(seed):
    """Counter-based Philox generator, reproducible across platforms."""
    return np.random.Generator(np.random.Philox(seed))


def random_group_sizes(n, g, rng):
    """Sizes drawn uniformly in ``n/g +- n/(4g)`` then adjusted by +-1 to sum to ``n``."""
    if g < 1 or n < g:
        raise ValueError("need 1 <= g <= n")
    mean, spread = n // g, n // (4 * g)
    sizes = rng.integers(max(1, mean - spread), mean + spread + 1, size=g)
    diff = n - int(sizes.sum())
    while diff != 0:
        step = 1 if diff > 0 else -1
        order = rng.permutation(g)
        for l in order:
            if diff == 0:
                break
            if step < 0 and sizes[l] <= 1:
                continue
            sizes[l] += step
            diff -= step
    return sizes


def gen_synthetic(m, n, g, seed=0, noise_std=1.0):
    """Random Gaussian design with ten nontrivial leading groups.

    Returns
    -------
    A : ndarray (m, n)
    b : ndarray (m,)
    partition : GroupPartition
        Contiguous groups with ``sqrt(|G_l|)`` weights.
    x_true : ndarray (n,)
        ``(1, 2, ..., 10, 0, ...)`` on each of the first ten groups.
    """
    if g < 1 or n < g:
        raise ValueError("need 1 <= g <= n")
    if m < 1:
        raise ValueError("m must be positive")
    rng = make_rng(seed)
    sizes = random_group_sizes(n, g, rng)
    partition = GroupPartition.contiguous(sizes)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    for G in partition.groups[:10]:
        k = min(10, len(G))
        x_true[G[:k]] = np.arange(1, k + 1)
    noise = rng.standard_normal(m) * noise_std if noise_std > 0 else np.zeros(m)
    b = A @ x_true + noise
    return A, b, partition, x_true


def contiguous_groups(n, avg_size, seed=0, weights="sqrt"):
    """Random contiguous partition with group sizes around ``avg_size``."""
    g = max(1, int(round(n / avg_size)))
    return GroupPartition.contiguous(random_group_sizes(n, g, make_rng(seed)), weights)


def _fmt(v):
    return repr(float(v))


def write_libsvm(path, A, b):
    A = A if isinstance(A, DesignMatrix) else DesignMatrix(A)
    rows = sparse.csr_matrix(A.raw)
    with open(path, "w") as fh:
        for i in range(A.m):
            lo, hi = rows.indptr[i], rows.indptr[i + 1]
            feats = " ".join(f"{j + 1}:{_fmt(v)}" for j, v in
                             zip(rows.indices[lo:hi], rows.data[lo:hi]) if v != 0)
            fh.write(f"{_fmt(b[i])} {feats}".rstrip() + "\n")


def read_libsvm(path, n_features=None):
    """Parse a LIBSVM file into a sparse design matrix and response vector."""
    labels, rows, cols, vals = [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
            i = len(labels) - 1
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise ParseError(f"line {lineno}: malformed token {tok!r}") from None
                if not sep:
                    raise ParseError(f"line {lineno}: malformed token {tok!r}")
                if j < 1:
                    raise ParseError(f"line {lineno}: index {j} < 1")
                if j <= last:
                    raise ParseError(f"line {lineno}: indices not strictly ascending at {j}")
                last = j
                rows.append(i)
                cols.append(j - 1)
                vals.append(v)
    if not labels:
        raise ParseError(f"{path}: no samples")
    n = max(cols) + 1 if cols else 0
    if n_features is not None:
        if n_features < n:
            raise ParseError(f"{path}: feature index {n} exceeds n_features={n_features}")
        n = n_features
    if n == 0:
        raise ParseError(f"{path}: no features")
    mat = sparse.csc_matrix((vals, (rows, cols)), shape=(len(labels), n))
    return DesignMatrix(mat), np.array(labels)


def write_groups(path, partition: GroupPartition):
    with open(path, "w") as fh:
        fh.writelines(f"{l + 1}\n" for l in partition.group_id)


def read_groups(path, n, weights="sqrt"):
    """Read one group id per line; ids are renumbered by first appearance."""
    ids = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                gid = int(line)
            except ValueError:
                raise ParseError(f"line {lineno}: group id {line!r} is not an integer") from None
            if gid < 1:
                raise ParseError(f"line {lineno}: group id must be positive")
            ids.append(gid)
    if len(ids) != n:
        raise ParseError(f"{path}: expected {n} group ids, found {len(ids)}")
    return GroupPartition.from_labels(ids, weights)


def write_vector(path, x):
    with open(path, "w") as fh:
        fh.writelines(f"{_fmt(v)}\n" for v in x)


def read_vector(path):
    return np.loadtxt(path, dtype=float, ndmin=1)


def file_digest(path):
    """SHA-256 of a file's bytes, used to identify inputs in reports."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _float17(v):
    # alternate form keeps trailing zeros, so the digit count never drops
    return format(v, "#.17g")


def _stash_floats(obj, table):
    # floats are swapped for placeholder strings so the encoder's shortest
    # repr can be replaced by a fixed 17-digit rendering
    if isinstance(obj, dict):
        return {k: _stash_floats(v, table) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_stash_floats(v, table) for v in obj]
    if isinstance(obj, float):
        table.append(_float17(obj))
        return f"\x00{len(table) - 1}\x00"
    return obj


def report_json(report: SolveReport, exclude=()):
    """Deterministic JSON text; every finite float carries 17 significant digits."""
    d = {k: v for k, v in report.to_dict().items() if k not in exclude}
    table = []
    text = json.dumps(_stash_floats(to_jsonable(d), table), indent=2, sort_keys=True)
    return re.sub(r'"\\u0000(\d+)\\u0000"', lambda mt: table[int(mt.group(1))], text)


def write_report(report: SolveReport, path):
    """Write the report as JSON (see :func:`report_json`)."""
    Path(path).write_text(report_json(report) + "\n")


def read_report(path) -> SolveReport:
    d = json.loads(Path(path).read_text())
    for key in ("pobj", "dobj", "eta_gap", "eta_dual", "wall_seconds"):
        d[key] = float(d[key])
    return SolveReport(**d)


def eta_p(report_other: SolveReport, report_ref: SolveReport):
    """Relative objective difference ``(obj_other - pobj) / (1 + |obj_other| + |pobj|)``."""
    a, b = report_other.pobj, report_ref.pobj
    return (a - b) / (1 + abs(a) + abs(b))
