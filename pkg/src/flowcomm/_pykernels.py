"""Reference implementations of the compiled kernels.

Same call signatures as ``_ckernels``.  ``num_threads`` is accepted and
ignored.  The CSR products go through scipy, whose row sums accumulate in
the same order as the compiled loop, so stepping agrees bitwise.
"""

import numpy as np
import scipy.sparse as sp


def _matmat(indptr, indices, data, x):
    n = x.shape[0]
    w = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    return w @ x


def operator_apply(indptr, indices, data, diag, x, out, num_threads=1):
    wx = _matmat(indptr, indices, data, x)
    np.subtract(diag[:, None] * x, wx, out=out)


def euler_step(indptr, indices, data, diag, x, h, out, num_threads=1):
    wx = _matmat(indptr, indices, data, x)
    # overflow surfaces as inf/nan, which the caller checks for
    with np.errstate(over="ignore", invalid="ignore"):
        lx = diag[:, None] * x - wx
        np.subtract(x, h * lx, out=out)


def edge_similarity(src, dst, theta, steady, unit_ratio, zero_tol, out, defined,
                    num_threads=1):
    ti = theta[src]
    tj = theta[dst]
    if unit_ratio:
        out[:] = np.cos(ti - tj).mean(axis=1)
        defined[:] = 1
        return
    si = steady[src]
    sj = steady[dst]
    ok = ((np.abs(si) >= zero_tol) & (np.abs(sj) >= zero_tol)).all(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = 0.5 * (np.cos(ti - (si / sj) * tj) + np.cos(tj - (sj / si) * ti))
    vals = terms.mean(axis=1)
    vals[~ok] = np.nan
    out[:] = vals
    defined[:] = ok


def threshold_labels(n, src, dst, sim, defined, threshold):
    parent = list(range(n))
    size = [1] * n

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    passing = np.flatnonzero(defined.astype(bool) & (sim >= threshold))
    for e in passing.tolist():
        a = find(int(src[e]))
        b = find(int(dst[e]))
        if a != b:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
    labels = np.full(n, -1, dtype=np.int64)
    root_label = {}
    for i in range(n):
        r = find(i)
        lab = root_label.get(r)
        if lab is None:
            lab = root_label[r] = len(root_label)
        labels[i] = lab
    return labels
