"""Hot elimination kernels: numba-jitted with a pure-numpy fallback.

The active path is chosen at import time.  Setting INVMAP_NO_JIT=1 (or
"true"/"yes") in the environment forces the numpy path even when numba is
installed; `backend()` reports which path is live.

All kernels work on int64 arrays holding residues in [0, q) for a prime
q <= 2**20, so every intermediate product/difference stays far inside the
int64 range.  Reduction is full Gauss-Jordan with first-nonzero pivot
selection scanning rows top-down, which makes every result deterministic.
"""

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

_flag = os.environ.get("INVMAP_NO_JIT", "").strip().lower()
USE_NUMBA = HAS_NUMBA and _flag not in ("1", "true", "yes")

JIT_OPTIONS = {"cache": True, "nogil": True}


def backend():
    """Name of the active kernel path: 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- loop path

def _modpow_src(a, e, q):
    r = 1
    a = a % q
    while e > 0:
        if e & 1:
            r = (r * a) % q
        a = (a * a) % q
        e >>= 1
    return r


def _rref_src(a, q):
    # In-place reduced row echelon form mod q; returns (rank, pivot columns).
    rows, cols = a.shape
    cap = rows if rows < cols else cols
    piv_cols = np.empty(cap, np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(c, cols):
                t = a[r, j]
                a[r, j] = a[piv, j]
                a[piv, j] = t
        v = a[r, c]
        if v != 1:
            inv = _modpow(v, q - 2, q)
            for j in range(c, cols):
                a[r, j] = (a[r, j] * inv) % q
        for i in range(rows):
            if i != r:
                f = a[i, c]
                if f != 0:
                    for j in range(c, cols):
                        a[i, j] = (a[i, j] - f * a[r, j]) % q
        piv_cols[r] = c
        r += 1
    return r, piv_cols[:r]


def _batch_rank_src(mats, q):
    n = mats.shape[0]
    out = np.empty(n, np.int64)
    for b in range(n):
        a = mats[b].copy()
        rank, _ = _rref(a, q)
        out[b] = rank
    return out


def _indicator_residual_src(c1, c2, bs, q, s):
    # For families M_i = [c1 == i], N_i = [c2 == i] the intertwiner
    # constraints at entry (a, c) say: for every class i, the bucket sum
    # of X[b, c] over {b : c1[a, b] = i} equals the bucket sum of
    # X[a, b] over {b : c2[b, c] = i}.  Buckets are accumulated with a
    # touched list so only visited classes are compared and reset.
    d = bs.shape[0]
    n1 = c1.shape[0]
    n2 = c2.shape[0]
    left = np.zeros(s, np.int64)
    right = np.zeros(s, np.int64)
    touched = np.empty(n1 + n2, np.int64)
    for j in range(d):
        for a in range(n1):
            for c in range(n2):
                nt = 0
                for b in range(n1):
                    i = c1[a, b]
                    if left[i] == 0 and right[i] == 0:
                        touched[nt] = i
                        nt += 1
                    left[i] += bs[j, b, c]
                for b in range(n2):
                    i = c2[b, c]
                    if left[i] == 0 and right[i] == 0:
                        touched[nt] = i
                        nt += 1
                    right[i] += bs[j, a, b]
                bad = -1
                for t in range(nt):
                    i = touched[t]
                    if (left[i] - right[i]) % q != 0:
                        bad = i
                    left[i] = 0
                    right[i] = 0
                if bad >= 0:
                    return j, bad
    return -1, -1


# ------------------------------------------------------------- numpy path

def _rref_numpy(a, q):
    rows, cols = a.shape
    cap = min(rows, cols)
    piv_cols = np.empty(cap, np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv], c:] = a[[piv, r], c:]
        v = int(a[r, c])
        if v != 1:
            a[r, c:] = a[r, c:] * pow(v, q - 2, q) % q
        f = a[:, c].copy()
        f[r] = 0
        if f.any():
            a[:, c:] = (a[:, c:] - np.outer(f, a[r, c:])) % q
        piv_cols[r] = c
        r += 1
    return r, piv_cols[:r]


def _batch_rank_numpy(mats, q):
    out = np.empty(mats.shape[0], np.int64)
    for b in range(mats.shape[0]):
        out[b] = _rref_numpy(mats[b].copy(), q)[0]
    return out


def _union_labels_src(us, vs, n_nodes):
    parent = np.arange(n_nodes)
    for e in range(us.shape[0]):
        a = us[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = vs[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a < b:
            parent[b] = a
        elif b < a:
            parent[a] = b
    for i in range(n_nodes):
        a = i
        while parent[a] != a:
            a = parent[a]
        parent[i] = a
    return parent


def _indicator_residual_numpy(c1, c2, bs, q, s):
    # Member-by-member masked check.  float64 keeps the matmuls in BLAS;
    # every intermediate is an exact integer well below 2**53 at the
    # matrix sizes the budgets allow.
    bsf = bs.astype(np.float64)
    for i in range(s):
        m1 = (c1 == i).astype(np.float64)
        m2 = (c2 == i).astype(np.float64)
        diff = (np.einsum("ab,jbc->jac", m1, bsf)
                - np.einsum("jab,bc->jac", bsf, m2)) % q
        bad = np.flatnonzero(diff.reshape(bs.shape[0], -1).any(axis=1))
        if bad.size:
            return int(bad[0]), i
    return -1, -1


if USE_NUMBA:
    _modpow = numba.njit(**JIT_OPTIONS)(_modpow_src)
    _rref = numba.njit(**JIT_OPTIONS)(_rref_src)
    _batch_rank = numba.njit(**JIT_OPTIONS)(_batch_rank_src)
    _indicator_residual = numba.njit(**JIT_OPTIONS)(_indicator_residual_src)
    _union_labels = numba.njit(**JIT_OPTIONS)(_union_labels_src)
else:
    _modpow = _modpow_src
    _rref = _rref_numpy
    _batch_rank = _batch_rank_numpy
    _indicator_residual = _indicator_residual_numpy
    _union_labels = _union_labels_src


def rref_inplace(a, q):
    """Reduce `a` (int64, 2-D, entries in [0, q)) in place; (rank, pivots)."""
    assert a.dtype == np.int64 and a.ndim == 2
    if a.shape[0] == 0 or a.shape[1] == 0:
        return 0, np.empty(0, np.int64)
    rank, piv = _rref(a, q)
    return int(rank), piv


def batch_rank(mats, q):
    """Ranks of a (B, n, m) int64 stack of matrices mod q."""
    assert mats.ndim == 3
    if mats.shape[0] == 0:
        return np.empty(0, np.int64)
    if mats.shape[1] == 0 or mats.shape[2] == 0:
        return np.zeros(mats.shape[0], np.int64)
    return _batch_rank(np.ascontiguousarray(mats), q)


def union_labels(us, vs, n_nodes):
    """Connected-component labels for edge lists over n_nodes vertices.

    Returns an int64 array mapping every node to the smallest node of its
    component (union by minimum with path compression, then a flattening
    pass).  Nodes without edges label themselves.
    """
    us = np.ascontiguousarray(us, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    assert us.shape == vs.shape
    return _union_labels(us, vs, n_nodes)


def indicator_residual(c1, c2, bs, q, s):
    """Locate a violated indicator-family intertwiner constraint.

    The family is M_i = [c1 == i], N_i = [c2 == i] for i in [0, s) with
    int64 value matrices c1 (n1, n1) and c2 (n2, n2); `bs` is a (d, n1,
    n2) int64 stack of candidates with entries in [0, q).  Returns a
    pair (basis element index, member index) of one violated constraint,
    or (-1, -1) when the whole stack intertwines every member.  The pick
    is deterministic for a given backend; callers may only rely on
    "some violation" semantics.
    """
    assert bs.ndim == 3
    if bs.shape[0] == 0:
        return -1, -1
    j, i = _indicator_residual(np.ascontiguousarray(c1),
                               np.ascontiguousarray(c2),
                               np.ascontiguousarray(bs), q, s)
    return int(j), int(i)
