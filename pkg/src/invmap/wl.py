"""Counting-width partition refinement on k-tuples of a finite structure.

Tuples are indexed row-major (index = sum of t_j * n^(k-1-j)).  Class ids are
canonical: they are the lexicographic ranks of the refinement keys, which are
themselves built from canonical ingredients only, so two isomorphic
structures always produce identical id arrays up to the induced tuple
bijection — and identical class descriptors.

The refinement round follows the counting semantics: each tuple's new key is
its previous class together with, for every position j, the multiset over
substituted elements b of (class reached by putting b at position j, relative
atomic type of b with respect to the whole tuple).  Carrying the relative
type makes width 1 coincide with classic color refinement instead of
degenerating to atomic types.
"""

import itertools

import numpy as np

from .errors import BudgetExceeded

TUPLE_BUDGET = 1 << 25


class TupleColoring:
    """Ordered partition of the k-tuples over universe 0..n-1.

    ids maps tuple index -> class id in 0..num_classes-1 (canonical order).
    descriptors, when present, is a per-class tuple of fully-resolved
    refinement-history values.
    """

    def __init__(self, n, k, ids, descriptors=None, rounds=None):
        self.n = int(n)
        self.k = int(k)
        ids = np.asarray(ids, np.int64)
        assert ids.shape == (self.n ** self.k,)
        ids.flags.writeable = False
        self.ids = ids
        self.num_classes = int(ids.max()) + 1 if ids.size else 0
        self.class_sizes = np.bincount(ids, minlength=self.num_classes)
        self.descriptors = descriptors
        self.rounds = rounds

    def tuple_index(self, t):
        assert len(t) == self.k
        idx = 0
        for x in t:
            assert 0 <= x < self.n
            idx = idx * self.n + int(x)
        return idx

    def class_of(self, t):
        return int(self.ids[self.tuple_index(t)])

    def tuples_of_class(self, c, limit=None):
        where = np.nonzero(self.ids == c)[0]
        if limit is not None:
            where = where[:limit]
        out = []
        for idx in where:
            idx = int(idx)
            t = []
            for _ in range(self.k):
                t.append(idx % self.n)
                idx //= self.n
            out.append(tuple(reversed(t)))
        return out

    def refines(self, other):
        """True when every class of self sits inside one class of other."""
        if (self.n, self.k) != (other.n, other.k):
            return False
        pair = self.ids * np.int64(other.num_classes + 1) + other.ids
        return np.unique(pair).size == np.unique(self.ids).size

    def same_partition(self, other):
        return self.refines(other) and other.refines(self)

    def report_lines(self, verbose=False, max_tuples=None):
        lines = []
        for c in range(self.num_classes):
            lines.append("class %d size %d" % (c, int(self.class_sizes[c])))
            if verbose:
                for t in self.tuples_of_class(c, limit=max_tuples):
                    lines.append("  " + " ".join(str(x) for x in t))
        return lines

    def __repr__(self):
        return "TupleColoring(n=%d, k=%d, classes=%d)" % (
            self.n, self.k, self.num_classes)


def _check_budget(n, k):
    total = n ** k
    if total > TUPLE_BUDGET:
        raise BudgetExceeded("%d^%d = %d tuples exceed budget %d"
                             % (n, k, total, TUPLE_BUDGET), required=total)
    return total


def _digit(n, k, j, idx):
    return (idx // n ** (k - 1 - j)) % n


def _compress_pair(ids, feat, width):
    """Re-rank lexicographically by (ids, feat); feat values in [0, width)."""
    key = ids * np.int64(width) + feat
    uniq, inv = np.unique(key, return_inverse=True)
    return inv.astype(np.int64), uniq


def _atomic_features(s, k):
    """Yield (descriptor, per-tuple value array, width) in canonical order."""
    n = s.n
    total = n ** k
    idx = np.arange(total)
    digits = [_digit(n, k, j, idx) for j in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            yield ("eq", i, j), (digits[i] == digits[j]).astype(np.int64), 2
    for name, r in s.signature:
        dense = s.dense(name)
        for mu in itertools.product(range(k), repeat=r):
            val = dense[tuple(digits[m] for m in mu)].astype(np.int64)
            yield ("in", name) + mu, val, 2


def atomic_types(s, k, descriptors=True):
    """Partition by equality pattern and relation memberships.

    Ids are the lexicographic ranks of the feature vectors, taken over the
    fixed canonical feature order (equalities first, then relation
    memberships per signature entry and index map).
    """
    total = _check_budget(s.n, k)
    ids = np.zeros(total, np.int64)
    for _, val, width in _atomic_features(s, k):
        ids, _ = _compress_pair(ids, val, width)
    desc = None
    if descriptors:
        # per-class descriptor via one representative per class
        _, rep = np.unique(ids, return_index=True)
        desc_rows = [[] for _ in rep]
        for d, val, _ in _atomic_features(s, k):
            for i, r in enumerate(rep):
                desc_rows[i].append((d, int(val[r])))
        desc = tuple(tuple(row) for row in desc_rows)
    return TupleColoring(s.n, k, ids, descriptors=desc, rounds=0)


def _relative_codes(s, k):
    """Compact codes of the relative atomic type of (tuple, b) pairs.

    Returns (codes, width): codes[t, b] ranks the bit vector
    (b == t_i for each i; membership of every index map over positions
    0..k that actually uses the substituted slot k).  The bit order is
    canonical, and ranks come from sorting the packed values, so codes are
    stable across isomorphic structures.
    """
    n = s.n
    total = n ** k
    idx = np.arange(total)
    digits = [_digit(n, k, j, idx).reshape(-1, 1) for j in range(k)]
    b_row = np.arange(n).reshape(1, -1)
    acc = np.zeros((total, n), np.int64)
    width = 1

    def push(bit):
        nonlocal acc, width
        if width > 1 << 61:
            _, inv = np.unique(acc, return_inverse=True)
            acc = inv.reshape(acc.shape).astype(np.int64)
            width = int(acc.max()) + 1
        acc = acc * 2 + bit
        width *= 2

    for i in range(k):
        push((digits[i] == b_row).astype(np.int64))
    for name, r in s.signature:
        dense = s.dense(name)
        for mu in itertools.product(range(k + 1), repeat=r):
            if k not in mu:
                continue  # no substituted slot: constant over b, not relative
            sel = tuple(digits[m] if m < k else b_row for m in mu)
            push(dense[sel].astype(np.int64))
    uniq, inv = np.unique(acc, return_inverse=True)
    return inv.reshape(total, n).astype(np.int64), uniq.shape[0]


def _round_once(ids, n, k, rel_codes, rel_width, history=True):
    """One counting refinement round; returns (new ids, per-class history)."""
    nd = ids.reshape((n,) * k)
    new_ids = ids
    sig_data = []
    for j in range(k):
        sub = np.expand_dims(np.moveaxis(nd, j, -1), j)
        sub = np.broadcast_to(sub, (n,) * k + (n,)).reshape(-1, n)
        rows = np.sort(sub * np.int64(rel_width) + rel_codes, axis=1)
        urows, rinv = np.unique(rows, axis=0, return_inverse=True)
        new_ids, _ = _compress_pair(new_ids, rinv, urows.shape[0])
        if history:
            sig_data.append((urows, rinv))
    if not history:
        return new_ids, None
    _, rep = np.unique(new_ids, return_index=True)
    hist = []
    for r in rep:
        entry = [int(ids[r])]
        for urows, rinv in sig_data:
            row = urows[int(rinv[r])]
            pairs = [(int(v) // rel_width, int(v) % rel_width) for v in row]
            vals, counts = np.unique(np.array(pairs), axis=0,
                                     return_counts=True)
            entry.append(tuple((tuple(v), int(c))
                               for v, c in zip(vals.tolist(), counts)))
        hist.append(tuple(entry))
    return new_ids, tuple(hist)


def wl_refine(s, k, descriptors=True):
    """Coarsest stable counting refinement of the atomic k-tuple types.

    Runs full-resplit rounds until a round leaves the class count unchanged
    (features include the previous ids, so equal count means an identical
    partition — the closing round certifies stability).
    """
    col = atomic_types(s, k, descriptors=descriptors)
    rel_codes, rel_width = _relative_codes(s, k)
    ids = col.ids
    histories = [col.descriptors]
    rounds = 0
    while True:
        new_ids, hist = _round_once(ids, s.n, k, rel_codes, rel_width,
                                    history=descriptors)
        if int(new_ids.max()) + 1 == int(ids.max()) + 1:
            break
        ids = new_ids
        histories.append(hist)
        rounds += 1
    desc = _resolve_histories(histories) if descriptors else None
    return TupleColoring(s.n, k, ids, descriptors=desc, rounds=rounds)


def _resolve_histories(histories):
    """Expand per-round (prev-class, multisets) chains into full descriptors."""
    full = histories[0]
    for hist in histories[1:]:
        full = tuple((full[entry[0]],) + entry[1:] for entry in hist)
    return full


def counting_type_order(col):
    """Classes in canonical order: (ordinal, size, resolved descriptor)."""
    assert col.descriptors is not None
    return [(c, int(col.class_sizes[c]), col.descriptors[c])
            for c in range(col.num_classes)]


def restrict_coloring(col, ell):
    """Project a width-k coloring onto ell-tuples (pad with the last entry)."""
    assert 1 <= ell <= col.k
    n = col.n
    idx = np.arange(n ** ell)
    last = idx % n
    full = idx
    for _ in range(col.k - ell):
        full = full * n + last
    sub = col.ids[full]
    _, inv = np.unique(sub, return_inverse=True)
    return TupleColoring(n, ell, inv.astype(np.int64))


def _side_masks(n, k, n_a):
    """Boolean masks of pure-left and pure-right tuple indices."""
    idx = np.arange(n ** k)
    left = np.ones(idx.shape, bool)
    right = np.ones(idx.shape, bool)
    for j in range(k):
        d = _digit(n, k, j, idx)
        left &= d < n_a
        right &= d >= n_a
    return left, right


class CompareResult:
    """Outcome of a two-structure comparison on the disjoint union."""

    def __init__(self, equivalent, coloring, left_counts, right_counts, n_a):
        self.equivalent = bool(equivalent)
        self.coloring = coloring
        self.left_counts = left_counts
        self.right_counts = right_counts
        self.n_a = n_a


def wl_compare(a, b, k):
    """Refine the disjoint union and compare per-class pure-side counts."""
    from .structures import disjoint_union

    union = disjoint_union(a, b)
    col = wl_refine(union, k, descriptors=False)
    left, right = _side_masks(union.n, k, a.n)
    lc = np.bincount(col.ids[left], minlength=col.num_classes)
    rc = np.bincount(col.ids[right], minlength=col.num_classes)
    return CompareResult(bool(np.array_equal(lc, rc)), col, lc, rc, a.n)


def wl_equivalent(a, b, k):
    """True when counting refinement at width k cannot tell a from b."""
    return wl_compare(a, b, k).equivalent
