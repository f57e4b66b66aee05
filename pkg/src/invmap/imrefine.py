"""Invertible-map partition refinement on k-tuples.

Refines the atomic types of the k-tuples of a finite relational structure
by a matrix-similarity condition: two tuples may stay in one class only
when, for every injective placement of a half-split index pair into the
tuple positions, the families of class-indicator matrices the two tuples
induce are simultaneously similar over F_p for every prime p in play.
Each round tests class members against a canonical representative and
applies the splits at the round barrier; the result is the coarsest
stable refinement, independent of test order.  Running the refinement on
a disjoint union and counting per-side tuples in every class turns it
into a structure distinguisher.
"""

import itertools

import numpy as np

from . import _kernels
from . import simsim
from . import structures
from . import wl
from .errors import BudgetExceeded, FormatError
from .gf import FieldMatrix, PrimeField


class ImPartition:
    """Stable invertible-map colouring of the k-tuples of one structure.

    `classes` is a TupleColoring over A^k whose ids refine the atomic
    types, never split an automorphism orbit, and are deterministic for a
    given input.  `history` records the class count after each executed
    round (the last round is always a zero-split confirmation pass).
    """

    def __init__(self, k, Q, classes, rounds, history=()):
        self.k = int(k)
        self.Q = tuple(sorted(int(q) for q in Q))
        self.classes = classes
        self.rounds = int(rounds)
        self.history = tuple(int(c) for c in history)

    @property
    def num_classes(self):
        return self.classes.num_classes

    def __repr__(self):
        return ("ImPartition(k=%d, Q=%r, classes=%d, rounds=%d)"
                % (self.k, self.Q, self.num_classes, self.rounds))


def _position_maps(k, m):
    """All injective placements of [2m] into the k tuple positions."""
    return tuple(itertools.permutations(range(k), 2 * m))


def _compress(cols):
    """Canonical ids for rows of stacked feature columns (lex ranked)."""
    arr = np.stack(cols, axis=1)
    uniq, inv = np.unique(arr, axis=0, return_inverse=True)
    return inv.astype(np.int64), len(uniq)


def _plane_sig(mat, q):
    """Cheap similarity-invariant signature of one value-matrix family.

    For the family M_i = [mat == i] the realized classes, the per-class
    ranks of the diagonal members (their support counts), and all product
    traces tr(M_i M_j) survive simultaneous similarity, so any mismatch
    splits without a decision call.  Everything reduces to bincounts on
    the value matrix.
    """
    realized = np.unique(mat)
    local = np.searchsorted(realized, mat)
    r = len(realized)
    diag = np.bincount(np.diagonal(local), minlength=r)
    codes = (local * r + local.T).ravel()
    ucodes, counts = np.unique(codes, return_counts=True)
    prod = counts % q
    keep = prod != 0
    return (tuple(realized.tolist()),
            tuple(diag.tolist()),
            tuple(ucodes[keep].tolist()),
            tuple(prod[keep].tolist()))


def _plane_ranks(mat, q):
    """Per-realized-class indicator ranks over F_q (decision invariant)."""
    realized = np.unique(mat)
    stack = (mat[None, :, :] == realized[:, None, None]).astype(np.int64)
    return tuple(_kernels.batch_rank(stack, q).tolist())


def _plane_pair_similar(cu, cv, field):
    """decide_sim_similar on the indicator families of two value matrices.

    Diagonal classes are contiguous after a stable sort of the diagonal
    values, which hands the decision procedure a matched block structure;
    a realized-set or diagonal-count mismatch is a rank refutation and
    returns False outright.
    """
    loc = np.unique(np.concatenate([cu.ravel(), cv.ravel()]))
    c1 = np.searchsorted(loc, cu)
    c2 = np.searchsorted(loc, cv)
    r1 = np.unique(c1)
    if not np.array_equal(r1, np.unique(c2)):
        return False
    g1 = np.diagonal(c1)
    g2 = np.diagonal(c2)
    d1 = np.sort(g1)
    if not np.array_equal(d1, np.sort(g2)):
        return False
    o1 = np.argsort(g1, kind="stable")
    o2 = np.argsort(g2, kind="stable")
    c1p = c1[np.ix_(o1, o1)]
    c2p = c2[np.ix_(o2, o2)]
    sizes = np.unique(d1, return_counts=True)[1]
    cip = simsim.ColouredIndexPair(sizes.tolist())
    ms = [FieldMatrix(field, (c1p == i).astype(np.int64)) for i in r1]
    ns = [FieldMatrix(field, (c2p == i).astype(np.int64)) for i in r1]
    fam = simsim.MatrixFamilyPair(field, cip, ms, ns)
    return simsim.decide_sim_similar(fam) is not None


def _plane_verdict(contents, u, v, field, cache):
    """Cached similarity verdict between two plane contents."""
    if u == v:
        return True
    ku = contents[u].tobytes()
    kv = contents[v].tobytes()
    if ku == kv:
        return True
    if kv < ku:
        u, v, ku, kv = v, u, kv, ku
    key = (field.q, ku, kv)
    if key not in cache:
        cache[key] = _plane_pair_similar(contents[u], contents[v], field)
    return cache[key]


class _Refiner:
    """One refinement run: geometry, per-round planes, and the verdict cache."""

    def __init__(self, s, k, qs):
        self.k = k
        self.qs = qs
        self.fields = [PrimeField(q) for q in qs]
        self.n = s.n
        self.total = wl._check_budget(self.n, k)
        self.m = k // 2
        self.side = self.n ** self.m
        if self.side * self.side > wl.TUPLE_BUDGET:
            raise BudgetExceeded(
                "similarity tests need %d-cell matrices"
                % (self.side * self.side),
                required=self.side * self.side)
        self.gammas = _position_maps(k, self.m)
        n, total = self.n, self.total
        strides = n ** (k - 1 - np.arange(k, dtype=np.int64))
        idx = np.arange(total, dtype=np.int64)
        digits = [(idx // strides[j]) % n for j in range(k)]
        self.gbase = []
        self.row_off = []
        self.col_off = []
        half = np.arange(self.side, dtype=np.int64)
        hdig = [(half // n ** (self.m - 1 - i)) % n for i in range(self.m)]
        for g in self.gammas:
            base = idx.copy()
            for j in g:
                base -= digits[j] * strides[j]
            self.gbase.append(base)
            r = np.zeros(self.side, np.int64)
            c = np.zeros(self.side, np.int64)
            for i in range(self.m):
                r += hdig[i] * strides[g[i]]
                c += hdig[i] * strides[g[self.m + i]]
            self.row_off.append(r)
            self.col_off.append(c)
        self.cache = {}

    def round(self, ids):
        """One refinement round; returns the new canonical ids."""
        if not self.qs:
            return ids
        # round-start planes: for every placement, the value matrix of
        # each rest assignment, deduplicated by content across placements
        contents = []
        content_key = {}
        plane_cid = []
        for gi in range(len(self.gammas)):
            bases, binv = np.unique(self.gbase[gi], return_inverse=True)
            mats = ids[bases[:, None, None]
                       + self.row_off[gi][None, :, None]
                       + self.col_off[gi][None, None, :]]
            local = np.empty(len(bases), np.int64)
            for bi in range(len(bases)):
                key = mats[bi].tobytes()
                if key not in content_key:
                    content_key[key] = len(contents)
                    contents.append(mats[bi])
                local[bi] = content_key[key]
            plane_cid.append(local[binv])

        # cheap pre-split: invariant signatures of each plane family,
        # with indicator ranks added only where the cheap part collides
        sigs = []
        for mat in contents:
            sigs.append(tuple(_plane_sig(mat, q) for q in self.qs))
        groups = {}
        for ci, sg in enumerate(sigs):
            groups.setdefault(sg, []).append(ci)
        full = [None] * len(contents)
        for sg, members in groups.items():
            if len(members) == 1:
                full[members[0]] = (sg, ())
            else:
                for ci in members:
                    full[ci] = (sg, tuple(_plane_ranks(contents[ci], q)
                                          for q in self.qs))
        order = {sg: i for i, sg in enumerate(sorted(set(full)))}
        sig_idx = np.array([order[sg] for sg in full], np.int64)
        cols = [ids]
        for gi in range(len(self.gammas)):
            cols.append(sig_idx[plane_cid[gi]])
        ids1, _ = _compress(cols)

        # decision step against the class representative (lowest tuple)
        _, reps = np.unique(ids1, return_index=True)
        rep_of = reps[ids1]
        cols = [ids1]
        for gi in range(len(self.gammas)):
            mc = plane_cid[gi]
            rc = mc[rep_of]
            pairs, pinv = np.unique(mc * len(contents) + rc,
                                    return_inverse=True)
            codes = np.empty(len(pairs), np.int64)
            for ui, pk in enumerate(pairs):
                u = int(pk // len(contents))
                v = int(pk % len(contents))
                code = 0
                for f in self.fields:
                    ok = _plane_verdict(contents, u, v, f, self.cache)
                    code = code * 2 + (0 if ok else 1)
                codes[ui] = code
            cols.append(codes[pinv])
        ids2, _ = _compress(cols)
        return ids2


def im_refine(s, k, Q):
    """Stable invertible-map partition of the k-tuples of `s`.

    Starts from the atomic types and, per round, tests every class
    member against the class representative: for each injective
    placement of the two halves of an index pair into the k positions
    (half length k // 2 — larger halves subsume smaller ones), the
    member's and the representative's class-indicator matrix families
    must be simultaneously similar over F_p for every p in Q.  Splits
    land at round barriers; iteration stops at the first zero-split
    round.  An empty Q leaves the condition vacuous, so the atomic
    partition is already stable.
    """
    k = int(k)
    if k < 2:
        raise FormatError("invertible-map refinement needs arity k >= 2")
    qs = tuple(sorted({int(q) for q in Q}))
    ref = _Refiner(s, k, qs)
    col = wl.atomic_types(s, k, descriptors=False)
    ids = col.ids.astype(np.int64)
    rounds = 0
    history = []
    while True:
        rounds += 1
        new_ids = ref.round(ids)
        grew = int(new_ids.max()) > int(ids.max()) if len(ids) else False
        ids = new_ids
        history.append(int(ids.max()) + 1 if len(ids) else 0)
        if not grew:
            break
    classes = wl.TupleColoring(ref.n, k, ids, rounds=rounds)
    return ImPartition(k, qs, classes, rounds, history)


def _im_union(a, b, k, Q):
    """Shared core for the pair comparison: union partition + side counts."""
    if a.signature != b.signature:
        raise FormatError("signature mismatch: %r versus %r"
                          % (a.signature, b.signature))
    union = structures.disjoint_union(a, b)
    part = im_refine(union, k, Q)
    left_mask, right_mask = wl._side_masks(union.n, k, a.n)
    ids = part.classes.ids
    ncl = part.num_classes
    left = np.bincount(ids[left_mask], minlength=ncl)
    right = np.bincount(ids[right_mask], minlength=ncl)
    return union, part, left, right


def im_equivalent(a, b, k, Q):
    """True when the width-k refinement with primes Q cannot split a from b.

    Runs im_refine on the disjoint union; the structures are equivalent
    exactly when every class holds equally many pure-left and pure-right
    tuples.
    """
    _, _, left, right = _im_union(a, b, k, Q)
    return bool(np.array_equal(left, right))


def im_orbit_check(s, k, Q):
    """Compare the refinement against the automorphism-orbit partition.

    Returns a report dict: class counts on both sides, the orbit classes
    the refinement splits (always none — splitting an orbit would break
    soundness), the refinement classes that merge several orbits, and
    whether the two partitions coincide exactly.
    """
    part = im_refine(s, k, Q)
    orb = structures.orbit_partition(s, k)
    im_ids = part.classes.ids
    orb_ids = orb.ids
    pairs = np.unique(np.stack([im_ids, orb_ids], axis=1), axis=0)
    split_orbits = np.unique(pairs[:, 1][
        np.bincount(pairs[:, 1])[pairs[:, 1]] > 1])
    merged = np.unique(pairs[:, 0][
        np.bincount(pairs[:, 0])[pairs[:, 0]] > 1])
    return {
        "im_classes": int(part.num_classes),
        "orbit_classes": int(orb.num_classes),
        "rounds": part.rounds,
        "split_orbits": split_orbits,
        "merged_classes": merged,
        "exact": bool(split_orbits.size == 0 and merged.size == 0),
    }
