"""Coherent configurations and their adjacency algebras.

A configuration is a partition of I×I given as an integer class matrix.
Coherence is the classical three-condition audit: diagonal purity, transpose
closure, and well-defined intermediate-point counts.  The count check
compares, for every pair, the full multiset of (class to the middle point,
class from the middle point) values against the class representative — that
comparison IS the entrywise proof of the adjacency-algebra closure identity,
so the structure constants need no second verification pass.

Counts are held sparsely (a class triple can be nonzero for at most
|I| middle points per representative, so the tensor has at most s·|I|
nonzero cells); the dense tensor view is budget-guarded.
"""

import numpy as np

from .errors import BudgetExceeded, FormatError, NotCoherent
from .gf import FieldMatrix
from .wl import restrict_coloring, wl_refine

DENSE_TENSOR_BUDGET = 1 << 27


def _audit(n, cls):
    """The three conditions; returns (ok, cond, witness, key, s).

    key[a, b, :] holds cls[a, e] * s + cls[e, b] over middle points e; it is
    returned so count extraction can reuse it.
    """
    cls = np.asarray(cls, np.int64)
    if cls.shape != (n, n):
        raise FormatError("class matrix must be %dx%d" % (n, n))
    s = int(cls.max()) + 1 if cls.size else 0
    present = np.bincount(cls.reshape(-1), minlength=s)
    if cls.size and (cls.min() < 0 or (present == 0).any()):
        raise FormatError("class ids must cover 0..s-1 with no gaps")

    # condition (1): a class with a diagonal member is entirely diagonal
    diag = np.zeros((n, n), bool)
    np.fill_diagonal(diag, True)
    for c in np.unique(cls[diag]).tolist():
        off = np.nonzero((cls == c) & ~diag)
        if off[0].size:
            a = int(np.nonzero(np.diagonal(cls) == c)[0][0])
            witness = (c, (a, a), (int(off[0][0]), int(off[1][0])))
            return False, 1, witness, None, s

    # condition (2): the transpose of each class is a class
    t = cls.T
    for c in range(s):
        mask = cls == c
        vals = np.unique(t[mask])
        if vals.size > 1:
            locs = [tuple(int(x) for x in np.argwhere(mask & (t == v))[0])
                    for v in vals[:2]]
            return False, 2, (c,) + tuple(locs), None, s

    # condition (3): intermediate-point counts depend only on the class
    key = cls[:, None, :] * np.int64(s) + t[None, :, :]
    sig = np.sort(key, axis=2).reshape(n * n, n)
    _, sig_ids = np.unique(sig, axis=0, return_inverse=True)
    sig_ids = sig_ids.reshape(n, n)
    for c in range(s):
        vals = np.unique(sig_ids[cls == c])
        if vals.size > 1:
            locs = [tuple(int(x) for x in
                          np.argwhere((cls == c) & (sig_ids == v))[0])
                    for v in vals[:2]]
            return False, 3, (c,) + tuple(locs), None, s

    return True, None, None, key, s


def is_coherent(n, cls):
    """(ok, violated condition index or None, witness or None)."""
    ok, cond, witness, _, _ = _audit(n, cls)
    return ok, cond, witness


class CoherentConfig:
    """A verified coherent partition of I×I with its count triples.

    count_rows is an (nnz, 4) array of (i, j, k, count) in (i, j, k) order:
    count middle points e with (a,e) in class i, (e,b) in class j, for any
    (and by coherence every) representative (a,b) of class k.
    """

    def __init__(self, n, cls):
        ok, cond, witness, key, s = _audit(n, cls)
        if not ok:
            raise NotCoherent("condition (%d) violated at %r"
                              % (cond, witness),
                              condition=cond, witness=witness)
        self.n = int(n)
        cls = np.asarray(cls, np.int64).copy()
        cls.flags.writeable = False
        self.cls = cls
        self.num_classes = s

        rows = []
        flat = cls.reshape(-1)
        _, firsts = np.unique(flat, return_index=True)
        for c in range(s):
            a, b = divmod(int(firsts[c]), self.n)
            vals, cnts = np.unique(key[a, b], return_counts=True)
            block = np.empty((vals.size, 4), np.int64)
            block[:, 0] = vals // s
            block[:, 1] = vals % s
            block[:, 2] = c
            block[:, 3] = cnts
            rows.append(block)
        rows = np.concatenate(rows) if rows else np.empty((0, 4), np.int64)
        order = np.lexsort((rows[:, 2], rows[:, 1], rows[:, 0]))
        rows = rows[order]
        rows.flags.writeable = False
        self.count_rows = rows

    def count_tensor(self):
        """Dense (s, s, s) integer count tensor; guarded against blowup."""
        s = self.num_classes
        if s ** 3 > DENSE_TENSOR_BUDGET:
            raise BudgetExceeded(
                "dense count tensor needs %d cells" % s ** 3,
                required=s ** 3)
        out = np.zeros((s, s, s), np.int64)
        r = self.count_rows
        out[r[:, 0], r[:, 1], r[:, 2]] = r[:, 3]
        return out

    def class_matrix(self, c, field):
        return FieldMatrix(field, (self.cls == c).astype(np.int64))

    def diagonal_classes(self):
        return sorted(set(np.diagonal(self.cls).tolist()))

    def transpose_class(self, c):
        a, b = np.argwhere(self.cls == c)[0]
        return int(self.cls[b, a])

    def __repr__(self):
        return "CoherentConfig(n=%d, classes=%d)" % (self.n,
                                                     self.num_classes)


def structure_constants(cc, field):
    """Intermediate-point counts mod the field characteristic (dense).

    sc[i, j, k] is the coefficient of B_k in B_i·B_j, already proven
    well-defined by the coherence audit; reduction mod q preserves the
    closure identity because it holds over the integers.
    """
    return cc.count_tensor() % field.q


def config_from_coloring(col):
    """Pair partition of a width-2ℓ tuple coloring as a configuration."""
    assert col.k % 2 == 0, "need tuples of even length to split into pairs"
    half = col.n ** (col.k // 2)
    return CoherentConfig(half, col.ids.reshape(half, half))


def algebra_from_coloring(s, ell, k, field):
    """Adjacency algebra of the stable width-k classes of 2ℓ-tuples.

    Each stable class contributes one 0-1 matrix over A^ℓ × A^ℓ, in the
    coloring's canonical class order.  Closure holds whenever the induced
    pair partition is coherent (guaranteed by theory for k >= 3ℓ);
    NotCoherent otherwise.  Very large configurations can exceed the dense
    structure-constant budget — work with the CoherentConfig directly then.
    """
    assert ell >= 1
    col = wl_refine(s, max(k, 2 * ell), descriptors=False)
    if col.k != 2 * ell:
        col = restrict_coloring(col, 2 * ell)
    cc = config_from_coloring(col)
    basis = [cc.class_matrix(c, field) for c in range(cc.num_classes)]
    from .algebra import AlgebraBasis

    # independence: class matrices have pairwise disjoint supports; closure:
    # the coherence audit compared every pair's full count signature, which
    # is the entrywise closure identity — so the audit already verified what
    # verify=True would.
    return AlgebraBasis(field, basis,
                        structure_constants=structure_constants(cc, field),
                        verify=False)


def format_structure_constants(sc):
    """`c <i> <j> <k> <value>` lines, zeros omitted, row-major order."""
    lines = []
    for i, j, k in zip(*np.nonzero(sc)):
        lines.append("c %d %d %d %d" % (i, j, k, sc[i, j, k]))
    return "\n".join(lines) + ("\n" if lines else "")
