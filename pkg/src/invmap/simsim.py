"""Simultaneous matrix similarity over prime fields.

Given two K-indexed families of square matrices, decide whether one
invertible matrix conjugates every member of the first family onto the
corresponding member of the second.  The decision works through the space
of intertwiners (matrices X with M_k X = X N_k for all k) viewed as a
module over the centralizer algebra of the first family: an invertible
intertwiner exists exactly when that module is cyclic with an invertible
generator, and for block-structured families the question restricts to the
diagonal blocks.  A brute-force enumeration oracle covers tiny instances.
"""

import numpy as np

from .algebra import (AlgebraBasis, FULL_BUDGET, ModuleBasis, RANDOM_TRIALS,
                      SEARCH_BUDGET, _CHUNK, _digits_block, _solve_many,
                      is_cyclic_module)
from .errors import (BudgetExceeded, DimensionMismatch, FieldMismatch,
                     FormatError, InvViolated)
from .gf import (FieldMatrix, PrimeField, format_matrix, is_invertible,
                 kernel_raw, parse_matrix_block, rank, rank_raw)
from . import _kernels

BRUTE_BUDGET = 1 << 21


class ColouredIndexPair:
    """Matched ordered partitions of two equal-size index sets.

    Both sides are the index range 0..total-1 split into consecutive colour
    classes; corresponding classes must have equal sizes (which forces the
    boundaries to coincide, but the two sides remain conceptually separate).
    """

    def __init__(self, sizes_i, sizes_j=None):
        if sizes_j is None:
            sizes_j = sizes_i
        self.sizes_i = tuple(int(x) for x in sizes_i)
        self.sizes_j = tuple(int(x) for x in sizes_j)
        if len(self.sizes_i) != len(self.sizes_j):
            raise DimensionMismatch("both sides need the same number of "
                                    "colour classes")
        if not self.sizes_i:
            raise FormatError("index sets must be non-empty")
        for k, (a, b) in enumerate(zip(self.sizes_i, self.sizes_j)):
            if a < 1 or b < 1:
                raise FormatError("colour classes must be non-empty")
            if a != b:
                raise DimensionMismatch(
                    "colour class %d has sizes %d versus %d" % (k, a, b))
        self.num_classes = len(self.sizes_i)
        self.total = sum(self.sizes_i)
        bounds = np.concatenate([[0], np.cumsum(self.sizes_i)])
        self.bounds = bounds
        # class id of each index, identical on both sides by the size match
        self.index_class = np.repeat(np.arange(self.num_classes),
                                     self.sizes_i)

    def block_range(self, k):
        if not 0 <= k < self.num_classes:
            raise IndexError("block %d out of range (0..%d)"
                             % (k, self.num_classes - 1))
        return int(self.bounds[k]), int(self.bounds[k + 1])

    def diag_mask(self):
        """Boolean mask of the union of diagonal blocks I_k x J_k."""
        return self.index_class[:, None] == self.index_class[None, :]

    def cell_of(self, a):
        """(k, l) if the array's support sits in one block cell, else None.

        The zero matrix is a block matrix for every cell; it reports (0, 0).
        """
        rows, cols = np.nonzero(a)
        if rows.size == 0:
            return (0, 0)
        rc = np.unique(self.index_class[rows])
        cc = np.unique(self.index_class[cols])
        if rc.size == 1 and cc.size == 1:
            return int(rc[0]), int(cc[0])
        return None

    def __repr__(self):
        return "ColouredIndexPair(classes=%d, total=%d)" % (
            self.num_classes, self.total)


class MatrixFamilyPair:
    """Two equally indexed families of square matrices over one field."""

    def __init__(self, field, cip, ms, ns):
        self.field = field
        self.cip = cip
        self.ms = list(ms)
        self.ns = list(ns)
        if len(self.ms) != len(self.ns):
            raise DimensionMismatch("families must have equal length")
        n = cip.total
        for m in self.ms + self.ns:
            if m.field.q != field.q:
                raise FieldMismatch("family member over F_%d in F_%d pair"
                                    % (m.field.q, field.q))
            if (m.rows, m.cols) != (n, n):
                raise DimensionMismatch(
                    "family members must be %dx%d per the index pair" % (n, n))
        self.size = len(self.ms)

    def __repr__(self):
        return "MatrixFamilyPair(q=%d, n=%d, members=%d)" % (
            self.field.q, self.cip.total, self.size)


def _diag_support(ms, ns):
    """Support mask forced by pairs of diagonal family members, or None.

    When M_k = diag(u) must satisfy M_k X = X N_k with N_k = diag(v), the
    entry X[a, b] dies unless u[a] = v[b], so each such pair cuts the
    support of every intertwiner at no cost.  Returns a bool mask only
    when it actually removes cells.
    """
    allowed = None
    for m, nmat in zip(ms, ns):
        ma, na = m.a, nmat.a
        if ma.shape[0] != ma.shape[1] or na.shape[0] != na.shape[1]:
            continue
        du = np.diagonal(ma)
        dv = np.diagonal(na)
        if (ma != np.diag(du)).any() or (na != np.diag(dv)).any():
            continue
        cut = du[:, None] == dv[None, :]
        allowed = cut if allowed is None else allowed & cut
    if allowed is None or allowed.all():
        return None
    return allowed


def _indicator_pair(ms, ns):
    """Value matrices (c1, c2) when the family is a 0-1 tiling, else None.

    Recognizes families where the members of each side are disjoint 0-1
    matrices covering the full grid exactly once; the family is then
    equivalent to a pair of value matrices, which unlocks the bucket-sum
    residual kernel.
    """
    if len(ms) < 3:
        return None
    c1 = None
    c2 = None
    for side, mats in ((0, ms), (1, ns)):
        stack = np.stack([m.a for m in mats])
        if ((stack != 0) & (stack != 1)).any():
            return None
        if (stack.sum(axis=0) != 1).any():
            return None
        vals = np.tensordot(np.arange(len(mats), dtype=np.int64), stack,
                            axes=1)
        if side == 0:
            c1 = vals
        else:
            c2 = vals
    return c1, c2


def _entry_basis(c1, c2):
    """Basis respecting every partial-permutation member of a tiling pair.

    A member whose cells form at most one entry per row and per column on
    both sides acts like a partial permutation, so its intertwiner
    constraint only identifies entries of X with one another or forces
    them to zero.  All such members together collapse into connected
    components of an entry graph; the surviving components span the
    subspace those members cut out, which contains the full intertwiner
    space.  Returns None when no member is permutation-like.
    """
    n1 = c1.shape[0]
    n2 = c2.shape[0]
    s = int(max(c1.max(), c2.max())) + 1

    def _occ(mat, size):
        rows = np.repeat(np.arange(size), size)
        cols = np.tile(np.arange(size), size)
        flat = mat.ravel()
        by_row = np.bincount(flat * size + rows,
                             minlength=s * size).reshape(s, size)
        by_col = np.bincount(flat * size + cols,
                             minlength=s * size).reshape(s, size)
        return (by_row <= 1).all(axis=1) & (by_col <= 1).all(axis=1)

    perm = _occ(c1, n1) & _occ(c2, n2)
    if not perm.any():
        return None

    zero = n1 * n2
    us = []
    vs = []
    all1 = np.arange(n1)
    all2 = np.arange(n2)
    for i in np.flatnonzero(perm):
        a1, b1 = np.nonzero(c1 == i)
        b2, cc2 = np.nonzero(c2 == i)
        # matching cells identify X[pi1(a), c'] with X[a, pi2pre(c')]
        us.append((b1[:, None] * n2 + cc2[None, :]).ravel())
        vs.append((a1[:, None] * n2 + b2[None, :]).ravel())
        # rows hit on one side only force zeros
        nc = all2[~np.isin(all2, cc2, assume_unique=True)]
        if b1.size and nc.size:
            z = (b1[:, None] * n2 + nc[None, :]).ravel()
            us.append(z)
            vs.append(np.full(z.size, zero, np.int64))
        na = all1[~np.isin(all1, a1, assume_unique=True)]
        if na.size and b2.size:
            z = (na[:, None] * n2 + b2[None, :]).ravel()
            us.append(z)
            vs.append(np.full(z.size, zero, np.int64))
    labels = _kernels.union_labels(np.concatenate(us), np.concatenate(vs),
                                   zero + 1)
    lab = labels[:zero]
    live = np.flatnonzero(lab != labels[zero])
    if live.size == 0:
        return np.zeros((0, zero), np.int64)
    _, inv = np.unique(lab[live], return_inverse=True)
    basis = np.zeros((int(inv.max()) + 1, zero), np.int64)
    basis[inv, live] = 1
    return basis


def _space_stack(ms, ns, q, n=None, presolve=True):
    """Basis stack (d, n, n) of {X : M_k X = X N_k for all k}.

    The kernel is intersected constraint by constraint, with three
    savings.  For tiling families of 0-1 indicators, the
    permutation-like members collapse X analytically to an entry-graph
    component basis; otherwise diagonal member pairs still pin the
    support of X up front.  With presolve on, a few pseudo-random
    aggregate constraints (weighted sums of the whole family — satisfied
    by every intertwiner) collapse the dimension before any per-member
    work.  Tiling families are then verified wholesale through a
    bucket-sum residual kernel, spending exact elimination passes only
    on members the check finds violated; other families take one exact
    pass per member.
    """
    rI = ms[0].rows if ms else n
    rJ = ns[0].rows if ns else n
    veclen = rI * rJ

    pair = _indicator_pair(ms, ns)
    basis = None
    if pair is not None:
        basis = _entry_basis(pair[0], pair[1])
    if basis is None:
        allowed = _diag_support(ms, ns)
        if allowed is None:
            basis = np.eye(veclen, dtype=np.int64)
        else:
            cells = np.flatnonzero(allowed.ravel())
            basis = np.zeros((cells.size, veclen), np.int64)
            basis[np.arange(cells.size), cells] = 1

    def constrain(m, n):
        nonlocal basis
        if basis.shape[0] == 0:
            return
        bs = basis.reshape(-1, rI, rJ)
        imgs = (np.einsum("ab,jbc->jac", m, bs)
                - np.einsum("jab,bc->jac", bs, n)) % q
        coeffs = kernel_raw(imgs.reshape(len(bs), veclen).T, q)
        basis = coeffs @ basis % q

    if presolve and len(ms) > 2:
        rng = np.random.default_rng(0)
        mstack = np.stack([m.a for m in ms])
        nstack = np.stack([n.a for n in ns])
        for _ in range(4):
            w = rng.integers(0, q, size=len(ms))
            constrain(np.tensordot(w, mstack, axes=1) % q,
                      np.tensordot(w, nstack, axes=1) % q)

    if pair is not None:
        c1, c2 = pair
        while basis.shape[0]:
            j, k = _kernels.indicator_residual(
                c1, c2, basis.reshape(-1, rI, rJ), q, len(ms))
            if j < 0:
                break
            # the violated member's exact pass strictly shrinks the span
            constrain(ms[k].a, ns[k].a)
    else:
        for m, n in zip(ms, ns):
            constrain(m.a, n.a)
    return basis.reshape(-1, rI, rJ)


def centralizer(mats):
    """Algebra of all matrices commuting with every family member."""
    if not mats:
        raise DimensionMismatch("centralizer needs at least one matrix")
    field = mats[0].field
    n = mats[0].rows
    for m in mats:
        if m.rows != m.cols or m.rows != n:
            raise DimensionMismatch("centralizer needs square matrices of "
                                    "one shape")
    stack = _space_stack(mats, mats, field.q)
    basis = [FieldMatrix(field, b) for b in stack]
    alg = AlgebraBasis(field, basis)
    # the identity commutes with everything, so it must lie in the span
    ident = np.eye(n, dtype=np.int64).reshape(-1)
    if _solve_many(stack.reshape(len(basis), -1).T.copy(),
                   ident.reshape(-1, 1), field.q) is None:
        raise InvViolated("centralizer span lost the identity matrix")
    return alg


def _module_over(alg, stack, shape, field):
    """ModuleBasis for a stack of matrices closed under the algebra action."""
    d = stack.shape[0]
    action = np.zeros((alg.dim, d, d), np.int64)
    if d:
        vecs = stack.reshape(d, -1)
        for i, b in enumerate(alg.basis):
            imgs = np.einsum("ab,jbc->jac", b.a, stack) % field.q
            co = _solve_many(vecs.T.copy(), imgs.reshape(d, -1).T.copy(),
                             field.q)
            if co is None:
                raise InvViolated("algebra action left the module span")
            action[i] = co.T
    mats = [FieldMatrix(field, m) for m in stack]
    return ModuleBasis(field, shape, mats, action, alg=alg)


def intertwiner_space(fam):
    """The space of X with M_k X = X N_k, as a module over centralizer(M)."""
    n = fam.cip.total
    stack = _space_stack(fam.ms, fam.ns, fam.field.q, n=n)
    # an empty family constrains nothing; its centralizer is everything,
    # which the singleton family of the identity also produces
    cmats = fam.ms if fam.ms else [FieldMatrix.identity(fam.field, n)]
    alg = centralizer(cmats)
    return _module_over(alg, stack, (n, n), fam.field)


def diag_project(s, cip, block=None):
    """Zero a matrix outside the (one or all) diagonal colour blocks."""
    if (s.rows, s.cols) != (cip.total, cip.total):
        raise DimensionMismatch("matrix is %dx%d, index pair wants %dx%d"
                                % (s.rows, s.cols, cip.total, cip.total))
    if block is None:
        mask = cip.diag_mask()
    else:
        lo, hi = cip.block_range(block)
        mask = np.zeros((cip.total, cip.total), bool)
        mask[lo:hi, lo:hi] = True
    return FieldMatrix(s.field, np.where(mask, s.a, 0))


def check_block_properties(fam):
    """Block-generation and faithfulness of a family pair.

    block_generated: every member pair splits cellwise into compatible
    block pieces that each lie (as a pair, with shared coefficients) in the
    span of the family pairs.  faithful: additionally, for every colour
    class the per-block identity pair is literally a member.
    """
    cip, q = fam.cip, fam.field.q
    cls = cip.index_class
    span = np.stack([np.concatenate([m.a.reshape(-1), n.a.reshape(-1)])
                     for m, n in zip(fam.ms, fam.ns)]) if fam.size else None
    pieces = []
    for m, n in zip(fam.ms, fam.ns):
        if cip.cell_of(m.a) is not None and cip.cell_of(m.a) == cip.cell_of(n.a):
            continue  # already a compatible block pair
        cells = set()
        for a in (m.a, n.a):
            r, c = np.nonzero(a)
            cells.update(zip(cls[r].tolist(), cls[c].tolist()))
        for (ca, cb) in sorted(cells):
            rmask = cls == ca
            cmask = cls == cb
            keep = np.outer(rmask, cmask)
            pm = np.where(keep, m.a, 0).reshape(-1)
            pn = np.where(keep, n.a, 0).reshape(-1)
            pieces.append(np.concatenate([pm, pn]))
    if pieces:
        sols = _solve_many(span.T.copy(),
                           np.stack(pieces).T.copy(), q)
        block_generated = sols is not None
    else:
        block_generated = True

    faithful = block_generated
    if faithful:
        n = cip.total
        for k in range(cip.num_classes):
            lo, hi = cip.block_range(k)
            target = np.zeros((n, n), np.int64)
            target[lo:hi, lo:hi] = np.eye(hi - lo, dtype=np.int64)
            if not any(np.array_equal(m.a, target)
                       and np.array_equal(nn.a, target)
                       for m, nn in zip(fam.ms, fam.ns)):
                faithful = False
                break
    return {"block_generated": block_generated, "faithful": faithful}


def _invertible_combo(mats, q, seed=0):
    """Coordinates c with sum c_i mats_i invertible, or None; exact ladder."""
    d = len(mats)
    if d == 0:
        return None
    m = mats[0].shape[0]
    stack = np.stack(mats)

    def batch_ok(block):
        cand = np.tensordot(block % q, stack, axes=([1], [0])) % q
        cand = np.ascontiguousarray(cand.astype(np.int64))
        return _kernels.batch_rank(cand, q) == m

    def exhaust():
        for lead in range(d):
            free = d - 1 - lead
            total = q ** free
            for start in range(0, total, _CHUNK):
                count = min(_CHUNK, total - start)
                block = np.zeros((count, d), np.int64)
                block[:, lead] = 1
                if free:
                    block[:, lead + 1:] = _digits_block(start, count, q, free)
                hits = np.nonzero(batch_ok(block))[0]
                if hits.size:
                    return block[hits[0]]
        return None

    if q ** d <= SEARCH_BUDGET:
        return exhaust()
    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_TRIALS):
        c = rng.integers(0, q, size=d)
        if c.any() and batch_ok(c.reshape(1, -1))[0]:
            return c
    for i in range(d):
        for j in range(i, d):
            block = []
            for a in range(1, q):
                for b in range(q) if j > i else [0]:
                    c = np.zeros(d, np.int64)
                    c[i] = a
                    c[j] = (c[j] + b) % q
                    block.append(c)
            hits = np.nonzero(batch_ok(np.stack(block)))[0]
            if hits.size:
                return block[hits[0]]
    if q ** d <= FULL_BUDGET:
        return exhaust()
    raise BudgetExceeded("invertibility search needs %d^%d candidates"
                         % (q, d), required=q ** d)


def is_loc_sim_similar(fam, space=None):
    """Per-block invertible diagonal projections of the intertwiner space.

    Returns (all_blocks_ok, witnesses); witnesses[l] is a full member of
    the space whose l-th diagonal projection is invertible, or None.
    """
    cip, q = fam.cip, fam.field.q
    if space is None:
        space = _space_stack(fam.ms, fam.ns, q, n=cip.total)
    ok_all = True
    witnesses = []
    for ell in range(cip.num_classes):
        lo, hi = cip.block_range(ell)
        projs = space[:, lo:hi, lo:hi]
        flat = projs.reshape(space.shape[0], -1)
        # keep one space element per independent projection
        _, piv = _kernels.rref_inplace(flat.T.copy() % q, q)
        idx = [int(p) for p in piv]
        if not idx:
            ok_all = False
            witnesses.append(None)
            continue
        coords = _invertible_combo([projs[i] for i in idx], q)
        if coords is None:
            ok_all = False
            witnesses.append(None)
        else:
            full = np.tensordot(coords, space[idx], axes=1) % q
            witnesses.append(FieldMatrix(fam.field, full))
    return ok_all, witnesses


def _diag_subspace(stack, cip, q):
    """Restrict a stack of matrices to its diagonal-block-supported part."""
    if stack.shape[0] == 0:
        return stack
    off = ~cip.diag_mask()
    rows = stack[:, off] % q
    coeffs = kernel_raw(rows.T, q)
    return coeffs @ stack.reshape(stack.shape[0], -1) % q


def _verify_witness(fam, s):
    """Re-check M_k S = S N_k over the whole family; InvViolated on fail."""
    mstack = np.stack([m.a for m in fam.ms])
    nstack = np.stack([m.a for m in fam.ns])
    q = fam.field.q
    left = np.einsum("kab,bc->kac", mstack, s.a) % q
    right = np.einsum("ab,kbc->kac", s.a, nstack) % q
    if not np.array_equal(left, right):
        raise InvViolated("similarity witness failed re-verification")


def _random_member(space, field, trials=24, seed=0):
    """Cheap randomized hunt for an invertible matrix inside a span."""
    if space.shape[0] == 0 or space.shape[1] != space.shape[2]:
        return None
    rng = np.random.default_rng(seed)
    flat = space.reshape(space.shape[0], -1)
    n = space.shape[1]
    for _ in range(trials):
        w = rng.integers(0, field.q, size=space.shape[0])
        cand = (w @ flat % field.q).reshape(n, n)
        if rank_raw(cand.copy(), field.q) == n:
            return FieldMatrix(field, cand)
    return None


def decide_sim_similar(fam):
    """An invertible S with S^-1 M_k S = N_k for all k, or None.

    Pipeline: cheap similarity-invariant refutations; the intertwiner
    space (empty means absent; a random invertible member settles
    presence on the spot); for faithfully block-generated pairs a failed
    local-similarity check refutes outright, since any invertible
    intertwiner restricts to an invertible projection on every block,
    while a passed check drops the question to cyclicity of the diagonal
    part of the space over the diagonal centralizer; otherwise cyclicity
    of the full space over the full centralizer decides, since a cyclic
    space with a non-invertible generator cannot contain any invertible
    member.  Every returned matrix is re-verified against the definition.
    """
    field, q, n = fam.field, fam.field.q, fam.cip.total
    if fam.size == 0:
        return FieldMatrix.identity(field, n)
    if all(np.array_equal(m.a, nn.a) for m, nn in zip(fam.ms, fam.ns)):
        return FieldMatrix.identity(field, n)
    for m, nn in zip(fam.ms, fam.ns):
        if rank(m) != rank(nn):
            return None
        if int(np.trace(m.a) % q) != int(np.trace(nn.a) % q):
            return None

    space = _space_stack(fam.ms, fam.ns, q, n=n)
    if space.shape[0] == 0:
        return None

    probe = _random_member(space, field)
    if probe is not None:
        _verify_witness(fam, probe)
        return probe

    props = check_block_properties(fam)
    route_blocks = False
    if props["block_generated"] and props["faithful"]:
        loc, _ = is_loc_sim_similar(fam, space=space)
        if not loc:
            return None
        route_blocks = True

    if route_blocks:
        dstack = _diag_subspace(space, fam.cip, q)
        if dstack.shape[0] == 0:
            return None
        cstack = _diag_subspace(
            _space_stack(fam.ms, fam.ms, q), fam.cip, q)
        alg_d = AlgebraBasis(field, [FieldMatrix(field, b) for b in
                                     cstack.reshape(-1, n, n)])
        mod_d = _module_over(alg_d, dstack.reshape(-1, n, n), (n, n), field)
        cyclic, gen = is_cyclic_module(alg_d, mod_d)
    else:
        alg = centralizer(fam.ms)
        mod = _module_over(alg, space, (n, n), field)
        cyclic, gen = is_cyclic_module(alg, mod)
    if not cyclic or not is_invertible(gen):
        return None

    _verify_witness(fam, gen)
    return gen


def brute_force_similar(fam):
    """First invertible intertwiner in base-q enumeration order, or None."""
    q, n = fam.field.q, fam.cip.total
    total = q ** (n * n)
    if total > BRUTE_BUDGET:
        raise BudgetExceeded("brute force needs %d candidate matrices"
                             % total, required=total)
    mstack = np.stack([m.a for m in fam.ms]) if fam.size else None
    nstack = np.stack([m.a for m in fam.ns]) if fam.size else None
    for start in range(0, total, _CHUNK):
        count = min(_CHUNK, total - start)
        block = _digits_block(start, count, q, n * n).reshape(count, n, n)
        good = _kernels.batch_rank(
            np.ascontiguousarray(block), q) == n
        if fam.size and good.any():
            xs = block[good]
            left = np.einsum("kab,jbc->jkac", mstack, xs) % q
            right = np.einsum("jab,kbc->jkac", xs, nstack) % q
            match = (left == right).all(axis=(1, 2, 3))
            sel = np.nonzero(good)[0][match]
        else:
            sel = np.nonzero(good)[0]
        if sel.size:
            return FieldMatrix(fam.field, block[sel[0]])
    return None


def family_from_structures(a, b, ell, k, field):
    """Block family pair from the joint stable classes of two structures.

    Both structures are refined together at width max(k, 2*ell); the
    resulting 2*ell-tuple classes give one 0-1 matrix per class and side,
    indexed by ell-tuples sorted by (stable class, tuple rank).  The colour
    classes of the index pair are the stable ell-tuple classes.  Raises
    FormatError when the structures are separated at this width (the
    class-by-class sizes then fail to match).
    """
    from . import structures as st
    from . import wl

    assert ell >= 1
    if a.signature != b.signature:
        raise FormatError("structures must share one signature")
    union = st.disjoint_union(a, b)
    col = wl.wl_refine(union, max(k, 2 * ell), descriptors=False)
    if col.k != 2 * ell:
        col = wl.restrict_coloring(col, 2 * ell)
    n_a, n_u = a.n, union.n

    def side_tuples(width, side):
        # ranks (in the union tuple order) of the width-tuples of one side
        base = np.arange(n_a) + (0 if side == 0 else n_a)
        idx = base.copy()
        for _ in range(width - 1):
            idx = (idx[:, None] * n_u + base[None, :]).reshape(-1)
        return idx

    one = wl.restrict_coloring(col, ell)
    ids_a = one.ids[side_tuples(ell, 0)]
    ids_b = one.ids[side_tuples(ell, 1)]
    classes = np.unique(np.concatenate([ids_a, ids_b]))
    remap = -np.ones(one.num_classes, np.int64)
    remap[classes] = np.arange(classes.size)
    ids_a, ids_b = remap[ids_a], remap[ids_b]
    sizes_a = np.bincount(ids_a, minlength=classes.size)
    sizes_b = np.bincount(ids_b, minlength=classes.size)
    if not np.array_equal(sizes_a, sizes_b):
        raise FormatError("structures are separated at width %d: "
                          "index class sizes differ" % max(k, 2 * ell))
    order_a = np.lexsort((np.arange(ids_a.size), ids_a))
    order_b = np.lexsort((np.arange(ids_b.size), ids_b))
    cip = ColouredIndexPair([int(s) for s in sizes_a])

    pair_a = col.ids[side_tuples(2 * ell, 0)].reshape(ids_a.size, ids_a.size)
    pair_b = col.ids[side_tuples(2 * ell, 1)].reshape(ids_b.size, ids_b.size)
    pair_a = pair_a[np.ix_(order_a, order_a)]
    pair_b = pair_b[np.ix_(order_b, order_b)]
    joint = np.unique(np.concatenate([np.unique(pair_a), np.unique(pair_b)]))
    ms, ns = [], []
    for c in joint.tolist():
        ma = (pair_a == c).astype(np.int64)
        mb = (pair_b == c).astype(np.int64)
        if int(ma.sum()) != int(mb.sum()):
            raise FormatError("structures are separated at width %d: "
                              "pair class sizes differ" % max(k, 2 * ell))
        ms.append(FieldMatrix(field, ma))
        ns.append(FieldMatrix(field, mb))
    return MatrixFamilyPair(field, cip, ms, ns)


def format_family_pair(fam):
    """Header, two block lines, then the 2K member matrices in order."""
    lines = ["family %d %d %d mod %d" % (fam.size, fam.cip.total,
                                         fam.cip.total, fam.field.q),
             "blocks " + " ".join(str(s) for s in fam.cip.sizes_i),
             "blocks " + " ".join(str(s) for s in fam.cip.sizes_j)]
    out = "\n".join(lines) + "\n"
    for m in fam.ms + fam.ns:
        out += format_matrix(m)
    return out


def parse_family_pair(text):
    lines = text.strip("\n").split("\n")
    head = lines[0].split()
    if len(head) != 6 or head[0] != "family" or head[4] != "mod":
        raise FormatError("bad family header: %r" % lines[0])
    count, rows, cols, q = (int(head[1]), int(head[2]), int(head[3]),
                            int(head[5]))
    if rows != cols:
        raise FormatError("family matrices must be square")
    field = PrimeField(q)

    def parse_blocks(line, what):
        parts = line.split()
        if not parts or parts[0] != "blocks":
            raise FormatError("expected %s blocks line, got %r" % (what, line))
        return [int(x) for x in parts[1:]]

    sizes_i = parse_blocks(lines[1], "row")
    sizes_j = parse_blocks(lines[2], "column")
    cip = ColouredIndexPair(sizes_i, sizes_j)
    if cip.total != rows:
        raise FormatError("blocks sum to %d, matrices are %dx%d"
                          % (cip.total, rows, rows))
    pos = 3
    mats = []
    for _ in range(2 * count):
        m, pos = parse_matrix_block(lines, pos)
        if m.field.q != q:
            raise FormatError("family member over F_%d in F_%d family"
                              % (m.field.q, q))
        mats.append(m)
    return MatrixFamilyPair(field, cip, mats[:count], mats[count:])
