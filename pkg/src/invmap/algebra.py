"""Matrix algebras over prime fields and modules over them.

An AlgebraBasis is an ordered list of square matrices, linearly independent
and closed under products, together with the structure-constant tensor
expressing each pairwise product in the basis.  A ModuleBasis is the same
idea one level down: matrices closed under left multiplication by a fixed
algebra, with action constants instead of structure constants.

Cyclicity (does one module element generate everything?) is decided exactly
by a strategy ladder that ends in exhaustion; a verdict is never guessed —
when every exact strategy is out of budget the caller gets BudgetExceeded.
"""

import itertools

import numpy as np

from . import _kernels
from .errors import (BudgetExceeded, DimensionMismatch, FieldMismatch,
                     InvViolated, NotAbelian, NotCommutative)
from .gf import FieldMatrix, PrimeField, rank_raw

ENUM_BUDGET = 1 << 20
SEARCH_BUDGET = 1 << 20
FULL_BUDGET = 1 << 24
RANDOM_TRIALS = 256
_CHUNK = 1 << 12


def _compose(g, h):
    """g after h on points."""
    return tuple(g[x] for x in h)


class PermGroupGens:
    """A permutation group given by generators on points 0..degree-1."""

    def __init__(self, degree, generators, abelian=False):
        self.degree = int(degree)
        gens = []
        for g in generators:
            g = tuple(int(x) for x in g)
            if sorted(g) != list(range(self.degree)):
                raise InvViolated("not a permutation of degree %d: %r"
                                  % (self.degree, g))
            gens.append(g)
        self.generators = gens
        self.abelian_flag = bool(abelian)
        if self.abelian_flag:
            for a, b in itertools.combinations(gens, 2):
                if _compose(a, b) != _compose(b, a):
                    raise NotAbelian("generators %r and %r do not commute"
                                     % (a, b))

    def enumerate(self, budget=ENUM_BUDGET):
        """All group elements as image tuples, sorted; identity first."""
        ident = tuple(range(self.degree))
        seen = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for g in frontier:
                for h in self.generators:
                    gh = _compose(g, h)
                    if gh not in seen:
                        if len(seen) >= budget:
                            raise BudgetExceeded(
                                "group enumeration exceeded %d" % budget,
                                required=len(seen) + 1)
                        seen.add(gh)
                        nxt.append(gh)
            frontier = nxt
        return sorted(seen)

    def __repr__(self):
        return "PermGroupGens(degree=%d, gens=%d)" % (
            self.degree, len(self.generators))


def cyclic_group(n):
    """Z_n rotating n points (n = 1 gives the trivial group on one point)."""
    assert n >= 1
    rot = tuple((i + 1) % n for i in range(n))
    return PermGroupGens(n, [rot] if n > 1 else [], abelian=True)


def direct_product(a, b):
    """Product group acting on the disjoint sum of the two point sets."""
    d = a.degree + b.degree
    ident_a = tuple(range(a.degree))
    ident_b = tuple(range(a.degree, d))
    gens = [g + ident_b for g in a.generators]
    gens += [ident_a + tuple(x + a.degree for x in g) for g in b.generators]
    return PermGroupGens(d, gens,
                         abelian=a.abelian_flag and b.abelian_flag)


def abelian_types_upto(bound):
    """Every Abelian group of order <= bound, one per isomorphism type.

    Returns (label, PermGroupGens) pairs; each group is a product of cyclic
    prime-power factors acting on disjoint blocks, labelled like "Z4xZ2".
    """

    def partitions(e):
        if e == 0:
            yield ()
            return
        for first in range(e, 0, -1):
            for rest in partitions(e - first):
                if not rest or first >= rest[0]:
                    yield (first,) + rest

    def factor(n):
        out = []
        d = 2
        while d * d <= n:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            if e:
                out.append((d, e))
            d += 1
        if n > 1:
            out.append((n, 1))
        return out

    groups = []
    for order in range(1, bound + 1):
        per_prime = [[tuple(p ** e for e in part) for part in partitions(exp)]
                     for p, exp in factor(order)]
        for combo in itertools.product(*per_prime) if per_prime else [()]:
            factors = sorted((f for fs in combo for f in fs), reverse=True)
            if not factors:
                factors = [1]
            g = cyclic_group(factors[0])
            for f in factors[1:]:
                g = direct_product(g, cyclic_group(f))
            groups.append(("x".join("Z%d" % f for f in factors), g))
    return groups


def _stack(mats):
    return np.stack([m.a for m in mats]) if mats else None


def _solve_many(a, bs, q):
    """Coordinates x with a @ x = b for every column b of bs; None if any
    b falls outside the column span."""
    rows, cols = a.shape
    aug = np.hstack([a, bs]) % q
    r, piv = _kernels.rref_inplace(aug, q)
    piv = piv[:r]
    if any(p >= cols for p in piv):
        return None
    xs = np.zeros((cols, bs.shape[1]), np.int64)
    for i, p in enumerate(piv):
        xs[p] = aug[i, cols:]
    return xs


class AlgebraBasis:
    """Ordered basis of a matrix algebra with exact structure constants.

    verify=False skips the independence and closure audit; callers may only
    pass it when both were already established exactly by other means (the
    coherent-configuration audit does).
    """

    def __init__(self, field, basis, structure_constants=None, verify=True):
        self.field = field
        self.basis = list(basis)
        for m in self.basis:
            if m.field.q != field.q:
                raise FieldMismatch("basis entry over F_%d in F_%d algebra"
                                    % (m.field.q, field.q))
            if m.rows != m.cols or m.rows != self.basis[0].rows:
                raise DimensionMismatch("algebra basis must be square "
                                        "matrices of one shape")
        self.n = self.basis[0].rows if self.basis else 0
        d = self.dim = len(self.basis)
        arr = _stack(self.basis)
        self._arr = arr
        q = field.q
        if d and structure_constants is not None:
            structure_constants = np.asarray(structure_constants,
                                             np.int64) % q
        if d and verify:
            vecs = arr.reshape(d, -1)
            if rank_raw(vecs, q) != d:
                raise InvViolated("algebra basis is linearly dependent")
            prods = np.einsum("iab,jbc->ijac", arr, arr) % q
            if structure_constants is None:
                sc = _solve_many(vecs.T.copy(),
                                 prods.reshape(d * d, -1).T.copy(), q)
                if sc is None:
                    raise InvViolated("basis is not closed under products")
                structure_constants = np.ascontiguousarray(
                    sc.T.reshape(d, d, d))
            else:
                recon = np.einsum("ijk,kab->ijab", structure_constants,
                                  arr) % q
                if not np.array_equal(recon, prods):
                    raise InvViolated("structure constants do not match "
                                      "the basis products")
        elif d:
            assert structure_constants is not None, \
                "verify=False requires precomputed structure constants"
        else:
            structure_constants = np.zeros((0, 0, 0), np.int64)
        structure_constants.flags.writeable = False
        self.structure_constants = structure_constants

    def is_commutative(self):
        sc = self.structure_constants
        return np.array_equal(sc, sc.transpose(1, 0, 2))

    def left_mult_matrix(self, i):
        """Matrix of x -> B_i x on algebra coordinates."""
        return self.structure_constants[i].T.copy()

    def element(self, coords):
        coords = np.asarray(coords, np.int64) % self.field.q
        assert coords.shape == (self.dim,)
        return FieldMatrix(self.field,
                           np.tensordot(coords, self._arr, axes=1)
                           % self.field.q)

    def __repr__(self):
        return "AlgebraBasis(q=%d, ambient=%d, dim=%d)" % (
            self.field.q, self.n, self.dim)


class ModuleBasis:
    """Ordered basis of a module of matrices over a fixed algebra."""

    def __init__(self, field, shape, basis, action_constants, alg=None):
        self.field = field
        self.shape = (int(shape[0]), int(shape[1]))
        self.basis = list(basis)
        self.dim = len(self.basis)
        action_constants = np.asarray(action_constants, np.int64)
        action_constants.flags.writeable = False
        self.action_constants = action_constants
        self.alg = alg
        self._arr = _stack(self.basis)

    def action_matrix(self, i):
        """Matrix of x -> B_i x on module coordinates."""
        return self.action_constants[i].T.copy()

    def element(self, coords):
        coords = np.asarray(coords, np.int64) % self.field.q
        assert coords.shape == (self.dim,)
        if self.dim == 0:
            return FieldMatrix.zeros(self.field, *self.shape)
        return FieldMatrix(self.field,
                           np.tensordot(coords, self._arr, axes=1)
                           % self.field.q)

    def __repr__(self):
        return "ModuleBasis(q=%d, shape=%dx%d, dim=%d)" % (
            self.field.q, self.shape[0], self.shape[1], self.dim)


def perm_matrix(field, images):
    """Permutation matrix sending basis vector j to basis vector images[j]."""
    n = len(images)
    a = np.zeros((n, n), np.int64)
    a[list(images), range(n)] = 1
    return FieldMatrix(field, a)


def group_algebra(gens, field, budget=ENUM_BUDGET):
    """The group algebra of the group generated by gens, as matrices.

    Formal sums over group elements are realized through the regular
    permutation representation (each element acts on the sorted element
    list by left translation).  There the permutation matrices have
    pairwise disjoint supports, hence are linearly independent, so the
    dimension always equals the group order — which a non-free defining
    action would not guarantee.  Structure constants realize convolution
    (delta at the composed element).
    """
    elems = gens.enumerate(budget=budget)
    index = {g: i for i, g in enumerate(elems)}
    d = len(elems)
    sc = np.zeros((d, d, d), np.int64)
    basis = []
    for i, g in enumerate(elems):
        images = [index[_compose(g, h)] for h in elems]
        basis.append(perm_matrix(field, images))
        for j in range(d):
            sc[i, j, images[j]] = 1
    return AlgebraBasis(field, basis, structure_constants=sc)


class _Span:
    """Incremental row space over F_q keeping the matrices that entered it."""

    def __init__(self, q, veclen):
        self.q = q
        self.rows = np.zeros((0, veclen), np.int64)
        self.members = []

    def add(self, vec, keep=None):
        """Insert vec if independent; returns True when the span grew."""
        cand = np.vstack([self.rows, vec % self.q])
        r, _ = _kernels.rref_inplace(cand, self.q)
        if r == len(self.rows):
            return False
        self.rows = cand[:r]
        self.members.append(vec % self.q if keep is None else keep)
        return True

    @property
    def dim(self):
        return len(self.members)


def close_under_multiplication(seeds, field):
    """Smallest algebra-with-identity containing the seed matrices.

    The basis keeps discovery order: identity, then independent seeds, then
    products added by the fixpoint iteration.
    """
    seeds = [m if isinstance(m, FieldMatrix) else FieldMatrix(field, m)
             for m in seeds]
    n = seeds[0].rows if seeds else 0
    for m in seeds:
        if m.rows != m.cols or m.rows != n:
            raise DimensionMismatch("seeds must be square of one shape")
    span = _Span(field.q, n * n)
    mats = []

    def insert(fm):
        if span.add(fm.a.reshape(-1)):
            mats.append(fm)
            return True
        return False

    insert(FieldMatrix.identity(field, n))
    for m in seeds:
        insert(m)
    frontier = list(mats)
    while frontier:
        added = []
        for a in mats[:]:
            for b in frontier:
                for prod in (a @ b, b @ a):
                    if insert(prod):
                        added.append(prod)
        frontier = added
    return AlgebraBasis(field, mats)


def is_semisimple_commutative(alg):
    """Nondegeneracy of the trace form of the regular representation.

    For finite-dimensional commutative algebras over a prime field this is
    exactly semisimplicity; agreement with the group-order divisibility rule
    on Abelian group algebras is part of the test suite.
    """
    if not alg.is_commutative():
        raise NotCommutative("trace-form test requires a commutative algebra")
    d = alg.dim
    if d == 0:
        return True
    sc = alg.structure_constants
    gram = np.einsum("iba,jab->ij", sc, sc) % alg.field.q
    return rank_raw(gram, alg.field.q) == d


def module_closure(alg, seeds):
    """Smallest space containing the seeds and stable under the algebra."""
    field = alg.field
    seeds = [m if isinstance(m, FieldMatrix) else FieldMatrix(field, m)
             for m in seeds]
    rows = cols = None
    for m in seeds:
        if rows is None:
            rows, cols = m.rows, m.cols
        if (m.rows, m.cols) != (rows, cols):
            raise DimensionMismatch("module seeds must share one shape")
    if rows is None:
        raise DimensionMismatch("need at least one seed to fix the shape")
    if alg.n != rows:
        raise DimensionMismatch("algebra acts on %d rows, seeds have %d"
                                % (alg.n, rows))
    span = _Span(field.q, rows * cols)
    mats = []

    def insert(fm):
        if span.add(fm.a.reshape(-1)):
            mats.append(fm)
            return True
        return False

    for m in seeds:
        insert(m)
    frontier = list(mats)
    while frontier:
        added = []
        for b in alg.basis:
            for h in frontier:
                prod = b @ h
                if insert(prod):
                    added.append(prod)
        frontier = added
    d = len(mats)
    action = np.zeros((alg.dim, d, d), np.int64)
    if d:
        vecs = np.stack([m.a.reshape(-1) for m in mats])
        for i, b in enumerate(alg.basis):
            prods = np.einsum("ab,jbc->jac", b.a, np.stack(
                [m.a for m in mats])) % field.q
            co = _solve_many(vecs.T.copy(),
                             prods.reshape(d, -1).T.copy(), field.q)
            assert co is not None, "closure left the span"
            action[i] = co.T
    return ModuleBasis(field, (rows, cols), mats, action, alg=alg)


def _generated_dim(mod, coords):
    """dim of algebra * element for an element given in module coordinates."""
    vecs = np.tensordot(coords, mod.action_constants, axes=([0], [1]))
    return rank_raw(vecs % mod.field.q, mod.field.q)


def _batch_generates(mod, coord_block):
    """Boolean mask: which coordinate rows generate the whole module."""
    q = mod.field.q
    # (block, alg_dim, mod_dim) stack of coordinate images
    stack = np.tensordot(coord_block % q, mod.action_constants,
                         axes=([1], [1])) % q
    stack = np.ascontiguousarray(stack.astype(np.int64))
    ranks = _kernels.batch_rank(stack, q)
    return ranks == mod.dim


def _digits_block(start, count, q, d):
    idx = np.arange(start, start + count, dtype=np.int64)
    out = np.empty((count, d), np.int64)
    for j in range(d - 1, -1, -1):
        out[:, j] = idx % q
        idx //= q
    return out


def is_cyclic_module(alg, mod, seed=0):
    """Exact test whether one element generates the module; witness on True.

    Strategy ladder: quick dimension refutation, then projective exhaustion
    when q^dim is within budget, then seeded randomized trials (each verified
    exactly), then sparse and finally full exhaustion.  Returns
    (True, generator) or (False, None); raises BudgetExceeded instead of
    ever guessing.
    """
    q = mod.field.q
    d = mod.dim
    if d == 0:
        return True, FieldMatrix.zeros(mod.field, *mod.shape)
    if d > alg.dim:
        return False, None

    def found(coords):
        return True, mod.element(coords)

    def exhaust():
        # projective sweep: the first nonzero coordinate is pinned to 1
        # (unit rescaling never changes what an element generates)
        for lead in range(d):
            free = d - 1 - lead
            total = q ** free
            for start in range(0, total, _CHUNK):
                count = min(_CHUNK, total - start)
                block = np.zeros((count, d), np.int64)
                block[:, lead] = 1
                if free:
                    block[:, lead + 1:] = _digits_block(start, count, q, free)
                hits = np.nonzero(_batch_generates(mod, block))[0]
                if hits.size:
                    return found(block[hits[0]])
        return False, None

    if q ** d <= SEARCH_BUDGET:
        return exhaust()

    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_TRIALS):
        coords = rng.integers(0, q, size=d)
        if coords.any() and _generated_dim(mod, coords) == d:
            return found(coords)
    # sparse sweep: every candidate with at most two nonzero coordinates
    for i in range(d):
        for j in range(i, d):
            block = []
            for a in range(1, q):
                for b in range(q) if j > i else [0]:
                    coords = np.zeros(d, np.int64)
                    coords[i] = a
                    coords[j] = (coords[j] + b) % q
                    block.append(coords)
            block = np.stack(block)
            hits = np.nonzero(_batch_generates(mod, block))[0]
            if hits.size:
                return found(block[hits[0]])
    if q ** d <= FULL_BUDGET:
        return exhaust()
    raise BudgetExceeded("cyclicity needs %d^%d candidate elements" % (q, d),
                         required=q ** d)


def regular_module(alg):
    """The algebra acting on itself by left multiplication."""
    return module_closure(alg, list(alg.basis))


def format_algebra(alg):
    from .gf import format_matrix

    lines = ["algebra dim %d ambient %d mod %d"
             % (alg.dim, alg.n, alg.field.q)]
    for m in alg.basis:
        lines.append(format_matrix(m).rstrip("\n"))
    sc = alg.structure_constants
    for i, j, k in zip(*np.nonzero(sc)):
        lines.append("sc %d %d %d %d" % (i, j, k, sc[i, j, k]))
    return "\n".join(lines) + "\n"
