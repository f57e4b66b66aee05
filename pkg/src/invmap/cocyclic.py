"""Group-invariant linear systems over prime fields.

A linear system M x = b together with a permutation group acting on the
row and column indices so that every group element leaves both M and b
unchanged.  When the field characteristic does not divide the group
order, solvability is unchanged by restricting attention to symmetric
solutions: any solution can be averaged over the group, and the average
is constant on column orbits.  This module provides that averaging, a
quotient solver that works one variable per orbit, canonical orders on
orbit elements, and kernel generators pinned to orbit positions.
"""

import itertools

import numpy as np

from . import gf
from .errors import (BudgetExceeded, DimensionMismatch, FormatError,
                     InvViolated, NotAbelian, NotASolution)
from .gf import FieldMatrix, FieldVector, PrimeField

GROUP_BUDGET = 1 << 12


def _check_perm(images, n, what):
    arr = np.asarray(images, dtype=np.int64)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise FormatError("%s is not a permutation of 0..%d" % (what, n - 1))
    return arr


class PermGroupGens:
    """A permutation group given by generators acting on rows and columns.

    Each generator is a pair (row images, column images); the group is
    the closure under composition, enumerated lazily and cached.  The
    identity is always included.
    """

    def __init__(self, n_rows, n_cols, gens):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.gens = []
        for gi, (rp, cp) in enumerate(gens):
            self.gens.append((_check_perm(rp, self.n_rows, "generator %d row part" % gi),
                              _check_perm(cp, self.n_cols, "generator %d column part" % gi)))
        self._elements = None

    @classmethod
    def trivial(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, [])

    def elements(self):
        """All group elements as (row, column) image pairs, identity first."""
        if self._elements is None:
            ident = (np.arange(self.n_rows), np.arange(self.n_cols))
            seen = {(ident[0].tobytes(), ident[1].tobytes())}
            todo = [ident]
            out = [ident]
            while todo:
                rp, cp = todo.pop()
                for gr, gc in self.gens:
                    nr, nc = gr[rp], gc[cp]
                    key = (nr.tobytes(), nc.tobytes())
                    if key not in seen:
                        if len(out) >= GROUP_BUDGET:
                            raise BudgetExceeded(
                                "group enumeration beyond %d elements" % GROUP_BUDGET,
                                required=len(out) + 1)
                        seen.add(key)
                        out.append((nr, nc))
                        todo.append((nr, nc))
            self._elements = out
        return self._elements

    @property
    def order(self):
        return len(self.elements())

    def is_abelian(self):
        for (ar, ac), (br, bc) in itertools.combinations(self.gens, 2):
            if not (np.array_equal(ar[br], br[ar])
                    and np.array_equal(ac[bc], bc[ac])):
                return False
        return True

    def col_orbits(self):
        """Column orbits as arrays of sorted indices, ordered by minimum."""
        return _orbits([cp for _, cp in self.gens], self.n_cols)

    def row_orbits(self):
        return _orbits([rp for rp, _ in self.gens], self.n_rows)


def _orbits(perms, n):
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in perms:
        for i in range(n):
            ri, rj = find(i), find(int(p[i]))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(n)])
    out = []
    for r in np.unique(roots):
        out.append(np.flatnonzero(roots == r))
    out.sort(key=lambda o: int(o[0]))
    return out


class InvariantSystem:
    """M x = b plus a compatible group action leaving M and b fixed.

    Construction verifies the invariance of every generator exactly and
    rejects fields whose characteristic divides the group order, which
    is what makes group-averaging of solutions possible.
    """

    def __init__(self, m, b, group):
        if not isinstance(m, FieldMatrix) or not isinstance(b, FieldVector):
            raise FormatError("InvariantSystem needs a FieldMatrix and FieldVector")
        if m.field != b.field:
            raise FormatError("matrix and vector fields differ")
        if b.n != m.rows:
            raise DimensionMismatch("rhs length %d against %d rows" % (b.n, m.rows))
        if group.n_rows != m.rows or group.n_cols != m.cols:
            raise DimensionMismatch("group acts on %dx%d, system is %dx%d"
                                    % (group.n_rows, group.n_cols, m.rows, m.cols))
        for gi, (rp, cp) in enumerate(group.gens):
            if not np.array_equal(m.a[np.ix_(rp, cp)], m.a):
                raise InvViolated("generator %d does not preserve the matrix" % gi)
            if not np.array_equal(b.a[rp], b.a):
                raise InvViolated("generator %d does not preserve the rhs" % gi)
        if group.order % m.field.q == 0:
            raise FormatError("field characteristic %d divides group order %d"
                              % (m.field.q, group.order))
        self.m = m
        self.b = b
        self.group = group

    @property
    def field(self):
        return self.m.field


class OrbitOrder:
    """Canonical orders on the orbits of a permutation action.

    Orbits are ranked by their minimal element.  Within the orbit of the
    chosen parameter, elements are ranked by the lexicographically least
    generator-exponent vector carrying the parameter onto them; orbits
    not containing the parameter use their own minimal element as the
    parameter.  For an Abelian group this ranking translates along with
    the parameter, so any two parameter choices in one orbit give orders
    that are group translates of each other.
    """

    def __init__(self, orbits, ordered, params):
        self.orbits = orbits
        self.ordered = ordered
        self.params = params
        n = sum(len(o) for o in orbits)
        self.orbit_of = np.empty(n, np.int64)
        self.position_of = np.empty(n, np.int64)
        for r, members in enumerate(ordered):
            for pos, x in enumerate(members):
                self.orbit_of[x] = r
                self.position_of[x] = pos

    @property
    def num_orbits(self):
        return len(self.orbits)


def _exponent_keys(perms, n, j):
    """First lexicographic exponent vector reaching each point from j."""
    pows = []
    for p in perms:
        stack = [np.arange(n)]
        while not np.array_equal(p[stack[-1]], stack[0]):
            stack.append(p[stack[-1]])
        pows.append(stack)
    shape = [len(s) for s in pows]
    if int(np.prod([float(x) for x in shape])) > GROUP_BUDGET:
        raise BudgetExceeded("exponent enumeration beyond %d" % GROUP_BUDGET,
                             required=int(np.prod(shape)))
    key = {}
    for e in itertools.product(*[range(x) for x in shape]):
        x = j
        for gi, ei in enumerate(e):
            x = int(pows[gi][ei][x])
        if x not in key:
            key[x] = e
    return key


def orbit_order(group, n, j):
    """Orbit partition of 0..n-1 with canonical within-orbit orders.

    `group` may be a PermGroupGens (its column action is used) or a bare
    list of image arrays.  `j` picks the parameter whose orbit gets the
    parameter-relative order; every other orbit is keyed to its minimal
    element.
    """
    if isinstance(group, PermGroupGens):
        if group.n_cols != n:
            raise DimensionMismatch("group acts on %d columns, order over %d"
                                    % (group.n_cols, n))
        if not group.is_abelian():
            raise NotAbelian("orbit orders need an Abelian action")
        perms = [cp for _, cp in group.gens]
    else:
        perms = [_check_perm(p, n, "permutation") for p in group]
        for a, b in itertools.combinations(perms, 2):
            if not np.array_equal(a[b], b[a]):
                raise NotAbelian("orbit orders need an Abelian action")
    if not 0 <= j < n:
        raise FormatError("parameter %d outside 0..%d" % (j, n - 1))
    orbits = _orbits(perms, n)
    ordered = []
    params = []
    for members in orbits:
        param = int(j) if j in members else int(members[0])
        keys = _exponent_keys(perms, n, param)
        ordered.append(sorted(members.tolist(), key=lambda x: keys[x]))
        params.append(param)
    return OrbitOrder(orbits, ordered, params)


def symmetrize_solution(sys, c):
    """Average a solution over the group; the result is a fixed point.

    Verifies M c = b first and the two defining properties of the output
    afterwards (still a solution; unchanged by every generator).
    """
    if not isinstance(c, FieldVector) or c.field != sys.field:
        raise FormatError("solution must live over the system field")
    if c.n != sys.m.cols:
        raise DimensionMismatch("solution length %d against %d columns"
                                % (c.n, sys.m.cols))
    q = sys.field.q
    if not np.array_equal(sys.m.a @ c.a % q, sys.b.a):
        raise NotASolution("input vector does not solve the system")
    acc = np.zeros(c.n, np.int64)
    for _, cp in sys.group.elements():
        acc[cp] += c.a
    inv = pow(sys.group.order % q, q - 2, q)
    d = acc % q * inv % q
    if not np.array_equal(sys.m.a @ d % q, sys.b.a):
        raise InvViolated("averaged vector stopped solving the system")
    for _, cp in sys.group.gens:
        if not np.array_equal(d[cp], d):
            raise InvViolated("averaged vector moves under the group")
    return FieldVector(sys.field, d)


def solve_invariant_system(sys):
    """A symmetric solution of M x = b, or None when none exists.

    Works on the orbit quotient: one variable per column orbit (columns
    summed), one equation per row orbit (rows coincide on orbit mates),
    then lifts the quotient solution back to a full orbit-constant
    vector.  Solvability of the quotient matches solvability of the
    original system exactly, because averaging any solution produces an
    orbit-constant one.
    """
    q = sys.field.q
    col_orbits = sys.group.col_orbits()
    row_reps = np.array([int(o[0]) for o in sys.group.row_orbits()])
    mq = np.stack([sys.m.a[row_reps][:, o].sum(axis=1) % q
                   for o in col_orbits], axis=1)
    y = gf.solve_raw(mq, sys.b.a[row_reps], q)
    if y is None:
        return None
    x = np.zeros(sys.m.cols, np.int64)
    for r, members in enumerate(col_orbits):
        x[members] = y[r]
    if not np.array_equal(sys.m.a @ x % q, sys.b.a):
        raise InvViolated("lifted quotient solution fails the full system")
    return FieldVector(sys.field, x)


def _stabilizer(group, fixed_points, fixed_set):
    """Subgroup elements fixing given columns pointwise and a set setwise."""
    keep = []
    fixed_set = frozenset(int(x) for x in fixed_set)
    for rp, cp in group.elements():
        if any(int(cp[x]) != x for x in fixed_points):
            continue
        if {int(cp[x]) for x in fixed_set} != fixed_set:
            continue
        keep.append((rp, cp))
    return keep


def kernel_generators(sys):
    """Kernel generators pinned to orbit positions.

    For each column orbit (taken in minimal-element order, with its
    minimal element as parameter) and each position s in the within-orbit
    order, solve for a kernel vector that vanishes on all earlier orbits
    and on the positions before s, and equals 1 at position s; the
    solve runs through the orbit-quotient machinery of the subgroup
    stabilizing the pinned columns.  The emitted vectors span the kernel
    of M; the span dimension is checked against cols - rank exactly.
    """
    if not sys.group.is_abelian():
        raise NotAbelian("kernel generators need an Abelian action")
    q = sys.field.q
    m = sys.m
    oo = orbit_order([cp for _, cp in sys.group.gens], m.cols, 0)
    out = []
    for r, members in enumerate(oo.ordered):
        earlier = [x for rr in range(r) for x in oo.ordered[rr]]
        for s, col_s in enumerate(members):
            before = members[:s]
            pin_zero = earlier + before
            rows = [m.a]
            rhs = [np.zeros(m.rows, np.int64)]
            for t in pin_zero:
                unit = np.zeros(m.cols, np.int64)
                unit[t] = 1
                rows.append(unit[None, :])
                rhs.append(np.array([0], np.int64))
            unit = np.zeros(m.cols, np.int64)
            unit[col_s] = 1
            rows.append(unit[None, :])
            rhs.append(np.array([1], np.int64))
            aug = np.concatenate(rows, axis=0)
            rhs = np.concatenate(rhs)
            stab = _stabilizer(sys.group, [col_s], before)
            base = m.rows
            sub_gens = []
            for rp, cp in stab:
                ext = np.empty(aug.shape[0], np.int64)
                ext[:base] = rp
                for t_idx, t in enumerate(pin_zero):
                    ext[base + t_idx] = base + pin_zero.index(int(cp[t]))
                ext[base + len(pin_zero)] = base + len(pin_zero)
                sub_gens.append((ext, cp))
            sub = PermGroupGens(aug.shape[0], m.cols, sub_gens)
            ksys = InvariantSystem(FieldMatrix(sys.field, aug),
                                   FieldVector(sys.field, rhs), sub)
            v = solve_invariant_system(ksys)
            if v is not None:
                out.append(((r, s), v))
    want = m.cols - gf.rank(m)
    if out:
        span = np.stack([v.a for _, v in out])
        got = gf.rank_raw(span, q)
    else:
        got = 0
    if got != want:
        raise InvViolated("kernel generators span %d of %d dimensions"
                          % (got, want))
    return out


# ------------------------------------------------------------ text format

def format_invariant_system(sys):
    """System file: matrix block, vector block, then generator lines."""
    lines = [gf.format_matrix(sys.m).rstrip("\n"),
             gf.format_vector(sys.b).rstrip("\n"),
             "group %d" % len(sys.group.gens)]
    for rp, cp in sys.group.gens:
        lines.append("perm " + " ".join(
            str(int(x)) for x in np.concatenate([rp, cp])))
    return "\n".join(lines) + "\n"


def parse_invariant_system(text):
    lines = text.strip("\n").split("\n")
    m, pos = gf.parse_matrix_block(lines, 0)
    b, pos = gf.parse_vector_block(lines, pos)
    head = lines[pos].split()
    if len(head) != 2 or head[0] != "group":
        raise FormatError("bad group header at line %d: %r" % (pos + 1, lines[pos]))
    count = int(head[1])
    gens = []
    for i in range(count):
        vals = lines[pos + 1 + i].split()
        if not vals or vals[0] != "perm" or len(vals) != 1 + m.rows + m.cols:
            raise FormatError("bad perm line %d: expected %d images"
                              % (pos + 2 + i, m.rows + m.cols))
        images = [int(v) for v in vals[1:]]
        gens.append((images[:m.rows], images[m.rows:]))
    group = PermGroupGens(m.rows, m.cols, gens)
    return InvariantSystem(m, b, group)
