"""Prime-field linear algebra on int64 numpy arrays.

Matrices and vectors hold residues in [0, q) for a prime modulus q.  The
modulus is capped at 2**20: elimination forms products a*b with a, b < q and
matrix products accumulate at most ~2**12 such terms, so every intermediate
stays far below 2**63.  Moduli beyond the cap are rejected at construction.

Everything is deterministic.  Elimination is Gauss-Jordan with first-nonzero
pivot selection scanning rows top-down (see _kernels, which also provides the
numba/numpy dual path).
"""

import numpy as np

from . import _kernels
from .errors import (DimensionMismatch, FieldMismatch, FormatError, NotPrime,
                     SingularMatrix)

MAX_MODULUS = 1 << 20


def _is_prime(q):
    if q < 2:
        return False
    d = 2
    while d * d <= q:
        if q % d == 0:
            return False
        d += 1
    return True


class PrimeField:
    """The field Z/qZ for a prime q <= 2**20."""

    __slots__ = ("q",)

    def __init__(self, q):
        q = int(q)
        if not _is_prime(q):
            raise NotPrime("modulus %r is not prime" % (q,))
        if q > MAX_MODULUS:
            raise ValueError("modulus %d exceeds supported bound 2**20" % q)
        self.q = q

    def inv(self, x):
        x = int(x) % self.q
        if x == 0:
            raise ZeroDivisionError("0 has no inverse mod %d" % self.q)
        return pow(x, self.q - 2, self.q)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self):
        return hash(("PrimeField", self.q))

    def __repr__(self):
        return "PrimeField(%d)" % self.q


def _freeze(a):
    a.flags.writeable = False
    return a


def _check_same_field(x, y):
    if x.field != y.field:
        raise FieldMismatch("mixed moduli %d and %d" % (x.field.q, y.field.q))


class FieldMatrix:
    """Immutable 2-D residue matrix over a PrimeField."""

    __slots__ = ("field", "a")

    def __init__(self, field, data):
        self.field = field
        a = np.asarray(data, dtype=np.int64)
        if a.ndim != 2:
            raise DimensionMismatch("matrix data must be 2-D")
        self.a = _freeze(a % field.q)

    @classmethod
    def zeros(cls, field, rows, cols):
        return cls(field, np.zeros((rows, cols), np.int64))

    @classmethod
    def identity(cls, field, n):
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def rows(self):
        return self.a.shape[0]

    @property
    def cols(self):
        return self.a.shape[1]

    @property
    def shape(self):
        return self.a.shape

    @property
    def T(self):
        return FieldMatrix(self.field, self.a.T.copy())

    def __eq__(self, other):
        return (isinstance(other, FieldMatrix) and other.field == self.field
                and other.a.shape == self.a.shape
                and bool(np.array_equal(other.a, self.a)))

    def __matmul__(self, other):
        _check_same_field(self, other)
        if isinstance(other, FieldVector):
            if self.cols != other.n:
                raise DimensionMismatch("matmul %s by length-%d vector"
                                        % (self.shape, other.n))
            return FieldVector(self.field, (self.a @ other.a) % self.field.q)
        if self.cols != other.rows:
            raise DimensionMismatch("matmul %s by %s" % (self.shape, other.shape))
        return FieldMatrix(self.field, (self.a @ other.a) % self.field.q)

    def __add__(self, other):
        _check_same_field(self, other)
        if self.shape != other.shape:
            raise DimensionMismatch("add %s to %s" % (self.shape, other.shape))
        return FieldMatrix(self.field, self.a + other.a)

    def __sub__(self, other):
        _check_same_field(self, other)
        if self.shape != other.shape:
            raise DimensionMismatch("subtract %s from %s" % (other.shape, self.shape))
        return FieldMatrix(self.field, self.a - other.a)

    def scale(self, c):
        return FieldMatrix(self.field, self.a * (int(c) % self.field.q))

    def __repr__(self):
        return "FieldMatrix(%dx%d mod %d)" % (self.rows, self.cols, self.field.q)


class FieldVector:
    """Immutable 1-D residue vector over a PrimeField."""

    __slots__ = ("field", "a")

    def __init__(self, field, data):
        self.field = field
        a = np.asarray(data, dtype=np.int64)
        if a.ndim != 1:
            raise DimensionMismatch("vector data must be 1-D")
        self.a = _freeze(a % field.q)

    @classmethod
    def zeros(cls, field, n):
        return cls(field, np.zeros(n, np.int64))

    @property
    def n(self):
        return self.a.shape[0]

    def __eq__(self, other):
        return (isinstance(other, FieldVector) and other.field == self.field
                and bool(np.array_equal(other.a, self.a)))

    def __repr__(self):
        return "FieldVector(n=%d mod %d)" % (self.n, self.field.q)


# ------------------------------------------------------------ raw helpers
# Internal entry points working directly on int64 arrays; the hot modules
# (wl, imrefine, simsim) use these to avoid wrapper overhead.

def rank_raw(a, q):
    work = np.array(a, dtype=np.int64, copy=True) % q
    r, _ = _kernels.rref_inplace(work, q)
    return r


def solve_raw(a, b, q):
    """One solution of a x = b mod q as an int64 array, or None."""
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    rows, cols = a.shape
    aug = np.hstack([a, b.reshape(rows, 1)])
    r, piv = _kernels.rref_inplace(aug, q)
    if r > 0 and piv[-1] == cols:
        return None
    x = np.zeros(cols, np.int64)
    for i in range(r):
        x[piv[i]] = aug[i, cols]
    return x


def kernel_raw(a, q):
    """Basis of the right kernel of a mod q, as rows of a (d, cols) array."""
    a = np.array(a, dtype=np.int64, copy=True) % q
    rows, cols = a.shape
    r, piv = _kernels.rref_inplace(a, q)
    piv_set = set(int(p) for p in piv)
    free = [c for c in range(cols) if c not in piv_set]
    out = np.zeros((len(free), cols), np.int64)
    for k, f in enumerate(free):
        out[k, f] = 1
        for i in range(r):
            out[k, piv[i]] = (-a[i, f]) % q
    return out


def inverse_raw(a, q):
    a = np.asarray(a, dtype=np.int64) % q
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch("inverse of non-square %s" % (a.shape,))
    aug = np.hstack([a, np.eye(n, dtype=np.int64)])
    r, piv = _kernels.rref_inplace(aug, q)
    # [a | I] always has n pivots; a is invertible iff they all land in the
    # left block.
    if n > 0 and (r < n or piv[n - 1] >= n):
        raise SingularMatrix("singular %dx%d matrix has no inverse" % (n, n))
    return aug[:, n:].copy()


# ------------------------------------------------------------- public API

def rank(m):
    return rank_raw(m.a, m.field.q)


def is_invertible(m):
    return m.rows == m.cols and rank(m) == m.rows


def solve(m, b):
    """A solution x of m x = b, or None if the system is inconsistent."""
    _check_same_field(m, b)
    if b.n != m.rows:
        raise DimensionMismatch("solve: %s against length-%d rhs" % (m.shape, b.n))
    x = solve_raw(m.a, b.a, m.field.q)
    return None if x is None else FieldVector(m.field, x)


def kernel_basis(m):
    """Independent vectors spanning the right kernel of m."""
    rows = kernel_raw(m.a, m.field.q)
    return [FieldVector(m.field, rows[i]) for i in range(rows.shape[0])]


def inverse(m):
    return FieldMatrix(m.field, inverse_raw(m.a, m.field.q))


def layer_decompose(m):
    """Split m into 0-1 layers {t: m^t} for t in F_q \\ {0}.

    m^t marks the positions holding value t; supports are disjoint and
    sum(t * m^t) reconstructs m.
    """
    q = m.field.q
    return {t: FieldMatrix(m.field, (m.a == t).astype(np.int64))
            for t in range(1, q)}


def layer_compose(layers, field):
    """Inverse of layer_decompose."""
    items = sorted(layers.items())
    if not items:
        raise DimensionMismatch("no layers to compose")
    acc = np.zeros(items[0][1].shape, np.int64)
    for t, layer in items:
        acc += t * layer.a
    return FieldMatrix(field, acc)


def square_encode(m, k_set, l_set, n):
    """Embed an L x K matrix into three square n x n matrices.

    Args:
        m: FieldMatrix with rows indexed by l_set and columns by k_set.
        k_set, l_set: strictly increasing index lists inside range(n).
        n: size of the ambient square index set.

    Returns (dom, im, star): dom is the identity on k_set, im the identity
    on l_set, and star carries m on the l_set x k_set block, zero elsewhere.
    """
    k_set = list(k_set)
    l_set = list(l_set)
    for s in (k_set, l_set):
        if any(s[i] >= s[i + 1] for i in range(len(s) - 1)):
            raise DimensionMismatch("index sets must be strictly increasing")
        if s and (s[0] < 0 or s[-1] >= n):
            raise DimensionMismatch("index set escapes range(%d)" % n)
    if m.shape != (len(l_set), len(k_set)):
        raise DimensionMismatch("matrix %s does not match |L|=%d, |K|=%d"
                                % (m.shape, len(l_set), len(k_set)))
    dom = np.zeros((n, n), np.int64)
    im = np.zeros((n, n), np.int64)
    star = np.zeros((n, n), np.int64)
    dom[k_set, k_set] = 1
    im[l_set, l_set] = 1
    if k_set and l_set:
        star[np.ix_(l_set, k_set)] = m.a
    F = m.field
    return FieldMatrix(F, dom), FieldMatrix(F, im), FieldMatrix(F, star)


def square_decode(dom, im, star):
    """Recover (m, k_set, l_set) from a square_encode triple."""
    for x in (im, star):
        _check_same_field(dom, x)
    n = dom.rows
    if dom.shape != (n, n) or im.shape != (n, n) or star.shape != (n, n):
        raise DimensionMismatch("decode expects three equal square matrices")

    def diag_set(d, name):
        on = np.diag(d.a)
        mask = np.zeros_like(d.a)
        np.fill_diagonal(mask, on)
        if not np.array_equal(mask, d.a) or not np.isin(on, (0, 1)).all():
            raise FormatError("%s marker is not a 0-1 diagonal identity" % name)
        return [int(i) for i in np.nonzero(on)[0]]

    k_set = diag_set(dom, "domain")
    l_set = diag_set(im, "image")
    outside = star.a.copy()
    if k_set and l_set:
        outside[np.ix_(l_set, k_set)] = 0
    if outside.any():
        raise FormatError("payload has support outside the L x K block")
    m = star.a[np.ix_(l_set, k_set)] if k_set and l_set else \
        np.zeros((len(l_set), len(k_set)), np.int64)
    return FieldMatrix(dom.field, m), k_set, l_set


# ------------------------------------------------------------ text format

def format_matrix(m):
    lines = ["matrix %d %d mod %d" % (m.rows, m.cols, m.field.q)]
    for i in range(m.rows):
        lines.append(" ".join(str(int(v)) for v in m.a[i]))
    return "\n".join(lines) + "\n"


def format_vector(v):
    lines = ["vector %d mod %d" % (v.n, v.field.q)]
    if v.n:
        lines.append(" ".join(str(int(x)) for x in v.a))
    return "\n".join(lines) + "\n"


def parse_matrix_block(lines, pos):
    """Parse a matrix block starting at lines[pos]; returns (matrix, next)."""
    head = lines[pos].split()
    if len(head) != 5 or head[0] != "matrix" or head[3] != "mod":
        raise FormatError("bad matrix header at line %d: %r" % (pos + 1, lines[pos]))
    rows, cols, q = int(head[1]), int(head[2]), int(head[4])
    field = PrimeField(q)
    data = np.zeros((rows, cols), np.int64)
    for i in range(rows):
        vals = lines[pos + 1 + i].split()
        if len(vals) != cols:
            raise FormatError("row %d has %d entries, expected %d"
                              % (i, len(vals), cols))
        data[i] = [int(v) for v in vals]
    if (data < 0).any() or (data >= q).any():
        raise FormatError("matrix entries must be residues in [0, %d)" % q)
    return FieldMatrix(field, data), pos + 1 + rows


def parse_vector_block(lines, pos):
    head = lines[pos].split()
    if len(head) != 4 or head[0] != "vector" or head[2] != "mod":
        raise FormatError("bad vector header at line %d: %r" % (pos + 1, lines[pos]))
    n, q = int(head[1]), int(head[3])
    field = PrimeField(q)
    if n == 0:
        return FieldVector(field, np.zeros(0, np.int64)), pos + 1
    vals = [int(v) for v in lines[pos + 1].split()]
    if len(vals) != n:
        raise FormatError("vector has %d entries, expected %d" % (len(vals), n))
    if any(v < 0 or v >= q for v in vals):
        raise FormatError("vector entries must be residues in [0, %d)" % q)
    return FieldVector(field, vals), pos + 2


def parse_matrix(text):
    m, _ = parse_matrix_block(text.strip("\n").split("\n"), 0)
    return m


def parse_vector(text):
    v, _ = parse_vector_block(text.strip("\n").split("\n"), 0)
    return v
