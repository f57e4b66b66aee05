"""Ordered 3-regular graphs and the prime-field gadget structures over them.

A gadget structure lives on universe (darts of G) x F_p, where a dart is a
directed edge.  Its signature has four relations: an edge-order preorder, the
within-class cyclic successor, the dual-edge negation matching, and one
ternary constraint per vertex relating the three incident edge classes
through a per-vertex load value.  Twisting shifts labels along edge classes;
two instances over the same graph and modulus are isomorphic exactly when
their total loads agree mod p, which brute_force_isomorphic rediscovers by
exhaustion at desk scale.
"""

import collections

import numpy as np

from .errors import (BudgetExceeded, Disconnected, FormatError, InvViolated,
                     MalformedEncoding, NotPrime, NotThreeRegular)
from .gf import _is_prime
from .wl import TUPLE_BUDGET, TupleColoring

ENUM_BUDGET = 1 << 20


class OrderedGraph:
    """Connected 3-regular graph on ordered vertices 0..n-1.

    Undirected edges are kept sorted as (min, max) pairs.  Darts (directed
    edges) are sorted by (source, target), so the three darts leaving vertex
    v occupy ranks 3v, 3v+1, 3v+2; that rank order is the edge order every
    gadget structure refers to.
    """

    def __init__(self, n, edges):
        n = int(n)
        seen = set()
        deg = [0] * n
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < n) or not (0 <= v < n):
                raise FormatError("bad edge (%r, %r) on %d vertices" % (u, v, n))
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise FormatError("duplicate edge %r" % (e,))
            seen.add(e)
            deg[u] += 1
            deg[v] += 1
        for v in range(n):
            if deg[v] != 3:
                raise NotThreeRegular("vertex %d has degree %d" % (v, deg[v]))
        self.n = n
        self.und_edges = sorted(seen)
        self.m = len(self.und_edges)
        adj = [[] for _ in range(n)]
        for u, v in self.und_edges:
            adj[u].append(v)
            adj[v].append(u)
        self.adj = [sorted(a) for a in adj]
        # connectivity
        todo = [0] if n else []
        reach = set(todo)
        while todo:
            u = todo.pop()
            for w in self.adj[u]:
                if w not in reach:
                    reach.add(w)
                    todo.append(w)
        if len(reach) != n:
            raise Disconnected("only %d of %d vertices reachable" % (len(reach), n))
        darts = sorted([e for e in self.und_edges]
                       + [(v, u) for u, v in self.und_edges])
        self.darts = darts
        self.n_darts = len(darts)
        index = {d: i for i, d in enumerate(darts)}
        self.dart_index = index
        self.dual = np.array([index[(v, u)] for u, v in darts], np.int64)
        self.source = np.array([u for u, _ in darts], np.int64)
        self.target = np.array([v for _, v in darts], np.int64)
        und_index = {e: i for i, e in enumerate(self.und_edges)}
        self.und_of_dart = np.array(
            [und_index[(u, v) if u < v else (v, u)] for u, v in darts], np.int64)

    def __eq__(self, other):
        return (isinstance(other, OrderedGraph) and other.n == self.n
                and other.und_edges == self.und_edges)

    def __hash__(self):
        return hash((self.n, tuple(self.und_edges)))

    def __repr__(self):
        return "OrderedGraph(n=%d, m=%d)" % (self.n, self.m)


_CATALOG = {
    "K4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    "K33": (6, [(i, 3 + j) for i in range(3) for j in range(3)]),
    "prism": (6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5),
                  (0, 3), (1, 4), (2, 5)]),
    "Q3": (8, [(u, u ^ b) for u in range(8) for b in (1, 2, 4) if u < (u ^ b)]),
    "petersen": (10, [(i, (i + 1) % 5) for i in range(5)]
                 + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
                 + [(i, 5 + i) for i in range(5)]),
}


def catalog_names():
    return sorted(_CATALOG)


def named_graph(name):
    """One of the built-in graphs: K4, K33, prism, Q3, petersen."""
    if name not in _CATALOG:
        raise KeyError("unknown graph %r; have %s" % (name, catalog_names()))
    n, edges = _CATALOG[name]
    return OrderedGraph(n, edges)


class Structure:
    """Finite relational structure on universe 0..n-1.

    Relations are stored as lexicographically sorted, duplicate-free int64
    arrays of shape (count, arity).
    """

    def __init__(self, n, signature, relations):
        self.n = int(n)
        self.signature = tuple((str(name), int(r)) for name, r in signature)
        if len({name for name, _ in self.signature}) != len(self.signature):
            raise FormatError("duplicate relation name in signature")
        rels = {}
        for name, r in self.signature:
            t = np.asarray(relations[name], np.int64)
            t = t.reshape(-1, r) if t.size else np.zeros((0, r), np.int64)
            if t.size and ((t < 0).any() or (t >= self.n).any()):
                raise FormatError("relation %s escapes universe" % name)
            t = np.unique(t, axis=0) if t.shape[0] else t
            t.flags.writeable = False
            rels[name] = t
        self.relations = rels
        self._dense = {}

    def arity(self, name):
        for nm, r in self.signature:
            if nm == name:
                return r
        raise KeyError(name)

    def dense(self, name):
        """Membership tensor of shape (n,) * arity, dtype bool."""
        if name not in self._dense:
            r = self.arity(name)
            d = np.zeros((self.n,) * r, bool)
            t = self.relations[name]
            if t.shape[0]:
                d[tuple(t[:, j] for j in range(r))] = True
            d.flags.writeable = False
            self._dense[name] = d
        return self._dense[name]

    def relation_set(self, name):
        return {tuple(int(x) for x in row) for row in self.relations[name]}

    def __eq__(self, other):
        return (isinstance(other, Structure) and other.n == self.n
                and other.signature == self.signature
                and all(np.array_equal(other.relations[nm], self.relations[nm])
                        for nm, _ in self.signature))

    def __repr__(self):
        return "Structure(n=%d, %s)" % (
            self.n, ", ".join("%s/%d:%d" % (nm, r, self.relations[nm].shape[0])
                              for nm, r in self.signature))


CFI_SIGNATURE = (("edge_order", 2), ("cycle", 2), ("negate", 2), ("triple", 3))


class CfiStructure(Structure):
    """Gadget structure over an ordered 3-regular graph and prime modulus.

    Element (dart d, residue x) has index d * p + x.
    """

    def __init__(self, graph, p, load):
        if not _is_prime(p):
            raise NotPrime("modulus %r is not prime" % (p,))
        self.graph = graph
        self.p = int(p)
        load = np.asarray(load, np.int64) % p
        if load.shape != (graph.n,):
            raise FormatError("load must assign one residue per vertex")
        load.flags.writeable = False
        self.load = load
        nd = graph.n_darts
        universe = nd * p
        dart_of = np.arange(universe) // p
        xs = np.arange(universe) % p

        order_pairs = np.argwhere(dart_of[:, None] <= dart_of[None, :])
        cyc = np.stack([np.arange(universe), dart_of * p + (xs + 1) % p], axis=1)
        neg = np.stack([np.arange(universe),
                        graph.dual[dart_of] * p + (-xs) % p], axis=1)
        trips = []
        x1, x2 = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
        x1, x2 = x1.ravel(), x2.ravel()
        for v in range(graph.n):
            x3 = (int(load[v]) - x1 - x2) % p
            trips.append(np.stack([(3 * v) * p + x1,
                                   (3 * v + 1) * p + x2,
                                   (3 * v + 2) * p + x3], axis=1))
        super().__init__(universe, CFI_SIGNATURE, {
            "edge_order": order_pairs,
            "cycle": cyc,
            "negate": neg,
            "triple": np.concatenate(trips, axis=0),
        })

    def element_label(self, a):
        d, x = divmod(int(a), self.p)
        u, v = self.graph.darts[d]
        return "(%d->%d,%d)" % (u, v, x)

    def __eq__(self, other):
        return (isinstance(other, CfiStructure) and other.graph == self.graph
                and other.p == self.p
                and bool(np.array_equal(other.load, self.load)))

    def __repr__(self):
        return "CfiStructure(%r, p=%d, load=%s)" % (
            self.graph, self.p, self.load.tolist())


def build_cfi(graph, p, load=None):
    """Gadget structure over `graph` mod p with the given per-vertex load."""
    if load is None:
        load = np.zeros(graph.n, np.int64)
    return CfiStructure(graph, p, load)


class TwistVector:
    """Residue labels on darts with opposite values on dual darts."""

    def __init__(self, graph, p, values):
        values = np.asarray(values, np.int64) % p
        if values.shape != (graph.n_darts,):
            raise FormatError("twist must assign one residue per dart")
        bad = np.nonzero((values[graph.dual] + values) % p)[0]
        if bad.size:
            d = int(bad[0])
            raise InvViolated("twist breaks duality at dart %d (%d->%d)"
                              % (d, graph.darts[d][0], graph.darts[d][1]))
        self.graph = graph
        self.p = int(p)
        values.flags.writeable = False
        self.values = values

    def vertex_shifts(self):
        """Per-vertex sum of outgoing dart values (the induced load shift)."""
        return self.values.reshape(self.graph.n, 3).sum(axis=1) % self.p

    def is_automorphism(self):
        return not self.vertex_shifts().any()

    def __eq__(self, other):
        return (isinstance(other, TwistVector) and other.graph == self.graph
                and other.p == self.p
                and bool(np.array_equal(other.values, self.values)))

    def __repr__(self):
        return "TwistVector(p=%d, %s)" % (self.p, self.values.tolist())


class AutomorphismBasis:
    """Basis of the label-shift automorphism group of a gadget structure."""

    def __init__(self, graph, p, vectors):
        self.graph = graph
        self.p = int(p)
        self.vectors = list(vectors)
        self.dim = len(self.vectors)

    def __repr__(self):
        return "AutomorphismBasis(p=%d, dim=%d)" % (self.p, self.dim)


def automorphism_basis(s):
    """Solve the duality and vertex-sum conditions; the kernel is the group.

    For a connected graph the dimension is m - n + 1 (one cycle-space
    dimension per independent cycle).
    """
    from .gf import kernel_raw

    g, p = s.graph, s.p
    rows = []
    for u, v in g.und_edges:
        row = np.zeros(g.n_darts, np.int64)
        row[g.dart_index[(u, v)]] = 1
        row[g.dart_index[(v, u)]] = 1
        rows.append(row)
    for v in range(g.n):
        row = np.zeros(g.n_darts, np.int64)
        row[3 * v:3 * v + 3] = 1
        rows.append(row)
    ker = kernel_raw(np.stack(rows), p)
    basis = AutomorphismBasis(g, p, [TwistVector(g, p, k) for k in ker])
    assert basis.dim == g.m - g.n + 1
    assert all(t.is_automorphism() for t in basis.vectors)
    return basis


def iso_invariant(s):
    """Total load mod p — the complete isomorphism invariant."""
    return int(s.load.sum()) % s.p


def apply_twist(s, twist):
    """Relabel along `twist`; only the per-vertex loads move."""
    if twist.graph != s.graph or twist.p != s.p:
        raise FormatError("twist does not match the structure")
    return CfiStructure(s.graph, s.p, (s.load + twist.vertex_shifts()) % s.p)


def _group_elements(basis):
    """All group members as a (size, n_darts) residue array, lex order."""
    p, dim = basis.p, basis.dim
    size = p ** dim
    if size > ENUM_BUDGET:
        raise BudgetExceeded("group of size %d exceeds budget %d"
                             % (size, ENUM_BUDGET), required=size)
    if dim == 0:
        return np.zeros((1, basis.graph.n_darts), np.int64)
    mat = np.stack([t.values for t in basis.vectors])
    idx = np.arange(size)
    digits = np.stack([(idx // p ** (dim - 1 - j)) % p for j in range(dim)],
                      axis=1)
    return digits @ mat % p


def element_permutations(s, gamma):
    """Universe permutations induced by rows of a dart-shift array."""
    dart_of = np.arange(s.n) // s.p
    xs = np.arange(s.n) % s.p
    return dart_of[None, :] * s.p + (xs[None, :] + gamma[:, dart_of]) % s.p


def orbit_partition(s, k):
    """Partition of k-tuples into label-shift automorphism orbits."""
    basis = automorphism_basis(s)
    total = s.n ** k
    if total > TUPLE_BUDGET:
        raise BudgetExceeded("%d tuples exceed budget %d" % (total, TUPLE_BUDGET),
                             required=total)
    perms = element_permutations(s, _group_elements(basis))
    idx = np.arange(total)
    digits = [(idx // s.n ** (k - 1 - j)) % s.n for j in range(k)]
    mins = idx.copy()
    for g in range(perms.shape[0]):
        mapped = np.zeros(total, np.int64)
        for j in range(k):
            mapped = mapped * s.n + perms[g][digits[j]]
        np.minimum(mins, mapped, out=mins)
    _, ids = np.unique(mins, return_inverse=True)
    return TupleColoring(s.n, k, ids.astype(np.int64))


def brute_force_isomorphic(a, b):
    """Search every label relabeling; returns a witnessing TwistVector or None.

    Precondition: same graph and modulus.  The search space is all dart
    labelings satisfying duality (p^m of them), scanned in lexicographic
    order of the per-edge coefficients; the first hit is returned.
    """
    if not isinstance(a, CfiStructure) or not isinstance(b, CfiStructure):
        raise TypeError("expected gadget structures")
    if a.graph != b.graph or a.p != b.p:
        raise FormatError("structures live over different graphs or moduli")
    g, p = a.graph, a.p
    total = p ** g.m
    if total > ENUM_BUDGET:
        raise BudgetExceeded("twist space of size %d exceeds budget %d"
                             % (total, ENUM_BUDGET), required=total)
    # coefficient c on undirected edge (u, v): +c on dart (u, v), -c on (v, u)
    shift = np.zeros((g.m, g.n), np.int64)
    lower = np.empty(g.m, np.int64)
    upper = np.empty(g.m, np.int64)
    for i, (u, v) in enumerate(g.und_edges):
        shift[i, u] += 1
        shift[i, v] -= 1
        lower[i] = g.dart_index[(u, v)]
        upper[i] = g.dart_index[(v, u)]
    shift %= p
    want = (b.load - a.load) % p
    chunk = 1 << 14
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.stack([(idx // p ** (g.m - 1 - j)) % p for j in range(g.m)],
                          axis=1)
        hit = np.nonzero((digits @ shift % p == want).all(axis=1))[0]
        if hit.size:
            c = digits[int(hit[0])]
            values = np.zeros(g.n_darts, np.int64)
            values[lower] = c
            values[upper] = (-c) % p
            tw = TwistVector(g, p, values)
            assert apply_twist(a, tw) == b
            return tw
    return None


# ----------------------------------------------------- unions of structures

def disjoint_union(a, b):
    """Side-by-side union; b's universe is shifted by a.n."""
    if a.signature != b.signature:
        raise FormatError("signatures differ: %r vs %r" % (a.signature, b.signature))
    rels = {}
    for name, r in a.signature:
        rels[name] = np.concatenate([a.relations[name],
                                     b.relations[name] + a.n], axis=0)
    return Structure(a.n + b.n, a.signature, rels)


def pointed_union(a, b, apex_relation="apex"):
    """Disjoint union plus one apex per side marking its own elements."""
    if a.signature != b.signature:
        raise FormatError("signatures differ: %r vs %r" % (a.signature, b.signature))
    if any(name == apex_relation for name, _ in a.signature):
        raise FormatError("relation %r already present" % apex_relation)
    apex_a, apex_b = a.n + b.n, a.n + b.n + 1
    rels = {}
    for name, r in a.signature:
        rels[name] = np.concatenate([a.relations[name],
                                     b.relations[name] + a.n], axis=0)
    marks = [(apex_a, x) for x in range(a.n)] + \
            [(apex_b, a.n + y) for y in range(b.n)]
    rels[apex_relation] = np.array(marks, np.int64)
    return Structure(a.n + b.n + 2,
                     a.signature + ((apex_relation, 2),), rels)


# ------------------------------------------------------------ text formats

def format_graph(g):
    lines = ["ordered-graph %d %d" % (g.n, g.m)]
    lines += ["%d %d" % e for e in g.und_edges]
    return "\n".join(lines) + "\n"


def parse_graph_block(lines, pos):
    head = lines[pos].split()
    if len(head) != 3 or head[0] != "ordered-graph":
        raise FormatError("bad graph header at line %d: %r" % (pos + 1, lines[pos]))
    n, m = int(head[1]), int(head[2])
    edges = []
    for i in range(m):
        parts = lines[pos + 1 + i].split()
        if len(parts) != 2:
            raise FormatError("bad edge line %r" % lines[pos + 1 + i])
        u, v = int(parts[0]), int(parts[1])
        if u >= v:
            raise FormatError("edge %d %d must be written low-high" % (u, v))
        edges.append((u, v))
    return OrderedGraph(n, edges), pos + 1 + m


def parse_graph(text):
    g, _ = parse_graph_block(text.strip("\n").split("\n"), 0)
    return g


def format_cfi(s):
    lines = ["cfi p=%d" % s.p, format_graph(s.graph).rstrip("\n")]
    for v in range(s.graph.n):
        if s.load[v]:
            lines.append("load %d %d" % (v, int(s.load[v])))
    return "\n".join(lines) + "\n"


def parse_cfi(text):
    lines = text.strip("\n").split("\n")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "cfi" or not head[1].startswith("p="):
        raise FormatError("bad structure header: %r" % lines[0])
    p = int(head[1][2:])
    g, pos = parse_graph_block(lines, 1)
    load = np.zeros(g.n, np.int64)
    seen = set()
    for line in lines[pos:]:
        parts = line.split()
        if len(parts) != 3 or parts[0] != "load":
            raise FormatError("bad load line: %r" % line)
        v, val = int(parts[1]), int(parts[2])
        if not 0 <= v < g.n or v in seen:
            raise FormatError("bad or repeated load vertex %d" % v)
        if not 0 < val < p:
            raise FormatError("load value %d out of range for p=%d" % (val, p))
        seen.add(v)
        load[v] = val
    return CfiStructure(g, p, load)
