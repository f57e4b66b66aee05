"""Round-trip encoding of gadget structures as plain undirected graphs.

Layout of the encoding (node ids in order): first the structure's own
elements, then one inner node per ternary constraint joined to its three
elements, then one inner node per negation pair joined to its two elements,
then a path with one node per edge class; the class at rank r hangs off the
path node at position r, replacing the edge-order preorder.

The decoder identifies node roles structurally (degree-2 nodes are pair
nodes, nodes with a pair-node neighbour are elements, remaining nodes are
constraint nodes when all their neighbours are elements and path nodes
otherwise), reads the class order off the path, and rebuilds residue labels
by constraint propagation.  Labels are recovered up to a per-class shift and
one global unit, so the decode of an encode is isomorphic to the original
whenever p = 2, and lands in the same twist family up to a unit multiple of
the total load in general.
"""

import collections

import numpy as np

from .errors import FormatError, InvmapError, MalformedEncoding
from .gf import _is_prime
from .structures import CfiStructure, OrderedGraph


class PlainGraph:
    """Simple undirected graph on vertices 0..n-1 (no regularity assumed)."""

    def __init__(self, n, edges):
        self.n = int(n)
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < self.n) or not (0 <= v < self.n):
                raise FormatError("bad edge (%r, %r)" % (u, v))
            e = (u, v) if u < v else (v, u)
            if e in norm:
                raise FormatError("duplicate edge (%d, %d)" % e)
            norm.add(e)
        self.edges = sorted(norm)

    def adjacency(self):
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def __eq__(self, other):
        return (isinstance(other, PlainGraph) and other.n == self.n
                and other.edges == self.edges)

    def __repr__(self):
        return "PlainGraph(n=%d, m=%d)" % (self.n, len(self.edges))


def format_plain_graph(g):
    lines = ["graph %d %d" % (g.n, len(g.edges))]
    lines += ["%d %d" % e for e in g.edges]
    return "\n".join(lines) + "\n"


def parse_plain_graph(text):
    lines = text.strip("\n").split("\n")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "graph":
        raise FormatError("bad plain-graph header: %r" % lines[0])
    n, m = int(head[1]), int(head[2])
    edges = []
    for i in range(m):
        u, v = lines[1 + i].split()
        edges.append((int(u), int(v)))
    return PlainGraph(n, edges)


def cfi_to_graph(s):
    """Encode a gadget structure as a plain graph (see module docstring)."""
    g, p = s.graph, s.p
    n_elem = s.n
    triples = s.relations["triple"]
    base_r = n_elem
    base_i = base_r + triples.shape[0]
    neg = s.relations["negate"]
    pairs = sorted({(int(a), int(b)) if a < b else (int(b), int(a))
                    for a, b in neg})
    base_path = base_i + len(pairs)
    total = base_path + g.n_darts
    edges = []
    for t, (a, b, c) in enumerate(triples):
        edges += [(base_r + t, int(a)), (base_r + t, int(b)), (base_r + t, int(c))]
    for i, (a, b) in enumerate(pairs):
        edges += [(base_i + i, a), (base_i + i, b)]
    for r in range(g.n_darts - 1):
        edges.append((base_path + r, base_path + r + 1))
    for a in range(n_elem):
        edges.append((a, base_path + a // p))
    return PlainGraph(total, edges)


def _classify_nodes(pg):
    adj = pg.adjacency()
    pair_nodes = {v for v in range(pg.n) if len(adj[v]) == 2}
    elements = {v for v in range(pg.n)
                if v not in pair_nodes and any(w in pair_nodes for w in adj[v])}
    rest = [v for v in range(pg.n) if v not in pair_nodes and v not in elements]
    cons_nodes = set()
    path_nodes = set()
    for v in rest:
        if adj[v] and all(w in elements for w in adj[v]):
            cons_nodes.add(v)
        else:
            path_nodes.add(v)
    for v in pair_nodes:
        if len(adj[v]) != 2 or any(w not in elements for w in adj[v]):
            raise MalformedEncoding("degree-2 node %d is not a pair node" % v)
    for v in cons_nodes:
        if len(adj[v]) != 3:
            raise MalformedEncoding("constraint node %d has degree %d"
                                    % (v, len(adj[v])))
    return adj, pair_nodes, elements, cons_nodes, path_nodes


def _path_order(adj, path_nodes):
    """The path's node sequence, starting from its smaller endpoint."""
    degs = {}
    for v in path_nodes:
        inside = [w for w in adj[v] if w in path_nodes]
        if len(inside) not in (1, 2):
            raise MalformedEncoding("path node %d has %d path neighbours"
                                    % (v, len(inside)))
        degs[v] = inside
    ends = sorted(v for v, inside in degs.items() if len(inside) == 1)
    if len(path_nodes) == 1:
        return [next(iter(path_nodes))]
    if len(ends) != 2:
        raise MalformedEncoding("order path has %d endpoints" % len(ends))
    order = [ends[0]]
    prev = None
    while True:
        nxt = [w for w in degs[order[-1]] if w != prev]
        if not nxt:
            break
        prev = order[-1]
        order.append(nxt[0])
    if len(order) != len(path_nodes):
        raise MalformedEncoding("order path is not connected")
    return order


def graph_to_cfi(pg):
    """Decode a plain graph produced by cfi_to_graph.

    Tries the path in both orientations (smaller endpoint first) and returns
    the first decode that checks out; raises MalformedEncoding otherwise.
    """
    adj, pair_nodes, elements, cons_nodes, path_nodes = _classify_nodes(pg)
    if not path_nodes or not elements:
        raise MalformedEncoding("no order path or no elements found")
    order = _path_order(adj, path_nodes)
    try:
        return _decode(adj, pair_nodes, elements, cons_nodes, order)
    except MalformedEncoding:
        if len(order) == 1:
            raise
        return _decode(adj, pair_nodes, elements, cons_nodes, order[::-1])


def _decode(adj, pair_nodes, elements, cons_nodes, order):
    n_darts = len(order)
    classes = []
    elem_class = {}
    for r, pnode in enumerate(order):
        members = sorted(w for w in adj[pnode] if w in elements)
        if not members:
            raise MalformedEncoding("path position %d has no class" % r)
        for w in members:
            if w in elem_class:
                raise MalformedEncoding("element %d sits in two classes" % w)
            elem_class[w] = r
        classes.append(members)
    if set(elem_class) != elements:
        raise MalformedEncoding("some elements hang off no path node")
    p = len(classes[0])
    if any(len(c) != p for c in classes):
        raise MalformedEncoding("edge classes have unequal sizes")
    if not _is_prime(p):
        raise MalformedEncoding("class size %d is not prime" % p)
    if n_darts % 3:
        raise MalformedEncoding("%d edge classes is not divisible by 3" % n_darts)

    # negation partner of each element, read off the pair nodes
    partner = {}
    for v in pair_nodes:
        a, b = adj[v]
        if a in partner or b in partner:
            raise MalformedEncoding("element in two negation pairs")
        partner[a] = b
        partner[b] = a
    if set(partner) != elements:
        raise MalformedEncoding("negation pairing misses some elements")

    dual = [None] * n_darts
    for w, r in elem_class.items():
        r2 = elem_class[partner[w]]
        if dual[r] is None:
            dual[r] = r2
        elif dual[r] != r2:
            raise MalformedEncoding("class %d pairs with two classes" % r)
    for r in range(n_darts):
        if dual[r] is None or dual[dual[r]] != r or dual[r] == r:
            raise MalformedEncoding("negation pairing is not a dual involution")

    n_vertices = n_darts // 3
    und = {(min(r // 3, dual[r] // 3), max(r // 3, dual[r] // 3))
           for r in range(n_darts)}
    try:
        graph = OrderedGraph(n_vertices, sorted(und))
    except InvmapError as exc:
        raise MalformedEncoding("decoded graph invalid: %s" % exc)
    for r in range(n_darts):
        if graph.darts[r] != (r // 3, dual[r] // 3):
            raise MalformedEncoding("path order disagrees with vertex order")

    # group constraint nodes by vertex
    trip_by_vertex = collections.defaultdict(list)
    for v in cons_nodes:
        ranks = sorted(elem_class[w] for w in adj[v])
        if len(set(ranks)) != 3 or ranks[0] // 3 != ranks[2] // 3 \
                or ranks != [ranks[0], ranks[0] + 1, ranks[0] + 2]:
            raise MalformedEncoding("constraint node %d spans classes %s"
                                    % (v, ranks))
        by_rank = sorted(adj[v], key=lambda w: elem_class[w])
        trip_by_vertex[ranks[0] // 3].append(tuple(by_rank))
    for u in range(n_vertices):
        if len(trip_by_vertex[u]) != p * p:
            raise MalformedEncoding("vertex %d carries %d constraints, want %d"
                                    % (u, len(trip_by_vertex[u]), p * p))

    labels = {}
    labeled = set()

    def label_class(r, values):
        seen = sorted(values.values())
        if seen != list(range(p)):
            raise MalformedEncoding("class %d labels are not a bijection" % r)
        labels.update(values)
        labeled.add(r)
        r2 = dual[r]
        if r2 not in labeled:
            labels.update({partner[w]: (-x) % p for w, x in values.items()})
            labeled.add(r2)
        else:
            for w, x in values.items():
                if labels[partner[w]] != (-x) % p:
                    raise MalformedEncoding("dual labels disagree at class %d" % r)

    def seed_labels(u):
        A, B, C = (classes[3 * u + i] for i in range(3))
        ab = {}
        for (a, b, c) in trip_by_vertex[u]:
            if (a, b) in ab:
                raise MalformedEncoding("repeated constraint pair at vertex %d" % u)
            ab[(a, b)] = c
        a0, a1 = A[0], A[1]

        def shift_map(a):
            f = {}
            for b in B:
                c_from, c_to = ab.get((a0, b)), ab.get((a, b))
                if c_from is None or c_to is None or c_from in f:
                    raise MalformedEncoding("vertex %d misses constraint pairs" % u)
                f[c_from] = c_to
            return f

        g1 = shift_map(a1)
        powers = [{c: c for c in C}]
        for _ in range(p - 1):
            powers.append({c: g1[powers[-1][c]] for c in C})
        values = {}
        for a in A:
            fa = shift_map(a)
            for j, pw in enumerate(powers):
                if fa == pw:
                    values[a] = j
                    break
            else:
                raise MalformedEncoding("vertex %d has non-cyclic shifts" % u)
        label_class(3 * u, values)

    def derive_labels(u, pos_t):
        ranks = [3 * u, 3 * u + 1, 3 * u + 2]
        pos_p = next(i for i in range(3) if ranks[i] in labeled)
        pos_n = next(i for i in range(3) if i not in (pos_t, pos_p))
        pair_map = {}
        for trip in trip_by_vertex[u]:
            key = (trip[pos_t], trip[pos_n])
            if key in pair_map:
                raise MalformedEncoding("repeated constraint pair at vertex %d" % u)
            pair_map[key] = trip[pos_p]
        T = classes[ranks[pos_t]]
        e0 = classes[ranks[pos_n]][0]
        t0 = T[0]
        values = {}
        for t in T:
            pt = pair_map.get((t, e0))
            pt0 = pair_map.get((t0, e0))
            if pt is None or pt0 is None:
                raise MalformedEncoding("vertex %d misses constraint pairs" % u)
            values[t] = (labels[pt0] - labels[pt]) % p
        label_class(ranks[pos_t], values)

    load = np.zeros(n_vertices, np.int64)
    todo = [0]
    seen_v = {0}
    bfs = []
    while todo:
        u = todo.pop(0)
        bfs.append(u)
        for w in graph.adj[u]:
            if w not in seen_v:
                seen_v.add(w)
                todo.append(w)
    for u in bfs:
        ranks = [3 * u, 3 * u + 1, 3 * u + 2]
        if not any(r in labeled for r in ranks):
            seed_labels(u)
        for i in range(3):
            if ranks[i] not in labeled:
                derive_labels(u, i)
        sums = {(labels[a] + labels[b] + labels[c]) % p
                for (a, b, c) in trip_by_vertex[u]}
        grid = {(labels[a], labels[b]) for (a, b, c) in trip_by_vertex[u]}
        if len(sums) != 1 or len(grid) != p * p:
            raise MalformedEncoding("vertex %d constraints are not a load plane" % u)
        load[u] = sums.pop()
    return CfiStructure(graph, p, load)
