import numpy as np
import pytest

from invmap import structures as st
from invmap.errors import (BudgetExceeded, Disconnected, FormatError,
                           InvViolated, NotPrime, NotThreeRegular)

K4 = st.named_graph("K4")


def test_graph_validation():
    with pytest.raises(NotThreeRegular):
        st.OrderedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])  # 2-regular cycle
    # two disjoint copies of K4: 3-regular but disconnected
    kk = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    with pytest.raises(Disconnected):
        st.OrderedGraph(8, kk + [(u + 4, v + 4) for u, v in kk])
    with pytest.raises(FormatError):
        st.OrderedGraph(4, kk + [(0, 1)])  # duplicate edge
    with pytest.raises(FormatError):
        st.OrderedGraph(2, [(0, 0)])


def test_catalog_shapes():
    want = {"K4": (4, 6), "K33": (6, 9), "prism": (6, 9), "Q3": (8, 12),
            "petersen": (10, 15)}
    assert set(st.catalog_names()) == set(want)
    for name, (n, m) in want.items():
        g = st.named_graph(name)
        assert (g.n, g.m) == (n, m)
        assert g.n_darts == 2 * m
        # darts leaving v occupy ranks 3v..3v+2
        assert all(g.source[3 * v + i] == v for v in range(n) for i in range(3))
        assert (g.dual[g.dual] == np.arange(g.n_darts)).all()


def test_dart_order_is_lexicographic():
    assert K4.darts[:4] == [(0, 1), (0, 2), (0, 3), (1, 0)]
    assert K4.und_edges[0] == (0, 1)


def test_build_cfi_sizes():
    s = st.build_cfi(K4, 2)
    assert s.n == 24
    assert s.relations["triple"].shape[0] == 16
    assert s.relations["cycle"].shape[0] == 24
    assert s.relations["negate"].shape[0] == 24
    s3 = st.build_cfi(K4, 3, [1, 0, 2, 0])
    assert s3.n == 36
    assert s3.relations["triple"].shape[0] == 36
    with pytest.raises(NotPrime):
        st.build_cfi(K4, 4)
    with pytest.raises(FormatError):
        st.build_cfi(K4, 2, [1, 0])


def test_triple_relation_content():
    # vertex 0 of K4 with zero load: triples over darts (0,1),(0,2),(0,3)
    s = st.build_cfi(K4, 2)
    p = 2
    trips = {t for t in map(tuple, s.relations["triple"]) if t[0] < 3 * p}
    want = set()
    for x1 in range(2):
        for x2 in range(2):
            x3 = (x1 + x2) % 2
            want.add((0 * p + x1, 1 * p + x2, 2 * p + x3))
    assert trips == want


def test_automorphism_dims():
    for name, dim in (("K4", 3), ("Q3", 5), ("K33", 4), ("prism", 4),
                      ("petersen", 6)):
        for p in (2, 3):
            s = st.build_cfi(st.named_graph(name), p)
            assert st.automorphism_basis(s).dim == dim


def test_twist_validation_and_shifts():
    vals = np.zeros(K4.n_darts, np.int64)
    vals[K4.dart_index[(0, 1)]] = 1
    with pytest.raises(InvViolated):
        st.TwistVector(K4, 3, vals)
    vals[K4.dart_index[(1, 0)]] = 2
    tw = st.TwistVector(K4, 3, vals)
    assert tw.vertex_shifts().tolist() == [1, 2, 0, 0]
    assert not tw.is_automorphism()


def test_apply_twist_moves_load_keeps_invariant():
    s = st.build_cfi(K4, 3, [1, 0, 0, 0])
    vals = np.zeros(K4.n_darts, np.int64)
    vals[K4.dart_index[(0, 1)]] = 1
    vals[K4.dart_index[(1, 0)]] = 2
    tw = st.TwistVector(K4, 3, vals)
    s2 = st.apply_twist(s, tw)
    assert s2.load.tolist() == [2, 2, 0, 0]
    assert st.iso_invariant(s2) == st.iso_invariant(s) == 1


def test_orbit_partition_k1():
    s = st.build_cfi(K4, 2)
    col = st.orbit_partition(s, 1)
    assert col.num_classes == 12
    assert (col.class_sizes == 2).all()


def test_orbit_partition_budget():
    s = st.build_cfi(st.named_graph("petersen"), 3)  # 3^6 = 729 group
    with pytest.raises(BudgetExceeded):
        st.orbit_partition(s, 5)  # 90^5 tuples is over the cap


def test_brute_force_iso_matches_invariant(seed=0):
    rng = np.random.default_rng(seed)
    for p in (2, 3):
        for _ in range(6):
            la = rng.integers(0, p, size=4)
            lb = rng.integers(0, p, size=4)
            a = st.build_cfi(K4, p, la)
            b = st.build_cfi(K4, p, lb)
            tw = st.brute_force_isomorphic(a, b)
            agree = st.iso_invariant(a) == st.iso_invariant(b)
            assert (tw is not None) == agree
            if tw is not None:
                assert st.apply_twist(a, tw) == b


def test_brute_force_iso_preconditions():
    a = st.build_cfi(K4, 2)
    with pytest.raises(FormatError):
        st.brute_force_isomorphic(a, st.build_cfi(K4, 3))
    with pytest.raises(FormatError):
        st.brute_force_isomorphic(a, st.build_cfi(st.named_graph("prism"), 2))
    with pytest.raises(BudgetExceeded):
        st.brute_force_isomorphic(st.build_cfi(st.named_graph("petersen"), 3),
                                  st.build_cfi(st.named_graph("petersen"), 3))


def test_unions():
    a = st.build_cfi(K4, 2)
    b = st.build_cfi(K4, 2, [1, 0, 0, 0])
    u = st.disjoint_union(a, b)
    assert u.n == 48
    assert u.relations["triple"].shape[0] == 32
    pu = st.pointed_union(a, b)
    assert pu.n == 50
    assert pu.signature[-1] == ("apex", 2)
    apex = pu.relation_set("apex")
    assert (48, 0) in apex and (49, 24) in apex and len(apex) == 48


def test_graph_format_roundtrip():
    for name in st.catalog_names():
        g = st.named_graph(name)
        text = st.format_graph(g)
        assert st.parse_graph(text) == g
        assert st.format_graph(st.parse_graph(text)) == text
    with pytest.raises(FormatError):
        st.parse_graph("ordered-graph 4 1\n1 0\n")  # high-low order


def test_cfi_format_roundtrip():
    s = st.build_cfi(K4, 3, [0, 2, 0, 1])
    text = st.format_cfi(s)
    assert st.parse_cfi(text) == s
    assert st.format_cfi(st.parse_cfi(text)) == text
    assert "load 1 2" in text and "load 0" not in text
    with pytest.raises(FormatError):
        st.parse_cfi("cfi p=2\n" + st.format_graph(K4) + "load 0 2\n")
    with pytest.raises(FormatError):
        st.parse_cfi("cfi p=2\n" + st.format_graph(K4) + "load 0 1\nload 0 1\n")


def test_structure_dense_and_eq():
    a = st.build_cfi(K4, 2)
    d = a.dense("cycle")
    assert d.shape == (24, 24) and d.sum() == 24
    assert a == st.build_cfi(K4, 2)
    assert a != st.build_cfi(K4, 2, [1, 0, 0, 0])
