import numpy as np
import pytest

from invmap import encoding as enc
from invmap import structures as st
from invmap.errors import FormatError, MalformedEncoding

K4 = st.named_graph("K4")


def test_plain_graph_basics():
    g = enc.PlainGraph(3, [(0, 1), (1, 2)])
    assert g.edges == [(0, 1), (1, 2)]
    assert g.adjacency()[1] == [0, 2]
    with pytest.raises(FormatError):
        enc.PlainGraph(2, [(0, 0)])
    with pytest.raises(FormatError):
        enc.PlainGraph(2, [(0, 1), (1, 0)])


def test_plain_graph_format_roundtrip():
    g = enc.PlainGraph(4, [(0, 1), (2, 3)])
    text = enc.format_plain_graph(g)
    assert text.splitlines()[0] == "graph 4 2"
    assert enc.parse_plain_graph(text) == g


def test_encode_sizes_k4_p2():
    s = st.build_cfi(K4, 2)
    g = enc.cfi_to_graph(s)
    # 24 elements + 16 triple nodes + 12 pair nodes + 12 path nodes
    assert g.n == 64
    # 16*3 + 12*2 + 11 chain + 24 attach
    assert len(g.edges) == 107


def test_roundtrip_p2_all_loads():
    for mask in range(16):
        load = [(mask >> i) & 1 for i in range(4)]
        s = st.build_cfi(K4, 2, load)
        t = enc.graph_to_cfi(enc.cfi_to_graph(s))
        assert st.brute_force_isomorphic(s, t) is not None


def test_roundtrip_p3():
    for load in ([0, 0, 0, 0], [1, 2, 0, 0], [2, 2, 2, 0]):
        s = st.build_cfi(K4, 3, load)
        t = enc.graph_to_cfi(enc.cfi_to_graph(s))
        assert t.graph == s.graph and t.p == 3
        assert st.iso_invariant(t) == st.iso_invariant(s)
        assert st.brute_force_isomorphic(s, t) is not None


def test_roundtrip_p5_zero_sum():
    s = st.build_cfi(K4, 5, [1, 4, 2, 3])
    t = enc.graph_to_cfi(enc.cfi_to_graph(s))
    assert st.iso_invariant(t) == 0
    assert st.brute_force_isomorphic(s, t) is not None


def test_roundtrip_other_graphs():
    for name in ("prism", "K33"):
        s = st.build_cfi(st.named_graph(name), 2, None)
        t = enc.graph_to_cfi(enc.cfi_to_graph(s))
        assert t.graph == s.graph
        assert st.iso_invariant(t) == st.iso_invariant(s)


def test_decode_rejects_malformed():
    with pytest.raises(MalformedEncoding):
        enc.graph_to_cfi(enc.PlainGraph(3, [(0, 1), (1, 2), (0, 2)]))
    s = st.build_cfi(K4, 2)
    g = enc.cfi_to_graph(s)
    # drop one attachment edge: an element loses its path anchor
    broken = [e for e in g.edges if e != g.edges[-1]]
    with pytest.raises(MalformedEncoding):
        enc.graph_to_cfi(enc.PlainGraph(g.n, broken))
    # fuse two path nodes: chain degree profile breaks
    with pytest.raises(MalformedEncoding):
        enc.graph_to_cfi(enc.PlainGraph(g.n, g.edges + [(g.n - 1, g.n - 3)]))


def test_encode_deterministic():
    s = st.build_cfi(K4, 3, [1, 0, 2, 0])
    assert enc.cfi_to_graph(s) == enc.cfi_to_graph(s)
