"""Tuple partition refinement: fixed points, class counts, comparisons."""
import numpy as np
import pytest

from invmap import structures as st
from invmap import wl
from invmap.errors import BudgetExceeded

K4 = st.named_graph("K4")


def graph_structure(n, und_edges):
    """Symmetric edge relation over 0..n-1."""
    pairs = [[u, v] for u, v in und_edges] + [[v, u] for u, v in und_edges]
    return st.Structure(n, [("E", 2)], {"E": np.array(pairs, np.int64)})


def cycle_structure(n):
    return graph_structure(n, [(i, (i + 1) % n) for i in range(n)])


def path_structure(n):
    return graph_structure(n, [(i, i + 1) for i in range(n - 1)])


def test_atomic_types_k2_cycle():
    # C6, k=2: diagonal / adjacent / distant
    col = wl.atomic_types(cycle_structure(6), 2)
    assert col.num_classes == 3
    assert sorted(col.class_sizes.tolist()) == [6, 12, 18]


def test_atomic_types_triangle_and_pure_set():
    tri = graph_structure(3, [(0, 1), (1, 2), (0, 2)])
    assert wl.atomic_types(tri, 1).num_classes == 1
    assert wl.atomic_types(tri, 2).num_classes == 2
    bare = st.Structure(4, [], {})
    col = wl.atomic_types(bare, 2)
    assert col.num_classes == 2
    assert sorted(col.class_sizes.tolist()) == [4, 12]


def test_refine_path_width_one():
    # endpoints vs middle, exactly like classic color refinement
    col = wl.wl_refine(path_structure(3), 1)
    assert col.num_classes == 2
    assert col.class_of((0,)) == col.class_of((2,)) != col.class_of((1,))


def test_refine_cycle_is_homogeneous():
    col = wl.wl_refine(cycle_structure(6), 1)
    assert col.num_classes == 1
    col2 = wl.wl_refine(cycle_structure(6), 2)
    # distance partition: diagonal, distance 1, 2, antipodal
    assert col2.num_classes == 4
    assert sorted(col2.class_sizes.tolist()) == [6, 6, 12, 12]


def test_ids_row_major_indexing():
    col = wl.wl_refine(path_structure(3), 2)
    t = col.tuple_index((1, 2))
    assert t == 1 * 3 + 2
    assert col.class_of((1, 2)) == col.ids[t]


def test_refinement_invariants():
    s = st.build_cfi(K4, 2)
    col0 = wl.atomic_types(s, 2)
    col1 = wl.wl_refine(s, 2)
    assert col1.refines(col0)
    assert col1.num_classes == 168
    assert int(col1.class_sizes.sum()) == 24 ** 2
    # stable: one more round must not split anything
    codes, width = wl._relative_codes(s, 2)
    ids2, _ = wl._round_once(col1.ids, s.n, 2, codes, width, history=False)
    assert len(np.unique(ids2)) == col1.num_classes


def test_canonical_ids_are_lex_ranks():
    # class ids sorted by first occurrence of the refinement key; re-running
    # must reproduce identical arrays
    s = st.build_cfi(K4, 2)
    a = wl.wl_refine(s, 2)
    b = wl.wl_refine(s, 2)
    assert (a.ids == b.ids).all()
    assert a.descriptors == b.descriptors


def test_descriptors_align_with_classes():
    s = cycle_structure(6)
    col = wl.wl_refine(s, 2, descriptors=True)
    assert len(col.descriptors) == col.num_classes
    order = wl.counting_type_order(col)
    assert [o[0] for o in order] == list(range(col.num_classes))
    assert sum(o[1] for o in order) == 36


def test_canonical_order_survives_relabeling():
    # same cycle with vertices renamed: descriptor lists must agree
    a = cycle_structure(6)
    perm = [3, 0, 5, 1, 4, 2]
    b = graph_structure(6, [(perm[i], perm[(i + 1) % 6]) for i in range(6)])
    oa = wl.counting_type_order(wl.wl_refine(a, 2))
    ob = wl.counting_type_order(wl.wl_refine(b, 2))
    assert [(c, s, d) for c, s, d in oa] == [(c, s, d) for c, s, d in ob]


def test_cycle_vs_two_triangles():
    # both 2-regular: width 1 cannot separate them
    c6 = cycle_structure(6)
    two_c3 = graph_structure(6, [(0, 1), (1, 2), (0, 2),
                                 (3, 4), (4, 5), (3, 5)])
    assert wl.wl_equivalent(c6, two_c3, 1)
    assert not wl.wl_equivalent(c6, two_c3, 2)


def test_restrict_coloring():
    s = st.build_cfi(K4, 2)
    col = wl.wl_refine(s, 2)
    r1 = wl.restrict_coloring(col, 1)
    assert r1.k == 1 and r1.n == 24
    # restriction of a partition to shorter tuples stays a partition with
    # ids covering 0..c-1
    assert r1.ids.min() == 0
    assert len(np.unique(r1.ids)) == r1.num_classes


def test_compare_separates_cycle_from_path():
    a = cycle_structure(6)
    b = path_structure(6)
    res = wl.wl_compare(a, b, 1)
    assert not res.equivalent


def test_twisted_pair_blindness():
    a = st.build_cfi(K4, 2)
    b = st.build_cfi(K4, 2, [1, 0, 0, 0])
    assert st.brute_force_isomorphic(a, b) is None
    for k in (1, 2):
        res = wl.wl_compare(a, b, k)
        assert res.equivalent, f"pair separated at width {k}"
    assert wl.wl_equivalent(a, b, 1)


def test_compare_detects_unequal_sizes():
    a = st.build_cfi(K4, 2)
    b = st.build_cfi(K4, 3)
    assert not wl.wl_equivalent(a, b, 1)


def test_budget_guard():
    s = st.build_cfi(st.named_graph("petersen"), 3)  # 90 elements
    with pytest.raises(BudgetExceeded):
        wl.wl_refine(s, 4)


def test_report_lines():
    col = wl.wl_refine(cycle_structure(6), 1)
    assert col.report_lines() == ["class 0 size 6"]
    col2 = wl.wl_refine(path_structure(3), 1)
    assert sorted(col2.report_lines()) == ["class 0 size 2",
                                           "class 1 size 1"]
    verbose = wl.wl_refine(path_structure(3), 1).report_lines(verbose=True)
    assert "  1" in verbose


def test_tuples_of_class():
    col = wl.wl_refine(path_structure(3), 1)
    mid = col.class_of((1,))
    assert col.tuples_of_class(mid) == [(1,)]
    assert col.tuples_of_class(1 - mid) == [(0,), (2,)]
    col2 = wl.atomic_types(cycle_structure(6), 2)
    diag = col2.class_of((0, 0))
    assert col2.tuples_of_class(diag) == [(i, i) for i in range(6)]
    assert len(col2.tuples_of_class(diag, limit=2)) == 2
