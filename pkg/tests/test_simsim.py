import numpy as np
import pytest

from invmap import gf
from invmap import simsim as ss
from invmap import structures as st
from invmap.errors import (BudgetExceeded, DimensionMismatch, FieldMismatch,
                           FormatError)
from invmap.gf import FieldMatrix, PrimeField

F2 = PrimeField(2)
F3 = PrimeField(3)
F5 = PrimeField(5)


def fm(field, rows):
    return FieldMatrix(field, np.array(rows, np.int64))


def unit(i, j, field=F2, n=2):
    a = np.zeros((n, n), np.int64)
    a[i, j] = 1
    return FieldMatrix(field, a)


def block_identity(cip, k, field):
    """Identity on colour block k, zero elsewhere."""
    a = np.zeros((cip.total, cip.total), np.int64)
    lo, hi = cip.block_range(k)
    a[lo:hi, lo:hi] = np.eye(hi - lo, dtype=np.int64)
    return FieldMatrix(field, a)


def random_family(rng, field, n, members, conjugate):
    """Single-class family pair; conjugated from a random base when asked."""
    cip = ss.ColouredIndexPair([n])
    ms = [FieldMatrix(field, rng.integers(0, field.q, (n, n)))
          for _ in range(members)]
    if conjugate:
        while True:
            s0 = FieldMatrix(field, rng.integers(0, field.q, (n, n)))
            if gf.is_invertible(s0):
                break
        inv = gf.inverse(s0)
        ns = [s0 @ m @ inv for m in ms]
    else:
        ns = [FieldMatrix(field, rng.integers(0, field.q, (n, n)))
              for _ in range(members)]
    return ss.MatrixFamilyPair(field, cip, ms, ns)


def random_block_family(rng, field, sizes, extra, with_identities=True):
    """Compatible block family: per-block identities plus cell-supported pairs."""
    cip = ss.ColouredIndexPair(sizes)
    ms, ns = [], []
    if with_identities:
        for k in range(cip.num_classes):
            e = block_identity(cip, k, field)
            ms.append(e)
            ns.append(e)
    for _ in range(extra):
        ca = int(rng.integers(0, cip.num_classes))
        cb = int(rng.integers(0, cip.num_classes))
        ra = cip.block_range(ca)
        rb = cip.block_range(cb)
        a = np.zeros((cip.total, cip.total), np.int64)
        b = np.zeros((cip.total, cip.total), np.int64)
        a[ra[0]:ra[1], rb[0]:rb[1]] = rng.integers(
            0, field.q, (ra[1] - ra[0], rb[1] - rb[0]))
        b[ra[0]:ra[1], rb[0]:rb[1]] = rng.integers(
            0, field.q, (ra[1] - ra[0], rb[1] - rb[0]))
        ms.append(FieldMatrix(field, a))
        ns.append(FieldMatrix(field, b))
    return ss.MatrixFamilyPair(field, cip, ms, ns)


def in_space(fam, x):
    """Does x satisfy every defining equation of the intertwiner space?"""
    q = fam.field.q
    return all(np.array_equal(m.a @ x.a % q, x.a @ n.a % q)
               for m, n in zip(fam.ms, fam.ns))


_PAIR_CACHE = {}


def twisted_pair_family(field):
    """CFI twin pair over K4 and its stable-class family; built once."""
    if field.q not in _PAIR_CACHE:
        g = st.named_graph("K4")
        a = st.build_cfi(g, 2)
        load = np.zeros(g.n, np.int64)
        load[0] = 1
        b = st.build_cfi(g, 2, load=load)
        _PAIR_CACHE[field.q] = ss.family_from_structures(a, b, 1, 3, field)
    return _PAIR_CACHE[field.q]


# ---------------------------------------------------------------- index pairs


def test_coloured_index_pair_basics():
    cip = ss.ColouredIndexPair([2, 3, 1])
    assert cip.total == 6
    assert cip.num_classes == 3
    assert cip.block_range(1) == (2, 5)
    assert cip.index_class.tolist() == [0, 0, 1, 1, 1, 2]
    mask = cip.diag_mask()
    assert mask[0, 1] and mask[2, 4] and mask[5, 5]
    assert not mask[0, 2] and not mask[4, 5]
    with pytest.raises(IndexError):
        cip.block_range(3)


def test_coloured_index_pair_validation():
    with pytest.raises(FormatError):
        ss.ColouredIndexPair([])
    with pytest.raises(FormatError):
        ss.ColouredIndexPair([2, 0])
    with pytest.raises(DimensionMismatch):
        ss.ColouredIndexPair([2, 2], [2, 2, 1])
    with pytest.raises(DimensionMismatch):
        ss.ColouredIndexPair([2, 2], [2, 3])


def test_cell_of():
    cip = ss.ColouredIndexPair([2, 2])
    a = np.zeros((4, 4), np.int64)
    assert cip.cell_of(a) == (0, 0)  # zero counts as a block matrix
    a[0, 3] = 1
    assert cip.cell_of(a) == (0, 1)
    a[3, 0] = 1
    assert cip.cell_of(a) is None


def test_family_pair_validation():
    cip = ss.ColouredIndexPair([2])
    eye = FieldMatrix.identity(F2, 2)
    with pytest.raises(DimensionMismatch):
        ss.MatrixFamilyPair(F2, cip, [eye], [])
    with pytest.raises(FieldMismatch):
        ss.MatrixFamilyPair(F2, cip, [eye], [FieldMatrix.identity(F3, 2)])
    with pytest.raises(DimensionMismatch):
        ss.MatrixFamilyPair(F2, cip, [eye], [FieldMatrix.identity(F2, 3)])


# ---------------------------------------------------- intertwiners/centralizer


def test_intertwiner_identity_family():
    for n in (1, 2, 3):
        cip = ss.ColouredIndexPair([n])
        eye = FieldMatrix.identity(F3, n)
        fam = ss.MatrixFamilyPair(F3, cip, [eye], [eye])
        assert ss.intertwiner_space(fam).dim == n * n


def test_intertwiner_antidiagonal():
    # diag(0,1) against diag(1,0): only the anti-diagonal entries survive
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F2, cip,
                              [fm(F2, [[0, 0], [0, 1]])],
                              [fm(F2, [[1, 0], [0, 0]])])
    mod = ss.intertwiner_space(fam)
    assert mod.dim == 2
    for b in mod.basis:
        assert b.a[0, 0] == 0 and b.a[1, 1] == 0
        assert in_space(fam, b)


def test_intertwiner_dim_matches_centralizer():
    rng = np.random.default_rng(7)
    for trial in range(6):
        field = F2 if trial % 2 else F3
        n = int(rng.integers(2, 5))
        cip = ss.ColouredIndexPair([n])
        ms = [FieldMatrix(field, rng.integers(0, field.q, (n, n)))
              for _ in range(int(rng.integers(1, 4)))]
        fam = ss.MatrixFamilyPair(field, cip, ms, ms)
        assert ss.intertwiner_space(fam).dim == ss.centralizer(ms).dim


def test_centralizer_identity_family():
    alg = ss.centralizer([FieldMatrix.identity(F5, 3)])
    assert alg.dim == 9


def test_centralizer_matrix_units_scalar():
    units = [unit(i, j, F3) for i in range(2) for j in range(2)]
    alg = ss.centralizer(units)
    assert alg.dim == 1
    b = alg.basis[0].a
    assert b[0, 0] == b[1, 1] and b[0, 1] == 0 and b[1, 0] == 0


def test_centralizer_elements_commute():
    rng = np.random.default_rng(11)
    mats = [FieldMatrix(F3, rng.integers(0, 3, (3, 3))) for _ in range(2)]
    alg = ss.centralizer(mats)
    for b in alg.basis:
        for m in mats:
            assert np.array_equal(b.a @ m.a % 3, m.a @ b.a % 3)
    # the identity is always in the span
    eye = np.eye(3, dtype=np.int64)
    assert any(np.array_equal(b.a, eye) for b in alg.basis) or alg.dim > 1


# -------------------------------------------------------------- diag_project


def test_diag_project_block_diagonal_fixed_point():
    cip = ss.ColouredIndexPair([2, 1])
    s = fm(F3, [[1, 2, 0], [0, 1, 0], [0, 0, 2]])
    assert np.array_equal(ss.diag_project(s, cip).a, s.a)


def test_diag_project_off_diagonal_vanishes():
    cip = ss.ColouredIndexPair([2, 1])
    s = fm(F3, [[0, 0, 1], [0, 0, 2], [1, 2, 0]])
    assert not ss.diag_project(s, cip).a.any()


def test_diag_project_sums_over_blocks():
    rng = np.random.default_rng(3)
    cip = ss.ColouredIndexPair([2, 3, 1])
    s = FieldMatrix(F5, rng.integers(0, 5, (6, 6)))
    total = np.zeros((6, 6), np.int64)
    for k in range(cip.num_classes):
        total += ss.diag_project(s, cip, block=k).a
    assert np.array_equal(total % 5, ss.diag_project(s, cip).a)
    with pytest.raises(DimensionMismatch):
        ss.diag_project(FieldMatrix.identity(F5, 4), cip)


# ---------------------------------------------------------- block properties


def test_block_properties_per_block_identities():
    cip = ss.ColouredIndexPair([2, 2])
    ms = [block_identity(cip, 0, F2), block_identity(cip, 1, F2)]
    fam = ss.MatrixFamilyPair(F2, cip, ms, ms)
    props = ss.check_block_properties(fam)
    assert props == {"block_generated": True, "faithful": True}


def test_block_properties_all_ones_not_faithful():
    cip = ss.ColouredIndexPair([1, 1])
    ones = fm(F2, [[1, 1], [1, 1]])
    fam = ss.MatrixFamilyPair(F2, cip, [ones], [ones])
    assert not ss.check_block_properties(fam)["faithful"]


def test_block_properties_pieces_must_span():
    cip = ss.ColouredIndexPair([1, 1])
    # identity spreads over two diagonal cells; neither piece is in the span
    eye = FieldMatrix.identity(F3, 2)
    fam = ss.MatrixFamilyPair(F3, cip, [eye], [fm(F3, [[1, 0], [0, 2]])])
    assert not ss.check_block_properties(fam)["block_generated"]
    # adding the first per-block identity makes the split work but the
    # second block identity pair is still not a literal member
    e0, e1 = unit(0, 0, F3), unit(1, 1, F3)
    fam2 = ss.MatrixFamilyPair(F3, cip, [eye, e0], [eye, e0])
    props = ss.check_block_properties(fam2)
    assert props["block_generated"] and not props["faithful"]
    fam3 = ss.MatrixFamilyPair(F3, cip, [eye, e0, e1], [eye, e0, e1])
    assert ss.check_block_properties(fam3) == {"block_generated": True,
                                              "faithful": True}


# ----------------------------------------------------------------- loc-sim


def test_loc_sim_same_family():
    rng = np.random.default_rng(5)
    cip = ss.ColouredIndexPair([2, 2])
    ms = [block_identity(cip, 0, F3), block_identity(cip, 1, F3),
          FieldMatrix(F3, rng.integers(0, 3, (4, 4)))]
    fam = ss.MatrixFamilyPair(F3, cip, ms, ms)
    ok, wits = ss.is_loc_sim_similar(fam)
    assert ok and len(wits) == 2
    for k, w in enumerate(wits):
        assert in_space(fam, w)
        lo, hi = cip.block_range(k)
        assert gf.rank_raw(w.a[lo:hi, lo:hi], 3) == hi - lo


def test_loc_sim_zero_space():
    # nilpotent against zero forces X strictly upper-triangular-ish; with
    # the companion constraint the space dies and no block can be similar
    cip = ss.ColouredIndexPair([2])
    m = fm(F2, [[0, 1], [0, 0]])
    z = fm(F2, [[0, 0], [0, 0]])
    fam = ss.MatrixFamilyPair(F2, cip, [m, z], [z, m])
    ok, wits = ss.is_loc_sim_similar(fam)
    assert not ok
    assert wits == [None]


def test_loc_sim_cfi_pair_f3():
    fam = twisted_pair_family(F3)
    ok, wits = ss.is_loc_sim_similar(fam)
    assert ok
    for k, w in enumerate(wits):
        assert in_space(fam, w)
        lo, hi = fam.cip.block_range(k)
        assert gf.rank_raw(w.a[lo:hi, lo:hi], 3) == hi - lo


# ------------------------------------------------------- the decision itself


def test_decide_identical_family():
    rng = np.random.default_rng(13)
    ms = [FieldMatrix(F2, rng.integers(0, 2, (3, 3))) for _ in range(2)]
    fam = ss.MatrixFamilyPair(F2, ss.ColouredIndexPair([3]), ms, ms)
    s = ss.decide_sim_similar(fam)
    assert s is not None and gf.is_invertible(s)
    assert in_space(fam, s)


def test_decide_rank_refutation():
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F2, cip, [fm(F2, [[1, 0], [0, 0]])],
                              [fm(F2, [[0, 0], [0, 0]])])
    assert ss.decide_sim_similar(fam) is None


def test_decide_trace_refutation():
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F5, cip, [fm(F5, [[1, 0], [0, 1]])],
                              [fm(F5, [[1, 0], [0, 2]])])
    assert ss.decide_sim_similar(fam) is None


def test_decide_jordan_vs_identity_absent():
    # same rank and trace over F2, still not similar
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F2, cip, [fm(F2, [[1, 1], [0, 1]])],
                              [FieldMatrix.identity(F2, 2)])
    assert ss.decide_sim_similar(fam) is None
    assert ss.brute_force_similar(fam) is None


def test_decide_conjugated_families():
    rng = np.random.default_rng(17)
    for field in (F2, F3):
        fam = random_family(rng, field, 3, 3, conjugate=True)
        s = ss.decide_sim_similar(fam)
        assert s is not None and gf.is_invertible(s)
        assert in_space(fam, s)


def test_decide_empty_family_gives_identity():
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F3, cip, [], [])
    s = ss.decide_sim_similar(fam)
    assert np.array_equal(s.a, np.eye(2, dtype=np.int64))


# ---------------------------------------------------------------- the oracle


def test_brute_identical_2x2():
    eye = FieldMatrix.identity(F2, 2)
    fam = ss.MatrixFamilyPair(F2, ss.ColouredIndexPair([2]), [eye], [eye])
    s = ss.brute_force_similar(fam)
    assert s is not None and gf.is_invertible(s)


def test_brute_rank_mismatch_absent():
    cip = ss.ColouredIndexPair([2])
    fam = ss.MatrixFamilyPair(F2, cip, [fm(F2, [[1, 0], [0, 0]])],
                              [fm(F2, [[0, 0], [0, 0]])])
    assert ss.brute_force_similar(fam) is None


def test_brute_budget():
    eye = FieldMatrix.identity(F5, 4)
    fam = ss.MatrixFamilyPair(F5, ss.ColouredIndexPair([4]), [eye], [eye])
    with pytest.raises(BudgetExceeded):
        ss.brute_force_similar(fam)


def test_decide_agrees_with_brute_force():
    rng = np.random.default_rng(23)
    for trial in range(60):
        field = F3 if trial % 3 == 0 else F2
        fam = random_family(rng, field, 3, int(rng.integers(1, 4)),
                            conjugate=bool(rng.integers(0, 2)))
        got = ss.decide_sim_similar(fam)
        want = ss.brute_force_similar(fam)
        assert (got is None) == (want is None)
        if got is not None:
            assert gf.is_invertible(got) and in_space(fam, got)


def test_brute_witness_implies_cyclic():
    # Lemma 6.2 direction: an invertible intertwiner forces cyclicity and
    # invertible generators
    from invmap.algebra import is_cyclic_module
    rng = np.random.default_rng(29)
    found = 0
    for trial in range(20):
        fam = random_family(rng, F2, 3, 2, conjugate=True)
        s = ss.brute_force_similar(fam)
        assert s is not None
        mod = ss.intertwiner_space(fam)
        cyclic, gen = is_cyclic_module(mod.alg, mod)
        assert cyclic and gf.is_invertible(gen)
        found += 1
    assert found == 20


# --------------------------------------------------- block family properties


def test_diag_of_intertwiner_stays_in_space():
    # compatible block pairs: M Diag(S) = Diag(S) N for every S in the space
    rng = np.random.default_rng(31)
    for trial in range(20):
        field = F3 if trial % 2 else F2
        fam = random_block_family(rng, field, [2, 2], extra=3)
        stack = ss._space_stack(fam.ms, fam.ns, field.q, n=fam.cip.total)
        for _ in range(4):
            w = rng.integers(0, field.q, size=stack.shape[0])
            s = FieldMatrix(field, np.tensordot(w, stack, axes=1) % field.q)
            d = ss.diag_project(s, fam.cip)
            assert in_space(fam, d)
            if gf.is_invertible(s):
                assert gf.is_invertible(d)


def test_faithful_block_generated_and_decide_route():
    rng = np.random.default_rng(37)
    fam = random_block_family(rng, F3, [2, 2], extra=2)
    props = ss.check_block_properties(fam)
    assert props["faithful"]
    # M = N here, so the block route must succeed with an invertible S
    s = ss.decide_sim_similar(fam)
    assert s is not None and in_space(fam, s)


# -------------------------------------------------- families from structures


def test_family_from_structures_twisted_pair():
    fam = twisted_pair_family(F3)
    assert fam.cip.total == 24
    assert fam.cip.num_classes == 12
    assert fam.size == 168
    allm = np.zeros((24, 24), np.int64)
    for m in fam.ms:
        assert set(np.unique(m.a)).issubset({0, 1})
        allm += m.a
    # the classes partition the index square
    assert np.array_equal(allm, np.ones((24, 24), np.int64))
    # the twist lives in the ternary relation only, so the matched stable
    # pair classes coincide literally and the families are equal
    for m, n in zip(fam.ms, fam.ns):
        assert np.array_equal(m.a, n.a)
    props = ss.check_block_properties(fam)
    assert props == {"block_generated": True, "faithful": True}


def test_family_from_structures_decides_both_fields():
    for field in (F3, F2):
        fam = twisted_pair_family(field)
        s = ss.decide_sim_similar(fam)
        assert s is not None and gf.is_invertible(s)
        assert in_space(fam, s)


def test_family_from_structures_signature_guard():
    g = st.named_graph("K4")
    a = st.build_cfi(g, 2)
    b = st.build_cfi(g, 3)
    with pytest.raises(FormatError):
        ss.family_from_structures(a, b, 1, 3, F3)


# ----------------------------------------------------------------- file form


def test_family_format_round_trip():
    rng = np.random.default_rng(41)
    fam = random_block_family(rng, F3, [2, 1], extra=2)
    text = ss.format_family_pair(fam)
    back = ss.parse_family_pair(text)
    assert back.field.q == 3
    assert back.cip.sizes_i == fam.cip.sizes_i
    assert back.cip.sizes_j == fam.cip.sizes_j
    assert back.size == fam.size
    for x, y in zip(back.ms + back.ns, fam.ms + fam.ns):
        assert np.array_equal(x.a, y.a)
    assert ss.format_family_pair(back) == text


def test_family_parse_rejects_malformed():
    with pytest.raises(FormatError):
        ss.parse_family_pair("family 1 2 2\n")
    fam = random_block_family(np.random.default_rng(2), F2, [2], extra=1)
    text = ss.format_family_pair(fam)
    # inconsistent block lines survive parsing but fail pair validation
    with pytest.raises(DimensionMismatch):
        ss.parse_family_pair(text.replace("blocks 2", "blocks 3", 1))
