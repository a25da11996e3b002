import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfty import dga
from linfty.graded import GradedSpace, MultiMap, compose, identity
from linfty.hodge import HeatFamily, retraction_from_inner_product
from linfty.homotopy import AINF, HomotopyMorphism, compose_morphisms, identity_morphism
from linfty.transfer import (TensorRoute, _table, _tree_sum, admissible_colorings, count_p_trees,
                             decorated_trees, enumerate_trees, homotopy_H, homotopy_R, homotopy_residual,
                             homotopy_S, p_decorations, reparametrize, transfer, transfer_I, transfer_m,
                             transfer_P, verify_norm_ledger)


def catalan_recurrence(n):
    c = [1]
    for m in range(1, n + 1):
        c.append(sum(c[j] * c[m - 1 - j] for j in range(m)))
    return c[n]


@pytest.mark.parametrize("k,count", [(2, 1), (3, 2)])
def test_tree_counts_small(k, count):
    assert len(enumerate_trees(k)) == count


def test_tree_counts_against_recurrence():
    assert len(enumerate_trees(5)) == catalan_recurrence(4) == 14
    assert [len(enumerate_trees(k)) for k in range(1, 9)] == [1, 1, 2, 5, 14, 42, 132, 429]


def massey_setup():
    alg = dga.massey()
    return alg, retraction_from_inner_product(alg)


def apply_unary(f, v):
    return f.apply(v)


def test_m1_vanishes_on_harmonic_forms():
    for alg in dga.base_algebras().values():
        r = retraction_from_inner_product(alg)
        assert transfer_m(alg, r, 1).is_zero()


def test_m2_is_projected_product():
    alg, r = massey_setup()
    expected = compose(compose(compose(r.p, alg.m2, 1), r.i, 1), r.i, 2)
    assert transfer_m(alg, r, 2) == expected


def test_m3_matches_two_tree_oracle():
    alg, r = massey_setup()
    H = r.H
    m2 = alg.m2
    assert alg.space.dim == 4

    def first(a, b, c):
        x = apply_unary(r.h, m2.apply(r.i.apply({a: 1}), r.i.apply({b: 1})))
        return r.p.apply(m2.apply(x, r.i.apply({c: 1})))

    def second(a, b, c):
        # h passes the first input
        x = apply_unary(r.h, m2.apply(r.i.apply({b: 1}), r.i.apply({c: 1})))
        s = (-1) ** (H.degrees[a] - 1)
        return {k: s * v for k, v in r.p.apply(m2.apply(r.i.apply({a: 1}), x)).items()}

    m3 = transfer_m(alg, r, 3)
    assert not m3.is_zero()
    for key in itertools.product(range(H.dim), repeat=3):
        t1, t2 = first(*key), second(*key)
        tot = {k: t1.get(k, 0) + t2.get(k, 0) for k in set(t1) | set(t2)}
        tot = {k: v for k, v in tot.items() if v}
        assert m3.entries.get(key, {}) == tot
    # frozen value: the triple Massey product of the degree-one class
    assert m3.entries == {(0, 0, 0): {1: -1}}


def test_I_low_arities():
    alg, r = massey_setup()
    assert transfer_I(alg, r, 1) == r.i
    expected = compose(compose(compose(r.h, alg.m2, 1), r.i, 1), r.i, 2)
    assert transfer_I(alg, r, 2) == expected
    assert len(decorated_trees("I", 3)) == 2


def test_I3_matches_two_tree_oracle():
    alg, r = massey_setup()
    H = r.H
    m2 = alg.m2
    I3 = transfer_I(alg, r, 3)
    for a, b, c in itertools.product(range(H.dim), repeat=3):
        x = r.h.apply(m2.apply(r.i.apply({a: 1}), r.i.apply({b: 1})))
        t1 = r.h.apply(m2.apply(x, r.i.apply({c: 1})))
        y = r.h.apply(m2.apply(r.i.apply({b: 1}), r.i.apply({c: 1})))
        s = (-1) ** (H.degrees[a] - 1)
        t2 = {k: s * v for k, v in r.h.apply(m2.apply(r.i.apply({a: 1}), y)).items()}
        tot = {k: t1.get(k, 0) + t2.get(k, 0) for k in set(t1) | set(t2)}
        assert I3.entries.get((a, b, c), {}) == {k: v for k, v in tot.items() if v}


def test_P_low_arities():
    alg, r = massey_setup()
    assert transfer_P(alg, r, 1) == r.p
    assert count_p_trees(2) == 2
    labels = sorted(sorted((t[2][1], t[3][1])) for t in p_decorations(2))
    assert labels == [["h", "id"], ["h", "ip"]]


def _residual_corpus(k):
    algs = [dga.massey()] + list(dga.base_algebras().values()) + dga.corpus(6, seed=3)
    out = []
    for alg in algs:
        r = retraction_from_inner_product(alg)
        out.append((alg, r, transfer(alg, r, k)))
    return out


@pytest.mark.parametrize("k,count", [(2, 2), (3, 7)])
def test_P_decorations_against_residual_filter(k, count):
    """Every decoration is a 2-coloring; the family passes and no decoration can be dropped."""
    items = [(t, c) for t, c in decorated_trees("P", k) if c]
    assert len(items) == count
    colorings = set(admissible_colorings(k))
    assert all(t in colorings for t, _ in items)
    data = _residual_corpus(k)

    def passes(sub):
        for alg, r, tr in data:
            comps = {j: tr.P.comp(j) for j in range(1, k)}
            comps[k] = _tree_sum(sub, _table(r), alg.m2, (alg.space,) * k, r.H, 0)
            if not HomotopyMorphism(alg, tr.minimal, comps, AINF).residual(k).is_zero():
                return False
        return True

    assert passes(items)
    for drop in range(len(items)):
        assert not passes(items[:drop] + items[drop + 1:])


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_tree_route_matches_tensor_route(seed):
    alg = dga.random_dg_algebra(seed, 6)
    r = retraction_from_inner_product(alg)
    route = TensorRoute(alg, r)
    for k in (2, 3):
        assert route.word("m", k) == transfer_m(alg, r, k)
        assert route.word("I", k) == transfer_I(alg, r, k)
        assert route.word("P", k) == transfer_P(alg, r, k)


def test_transfer_is_deterministic_under_parallelism():
    alg = dga.base_algebras()["massey_x_ext1"]
    r = retraction_from_inner_product(alg)
    a = transfer(alg, r, 4, parallel=1)
    b = transfer(alg, r, 4, parallel=4)
    for k in range(1, 5):
        assert a.minimal.op(k).to_json() == b.minimal.op(k).to_json()
        assert a.P.comp(k).to_json() == b.P.comp(k).to_json()


def test_P_after_I_is_identity():
    alg, r = massey_setup()
    tr = transfer(alg, r, 4)
    pi = compose_morphisms(tr.P, tr.I, 4)
    ident = identity_morphism(tr.minimal)
    for k in range(1, 5):
        assert pi.comp(k) == ident.comp(k)


def test_norm_ledger_zero_algebra():
    sp = GradedSpace((), ())
    z = MultiMap((sp, sp), sp, 1, {})
    led = verify_norm_ledger({2: z}, z, MultiMap((sp,), sp, -1, {}))
    assert led["C"] == 0 and led["holds"]


def test_norm_ledger_bound_on_dim6():
    for alg in dga.corpus(5, seed=11, max_dim=6):
        r = retraction_from_inner_product(alg)
        tr = transfer(alg, r, 5)
        led = verify_norm_ledger({k: tr.minimal.op(k) for k in range(2, 6)}, alg.m2, r.h)
        assert led["holds"]


def test_p_tree_count_bound():
    for k in range(1, 6):
        assert count_p_trees(k) <= 16 ** k


# ---------------------------------------------------------------------------
# heat-kernel homotopy


def test_R_endpoints():
    alg, r = massey_setup()
    heat = HeatFamily(alg, r)
    assert homotopy_R(alg, r, heat, 1, 0.0) == identity(alg.space)
    assert homotopy_R(alg, r, heat, 1, "inf") == r.ip
    assert homotopy_S(alg, r, heat, 2, "inf").is_zero()


def test_R_at_infinity_is_I_after_P():
    alg, r = massey_setup()
    heat = HeatFamily(alg, r)
    tr = transfer(alg, r, 3)
    ip = compose_morphisms(tr.I, tr.P, 3)
    for k in (1, 2, 3):
        assert homotopy_R(alg, r, heat, k, "inf") == ip.comp(k)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_homotopy_residual_small(t):
    alg, r = massey_setup()
    heat = HeatFamily(alg, r)
    for n in (1, 2, 3):
        res = homotopy_residual(alg, r, heat, n, t)
        assert res.max_abs() < 1e-6


def test_reparametrized_midpoint():
    assert reparametrize(0.5) == (1.0, math.pi)
    alg, r = massey_setup()
    heat = HeatFamily(alg, r)
    R, S = homotopy_H(alg, r, heat, 2, 0.5)
    R1 = homotopy_R(alg, r, heat, 2, 1.0)
    S1 = homotopy_S(alg, r, heat, 2, 1.0)
    assert (R - R1).max_abs() == 0
    assert (S - S1.scale(math.pi)).max_abs() < 1e-12
