import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from linfty.ce import chart_corpus
from linfty.graded import MultiMap
from linfty.nerve import (ConvolutionAlgebra, NerveError, PolySimplicialForm, _extend_constant,
                          _vertex_value, cochain_from_json, cochain_ledger, degeneracy, dupont_h,
                          epsilon, exact_part, face, form_d, form_ring, horn_compatibility, horn_fill,
                          ledger_d_check, ledger_h_check, mc_decompose, mc_reconstruct,
                          random_cochain, relation_defect, sample_horn, tree_formula, cochain_to_json)


def form(n, text):
    return PolySimplicialForm.parse(n, text).dict


def all_monomials(n, max_tdeg):
    out = []
    for exps in itertools.product(range(max_tdeg + 1), repeat=n):
        if sum(exps) > max_tdeg:
            continue
        for dts in itertools.product((0, 1), repeat=n):
            out.append(tuple(exps) + tuple(dts))
    return out


# ---------------------------------------------------------------------------
# forms and the Dupont contraction


def test_dupont_on_interval():
    assert dupont_h(1, 0, form(1, "dt1")) == form(1, "t1")
    assert dupont_h(1, 0, form(1, "t1*dt1")) == form(1, "1/2*t1^2")
    assert dupont_h(1, 0, form(1, "t1")) == {}


def test_dupont_on_interval_against_integral():
    # on Delta^1 based at 0: h(f dt) = int_0^t f
    t = sympy.Symbol("t1")
    for k in range(5):
        want = sympy.integrate(t ** k, (t, 0, t))
        got = dupont_h(1, 0, form(1, f"t1^{k}*dt1"))
        coeff = sympy.Poly(want, t).coeffs()[0]
        assert got == {(k + 1, 0): Fraction(int(coeff.p), int(coeff.q))}


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_contraction_identity_on_monomial_basis(n):
    R = form_ring(n)
    for i in range(n + 1):
        for m in all_monomials(n, 4):
            f = {m: Fraction(1)}
            total = R.add(epsilon(n, i, f), form_d(n, dupont_h(n, i, f)), dupont_h(n, i, form_d(n, f)))
            assert R.sub(total, f) == {}, (n, i, R.mono_str(m))


def test_dupont_squares_to_zero():
    for m in all_monomials(2, 3):
        assert dupont_h(2, 0, dupont_h(2, 0, {m: 1})) == {}


def test_vertex_out_of_range():
    with pytest.raises(NerveError):
        epsilon(2, 3, {})


def test_simplicial_identities_on_forms():
    n = 3
    f = form(n, "t1^2*dt2 + t3*dt1*dt3 - 3*t2*t3 + dt3")
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            # d_i d_j = d_(j-1) d_i
            assert face(n - 1, i, face(n, j, f)) == face(n - 1, j - 1, face(n, i, f))
    for j in range(n + 1):
        # d_j s_j = d_(j+1) s_j = id
        assert face(n + 1, j, degeneracy(n, j, f)) == f
        assert face(n + 1, j + 1, degeneracy(n, j, f)) == f


def test_face_commutes_with_d():
    f = form(2, "t1^3*t2 + t2*dt1")
    for r in range(3):
        assert face(2, r, form_d(2, f)) == form_d(1, face(2, r, f))


# ---------------------------------------------------------------------------
# the convolution algebra


def toy_conv(N=3):
    g = chart_corpus()["toy"]
    return ConvolutionAlgebra(g, g, N)


def scaling_mc(conv):
    sp = conv.A.space
    lin = MultiMap((sp,), sp, 0, {(0,): {0: Fraction(2)}, (1,): {1: Fraction(4)}})
    return conv.constant({1: lin})


def test_mc_elements_are_morphisms():
    conv = toy_conv()
    mu = scaling_mc(conv)
    assert conv.is_mc(mu)
    assert conv.as_morphism(mu).is_morphism(3)
    sp = conv.A.space
    # x -> 2x, y -> 2y does not intertwine l_2(x, x) = y
    bad = conv.constant({1: MultiMap((sp,), sp, 0, {(0,): {0: Fraction(2)}, (1,): {1: Fraction(2)}})})
    assert not conv.is_mc(bad)
    assert not conv.as_morphism(bad).is_morphism(3)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_convolution_relation_on_random_cochains(seed):
    conv = toy_conv()
    rng = random.Random(seed)
    elems = [random_cochain(conv, rng.choice([-1, 0, 1]), rng) for _ in range(3)]
    assert relation_defect(conv, elems)


def test_convolution_rejects_associative_input():
    from linfty import dga
    with pytest.raises(NerveError):
        ConvolutionAlgebra(dga.massey(), dga.massey(), 3)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [1, 2])
def test_mc_round_trip(N, n):
    conv = toy_conv(N)
    mu = scaling_mc(conv)
    rng = random.Random(100 * N + n)
    nu = exact_part(conv, random_cochain(conv, -1, rng), n, 0)
    alpha = mc_reconstruct(conv, mu, nu, n, 0)
    assert conv.is_mc(alpha)
    mu2, nu2 = mc_decompose(conv, alpha, 0)
    assert _vertex_value(conv, mu2, n, 0) == mu
    assert nu2 == nu
    assert mc_reconstruct(conv, _vertex_value(conv, mu2, n, 0), nu2, n, 0) == alpha


def test_reconstruct_rejects_non_closed_part():
    conv = toy_conv()
    rng = random.Random(3)
    beta = random_cochain(conv, -1, rng)
    eta = conv.multiply(_extend_constant(conv, beta, 1), form(1, "t1"))
    with pytest.raises(NerveError):
        mc_reconstruct(conv, scaling_mc(conv), eta, 1, 0)


@pytest.mark.parametrize("n", [1, 2])
def test_fixed_point_matches_tree_formula(n):
    conv = toy_conv(4)
    mu = scaling_mc(conv)
    nu = exact_part(conv, random_cochain(conv, -1, random.Random(n)), n, 0)
    alpha = mc_reconstruct(conv, mu, nu, n, 0)
    a0 = conv.add(_extend_constant(conv, mu, n), nu)
    assert tree_formula(conv, a0, 0) == alpha


def test_tree_formula_needs_single_bracket():
    g = chart_corpus()["cubic"]
    conv = ConvolutionAlgebra(g, g, 3)
    with pytest.raises(NerveError):
        tree_formula(conv, conv.zero(1), 0)


# ---------------------------------------------------------------------------
# horn filling


@pytest.mark.parametrize("j", [0, 1, 2])
def test_two_horns_fill(j):
    conv = toy_conv()
    faces = sample_horn(conv, scaling_mc(conv), 2, j, random.Random(10 + j))
    assert any(not x.is_zero() for x in faces.values())
    fill = horn_fill(conv, faces, 2, j)
    assert fill.ok
    for r, x in faces.items():
        assert conv.face(fill.filler, r) == x
    assert fill.ledger["h_bound"] and fill.ledger["d_bound"]


def test_two_horn_over_two_dim_target():
    # a different two-dimensional nilpotent source: abelian x, y
    A = chart_corpus()["abelian"]
    B = chart_corpus()["toy"]
    conv = ConvolutionAlgebra(A, B, 3)
    assert conv.is_mc(conv.zero(0))
    for j in range(3):
        faces = sample_horn(conv, conv.zero(0), 2, j, random.Random(j))
        fill = horn_fill(conv, faces, 2, j)
        assert fill.ok and fill.ledger["h_bound"] and fill.ledger["d_bound"]


@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_three_horns_fill(j):
    conv = toy_conv(2)
    faces = sample_horn(conv, scaling_mc(conv), 3, j, random.Random(j))
    fill = horn_fill(conv, faces, 3, j)
    assert fill.ok


def test_ledger_checks_on_random_cochains():
    conv = toy_conv()
    rng = random.Random(7)
    for _ in range(5):
        c = conv.multiply(_extend_constant(conv, random_cochain(conv, 0, rng), 2), form(2, "t1^2*t2 + t2"))
        for i in range(3):
            assert ledger_h_check(conv, c, i)
        assert ledger_d_check(conv, c)
    led = cochain_ledger(conv, c)
    assert set(led["D"]) == {0, 1, 2}


def test_incompatible_horn_is_rejected():
    conv = toy_conv()
    faces = sample_horn(conv, scaling_mc(conv), 2, 1, random.Random(4))
    faces[0] = conv.degeneracy(conv.zero(0), 0)
    with pytest.raises(NerveError):
        horn_fill(conv, faces, 2, 1)


def test_horn_needs_all_other_faces():
    conv = toy_conv()
    faces = sample_horn(conv, scaling_mc(conv), 2, 1, random.Random(4))
    del faces[0]
    with pytest.raises(NerveError):
        horn_fill(conv, faces, 2, 1)


def test_sampled_horns_are_compatible():
    conv = toy_conv()
    faces = sample_horn(conv, scaling_mc(conv), 3, 0, random.Random(2))
    assert horn_compatibility(conv, faces, 3, 0) == []


# ---------------------------------------------------------------------------
# serialization


def test_cochain_json_round_trip():
    conv = toy_conv()
    faces = sample_horn(conv, scaling_mc(conv), 2, 0, random.Random(5))
    for x in faces.values():
        data = cochain_to_json(conv, x)
        assert cochain_from_json(conv, data) == x


def test_cochain_json_schema_errors():
    conv = toy_conv()
    with pytest.raises(NerveError):
        cochain_from_json(conv, {"n": 0, "degree": 0})
    with pytest.raises(NerveError):
        cochain_from_json(conv, {"n": 0, "degree": 0, "components": {"9": []}})
