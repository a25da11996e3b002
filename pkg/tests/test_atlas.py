from fractions import Fraction

import pytest
import sympy

from linfty.atlas import (AtlasError, GaugeIso, GaugeObstruction, H0Model, HypercoverNerve, atlas_to_json,
                          compose_jets, connect, face_independence, fat_line_ambient, glue_h0,
                          identity_gauge, make_chart, move_base_point, propagate_morphism,
                          scaling_gauge, three_chart_atlas, transition, transition_homotopy,
                          verify_cocycle)
from linfty.ce import chart_corpus
from linfty.dga import named
from linfty.graded import GradedSpace, MultiMap, to_matrix
from linfty.homotopy import LINF, HomotopyMorphism, compose_morphisms, identity_morphism
from linfty.nerve import ConvolutionAlgebra


@pytest.fixture(scope="module")
def atlas():
    return three_chart_atlas(3)


def linear_part(f):
    return sympy.Matrix(to_matrix(f.comp(1)))


def permutation_ambient():
    # u in degree 1, v and w in degree 2, du = v - w; cohomology is the class [v] = [w]
    sp = GradedSpace(("u", "v", "w"), (1, 2, 2))
    return named(sp, {"u": {"v": 1, "w": -1}}, {})


def test_identity_gauge_gives_identity_transition():
    amb = fat_line_ambient()
    c = make_chart("a", amb, 3)
    f = transition(c, c, identity_gauge(amb))
    ident = identity_morphism(c.minimal)
    for k in (1, 2, 3):
        assert f.comp(k) == ident.comp(k)


def test_permutation_gauge_against_rational_oracle():
    amb = permutation_ambient()
    c = make_chart("p", amb, 3)
    psi = GaugeIso(amb, amb, [[Fraction(-1), 0, 0], [0, 0, 1], [0, 1, 0]])
    f = transition(c, c, psi)
    # oracle: the harmonic representative spans ker(D) and ker(D^T) in degree 2
    D = sympy.Matrix([[0, 0, 0], [1, 0, 0], [-1, 0, 0]])
    harm = (D * D.T + D.T * D).nullspace()
    harm = [v for v in harm if v[0] == 0]
    assert len(harm) == 1
    k = harm[0]
    Psi = sympy.Matrix([[-1, 0, 0], [0, 0, 1], [0, 1, 0]])
    coeff = (k.T * Psi * k)[0] / (k.T * k)[0]
    assert linear_part(f) == sympy.Matrix([[coeff]]) == sympy.Matrix([[1]])
    assert all(f.comp(k).is_zero() for k in (2, 3))


def test_gauge_must_intertwine_differentials():
    amb = permutation_ambient()
    bad = GaugeIso(amb, amb, [[1, 0, 0], [0, 0, 1], [0, 1, 0]])
    with pytest.raises(AtlasError):
        bad.check()


def test_change_of_inner_product_is_quasi_isomorphism(atlas):
    ca, cb = atlas.charts["a"], atlas.charts["b"]
    f = transition(ca, cb, identity_gauge(ca.ambient))
    assert f.is_morphism(3)
    assert linear_part(f).det() != 0


def test_sign_flip_on_fat_line():
    amb = fat_line_ambient()
    charts = {"p": make_chart("p", amb, 3), "q": make_chart("q", amb, 3)}
    nerve = HypercoverNerve(charts, {("p", "q"): scaling_gauge(amb, -1)}, {}, 3)
    f = nerve.transition("p", "q")
    jet = propagate_morphism(f, 3)
    (o, p), = jet.F.items()
    t1 = p.ring.gens[0]
    assert p == -t1
    res = glue_h0(nerve)
    assert res["ok"]
    assert res["transitions"]["p->q"] == [["1/1", "0/1"], ["0/1", "-1/1"]]


def test_chart_functor_on_three_term_composition(atlas):
    N = 3
    ca, cb, cc = (atlas.charts[x] for x in "abc")
    f = atlas.transition("a", "b")
    g = atlas.transition("b", "c")
    h = transition(cc, ca, scaling_gauge(cc.ambient, Fraction(1, 6)))
    gf = HomotopyMorphism(ca.minimal, cc.minimal, compose_morphisms(g, f, N).comps, LINF)
    hgf = HomotopyMorphism(ca.minimal, ca.minimal, compose_morphisms(h, gf, N).comps, LINF)
    Sf, Sg, Sh = (propagate_morphism(x, N) for x in (f, g, h))
    assert propagate_morphism(gf, N) == compose_jets(Sg, Sf)
    assert propagate_morphism(hgf, N) == compose_jets(Sh, compose_jets(Sg, Sf))
    assert propagate_morphism(hgf, N) == compose_jets(compose_jets(Sh, Sg), Sf)
    # the charts carry nonlinear transitions, so the check is not vacuous
    assert any(not f.comp(k).is_zero() for k in (2, 3)) or any(not g.comp(k).is_zero() for k in (2, 3))


def test_three_chart_atlas_passes(atlas):
    rep = verify_cocycle(atlas)
    assert rep["ok"] and rep["simplicial_identities"]
    assert len(rep["triples"]) == 10
    for t in rep["triples"]:
        assert all(t["faces"].values()) and t["is_mc"] and t["third_face_endpoints"]
        assert t["ledger_h"] and t["ledger_d"]


def test_inconsistent_atlas_has_witness():
    rep = verify_cocycle(three_chart_atlas(3, consistent=False))
    assert not rep["ok"]
    bad = rep["failures"]
    assert bad and all("a" in f["triple"] and "c" in f["triple"] for f in bad)
    assert bad[0]["arity"] == 1
    assert bad[0]["witness"]


def test_glue_h0_and_face_independence(atlas):
    res = glue_h0(atlas)
    assert res["ok"]
    assert all(t["agree"] for t in res["triples"])
    assert all(f["agree"] for f in res["face_independence"])
    assert res["transitions"]["a->c"] == [["1/1", "0/1"], ["0/1", "6/1"]]
    assert all(len(p["basis"]) == 2 for p in res["charts"].values())


def test_h0_model_of_fat_point():
    model = H0Model(chart_corpus()["fat_point"], 3)
    assert model.presentation() == {"relations": ["t1^2"], "basis": ["1", "t1"]}
    assert model.in_ideal({(2,): Fraction(5)})
    assert model.reduce({(0,): Fraction(2), (1,): Fraction(3), (2,): Fraction(1)}) == [2, 3]


def test_transition_homotopy_round_trip(atlas):
    ca, cb = atlas.charts["a"], atlas.charts["b"]
    amb = ca.ambient
    res = transition_homotopy(ca, cb, scaling_gauge(amb, 2), scaling_gauge(amb, Fraction(1, 2)))
    conv, alpha = res["conv"], res["simplex"]
    assert conv.is_mc(alpha)
    model = H0Model(ca.minimal, 3)
    assert face_independence(conv, alpha, model, model)["agree"]


def test_connect_rejects_different_linear_parts(atlas):
    ca = atlas.charts["a"]
    conv = ConvolutionAlgebra(ca.minimal, ca.minimal, 3)
    f = transition(ca, ca, scaling_gauge(ca.ambient, 2))
    with pytest.raises(GaugeObstruction) as exc:
        connect(conv, identity_morphism(ca.minimal), f)
    assert exc.value.arity == 1


def test_move_base_point_on_abelian_fiber():
    g = chart_corpus()["abelian"]
    sp = g.space
    f = HomotopyMorphism(g, g, {1: MultiMap((sp,), sp, 0, {(0,): {0: Fraction(1)}, (1,): {1: Fraction(1)}}),
                                2: MultiMap((sp, sp), sp, 0, {(0, 0): {0: Fraction(1)}})}, LINF)
    res = move_base_point(f, {0: Fraction(1, 10)})
    assert res["conv"].is_mc(res["simplex"])
    # twisting shifts the linear part by f_2(b, -)
    assert res["moved"].comp(1).entries[(0,)] == {0: Fraction(11, 10)}


def test_move_base_point_rejects_non_mc_shift():
    g = chart_corpus()["toy"]
    f = identity_morphism(g)
    with pytest.raises(AtlasError):
        move_base_point(f, {0: Fraction(1, 100)})


def test_atlas_json_shape(atlas):
    data = atlas_to_json(atlas)
    assert data["N"] == 3
    assert sorted(data["charts"]) == ["a", "b", "c"]
    assert data["gauges"]["a,c"][1][1] == "6/1"
    assert len(data["levels"]["2"]) == 10
