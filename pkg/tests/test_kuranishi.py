from fractions import Fraction

import pytest

from linfty.graded import GradedSpace, MultiMap
from linfty.homotopy import AINF, HomotopyAlgebra
from linfty.kuranishi import (CyclicPairing, LocalModel, PreconditionError, check_dim2, check_dim4,
                              cs_potential, curved_three_term_complex, finite_difference_check,
                              non_regularity_witness, poly_to_json, unit_defects)
from linfty.models import (dim2_corpus, dim3_corpus, dim4_corpus, ext2_line_dim4, isotropic_dim4,
                           nonunital_control, surface, toy_dim3, two_variable_dim3)


def test_pairing_rejects_asymmetric_form():
    sp = GradedSpace(("x", "y"), (0, 2))
    with pytest.raises(PreconditionError):
        CyclicPairing(sp, {(0, 1): 1, (1, 0): 2})


def test_pairing_rejects_degenerate_form():
    sp = GradedSpace(("x", "y"), (0, 2))
    with pytest.raises(PreconditionError):
        CyclicPairing(sp, {(0, 0): 1})


def test_surface_unit_is_strict():
    alg, pairing = surface(2)
    assert unit_defects(alg, pairing.unit) == []
    assert pairing.is_cyclic(alg)


@pytest.mark.parametrize("model", dim2_corpus(), ids=lambda m: m.name)
def test_dim2_certificate_on_corpus(model):
    cert = check_dim2(model)
    assert cert["passed"]
    assert cert["kappa_dot_unit"] == 0


def test_dim2_certificate_fails_without_unit():
    model = nonunital_control()
    cert = check_dim2(model)
    assert not cert["passed"]
    b1 = model.gens[0]
    # hand value: <m_3(b x1, b x1, b x1), e> = b1^3
    assert cert["kappa_dot_unit"] == b1 ** 3
    assert not cert["hypotheses"]["unit"]


def test_dim2_rejects_wrong_degrees():
    with pytest.raises(PreconditionError):
        check_dim2(toy_dim3())


def test_toy_potential_is_b_cubed_over_six():
    model = toy_dim3()
    b = model.gens[0]
    res = cs_potential(model)
    assert res["psi"] == b ** 3 / 6
    assert model.kappa() == {1: b ** 2 / 2}
    assert res["holds"]


def test_two_variable_potential_has_zero_defect():
    model = two_variable_dim3()
    res = cs_potential(model)
    assert res["holds"]
    assert res["psi"] != 0
    assert finite_difference_check(model) < 1e-6


@pytest.mark.parametrize("model", dim3_corpus(), ids=lambda m: m.name)
def test_dim3_gradient_identity_on_corpus(model):
    res = cs_potential(model)
    assert all(d == 0 for d in res["defect"])
    assert finite_difference_check(model, points=5) < 1e-6


def test_dim3_rejects_mismatched_pairing():
    with pytest.raises(PreconditionError):
        cs_potential(isotropic_dim4())


@pytest.mark.parametrize("hyperbolic", [False, True])
def test_isotropic_dim4_model(hyperbolic):
    model = isotropic_dim4(hyperbolic)
    b1, b2 = model.gens
    cert = check_dim4(model)
    assert cert["passed"]
    assert cert["kappa"] != {}
    if not hyperbolic:
        assert cert["kappa"] == {2: b1 * b2, 3: -b1 * b2}


def test_isotropic_model_is_not_regular():
    model = isotropic_dim4()
    assert non_regularity_witness(model) is not None
    cx = curved_three_term_complex(model)
    assert cx["dual_kappa_zero"]
    assert cx["composite_matches_witness"]


@pytest.mark.parametrize("model", dim4_corpus(), ids=lambda m: m.name)
def test_dim4_corpus_identities(model):
    cert = check_dim4(model)
    assert cert["isotropic"] and cert["dkappa_isotropic"]


def test_ext2_line_forces_vanishing_kappa():
    model = ext2_line_dim4()
    cert = check_dim4(model)
    assert cert["ext2_dim_one"]
    assert cert["kappa_vanishes"]
    assert cert["passed"]
    assert non_regularity_witness(model) is None


def test_dim4_violation_is_detected():
    # kappa = b1^2 f on a one-line degree-two part: <kappa, kappa> = b1^4 survives at N = 4
    sp = GradedSpace(("x1", "x2", "f"), (1, 1, 2))
    m2 = MultiMap((sp, sp), sp, 1, {(0, 0): {2: Fraction(1)}})
    alg = HomotopyAlgebra(sp, {2: m2}, AINF)
    model = LocalModel(alg, CyclicPairing(sp, {(2, 2): 1, (0, 1): 1, (1, 0): -1}), 4, "bad")
    cert = check_dim4(model)
    assert not cert["isotropic"]
    assert not cert["passed"]


def test_poly_json_order():
    model = two_variable_dim3()
    b1, b2 = model.gens
    p = b1 ** 2 * b2 / 6 + b1 - 3 * b2 ** 3
    out = poly_to_json(p, model.variables)
    assert out == {"b1": "1/1", "b1^2 b2": "1/6", "b2^3": "-3/1"}
    assert list(out) == ["b1", "b1^2 b2", "b2^3"]
