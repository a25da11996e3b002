import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from linfty import dga
from linfty.graded import GradedSpace, compose, identity, to_matrix
from linfty.hodge import HeatFamily, heat_operators, laplacian, retraction_from_inner_product


def complex_of(names, degrees, d):
    return dga.named(GradedSpace(tuple(names), tuple(degrees)), d, {})


def mat(f):
    return sympy.Matrix(to_matrix(f))


def test_zero_differential_has_zero_laplacian():
    alg = complex_of(["x", "y"], [0, 1], {})
    assert laplacian(alg).is_zero()


def test_two_term_acyclic_laplacian_is_identity():
    alg = complex_of(["a", "b"], [0, 1], {"a": {"b": 1}})
    assert mat(laplacian(alg)) == sympy.eye(2)


def test_three_term_laplacian_matches_dense_oracle():
    # a -> b1, b2 -> c with d a = b1 + 2 b2, d b1 = 2 c, d b2 = -c
    alg = complex_of(["a", "b1", "b2", "c"], [0, 1, 1, 2],
                     {"a": {"b1": 1, "b2": 2}, "b1": {"c": 2}, "b2": {"c": -1}})
    D = mat(alg.m1)
    assert D * D == sympy.zeros(4)
    assert mat(laplacian(alg)) == D * D.T + D.T * D
    gram = [[2, 0, 0, 0], [0, 1, Fraction(1, 2), 0], [0, Fraction(1, 2), 1, 0], [0, 0, 0, 3]]
    G = sympy.Matrix(gram)
    Dstar = G.inv() * D.T * G
    assert mat(laplacian(alg, gram)) == D * Dstar + Dstar * D


def test_zero_differential_retraction_is_trivial():
    alg = complex_of(["x", "y"], [0, 1], {})
    r = retraction_from_inner_product(alg)
    assert r.H.dim == 2
    assert mat(r.i) == sympy.eye(2) and mat(r.p) == sympy.eye(2)
    assert r.h.is_zero()


def test_acyclic_retraction_homotopy_identity():
    alg = complex_of(["a", "b"], [0, 1], {"a": {"b": 3}})
    r = retraction_from_inner_product(alg)
    assert r.H.dim == 0
    D, h = mat(alg.m1), mat(r.h)
    # i p = 0, so id = -(m1 h + h m1)
    assert D * h + h * D == -sympy.eye(2)
    assert h * h == sympy.zeros(2)
    assert abs(h[0, 1]) == Fraction(1, 3)


def test_projection_rank_against_null_space_oracle():
    alg = dga.base_algebras()["circle"]
    r = retraction_from_inner_product(alg)
    D = mat(alg.m1)
    sp = alg.space
    deg1 = sp.indices_of_degree(1)
    deg0 = sp.indices_of_degree(0)
    d0 = D.extract(deg1, deg0)
    assert not sp.indices_of_degree(2)  # every degree-one cochain is closed
    h1 = len(deg1) - d0.rank()
    assert h1 == 1
    P = mat(r.p)
    assert P.extract(list(range(P.rows)), deg1).rank() == 1
    assert P * D == sympy.zeros(P.rows, D.cols)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_retraction_identities(seed):
    alg = dga.random_dg_algebra(seed, 8)
    r = retraction_from_inner_product(alg)
    assert r.is_valid()


def test_heat_endpoints():
    alg = dga.base_algebras()["interval"]
    r = retraction_from_inner_product(alg)
    K0, h0 = heat_operators(alg, t=0)
    assert K0 == identity(alg.space) and h0.is_zero()
    Kinf, hinf = heat_operators(alg, t="inf", retraction=r)
    assert Kinf == compose(r.i, r.p, 1)
    assert hinf == r.h


def test_heat_kernel_eigenvalue_one():
    alg = complex_of(["a", "b"], [0, 1], {"a": {"b": 1}})
    r = retraction_from_inner_product(alg)
    fam = HeatFamily(alg, r)
    K = fam.K(1.0)
    assert np.allclose(K, math.exp(-1) * np.eye(2), atol=1e-12)


def test_heat_family_derivative_of_h():
    alg = dga.base_algebras()["circle"]
    r = retraction_from_inner_product(alg)
    fam = HeatFamily(alg, r)
    t, eps = 0.7, 1e-6
    fd = (fam.h(t + eps) - fam.h(t - eps)) / (2 * eps)
    assert np.max(np.abs(fd - fam.blue(t))) < 1e-6


def test_heat_rejects_negative_time():
    alg = complex_of(["x"], [0], {})
    with pytest.raises(ValueError):
        heat_operators(alg, t=-1.0)
