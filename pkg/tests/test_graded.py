from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfty import dga
from linfty.graded import (GradedError, GradedSpace, MultiMap, compose, format_rational, identity,
                           koszul_sign, operator_norm, parse_rational, permute_inputs, shuffles,
                           zero_map)


def bubble_sign(perm, degs):
    """Koszul sign by sorting with adjacent transpositions."""
    cur = list(perm)
    sign = 1
    changed = True
    while changed:
        changed = False
        for a in range(len(cur) - 1):
            if cur[a] > cur[a + 1]:
                if degs[cur[a]] % 2 and degs[cur[a + 1]] % 2:
                    sign = -sign
                cur[a], cur[a + 1] = cur[a + 1], cur[a]
                changed = True
    return sign


def test_koszul_identity_is_plus_one():
    assert koszul_sign([0, 1, 2, 3], [1, 3, 2, 5]) == 1


def test_koszul_odd_swap():
    assert koszul_sign([1, 0], [1, 1]) == -1


def test_koszul_three_cycle_against_transpositions():
    perm = [2, 0, 1]
    degs = [1, 1, 2]
    expected = bubble_sign(perm, degs)
    assert expected == 1  # frozen: only the odd pair (0, 1) keeps its order
    assert koszul_sign(perm, degs) == expected


@given(st.permutations(range(5)), st.lists(st.integers(-3, 3), min_size=5, max_size=5))
def test_koszul_matches_bubble_sort(perm, degs):
    assert koszul_sign(perm, degs) == bubble_sign(perm, degs)


@given(st.permutations(range(4)), st.permutations(range(4)), st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_koszul_is_multiplicative(p, q, degs):
    # applying q after p: composite position j holds original p[q[j]]
    comp = [p[j] for j in q]
    moved = [degs[i] for i in p]
    assert koszul_sign(comp, degs) == koszul_sign(p, degs) * koszul_sign(q, moved)


def brute_shuffles(sizes):
    n = sum(sizes)
    bounds = []
    start = 0
    for s in sizes:
        bounds.append(range(start, start + s))
        start += s
    out = []
    for perm in permutations(range(n)):
        if all(list(perm[b.start:b.stop]) == sorted(perm[b.start:b.stop]) for b in bounds):
            out.append(perm)
    return sorted(out)


@pytest.mark.parametrize("sizes,count", [((1, 1), 2), ((2, 1), 3), ((1, 1, 1), 6)])
def test_shuffle_counts(sizes, count):
    got = shuffles(sizes)
    assert len(got) == count
    assert got == brute_shuffles(sizes)


def test_shuffles_reject_empty_block():
    with pytest.raises(GradedError):
        shuffles([2, 0])


def _three_dim_dga():
    # cochains on an interval: two vertices and one edge
    alg = dga.base_algebras()["interval"]
    assert alg.space.dim == 3
    return alg


def test_compose_identity():
    sp = GradedSpace(("x", "y"), (1, 2))
    f = MultiMap((sp, sp), sp, 1, {(0, 0): {1: Fraction(3)}})
    assert compose(identity(sp), f, 1) == f


def test_associativity_in_shifted_form():
    # m2 of an associative algebra: the two compositions cancel
    alg = dga.massey()
    m2 = alg.m2
    assert (compose(m2, m2, 1) + compose(m2, m2, 2)).is_zero()


def test_leibniz_against_dense_oracle():
    alg = _three_dim_dga()
    m1, m2 = alg.m1, alg.m2
    total = compose(m1, m2, 1) + compose(m2, m1, 1) + compose(m2, m1, 2)
    assert total.is_zero()
    # dense oracle in unshifted conventions: d(xy) = d(x)y + (-1)^|x| x d(y)
    d, mul = dga.to_unshifted(alg)
    sp = alg.space
    n = sp.dim

    def apply_d(v):
        out = {}
        for i, c in v.items():
            for o, e in d.get(i, {}).items():
                out[o] = out.get(o, 0) + c * e
        return {k: v for k, v in out.items() if v}

    def apply_mul(u, v):
        out = {}
        for i, a in u.items():
            for j, b in v.items():
                for o, e in mul.get((i, j), {}).items():
                    out[o] = out.get(o, 0) + a * b * e
        return {k: v for k, v in out.items() if v}

    for i in range(n):
        for j in range(n):
            lhs = apply_d(apply_mul({i: 1}, {j: 1}))
            r1 = apply_mul(apply_d({i: 1}), {j: 1})
            r2 = apply_mul({i: 1}, apply_d({j: 1}))
            sign = (-1) ** sp.degrees[i]
            rhs = {k: r1.get(k, 0) + sign * r2.get(k, 0) for k in set(r1) | set(r2)}
            assert lhs == {k: v for k, v in rhs.items() if v}


def test_operator_norm_examples():
    sp = GradedSpace(("x", "y"), (1, 2))
    assert operator_norm(zero_map((sp,), sp, 0)) == 0
    assert operator_norm(identity(sp)) == 1
    m2 = MultiMap((sp, sp), sp, 1, {(0, 0): {1: Fraction(3)}})
    assert operator_norm(m2) == 3


def test_permute_inputs_twice_is_identity():
    sp = GradedSpace(("x", "y", "z"), (1, 2, 3))
    f = MultiMap((sp, sp), sp, 1, {(0, 1): {2: Fraction(1)}, (1, 0): {2: Fraction(-2)}})
    g = permute_inputs(permute_inputs(f, [1, 0]), [1, 0])
    assert g == f


@given(st.fractions(max_denominator=50))
def test_rational_round_trip(x):
    text = format_rational(x)
    assert "/" in text
    assert parse_rational(text) == x


def test_parse_rational_rejects_float():
    with pytest.raises(GradedError):
        parse_rational("0.5")


@settings(max_examples=30)
@given(st.lists(st.tuples(st.sampled_from("abcdef"), st.integers(-2, 3)), min_size=0, max_size=5,
                unique_by=lambda p: p[0]))
def test_space_json_round_trip(pairs):
    sp = GradedSpace.from_pairs(pairs)
    assert GradedSpace.from_json(sp.to_json()) == sp
