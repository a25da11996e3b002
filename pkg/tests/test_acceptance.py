"""The ten acceptance criteria at their stated tolerances.

Each test is one criterion; ``conftest.py`` prints a PASS/FAIL line for each
at the end of the run.
"""

import io
import json
import math
import random
from contextlib import redirect_stdout
from fractions import Fraction
from functools import lru_cache

import pytest

from linfty import cli, dga
from linfty.atlas import (compose_jets, glue_h0, propagate_morphism,
                          scaling_gauge, three_chart_atlas, transition, verify_cocycle)
from linfty.ce import (bicomplex_consistency, build_jet_chart, ce_cohomology, chart_corpus)
from linfty.graded import MultiMap, identity
from linfty.hodge import HeatFamily, retraction_from_inner_product
from linfty.homotopy import LINF, HomotopyMorphism, compose_morphisms, identity_morphism
from linfty.kuranishi import check_dim2, check_dim4, cs_potential, finite_difference_check
from linfty.models import (dim2_corpus, dim3_corpus, dim4_corpus, ext2_line_dim4, isotropic_dim4,
                           nonunital_control)
from linfty.nerve import (ConvolutionAlgebra, _extend_constant, _vertex_value, dupont_h, epsilon,
                          exact_part, form_d, form_ring, horn_fill, mc_decompose, mc_reconstruct,
                          random_cochain, sample_horn, tree_formula)
from linfty.transfer import (count_p_trees, decorated_trees, enumerate_trees, homotopy_R,
                             homotopy_residual, transfer, verify_norm_ledger)


@lru_cache(maxsize=None)
def seeded_transfers():
    """The 25 seeded random dg algebras with retraction and transfer to arity 5."""
    out = []
    for alg in dga.corpus(25, seed=1):
        r = retraction_from_inner_product(alg)
        out.append((alg, r, transfer(alg, r, 5)))
    return out


def test_criterion_1_transfer_soundness():
    data = seeded_transfers()
    assert len(data) == 25
    for alg, _, tr in data:
        assert alg.space.dim <= 8 and set(alg.space.degrees) <= {0, 1, 2, 3}
        assert tr.minimal.relations_hold(5)
        assert tr.I.is_morphism(4) and tr.P.is_morphism(4)
        pi = compose_morphisms(tr.P, tr.I, 4)
        ident = identity_morphism(tr.minimal)
        assert all(pi.comp(k) == ident.comp(k) for k in range(1, 5))


def test_criterion_2_tree_combinatorics():
    catalan = [math.comb(2 * (k - 1), k - 1) // k for k in range(1, 9)]
    assert catalan == [1, 1, 2, 5, 14, 42, 132, 429]
    assert [len(enumerate_trees(k)) for k in range(1, 9)] == catalan
    assert len([t for t, c in decorated_trees("P", 2) if c]) == 2
    assert all(count_p_trees(k) <= 16 ** k for k in range(1, 6))


def test_criterion_3_norm_ledger():
    data = seeded_transfers()
    for alg in dga.base_algebras().values():
        r = retraction_from_inner_product(alg)
        data = data + [(alg, r, transfer(alg, r, 5))]
    for alg, r, tr in data:
        led = verify_norm_ledger({k: tr.minimal.op(k) for k in range(2, 6)}, alg.m2, r.h)
        bound = led["bound"]
        assert bound == 4 * led["D"] ** 2 and isinstance(bound, Fraction)
        # C <= bound, stated exactly: ||m_k|| <= bound^k for every arity
        assert all(Fraction(nk) <= bound ** k for k, nk in led["per_k"].items())
        assert led["holds"]


def test_criterion_4_homotopy_family():
    algs = [a for a in dga.corpus(25, seed=1) if a.space.dim <= 6][:5]
    assert len(algs) == 5
    for alg in algs:
        r = retraction_from_inner_product(alg)
        heat = HeatFamily(alg, r)
        tr = transfer(alg, r, 3)
        ip = compose_morphisms(tr.I, tr.P, 3)
        for n in (1, 2, 3):
            for t in (0.1, 1.0, 10.0):
                assert homotopy_residual(alg, r, heat, n, t).max_abs() < 1e-6
            assert homotopy_residual(alg, r, heat, n, "inf").is_zero()
            assert (homotopy_R(alg, r, heat, n, "inf") - ip.comp(n)).max_abs() < 1e-8
        assert homotopy_R(alg, r, heat, 1, 0.0) == identity(alg.space)
        for n in (2, 3):
            assert homotopy_R(alg, r, heat, n, 0.0).is_zero()


def test_criterion_5_local_models():
    for model in dim2_corpus():
        assert check_dim2(model)["passed"]
    assert not check_dim2(nonunital_control())["passed"]
    for model in dim3_corpus():
        res = cs_potential(model)
        assert res["holds"]
        assert finite_difference_check(model) < 1e-6
    for model in dim4_corpus() + [isotropic_dim4(), isotropic_dim4(True), ext2_line_dim4()]:
        cert = check_dim4(model)
        assert cert["isotropic"] and cert["dkappa_isotropic"]
    line = check_dim4(ext2_line_dim4())
    assert line["ext2_dim_one"] and line["kappa_vanishes"]


def test_criterion_6_ce_charts():
    corpus = chart_corpus()
    for g in corpus.values():
        for N in range(1, 6):
            defects = build_jet_chart(g, N).identity_defects()
            assert not defects["QQ"] and not defects["DD"] and not defects["DQ+QD"]
    fat = ce_cohomology(build_jet_chart(corpus["fat_point"], 4), (0, 0))
    assert fat["total"][0] == 2
    reg = ce_cohomology(build_jet_chart(corpus["regular_sequence"], 3), (-2, 0))
    assert reg["total"] == {-2: 0, -1: 0, 0: 1}
    assert reg["H0"]["basis"] == ["1"]
    for name in ("fat_point_2d", "node", "regular_sequence"):
        assert bicomplex_consistency(build_jet_chart(corpus[name], 4))["agree"]


def _scaling_mc(conv):
    sp = conv.A.space
    return conv.constant({1: MultiMap((sp,), sp, 0, {(0,): {0: Fraction(2)}, (1,): {1: Fraction(4)}})})


def test_criterion_7_dupont_and_nerve():
    for n in range(0, 4):
        R = form_ring(n)
        mons = [m for m in R.monomials(max_weight=4 + n) if sum(m[:n]) <= 4]
        for i in range(n + 1):
            for m in mons:
                f = {m: Fraction(1)}
                total = R.add(epsilon(n, i, f), form_d(n, dupont_h(n, i, f)), dupont_h(n, i, form_d(n, f)))
                assert R.sub(total, f) == {}
    g = chart_corpus()["toy"]
    for N in range(1, 5):
        conv = ConvolutionAlgebra(g, g, N)
        mu = _scaling_mc(conv)
        for n in (1, 2):
            nu = exact_part(conv, random_cochain(conv, -1, random.Random(10 * N + n)), n, 0)
            alpha = mc_reconstruct(conv, mu, nu, n, 0)
            mu2, nu2 = mc_decompose(conv, alpha, 0)
            assert _vertex_value(conv, mu2, n, 0) == mu and nu2 == nu
            if N >= 2:
                a0 = conv.add(_extend_constant(conv, mu, n), nu)
                assert tree_formula(conv, a0, 0) == alpha


def test_criterion_8_kan_filling():
    corpus = chart_corpus()
    pairs = [(corpus["toy"], corpus["toy"]), (corpus["abelian"], corpus["toy"]),
             (corpus["fat_point"], corpus["fat_point"])]
    for A, B in pairs:
        conv = ConvolutionAlgebra(A, B, 3)
        mu = _scaling_mc(conv) if A is B and conv.is_mc(_scaling_mc(conv)) else conv.zero(0)
        for j in range(3):
            faces = sample_horn(conv, mu, 2, j, random.Random(j))
            fill = horn_fill(conv, faces, 2, j)
            assert fill.is_mc
            assert all(fill.face_checks.values())
            assert all(conv.face(fill.filler, r) == x for r, x in faces.items())
            assert fill.ledger["h_bound"] and fill.ledger["d_bound"]


def test_criterion_9_atlas():
    atlas = three_chart_atlas(3)
    rep = verify_cocycle(atlas)
    assert rep["ok"]
    assert all(all(t["faces"].values()) for t in rep["triples"])
    bad = verify_cocycle(three_chart_atlas(3, consistent=False))
    assert not bad["ok"] and bad["failures"][0]["witness"]
    glue = glue_h0(atlas)
    assert all(f["agree"] for f in glue["face_independence"]) and glue["ok"]
    N = 3
    ca, cb, cc = (atlas.charts[x] for x in "abc")
    f, g = atlas.transition("a", "b"), atlas.transition("b", "c")
    h = transition(cc, ca, scaling_gauge(cc.ambient, Fraction(1, 6)))
    gf = HomotopyMorphism(ca.minimal, cc.minimal, compose_morphisms(g, f, N).comps, LINF)
    hg = HomotopyMorphism(cb.minimal, ca.minimal, compose_morphisms(h, g, N).comps, LINF)
    assert propagate_morphism(gf, N) == compose_jets(propagate_morphism(g, N), propagate_morphism(f, N))
    assert propagate_morphism(hg, N) == compose_jets(propagate_morphism(h, N), propagate_morphism(g, N))


def _cli_report(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.run(argv)
    return code, buf.getvalue()


def test_criterion_10_determinism(tmp_path):
    g = chart_corpus()["toy"]
    conv = ConvolutionAlgebra(g, g, 3)
    from linfty.nerve import horn_to_json
    faces = sample_horn(conv, _scaling_mc(conv), 2, 0, random.Random(2))
    a_path, horn_path = tmp_path / "A.json", tmp_path / "horn.json"
    a_path.write_text(json.dumps(g.to_json()))
    horn_path.write_text(json.dumps(horn_to_json(conv, faces)))
    fat = tmp_path / "fat.json"
    fat.write_text(json.dumps(dga.massey().to_json()))
    commands = [
        ["transfer", "--example", "base:massey_x_ext1", "--k-max", "4", "--t-grid", "0.1,1,10"],
        ["perturb", "--input", str(fat), "--b", '{"' + dga.massey().space.names[0] + '": "1/3"}'],
        ["kuranishi", "--input", str(fat), "--N", "3"],
        ["local-model", "--model", "two_variable", "--scenario", "dim3"],
        ["ce", "--example", "node", "--N", "3", "--window", "-2..0"],
        ["nerve", "fill", "--A", str(a_path), "--B", str(a_path), "--horn", str(horn_path),
         "--n", "2", "--j", "0", "--N", "3"],
        ["atlas", "check", "--example", "three_chart"],
        ["atlas", "check", "--example", "inconsistent"],
        ["selftest", "--seed", "5"],
    ]
    for argv in commands:
        outs = {_cli_report(["--parallel", p] + argv) for p in ("1", "4", "8")}
        assert len(outs) == 1, argv
        code, text = outs.pop()
        assert code in (0, 1) and text


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
