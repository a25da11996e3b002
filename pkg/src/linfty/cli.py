"""Command line entry point ``linfty``.

Every subcommand reads JSON, writes a JSON report (to ``--output`` or stdout)
and exits with 0 when all certificates pass, 1 when one fails and 2 when the
input does not parse.  Reports are serialized with sorted keys and contain no
timings, so they are byte-identical for a fixed input and seed regardless of
``--parallel``.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .graded import GradedError, GradedSpace, format_rational, parse_rational
from .homotopy import LINF, HomotopyAlgebra, StructureError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_SEED = 20240601


class InputError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    raw = os.environ.get("LINFTY_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError("LINFTY_SEED", f"not an integer: {raw!r}") from None


def _load_json(path: str, inline: bool = False):
    """Read JSON from a file; with ``inline`` a value starting with ``{`` is parsed directly."""
    if inline and path.lstrip().startswith("{"):
        try:
            return json.loads(path)
        except json.JSONDecodeError as exc:
            raise InputError(path, f"invalid JSON ({exc.msg})") from None
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(path, exc.strerror or str(exc)) from None
    except json.JSONDecodeError as exc:
        raise InputError(path, f"invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _load_algebra(path: str) -> HomotopyAlgebra:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(path, "algebra must be a JSON object")
    try:
        return HomotopyAlgebra.from_json(data)
    except (GradedError, StructureError, KeyError, TypeError) as exc:
        raise InputError(path, str(exc)) from None


def dumps(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _emit(report: dict, output: str | None):
    text = dumps(report)
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _maps_json(comps: dict) -> list:
    return [m.to_json() for k, m in sorted(comps.items()) if not m.is_zero()]


# ---------------------------------------------------------------------------
# subcommands


def _example_algebra(name: str) -> HomotopyAlgebra:
    from . import dga, models
    table = {"fat_point": models.fat_point, "massey": dga.massey}
    table.update({f"base:{k}": (lambda v=v: v) for k, v in dga.base_algebras().items()})
    if name not in table:
        raise InputError("--example", f"unknown example {name!r}; choose from {sorted(table)}")
    return table[name]()


def _parse_grid(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("inf", "infinity", "oo"):
            out.append("inf")
            continue
        try:
            val = float(tok)
        except ValueError:
            raise InputError("--t-grid", f"not a time: {tok!r}") from None
        if val < 0:
            raise InputError("--t-grid", f"negative time {tok}")
        out.append(val)
    return out


def _float_max(m) -> float:
    return max((abs(float(v)) for row in m.entries.values() for v in row.values()), default=0.0)


def heat_section(alg: HomotopyAlgebra, r, grid: list, arity: int = 3) -> dict:
    """Residuals of the ``R + S dt`` family at each grid time (float64 backend)."""
    from .hodge import HeatFamily
    from .transfer import homotopy_residual
    heat = HeatFamily(alg, r) if alg.space.dim else None
    rows = []
    for t in grid:
        res = {}
        for n in range(1, arity + 1):
            res[str(n)] = 0.0 if heat is None else _float_max(homotopy_residual(alg, r, heat, n, t))
        rows.append({"t": t, "residual": res})
    return {"backend": "float64", "arity": arity, "samples": rows}


EMITTABLE = ("m", "I", "P", "H", "ledger")


def cmd_transfer(args) -> tuple[int, dict]:
    from .hodge import retraction_from_inner_product
    from .homotopy import compose_morphisms, identity_morphism
    from .transfer import transfer, verify_norm_ledger
    alg = _load_algebra(args.input) if args.input else _example_algebra(args.example or "fat_point")
    emit = [e.strip() for e in args.emit.split(",") if e.strip()]
    bad = [e for e in emit if e not in EMITTABLE]
    if bad:
        raise InputError("--emit", f"unknown sections {bad}; choose from {list(EMITTABLE)}")
    gram = None
    if args.inner_product:
        raw = _load_json(args.inner_product)
        try:
            gram = [[parse_rational(x) for x in row] for row in raw]
        except (GradedError, TypeError) as exc:
            raise InputError(args.inner_product, str(exc)) from None
    try:
        r = retraction_from_inner_product(alg, gram)
    except GradedError as exc:
        raise InputError(args.inner_product or "inner product", str(exc)) from None
    k = args.k_max
    tr = transfer(alg, r, k, parallel=args.parallel)
    pi = compose_morphisms(tr.P, tr.I, k)
    ident = identity_morphism(tr.minimal)
    checks = {
        "retraction": r.is_valid(),
        "relations": tr.minimal.relations_hold(k),
        "I_morphism": tr.I.is_morphism(k),
        "P_morphism": tr.P.is_morphism(k),
        "PI_identity": all(pi.comp(n) == ident.comp(n) for n in range(1, k + 1)),
    }
    report = {"k_max": k, "checks": checks}
    if "m" in emit:
        report["m"] = tr.minimal.to_json()
    if "I" in emit:
        report["I"] = _maps_json(tr.I.comps)
    if "P" in emit:
        report["P"] = _maps_json(tr.P.comps)
    if "H" in emit:
        report["H"] = r.H.to_json()
    if "ledger" in emit and alg.space.dim:
        led = verify_norm_ledger({n: tr.minimal.op(n) for n in range(2, k + 1)}, alg.m2, r.h)
        report["ledger"] = {"D": format_rational(led["D"]), "bound": format_rational(led["bound"]),
                            "per_k": {str(n): format_rational(v) for n, v in led["per_k"].items()},
                            "holds": led["holds"]}
        checks["norm_ledger"] = led["holds"]
    if args.t_grid:
        report["heat"] = heat_section(alg, r, _parse_grid(args.t_grid))
        checks["heat_residual"] = all(v < 1e-6 for s in report["heat"]["samples"]
                                      for v in s["residual"].values())
    return (EXIT_OK if all(checks.values()) else EXIT_FAIL), report


def _parse_vector(space: GradedSpace, data, path: str) -> dict:
    if not isinstance(data, dict):
        raise InputError(path, "element must map basis names to rational strings")
    out = {}
    for name, c in data.items():
        try:
            out[space.index(name)] = parse_rational(c)
        except GradedError as exc:
            raise InputError(f"{path}.{name}", str(exc)) from None
    return out


def cmd_perturb(args) -> tuple[int, dict]:
    from .homotopy import kuranishi, perturb_algebra
    alg = _load_algebra(args.input)
    b = _parse_vector(alg.space, _load_json(args.b, inline=True), args.b)
    if any(alg.space.degrees[i] != 1 for i in b):
        raise InputError(args.b, "the twisting element must have degree 1")
    pert = perturb_algebra(alg, b)
    kap = kuranishi(alg, b)
    curv = {alg.space.names[o]: format_rational(c) for o, c in sorted(kap.items()) if c != 0}
    report = {"perturbed": pert.to_json(), "curvature": curv, "maurer_cartan": not curv}
    return EXIT_OK, report


def cmd_kuranishi(args) -> tuple[int, dict]:
    from sympy import QQ
    from sympy.polys.rings import ring
    from .homotopy import kuranishi, truncate_poly
    from .kuranishi import poly_to_json
    alg = _load_algebra(args.input)
    sp = alg.space
    coords = sp.indices_of_degree(1)
    names = tuple(f"b{j + 1}" for j in range(len(coords)))
    R, *gens = ring(",".join(names or ("b",)), QQ)
    trunc = HomotopyAlgebra(sp, alg.ops, alg.flavor, args.N)
    raw = kuranishi(trunc, {i: g for i, g in zip(coords, gens)})
    kap = {}
    for o, c in sorted(raw.items()):
        c = truncate_poly(c if hasattr(c, "ring") else R(c), args.N)
        if c != 0:
            kap[sp.names[o]] = poly_to_json(c, names)
    return EXIT_OK, {
        "N": args.N,
        "coordinates": {v: sp.names[i] for v, i in zip(names, coords)},
        "kappa": kap,
    }


def _local_models() -> dict:
    from . import models
    out = {}
    for n, m in enumerate(models.dim2_corpus()):
        out[m.name or f"dim2_{n}"] = m
    out["nonunital"] = models.nonunital_control()
    for n, m in enumerate(models.dim3_corpus()):
        out[m.name or f"dim3_{n}"] = m
    out["toy_dim3"] = models.toy_dim3()
    out["two_variable_dim3"] = models.two_variable_dim3()
    out["isotropic"] = models.isotropic_dim4()
    out["isotropic_hyperbolic"] = models.isotropic_dim4(True)
    out["ext2_line"] = models.ext2_line_dim4()
    return out


def _load_local_model(path: str):
    """``{"algebra": ..., "pairing": [[a, b, "p/q"], ...], "unit": {...}, "truncation": N}``."""
    from .kuranishi import CyclicPairing, LocalModel, PreconditionError
    data = _load_json(path)
    if not isinstance(data, dict) or "algebra" not in data:
        raise InputError(path, "expected an object with 'algebra'")
    try:
        alg = HomotopyAlgebra.from_json(data["algebra"])
    except (GradedError, StructureError, KeyError, TypeError) as exc:
        raise InputError(f"{path}.algebra", str(exc)) from None
    sp = alg.space
    try:
        gram = {(sp.index(a), sp.index(b)): parse_rational(c) for a, b, c in data.get("pairing", [])}
        unit = _parse_vector(sp, data["unit"], f"{path}.unit") if data.get("unit") else None
        alg = HomotopyAlgebra(sp, alg.ops, alg.flavor, unit=unit)
        return LocalModel(alg, CyclicPairing(sp, gram, unit), int(data.get("truncation", 4)),
                          data.get("name", ""))
    except (GradedError, PreconditionError, ValueError) as exc:
        raise InputError(f"{path}.pairing", str(exc)) from None


def cmd_local_model(args) -> tuple[int, dict]:
    from .kuranishi import (PreconditionError, check_dim2, check_dim4, cs_potential,
                            finite_difference_check, poly_to_json)
    if args.input:
        model = _load_local_model(args.input)
    else:
        table = _local_models()
        if args.model not in table:
            raise InputError("--model", f"unknown model {args.model!r}; choose from {sorted(table)}")
        model = table[args.model]
    emit = {e.strip() for e in args.emit.split(",") if e.strip()}
    v = model.variables
    sp = model.algebra.space

    def pj(p):
        return poly_to_json(p, v)

    try:
        if args.scenario == "dim2":
            res = check_dim2(model)
            certs = {"hypotheses": res["hypotheses"], "kappa_dot_unit": pj(res["kappa_dot_unit"]),
                     "passed": res["passed"]}
            ok = res["passed"]
        elif args.scenario == "dim3":
            res = cs_potential(model)
            gap = finite_difference_check(model)
            certs = {"exact": res["holds"], "finite_difference": {"backend": "float64", "max_gap": gap},
                     "passed": res["holds"] and gap < 1e-6}
            ok = certs["passed"]
        else:
            res = check_dim4(model)
            certs = {"isotropic": res["isotropic"], "dkappa_isotropic": res["dkappa_isotropic"],
                     "passed": res["passed"]}
            if "kappa_vanishes" in res:
                certs["kappa_vanishes"] = res["kappa_vanishes"]
            ok = res["passed"]
    except PreconditionError as exc:
        raise InputError(args.input or "--model", str(exc)) from None
    report = {"scenario": args.scenario, "model": args.model or model.name,
              "variables": list(v)}
    if "certificates" in emit:
        report["certificates"] = certs
    if "kappa" in emit:
        report["kappa"] = {sp.names[o]: pj(c) for o, c in sorted(model.kappa().items())}
    if "psi" in emit and args.scenario == "dim3":
        report["psi"] = pj(res["psi"])
    return (EXIT_OK if ok else EXIT_FAIL), report


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise InputError("--window", f"expected 'lo..hi', got {text!r}") from None


def cmd_ce(args) -> tuple[int, dict]:
    from .ce import build_jet_chart, ce_cohomology, chart_corpus, cohomology_to_json
    if args.input:
        g = _load_algebra(args.input)
        if g.space.dim == 0:
            return EXIT_OK, {"chart": {}, "cohomology": {}}
        if g.flavor != LINF:
            raise InputError(args.input, "the CE chart needs an L-infinity algebra")
    else:
        corpus = chart_corpus()
        name = args.example or "fat_point"
        if name not in corpus:
            raise InputError("--example", f"unknown example {name!r}; choose from {sorted(corpus)}")
        g = corpus[name]
    lo, hi = _parse_window(args.window)
    try:
        chart = build_jet_chart(g, args.N)
    except StructureError as exc:
        raise InputError(args.input or "--example", str(exc)) from None
    res = ce_cohomology(chart, window=(lo, hi))
    report = {"chart": {"N": chart.N, "checks": chart.checks}, "cohomology": cohomology_to_json(res)}
    ok = all(chart.checks.values()) if isinstance(chart.checks, dict) else True
    return (EXIT_OK if ok else EXIT_FAIL), report


def cmd_nerve_fill(args) -> tuple[int, dict]:
    from .nerve import ConvolutionAlgebra, NerveError, cochain_from_json, cochain_to_json, horn_fill
    A, B = _load_algebra(args.A), _load_algebra(args.B)
    for path, alg in ((args.A, A), (args.B, B)):
        if alg.flavor != LINF:
            raise InputError(path, "horn filling needs L-infinity algebras")
    horn = _load_json(args.horn)
    if not isinstance(horn, dict) or not isinstance(horn.get("faces"), dict):
        raise InputError(args.horn, "expected an object with 'faces'")
    N = int(horn.get("N", args.N))
    conv = ConvolutionAlgebra(A, B, N)
    faces = {}
    for key, data in horn["faces"].items():
        try:
            faces[int(key)] = cochain_from_json(conv, data)
        except (NerveError, GradedError, ValueError) as exc:
            raise InputError(f"{args.horn}.faces.{key}", str(exc)) from None
    try:
        res = horn_fill(conv, faces, args.n, args.j)
    except NerveError as exc:
        return EXIT_FAIL, {"ok": False, "error": str(exc)}
    report = {
        "ok": res.ok,
        "filler": cochain_to_json(conv, res.filler),
        "faces": {str(r): v for r, v in sorted(res.face_checks.items())},
        "is_mc": res.is_mc,
        "ledger": {"h_bound": res.ledger["h_bound"], "d_bound": res.ledger["d_bound"],
                   "D": {str(m): format_rational(v) for m, v in res.ledger["filler"]["D"].items()}},
    }
    return (EXIT_OK if res.ok else EXIT_FAIL), report


def _load_atlas(path: str):
    from .atlas import GaugeIso, HypercoverNerve, make_chart
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(path, "atlas must be a JSON object")
    try:
        amb = HomotopyAlgebra.from_json(data["ambient"])
    except KeyError:
        raise InputError(path, "missing 'ambient'") from None
    except (GradedError, StructureError) as exc:
        raise InputError(f"{path}.ambient", str(exc)) from None
    N = int(data.get("N", 3))
    charts, gauges = {}, {}
    for name, spec in sorted(data.get("charts", {}).items()):
        ip = spec.get("inner_product") if isinstance(spec, dict) else None
        try:
            ip = None if ip is None else [[parse_rational(x) for x in row] for row in ip]
            charts[name] = make_chart(name, amb, N, ip)
        except (GradedError, StructureError) as exc:
            raise InputError(f"{path}.charts.{name}", str(exc)) from None
    for key, mat in sorted(data.get("gauges", {}).items()):
        parts = key.split(",")
        if len(parts) != 2 or any(p not in charts for p in parts):
            raise InputError(f"{path}.gauges", f"bad pair {key!r}")
        try:
            m = [[parse_rational(x) for x in row] for row in mat]
        except GradedError as exc:
            raise InputError(f"{path}.gauges.{key}", str(exc)) from None
        gauges[tuple(parts)] = GaugeIso(amb, amb, m)
    return HypercoverNerve(charts, gauges, data.get("tags", {}), N)


def cmd_atlas_check(args) -> tuple[int, dict]:
    from .atlas import AtlasError, glue_h0, report_json, three_chart_atlas, verify_cocycle
    if args.input:
        atlas = _load_atlas(args.input)
    else:
        atlas = three_chart_atlas(args.N, consistent=args.example != "inconsistent")
    try:
        rep = verify_cocycle(atlas, args.max_level, parallel=args.parallel)
    except AtlasError as exc:
        return EXIT_FAIL, {"ok": False, "error": str(exc)}
    report = {"cocycle": report_json(rep)}
    if rep["ok"]:
        report["h0"] = report_json(glue_h0(atlas))
        ok = report["h0"]["ok"]
    else:
        ok = False
    report["ok"] = ok
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(dumps(report))
    return (EXIT_OK if ok else EXIT_FAIL), report


def selftest_report(seed: int, parallel: int = 1) -> dict:
    """A small seeded battery touching every module."""
    from concurrent.futures import ThreadPoolExecutor
    from . import dga
    from .atlas import three_chart_atlas, verify_cocycle
    from .ce import build_jet_chart, ce_cohomology, chart_corpus
    from .hodge import retraction_from_inner_product
    from .nerve import ConvolutionAlgebra, dupont_h, epsilon, form_d, form_ring, relation_defect, random_cochain
    from .transfer import transfer

    rng = random.Random(seed)
    seeds = [rng.randrange(10 ** 6) for _ in range(4)]

    def transfer_case(s):
        alg = dga.random_dg_algebra(s, 6)
        tr = transfer(alg, retraction_from_inner_product(alg), 4)
        return {"seed": s, "dim": alg.space.dim, "relations": tr.minimal.relations_hold(4),
                "I": tr.I.is_morphism(3), "P": tr.P.is_morphism(3)}

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as ex:
            cases = list(ex.map(transfer_case, seeds))
    else:
        cases = [transfer_case(s) for s in seeds]
    fat = build_jet_chart(chart_corpus()["fat_point"], 3)
    h0 = ce_cohomology(fat, window=(0, 0))["total"][0]
    R = form_ring(2)
    dup = all(not R.sub(R.add(epsilon(2, 0, {m: 1}), form_d(2, dupont_h(2, 0, {m: 1})),
                              dupont_h(2, 0, form_d(2, {m: 1}))), {m: 1})
              for m in R.monomials(max_weight=4))
    g = chart_corpus()["toy"]
    conv = ConvolutionAlgebra(g, g, 3)
    crng = random.Random(seeds[0])
    rel = relation_defect(conv, [random_cochain(conv, crng.choice([-1, 0, 1]), crng) for _ in range(3)])
    atlas = verify_cocycle(three_chart_atlas(3), parallel=parallel)["ok"]
    checks = {"transfer": all(c["relations"] and c["I"] and c["P"] for c in cases),
              "ce_fat_point_h0": h0 == 2, "dupont": dup, "convolution_relation": rel,
              "atlas": atlas}
    return {"seed": seed, "transfer_cases": cases, "checks": checks, "ok": all(checks.values())}


def cmd_selftest(args) -> tuple[int, dict]:
    seed = args.seed if args.seed is not None else seed_from_env()
    rep = selftest_report(seed, args.parallel)
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linfty", description="Exact homotopy-algebra toolkit.")
    p.add_argument("--parallel", type=int, default=1, help="worker count")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("transfer", help="homotopy transfer to cohomology")
    s.add_argument("--input")
    s.add_argument("--example")
    s.add_argument("--inner-product")
    s.add_argument("--k-max", type=int, default=4)
    s.add_argument("--emit", default="m,I,P,H,ledger")
    s.add_argument("--t-grid")
    s.set_defaults(func=cmd_transfer)

    s = sub.add_parser("perturb", help="twist by a degree-one element")
    s.add_argument("--input", required=True)
    s.add_argument("--b", required=True)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("kuranishi", help="symbolic Kuranishi map")
    s.add_argument("--input", required=True)
    s.add_argument("--N", type=int, default=4)
    s.set_defaults(func=cmd_kuranishi)

    s = sub.add_parser("local-model", help="local model certificates")
    s.add_argument("--model")
    s.add_argument("--input")
    s.add_argument("--scenario", choices=("dim2", "dim3", "dim4"), required=True)
    s.add_argument("--emit", default="psi,kappa,certificates")
    s.set_defaults(func=cmd_local_model)

    s = sub.add_parser("ce", help="CE chart cohomology")
    s.add_argument("--input")
    s.add_argument("--example")
    s.add_argument("--N", type=int, default=3)
    s.add_argument("--window", default="-2..0")
    s.set_defaults(func=cmd_ce)

    s = sub.add_parser("nerve", help="Maurer-Cartan nerve operations")
    nsub = s.add_subparsers(dest="nerve_command", required=True)
    f = nsub.add_parser("fill", help="fill a horn")
    f.add_argument("--A", required=True)
    f.add_argument("--B", required=True)
    f.add_argument("--horn", required=True)
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--j", type=int, required=True)
    f.add_argument("--N", type=int, default=3)
    f.set_defaults(func=cmd_nerve_fill)

    s = sub.add_parser("atlas", help="atlas gluing checks")
    asub = s.add_subparsers(dest="atlas_command", required=True)
    c = asub.add_parser("check", help="verify the homotopy cocycle")
    c.add_argument("--input")
    c.add_argument("--example", choices=("three_chart", "inconsistent"), default="three_chart")
    c.add_argument("--max-level", type=int, default=2)
    c.add_argument("--N", type=int, default=3)
    c.add_argument("--report")
    c.set_defaults(func=cmd_atlas_check)

    s = sub.add_parser("selftest", help="seeded battery over all modules")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_selftest)
    return p


def _join_negative_values(argv: list) -> list:
    """Let ``--window -3..0`` and ``--t-grid -1,..`` through argparse."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--window", "--t-grid") and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    if args.parallel < 1:
        parser.error("--parallel must be positive")
    try:
        code, report = args.func(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    _emit(report, args.output)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
