"""Truncated Chevalley-Eilenberg jet charts.

For an L-infinity algebra ``g`` whose degree-one part ``V`` has basis
``e_1..e_m`` the chart lives on the ring

    Q[t_i, y_i, w_a] (x) Lambda[dt_i]

with base coordinates ``t_i``, fiber-dual coordinates ``y_i`` (duals of
``e_i``), shifted duals ``w_a`` of the higher fiber basis (degree
``1 - deg e_a``) and one-forms ``dt_i``.  The CE differential is the odd
derivation with

    Q(z_a) = coefficient of e_a in sum_n 1/n! l_n(X, ..., X),
    X = sum_i (t_i + y_i) e_i + sum_a w_a e_a,

so ``Q`` is the CE differential of the family ``l^t`` perturbed at ``t``.
The connection is ``D = tau + nabla`` with ``tau(y_i) = dt_i`` and
``nabla(t_i) = -dt_i``: its flat sections are functions of ``t + y``.

Every generator has weight one, ``Q`` and ``D`` never lower weight, and the
chart works modulo weight above ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graded import GradedSpace, format_rational
from .homotopy import LINF, HomotopyAlgebra, StructureError, perturb_algebra
from .superpoly import SuperRing, coordinates, kernel_vectors, rank_of


class ChartError(StructureError):
    """A chart identity failed or the truncation is too small."""


def _fiber_parts(g: HomotopyAlgebra):
    sp = g.space
    deg1 = sp.indices_of_degree(1)
    high = [i for i in range(sp.dim) if sp.degrees[i] >= 2]
    low = [i for i in range(sp.dim) if sp.degrees[i] < 1]
    return deg1, high, low


def _l_images(g: HomotopyAlgebra, R: SuperRing, coeff_of: dict, N: int | None) -> dict:
    """``{a: sum_n 1/n! l_n(X^n)_a}`` where basis vector ``b`` carries ``coeff_of[b]``.

    Moving each coefficient ``c_j`` (degree ``-s_j``) to the front past ``l``
    and the earlier basis vectors costs ``(-1)^(|c_j| (1 + s_1 + .. + s_(j-1)))``.
    """
    sp = g.space
    out: dict = {}
    for n, op in sorted(g.ops.items()):
        if n == 0 or op.is_zero():
            continue
        w = Fraction(1, math.factorial(n))
        for key, row in op.entries.items():
            if any(b not in coeff_of for b in key):
                continue
            sign = 1
            acc = 0
            mono = R.one()
            for b in key:
                cdeg = -(sp.degrees[b] - 1)
                if cdeg & 1 and (1 + acc) & 1:
                    sign = -sign
                acc += sp.degrees[b] - 1
                mono = R.mul(mono, coeff_of[b], N)
                if not mono:
                    break
            if not mono:
                continue
            for a, c in row.items():
                out[a] = R.add(out.get(a, {}), R.scale(mono, sign * w * c))
    return {a: f for a, f in out.items() if f}


@dataclass
class JetChart:
    algebra: HomotopyAlgebra
    N: int
    ring: SuperRing
    base: list          # fiber indices of degree 1, in order
    high: list          # fiber indices of degree >= 2
    t: list             # ring indices of t_i
    dt: list
    y: list
    w: dict             # fiber index -> ring index
    Q_gen: dict         # ring index -> Q(generator)
    D_gen: dict         # ring index -> D(generator)
    checks: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.base)

    def Q(self, f: dict) -> dict:
        return self.ring.derivation(f, self.Q_gen, 1, self.N)

    def D(self, f: dict) -> dict:
        return self.ring.derivation(f, self.D_gen, 1, self.N)

    def tau(self, f: dict) -> dict:
        R = self.ring
        return R.derivation(f, {y: R.gen(d) for y, d in zip(self.y, self.dt)}, 1, self.N)

    def nabla(self, f: dict) -> dict:
        R = self.ring
        return R.derivation(f, {t: R.scale(R.gen(d), -1) for t, d in zip(self.t, self.dt)}, 1, self.N)

    def generators(self) -> list:
        return list(self.t) + list(self.dt) + list(self.y) + list(self.w.values())

    def identity_defects(self) -> dict:
        """Nonzero values of ``Q^2``, ``D^2`` and ``[D, Q]`` on generators (derivations)."""
        R = self.ring
        out = {"QQ": {}, "DD": {}, "DQ+QD": {}, "D-tau-nabla": {}}
        for g in self.generators():
            name = R.names[g]
            g_el = R.gen(g)
            qq = self.Q(self.Q(g_el))
            dd = self.D(self.D(g_el))
            dq = R.add(self.D(self.Q(g_el)), self.Q(self.D(g_el)))
            split = R.sub(self.D(g_el), R.add(self.tau(g_el), self.nabla(g_el)))
            for key, val in (("QQ", qq), ("DD", dd), ("DQ+QD", dq), ("D-tau-nabla", split)):
                if val:
                    out[key][name] = R.to_str(val)
        return out

    def describe(self) -> dict:
        R = self.ring
        return {
            "N": self.N,
            "generators": {R.names[i]: R.degrees[i] for i in range(R.n)},
            "Q": {R.names[g]: R.to_str(v) for g, v in sorted(self.Q_gen.items())},
            "D": {R.names[g]: R.to_str(v) for g, v in sorted(self.D_gen.items())},
        }


def build_jet_chart(g: HomotopyAlgebra, N: int, check: bool = True) -> JetChart:
    """The truncated CE chart of ``g`` at jet order ``N``.

    Requires an uncurved L-infinity algebra with a nonzero degree-one part and
    all other basis vectors in degrees ``>= 2``.
    """
    if g.flavor != LINF:
        raise ChartError("jet charts need an L-infinity algebra")
    if N is None or N < 1:
        raise ChartError("jet order must be a positive integer")
    if g.curved:
        raise ChartError("the fiber algebra must be uncurved")
    base, high, low = _fiber_parts(g)
    if not base:
        raise ChartError("the degree-one part of the fiber is zero")
    if low:
        raise ChartError("fiber basis vectors of degree <= 0 are not supported")
    sp = g.space
    names, degs = [], []
    for i in base:
        names.append(f"t{len(names) + 1}")
        degs.append(0)
    m = len(base)
    names += [f"dt{j + 1}" for j in range(m)]
    degs += [1] * m
    names += [f"y{j + 1}" for j in range(m)]
    degs += [0] * m
    for a in high:
        names.append(f"w_{sp.names[a]}")
        degs.append(1 - sp.degrees[a])
    R = SuperRing(tuple(names), tuple(degs))
    t_ix = list(range(m))
    dt_ix = list(range(m, 2 * m))
    y_ix = list(range(2 * m, 3 * m))
    w_ix = {a: 3 * m + j for j, a in enumerate(high)}
    coeff_of = {}
    for j, b in enumerate(base):
        coeff_of[b] = R.add(R.gen(t_ix[j]), R.gen(y_ix[j]))
    for a, r in w_ix.items():
        coeff_of[a] = R.gen(r)
    imgs = _l_images(g, R, coeff_of, N)
    Q_gen = {}
    for j, b in enumerate(base):
        if imgs.get(b):
            Q_gen[y_ix[j]] = imgs[b]
    for a, r in w_ix.items():
        if imgs.get(a):
            Q_gen[r] = imgs[a]
    D_gen = {}
    for j in range(m):
        D_gen[t_ix[j]] = R.scale(R.gen(dt_ix[j]), -1)
        D_gen[y_ix[j]] = R.gen(dt_ix[j])
    chart = JetChart(g, N, R, base, high, t_ix, dt_ix, y_ix, w_ix, Q_gen, D_gen)
    if check:
        defects = chart.identity_defects()
        for key, bad in defects.items():
            if bad:
                gen, val = sorted(bad.items())[0]
                raise ChartError(f"{key} fails on generator {gen}: {val}")
        fam = family_identity_defects(g)
        if fam:
            raise ChartError(f"family identity fails: {fam[0]}")
        chart.checks = {"QQ": True, "DD": True, "DQ+QD": True, "family": True}
    return chart


def family_identity_defects(g: HomotopyAlgebra) -> list:
    """Check ``d/dt_i l^t_k(a..) = l^t_(k+1)(e_i, a..)`` for the symbolic perturbation.

    The perturbation is polynomial in ``t`` because ``g`` has finitely many
    operations, so the identity is tested without truncation.
    """
    from sympy import QQ
    from sympy.polys.rings import ring

    base, _, _ = _fiber_parts(g)
    if not base:
        return []
    P, *ts = ring(",".join(f"t{j + 1}" for j in range(len(base))), QQ)
    lifted = HomotopyAlgebra(g.space, {k: op.map_coeffs(lambda c: P(c)) for k, op in g.ops.items()},
                             g.flavor)
    fam = perturb_algebra(lifted, {b: ts[j] for j, b in enumerate(base)})
    out = []
    for j, b in enumerate(base):
        for k in range(0, g.k_max):
            lhs = fam.op(k).map_coeffs(lambda c: c.diff(ts[j]))
            nxt = fam.op(k + 1)
            ent = {}
            for key, row in nxt.entries.items():
                if key and key[0] == b:
                    ent[key[1:]] = row
            for key in set(lhs.entries) | set(ent):
                r1, r2 = lhs.entries.get(key, {}), ent.get(key, {})
                for o in set(r1) | set(r2):
                    if r1.get(o, 0) != r2.get(o, 0):
                        out.append(f"d/dt{j + 1} l_{k} at {key}->{o}")
    return out


# ---------------------------------------------------------------------------
# Koszul contraction


@dataclass
class KoszulContraction:
    """``(Lambda[dt] (x) Q[y], tau)`` modulo weight above ``N`` with ``(i, pi, h)``."""

    ring: SuperRing
    N: int
    m: int

    def tau(self, f: dict) -> dict:
        R = self.ring
        return R.derivation(f, {self.m + j: R.gen(j) for j in range(self.m)}, 1)

    def _kappa(self, f: dict) -> dict:
        R = self.ring
        return R.derivation(f, {j: R.gen(self.m + j) for j in range(self.m)}, -1)

    def h(self, f: dict) -> dict:
        """``-(1/w) sum y_i d/d(dt_i)`` on weight ``w > 0``, zero on constants."""
        R = self.ring
        out: dict = {}
        for mono, c in f.items():
            wt = R.mono_weight(mono)
            if wt == 0:
                continue
            for mm, v in self._kappa({mono: c}).items():
                out[mm] = out.get(mm, 0) - v / wt
        return {k: v for k, v in out.items() if v}

    def pi(self, f: dict):
        return f.get((0,) * self.ring.n, Fraction(0))

    def i(self, c) -> dict:
        return self.ring.const(c)

    def basis(self) -> list:
        return self.ring.monomials(None, self.N)

    def defects(self) -> dict:
        """Residuals of ``pi i = id``, ``i pi = id + tau h + h tau`` and ``h h = 0`` on the basis."""
        R = self.ring
        out = {"pi_i": [], "homotopy": [], "hh": [], "tau_tau": []}
        if self.pi(self.i(1)) != 1:
            out["pi_i"].append("1")
        for mono in self.basis():
            f = {mono: Fraction(1)}
            lhs = self.i(self.pi(f))
            rhs = R.add(f, self.tau(self.h(f)), self.h(self.tau(f)))
            if R.sub(lhs, rhs):
                out["homotopy"].append(R.mono_str(mono))
            if self.h(self.h(f)):
                out["hh"].append(R.mono_str(mono))
            if self.tau(self.tau(f)):
                out["tau_tau"].append(R.mono_str(mono))
        return out


def koszul_contraction(chart_or_m, N: int | None = None) -> KoszulContraction:
    """Contraction data for the Koszul complex of the chart's base (or of ``m`` variables)."""
    if isinstance(chart_or_m, JetChart):
        m, N = chart_or_m.m, chart_or_m.N if N is None else N
    else:
        m = int(chart_or_m)
    if N is None:
        raise ChartError("jet order required")
    names = tuple(f"dt{j + 1}" for j in range(m)) + tuple(f"y{j + 1}" for j in range(m))
    R = SuperRing(names, (1,) * m + (0,) * m)
    return KoszulContraction(R, N, m)


# ---------------------------------------------------------------------------
# derived zero locus and its cohomology


@dataclass
class DerivedLocusComplex:
    """``Q[t] (x) S(W)`` modulo weight above ``N`` with the restricted CE differential."""

    ring: SuperRing
    N: int
    d_gen: dict
    w_ix: list
    kappa_degree: int

    def d(self, f: dict, N: int | None = None) -> dict:
        return self.ring.derivation(f, self.d_gen, 1, self.N if N is None else N)

    def squares_to_zero(self) -> bool:
        return all(not self.d(self.d(self.ring.gen(g))) for g in self.d_gen)

    def relations(self) -> list:
        """Images of the degree -1 generators: the components of the curvature."""
        R = self.ring
        return [self.d_gen[g] for g in self.w_ix if R.degrees[g] == -1 and g in self.d_gen]

    def with_N(self, N: int) -> "DerivedLocusComplex":
        return DerivedLocusComplex(self.ring, N, self.d_gen, self.w_ix, self.kappa_degree)


def derived_locus(chart: JetChart, N: int | None = None) -> DerivedLocusComplex:
    """Set ``y = 0`` and drop ``dt``: the CE complex of the higher part over the base."""
    N = chart.N if N is None else N
    g = chart.algebra
    names, degs = [], []
    for j in range(chart.m):
        names.append(f"t{j + 1}")
        degs.append(0)
    R = SuperRing(tuple(names + [chart.ring.names[r] for r in chart.w.values()]),
                  tuple(degs + [chart.ring.degrees[r] for r in chart.w.values()]))
    m = chart.m
    w_ix = list(range(m, m + len(chart.w)))
    coeff_of = {b: R.gen(j) for j, b in enumerate(chart.base)}
    for j, a in enumerate(chart.high):
        coeff_of[a] = R.gen(m + j)
    imgs = _l_images(g, R, coeff_of, None)
    d_gen = {}
    kdeg = 0
    for j, a in enumerate(chart.high):
        if imgs.get(a):
            d_gen[m + j] = imgs[a]
            kdeg = max(kdeg, R.max_weight(imgs[a]))
    return DerivedLocusComplex(R, N, d_gen, w_ix, kdeg)


def _filtered_dims(ring: SuperRing, d, degree: int, N: int, P: int, lower_ok=True) -> dict:
    """Graded pieces ``gr^p H^degree`` for ``p <= P`` of a complex truncated at weight ``N``.

    ``F^p H`` is the image of cocycles of weight ``>= p``; each dimension is
    computed by exact rank counting, with the weight filtration preserved by
    ``d``.
    """
    C = ring.monomials(degree, N)
    Cm = ring.monomials(degree - 1, N)
    Cp = ring.monomials(degree + 1, N)
    ix = {mono: r for r, mono in enumerate(C)}
    ixp = {mono: r for r, mono in enumerate(Cp)}
    image_cols = [coordinates(d({mono: Fraction(1)}), ix) for mono in Cm]
    rank_b = rank_of(image_cols, len(C))
    dims = {}
    for p in range(0, P + 2):
        sub = [mono for mono in C if ring.mono_weight(mono) >= p]
        cols = [coordinates(d({mono: Fraction(1)}), ixp) for mono in sub]
        ker = kernel_vectors(cols, len(Cp))
        ker_full = [{ix[sub[j]]: v for j, v in vec.items()} for vec in ker]
        dims[p] = rank_of(image_cols + ker_full, len(C)) - rank_b
    return {p: dims[p] - dims[p + 1] for p in range(0, P + 1)}


def _window_P(complex_: DerivedLocusComplex, P):
    if P is not None:
        return P
    return max(0, complex_.N - max(complex_.kappa_degree, 0))


def ce_cohomology(chart: JetChart, window=(-2, 0), P: int | None = None, stabilize: bool = True) -> dict:
    """Cohomology of the derived zero locus complex per (degree, weight).

    Returns ``{"dims": {c: {p: dim}}, "total": {c: dim}, "P": P, "H0": presentation}``
    for cohomological degrees ``c`` in ``window`` and weights ``p <= P``.
    With ``stabilize`` the computation is repeated at ``N + 1`` and any change
    inside the window raises a :class:`ChartError` asking for a larger ``N``.
    """
    lo, hi = window
    if lo > hi:
        raise ChartError("empty degree window")
    cx = derived_locus(chart)
    P = _window_P(cx, P)
    if P > cx.N:
        raise ChartError(f"weight window {P} exceeds the jet order; increase N")
    dims = _cohomology_table(cx, lo, hi, P)
    if stabilize:
        again = _cohomology_table(cx.with_N(cx.N + 1), lo, hi, P)
        if again != dims:
            raise ChartError(f"cohomology not stable in the window at N={cx.N}; increase N")
    return {
        "dims": dims,
        "total": {c: sum(v.values()) for c, v in dims.items()},
        "P": P,
        "N": cx.N,
        "H0": h0_presentation(cx, P) if lo <= 0 <= hi else None,
    }


def _cohomology_table(cx: DerivedLocusComplex, lo: int, hi: int, P: int) -> dict:
    return {c: _filtered_dims(cx.ring, cx.d, c, cx.N, P) for c in range(lo, hi + 1)}


def _ideal_span(ring: SuperRing, gens: list, N: int, base_ix: list) -> list:
    """Sparse spanning set of ``(gens) + (weight > N)`` inside ``Q[t]`` mod weight ``> N``."""
    mons = ring.monomials(0, N, allowed=base_ix)
    ix = {mono: r for r, mono in enumerate(mons)}
    cols = []
    for gpol in gens:
        for mono in mons:
            prod = ring.mul({mono: Fraction(1)}, gpol, N)
            if prod:
                cols.append(coordinates(prod, ix))
    return mons, ix, cols


def h0_presentation(cx: DerivedLocusComplex, P: int) -> dict:
    """``H^0`` as ``Q[t]`` modulo the curvature ideal: relations and a monomial basis up to weight ``P``."""
    R = cx.ring
    base_ix = [i for i in range(R.n) if i not in cx.w_ix]
    rels = cx.relations()
    mons, ix, cols = _ideal_span(R, rels, cx.N, base_ix)
    basis = []
    cur = list(cols)
    r0 = rank_of(cur, len(mons))
    for mono in mons:
        if R.mono_weight(mono) > P:
            continue
        trial = cur + [{ix[mono]: Fraction(1)}]
        r1 = rank_of(trial, len(mons))
        if r1 > r0:
            basis.append(R.mono_str(mono))
            cur, r0 = trial, r1
    return {"relations": [R.to_str(r) for r in rels], "basis": basis}


def enhancement_check(chart: JetChart, generators: list) -> dict:
    """Compare ``H^0`` with ``Q[t] / (generators)`` modulo weight above ``N``.

    ``generators`` are polynomials in the base coordinates, either as
    SuperRing elements of the derived-locus ring or as strings parsed with
    sympy in the variables ``t1..tm``.
    """
    cx = derived_locus(chart)
    R = cx.ring
    gens = [_parse_poly(R, g) if isinstance(g, str) else g for g in generators]
    base_ix = [i for i in range(R.n) if i not in cx.w_ix]
    mons, ix, given = _ideal_span(R, gens, cx.N, base_ix)
    _, _, actual = _ideal_span(R, cx.relations(), cx.N, base_ix)
    n = len(mons)
    ra, rg = rank_of(actual, n), rank_of(given, n)
    rboth = rank_of(actual + given, n)
    ok = ra == rg == rboth
    witness = None
    if not ok:
        # a generator of one ideal that is not in the other
        for src, other in ((given, actual), (actual, given)):
            r_other = rank_of(other, n)
            for col in src:
                if rank_of(other + [col], n) > r_other:
                    inv = {r: mono for mono, r in ix.items()}
                    witness = R.to_str({inv[r]: v for r, v in col.items()})
                    break
            if witness:
                break
    return {"holds": ok, "N": cx.N, "witness": witness,
            "relations": [R.to_str(r) for r in cx.relations()]}


def _parse_poly(R: SuperRing, text: str) -> dict:
    import sympy
    syms = {R.names[i]: sympy.Symbol(R.names[i]) for i in range(R.n) if R.degrees[i] == 0}
    expr = sympy.sympify(text, locals=syms)
    poly = sympy.Poly(sympy.expand(expr), *syms.values())
    order = [R.index(s) for s in syms]
    out = {}
    for exps, c in poly.terms():
        m = [0] * R.n
        for i, e in zip(order, exps):
            m[i] = e
        out[tuple(m)] = Fraction(int(c.p), int(c.q))
    return out


# ---------------------------------------------------------------------------
# total complex of the (Q, D) bicomplex


def total_h0(chart: JetChart, P: int | None = None) -> dict:
    """Graded pieces of ``H^0`` of ``Omega (x) C*g`` with differential ``Q + D``."""
    R = chart.ring
    cx = derived_locus(chart)
    P = _window_P(cx, P)

    def d(f):
        return R.add(chart.Q(f), chart.D(f))

    return _filtered_dims(R, d, 0, chart.N, P)


def bicomplex_consistency(chart: JetChart, P: int | None = None) -> dict:
    cx = derived_locus(chart)
    P = _window_P(cx, P)
    total = total_h0(chart, P)
    locus = _filtered_dims(cx.ring, cx.d, 0, cx.N, P)
    return {"total": total, "locus": locus, "P": P, "agree": total == locus}


# ---------------------------------------------------------------------------
# example fibers


def fiber(degrees: dict, brackets: dict, name: str = "") -> HomotopyAlgebra:
    """An L-infinity algebra from named basis degrees and symmetric bracket data.

    ``brackets[k]`` maps a tuple of basis names to ``{name: coeff}``; all
    orderings are filled in with the Koszul signs of the shifted degrees.
    """
    from .graded import MultiMap, koszul_sign
    from itertools import permutations

    names = tuple(degrees)
    sp = GradedSpace(names, tuple(degrees[n] for n in names))
    ops = {}
    for k, table in brackets.items():
        ent: dict = {}
        for key, row in table.items():
            idx = tuple(sp.index(x) for x in key)
            sdeg = [sp.degrees[i] - 1 for i in idx]
            seen = set()
            for perm in permutations(range(k)):
                nk = tuple(idx[p] for p in perm)
                if nk in seen:
                    continue
                seen.add(nk)
                s = koszul_sign(list(perm), sdeg)
                t = ent.setdefault(nk, {})
                for o, c in row.items():
                    t[sp.index(o)] = t.get(sp.index(o), 0) + s * Fraction(c)
        ops[k] = MultiMap((sp,) * k, sp, 1, ent, symmetric=True)
    return HomotopyAlgebra(sp, ops, LINF)


def chart_corpus() -> dict:
    """Named fibers used by the tests and the CLI."""
    return {
        "abelian": fiber({"x": 1, "y": 2}, {}),
        "toy": fiber({"x": 1, "y": 2}, {2: {("x", "x"): {"y": 1}}}),
        "fat_point": fiber({"x": 1, "y": 2}, {2: {("x", "x"): {"y": 2}}}),
        "kappa_zero_line": fiber({"x": 1, "y": 2}, {}),
        "regular_sequence": fiber({"x1": 1, "x2": 1, "y1": 2, "y2": 2},
                                  {1: {("x1",): {"y1": 1}, ("x2",): {"y2": 1}}}),
        "fat_point_2d": fiber({"x1": 1, "x2": 1, "y1": 2, "y2": 2},
                              {2: {("x1", "x1"): {"y1": 2}, ("x2", "x2"): {"y2": 2}}}),
        "node": fiber({"x1": 1, "x2": 1, "y": 2}, {2: {("x1", "x2"): {"y": 1}}}),
        "cubic": fiber({"x": 1, "y": 2}, {3: {("x", "x", "x"): {"y": 6}}}),
        "three_term": fiber({"x": 1, "y": 2, "z": 3},
                            {2: {("x", "y"): {"z": 1}}}),
    }


def chart_to_json(chart: JetChart) -> dict:
    out = chart.describe()
    out["checks"] = chart.checks
    return out


def cohomology_to_json(res: dict) -> dict:
    return {
        "N": res["N"],
        "P": res["P"],
        "betti": {str(c): res["total"][c] for c in sorted(res["total"])},
        "by_weight": {str(c): {str(p): v for p, v in sorted(d.items())} for c, d in sorted(res["dims"].items())},
        "H0": res["H0"],
    }


__all__ = [
    "ChartError", "JetChart", "build_jet_chart", "family_identity_defects", "KoszulContraction",
    "koszul_contraction", "DerivedLocusComplex", "derived_locus", "ce_cohomology", "h0_presentation",
    "enhancement_check", "total_h0", "bicomplex_consistency", "fiber", "chart_corpus",
    "chart_to_json", "cohomology_to_json", "format_rational",
]
