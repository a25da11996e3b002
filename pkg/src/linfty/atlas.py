"""Gluing local charts: transitions, homotopies between them and cocycle checks.

A chart is the symmetrized minimal model of a finite dg algebra ``A`` for a
chosen inner product.  Strict dg isomorphisms ``psi : A_i -> A_j`` give
transition morphisms ``f_ij = P_j o psi o I_i``.  Homotopies between
morphisms ``H_i -> H_k`` are Maurer-Cartan elements on ``Delta^1`` in the
convolution algebra ``C(H_i, H_k)``; they are found by an exact triangular
gauge solve, one word length at a time.  Each triple of charts is certified
by filling the horn

    f_ik --(psi_ik vs psi_jk psi_ij)--> P_k psi_jk psi_ij I_i --(I_j P_j ~ id)--> f_jk o f_ij

whose third face is the homotopy ``f_ik ~ f_jk o f_ij``.

On the chart level each morphism ``f`` induces a polynomial map
``F(t) = sum 1/k! f_k(x^k)`` on degree-one coordinates and a bundle map
``F#(t) = f^x_1``.  With components up to arity ``N`` these are known up to
total degree ``N`` and ``N - 1`` respectively, and are truncated there.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement

from sympy import QQ
from sympy.polys.rings import ring

from .ce import JetChart, build_jet_chart, derived_locus
from .graded import GradedSpace, MultiMap, format_rational, linear_map
from .hodge import RetractionData, retraction_from_inner_product
from .homotopy import (AINF, LINF, HomotopyAlgebra, HomotopyMorphism, StructureError,
                       compose_morphisms, identity_morphism, norm_ledger, perturb_morphism,
                       pushforward, symmetrize, symmetrize_map, symmetrize_morphism)
from .nerve import (Cochain, ConvolutionAlgebra, exact_part, horn_fill,
                    mc_reconstruct)
from .superpoly import SuperRing, coordinates, kernel_vectors, rank_of
from .transfer import transfer


class AtlasError(StructureError):
    """A gluing certificate failed."""


class GaugeObstruction(AtlasError):
    """Two morphisms are not connected by a 1-simplex; carries a witness."""

    def __init__(self, message: str, arity: int, witness: dict):
        super().__init__(message)
        self.arity = arity
        self.witness = witness


# ---------------------------------------------------------------------------
# charts and gauge isomorphisms


@dataclass
class Chart:
    name: str
    ambient: HomotopyAlgebra
    retraction: RetractionData
    N: int
    minimal: HomotopyAlgebra   # L-infinity
    I: HomotopyMorphism        # minimal -> symmetrized ambient
    P: HomotopyMorphism        # symmetrized ambient -> minimal
    ledger: dict = field(default_factory=dict)
    inner_product: list | None = None

    @cached_property
    def jet(self) -> JetChart:
        return propagate(self.minimal, self.N)


def make_chart(name: str, ambient: HomotopyAlgebra, N: int = 3, inner_product=None) -> Chart:
    """Transfer to cohomology up to arity ``N`` and symmetrize everything."""
    if ambient.flavor != AINF:
        raise AtlasError("charts are built from dg algebras")
    r = retraction_from_inner_product(ambient, inner_product)
    tr = transfer(ambient, r, N)
    minimal = symmetrize(tr.minimal)
    amb_l = symmetrize(ambient)
    I = symmetrize_morphism(tr.I, minimal, amb_l)
    P = symmetrize_morphism(tr.P, amb_l, minimal)
    led = norm_ledger({k: m for k, m in minimal.ops.items()}, factorial_weight=True)
    return Chart(name, ambient, r, N, minimal, I, P, led, inner_product)


@dataclass
class GaugeIso:
    """A strict dg-algebra isomorphism between two ambient algebras."""

    source: HomotopyAlgebra
    target: HomotopyAlgebra
    matrix: list

    @cached_property
    def map(self) -> MultiMap:
        return linear_map(self.source.space, self.target.space, self.matrix, 0)

    def check(self):
        from . import linalg
        if self.source.space.dim != self.target.space.dim:
            raise AtlasError("gauge map is not square")
        if linalg.rank([list(r) for r in self.matrix]) != self.source.space.dim:
            raise AtlasError("gauge map is not invertible")
        f = HomotopyMorphism(self.source, self.target, {1: self.map}, AINF)
        for n in (1, 2):
            if not f.residual(n).is_zero():
                raise AtlasError("gauge map does not intertwine the "
                                 + ("differentials" if n == 1 else "products"))
        return True

    def morphism(self) -> HomotopyMorphism:
        return HomotopyMorphism(symmetrize(self.source), symmetrize(self.target),
                                {1: symmetrize_map(self.map)}, LINF)


def identity_gauge(alg: HomotopyAlgebra) -> GaugeIso:
    n = alg.space.dim
    return GaugeIso(alg, alg, [[Fraction(int(i == j)) for j in range(n)] for i in range(n)])


def compose_gauges(g: GaugeIso, f: GaugeIso) -> GaugeIso:
    from . import linalg
    return GaugeIso(f.source, g.target, linalg.matmul(g.matrix, f.matrix))


def transition(ci: Chart, cj: Chart, psi: GaugeIso, check: bool = True) -> HomotopyMorphism:
    """``f_ij = P_j o Ad(psi) o I_i`` as an L-infinity morphism ``H_i -> H_j``."""
    if psi.source.space != ci.ambient.space or psi.target.space != cj.ambient.space:
        raise AtlasError("gauge map does not match the charts")
    if check:
        psi.check()
    N = min(ci.N, cj.N)
    g = psi.morphism()
    step = compose_morphisms(g, ci.I, N)
    step = HomotopyMorphism(ci.minimal, cj.P.source, step.comps, LINF)
    f = compose_morphisms(cj.P, step, N)
    f = HomotopyMorphism(ci.minimal, cj.minimal, f.comps, LINF)
    if check and not f.is_morphism(N):
        raise AtlasError("transition fails the morphism equations")
    return f


def transition_ledger(f: HomotopyMorphism) -> dict:
    return norm_ledger(f.comps, factorial_weight=True)


# ---------------------------------------------------------------------------
# 1-simplices by gauge solve


def cochain_basis(conv: ConvolutionAlgebra, degree: int, arity: int) -> list:
    """Symmetric constant cochains of one arity, one per input multiset and output."""
    A, T = conv.A.space, conv.target(0).space
    out = []
    for key in combinations_with_replacement(range(A.dim), arity):
        s = sum(A.degrees[x] - 1 for x in key) + degree
        for q in range(T.dim):
            if T.degrees[q] - 1 != s:
                continue
            raw = MultiMap((A,) * arity, T, degree, {key: {q: Fraction(1)}}, check=False)
            sym = symmetrize_map(raw)
            if sym.is_zero():
                continue
            sym.symmetric = True
            out.append(Cochain(0, degree, {arity: sym.map_coeffs(lambda c: conv._lift(0, c))}))
    return out


def _flatten(conv: ConvolutionAlgebra, c: Cochain, k: int) -> dict:
    f = c.comps.get(k)
    if f is None:
        return {}
    out = {}
    for key, row in f.entries.items():
        for q, v in row.items():
            out[(key, q)] = _frac(v)
    return out


def _frac(v) -> Fraction:
    from .nerve import _to_frac
    return _to_frac(v)


def morphism_cochain(conv: ConvolutionAlgebra, f: HomotopyMorphism) -> Cochain:
    return conv.constant({k: m for k, m in f.comps.items() if k <= conv.N})


def _endpoint(conv, mu0, beta):
    nu = exact_part(conv, beta, 1, 0)
    alpha = mc_reconstruct(conv, mu0, nu, 1, 0, check=False)
    return alpha, conv.face(alpha, 0)


def connect(conv: ConvolutionAlgebra, f0: HomotopyMorphism | Cochain,
            f1: HomotopyMorphism | Cochain) -> Cochain:
    """A 1-simplex ``alpha`` with ``alpha(0) = f0`` and ``alpha(1) = f1``.

    ``alpha`` is reconstructed from ``nu = (d + delta)(t beta)`` with a
    constant ``beta`` of degree -1.  The arity-``k`` part of the endpoint is
    affine in ``beta_(k-1)`` once the lower components are fixed, so the
    components are solved for in increasing order.
    """
    mu0 = f0 if isinstance(f0, Cochain) else morphism_cochain(conv, f0)
    mu1 = f1 if isinstance(f1, Cochain) else morphism_cochain(conv, f1)
    beta = conv.zero(0, -1)
    alpha, end = _endpoint(conv, mu0, beta)
    for k in range(1, conv.N + 1):
        diff = _sub_flat(_flatten(conv, mu1, k), _flatten(conv, end, k))
        if not diff:
            continue
        if k == 1:
            raise GaugeObstruction("linear parts differ", 1, _witness(diff, conv))
        dirs = cochain_basis(conv, -1, k - 1)
        cols = []
        for e in dirs:
            _, e_end = _endpoint(conv, mu0, conv.add(beta, e))
            cols.append(_sub_flat(_flatten(conv, e_end, k), _flatten(conv, end, k)))
        coeffs = _solve(cols, diff)
        if coeffs is None:
            raise GaugeObstruction(f"no gauge correction at word length {k}", k, _witness(diff, conv))
        step = [conv.scale(e, c) for e, c in zip(dirs, coeffs) if c]
        beta = conv.add(beta, *step)
        alpha, end = _endpoint(conv, mu0, beta)
        if _sub_flat(_flatten(conv, mu1, k), _flatten(conv, end, k)):
            raise AtlasError(f"gauge solve at word length {k} did not close")
    if conv.face(alpha, 1) != _point(conv, mu0) or end != _point(conv, mu1):
        raise AtlasError("constructed 1-simplex has the wrong endpoints")
    return alpha


def _point(conv, c: Cochain) -> Cochain:
    return conv.restrict(c, conv.N)


def _sub_flat(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) - v
    return {k: v for k, v in out.items() if v}


def _witness(diff: dict, conv: ConvolutionAlgebra) -> dict:
    A, T = conv.A.space, conv.target(0).space
    return {f"{','.join(A.names[i] for i in key)} -> {T.names[q]}": format_rational(v)
            for (key, q), v in sorted(diff.items())}


def _solve(cols: list, rhs: dict):
    """Rational ``c`` with ``sum c_j cols[j] = rhs``, or ``None``."""
    rows = sorted({r for c in cols for r in c} | set(rhs))
    ix = {r: n for n, r in enumerate(rows)}
    mat = [{ix[r]: v for r, v in c.items()} for c in cols]
    mat.append({ix[r]: -v for r, v in rhs.items()})
    for vec in kernel_vectors(mat, len(rows)):
        last = vec.get(len(cols), 0)
        if last:
            return [vec.get(j, Fraction(0)) / last for j in range(len(cols))]
    return None


def transition_homotopy(ci: Chart, cj: Chart, psi: GaugeIso, psi_back: GaugeIso) -> dict:
    """A 1-simplex in ``C(H_i, H_i)`` from ``id`` to ``f_ji o f_ij``."""
    f = transition(ci, cj, psi)
    g = transition(cj, ci, psi_back)
    N = min(ci.N, cj.N)
    gf = HomotopyMorphism(ci.minimal, ci.minimal, compose_morphisms(g, f, N).comps, LINF)
    conv = ConvolutionAlgebra(ci.minimal, ci.minimal, N)
    alpha = connect(conv, identity_morphism(ci.minimal), gf)
    return {"simplex": alpha, "conv": conv, "start": identity_morphism(ci.minimal), "end": gf}


def move_base_point(f: HomotopyMorphism, db: dict, recomputed: HomotopyMorphism | None = None,
                    N: int = 3) -> dict:
    """Twist ``f`` by a Maurer-Cartan element ``db`` and connect it to ``recomputed``.

    Without ``recomputed`` the twisted morphism is connected to itself (the
    constant 1-simplex).  Raises :class:`GaugeObstruction` when the two
    morphisms are not homotopic.
    """
    from .homotopy import is_mc
    if not is_mc(f.source, db):
        raise AtlasError("the base-point shift is not Maurer-Cartan")
    led = norm_ledger(f.source.ops, factorial_weight=True)
    size = max((abs(Fraction(v)) for v in db.values()), default=Fraction(0))
    if led["C"] and size and size * 4 * Fraction(led["C"]).limit_denominator(10 ** 6) >= 1:
        raise AtlasError("base-point shift outside the normed radius")
    moved = perturb_morphism(f, db)
    src, tgt = moved.source, moved.target
    other = recomputed if recomputed is not None else moved
    conv = ConvolutionAlgebra(src, tgt, N)
    alpha = connect(conv, moved, other)
    return {"moved": moved, "simplex": alpha, "conv": conv}


# ---------------------------------------------------------------------------
# the chart functor at finite truncation


def propagate(g: HomotopyAlgebra, N: int) -> JetChart:
    return build_jet_chart(g, N)


def _coordinate_ring(m: int):
    names = ",".join(f"t{j}" for j in range(1, m + 1)) or "t0"
    return ring(names, QQ)


@dataclass
class MorphismJet:
    """``F(t)`` on degree-one coordinates and ``F#(t)`` on the whole fiber, truncated."""

    source: HomotopyAlgebra
    target: HomotopyAlgebra
    N: int
    F: dict       # target degree-one index -> polynomial in source t
    sharp: dict   # (output index, input index) -> polynomial in source t

    def as_table(self) -> dict:
        return {"F": {self.target.space.names[o]: str(p.as_expr()) for o, p in sorted(self.F.items())},
                "sharp": {f"{self.source.space.names[a]}->{self.target.space.names[o]}": str(p.as_expr())
                          for (o, a), p in sorted(self.sharp.items())}}

    def __eq__(self, other):
        if not isinstance(other, MorphismJet):
            return NotImplemented
        return _poly_dict_eq(self.F, other.F) and _poly_dict_eq(self.sharp, other.sharp)

    __hash__ = None


def _poly_dict_eq(a: dict, b: dict) -> bool:
    for k in set(a) | set(b):
        if (a.get(k, 0) - b.get(k, 0)) != 0:
            return False
    return True


def _symbolic_point(alg: HomotopyAlgebra, N: int):
    deg1 = alg.space.indices_of_degree(1)
    R, *gens = _coordinate_ring(len(deg1))
    gens = gens if deg1 else []
    return R, {i: gens[j] for j, i in enumerate(deg1)}


def propagate_morphism(f: HomotopyMorphism, N: int) -> MorphismJet:
    if f.flavor != LINF:
        raise AtlasError("charts use L-infinity morphisms")
    src = replace(f.source, truncation=N)
    R, b = _symbolic_point(src, N)
    ff = HomotopyMorphism(src, f.target, f.comps, LINF)
    F = {o: p for o, p in pushforward(ff, b).items() if f.target.space.degrees[o] == 1}
    lin = perturb_morphism(ff, b, source=src, target=f.target).comp(1)
    sharp = {}
    for (a,), row in lin.entries.items():
        for o, p in row.items():
            p = R(p) if not hasattr(p, "ring") else p
            if p != 0:
                sharp[(o, a)] = _trunc(p, N - 1)
    return MorphismJet(f.source, f.target, N, {o: _trunc(R(p) if not hasattr(p, "ring") else p, N)
                                               for o, p in F.items()}, sharp)


def _trunc(p, N):
    R = p.ring
    return R({m: c for m, c in p.items() if sum(m) <= N})


def compose_jets(G: MorphismJet, F: MorphismJet) -> MorphismJet:
    """``(G o F)(t) = G(F(t))`` and ``(G o F)# = G#(F(t)) F#(t)``, truncated (chain rule)."""
    N = min(G.N, F.N)
    R, _ = _symbolic_point(F.source, N)
    deg1_mid = F.target.space.indices_of_degree(1)

    def subst(p):
        if not hasattr(p, "ring") or p.ring.ngens == 0:
            return R(p)
        vals = [F.F.get(i, R(0)) for i in deg1_mid]
        if not deg1_mid:
            vals = [R(0)] * p.ring.ngens
        out = R(0)
        for mono, c in p.items():
            term = R(c)
            for v, e in zip(vals, mono):
                if e:
                    term = _trunc(term * v ** e, N)
            out += term
        return _trunc(out, N)

    Fc = {o: subst(p) for o, p in G.F.items()}
    Fc = {o: p for o, p in Fc.items() if p != 0}
    sharp = {}
    for (o, m), p in G.sharp.items():
        gp = subst(p)
        for a in range(F.source.space.dim):
            q = F.sharp.get((m, a))
            if q is None:
                continue
            v = _trunc(gp * q, N - 1)
            if v != 0:
                sharp[(o, a)] = sharp.get((o, a), R(0)) + v
    sharp = {k: v for k, v in sharp.items() if v != 0}
    return MorphismJet(F.source, G.target, N, Fc, sharp)


# ---------------------------------------------------------------------------
# induced maps on H^0


class H0Model:
    """``Q[t] / (kappa + weight > N)`` with a monomial basis."""

    def __init__(self, alg: HomotopyAlgebra, N: int):
        chart = propagate(alg, N)
        cx = derived_locus(chart)
        self.alg, self.N, self.m = alg, N, chart.m
        self.ring = SuperRing(tuple(f"t{j + 1}" for j in range(self.m)), (0,) * self.m)
        self.relations = [self._project(r) for r in cx.relations()]
        self.mons = self.ring.monomials(0, N)
        self.ix = {mono: r for r, mono in enumerate(self.mons)}
        cols = []
        for g in self.relations:
            for mono in self.mons:
                prod = self.ring.mul({mono: Fraction(1)}, g, N)
                if prod:
                    cols.append(coordinates(prod, self.ix))
        self.ideal = cols
        basis = []
        cur, r0 = list(cols), rank_of(cols, len(self.mons))
        for mono in self.mons:
            trial = cur + [{self.ix[mono]: Fraction(1)}]
            r1 = rank_of(trial, len(self.mons))
            if r1 > r0:
                basis.append(mono)
                cur, r0 = trial, r1
        self.basis = basis

    def _project(self, f: dict) -> dict:
        out = {}
        for mono, c in f.items():
            if any(mono[self.m:]):
                continue
            k = mono[:self.m]
            out[k] = out.get(k, 0) + c
        return {k: v for k, v in out.items() if v}

    def reduce(self, f: dict) -> list:
        """Coordinates of ``f`` in the monomial basis of ``H^0``."""
        f = self.ring.truncate(f, self.N)
        if not f:
            return [Fraction(0)] * len(self.basis)
        cols = self.ideal + [{self.ix[b]: Fraction(1)} for b in self.basis]
        sol = _solve(cols, {self.ix[m]: c for m, c in f.items()})
        if sol is None:
            raise AtlasError("element is not in the span of the basis")
        return sol[len(self.ideal):]

    def in_ideal(self, f: dict) -> bool:
        f = self.ring.truncate(f, self.N)
        if not f:
            return True
        return _solve(self.ideal, {self.ix[m]: c for m, c in f.items()}) is not None

    def presentation(self) -> dict:
        return {"relations": [self.ring.to_str(r) for r in self.relations],
                "basis": [self.ring.mono_str(b) for b in self.basis]}


def _poly_to_dict(p, m: int) -> dict:
    out = {}
    for mono, c in p.terms():
        key = tuple(mono[:m]) if m else ()
        out[key] = out.get(key, 0) + Fraction(int(c.numerator), int(c.denominator))
    return {k: v for k, v in out.items() if v}


def induced_h0_map(f: HomotopyMorphism, src: H0Model, tgt: H0Model) -> list:
    """Matrix of ``F^* : H^0(target) -> H^0(source)``; rows follow the target basis."""
    jet = propagate_morphism(f, src.N)
    deg1 = f.target.space.indices_of_degree(1)
    R = src.ring
    images = {}
    for j, i in enumerate(deg1):
        p = jet.F.get(i)
        images[j] = _poly_to_dict(p, src.m) if p is not None else {}
    for rel in tgt.relations:
        pulled = tgt.ring.substitute(rel, images, target=R, max_weight=src.N)
        if not src.in_ideal(pulled):
            raise AtlasError("the morphism does not preserve the Maurer-Cartan ideal")
    out = []
    for b in tgt.basis:
        pulled = tgt.ring.substitute({b: Fraction(1)}, images, target=R, max_weight=src.N)
        out.append(src.reduce(pulled))
    return out


def _matmul(a, b):
    # a: rows over X, each a vector over Y; b: rows over Y, each a vector over Z
    if not a:
        return []
    return [[sum(row[y] * b[y][z] for y in range(len(b))) for z in range(len(b[0]) if b else 0)]
            for row in a]


# ---------------------------------------------------------------------------
# hypercover nerve


@dataclass
class HypercoverNerve:
    """Charts on abstract opens with gauge isomorphisms on ordered pairs.

    Level ``k`` consists of weakly increasing index tuples of length ``k + 1``;
    faces drop an entry and degeneracies repeat one.
    """

    charts: dict
    gauges: dict
    tags: dict = field(default_factory=dict)
    N: int = 3
    unchecked: tuple = ("covering condition", "refinement condition")

    @property
    def labels(self) -> list:
        return sorted(self.charts)

    def level(self, k: int) -> list:
        return list(combinations_with_replacement(self.labels, k + 1))

    @staticmethod
    def face(simplex: tuple, r: int) -> tuple:
        return simplex[:r] + simplex[r + 1:]

    @staticmethod
    def degeneracy(simplex: tuple, r: int) -> tuple:
        return simplex[:r + 1] + simplex[r:]

    def simplicial_identities(self, max_level: int = 2) -> list:
        """Violations of the face/degeneracy identities on the finite levels."""
        bad = []
        d, s = self.face, self.degeneracy
        for k in range(1, max_level + 1):
            for x in self.level(k):
                for i in range(k + 1):
                    for j in range(i + 1, k + 1):
                        if d(d(x, j), i) != d(d(x, i), j - 1):
                            bad.append(("dd", x, i, j))
                for j in range(k + 1):
                    for i in range(k + 2):
                        lhs = d(s(x, j), i)
                        if i in (j, j + 1):
                            ok = lhs == x
                        elif i < j:
                            ok = lhs == s(d(x, i), j - 1)
                        else:
                            ok = lhs == s(d(x, i - 1), j)
                        if not ok:
                            bad.append(("ds", x, i, j))
        return bad

    def gauge(self, i, j) -> GaugeIso:
        if i == j:
            return identity_gauge(self.charts[i].ambient)
        if (i, j) not in self.gauges:
            raise AtlasError(f"no gauge map for {(i, j)}")
        return self.gauges[(i, j)]

    @cached_property
    def _transitions(self) -> dict:
        return {}

    def transition(self, i, j) -> HomotopyMorphism:
        key = (i, j)
        if key not in self._transitions:
            self._transitions[key] = transition(self.charts[i], self.charts[j], self.gauge(i, j))
        return self._transitions[key]


def _as_linf(f: HomotopyMorphism, src: HomotopyAlgebra, tgt: HomotopyAlgebra) -> HomotopyMorphism:
    return HomotopyMorphism(src, tgt, f.comps, LINF)


def verify_triple(atlas: HypercoverNerve, triple: tuple) -> dict:
    """Fill the triangle for ``(i, j, k)`` and report its certificates."""
    i, j, k = triple
    ci, cj, ck = (atlas.charts[x] for x in triple)
    N = atlas.N
    f_ij, f_jk, f_ik = atlas.transition(i, j), atlas.transition(j, k), atlas.transition(i, k)
    composite = _as_linf(compose_morphisms(f_jk, f_ij, N), ci.minimal, ck.minimal)
    strict = compose_gauges(atlas.gauge(j, k), atlas.gauge(i, j))
    reference = transition(ci, ck, strict)
    conv = ConvolutionAlgebra(ci.minimal, ck.minimal, N)
    report = {"triple": list(triple), "ok": False}
    try:
        x2 = connect(conv, f_ik, reference)
        x0 = connect(conv, reference, composite)
    except GaugeObstruction as exc:
        report.update({"failure": str(exc), "arity": exc.arity, "witness": exc.witness})
        return report
    fill = horn_fill(conv, {0: x0, 2: x2}, 2, 1)
    x1 = conv.face(fill.filler, 1)
    ends = (conv.face(x1, 1) == morphism_cochain(conv, f_ik)
            and conv.face(x1, 0) == morphism_cochain(conv, composite))
    report.update({
        "ok": fill.ok and ends,
        "faces": {str(r): v for r, v in fill.face_checks.items()},
        "is_mc": fill.is_mc,
        "third_face_endpoints": ends,
        "ledger_h": fill.ledger["h_bound"],
        "ledger_d": fill.ledger["d_bound"],
    })
    report["_edges"] = (conv, [x0, x1, x2])
    return report


def verify_cocycle(atlas: HypercoverNerve, max_level: int = 2, parallel: int = 1) -> dict:
    """Certify every triple (including degenerate ones) by horn filling."""
    ident = atlas.simplicial_identities(max_level)
    triples = atlas.level(2) if max_level >= 2 else []
    for t in atlas.level(1):
        atlas.transition(*t)
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as ex:
            results = list(ex.map(lambda t: verify_triple(atlas, t), triples))
    else:
        results = [verify_triple(atlas, t) for t in triples]
    for r in results:
        r.pop("_edges", None)
    ok = not ident and all(r["ok"] for r in results)
    failures = [r for r in results if not r["ok"]]
    return {"ok": ok, "simplicial_identities": not ident, "triples": results,
            "failures": failures, "unchecked": list(atlas.unchecked)}


def face_independence(conv: ConvolutionAlgebra, alpha: Cochain, src: H0Model, tgt: H0Model) -> dict:
    """Both ends of a 1-simplex induce the same map on ``H^0``."""
    maps = []
    for r in (1, 0):
        end = conv.face(alpha, r)
        maps.append(induced_h0_map(conv.as_morphism(end), src, tgt))
    return {"agree": maps[0] == maps[1], "map": _fmt_matrix(maps[0])}


def _fmt_matrix(m) -> list:
    return [[format_rational(x) for x in row] for row in m]


def glue_h0(atlas: HypercoverNerve, report: dict | None = None) -> dict:
    """Per-chart ``H^0``, pairwise induced maps and triple/face consistency."""
    N = atlas.N
    models = {x: H0Model(atlas.charts[x].minimal, N) for x in atlas.labels}
    pair_maps = {}
    for i, j in atlas.level(1):
        pair_maps[(i, j)] = induced_h0_map(atlas.transition(i, j), models[i], models[j])
    triples = []
    for i, j, k in atlas.level(2):
        lhs = pair_maps[(i, k)]
        rhs = _matmul(pair_maps[(j, k)], pair_maps[(i, j)])
        triples.append({"triple": [i, j, k], "agree": lhs == rhs})
    faces = []
    for i, j, k in atlas.level(2):
        r = verify_triple(atlas, (i, j, k))
        if not r["ok"]:
            faces.append({"triple": [i, j, k], "agree": False})
            continue
        conv, edges = r["_edges"]
        agree = all(face_independence(conv, e, models[i], models[k])["agree"] for e in edges)
        faces.append({"triple": [i, j, k], "agree": agree})
    ok = all(t["agree"] for t in triples) and all(f["agree"] for f in faces)
    return {
        "ok": ok,
        "charts": {x: models[x].presentation() for x in atlas.labels},
        "transitions": {f"{i}->{j}": _fmt_matrix(m) for (i, j), m in sorted(pair_maps.items())},
        "triples": triples,
        "face_independence": faces,
    }


# ---------------------------------------------------------------------------
# synthetic atlases


def fat_line_ambient() -> HomotopyAlgebra:
    """``x, u`` in degree 1 and ``y, v`` in degree 2 with ``du = v`` and
    ``x x = x u = u x = y``; cohomology is a fat point."""
    from .dga import named
    sp = GradedSpace(("x", "u", "y", "v"), (1, 1, 2, 2))
    return named(sp, {"u": {"v": 1}}, {("x", "x"): {"y": 1}, ("x", "u"): {"y": 1}, ("u", "x"): {"y": 1}})


def fat_line_inner_products() -> list:
    """Three positive inner products (block diagonal by degree)."""
    F = Fraction
    return [
        None,
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, F(1, 2)], [0, 0, F(1, 2), 1]],
        [[2, F(1, 3), 0, 0], [F(1, 3), 1, 0, 0], [0, 0, 1, F(-1, 3)], [0, 0, F(-1, 3), 2]],
    ]


def scaling_gauge(alg: HomotopyAlgebra, lam) -> GaugeIso:
    """``x, u, v -> lam`` times themselves and ``y -> lam^2 y`` on the fat line."""
    lam = Fraction(lam)
    diag = [lam, lam, lam * lam, lam]
    n = len(diag)
    return GaugeIso(alg, alg, [[diag[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)])


def three_chart_atlas(N: int = 3, consistent: bool = True) -> HypercoverNerve:
    """Three charts of the fat line, one per inner product, glued by scalings.

    ``psi_ab = 2``, ``psi_bc = 3`` and ``psi_ac = 6`` (or ``1`` for the
    inconsistent variant).
    """
    amb = fat_line_ambient()
    charts = {}
    for name, ip in zip(("a", "b", "c"), fat_line_inner_products()):
        charts[name] = make_chart(name, amb, N, ip)
    gauges = {
        ("a", "b"): scaling_gauge(amb, 2),
        ("b", "c"): scaling_gauge(amb, 3),
        ("a", "c"): scaling_gauge(amb, 6 if consistent else 1),
    }
    tags = {"a": "U_a", "b": "U_b", "c": "U_c"}
    return HypercoverNerve(charts, gauges, tags, N)


def atlas_to_json(atlas: HypercoverNerve) -> dict:
    """Input form read by ``linfty atlas check --input``."""
    amb = {x: c.ambient for x, c in atlas.charts.items()}
    first = atlas.labels[0]
    if any(a.space != amb[first].space for a in amb.values()):
        raise AtlasError("the JSON form needs one ambient algebra for all charts")
    charts = {}
    for x, c in sorted(atlas.charts.items()):
        ip = c.inner_product
        charts[x] = {"inner_product": None if ip is None else _fmt_matrix(ip)}
    return {
        "N": atlas.N,
        "ambient": amb[first].to_json(),
        "charts": charts,
        "gauges": {f"{i},{j}": _fmt_matrix(g.matrix) for (i, j), g in sorted(atlas.gauges.items())},
        "tags": dict(sorted(atlas.tags.items())),
        "levels": {str(k): [list(x) for x in atlas.level(k)] for k in range(3)},
    }


def report_json(report: dict) -> dict:
    """Drop in-memory objects from a report."""
    def clean(x):
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items() if not str(k).startswith("_")}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, Fraction):
            return format_rational(x)
        return x
    return clean(report)


__all__ = [
    "AtlasError", "GaugeObstruction", "Chart", "make_chart", "GaugeIso", "identity_gauge",
    "compose_gauges", "transition", "transition_ledger", "cochain_basis", "connect",
    "morphism_cochain", "transition_homotopy", "move_base_point", "propagate", "MorphismJet",
    "propagate_morphism", "compose_jets", "H0Model", "induced_h0_map", "HypercoverNerve",
    "verify_triple", "verify_cocycle", "face_independence", "glue_h0", "fat_line_ambient",
    "fat_line_inner_products", "scaling_gauge", "three_chart_atlas", "atlas_to_json", "report_json",
]
