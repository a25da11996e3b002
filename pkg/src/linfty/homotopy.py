"""A-infinity and L-infinity algebras and their morphisms.

Structure maps are :class:`~linfty.graded.MultiMap` objects on the shifted
space: ``m_k`` (or ``l_k``) has degree ``+1`` and morphism components have
degree ``0``.  The relations checked here are

* A-infinity: ``sum m_{r+1+t} o (1^r (x) m_s (x) 1^t) = 0``;
* L-infinity: ``sum_{i+j=n+1} sum_{unshuffles} eps * l_i(l_j(x..), x..) = 0``,

with arity-zero terms included when the algebra is curved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Callable

import numpy as np

from .graded import (GradedError, GradedSpace, MultiMap, compose, element,
                     graft, identity, operator_norm, permute_inputs, shuffles,
                     sum_maps, zero_map)

AINF = "Ainf"
LINF = "Linfty"


class StructureError(ValueError):
    """A structure relation or precondition failed."""


def compositions(n: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to ``n``."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    for first in range(1, n - parts + 2):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


@dataclass
class HomotopyAlgebra:
    """An A-infinity or L-infinity algebra, possibly curved.

    ``ops[k]`` is the arity-``k`` structure map; ``ops[0]`` (if present) is
    the curvature.  ``truncation`` bounds the polynomial degree of symbolic
    coefficients when the algebra is perturbed by a symbolic element.
    """

    space: GradedSpace
    ops: dict
    flavor: str = AINF
    truncation: int | None = None
    unit: dict | None = None
    norm_ledger: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flavor not in (AINF, LINF):
            raise StructureError(f"unknown flavor {self.flavor!r}")
        for k, m in self.ops.items():
            if m.arity != k or m.tgt != self.space or any(s != self.space for s in m.src):
                raise StructureError(f"operation {k} has the wrong signature")
            if m.degree != 1 and not m.is_zero():
                raise StructureError(f"operation {k} must have shifted degree 1")

    # ------------------------------------------------------------------
    @property
    def k_max(self) -> int:
        return max((k for k, m in self.ops.items() if not m.is_zero()), default=0)

    def op(self, k: int) -> MultiMap:
        m = self.ops.get(k)
        if m is None:
            return zero_map((self.space,) * k, self.space, 1)
        return m

    @property
    def m1(self) -> MultiMap:
        return self.op(1)

    @property
    def m2(self) -> MultiMap:
        return self.op(2)

    @property
    def curved(self) -> bool:
        return not self.op(0).is_zero()

    def nonzero_ops(self):
        return {k: m for k, m in sorted(self.ops.items()) if not m.is_zero()}

    def relation(self, n: int) -> MultiMap:
        """The arity-``n`` structure relation, which vanishes for a valid algebra."""
        terms = []
        for j in range(0, n + 1):
            inner = self.ops.get(j)
            if inner is None or inner.is_zero():
                continue
            i = n - j + 1
            outer = self.ops.get(i)
            if outer is None or outer.is_zero():
                continue
            if self.flavor == AINF:
                for slot in range(1, i + 1):
                    terms.append(compose(outer, inner, slot))
            else:
                t = compose(outer, inner, 1)
                for order in _unshuffle_orders([j, n - j]):
                    terms.append(permute_inputs(t, order))
        return sum_maps(terms, (self.space,) * n, self.space, 2)

    def check_relations(self, up_to: int) -> dict:
        return {n: self.relation(n) for n in range(0, up_to + 1)}

    def relations_hold(self, up_to: int, tol: float | None = None) -> bool:
        for n in range(0, up_to + 1):
            r = self.relation(n)
            if tol is None:
                if not r.is_zero():
                    return False
            elif r.max_abs() > tol:
                return False
        return True

    # ------------------------------------------------------------------
    def to_json(self) -> dict:
        out = self.space.to_json()
        out["flavor"] = self.flavor
        out["maps"] = [m.to_json() for k, m in sorted(self.ops.items()) if k > 0 and not m.is_zero()]
        if self.curved:
            cur = self.op(0).entries.get((), {})
            out["curvature"] = [{"out": self.space.names[o], "coeff": _fmt(c)} for o, c in sorted(cur.items())]
        if self.truncation is not None:
            out["truncation"] = self.truncation
        if self.norm_ledger:
            out["norm_ledger"] = self.norm_ledger
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HomotopyAlgebra":
        from .graded import parse_rational
        space = GradedSpace.from_json(data)
        flavor = data.get("flavor", AINF)
        if flavor not in (AINF, LINF):
            raise GradedError(f"flavor must be {AINF!r} or {LINF!r}")
        ops = {}
        for i, md in enumerate(data.get("maps", [])):
            m = MultiMap.from_json(md, space, space)
            if m.arity in ops:
                ops[m.arity] = ops[m.arity] + m
            else:
                ops[m.arity] = m
        if data.get("curvature"):
            vec = {}
            for e in data["curvature"]:
                vec[space.index(e["out"])] = parse_rational(e["coeff"])
            ops[0] = element(space, vec, 1)
        return cls(space, ops, flavor, data.get("truncation"))


def _fmt(c):
    from .graded import format_rational
    return format_rational(c)


def _unshuffle_orders(blocks):
    blocks = [b for b in blocks]
    if any(b == 0 for b in blocks):
        nz = [b for b in blocks if b > 0]
        if not nz:
            return [()]
        return shuffles(nz)
    return shuffles(blocks)


def dg_algebra(space: GradedSpace, m1: MultiMap | None, m2: MultiMap | None, unit=None) -> HomotopyAlgebra:
    ops = {}
    if m1 is not None:
        ops[1] = m1
    if m2 is not None:
        ops[2] = m2
    return HomotopyAlgebra(space, ops, AINF, unit=unit)


def check_dg_algebra(alg: HomotopyAlgebra) -> None:
    """Raise unless ``m1^2 = 0``, Leibniz and associativity hold exactly."""
    for n in (1, 2, 3):
        if not alg.relation(n).is_zero():
            name = {1: "m1 o m1 = 0", 2: "Leibniz", 3: "associativity"}[n]
            raise StructureError(f"dg algebra fails {name}")


# ---------------------------------------------------------------------------
# morphisms


@dataclass
class HomotopyMorphism:
    """Components ``f_k : A^(x)k -> B`` of degree 0, ``k >= 1``."""

    source: HomotopyAlgebra
    target: HomotopyAlgebra
    comps: dict
    flavor: str = AINF

    def comp(self, k: int) -> MultiMap:
        f = self.comps.get(k)
        if f is None:
            return zero_map((self.source.space,) * k, self.target.space, 0)
        return f

    @property
    def k_max(self) -> int:
        return max((k for k, f in self.comps.items() if not f.is_zero()), default=0)

    def residual(self, n: int) -> MultiMap:
        """Arity-``n`` morphism equation (zero for a morphism)."""
        A, B = self.source, self.target
        lhs = []
        for j in range(0, n + 1):
            M = B.ops.get(j)
            if M is None or M.is_zero():
                continue
            if j == 0:
                if n == 0:
                    lhs.append(M)
                continue
            for parts in compositions(n, j):
                fs = [self.comps.get(p) for p in parts]
                if any(f is None or f.is_zero() for f in fs):
                    continue
                t = graft(M, fs)
                if self.flavor == AINF:
                    lhs.append(t)
                else:
                    c = Fraction(1, math.factorial(j))
                    for order in shuffles(list(parts)):
                        lhs.append(permute_inputs(t, order).scale(c))
        rhs = []
        for s in range(0, n + 1):
            m = A.ops.get(s)
            if m is None or m.is_zero():
                continue
            f = self.comps.get(n - s + 1)
            if f is None or f.is_zero():
                continue
            if self.flavor == AINF:
                for slot in range(1, n - s + 2):
                    rhs.append(compose(f, m, slot))
            else:
                t = compose(f, m, 1)
                for order in _unshuffle_orders([s, n - s]):
                    rhs.append(permute_inputs(t, order))
        src = (A.space,) * n
        return sum_maps(lhs, src, B.space, 1) - sum_maps(rhs, src, B.space, 1) \
            if (lhs or rhs) else zero_map(src, B.space, 1)

    def is_morphism(self, up_to: int, tol: float | None = None) -> bool:
        for n in range(0, up_to + 1):
            r = self.residual(n)
            bad = (not r.is_zero()) if tol is None else r.max_abs() > tol
            if bad:
                return False
        return True


def identity_morphism(alg: HomotopyAlgebra) -> HomotopyMorphism:
    return HomotopyMorphism(alg, alg, {1: identity(alg.space)}, alg.flavor)


def compose_morphisms(g: HomotopyMorphism, f: HomotopyMorphism, up_to: int) -> HomotopyMorphism:
    """``g o f`` up to arity ``up_to``."""
    if f.target.space != g.source.space:
        raise StructureError("morphisms are not composable")
    comps = {}
    for n in range(1, up_to + 1):
        terms = []
        for j in range(1, n + 1):
            G = g.comps.get(j)
            if G is None or G.is_zero():
                continue
            for parts in compositions(n, j):
                fs = [f.comps.get(p) for p in parts]
                if any(x is None or x.is_zero() for x in fs):
                    continue
                t = graft(G, fs)
                if f.flavor == AINF:
                    terms.append(t)
                else:
                    c = Fraction(1, math.factorial(j))
                    for order in shuffles(list(parts)):
                        terms.append(permute_inputs(t, order).scale(c))
        comps[n] = sum_maps(terms, (f.source.space,) * n, g.target.space, 0)
    return HomotopyMorphism(f.source, g.target, comps, f.flavor)


# ---------------------------------------------------------------------------
# symmetrization and abelian summands


def symmetrize_map(m: MultiMap) -> MultiMap:
    k = m.arity
    if k <= 1:
        return MultiMap(m.src, m.tgt, m.degree, m.entries, symmetric=True, check=False)
    terms = [permute_inputs(m, order) for order in permutations(range(k))]
    out = sum_maps(terms)
    out.symmetric = True
    return out


def symmetrize(alg: HomotopyAlgebra) -> HomotopyAlgebra:
    """``l_k = sum_sigma eps_sigma m_k o sigma``."""
    if alg.flavor != AINF:
        raise StructureError("symmetrize expects an A-infinity algebra")
    ops = {k: symmetrize_map(m) for k, m in alg.ops.items()}
    return HomotopyAlgebra(alg.space, ops, LINF, alg.truncation)


def symmetrize_morphism(f: HomotopyMorphism, source: HomotopyAlgebra, target: HomotopyAlgebra) -> HomotopyMorphism:
    comps = {k: symmetrize_map(c) for k, c in f.comps.items()}
    return HomotopyMorphism(source, target, comps, LINF)


def restrict(alg: HomotopyAlgebra, sub: list[int]) -> HomotopyAlgebra:
    """Restrict to the span of the basis vectors ``sub``; must be closed."""
    names = [alg.space.names[i] for i in sub]
    degs = [alg.space.degrees[i] for i in sub]
    space = GradedSpace(tuple(names), tuple(degs))
    pos = {old: new for new, old in enumerate(sub)}
    ops = {}
    for k, m in alg.ops.items():
        ent = {}
        for key, row in m.entries.items():
            if all(x in pos for x in key):
                nrow = {}
                for o, c in row.items():
                    if o not in pos:
                        raise StructureError(f"span is not closed under operation {k}")
                    nrow[pos[o]] = c
                ent[tuple(pos[x] for x in key)] = nrow
        ops[k] = MultiMap((space,) * k, space, m.degree, ent, symmetric=m.symmetric, check=False)
    return HomotopyAlgebra(space, ops, alg.flavor, alg.truncation)


def split_abelian_summand(alg: HomotopyAlgebra, abelian: list[int], k_max: int) -> HomotopyAlgebra:
    """Restrict an L-infinity algebra to the complement of an abelian summand.

    ``abelian`` lists basis indices spanning an ideal ``C`` on which all
    brackets vanish and whose complement is a sub-structure.  The function
    checks that any operation fed a ``C``-argument returns zero and that the
    complement is closed, then returns the restricted algebra.
    """
    if alg.flavor != LINF:
        raise StructureError("split_abelian_summand expects an L-infinity algebra")
    C = set(abelian)
    rest = [i for i in range(alg.space.dim) if i not in C]
    for k in range(2, k_max + 1):
        m = alg.op(k)
        for key, row in m.entries.items():
            if any(x in C for x in key) and any(c != 0 for c in row.values()):
                raise StructureError(f"l_{k} does not vanish on an abelian-summand argument {key}")
    m1 = alg.op(1)
    for key, row in m1.entries.items():
        src_in_c = key[0] in C
        for o in row:
            if src_in_c != (o in C):
                raise StructureError("the splitting does not respect the differential")
    return restrict(alg, rest)


# ---------------------------------------------------------------------------
# perturbation, Kuranishi map, pushforward


def _insert_elements(m: MultiMap, b_map: MultiMap, pattern) -> MultiMap:
    """Fill the slots of ``m`` flagged True in ``pattern`` with ``b``."""
    out = m
    slot = 1
    for is_b in pattern:
        if is_b:
            out = compose(out, b_map, slot)
        else:
            slot += 1
    return out


def _b_element(space: GradedSpace, b: dict) -> MultiMap:
    for i, c in b.items():
        if c != 0 and space.degrees[i] != 1:
            raise StructureError("the perturbing element must have degree 1")
    vec = {i: c for i, c in b.items() if c != 0}
    return MultiMap((), space, 0, {(): vec} if vec else {}, check=False)


def truncate_coeffs(m: MultiMap, order: int | None) -> MultiMap:
    if order is None:
        return m
    return m.map_coeffs(lambda c: truncate_poly(c, order))


def truncate_poly(c, order: int):
    """Drop monomials of total degree above ``order`` (polynomial coefficients only)."""
    terms = getattr(c, "terms", None)
    if terms is None:
        return c
    R = c.ring
    return R({mon: v for mon, v in c.items() if sum(mon) <= order})


def perturb_algebra(alg: HomotopyAlgebra, b: dict, k_max: int | None = None) -> HomotopyAlgebra:
    """The structure twisted by a degree-one element ``b``.

    A-infinity: ``m^b_k(a) = sum m(b^j0, a_1, b^j1, ..., a_k, b^jk)``;
    L-infinity: ``l^b_k(a) = sum_j (1/j!) l_{k+j}(b^j, a)``.
    ``b`` may have polynomial coefficients; then the result is truncated at
    ``alg.truncation``.
    """
    top = alg.k_max if k_max is None else k_max
    bm = _b_element(alg.space, b)
    ops = {}
    for k in range(0, top + 1):
        terms = []
        for n in range(k, top + 1):
            m = alg.ops.get(n)
            if m is None or m.is_zero():
                continue
            j = n - k
            if alg.flavor == LINF:
                pattern = [True] * j + [False] * k
                t = _insert_elements(m, bm, pattern).scale(Fraction(1, math.factorial(j)))
                terms.append(t)
            else:
                for pos in _b_patterns(n, k):
                    terms.append(_insert_elements(m, bm, pos))
        if terms:
            s = sum_maps(terms, (alg.space,) * k, alg.space, 1)
            s = truncate_coeffs(s, alg.truncation)
            s.degree = 1
            ops[k] = s
    return HomotopyAlgebra(alg.space, ops, alg.flavor, alg.truncation)


def _b_patterns(n: int, k: int):
    """Placements of ``n - k`` copies of ``b`` among ``n`` slots, keeping ``k`` free."""
    from itertools import combinations
    for free in combinations(range(n), k):
        fs = set(free)
        yield [i not in fs for i in range(n)]


def kuranishi(alg: HomotopyAlgebra, b: dict) -> dict:
    """``kappa(b)``: the curvature of the algebra twisted by ``b``."""
    cur = perturb_algebra(alg, b).op(0)
    return dict(cur.entries.get((), {}))


def is_mc(alg: HomotopyAlgebra, b: dict) -> bool:
    return not kuranishi(alg, b)


def perturb_morphism(f: HomotopyMorphism, b: dict, k_max: int | None = None,
                     source: HomotopyAlgebra | None = None,
                     target: HomotopyAlgebra | None = None) -> HomotopyMorphism:
    """``F^b_k(a) = sum f(b.., a_1, b.., ..., a_k, b..)`` (with ``1/j!`` for L-infinity)."""
    top = f.k_max if k_max is None else k_max
    bm = _b_element(f.source.space, b)
    comps = {}
    for k in range(1, top + 1):
        terms = []
        for n in range(k, top + 1):
            c = f.comps.get(n)
            if c is None or c.is_zero():
                continue
            j = n - k
            if f.flavor == LINF:
                t = _insert_elements(c, bm, [True] * j + [False] * k)
                terms.append(t.scale(Fraction(1, math.factorial(j))))
            else:
                for pos in _b_patterns(n, k):
                    terms.append(_insert_elements(c, bm, pos))
        if terms:
            s = sum_maps(terms, (f.source.space,) * k, f.target.space, 0)
            s.degree = 0
            comps[k] = truncate_coeffs(s, f.source.truncation)
    if source is None:
        source = perturb_algebra(f.source, b)
    if target is None:
        target = perturb_algebra(f.target, pushforward(f, b))
    return HomotopyMorphism(source, target, comps, f.flavor)


def pushforward(f: HomotopyMorphism, b: dict) -> dict:
    """``f_*(b) = sum_k f_k(b^k)`` (divided by ``k!`` for L-infinity)."""
    bm = _b_element(f.source.space, b)
    out: dict = {}
    for k, c in sorted(f.comps.items()):
        if c.is_zero():
            continue
        v = _insert_elements(c, bm, [True] * k).entries.get((), {})
        w = 1 if f.flavor == AINF else Fraction(1, math.factorial(k))
        for o, x in v.items():
            out[o] = out.get(o, 0) + w * x
    tr = f.source.truncation
    out = {o: truncate_poly(x, tr) if tr is not None else x for o, x in out.items()}
    return {o: x for o, x in out.items() if x != 0}


def mc_pushforward(f: HomotopyMorphism, b: dict) -> dict:
    if not is_mc(f.source, b):
        raise StructureError("input element is not Maurer-Cartan")
    return pushforward(f, b)


def curvature_intertwining_residual(f: HomotopyMorphism, b: dict) -> dict:
    """``kappa_B(f_* b) - sum f_{j1+j2+1}(b^j1, kappa_A(b), b^j2)`` (A-infinity).

    For L-infinity morphisms the right side is ``sum_j (1/j!) f_{j+1}(b^j, kappa_A(b))``.
    """
    A, B = f.source, f.target
    lhs = kuranishi(B, pushforward(f, b))
    kap = kuranishi(A, b)
    kap_el = MultiMap((), A.space, 1, {(): kap} if kap else {}, check=False)
    bm = _b_element(A.space, b)
    rhs: dict = {}
    for n, c in f.comps.items():
        if c.is_zero():
            continue
        for pos in range(n):
            if f.flavor == LINF and pos != n - 1:
                continue
            t = c
            for q in range(n):
                t = compose(t, kap_el if q == pos else bm, 1)
            w = 1 if f.flavor == AINF else Fraction(1, math.factorial(n - 1))
            for o, x in t.entries.get((), {}).items():
                rhs[o] = rhs.get(o, 0) + w * x
    out = {}
    tr = A.truncation
    for o in set(lhs) | set(rhs):
        v = lhs.get(o, 0) - rhs.get(o, 0)
        if tr is not None:
            v = truncate_poly(v, tr)
        if v != 0:
            out[o] = v
    return out


# ---------------------------------------------------------------------------
# norm ledger


def norm_ledger(maps: dict, factorial_weight: bool = False) -> dict:
    """Per-arity norms and the least ``C`` with ``||f_k|| <= w_k C^k``.

    ``w_k`` is ``k!`` when ``factorial_weight`` is set (the normed condition
    for L-infinity structures), else 1.  ``C`` is returned as a float for
    display; exact comparisons go through :func:`ledger_bound_holds`.
    """
    per_k = {}
    c_val = 0.0
    for k, m in sorted(maps.items()):
        if k < 1:
            continue
        nk = operator_norm(m)
        per_k[k] = nk
        w = math.factorial(k) if factorial_weight else 1
        if nk:
            c_val = max(c_val, (float(nk) / w) ** (1.0 / k))
    return {"per_k": per_k, "C": c_val, "factorial": factorial_weight}


def ledger_bound_holds(ledger: dict, bound) -> bool:
    """Exact check ``||f_k|| <= w_k * bound^k`` for every recorded arity."""
    bound = Fraction(bound)
    for k, nk in ledger["per_k"].items():
        w = math.factorial(k) if ledger.get("factorial") else 1
        if Fraction(nk) > w * bound ** k:
            return False
    return True


# ---------------------------------------------------------------------------
# tensor product with a commutative dg algebra


@dataclass(frozen=True)
class Cdga:
    """A finite graded-commutative dg algebra in ordinary (unshifted) degrees.

    ``d[i]`` is ``{j: coeff}`` and ``mul[(i, j)]`` is ``{k: coeff}``.
    """

    space: GradedSpace
    d: dict
    mul: dict
    unit: int = 0


def tensor_with_cdga(alg: HomotopyAlgebra, cdga: Cdga, name_sep: str = "|") -> HomotopyAlgebra:
    """The algebra ``A (x) C`` on basis pairs ``(a, c)``.

    ``M_k((a_1,w_1),...,(a_k,w_k)) = eps * m_k(a) (x) w_1...w_k`` with the
    Koszul sign for moving each ``w_i`` past the later ``a_j``; ``M_1`` also
    carries the term ``-(-1)^{|a|'} a (x) dw`` coming from the differential
    of ``C`` (``|a|'`` the shifted degree).
    """
    A, Cs = alg.space, cdga.space
    pairs = [(a, c) for a in range(A.dim) for c in range(Cs.dim)]
    names = tuple(f"{A.names[a]}{name_sep}{Cs.names[c]}" for a, c in pairs)
    degs = tuple(A.degrees[a] + Cs.degrees[c] for a, c in pairs)
    space = GradedSpace(names, degs)
    idx = {p: n for n, p in enumerate(pairs)}
    mul = cdga.mul

    def cprod(cs):
        vec = {cs[0]: Fraction(1)} if cs else {cdga.unit: Fraction(1)}
        for c in cs[1:]:
            nv = {}
            for x, v in vec.items():
                for z, w in mul.get((x, c), {}).items():
                    nv[z] = nv.get(z, 0) + v * w
            vec = {z: v for z, v in nv.items() if v != 0}
        return vec

    ops = {}
    for k, m in alg.ops.items():
        if m.is_zero():
            continue
        ent: dict = {}
        for key, row in m.entries.items():
            for cs in product(range(Cs.dim), repeat=k):
                prod_vec = cprod(list(cs))
                if not prod_vec:
                    continue
                s = 0
                for i in range(k):
                    if Cs.degrees[cs[i]] & 1:
                        for j in range(i + 1, k):
                            s += A.degrees[key[j]] - 1
                sign = -1 if s & 1 else 1
                nk = tuple(idx[(key[i], cs[i])] for i in range(k))
                t = ent.setdefault(nk, {})
                for o, v in row.items():
                    for z, w in prod_vec.items():
                        q = idx[(o, z)]
                        t[q] = t.get(q, 0) + sign * v * w
        ops[k] = MultiMap((space,) * k, space, 1, ent, symmetric=m.symmetric, check=False)
    # de Rham term
    ent = {}
    for a in range(A.dim):
        sa = A.degrees[a] - 1
        for c in range(Cs.dim):
            for z, w in cdga.d.get(c, {}).items():
                sign = 1 if sa & 1 else -1
                ent.setdefault((idx[(a, c)],), {})[idx[(a, z)]] = sign * w
    dr = MultiMap((space,), space, 1, ent, check=False)
    ops[1] = ops[1] + dr if 1 in ops else dr
    return HomotopyAlgebra(space, ops, alg.flavor, alg.truncation)


def exterior_dt() -> Cdga:
    """``Q[dt]/(dt^2)`` with zero differential (pointwise forms on a line)."""
    sp = GradedSpace(("1", "dt"), (0, 1))
    mul = {(0, 0): {0: Fraction(1)}, (0, 1): {1: Fraction(1)}, (1, 0): {1: Fraction(1)}}
    return Cdga(sp, {}, mul)


# ---------------------------------------------------------------------------
# gauge flow


def gauge_flow(C: Callable[[float], np.ndarray], dim: int, steps: int = 64,
               tol: float = 1e-8, max_halvings: int = 12) -> tuple[np.ndarray, float]:
    """Solve ``dg/dt = g C(t)``, ``g(0) = 1`` on ``[0, 1]`` by classical RK4.

    The step is halved until two successive solutions agree within ``tol``;
    returns the finer solution and the difference as an error estimate.
    """

    def integrate(n):
        g = np.eye(dim)
        hstep = 1.0 / n
        for s in range(n):
            t = s * hstep
            k1 = g @ C(t)
            k2 = (g + 0.5 * hstep * k1) @ C(t + 0.5 * hstep)
            k3 = (g + 0.5 * hstep * k2) @ C(t + 0.5 * hstep)
            k4 = (g + hstep * k3) @ C(t + hstep)
            g = g + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return g

    prev = integrate(steps)
    n = steps
    for _ in range(max_halvings):
        n *= 2
        cur = integrate(n)
        err = float(np.max(np.abs(cur - prev)))
        if err < tol:
            return cur, err
        prev = cur
    raise ArithmeticError(f"gauge flow did not converge (last difference {err:.3e})")
