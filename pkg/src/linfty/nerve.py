"""Polynomial forms on simplices, the convolution algebra and Maurer-Cartan nerves.

Forms on ``Delta^n`` use affine coordinates ``t_1..t_n`` with vertices
``e_0 = 0`` and ``e_k`` the unit vectors; the barycentric coordinate
``t_0 = 1 - sum t_k`` is implicit.  Forms are :class:`SuperRing` elements in
``t_k`` (degree 0) and ``dt_k`` (degree 1).

A cochain in ``C(A, B (x) Omega(Delta^n))`` is stored as components
``psi_k : A^k -> B (x) Lambda[dt_1..dt_n]`` whose coefficients are sympy
polynomials in ``t``.  The target is ``tensor_with_cdga(B, Lambda)``, so the
bracket signs are those of the tensor product; the de Rham part acts as
``(b, w) -> -(-1)^{|b|'} (b, dw)`` and the Dupont homotopy with the same sign.

Maurer-Cartan elements of degree 0 are L-infinity morphisms ``A -> B (x) Omega``
for the total differential ``d + delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from sympy import QQ
from sympy.polys.rings import ring

from .graded import GradedSpace, MultiMap, compose, graft, permute_inputs, shuffles, sum_maps
from .homotopy import (LINF, Cdga, HomotopyAlgebra, HomotopyMorphism, StructureError,
                       _unshuffle_orders, compositions, symmetrize_map, tensor_with_cdga)
from .superpoly import SuperRing


class NerveError(StructureError):
    """Bad simplicial data or a failed precondition."""


# ---------------------------------------------------------------------------
# polynomial forms


@lru_cache(maxsize=None)
def form_ring(n: int) -> SuperRing:
    names = tuple(f"t{k}" for k in range(1, n + 1)) + tuple(f"dt{k}" for k in range(1, n + 1))
    return SuperRing(names, (0,) * n + (1,) * n)


@dataclass(frozen=True)
class PolySimplicialForm:
    """A polynomial differential form on ``Delta^n``."""

    n: int
    data: tuple  # sorted tuple of (monomial, Fraction)

    @classmethod
    def from_dict(cls, n: int, f: dict) -> "PolySimplicialForm":
        return cls(n, tuple(sorted((m, Fraction(c)) for m, c in f.items() if c)))

    @classmethod
    def parse(cls, n: int, text: str) -> "PolySimplicialForm":
        """Parse a string like ``"t1*dt2 - 1/2*t2^2"``."""
        return cls.from_dict(n, _parse_form(form_ring(n), text))

    @property
    def ring(self) -> SuperRing:
        return form_ring(self.n)

    @property
    def dict(self) -> dict:
        return dict(self.data)

    def __add__(self, other):
        return PolySimplicialForm.from_dict(self.n, self.ring.add(self.dict, other.dict))

    def __sub__(self, other):
        return PolySimplicialForm.from_dict(self.n, self.ring.sub(self.dict, other.dict))

    def wedge(self, other):
        return PolySimplicialForm.from_dict(self.n, self.ring.mul(self.dict, other.dict))

    def d(self):
        return PolySimplicialForm.from_dict(self.n, form_d(self.n, self.dict))

    def is_zero(self) -> bool:
        return not self.data

    def degrees(self) -> set:
        return {sum(m[self.n:]) for m, _ in self.data}

    def __str__(self):
        return self.ring.to_str(self.dict)


def _parse_form(R: SuperRing, text: str) -> dict:
    out: dict = {}
    s = text.replace(" ", "").replace("-", "+-")
    for term in s.split("+"):
        if not term:
            continue
        coeff = Fraction(1)
        mono = R.one()
        for fac in term.split("*"):
            if fac in ("", "1"):
                continue
            neg = fac.startswith("-")
            fac = fac.lstrip("-")
            if neg:
                coeff = -coeff
            if not fac:
                continue
            if fac[0].isdigit():
                coeff *= Fraction(fac)
                continue
            name, _, power = fac.partition("^")
            mono = R.mul(mono, R.gen(name, int(power) if power else 1))
        out = R.add(out, R.scale(mono, coeff))
    return out


def form_d(n: int, f: dict) -> dict:
    R = form_ring(n)
    return R.derivation(f, {k: R.gen(n + k) for k in range(n)}, 1)


def epsilon(n: int, i: int, f: dict) -> dict:
    """Evaluation of the function part at vertex ``e_i``."""
    _check_vertex(n, i)
    R = form_ring(n)
    imgs = {k: R.const(1 if k + 1 == i else 0) for k in range(n)}
    imgs.update({n + k: {} for k in range(n)})
    return R.substitute(f, imgs)


def _check_vertex(n: int, i: int):
    if not 0 <= i <= n:
        raise NerveError(f"vertex {i} out of range for Delta^{n}")


@lru_cache(maxsize=None)
def _homotopy_ring(n: int) -> SuperRing:
    R = form_ring(n)
    return SuperRing(R.names + ("u", "du"), R.degrees + (0, 1))


def dupont_h(n: int, i: int, f: dict) -> dict:
    """Dupont's homotopy ``h_n^i``: fiber integration of the pullback along
    ``(u, t) -> u t + (1 - u) e_i``.

    With ``phi^* w = a(u) + b(u) ^ du`` the result is ``int_0^1 b(u) du``,
    so that ``id = eps + d h + h d``.
    """
    _check_vertex(n, i)
    R = form_ring(n)
    G = _homotopy_ring(n)
    u, du = 2 * n, 2 * n + 1
    imgs = {}
    for k in range(n):
        e = 1 if k + 1 == i else 0
        # t_k -> u t_k + (1 - u) e
        tk = G.mul(G.gen(u), G.gen(k))
        if e:
            tk = G.add(tk, G.one(), G.scale(G.gen(u), -1))
        imgs[k] = tk
        # dt_k -> u dt_k + (t_k - e) du
        shift = G.add(G.gen(k), G.const(-e))
        imgs[n + k] = G.add(G.mul(G.gen(u), G.gen(n + k)), G.mul(shift, G.gen(du)))
    lifted = {m + (0, 0): c for m, c in f.items()}
    pulled = G.substitute(lifted, imgs)
    out: dict = {}
    for m, c in pulled.items():
        if not m[du]:
            continue
        rest = m[:2 * n]
        # m = rest * du = (-1)^{|rest|} du * rest
        sign = -1 if R.mono_degree(rest) & 1 else 1
        val = sign * c / (m[u] + 1)
        out[rest] = out.get(rest, 0) + val
    return {m: c for m, c in out.items() if c}


def pullback(n_src: int, n_tgt: int, coords: list, f: dict) -> dict:
    """Pull back a form on ``Delta^n_tgt`` along an affine map from ``Delta^n_src``.

    ``coords[k]`` is the image of target coordinate ``t_(k+1)`` as an affine
    form of degree 0 on the source.
    """
    S = form_ring(n_src)
    T = form_ring(n_tgt)
    imgs = {}
    for k in range(n_tgt):
        imgs[k] = coords[k]
        imgs[n_tgt + k] = form_d(n_src, coords[k])
    return T.substitute(f, imgs, target=S)


def coface_coords(n: int, r: int) -> list:
    """Coordinates of ``d_r : Delta^(n-1) -> Delta^n`` (vertex ``r`` skipped)."""
    if not 0 <= r <= n:
        raise NerveError(f"face index {r} out of range for Delta^{n}")
    S = form_ring(n - 1)
    s = [S.gen(k) for k in range(n - 1)]
    if r == 0:
        first = S.add(S.one(), *[S.scale(x, -1) for x in s])
        return [first] + s
    out = []
    for k in range(1, n + 1):
        if k < r:
            out.append(s[k - 1])
        elif k == r:
            out.append({})
        else:
            out.append(s[k - 2])
    return out


def codegeneracy_coords(n: int, j: int) -> list:
    """Coordinates of ``s_j : Delta^(n+1) -> Delta^n`` (vertices ``j, j+1`` merged)."""
    if not 0 <= j <= n:
        raise NerveError(f"degeneracy index {j} out of range for Delta^{n}")
    S = form_ring(n + 1)
    t = [S.gen(k) for k in range(n + 1)]
    out = []
    for k in range(1, n + 1):
        if j == 0:
            out.append(t[k])            # s_k = t_(k+1)
        elif k < j:
            out.append(t[k - 1])
        elif k == j:
            out.append(S.add(t[j - 1], t[j]))
        else:
            out.append(t[k])
    return out


def face(n: int, r: int, f: dict) -> dict:
    return pullback(n - 1, n, coface_coords(n, r), f)


def degeneracy(n: int, j: int, f: dict) -> dict:
    return pullback(n + 1, n, codegeneracy_coords(n, j), f)


def cm_norm(n: int, f: dict, m: int) -> Fraction:
    """Max absolute coefficient of all coordinate derivatives of order ``<= m``."""
    R = form_ring(n)
    best = Fraction(0)
    layer = [f]
    for _ in range(m + 1):
        nxt = []
        for g in layer:
            for c in g.values():
                if abs(c) > best:
                    best = abs(c)
            for k in range(n):
                dg = R.partial(g, k)
                if dg:
                    nxt.append(dg)
        layer = nxt
        if not layer:
            break
    return best


# ---------------------------------------------------------------------------
# the convolution algebra


def exterior_cdga(n: int) -> tuple[Cdga, list]:
    """``Lambda[dt_1..dt_n]`` with zero differential, basis ``dt_J`` in (size, J) order."""
    subsets = [J for size in range(n + 1) for J in combinations(range(1, n + 1), size)]
    pos = {J: q for q, J in enumerate(subsets)}
    names = tuple("1" if not J else "".join(f"dt{j}" for j in J) for J in subsets)
    sp = GradedSpace(names, tuple(len(J) for J in subsets))
    mul = {}
    for a, J1 in enumerate(subsets):
        for b, J2 in enumerate(subsets):
            if set(J1) & set(J2):
                continue
            inv = sum(1 for x in J1 for y in J2 if x > y)
            mul[(a, b)] = {pos[tuple(sorted(J1 + J2))]: Fraction(-1 if inv & 1 else 1)}
    return Cdga(sp, {}, mul, 0), subsets


@dataclass
class Cochain:
    """Components of a cochain in ``C(A, B (x) Omega(Delta^n))`` of a fixed degree."""

    n: int
    degree: int
    comps: dict

    def comp(self, conv: "ConvolutionAlgebra", k: int) -> MultiMap:
        c = self.comps.get(k)
        if c is None:
            return MultiMap((conv.A.space,) * k, conv.target(self.n).space, self.degree, {}, check=False)
        return c

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps.values())

    def __eq__(self, other):
        if not isinstance(other, Cochain) or self.n != other.n:
            return False
        for k in set(self.comps) | set(other.comps):
            a, b = self.comps.get(k), other.comps.get(k)
            if a is None:
                if not b.is_zero():
                    return False
            elif b is None:
                if not a.is_zero():
                    return False
            elif not (a - b).is_zero():
                return False
        return True

    __hash__ = None


class ConvolutionAlgebra:
    """``C(A, B)`` truncated at word length ``N``, tensored with forms on demand."""

    def __init__(self, A: HomotopyAlgebra, B: HomotopyAlgebra, N: int):
        if A.flavor != LINF or B.flavor != LINF:
            raise NerveError("the convolution algebra needs L-infinity algebras")
        if A.curved or B.curved:
            raise NerveError("curved algebras are not supported")
        if N < 1:
            raise NerveError("word length must be positive")
        self.A, self.B, self.N = A, B, N
        self._targets: dict = {}

    # -- per-simplex data ---------------------------------------------------
    def poly_ring(self, n: int):
        names = ",".join(f"t{k}" for k in range(1, n + 1)) or "t0"
        key = ("P", n)
        if key not in self._targets:
            self._targets[key] = ring(names, QQ)
        return self._targets[key]

    def target(self, n: int) -> HomotopyAlgebra:
        key = ("T", n)
        if key not in self._targets:
            cd, subsets = exterior_cdga(n)
            self._targets[key] = tensor_with_cdga(self.B, cd)
            self._targets[("J", n)] = subsets
        return self._targets[key]

    def subsets(self, n: int) -> list:
        self.target(n)
        return self._targets[("J", n)]

    def split_index(self, n: int, q: int) -> tuple[int, tuple]:
        subs = self.subsets(n)
        return q // len(subs), subs[q % len(subs)]

    def join_index(self, n: int, b: int, J: tuple) -> int:
        subs = self.subsets(n)
        return b * len(subs) + subs.index(J)

    def _lift(self, n: int, c):
        P, *_ = self.poly_ring(n)
        return P(QQ(Fraction(c).numerator, Fraction(c).denominator)) if not hasattr(c, "ring") else c

    # -- constructors ---------------------------------------------------------
    def zero(self, n: int, degree: int = 0) -> Cochain:
        return Cochain(n, degree, {})

    def constant(self, morphism, n: int = 0) -> Cochain:
        """A cochain with constant coefficients from maps ``A^k -> B`` (``{k: MultiMap}``)."""
        comps = morphism.comps if isinstance(morphism, HomotopyMorphism) else morphism
        T = self.target(n)
        deg = None
        out = {}
        for k, f in comps.items():
            if k > self.N:
                continue
            ent = {}
            for key, row in f.entries.items():
                ent[key] = {self.join_index(n, o, ()): self._lift(n, c) for o, c in row.items()}
            deg = f.degree if deg is None else deg
            out[k] = MultiMap((self.A.space,) * k, T.space, f.degree, ent, symmetric=True, check=False)
        return Cochain(n, 0 if deg is None else deg, out)

    def as_morphism(self, c: Cochain) -> HomotopyMorphism:
        """A constant degree-0 cochain on ``Delta^0`` as maps ``A^k -> B``."""
        if c.n != 0:
            raise NerveError("only cochains on a point are plain morphisms")
        comps = {}
        for k, f in c.comps.items():
            ent = {}
            for key, row in f.entries.items():
                ent[key] = {self.split_index(0, q)[0]: _to_frac(v) for q, v in row.items()}
            comps[k] = MultiMap((self.A.space,) * k, self.B.space, 0, ent, symmetric=True)
        return HomotopyMorphism(self.A, self.B, comps, LINF)

    def from_forms(self, n: int, degree: int, table: dict) -> Cochain:
        """Build a cochain from ``{k: {input tuple: {b: form dict}}}`` (all orderings supplied)."""
        T = self.target(n)
        out = {}
        for k, rows in table.items():
            ent = {}
            for key, outs in rows.items():
                row = {}
                for b, f in outs.items():
                    for q, p in self._form_to_polys(n, b, f).items():
                        row[q] = row.get(q, 0) + p
                ent[tuple(key)] = row
            out[k] = MultiMap((self.A.space,) * k, T.space, degree, ent, symmetric=True, check=False)
        return Cochain(n, degree, out)

    # -- form <-> coefficient conversion ---------------------------------------
    def _form_to_polys(self, n: int, b: int, f: dict) -> dict:
        P, *_ = self.poly_ring(n)
        out: dict = {}
        for m, c in f.items():
            J = tuple(k + 1 for k in range(n) if m[n + k])
            q = self.join_index(n, b, J)
            exps = m[:n] if n else (0,)
            out.setdefault(q, {})
            out[q][exps] = out[q].get(exps, 0) + c
        return {q: P.from_dict({e: QQ(c.numerator, c.denominator) for e, c in d.items()})
                for q, d in out.items()}

    def _polys_to_forms(self, n: int, row: dict) -> dict:
        """``{b: form dict}`` from one output row ``{q: poly}``."""
        out: dict = {}
        for q, p in row.items():
            b, J = self.split_index(n, q)
            mask = tuple(1 if k + 1 in J else 0 for k in range(n))
            f = out.setdefault(b, {})
            for exps, c in _poly_terms(p, n):
                m = tuple(exps) + mask
                f[m] = f.get(m, 0) + c
        return out

    def map_forms(self, c: Cochain, op, degree_shift: int, n_out: int | None = None,
                  odd_sign: bool = False) -> Cochain:
        """Apply a form operator output-wise; ``odd_sign`` multiplies by ``-(-1)^{|b|'}``."""
        n_out = c.n if n_out is None else n_out
        T = self.target(n_out)
        Bsp = self.B.space
        out = {}
        for k, f in c.comps.items():
            ent = {}
            for key, row in f.entries.items():
                nrow: dict = {}
                for b, form in self._polys_to_forms(c.n, row).items():
                    g = op(form)
                    if not g:
                        continue
                    if odd_sign and not (Bsp.degrees[b] - 1) & 1:
                        g = {m: -v for m, v in g.items()}
                    for q, p in self._form_to_polys(n_out, b, g).items():
                        nrow[q] = nrow.get(q, 0) + p
                ent[key] = nrow
            out[k] = MultiMap((self.A.space,) * k, T.space, f.degree + degree_shift, ent,
                              symmetric=True, check=False)
        return Cochain(n_out, c.degree + degree_shift, out)

    # -- operators -------------------------------------------------------------
    def d(self, c: Cochain) -> Cochain:
        return self.map_forms(c, lambda f: form_d(c.n, f), 1, odd_sign=True)

    def h(self, c: Cochain, i: int = 0) -> Cochain:
        return self.map_forms(c, lambda f: dupont_h(c.n, i, f), -1, odd_sign=True)

    def eps(self, c: Cochain, i: int = 0) -> Cochain:
        return self.map_forms(c, lambda f: epsilon(c.n, i, f), 0)

    def face(self, c: Cochain, r: int) -> Cochain:
        return self.map_forms(c, lambda f: face(c.n, r, f), 0, n_out=c.n - 1)

    def degeneracy(self, c: Cochain, j: int) -> Cochain:
        return self.map_forms(c, lambda f: degeneracy(c.n, j, f), 0, n_out=c.n + 1)

    def multiply(self, c: Cochain, g: dict) -> Cochain:
        """Multiply every output by a function ``g`` (a form of degree 0) on the right."""
        R = form_ring(c.n)
        return self.map_forms(c, lambda f: R.mul(f, g), 0)

    def add(self, *cs: Cochain) -> Cochain:
        n, deg = cs[0].n, cs[0].degree
        T = self.target(n)
        out = {}
        for k in range(1, self.N + 1):
            maps = [c.comps[k] for c in cs if k in c.comps]
            if maps:
                s = sum_maps(maps, (self.A.space,) * k, T.space, deg)
                s.symmetric = True
                out[k] = s
        return Cochain(n, deg, out)

    def scale(self, c: Cochain, x) -> Cochain:
        return Cochain(c.n, c.degree, {k: f.scale(x) for k, f in c.comps.items()})

    def sub(self, a: Cochain, b: Cochain) -> Cochain:
        return self.add(a, self.scale(b, -1))

    def delta(self, c: Cochain) -> Cochain:
        """``L_1 psi = l_1 o psi - (-1)^{|psi|} psi o Q_A`` (no de Rham part)."""
        n = c.n
        T = self.target(n)
        A = self.A
        out = {}
        sgn = -1 if c.degree & 1 else 1
        for k in range(1, self.N + 1):
            terms = []
            M1 = T.ops.get(1)
            if M1 is not None and not M1.is_zero() and k in c.comps:
                terms.append(compose(M1, c.comps[k], 1))
            for s in range(1, k + 1):
                m = A.ops.get(s)
                f = c.comps.get(k - s + 1)
                if m is None or m.is_zero() or f is None or f.is_zero():
                    continue
                t = compose(f, m, 1)
                for order in _unshuffle_orders([s, k - s]):
                    terms.append(permute_inputs(t, order).scale(-sgn))
            if terms:
                out[k] = sum_maps(terms, (A.space,) * k, T.space, c.degree + 1)
                out[k].symmetric = True
        return Cochain(n, c.degree + 1, out)

    def differential(self, c: Cochain) -> Cochain:
        return self.add(self.d(c), self.delta(c))

    def bracket(self, cs: list) -> Cochain:
        """``L_j(psi_1, .., psi_j)`` for ``j >= 2`` via the iterated coproduct."""
        j = len(cs)
        n = cs[0].n
        T = self.target(n)
        M = T.ops.get(j)
        deg = sum(c.degree for c in cs) + 1
        out = {}
        if M is None or M.is_zero():
            return Cochain(n, deg, {})
        for k in range(j, self.N + 1):
            terms = []
            for parts in compositions(k, j):
                fs = [c.comps.get(p) for c, p in zip(cs, parts)]
                if any(f is None or f.is_zero() for f in fs):
                    continue
                t = graft(M, fs)
                for order in shuffles(list(parts)):
                    terms.append(permute_inputs(t, order))
            if terms:
                out[k] = sum_maps(terms, (self.A.space,) * k, T.space, deg)
                out[k].symmetric = True
        return Cochain(n, deg, out)

    def nonlinear(self, a: Cochain) -> Cochain:
        """``sum_(j >= 2) 1/j! L_j(a, .., a)``."""
        top = max((k for k, m in self.B.ops.items() if not m.is_zero()), default=0)
        parts = []
        for j in range(2, min(top, self.N) + 1):
            br = self.bracket([a] * j)
            if not br.is_zero():
                parts.append(self.scale(br, Fraction(1, math.factorial(j))))
        if not parts:
            return Cochain(a.n, a.degree + 1, {})
        return self.add(*parts)

    def curvature(self, a: Cochain) -> Cochain:
        """The Maurer-Cartan expression ``(d + delta) a + sum 1/j! L_j(a^j)``."""
        return self.add(self.differential(a), self.nonlinear(a))

    def is_mc(self, a: Cochain) -> bool:
        return a.degree == 0 and self.curvature(a).is_zero()

    def restrict(self, c: Cochain, N: int) -> Cochain:
        return Cochain(c.n, c.degree, {k: f for k, f in c.comps.items() if k <= N})


def convolution_linfty(A: HomotopyAlgebra, B: HomotopyAlgebra, N: int) -> ConvolutionAlgebra:
    return ConvolutionAlgebra(A, B, N)


def _poly_terms(p, n: int):
    if not hasattr(p, "terms"):
        yield ((0,) * n, Fraction(p))
        return
    for exps, c in p.terms():
        yield (tuple(exps[:n]) if n else (), Fraction(int(c.numerator), int(c.denominator)))


def _to_frac(v) -> Fraction:
    if hasattr(v, "terms"):
        terms = list(v.terms())
        if len(terms) != 1 or any(terms[0][0]):
            raise NerveError("coefficient is not constant")
        c = terms[0][1]
        return Fraction(int(c.numerator), int(c.denominator))
    return Fraction(v)


# ---------------------------------------------------------------------------
# the bijection MC_n = MC_0 x mc_n


def mc_decompose(conv: ConvolutionAlgebra, alpha: Cochain, i: int = 0) -> tuple[Cochain, Cochain]:
    """``alpha -> (eps_i alpha, (d + delta) h_i alpha)``."""
    if not conv.is_mc(alpha):
        raise NerveError("input is not a Maurer-Cartan element")
    return conv.eps(alpha, i), conv.differential(conv.h(alpha, i))


def check_exact_part(conv: ConvolutionAlgebra, nu: Cochain, i: int = 0):
    """``nu`` lies in ``mc_n`` iff it is closed and vanishes at vertex ``i``."""
    if nu.is_zero():
        return
    if nu.degree != 0:
        raise NerveError("the exact part must have degree 0")
    if not conv.differential(nu).is_zero():
        raise NerveError("the exact part is not (d + delta)-closed")
    if not conv.eps(nu, i).is_zero():
        raise NerveError("the exact part does not vanish at the base vertex")


def mc_reconstruct(conv: ConvolutionAlgebra, mu: Cochain, nu: Cochain, n: int | None = None,
                   i: int = 0, check: bool = True) -> Cochain:
    """The unique ``alpha`` in ``MC_n`` with ``eps_i alpha = mu`` and ``(d+delta) h_i alpha = nu``.

    Iterates ``a <- a_0 - h_i(sum 1/j! L_j(a^j))`` from ``a_0 = mu + nu`` exactly
    ``N`` times (the word-length filtration makes it stabilize) and certifies
    that one more step changes nothing.
    """
    n = nu.n if n is None else n
    if check:
        check_exact_part(conv, nu, i)
    mu_n = _extend_constant(conv, mu, n)
    if check and not conv.is_mc(_extend_constant(conv, mu, 0)):
        raise NerveError("the vertex value is not Maurer-Cartan")
    a0 = conv.add(mu_n, nu) if not nu.is_zero() else mu_n
    a = a0
    for _ in range(conv.N):
        nxt = conv.sub(a0, conv.h(conv.nonlinear(a), i))
        if nxt == a:
            break
        a = nxt
    final = conv.sub(a0, conv.h(conv.nonlinear(a), i))
    if final != a:
        raise NerveError("fixed-point iteration did not stabilize")
    return a


def exact_part(conv: ConvolutionAlgebra, beta: Cochain, n: int, i: int = 0) -> Cochain:
    """``(d + delta)(g beta)`` for a constant degree -1 ``beta`` on a point and a
    coordinate function ``g`` vanishing at vertex ``i``; an element of ``mc_n``."""
    if beta.degree != -1:
        raise NerveError("the primitive must have degree -1")
    R = form_ring(n)
    if n == 0:
        return conv.zero(0, 0)
    g = R.gen(0) if i != 1 else R.add(R.gen(0), R.const(-1))
    eta = conv.multiply(_extend_constant(conv, beta, n), g)
    return conv.differential(eta)


def _extend_constant(conv: ConvolutionAlgebra, c: Cochain, n: int) -> Cochain:
    """Pull a cochain on a vertex back to ``Delta^n`` (constant forms)."""
    if c.n == n:
        return c
    if c.n != 0:
        raise NerveError("can only extend cochains from a point")
    out = c
    for m in range(n):
        out = conv.degeneracy(out, 0)
    return out


# ---------------------------------------------------------------------------
# tree formula for a single binary bracket


def _nonplanar_trees(w: int) -> list:
    """Nonplanar binary trees with ``w`` internal vertices as nested tuples (canonical)."""
    if w == 0:
        return ["L"]
    out = set()
    for a in range(w):
        b = w - 1 - a
        for left in _nonplanar_trees(a):
            for right in _nonplanar_trees(b):
                out.add(tuple(sorted((left, right), key=repr)))
    return sorted(out, key=repr)


def _aut(t) -> int:
    if t == "L":
        return 1
    left, right = t
    return _aut(left) * _aut(right) * (2 if left == right else 1)


def tree_formula(conv: ConvolutionAlgebra, a0: Cochain, i: int = 0) -> Cochain:
    """``sum_T (-1)^{#white} / |Aut T| rho_T`` for ``B`` with a single bracket ``l_2``.

    White vertices carry ``h_i l_2`` and every leaf carries the whole ``a_0``.
    """
    others = [k for k, m in conv.B.ops.items() if k != 2 and not m.is_zero()]
    if others:
        raise NerveError("the tree formula here covers a single binary bracket")
    total = [a0]
    cache: dict = {}

    def rho(t):
        key = repr(t)
        if key not in cache:
            if t == "L":
                cache[key] = a0
            else:
                left, right = t
                cache[key] = conv.h(conv.bracket([rho(left), rho(right)]), i)
        return cache[key]

    for w in range(1, conv.N):
        for t in _nonplanar_trees(w):
            total.append(conv.scale(rho(t), Fraction((-1) ** w, _aut(t))))
    return conv.add(*total)


# ---------------------------------------------------------------------------
# horn filling


def horn_compatibility(conv: ConvolutionAlgebra, faces: dict, n: int, j: int) -> list:
    """Pairs ``(s, t)`` violating ``d_s x_t = d_(t-1) x_s``."""
    bad = []
    idx = sorted(faces)
    for s in idx:
        for t in idx:
            if s < t and n - 1 >= 1:
                if conv.face(faces[t], s) != conv.face(faces[s], t - 1):
                    bad.append((s, t))
    return bad


def linear_filler(conv: ConvolutionAlgebra, faces: dict, n: int, j: int) -> Cochain:
    """A filler in the simplicial vector space ``C(A, B (x) Omega(Delta^.))``.

    Standard simplicial-group recursion: for ``r < j`` correct face ``r`` with
    the degeneracy ``s_r``; then for ``r = n .. j+1`` with ``s_(r-1)``.
    """
    g = conv.zero(n, 0)
    for r in range(0, j):
        diff = conv.sub(conv.face(g, r), faces[r]) if g.comps else conv.scale(faces[r], -1)
        g = conv.sub(g, conv.degeneracy(diff, r))
    for r in range(n, j, -1):
        diff = conv.sub(conv.face(g, r), faces[r]) if g.comps else conv.scale(faces[r], -1)
        g = conv.sub(g, conv.degeneracy(diff, r - 1))
    return g


@dataclass
class HornFill:
    filler: Cochain
    linear: Cochain
    face_checks: dict
    is_mc: bool
    ledger: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.is_mc and all(self.face_checks.values())


def horn_fill(conv: ConvolutionAlgebra, faces: dict, n: int, j: int, ledger_m: int = 2) -> HornFill:
    """Fill the horn ``Lambda^n_j`` given by ``faces = {r: x_r}`` (``r != j``).

    The linear filler is projected to ``MC_n`` through the bijection at base
    vertex ``j``, which lies on every given face.
    """
    if not 0 <= j <= n or n < 1:
        raise NerveError("bad horn indices")
    want = set(range(n + 1)) - {j}
    if set(faces) != want:
        raise NerveError(f"horn needs faces {sorted(want)}")
    for r, x in faces.items():
        if x.n != n - 1 or x.degree != 0:
            raise NerveError(f"face {r} must be a degree-0 cochain on Delta^{n - 1}")
        if not conv.is_mc(x):
            raise NerveError(f"face {r} is not Maurer-Cartan")
    bad = horn_compatibility(conv, faces, n, j)
    if bad:
        raise NerveError(f"incompatible faces {bad[0]}")
    lin = linear_filler(conv, faces, n, j)
    mu = conv.eps(lin, j)
    hb = conv.h(lin, j)
    nu = conv.differential(hb)
    mu0 = _vertex_value(conv, mu, n, j)
    alpha = mc_reconstruct(conv, mu0, nu, n, j)
    checks = {r: conv.face(alpha, r) == faces[r] for r in sorted(faces)}
    stages = [lin, hb, nu, alpha]
    led = {
        "h_bound": all(ledger_h_check(conv, c, j, ledger_m) for c in stages),
        "d_bound": all(ledger_d_check(conv, c, ledger_m) for c in stages),
        "filler": cochain_ledger(conv, alpha, ledger_m),
    }
    return HornFill(alpha, lin, checks, conv.is_mc(alpha), led)


def sample_horn(conv: ConvolutionAlgebra, mu: Cochain, n: int, j: int, rng) -> dict:
    """Faces ``r != j`` of a random ``n``-simplex of ``MC`` based at the constant ``mu``."""
    beta = random_cochain(conv, -1, rng)
    full = mc_reconstruct(conv, mu, exact_part(conv, beta, n, 0), n, 0)
    return {r: conv.face(full, r) for r in range(n + 1) if r != j}


def horn_to_json(conv: ConvolutionAlgebra, faces: dict) -> dict:
    return {"N": conv.N, "faces": {str(r): cochain_to_json(conv, x) for r, x in sorted(faces.items())}}


def _vertex_value(conv: ConvolutionAlgebra, c: Cochain, n: int, i: int) -> Cochain:
    """Restrict a constant cochain on ``Delta^n`` to the point ``e_i``."""
    out = c
    for m in range(n, 0, -1):
        # keep vertex i: drop a face not containing it
        r = m if i < m else 0
        out = conv.face(out, r)
        if r == 0:
            i -= 1
    return out


# ---------------------------------------------------------------------------
# bounded-cochain ledgers


def cochain_ledger(conv: ConvolutionAlgebra, c: Cochain, m_max: int = 2, C=1) -> dict:
    """Per-arity ``C^m`` norms and the least ``D_m`` with ``||c_k||_m <= D_m k! C^k``."""
    C = Fraction(C)
    norms = {}
    for k, f in sorted(c.comps.items()):
        norms[k] = {m: component_norm(conv, c.n, f, m) for m in range(m_max + 1)}
    D = {m: max((norms[k][m] / (math.factorial(k) * C ** k) for k in norms), default=Fraction(0))
         for m in range(m_max + 1)}
    return {"norms": norms, "D": D, "C": C}


def component_norm(conv: ConvolutionAlgebra, n: int, f: MultiMap, m: int) -> Fraction:
    best = Fraction(0)
    for row in f.entries.values():
        for form in conv._polys_to_forms(n, row).values():
            best = max(best, cm_norm(n, form, m))
    return best


def ledger_h_check(conv: ConvolutionAlgebra, c: Cochain, i: int, m_max: int = 2) -> bool:
    """``||h c_k||_m <= 2 ||c_k||_m`` for every arity and ``m <= m_max``."""
    hc = conv.h(c, i)
    for k, f in c.comps.items():
        g = hc.comps.get(k)
        if g is None:
            continue
        for m in range(m_max + 1):
            if component_norm(conv, c.n, g, m) > 2 * component_norm(conv, c.n, f, m):
                return False
    return True


def ledger_d_check(conv: ConvolutionAlgebra, c: Cochain, m_max: int = 2) -> bool:
    """``||d c_k||_m <= ||c_k||_(m+1)``."""
    dc = conv.d(c)
    for k, f in c.comps.items():
        g = dc.comps.get(k)
        if g is None:
            continue
        for m in range(m_max + 1):
            if component_norm(conv, c.n, g, m) > component_norm(conv, c.n, f, m + 1):
                return False
    return True


# ---------------------------------------------------------------------------
# samples


def random_cochain(conv: ConvolutionAlgebra, degree: int, rng, n: int = 0, spread: int = 2) -> Cochain:
    """A random symmetric cochain with constant coefficients."""
    A, T = conv.A.space, conv.target(n).space
    out = {}
    for k in range(1, conv.N + 1):
        ent = {}
        for key in _sorted_keys(A.dim, k):
            s = sum(A.degrees[x] - 1 for x in key) + degree
            outs = [q for q in range(T.dim) if T.degrees[q] - 1 == s]
            row = {}
            for q in outs:
                if rng.random() < 0.5:
                    row[q] = Fraction(rng.randint(-spread, spread))
            if row:
                ent[key] = row
        raw = MultiMap((A,) * k, T, degree, ent, check=False)
        sym = symmetrize_map(raw)
        sym = sym.scale(Fraction(1, math.factorial(k)))
        sym.symmetric = True
        out[k] = sym.map_coeffs(lambda c, n=n: conv._lift(n, c))
    return Cochain(n, degree, out)


def _sorted_keys(dim: int, k: int):
    from itertools import combinations_with_replacement
    return list(combinations_with_replacement(range(dim), k))


def relation_defect(conv: ConvolutionAlgebra, elems: list) -> bool:
    """Check the L-infinity relation of arity ``len(elems)`` on given cochains (``n = 0``).

    ``sum_(i+j=m+1) sum_unshuffles eps L_i(L_j(x_S), x_rest) = 0`` where ``L_1`` is ``delta``.
    """
    m = len(elems)
    total = None
    degs = [e.degree for e in elems]
    for size in range(1, m + 1):
        for S in combinations(range(m), size):
            rest = [q for q in range(m) if q not in S]
            order = list(S) + rest
            sign = _koszul(order, degs)
            inner = conv.delta(elems[S[0]]) if size == 1 else conv.bracket([elems[q] for q in S])
            if not rest:
                outer = conv.delta(inner)
            else:
                outer = conv.bracket([inner] + [elems[q] for q in rest])
            term = conv.scale(outer, sign)
            total = term if total is None else conv.add(total, term)
    return total.is_zero()


def _koszul(order, degs) -> int:
    from .graded import koszul_sign
    return koszul_sign(order, [degs[q] for q in range(len(degs))])


# ---------------------------------------------------------------------------
# serialization


def cochain_to_json(conv: ConvolutionAlgebra, c: Cochain) -> dict:
    """Entries ``{"in": [...], "out": b, "form": "..."}`` with sorted input keys only."""
    A, B = conv.A.space, conv.B.space
    R = form_ring(c.n)
    comps = {}
    for k, f in sorted(c.comps.items()):
        rows = []
        for key in sorted(f.entries):
            if list(key) != sorted(key):
                continue
            for b, form in sorted(conv._polys_to_forms(c.n, f.entries[key]).items()):
                form = {m: v for m, v in form.items() if v}
                if form:
                    rows.append({"in": [A.names[i] for i in key], "out": B.names[b],
                                 "form": R.to_str(form)})
        if rows:
            comps[str(k)] = rows
    return {"n": c.n, "degree": c.degree, "components": comps}


def cochain_from_json(conv: ConvolutionAlgebra, data: dict) -> Cochain:
    """Inverse of :func:`cochain_to_json`; other orderings get the Koszul sign."""
    from itertools import permutations
    from .graded import koszul_sign
    for fld in ("n", "degree", "components"):
        if fld not in data:
            raise NerveError(f"cochain is missing {fld!r}")
    n, degree = int(data["n"]), int(data["degree"])
    A, B = conv.A.space, conv.B.space
    R = form_ring(n)
    table: dict = {}
    for ks, rows in data["components"].items():
        k = int(ks)
        if not 1 <= k <= conv.N:
            raise NerveError(f"arity {k} outside 1..{conv.N}")
        tab = table.setdefault(k, {})
        for pos, row in enumerate(rows):
            ins = row.get("in")
            if not isinstance(ins, list) or len(ins) != k:
                raise NerveError(f"components[{ks}][{pos}].in must list {k} names")
            key = tuple(A.index(x) for x in ins)
            b = B.index(row.get("out"))
            form = _parse_form(R, str(row.get("form", "0")))
            sdeg = [A.degrees[i] - 1 for i in key]
            seen = set()
            for perm in permutations(range(k)):
                nk = tuple(key[q] for q in perm)
                if nk in seen:
                    continue
                seen.add(nk)
                sgn = koszul_sign(list(perm), sdeg)
                outs = tab.setdefault(nk, {})
                outs[b] = R.add(outs.get(b, {}), R.scale(form, sgn))
    return conv.from_forms(n, degree, table)


__all__ = [
    "NerveError", "PolySimplicialForm", "form_ring", "form_d", "epsilon", "dupont_h", "pullback",
    "coface_coords", "codegeneracy_coords", "face", "degeneracy", "cm_norm", "exterior_cdga",
    "Cochain", "ConvolutionAlgebra", "convolution_linfty", "mc_decompose", "check_exact_part",
    "mc_reconstruct", "exact_part", "tree_formula", "horn_compatibility", "linear_filler", "HornFill", "horn_fill",
    "cochain_ledger", "component_norm", "ledger_h_check", "ledger_d_check", "random_cochain",
    "relation_defect", "cochain_to_json", "sample_horn", "horn_to_json", "cochain_from_json",
]
