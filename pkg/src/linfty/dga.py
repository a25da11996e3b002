"""Constructors for finite dg algebras and a seeded corpus of examples.

Inputs are given in ordinary (unshifted) conventions and converted to the
shifted maps used everywhere else:

    m1(sa) = s(da),    m2(sa, sb) = (-1)^(|a| - 1) s(ab).
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .graded import GradedSpace, MultiMap
from .homotopy import AINF, HomotopyAlgebra, check_dg_algebra
from . import linalg


def from_unshifted(space: GradedSpace, d: dict, mul: dict, unit: dict | None = None,
                   check: bool = True) -> HomotopyAlgebra:
    """Build a dg algebra from an ordinary differential and product.

    ``d`` maps a basis index to ``{index: coeff}`` and ``mul`` maps an index
    pair to ``{index: coeff}``.
    """
    e1 = {}
    for a, row in d.items():
        row = {o: Fraction(c) for o, c in row.items() if c != 0}
        if row:
            e1[(a,)] = row
    e2 = {}
    for (a, b), row in mul.items():
        sign = -1 if (space.degrees[a] - 1) & 1 else 1
        row = {o: sign * Fraction(c) for o, c in row.items() if c != 0}
        if row:
            e2[(a, b)] = row
    ops = {1: MultiMap((space,), space, 1, e1), 2: MultiMap((space,) * 2, space, 1, e2)}
    alg = HomotopyAlgebra(space, ops, AINF, unit=unit)
    if check:
        check_dg_algebra(alg)
    return alg


def to_unshifted(alg: HomotopyAlgebra) -> tuple[dict, dict]:
    sp = alg.space
    d = {a: dict(row) for (a,), row in alg.m1.entries.items()}
    mul = {}
    for (a, b), row in alg.m2.entries.items():
        sign = -1 if (sp.degrees[a] - 1) & 1 else 1
        mul[(a, b)] = {o: sign * c for o, c in row.items()}
    return d, mul


def named(space: GradedSpace, d_named: dict, mul_named: dict, unit_named=None) -> HomotopyAlgebra:
    """Like :func:`from_unshifted` with basis names instead of indices."""
    ix = space.index
    d = {ix(a): {ix(o): c for o, c in row.items()} for a, row in d_named.items()}
    mul = {(ix(a), ix(b)): {ix(o): c for o, c in row.items()} for (a, b), row in mul_named.items()}
    unit = None
    if unit_named is not None:
        unit = {ix(o): Fraction(c) for o, c in unit_named.items()}
    return from_unshifted(space, d, mul, unit)


# ---------------------------------------------------------------------------
# building blocks


def simplicial_cochains(simplices: list[tuple[int, ...]], prefix: str = "") -> HomotopyAlgebra:
    """Normalized cochains of an ordered simplicial complex with the cup product.

    ``simplices`` must be closed under taking faces; each simplex is a sorted
    vertex tuple.  The basis element dual to ``s`` has degree ``len(s) - 1``.
    """
    simplices = sorted(set(tuple(s) for s in simplices), key=lambda s: (len(s), s))
    pos = {s: i for i, s in enumerate(simplices)}
    names = tuple(prefix + "c" + "".join(map(str, s)) for s in simplices)
    space = GradedSpace(names, tuple(len(s) - 1 for s in simplices))
    d = {}
    for s in simplices:
        # (delta f)(t) = sum_i (-1)^i f(d_i t); dual: the cochain of s maps to cofaces
        for t in simplices:
            if len(t) == len(s) + 1:
                for i in range(len(t)):
                    if t[:i] + t[i + 1:] == s:
                        row = d.setdefault(pos[s], {})
                        row[pos[t]] = row.get(pos[t], 0) + (-1) ** i
    mul = {}
    for s in simplices:
        for t in simplices:
            if s[-1] == t[0]:
                u = s + t[1:]
                if u in pos:
                    mul[(pos[s], pos[t])] = {pos[u]: 1}
    verts = [pos[s] for s in simplices if len(s) == 1]
    unit = {v: Fraction(1) for v in verts}
    return from_unshifted(space, d, mul, unit)


def faces_closure(top: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    out = set()
    for s in top:
        for r in range(1, len(s) + 1):
            out.update(combinations(s, r))
    return sorted(out, key=lambda s: (len(s), s))


def exterior(degree: int, name: str = "e") -> HomotopyAlgebra:
    """``Q[e]/(e^2)`` with ``|e| = degree`` and zero differential."""
    space = GradedSpace(("1" + name, name), (0, degree))
    mul = {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}
    return from_unshifted(space, {}, mul, {0: Fraction(1)})


def massey() -> HomotopyAlgebra:
    """Four-dimensional dg algebra with a nontrivial triple Massey product.

    ``x, u`` in degree 1, ``w, s`` in degree 2; ``du = x x = w`` and
    ``x u = s``.  Cohomology is spanned by ``x`` and ``s`` and the transferred
    ``m_3(x, x, x)`` is a nonzero multiple of ``s``.
    """
    space = GradedSpace(("x", "u", "w", "s"), (1, 1, 2, 2))
    return named(space, {"u": {"w": 1}}, {("x", "x"): {"w": 1}, ("x", "u"): {"s": 1}})


def tensor(a: HomotopyAlgebra, b: HomotopyAlgebra) -> HomotopyAlgebra:
    """Tensor product of two dg algebras (Koszul signs in ordinary degrees)."""
    da, ma = to_unshifted(a)
    db, mb = to_unshifted(b)
    A, B = a.space, b.space
    pairs = [(i, j) for i in range(A.dim) for j in range(B.dim)]
    ix = {p: n for n, p in enumerate(pairs)}
    space = GradedSpace(tuple(f"{A.names[i]}*{B.names[j]}" for i, j in pairs),
                        tuple(A.degrees[i] + B.degrees[j] for i, j in pairs))
    d = {}
    for (i, j), n in ix.items():
        row = {}
        for o, c in da.get(i, {}).items():
            row[ix[(o, j)]] = row.get(ix[(o, j)], 0) + c
        for o, c in db.get(j, {}).items():
            s = -1 if A.degrees[i] & 1 else 1
            row[ix[(i, o)]] = row.get(ix[(i, o)], 0) + s * c
        if row:
            d[n] = row
    mul = {}
    for (i1, i2), r1 in ma.items():
        for (j1, j2), r2 in mb.items():
            s = -1 if (B.degrees[j1] * A.degrees[i2]) & 1 else 1
            row = {}
            for o1, c1 in r1.items():
                for o2, c2 in r2.items():
                    q = ix[(o1, o2)]
                    row[q] = row.get(q, 0) + s * c1 * c2
            mul[(ix[(i1, j1)], ix[(i2, j2)])] = row
    unit = None
    if a.unit and b.unit:
        unit = {ix[(i, j)]: ci * cj for i, ci in a.unit.items() for j, cj in b.unit.items()}
    return from_unshifted(space, d, mul, unit)


def direct_sum(a: HomotopyAlgebra, b: HomotopyAlgebra) -> HomotopyAlgebra:
    na = a.space.dim
    space = GradedSpace(a.space.names + tuple("b." + n for n in b.space.names),
                        a.space.degrees + b.space.degrees)
    ops = {}
    for k in (1, 2):
        ent = dict(a.op(k).entries)
        for key, row in b.op(k).entries.items():
            ent[tuple(x + na for x in key)] = {o + na: c for o, c in row.items()}
        ops[k] = MultiMap((space,) * k, space, 1, ent)
    return HomotopyAlgebra(space, ops, AINF)


def change_basis(alg: HomotopyAlgebra, g: list[list[Fraction]], names=None) -> HomotopyAlgebra:
    """Re-express the structure in the basis ``f_j = sum_i g[i][j] e_i``.

    ``g`` must be invertible and preserve degrees.  The new basis is declared
    orthonormal, so the Hodge data changes even though the algebra does not.
    """
    sp = alg.space
    n = sp.dim
    for i in range(n):
        for j in range(n):
            if g[i][j] != 0 and sp.degrees[i] != sp.degrees[j]:
                raise ValueError("basis change must preserve degrees")
    ginv = linalg.inverse(g)
    new_space = GradedSpace(tuple(names) if names else tuple(f"f{j}" for j in range(n)), sp.degrees)
    col = [{i: g[i][j] for i in range(n) if g[i][j] != 0} for j in range(n)]
    ops = {}
    for k, m in alg.ops.items():
        from itertools import product as iprod
        out = {}
        for keyn in iprod(range(n), repeat=k):
            vecs = [col[j] for j in keyn]
            val = m.apply(*vecs) if k else dict(m.entries.get((), {}))
            if not val:
                continue
            newrow = {}
            for o, c in val.items():
                for q in range(n):
                    w = ginv[q][o]
                    if w:
                        newrow[q] = newrow.get(q, 0) + w * c
            newrow = {q: c for q, c in newrow.items() if c != 0}
            if newrow:
                out[keyn] = newrow
        ops[k] = MultiMap((new_space,) * k, new_space, m.degree, out)
    unit = None
    if alg.unit:
        unit = {}
        for o, c in alg.unit.items():
            for q in range(n):
                if ginv[q][o]:
                    unit[q] = unit.get(q, 0) + ginv[q][o] * c
        unit = {q: c for q, c in unit.items() if c != 0}
    return HomotopyAlgebra(new_space, ops, alg.flavor, alg.truncation, unit=unit)


def random_basis_change(space: GradedSpace, rng: random.Random, spread: int = 2) -> list[list[Fraction]]:
    """A random invertible degree-preserving rational matrix, unitriangular per degree block."""
    n = space.dim
    g = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for deg in sorted(set(space.degrees)):
        idx = space.indices_of_degree(deg)
        perm = idx[:]
        rng.shuffle(perm)
        for a_pos, a in enumerate(perm):
            for b in perm[a_pos + 1:]:
                if rng.random() < 0.6:
                    num = rng.randint(-spread, spread)
                    den = rng.choice([1, 1, 2, 3])
                    g[a][b] = Fraction(num, den)
    return g


# ---------------------------------------------------------------------------
# corpus


def base_algebras() -> dict:
    """Named small dg algebras with degrees in 0..3 and dimension at most 8."""
    interval = simplicial_cochains(faces_closure([(0, 1)]))
    circle = simplicial_cochains(faces_closure([(0, 1), (1, 2), (0, 2)]))
    triangle = simplicial_cochains(faces_closure([(0, 1, 2)]))
    path = simplicial_cochains(faces_closure([(0, 1), (1, 2)]))
    return {
        "interval": interval,
        "circle": circle,
        "triangle": triangle,
        "path": path,
        "massey": massey(),
        "interval_x_ext2": tensor(interval, exterior(2)),
        "massey_x_ext1": tensor(massey(), exterior(1)),
        "circle_plus_ext3": direct_sum(circle, exterior(3, "z")),
        "ext1_cubed": tensor(tensor(exterior(1, "a"), exterior(1, "b")), exterior(1, "c")),
        "massey_plus_ext2": direct_sum(massey(), exterior(2, "y")),
    }


def random_dg_algebra(seed: int, max_dim: int = 8) -> HomotopyAlgebra:
    """A seeded random dg algebra: a corpus base algebra in a random rational basis."""
    rng = random.Random(seed)
    bases = {k: v for k, v in base_algebras().items() if v.space.dim <= max_dim}
    name = sorted(bases)[rng.randrange(len(bases))]
    alg = bases[name]
    g = random_basis_change(alg.space, rng)
    out = change_basis(alg, g)
    check_dg_algebra(out)
    return out


def corpus(count: int = 25, seed: int = 0, max_dim: int = 8) -> list[HomotopyAlgebra]:
    return [random_dg_algebra(seed * 1000 + n, max_dim) for n in range(count)]
