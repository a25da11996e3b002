"""Example local models with pairings, used by tests, demos and the CLI self-test."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, product

from . import linalg
from .dga import change_basis, from_unshifted, random_basis_change, to_unshifted
from .graded import GradedSpace, MultiMap
from .homotopy import AINF, LINF, HomotopyAlgebra
from .kuranishi import CyclicPairing, LocalModel


def exterior_frobenius(n: int, prefix: str = "e"):
    """The exterior algebra on ``n`` degree-one generators, paired into the top form.

    This is the cohomology of the ``n``-torus with its Poincare pairing.
    """
    subsets = [s for r in range(n + 1) for s in combinations(range(n), r)]
    names = tuple(prefix + "".join(map(str, s)) if s else "1" for s in subsets)
    space = GradedSpace(names, tuple(len(s) for s in subsets))
    pos = {s: i for i, s in enumerate(subsets)}
    mul = {}
    for s in subsets:
        for t in subsets:
            if set(s) & set(t):
                continue
            seq = list(s) + list(t)
            inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
            mul[(pos[s], pos[t])] = {pos[tuple(sorted(seq))]: (-1) ** inv}
    alg = from_unshifted(space, {}, mul, {0: Fraction(1)})
    return alg, CyclicPairing(space, _top_pairing(mul, pos[tuple(range(n))]), {0: Fraction(1)})


def _top_pairing(mul: dict, top: int) -> dict:
    return {(a, b): row[top] for (a, b), row in mul.items() if top in row}


def sphere(d: int):
    space = GradedSpace(("1", "v"), (0, d))
    mul = {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}
    alg = from_unshifted(space, {}, mul, {0: Fraction(1)})
    return alg, CyclicPairing(space, {(0, 1): 1, (1, 0): 1}, {0: Fraction(1)})


def frobenius_product(x, y):
    """Tensor product of two paired algebras with the product pairing."""
    from .dga import tensor

    (a, pa), (b, pb) = x, y
    alg = tensor(a, b)
    A, B = a.space, b.space
    ix = lambda i, j: i * B.dim + j  # noqa: E731  matches dga.tensor ordering
    gram = {}
    for (i1, i2), c1 in pa.gram.items():
        for (j1, j2), c2 in pb.gram.items():
            s = (-1) ** (B.degrees[j1] * A.degrees[i2])
            gram[(ix(i1, j1), ix(i2, j2))] = s * c1 * c2
    unit = {ix(i, j): ci * cj for i, ci in (pa.unit or {}).items() for j, cj in (pb.unit or {}).items()}
    return alg, CyclicPairing(alg.space, gram, unit or None)


def matrix_valued(x, n: int = 2):
    """``A (x) Mat_n`` with the pairing ``<a (x) M, b (x) N> = <a, b> tr(MN)``."""
    a, pa = x
    d, mul = to_unshifted(a)
    A = a.space
    E = [(i, j) for i in range(n) for j in range(n)]
    pairs = [(p, e) for p in range(A.dim) for e in E]
    ix = {p: k for k, p in enumerate(pairs)}
    space = GradedSpace(tuple(f"{A.names[p]}.E{e[0]}{e[1]}" for p, e in pairs),
                        tuple(A.degrees[p] for p, e in pairs))
    newmul = {}
    for (p, q), row in mul.items():
        for e in E:
            for f in E:
                if e[1] != f[0]:
                    continue
                g = (e[0], f[1])
                newmul[(ix[(p, e)], ix[(q, f)])] = {ix[(o, g)]: c for o, c in row.items()}
    newd = {}
    for p, row in d.items():
        for e in E:
            newd[ix[(p, e)]] = {ix[(o, e)]: c for o, c in row.items()}
    unit = None
    if pa.unit:
        unit = {ix[(p, (i, i))]: c for p, c in pa.unit.items() for i in range(n)}
    alg = from_unshifted(space, newd, newmul, unit)
    gram = {}
    for (p, q), c in pa.gram.items():
        for e in E:
            gram[(ix[(p, e)], ix[(q, (e[1], e[0]))])] = c
    return alg, CyclicPairing(space, gram, unit)


def rebase(x, rng: random.Random):
    """The same paired algebra in a random rational basis."""
    a, pa = x
    g = random_basis_change(a.space, rng)
    b = change_basis(a, g)
    n = a.space.dim
    gram = {}
    for i, j in product(range(n), repeat=2):
        c = sum(g[p][i] * pa.gram.get((p, q), 0) * g[q][j] for p in range(n) for q in range(n)
                if g[p][i] and g[q][j])
        if c:
            gram[(i, j)] = c
    unit = None
    if pa.unit:
        ginv = linalg.inverse(g)
        unit = {}
        for p, c in pa.unit.items():
            for q in range(n):
                if ginv[q][p]:
                    unit[q] = unit.get(q, 0) + ginv[q][p] * c
        unit = {q: c for q, c in unit.items() if c} or None
    b.unit = unit
    return b, CyclicPairing(b.space, gram, unit)


# ---------------------------------------------------------------------------
# dimension 2


def surface(genus: int):
    """Cohomology of a closed orientable surface of the given genus."""
    names = ["1"] + [f"a{i}" for i in range(genus)] + [f"b{i}" for i in range(genus)] + ["vol"]
    degs = [0] + [1] * (2 * genus) + [2]
    space = GradedSpace(tuple(names), tuple(degs))
    ix = space.index
    mul = {}
    for i in range(space.dim):
        mul[(0, i)] = {i: 1}
        mul[(i, 0)] = {i: 1}
    for i in range(genus):
        mul[(ix(f"a{i}"), ix(f"b{i}"))] = {ix("vol"): 1}
        mul[(ix(f"b{i}"), ix(f"a{i}"))] = {ix("vol"): -1}
    alg = from_unshifted(space, {}, mul, {0: Fraction(1)})
    gram = _top_pairing(mul, ix("vol"))
    return alg, CyclicPairing(space, gram, {0: Fraction(1)})


def dim2_corpus(count: int = 6, seed: int = 0) -> list[LocalModel]:
    """Unital cyclic surface-type models, some in random bases, some matrix valued."""
    rng = random.Random(seed)
    out = []
    for g in range(count):
        genus = g % 3 + 1
        x = surface(genus)
        if g % 2:
            x = rebase(x, rng)
        out.append(LocalModel(x[0], x[1], 4, f"surface{genus}"))
    out.append(LocalModel(*matrix_valued(surface(1)), 3, "surface1_mat2"))
    return out


def nonunital_control() -> LocalModel:
    """Degrees 0..2 with ``m_3(x, x, x) = s(y)`` and no unit: ``<kappa, e> = b1^3``.

    Four-dimensional because a nondegenerate graded-symmetric pairing is
    antisymmetric on degree one and so needs an even-dimensional degree-one part.
    """
    space = GradedSpace(("e", "x1", "x2", "y"), (0, 1, 1, 2))
    m3 = MultiMap((space,) * 3, space, 1, {(1, 1, 1): {3: Fraction(1)}})
    alg = HomotopyAlgebra(space, {3: m3}, AINF)
    gram = {(0, 3): 1, (3, 0): 1, (1, 2): 1, (2, 1): -1}
    return LocalModel(alg, CyclicPairing(space, gram, {0: Fraction(1)}), 4, "nonunital")


# ---------------------------------------------------------------------------
# dimension 3


def cyclic_dim3(tensors: dict, m: int, flavor: str = AINF, name: str = "") -> LocalModel:
    """Degrees 1 and 2 with ``<x_i, y_j> = delta_ij`` and ``m_k(x..x) = sum_j T(j, ..) y_j``.

    ``tensors[k]`` maps index tuples ``(j, i_1, .., i_k)`` to coefficients and
    must be invariant under cyclic rotation for the model to be cyclic.
    """
    names = tuple(f"x{i + 1}" for i in range(m)) + tuple(f"y{i + 1}" for i in range(m))
    space = GradedSpace(names, (1,) * m + (2,) * m)
    ops = {}
    for k, T in tensors.items():
        ent: dict = {}
        for key, c in T.items():
            j, ins = key[0], key[1:]
            if c:
                row = ent.setdefault(tuple(ins), {})
                row[m + j] = row.get(m + j, 0) + Fraction(c)
        ops[k] = MultiMap((space,) * k, space, 1, ent, symmetric=flavor == LINF)
    gram = {}
    for i in range(m):
        gram[(i, m + i)] = 1
        gram[(m + i, i)] = 1
    alg = HomotopyAlgebra(space, ops, flavor)
    return LocalModel(alg, CyclicPairing(space, gram), 4, name)


def random_cyclic_tensor(rng: random.Random, m: int, k: int, symmetric: bool = False) -> dict:
    """A random integer tensor on ``k + 1`` indices invariant under rotation (or all permutations)."""
    from itertools import permutations

    T: dict = {}
    for key in product(range(m), repeat=k + 1):
        if rng.random() < 0.5:
            continue
        c = rng.randint(-3, 3)
        orbit = set(permutations(key)) if symmetric else {key[r:] + key[:r] for r in range(k + 1)}
        for o in orbit:
            T[o] = T.get(o, 0) + c
    return {key: c for key, c in T.items() if c}


def dim3_corpus(count: int = 6, seed: int = 0) -> list[LocalModel]:
    rng = random.Random(seed)
    out = [toy_dim3(), two_variable_dim3()]
    for n in range(count):
        m = 2 + n % 2
        flavor = LINF if n % 3 == 2 else AINF
        sym = flavor == LINF
        tensors = {k: random_cyclic_tensor(rng, m, k, sym) for k in (2, 3)}
        out.append(cyclic_dim3(tensors, m, flavor, f"random{n}"))
    return out


def toy_dim3() -> LocalModel:
    """``l_2(x, x) = y`` with ``<x, y> = 1``: ``Psi = b^3 / 6``, ``kappa = b^2 / 2``."""
    return cyclic_dim3({2: {(0, 0, 0): 1}}, 1, LINF, "toy")


def two_variable_dim3() -> LocalModel:
    t2 = {(0, 0, 1): 1, (0, 1, 0): 1, (1, 0, 0): 1}
    t3 = {key: 1 for key in product(range(2), repeat=4) if sum(key) == 2}
    return cyclic_dim3({2: t2, 3: t3}, 2, LINF, "two_variable")


def fat_point() -> HomotopyAlgebra:
    """``m_2(x, x) = y`` with ``|x| = 1``, ``|y| = 2``; ``kappa(b x) = b^2 y``."""
    space = GradedSpace(("x", "y"), (1, 2))
    return HomotopyAlgebra(space, {2: MultiMap((space,) * 2, space, 1, {(0, 0): {1: Fraction(1)}})}, AINF)


# ---------------------------------------------------------------------------
# dimension 4


def dim4_corpus() -> list[LocalModel]:
    """Matrix-valued Poincare algebras of four-dimensional tori and products."""
    t4 = matrix_valued(exterior_frobenius(4))
    t2s2 = matrix_valued(frobenius_product(exterior_frobenius(2), sphere(2)))
    return [LocalModel(*t2s2, 4, "T2xS2_mat2"), LocalModel(*t4, 4, "T4_mat2")]


def isotropic_dim4(hyperbolic: bool = False) -> LocalModel:
    """Degree one ``x1, x2``, degree two ``f1, f2``; ``kappa = b1 b2 (f1 - f2)``.

    With the pairing ``diag(1, -1)`` on ``f`` the map is isotropic; the
    hyperbolic variant uses ``<f1, f2> = 1`` and ``kappa = b1 b2 f1``.
    """
    space = GradedSpace(("x1", "x2", "f1", "f2"), (1, 1, 2, 2))
    half = Fraction(1, 2)
    if hyperbolic:
        ent = {(0, 1): {2: half}, (1, 0): {2: half}}
        gram = {(2, 3): 1, (3, 2): 1, (0, 1): 1, (1, 0): -1}
    else:
        ent = {(0, 1): {2: half, 3: -half}, (1, 0): {2: half, 3: -half}}
        gram = {(2, 2): 1, (3, 3): -1, (0, 1): 1, (1, 0): -1}
    alg = HomotopyAlgebra(space, {2: MultiMap((space,) * 2, space, 1, ent)}, AINF)
    return LocalModel(alg, CyclicPairing(space, gram), 4, "isotropic")


def ext2_line_dim4() -> LocalModel:
    """Cohomology of ``(S^1 x S^3) # (S^1 x S^3) # CP^2``: degree two is a line.

    Degree one ``x1, x2``, degree two ``f``, degree three ``x1*, x2*`` with
    ``f f = vol`` and ``x_i x_j* = delta_ij vol``.  Products of degree-one
    classes vanish, as they must: ``f = q(x, x)`` would force ``f f = 0``.
    """
    names = ("1", "x1", "x2", "f", "x1s", "x2s", "vol")
    space = GradedSpace(names, (0, 1, 1, 2, 3, 3, 4))
    ix = space.index
    base = {("f", "f"): ("vol", 1), ("x1", "x1s"): ("vol", 1), ("x2", "x2s"): ("vol", 1)}
    mul = {}
    for i in range(space.dim):
        mul[(0, i)] = {i: 1}
        mul[(i, 0)] = {i: 1}
    for (a, b), (o, c) in base.items():
        mul[(ix(a), ix(b))] = {ix(o): c}
        sign = (-1) ** (space.degrees[ix(a)] * space.degrees[ix(b)])
        mul[(ix(b), ix(a))] = {ix(o): sign * c}
    alg = from_unshifted(space, {}, mul, {0: Fraction(1)})
    gram = _top_pairing(mul, ix("vol"))
    return LocalModel(alg, CyclicPairing(space, gram, {0: Fraction(1)}), 4, "ext2_line")
