"""Graded vector spaces, Koszul signs, shuffles and sparse multilinear maps.

Every structure map in the package is a :class:`MultiMap`: a sparse table of
structure constants for a multilinear map between finite graded spaces.

Conventions
-----------
All maps live on the shifted spaces ``V[1]``.  The *shifted degree* of a basis
vector of ordinary degree ``n`` is ``n - 1``.  A map of degree ``d`` sends
inputs of shifted degrees ``s_1, ..., s_k`` to an output of shifted degree
``s_1 + ... + s_k + d``.  With this convention the products ``m_k`` of an
A-infinity algebra all have degree ``+1``, homotopies have degree ``-1`` and
morphism components have degree ``0``.

Tensor products of maps obey the Koszul rule
``(f (x) g)(x (x) y) = (-1)^(|g| |x|) f(x) (x) g(y)`` on shifted degrees.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import factorial
from typing import Iterable, Sequence


class GradedError(ValueError):
    """Bad arguments to a graded-core operation."""


class CompositionError(GradedError):
    """Source and target spaces do not match."""


def parse_rational(text) -> Fraction:
    """Parse a decimal-free rational string such as ``"3/4"`` or ``"-2"``."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise GradedError(f"expected a rational string, got {text!r}")
    s = text.strip()
    if not s or any(ch in s for ch in ".eE"):
        raise GradedError(f"not a decimal-free rational string: {text!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise GradedError(f"bad rational {text!r}") from exc


def format_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class GradedSpace:
    """A finite graded vector space with a named basis.

    ``gram`` is an optional inner product given as a symmetric positive
    definite rational matrix in the basis.  When it is absent the basis is
    treated as orthonormal.
    """

    names: tuple
    degrees: tuple
    gram: tuple | None = field(default=None)

    def __post_init__(self):
        names = tuple(self.names)
        degrees = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "degrees", degrees)
        if len(names) != len(degrees):
            raise GradedError("basis names and degrees differ in length")
        if len(set(names)) != len(names):
            raise GradedError("basis names must be unique")
        if self.gram is not None:
            gram = tuple(tuple(Fraction(x) for x in row) for row in self.gram)
            object.__setattr__(self, "gram", gram)
            _check_gram(gram, degrees)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]], gram=None) -> "GradedSpace":
        pairs = list(pairs)
        return cls(tuple(n for n, _ in pairs), tuple(d for _, d in pairs), gram)

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GradedError(f"unknown basis element {name!r}") from None

    def shdeg(self, i: int) -> int:
        return self.degrees[i] - 1

    def indices_of_degree(self, deg: int) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == deg]

    def gram_matrix(self) -> list[list[Fraction]]:
        n = self.dim
        if self.gram is None:
            return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        return [list(row) for row in self.gram]

    def with_gram(self, gram) -> "GradedSpace":
        return GradedSpace(self.names, self.degrees, gram)

    def to_json(self) -> dict:
        out = {"basis": [{"name": n, "degree": d} for n, d in zip(self.names, self.degrees)]}
        if self.gram is not None:
            out["gram"] = [[format_rational(x) for x in row] for row in self.gram]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "GradedSpace":
        basis = data.get("basis")
        if not isinstance(basis, list):
            raise GradedError("'basis' must be a list")
        names, degs = [], []
        for i, b in enumerate(basis):
            if not isinstance(b, dict) or "name" not in b or "degree" not in b:
                raise GradedError(f"basis[{i}] needs 'name' and 'degree'")
            if not isinstance(b["degree"], int):
                raise GradedError(f"basis[{i}].degree must be an integer")
            names.append(str(b["name"]))
            degs.append(b["degree"])
        gram = data.get("gram")
        if gram is not None:
            gram = [[parse_rational(x) for x in row] for row in gram]
        return cls(tuple(names), tuple(degs), gram)


def _check_gram(gram, degrees):
    n = len(degrees)
    if len(gram) != n or any(len(row) != n for row in gram):
        raise GradedError("inner product matrix has the wrong shape")
    for i in range(n):
        for j in range(n):
            if gram[i][j] != gram[j][i]:
                raise GradedError("inner product matrix is not symmetric")
            if degrees[i] != degrees[j] and gram[i][j] != 0:
                raise GradedError("inner product mixes different degrees")
    # Sylvester's criterion on leading minors, via exact LDL^T.
    a = [list(row) for row in gram]
    for k in range(n):
        if a[k][k] <= 0:
            raise GradedError("inner product is not positive definite")
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]


# ---------------------------------------------------------------------------
# signs and shuffles


def koszul_sign(permutation: Sequence[int], shifted_degrees: Sequence[int]) -> int:
    """Sign of reordering graded elements.

    ``permutation[j]`` is the original position (0-based) of the element that
    ends up in position ``j``; ``shifted_degrees[i]`` is the degree of the
    element originally at position ``i``.  Every pair of odd elements whose
    relative order is reversed contributes a factor ``-1``.
    """
    k = len(permutation)
    if len(shifted_degrees) != k:
        raise GradedError("permutation and degree list differ in length")
    if sorted(permutation) != list(range(k)):
        raise GradedError(f"not a permutation of 0..{k - 1}: {permutation!r}")
    odd = [shifted_degrees[i] & 1 for i in permutation]
    sign = 1
    for a in range(k):
        if not odd[a]:
            continue
        for b in range(a + 1, k):
            if odd[b] and permutation[a] > permutation[b]:
                sign = -sign
    return sign


def shuffles(block_sizes: Sequence[int]) -> list[tuple[int, ...]]:
    """All shuffle permutations for consecutive blocks of the given sizes.

    A shuffle ``s`` is returned as the tuple ``(s(0), ..., s(n-1))`` of new
    positions; it is increasing on each block.  The list is sorted.
    """
    sizes = list(block_sizes)
    if not sizes:
        raise GradedError("shuffles needs at least one block")
    if any(int(s) < 1 for s in sizes):
        raise GradedError("block sizes must be positive")
    n = sum(sizes)
    result = []

    def rec(remaining: list[int], sizes_left: list[int], acc: list[tuple[int, ...]]):
        if not sizes_left:
            perm = [pos for block in acc for pos in block]
            result.append(tuple(perm))
            return
        for chosen in combinations(remaining, sizes_left[0]):
            rest = [r for r in remaining if r not in chosen]
            rec(rest, sizes_left[1:], acc + [chosen])

    rec(list(range(n)), sizes, [])
    result.sort()
    return result


def multinomial(sizes: Sequence[int]) -> int:
    out = factorial(sum(sizes))
    for s in sizes:
        out //= factorial(s)
    return out


# ---------------------------------------------------------------------------
# sparse multilinear maps


def _prune(entries: dict) -> dict:
    out = {}
    for key, row in entries.items():
        row = {o: c for o, c in row.items() if c != 0}
        if row:
            out[key] = row
    return out


class MultiMap:
    """A homogeneous multilinear map ``src[0] x ... x src[k-1] -> tgt``.

    ``entries`` maps an input index tuple to ``{output index: coefficient}``.
    Coefficients are usually :class:`fractions.Fraction`; the heat-family code
    also builds maps with float coefficients.
    """

    __slots__ = ("src", "tgt", "degree", "entries", "symmetric")

    def __init__(self, src, tgt: GradedSpace, degree: int, entries=None, *,
                 symmetric: bool = False, check: bool = True):
        self.src = tuple(src)
        self.tgt = tgt
        self.degree = int(degree)
        self.entries = _prune(entries or {})
        self.symmetric = symmetric
        if check:
            self._check_degrees()

    def _check_degrees(self):
        k = len(self.src)
        for key, row in self.entries.items():
            if len(key) != k:
                raise GradedError(f"entry key {key!r} has wrong arity")
            s = sum(self.src[j].degrees[key[j]] - 1 for j in range(k)) + self.degree
            for o in row:
                if self.tgt.degrees[o] - 1 != s:
                    raise GradedError(
                        f"entry {key!r}->{o} violates degree homogeneity (map degree {self.degree})")

    # -- basic structure -------------------------------------------------
    @property
    def arity(self) -> int:
        return len(self.src)

    def signature(self):
        return (self.src, self.tgt, self.degree)

    def is_zero(self) -> bool:
        return not self.entries

    def coeff(self, key, out):
        return self.entries.get(tuple(key), {}).get(out, 0)

    def __repr__(self):
        return f"MultiMap(arity={self.arity}, degree={self.degree}, nnz={self.nnz()})"

    def nnz(self) -> int:
        return sum(len(r) for r in self.entries.values())

    def _same_shape(self, other: "MultiMap"):
        if self.src != other.src or self.tgt != other.tgt:
            raise CompositionError("maps have different sources or targets")
        if self.degree != other.degree and not (self.is_zero() or other.is_zero()):
            raise GradedError("maps have different degrees")

    def __add__(self, other: "MultiMap") -> "MultiMap":
        self._same_shape(other)
        acc = {k: dict(r) for k, r in self.entries.items()}
        for k, r in other.entries.items():
            tgt = acc.setdefault(k, {})
            for o, c in r.items():
                tgt[o] = tgt.get(o, 0) + c
        deg = self.degree if not self.is_zero() else other.degree
        return MultiMap(self.src, self.tgt, deg, acc, check=False)

    def __neg__(self) -> "MultiMap":
        return self.scale(-1)

    def __sub__(self, other: "MultiMap") -> "MultiMap":
        return self + (-other)

    def scale(self, c) -> "MultiMap":
        ent = {k: {o: c * v for o, v in r.items()} for k, r in self.entries.items()}
        return MultiMap(self.src, self.tgt, self.degree, ent, check=False)

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, MultiMap):
            return NotImplemented
        if self.src != other.src or self.tgt != other.tgt:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def map_coeffs(self, fn) -> "MultiMap":
        ent = {k: {o: fn(v) for o, v in r.items()} for k, r in self.entries.items()}
        return MultiMap(self.src, self.tgt, self.degree, ent, check=False)

    def max_abs(self) -> float:
        return max((abs(float(v)) for r in self.entries.values() for v in r.values()), default=0.0)

    # -- evaluation -------------------------------------------------------
    def apply(self, *vectors: dict) -> dict:
        """Evaluate on vectors given as ``{basis index: coefficient}``.

        The coefficients may be any commutative ring elements of degree zero
        (rationals, floats, polynomials)."""
        if len(vectors) != self.arity:
            raise GradedError("wrong number of arguments")
        out: dict = {}
        for key, row in self.entries.items():
            c = 1
            for j, idx in enumerate(key):
                cj = vectors[j].get(idx)
                if cj is None:
                    break
                c = c * cj
            else:
                for o, v in row.items():
                    out[o] = out.get(o, 0) + c * v
        return {o: c for o, c in out.items() if c != 0}

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        ent = []
        for key in sorted(self.entries):
            for o in sorted(self.entries[key]):
                ent.append({
                    "in": [self.src[j].names[i] for j, i in enumerate(key)],
                    "out": self.tgt.names[o],
                    "coeff": format_rational(self.entries[key][o]),
                })
        return {"arity": self.arity, "degree": self.degree, "entries": ent}

    @classmethod
    def from_json(cls, data: dict, src, tgt: GradedSpace) -> "MultiMap":
        for fld in ("arity", "degree", "entries"):
            if fld not in data:
                raise GradedError(f"map is missing {fld!r}")
        k = data["arity"]
        if isinstance(src, GradedSpace):
            src = (src,) * k
        if len(src) != k:
            raise GradedError("arity does not match the number of source spaces")
        ent: dict = {}
        for n, e in enumerate(data["entries"]):
            ins = e.get("in")
            if not isinstance(ins, list) or len(ins) != k:
                raise GradedError(f"entries[{n}].in must list {k} basis names")
            key = tuple(src[j].index(x) for j, x in enumerate(ins))
            o = tgt.index(e.get("out"))
            row = ent.setdefault(key, {})
            row[o] = row.get(o, 0) + parse_rational(e.get("coeff"))
        return cls(src, tgt, data["degree"], ent)


def zero_map(src, tgt: GradedSpace, degree: int) -> MultiMap:
    return MultiMap(src, tgt, degree, {}, check=False)


def identity(space: GradedSpace, one=Fraction(1)) -> MultiMap:
    return MultiMap((space,), space, 0, {(i,): {i: one} for i in range(space.dim)}, check=False)


def element(space: GradedSpace, vector: dict, degree: int | None = None) -> MultiMap:
    """An arity-zero map, i.e. a vector, used for curvature terms."""
    vector = {i: c for i, c in vector.items() if c != 0}
    if degree is None:
        degs = {space.degrees[i] - 1 for i in vector}
        if len(degs) > 1:
            raise GradedError("element is not homogeneous")
        degree = degs.pop() if degs else 0
    return MultiMap((), space, degree, {(): vector} if vector else {})


def linear_map(src: GradedSpace, tgt: GradedSpace, matrix, degree: int = 0) -> MultiMap:
    """Arity-one map from a dense matrix ``matrix[out][in]``."""
    ent: dict = {}
    for o, row in enumerate(matrix):
        for i, c in enumerate(row):
            if c != 0:
                ent.setdefault((i,), {})[o] = c
    return MultiMap((src,), tgt, degree, ent)


def to_matrix(f: MultiMap) -> list[list]:
    """Dense matrix ``[out][in]`` of an arity-one map."""
    if f.arity != 1:
        raise GradedError("to_matrix needs an arity-one map")
    m = [[0] * f.src[0].dim for _ in range(f.tgt.dim)]
    for (i,), row in f.entries.items():
        for o, c in row.items():
            m[o][i] = c
    return m


def compose(outer: MultiMap, inner: MultiMap, slot: int) -> MultiMap:
    """Partial composition ``outer o_slot inner`` with a 1-based ``slot``.

    The inner map is moved past the inputs preceding the slot, which costs the
    Koszul sign ``(-1)^(deg(inner) * sum of their shifted degrees)``.
    """
    k = outer.arity
    if not 1 <= slot <= k:
        raise GradedError(f"slot {slot} out of range for arity {k}")
    pos = slot - 1
    if outer.src[pos] != inner.tgt:
        raise CompositionError("inner target differs from the outer source at the slot")
    by_out = defaultdict(list)
    for ins, row in inner.entries.items():
        for o, c in row.items():
            by_out[o].append((ins, c))
    src = outer.src[:pos] + inner.src + outer.src[pos + 1:]
    odd = inner.degree & 1
    pre = outer.src[:pos]
    out: dict = {}
    for key, row in outer.entries.items():
        lst = by_out.get(key[pos])
        if not lst:
            continue
        sgn = 1
        if odd:
            s = 0
            for j in range(pos):
                s += pre[j].degrees[key[j]] - 1
            if s & 1:
                sgn = -1
        head, tail = key[:pos], key[pos + 1:]
        for ins, c in lst:
            nk = head + ins + tail
            target = out.get(nk)
            if target is None:
                target = out[nk] = {}
            cc = c if sgn == 1 else -c
            for o, v in row.items():
                target[o] = target.get(o, 0) + cc * v
    return MultiMap(src, outer.tgt, outer.degree + inner.degree, out, check=False)


def graft(outer: MultiMap, inners: Sequence[MultiMap]) -> MultiMap:
    """``outer o (g_1 (x) ... (x) g_k)`` with Koszul signs."""
    if len(inners) != outer.arity:
        raise GradedError("graft needs one inner map per input of the outer map")
    result = outer
    slot = 1
    for g in inners:
        result = compose(result, g, slot)
        slot += g.arity
    return result


def compose_unary(f: MultiMap, g: MultiMap) -> MultiMap:
    """Shorthand for ``compose(f, g, 1)`` when ``f`` has arity one."""
    return compose(f, g, 1)


def sum_maps(maps: Sequence[MultiMap], src=None, tgt=None, degree=None) -> MultiMap:
    maps = list(maps)
    if not maps:
        return zero_map(src, tgt, degree)
    acc: dict = {}
    for m in maps:
        if m.src != maps[0].src or m.tgt != maps[0].tgt:
            raise CompositionError("cannot add maps with different signatures")
        for k, r in m.entries.items():
            t = acc.get(k)
            if t is None:
                t = acc[k] = {}
            for o, c in r.items():
                t[o] = t.get(o, 0) + c
    deg = maps[0].degree if degree is None else degree
    return MultiMap(maps[0].src, maps[0].tgt, deg, acc, check=False)


def operator_norm(f: MultiMap):
    """Max over outputs of the summed absolute coefficients over all inputs."""
    rows: dict = defaultdict(lambda: Fraction(0))
    for row in f.entries.values():
        for o, c in row.items():
            rows[o] += abs(c)
    return max(rows.values(), default=Fraction(0))


def basis_tuples(spaces: Sequence[GradedSpace]):
    return product(*(range(s.dim) for s in spaces))


def permute_inputs(f: MultiMap, order: Sequence[int]) -> MultiMap:
    """The map ``x -> f(x_order[0], ..., x_order[k-1])`` including Koszul signs.

    The result takes its inputs in the original order; feeding them to ``f``
    requires the reordering ``order`` and its sign.
    """
    k = f.arity
    inv = [0] * k
    for new, old in enumerate(order):
        inv[old] = new
    src = tuple(f.src[inv[j]] for j in range(k))
    out: dict = {}
    for key, row in f.entries.items():
        # key is indexed by f's slots; slot `new` receives original input order[new]
        orig = [None] * k
        for new, old in enumerate(order):
            orig[old] = key[new]
        degs = [src[j].degrees[orig[j]] - 1 for j in range(k)]
        s = koszul_sign(list(order), degs)
        nk = tuple(orig)
        t = out.setdefault(nk, {})
        for o, c in row.items():
            t[o] = t.get(o, 0) + s * c
    return MultiMap(src, f.tgt, f.degree, out, check=False)
