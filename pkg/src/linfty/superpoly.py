"""Graded-commutative polynomial algebras over the rationals.

A :class:`SuperRing` has named generators with integer degrees; generators of
odd degree anticommute and square to zero.  Elements are dicts mapping an
exponent tuple to a :class:`~fractions.Fraction`; monomials are stored in
generator order, so the sign of a product comes from reordering odd factors.

Every generator also carries a *weight* (default 1) used for truncation: the
span of monomials of weight above ``N`` is an ideal, and a derivation that
does not lower weight descends to the quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.sdm import SDM


class SuperRingError(ValueError):
    pass


@dataclass(frozen=True)
class SuperRing:
    names: tuple
    degrees: tuple
    weights: tuple = field(default=None)

    def __post_init__(self):
        if len(self.names) != len(self.degrees):
            raise SuperRingError("names and degrees differ in length")
        if len(set(self.names)) != len(self.names):
            raise SuperRingError("duplicate generator names")
        if self.weights is None:
            object.__setattr__(self, "weights", (1,) * len(self.names))

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SuperRingError(f"unknown generator {name!r}") from None

    def odd(self, i: int) -> bool:
        return bool(self.degrees[i] & 1)

    # -- elements ---------------------------------------------------------
    def zero(self) -> dict:
        return {}

    def one(self) -> dict:
        return {(0,) * self.n: Fraction(1)}

    def const(self, c) -> dict:
        c = Fraction(c)
        return {(0,) * self.n: c} if c else {}

    def gen(self, name_or_index, power: int = 1) -> dict:
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        if power > 1 and self.odd(i):
            return {}
        e = [0] * self.n
        e[i] = power
        return {tuple(e): Fraction(1)}

    def mono_degree(self, m) -> int:
        return sum(e * d for e, d in zip(m, self.degrees))

    def mono_weight(self, m) -> int:
        return sum(e * w for e, w in zip(m, self.weights))

    def degree_of(self, f: dict) -> int | None:
        degs = {self.mono_degree(m) for m in f}
        if len(degs) > 1:
            raise SuperRingError("element is not homogeneous")
        return degs.pop() if degs else None

    # -- arithmetic -------------------------------------------------------
    def _mono_mul(self, a, b):
        # one sign flip per pair (i in a, j in b) of odd generators with i > j
        sign = 1
        for j in range(self.n):
            if b[j] and self.odd(j):
                if a[j]:
                    return 0, None
                cnt = sum(1 for i in range(j + 1, self.n) if a[i] and self.odd(i))
                if cnt & 1:
                    sign = -sign
        return sign, tuple(x + y for x, y in zip(a, b))

    def mul(self, f: dict, g: dict, max_weight: int | None = None) -> dict:
        out: dict = {}
        for a, ca in f.items():
            wa = self.mono_weight(a)
            for b, cb in g.items():
                if max_weight is not None and wa + self.mono_weight(b) > max_weight:
                    continue
                s, m = self._mono_mul(a, b)
                if not s:
                    continue
                out[m] = out.get(m, 0) + s * ca * cb
        return {m: c for m, c in out.items() if c}

    def add(self, *fs: dict) -> dict:
        out: dict = {}
        for f in fs:
            for m, c in f.items():
                out[m] = out.get(m, 0) + c
        return {m: c for m, c in out.items() if c}

    def sub(self, f: dict, g: dict) -> dict:
        return self.add(f, self.scale(g, -1))

    def scale(self, f: dict, c) -> dict:
        if not c:
            return {}
        return {m: v * c for m, v in f.items()}

    def power(self, f: dict, k: int, max_weight: int | None = None) -> dict:
        out = self.one()
        for _ in range(k):
            out = self.mul(out, f, max_weight)
        return out

    def truncate(self, f: dict, max_weight: int | None) -> dict:
        if max_weight is None:
            return f
        return {m: c for m, c in f.items() if self.mono_weight(m) <= max_weight}

    def max_weight(self, f: dict) -> int:
        return max((self.mono_weight(m) for m in f), default=-1)

    def min_weight(self, f: dict) -> int | None:
        return min((self.mono_weight(m) for m in f), default=None)

    # -- maps -------------------------------------------------------------
    def substitute(self, f: dict, images: dict, target: "SuperRing | None" = None,
                   max_weight: int | None = None) -> dict:
        """Apply the algebra map sending generator ``i`` to ``images[i]``.

        Generators missing from ``images`` map to themselves (same ring only).
        Images must have the parity of the generator they replace.
        """
        tgt = target or self
        cache: dict = {}

        def img(i, e):
            key = (i, e)
            if key not in cache:
                base = images[i] if i in images else self.gen(i)
                cache[key] = tgt.power(base, e, max_weight)
            return cache[key]

        out: dict = {}
        for m, c in f.items():
            val = tgt.const(c)
            for i, e in enumerate(m):
                if e:
                    val = tgt.mul(val, img(i, e), max_weight)
                    if not val:
                        break
            for mm, v in val.items():
                out[mm] = out.get(mm, 0) + v
        return {m: c for m, c in out.items() if c}

    def derivation(self, f: dict, images: dict, degree: int, max_weight: int | None = None) -> dict:
        """Apply the derivation of the given degree determined by ``images``.

        ``D(x_1 ... x_n) = sum (-1)^(degree * |x_1 ... x_(i-1)|) x_1 .. D(x_i) .. x_n``.
        Generators missing from ``images`` are sent to zero.
        """
        out: dict = {}
        for m, c in f.items():
            for i, e in enumerate(m):
                if not e or i not in images or not images[i]:
                    continue
                pre = [0] * self.n
                pre[:i] = m[:i]
                post = list(m)
                post[:i] = [0] * i
                post[i] = e - 1
                s = 1
                if degree & 1 and self.mono_degree(pre) & 1:
                    s = -1
                term = self.mul({tuple(pre): Fraction(s * e) * c}, images[i])
                term = self.mul(term, {tuple(post): Fraction(1)}, max_weight)
                for mm, v in term.items():
                    out[mm] = out.get(mm, 0) + v
        return self.truncate({m: c for m, c in out.items() if c}, max_weight)

    def partial(self, f: dict, i: int) -> dict:
        """Left partial derivative with respect to generator ``i``."""
        return self.derivation(f, {i: self.one()}, self.degrees[i])

    # -- bases ------------------------------------------------------------
    def monomials(self, degree: int | None = None, max_weight: int = 0,
                  min_weight: int = 0, allowed=None) -> list:
        """All monomials with the given degree and weight in ``[min_weight, max_weight]``.

        ``allowed`` restricts to a subset of generator indices.  Generators of
        weight zero are only allowed if they are odd (otherwise the span is
        infinite).
        """
        idx = list(range(self.n)) if allowed is None else sorted(allowed)
        for i in idx:
            if self.weights[i] <= 0 and not self.odd(i):
                raise SuperRingError("even generators need positive weight")
        out = []

        def rec(pos, exps, w):
            if pos == len(idx):
                m = [0] * self.n
                for i, e in zip(idx, exps):
                    m[i] = e
                m = tuple(m)
                if w >= min_weight and (degree is None or self.mono_degree(m) == degree):
                    out.append(m)
                return
            i = idx[pos]
            top = 1 if self.odd(i) else (max_weight - w) // self.weights[i]
            for e in range(0, top + 1):
                nw = w + e * self.weights[i]
                if nw > max_weight:
                    break
                rec(pos + 1, exps + [e], nw)

        rec(0, [], 0)
        out.sort(key=lambda m: (self.mono_weight(m), tuple(-x for x in m)))
        return out

    # -- display ----------------------------------------------------------
    def mono_str(self, m) -> str:
        parts = []
        for i, e in enumerate(m):
            if e == 1:
                parts.append(self.names[i])
            elif e:
                parts.append(f"{self.names[i]}^{e}")
        return "*".join(parts) or "1"

    def to_str(self, f: dict) -> str:
        if not f:
            return "0"
        terms = []
        for m in sorted(f, key=lambda m: (self.mono_weight(m), tuple(-x for x in m))):
            c = f[m]
            ms = self.mono_str(m)
            if ms == "1":
                terms.append(str(c))
            elif c == 1:
                terms.append(ms)
            elif c == -1:
                terms.append("-" + ms)
            else:
                terms.append(f"{c}*{ms}")
        return " + ".join(terms).replace("+ -", "- ")

    def to_json(self, f: dict) -> dict:
        from .graded import format_rational
        return {self.mono_str(m): format_rational(c) for m, c in sorted(f.items())}


# ---------------------------------------------------------------------------
# sparse exact linear algebra on coordinate vectors


def _qq(x) -> object:
    x = Fraction(x)
    return QQ(x.numerator, x.denominator)


def sparse_matrix(columns: list, nrows: int) -> DomainMatrix:
    """Matrix whose ``j``-th column is the sparse vector ``columns[j]`` (dict row -> value)."""
    rows: dict = {}
    for j, col in enumerate(columns):
        for r, v in col.items():
            if v:
                rows.setdefault(r, {})[j] = _qq(v)
    return DomainMatrix.from_rep(SDM(rows, (nrows, len(columns)), QQ))


def rank_of(columns: list, nrows: int) -> int:
    if not columns or not nrows:
        return 0
    return sparse_matrix(columns, nrows).rank()


def kernel_vectors(columns: list, nrows: int) -> list:
    """Basis of the kernel of the matrix with the given sparse columns, as sparse dicts."""
    ncols = len(columns)
    if ncols == 0:
        return []
    if nrows == 0:
        return [{j: Fraction(1)} for j in range(ncols)]
    ns = sparse_matrix(columns, nrows).to_dense().nullspace()
    out = []
    for row in ns.to_list():
        vec = {j: Fraction(int(v.numerator), int(v.denominator)) for j, v in enumerate(row) if v}
        out.append(vec)
    return out


def coordinates(f: dict, index: dict) -> dict:
    """Sparse coordinate vector of ``f`` in a monomial basis given as ``{monomial: row}``."""
    out = {}
    for m, c in f.items():
        if m not in index:
            raise SuperRingError("element leaves the chosen monomial basis")
        out[index[m]] = c
    return out


def factorial_fraction(k: int) -> Fraction:
    return Fraction(1, factorial(k))
