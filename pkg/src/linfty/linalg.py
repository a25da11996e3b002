"""Exact rational linear algebra on dense ``list[list[Fraction]]`` matrices.

Thin adapters over sympy's ``DomainMatrix`` on ``QQ`` (gmpy2-backed), so the
rest of the package can stay with :class:`fractions.Fraction`.
"""

from __future__ import annotations

from fractions import Fraction

from sympy import QQ
from sympy.polys.matrices import DomainMatrix


class LinAlgError(ValueError):
    pass


def _dm(rows, ncols: int | None = None) -> DomainMatrix:
    rows = [list(r) for r in rows]
    n = ncols if ncols is not None else (len(rows[0]) if rows else 0)
    data = [[QQ(int(Fraction(x).numerator), int(Fraction(x).denominator)) for x in r] for r in rows]
    return DomainMatrix(data, (len(rows), n), QQ)


def _frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _back(m: DomainMatrix) -> list[list[Fraction]]:
    return [[_frac(x) for x in row] for row in m.to_list()]


def zeros(m: int, n: int) -> list[list[Fraction]]:
    return [[Fraction(0)] * n for _ in range(m)]


def eye(n: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a, b):
    if not a or not b:
        return zeros(len(a), len(b[0]) if b else 0)
    n, m, p = len(a), len(b), len(b[0])
    out = zeros(n, p)
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for k in range(m):
            x = ai[k]
            if x:
                bk = b[k]
                for j in range(p):
                    if bk[j]:
                        oi[j] += x * bk[j]
    return out


def transpose(a):
    return [list(r) for r in zip(*a)] if a else []


def rank(a, ncols: int | None = None) -> int:
    if not a:
        return 0
    return int(_dm(a, ncols).rank())


def nullspace(a, ncols: int) -> list[list[Fraction]]:
    """Basis of ``{x : a x = 0}`` as a list of vectors of length ``ncols``."""
    if not a:
        return eye(ncols)
    if ncols == 0:
        return []
    ns = _dm(a, ncols).nullspace()
    return _back(ns) if ns.shape[0] else []


def rref(a, ncols: int | None = None):
    if not a:
        return [], ()
    r, piv = _dm(a, ncols).rref()
    return _back(r), tuple(piv)


def inverse(a):
    if not a:
        return []
    try:
        return _back(_dm(a).inv())
    except Exception as exc:  # sympy raises DMNonInvertibleMatrixError
        raise LinAlgError("matrix is singular") from exc


def column_basis(a, ncols: int) -> list[int]:
    """Indices of pivot columns (a basis of the column space)."""
    if not a:
        return []
    _, piv = rref(a, ncols)
    return list(piv)


def solve(a, b):
    """One solution of ``a x = b`` for a column ``b``; raises if inconsistent."""
    m = len(a)
    n = len(a[0]) if a else 0
    aug = [list(a[i]) + [Fraction(b[i])] for i in range(m)]
    r, piv = rref(aug, n + 1)
    if n in piv:
        raise LinAlgError("inconsistent linear system")
    x = [Fraction(0)] * n
    for row, c in enumerate(piv):
        x[c] = r[row][n]
    return x


def row_space_basis(rows, ncols: int) -> list[list[Fraction]]:
    r, piv = rref(rows, ncols) if rows else ([], ())
    return [r[i] for i in range(len(piv))]
