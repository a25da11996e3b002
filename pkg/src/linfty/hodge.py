"""Hodge-theoretic retraction data and the heat family of a finite dg algebra.

Given an inner product on ``A`` the Laplacian ``L = d d* + d* d`` splits
``A = ker L (+) im L``.  The retraction onto harmonic elements is

    i = inclusion of ker L,  p = orthogonal projection,  h = -d* G,

where ``G`` inverts ``L`` on its image and vanishes on its kernel.  All of
this is exact over the rationals.  The heat family ``K_t = exp(-t L)`` and
``h_t = -d* L^+ (1 - exp(-t L))`` interpolates between ``(1, 0)`` at ``t = 0``
and ``(ip, h)`` at ``t = inf``; it is computed in float64 because the
eigenvalues of ``L`` are in general irrational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg
from .graded import GradedError, GradedSpace, MultiMap, compose, identity, linear_map, to_matrix
from .homotopy import HomotopyAlgebra

INF = math.inf


@dataclass(frozen=True)
class RetractionData:
    """``i : H -> A``, ``p : A -> H`` and ``h : A -> A`` of degree -1."""

    algebra: HomotopyAlgebra
    H: GradedSpace
    i: MultiMap
    p: MultiMap
    h: MultiMap

    @cached_property
    def ip(self) -> MultiMap:
        return compose(self.i, self.p, 1)

    def identities(self) -> dict:
        """Residuals of every retraction identity (all zero when valid)."""
        A = self.algebra.space
        d = self.algebra.m1
        ip = self.ip
        hom = ip - identity(A) - compose(d, self.h, 1) - compose(self.h, d, 1)
        return {
            "pi=id": compose(self.p, self.i, 1) - identity(self.H),
            "ip=id+dh+hd": hom,
            "hh=0": compose(self.h, self.h, 1),
            "ph=0": compose(self.p, self.h, 1),
            "hi=0": compose(self.h, self.i, 1),
            "di=0": compose(d, self.i, 1),
            "pd=0": compose(self.p, d, 1),
        }

    def is_valid(self) -> bool:
        return all(r.is_zero() for r in self.identities().values())


def _gram(space: GradedSpace, inner_product=None):
    if inner_product is None:
        return space.gram_matrix()
    g = [[Fraction(x) for x in row] for row in inner_product]
    # validates symmetry, block structure and positivity
    GradedSpace(space.names, space.degrees, g)
    return g


def adjoint_matrix(d, gram):
    """Matrix of ``d*`` with ``<d x, y> = <x, d* y>``: ``G^-1 d^T G``."""
    ginv = linalg.inverse(gram)
    return linalg.matmul(linalg.matmul(ginv, linalg.transpose(d)), gram)


def laplacian(alg: HomotopyAlgebra, inner_product=None) -> MultiMap:
    """``L = m1 m1* + m1* m1`` as an arity-one map of degree 0."""
    sp = alg.space
    g = _gram(sp, inner_product)
    d = to_matrix(alg.m1) if sp.dim else []
    if not sp.dim:
        return MultiMap((sp,), sp, 0, {})
    ds = adjoint_matrix(d, g)
    lap = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(linalg.matmul(d, ds), linalg.matmul(ds, d))]
    return linear_map(sp, sp, lap, 0)


def _harmonic_basis(lap, space: GradedSpace):
    """Basis vectors of ker L, computed degree by degree (L preserves degree)."""
    cols = []
    for deg in sorted(set(space.degrees)):
        idx = space.indices_of_degree(deg)
        block = [[lap[r][c] for c in idx] for r in idx]
        for v in linalg.nullspace(block, len(idx)):
            full = [Fraction(0)] * space.dim
            for pos, c in zip(idx, v):
                full[pos] = c
            cols.append((deg, full))
    return cols


def retraction_from_inner_product(alg: HomotopyAlgebra, inner_product=None,
                                  h_prefix: str = "H") -> RetractionData:
    sp = alg.space
    n = sp.dim
    g = _gram(sp, inner_product)
    if n == 0:
        H = GradedSpace((), ())
        z = MultiMap((sp,), H, 0, {})
        return RetractionData(alg, H, MultiMap((H,), sp, 0, {}), z, MultiMap((sp,), sp, -1, {}))
    d = to_matrix(alg.m1)
    ds = adjoint_matrix(d, g)
    lap = to_matrix(laplacian(alg, g))
    harm = _harmonic_basis(lap, sp)
    counters: dict = {}
    hnames, hdegs = [], []
    for deg, _ in harm:
        j = counters.get(deg, 0)
        counters[deg] = j + 1
        hnames.append(f"{h_prefix}{deg}_{j}")
        hdegs.append(deg)
    H = GradedSpace(tuple(hnames), tuple(hdegs))
    V = [[harm[j][1][r] for j in range(len(harm))] for r in range(n)]  # n x dimH
    Vt = linalg.transpose(V)
    if harm:
        gram_h = linalg.matmul(linalg.matmul(Vt, g), V)
        P = linalg.matmul(linalg.matmul(linalg.inverse(gram_h), Vt), g)  # dimH x n
    else:
        P = []
    ip = linalg.matmul(V, P) if harm else linalg.zeros(n, n)
    # Green's operator: (L + ip)^-1 - ip
    shifted = [[lap[r][c] + ip[r][c] for c in range(n)] for r in range(n)]
    green = linalg.inverse(shifted)
    green = [[green[r][c] - ip[r][c] for c in range(n)] for r in range(n)]
    hmat = [[-x for x in row] for row in linalg.matmul(ds, green)]
    i_map = linear_map(H, sp, V, 0) if harm else MultiMap((H,), sp, 0, {})
    p_map = linear_map(sp, H, P, 0) if harm else MultiMap((sp,), H, 0, {})
    h_map = linear_map(sp, sp, hmat, -1)
    return RetractionData(alg, H, i_map, p_map, h_map)


# ---------------------------------------------------------------------------
# heat family


class HeatFamily:
    """Spectral data of ``L`` for evaluating ``K_t`` and ``h_t`` in float64."""

    def __init__(self, alg: HomotopyAlgebra, retraction: RetractionData, inner_product=None):
        self.algebra = alg
        self.retraction = retraction
        sp = alg.space
        n = sp.dim
        g = _gram(sp, inner_product)
        self.n = n
        if n == 0:
            return
        gf = np.array([[float(x) for x in row] for row in g])
        lap = np.array([[float(x) for x in row] for row in to_matrix(laplacian(alg, g))])
        d = np.array([[float(x) for x in row] for row in to_matrix(alg.m1)])
        chol = np.linalg.cholesky(gf)             # G = L L^T
        lt = chol.T
        lt_inv = np.linalg.inv(lt)
        sym = lt @ lap @ lt_inv                    # symmetric similarity transform
        sym = 0.5 * (sym + sym.T)
        evals, evecs = np.linalg.eigh(sym)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        zero_count = retraction.H.dim
        evals[:zero_count] = 0.0
        self.evals = evals
        self.zero_count = zero_count
        self.left = lt_inv @ evecs                 # L^-T Q
        self.right = evecs.T @ lt                  # Q^T L^T
        self.dstar = np.linalg.inv(gf) @ d.T @ gf

    def _spectral(self, fn) -> np.ndarray:
        vals = np.array([fn(lam, j) for j, lam in enumerate(self.evals)])
        return self.left @ np.diag(vals) @ self.right

    def K(self, t: float) -> np.ndarray:
        return self._spectral(lambda lam, j: math.exp(-t * lam))

    def h(self, t: float) -> np.ndarray:
        def f(lam, j):
            if j < self.zero_count:
                return 0.0
            return -math.expm1(-t * lam) / lam
        return -self.dstar @ self._spectral(f)

    def blue(self, t: float) -> np.ndarray:
        """``-m1* K_t``, the derivative of ``h_t``."""
        return -self.dstar @ self.K(t)

    def laplacian(self) -> np.ndarray:
        return self.left @ np.diag(self.evals) @ self.right


def _float_map(space: GradedSpace, mat: np.ndarray, degree: int) -> MultiMap:
    ent = {}
    n = space.dim
    for c in range(n):
        row = {r: float(mat[r, c]) for r in range(n) if mat[r, c] != 0.0}
        if row:
            ent[(c,)] = row
    return MultiMap((space,), space, degree, ent, check=False)


def heat_operators(alg: HomotopyAlgebra, inner_product=None, t=0.0, *, family: HeatFamily | None = None,
                   retraction: RetractionData | None = None):
    """``(K_t, h_t)`` as arity-one maps.

    ``t = 0`` and ``t = inf`` give exact rational maps; other times use the
    float backend.
    """
    if isinstance(t, str):
        t = INF if t.strip().lower() in ("inf", "infinity", "oo") else float(t)
    if t < 0:
        raise GradedError("heat time must be nonnegative")
    sp = alg.space
    if t == 0:
        return identity(sp), MultiMap((sp,), sp, -1, {})
    if retraction is None:
        retraction = retraction_from_inner_product(alg, inner_product)
    if t == INF:
        return retraction.ip, retraction.h
    if family is None:
        family = HeatFamily(alg, retraction, inner_product)
    return _float_map(sp, family.K(t), 0), _float_map(sp, family.h(t), -1)


def spectral_norm(mat: np.ndarray, gram=None) -> float:
    """Operator norm with respect to the inner product ``gram``."""
    if gram is None:
        return float(np.linalg.norm(mat, 2)) if mat.size else 0.0
    gf = np.array([[float(x) for x in row] for row in gram])
    lt = np.linalg.cholesky(gf).T
    return float(np.linalg.norm(lt @ mat @ np.linalg.inv(lt), 2))
