"""Local models of moduli: Kuranishi maps, potentials and their structure checks.

The degree-one coordinate ``b = sum_i b_i e_i`` is symbolic; ``kappa(b)`` and
the potential ``Psi(b)`` live in the truncated polynomial ring
``Q[b_1..b_m] / (degree > N)``.  The checks here certify, as exact
polynomial identities:

* surface-type models (degrees 0..2, strict unit, cyclic): ``<kappa, 1> = 0``;
* threefold-type models (degree 2 dual to degree 1): ``dPsi = iota kappa``;
* fourfold-type models (degree 2 self-dual): ``<kappa, kappa> = 0`` and
  ``<d kappa, kappa> = 0``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from sympy import QQ
from sympy.polys.rings import ring

from . import linalg
from .graded import GradedSpace, compose, element
from .homotopy import (AINF, LINF, HomotopyAlgebra, StructureError, kuranishi,
                       truncate_poly)


class PreconditionError(StructureError):
    """The model does not fit the requested scenario."""


# ---------------------------------------------------------------------------
# pairings


@dataclass
class CyclicPairing:
    """A graded-symmetric bilinear form ``<e_i, e_j> = gram[(i, j)]`` in ordinary degrees.

    ``unit`` optionally names the strict unit as ``{index: coeff}``.
    """

    space: GradedSpace
    gram: dict
    unit: dict | None = None

    def __post_init__(self):
        self.gram = {k: Fraction(v) for k, v in self.gram.items() if v != 0}
        degs = self.space.degrees
        for (i, j), c in self.gram.items():
            back = self.gram.get((j, i), 0)
            if back != (-1) ** (degs[i] * degs[j]) * c:
                raise PreconditionError(f"pairing is not graded symmetric at {(i, j)}")
        n = self.space.dim
        mat = [[self.gram.get((i, j), Fraction(0)) for j in range(n)] for i in range(n)]
        if n and linalg.rank(mat) != n:
            raise PreconditionError("pairing is degenerate")

    @property
    def dimension(self) -> int | None:
        """The common value of ``|a| + |b|`` over paired basis vectors."""
        vals = {self.space.degrees[i] + self.space.degrees[j] for i, j in self.gram}
        return vals.pop() if len(vals) == 1 else None

    def pair(self, u: dict, v: dict):
        total = 0
        for (i, j), c in self.gram.items():
            a = u.get(i)
            if a is None:
                continue
            b = v.get(j)
            if b is None:
                continue
            total = total + c * a * b
        return total

    def cyclicity_defects(self, alg: HomotopyAlgebra, k_max: int = 4) -> list:
        """Basis tuples where ``<m_k(a_0..a_{k-1}), a_k> = (-1)^e <m_k(a_1..a_k), a_0>`` fails.

        ``e = s_0 (s_1 + ... + s_k) + s_0 + s_k`` in shifted degrees.
        """
        s = [d - 1 for d in self.space.degrees]
        bad = []
        for k in range(1, k_max + 1):
            m = alg.ops.get(k)
            if m is None or m.is_zero():
                continue
            for key in product(range(self.space.dim), repeat=k + 1):
                lhs = self.pair(m.entries.get(key[:-1], {}), {key[-1]: 1})
                rhs = self.pair(m.entries.get(key[1:], {}), {key[0]: 1})
                e = s[key[0]] * sum(s[x] for x in key[1:]) + s[key[0]] + s[key[-1]]
                if lhs != (-1) ** (e & 1) * rhs:
                    bad.append((k, key))
        return bad

    def is_cyclic(self, alg: HomotopyAlgebra, k_max: int = 4) -> bool:
        return not self.cyclicity_defects(alg, k_max)


def unit_defects(alg: HomotopyAlgebra, unit: dict, k_max: int = 4) -> list:
    """Where the strict unit identities fail.

    In shifted form a strict unit satisfies ``m_2(1, a) = -a``,
    ``m_2(a, 1) = (-1)^(|a|-1) a`` and ``m_k(.., 1, ..) = 0`` for ``k != 2``.
    """
    sp = alg.space
    u = element(sp, unit, -1)
    bad = []
    m2 = alg.op(2)
    for a in range(sp.dim):
        left = m2.apply(unit, {a: 1})
        right = m2.apply({a: 1}, unit)
        if left != {a: -1}:
            bad.append((2, "left", a))
        if right != {a: (-1) ** (sp.degrees[a] - 1)}:
            bad.append((2, "right", a))
    for k in range(1, k_max + 1):
        if k == 2:
            continue
        m = alg.ops.get(k)
        if m is None or m.is_zero():
            continue
        for slot in range(1, k + 1):
            if not compose(m, u, slot).is_zero():
                bad.append((k, "slot", slot))
    return bad


# ---------------------------------------------------------------------------
# local models


@dataclass
class LocalModel:
    """A minimal (or small) algebra with a pairing and a truncation order."""

    algebra: HomotopyAlgebra
    pairing: CyclicPairing
    truncation: int = 4
    name: str = ""
    variables: tuple = field(default=(), init=False)

    def __post_init__(self):
        if self.pairing.space != self.algebra.space:
            raise PreconditionError("pairing and algebra live on different spaces")
        self.coords = self.algebra.space.indices_of_degree(1)
        names = tuple(f"b{j + 1}" for j in range(len(self.coords))) or ("b",)
        self.ring, *gens = ring(",".join(names), QQ)
        self.gens = gens[: len(self.coords)]
        self.variables = names[: len(self.coords)]

    def coordinate(self) -> dict:
        """The generic degree-one element ``sum_i b_i e_i``."""
        return {i: g for i, g in zip(self.coords, self.gens)}

    def truncated(self) -> HomotopyAlgebra:
        a = self.algebra
        return HomotopyAlgebra(a.space, a.ops, a.flavor, self.truncation, unit=a.unit)

    def kappa(self) -> dict:
        """``{basis index: polynomial}`` components of ``kappa(b)``."""
        raw = kuranishi(self.truncated(), self.coordinate())
        out = {}
        for o, c in raw.items():
            c = self._poly(c)
            if c:
                out[o] = c
        return out

    def _poly(self, c):
        if not hasattr(c, "ring"):
            c = self.ring(QQ(int(Fraction(c).numerator), int(Fraction(c).denominator)))
        return truncate_poly(c, self.truncation)

    def zero(self):
        return self.ring(0)


def poly_to_json(p, variables) -> dict:
    """``{"b1^2 b2": "1/6"}`` with monomials in a fixed order."""
    from .graded import format_rational

    out = {}
    for mon, c in sorted(p.terms(), key=lambda mc: (sum(mc[0]), [-e for e in mc[0]])):
        parts = []
        for v, e in zip(variables, mon):
            if e == 1:
                parts.append(v)
            elif e > 1:
                parts.append(f"{v}^{e}")
        key = " ".join(parts) if parts else "1"
        out[key] = format_rational(Fraction(int(c.numerator), int(c.denominator)))
    return out


def _require(cond: bool, msg: str):
    if not cond:
        raise PreconditionError(msg)


# ---------------------------------------------------------------------------
# dimension 2


def check_dim2(model: LocalModel) -> dict:
    """Certificate that ``<kappa(b), 1> = 0`` for a unital cyclic model in degrees 0..2.

    Arity by arity: for ``k >= 3`` cyclicity moves the unit inside ``m_k``,
    where it vanishes; for ``k = 2`` it leaves ``<b, b>``, which vanishes
    because the pairing is antisymmetric on degree one.  The hypotheses are
    reported rather than enforced so that a failing model yields a failing
    certificate; only a malformed scenario raises.
    """
    sp = model.algebra.space
    _require(set(sp.degrees) <= {0, 1, 2}, "dim-2 scenario needs degrees in 0..2")
    _require(model.pairing.dimension in (None, 2), "dim-2 scenario pairs degrees summing to 2")
    unit = model.pairing.unit or model.algebra.unit
    hyp = {
        "unit": bool(unit) and not unit_defects(model.algebra, unit),
        "cyclic": model.pairing.is_cyclic(model.algebra),
        "relations": model.algebra.relations_hold(min(model.algebra.k_max + 1, 5)),
    }
    b = model.coordinate()
    alg = model.truncated()
    per_k = {}
    total = model.zero()
    unit_vec = unit or {}
    for k in sorted(alg.ops):
        if k == 0:
            continue
        one = HomotopyAlgebra(sp, {k: alg.ops[k]}, alg.flavor, model.truncation)
        kap = {o: model._poly(c) for o, c in kuranishi(one, b).items()}
        val = model._poly(model.pairing.pair(kap, unit_vec)) if unit_vec else model.zero()
        per_k[k] = val
        total = total + val
    zero = total == 0 and all(v == 0 for v in per_k.values())
    return {
        "scenario": "dim2",
        "hypotheses": hyp,
        "per_k": per_k,
        "kappa_dot_unit": total,
        "zero": zero,
        "passed": zero and all(hyp.values()),
    }


# ---------------------------------------------------------------------------
# dimension 3


def _iota(model: LocalModel, kap: dict) -> list:
    """Components ``<kappa, e_i>`` for the degree-one basis vectors ``e_i``."""
    return [model._poly(model.pairing.pair(kap, {i: 1})) if kap else model.zero() for i in model.coords]


def cs_potential(model: LocalModel) -> dict:
    """``Psi(b) = sum_{k>=2} w_k <m_k(b^k), b>`` and the check ``dPsi = iota kappa``.

    ``w_k = 1/(k+1)`` for A-infinity models and ``1/(k+1)!`` for L-infinity.
    """
    sp = model.algebra.space
    pair = model.pairing
    for (i, j) in pair.gram:
        if sp.degrees[i] in (1, 2):
            _require(sp.degrees[i] + sp.degrees[j] == 3, "dim-3 scenario pairs degree 1 with degree 2")
    d1 = sp.indices_of_degree(1)
    d2 = sp.indices_of_degree(2)
    mat = [[pair.gram.get((i, j), Fraction(0)) for j in d2] for i in d1]
    _require(len(d1) == len(d2) and (not d1 or linalg.rank(mat) == len(d1)),
             "pairing is not perfect between degrees 1 and 2")
    alg = model.truncated()
    b = model.coordinate()
    psi = model.zero()
    for k in sorted(alg.ops):
        if k < 2 or alg.ops[k].is_zero():
            continue
        one = HomotopyAlgebra(sp, {k: alg.ops[k]}, alg.flavor, None)
        val = kuranishi(one, b)
        if alg.flavor == LINF:
            w = Fraction(1, math.factorial(k + 1)) * math.factorial(k)  # kuranishi already divides by k!
        else:
            w = Fraction(1, k + 1)
        psi = psi + model._poly(pair.pair(val, b)) * QQ(w.numerator, w.denominator)
    psi = truncate_poly(psi, model.truncation + 1)
    kap = model.kappa()
    grad = [truncate_poly(psi.diff(g), model.truncation) for g in model.gens]
    iota = _iota(model, kap)
    defect = [g - i for g, i in zip(grad, iota)]
    return {"psi": psi, "gradient": grad, "iota_kappa": iota, "defect": defect,
            "holds": all(d == 0 for d in defect)}


def finite_difference_check(model: LocalModel, points: int = 10, step: float = 1e-5,
                            seed: int = 0, scale: float = 0.5) -> float:
    """Largest gap between a central-difference gradient of ``Psi`` and ``iota kappa``."""
    res = cs_potential(model)
    psi, iota = res["psi"], res["iota_kappa"]
    rng = random.Random(seed)
    m = len(model.gens)
    worst = 0.0
    for _ in range(points):
        x = [rng.uniform(-scale, scale) for _ in range(m)]
        for j in range(m):
            up = list(x)
            dn = list(x)
            up[j] += step
            dn[j] -= step
            fd = (_eval(psi, up) - _eval(psi, dn)) / (2 * step)
            worst = max(worst, abs(fd - _eval(iota[j], x)))
    return worst


def _eval(p, x) -> float:
    total = 0.0
    for mon, c in p.terms():
        term = float(Fraction(int(c.numerator), int(c.denominator)))
        for xi, e in zip(x, mon):
            term *= xi ** e
        total += term
    return total


# ---------------------------------------------------------------------------
# dimension 4


def check_dim4(model: LocalModel) -> dict:
    """``<kappa, kappa> = 0`` and ``<d_v kappa, kappa> = 0`` for every coordinate ``v``.

    When the degree-two part is one-dimensional the certificate also records
    whether ``kappa`` itself vanishes, which the isotropy forces.
    """
    sp = model.algebra.space
    d2 = sp.indices_of_degree(2)
    sub = [[model.pairing.gram.get((i, j), Fraction(0)) for j in d2] for i in d2]
    _require(not d2 or linalg.rank(sub) == len(d2), "dim-4 scenario needs a perfect pairing on degree 2")
    kap = model.kappa()
    N = model.truncation
    kk = truncate_poly(_self_pair(model, kap, kap), N)
    dk = []
    for g in model.gens:
        dkap = {o: c.diff(g) for o, c in kap.items()}
        dk.append(truncate_poly(_self_pair(model, dkap, kap), N - 1))
    out = {
        "scenario": "dim4",
        "kappa": kap,
        "kappa_kappa": kk,
        "dkappa_kappa": dk,
        "isotropic": kk == 0,
        "dkappa_isotropic": all(x == 0 for x in dk),
    }
    if len(d2) == 1:
        out["ext2_dim_one"] = True
        out["kappa_vanishes"] = not kap
    out["passed"] = out["isotropic"] and out["dkappa_isotropic"] and out.get("kappa_vanishes", True)
    return out


def _self_pair(model: LocalModel, u: dict, v: dict):
    total = model.zero()
    for (i, j), c in model.pairing.gram.items():
        a, b = u.get(i), v.get(j)
        if a is not None and b is not None:
            total = total + a * b * QQ(c.numerator, c.denominator)
    return total


def curved_three_term_complex(model: LocalModel) -> dict:
    """The sequence ``T_V -> O_V (x) Ext^2 -> Omega_V`` given by ``d kappa`` and its dual.

    Returns both maps as polynomial matrices, the composite (which equals a
    term involving ``kappa`` rather than zero when the model is curved) and
    the vector ``(d kappa)^dual(kappa)``, which vanishes identically.
    """
    sp = model.algebra.space
    d2 = sp.indices_of_degree(2)
    kap = model.kappa()
    N = model.truncation
    m = len(model.gens)
    dk = [[kap.get(o, model.zero()).diff(g) for g in model.gens] for o in d2]  # |d2| x m
    G = [[model.pairing.gram.get((i, j), Fraction(0)) for j in d2] for i in d2]
    # (d kappa)^dual = (d kappa)^T G : Ext^2 -> Omega
    dual = [[sum((dk[r][a] * QQ(G[r][c].numerator, G[r][c].denominator) for r in range(len(d2))), model.zero())
             for c in range(len(d2))] for a in range(m)]
    comp = [[truncate_poly(sum((dual[a][c] * dk[c][bb] for c in range(len(d2))), model.zero()), N)
             for bb in range(m)] for a in range(m)]
    kv = [kap.get(o, model.zero()) for o in d2]
    dual_kappa = [truncate_poly(sum((dual[a][c] * kv[c] for c in range(len(d2))), model.zero()), N)
                  for a in range(m)]
    # the composite equals the Hessian of <kappa, kappa>/2 minus <kappa, d^2 kappa>
    witness = [[truncate_poly(_hess_witness(model, kap, G, d2, a, bb), N) for bb in range(m)] for a in range(m)]
    return {
        "dkappa": dk,
        "dkappa_dual": dual,
        "composite": comp,
        "witness": witness,
        "composite_matches_witness": comp == witness,
        "dual_kappa": dual_kappa,
        "dual_kappa_zero": all(x == 0 for x in dual_kappa),
    }


def _hess_witness(model, kap, G, d2, a, b):
    """``-<kappa, d_a d_b kappa>``, the curvature term of the composite."""
    ga, gb = model.gens[a], model.gens[b]
    total = model.zero()
    for r, o in enumerate(d2):
        for c, q in enumerate(d2):
            if G[r][c] == 0:
                continue
            k1 = kap.get(o)
            k2 = kap.get(q)
            if k1 is None or k2 is None:
                continue
            total = total - k1 * k2.diff(ga).diff(gb) * QQ(G[r][c].numerator, G[r][c].denominator)
    return total


def non_regularity_witness(model: LocalModel):
    """A coordinate direction ``v`` with ``d_v kappa != 0`` (``None`` when ``kappa = 0``).

    Combined with ``<d_v kappa, kappa> = 0`` it exhibits a relation among
    the components of ``kappa`` with non-unit coefficients.
    """
    kap = model.kappa()
    if not kap:
        return None
    for j, g in enumerate(model.gens):
        if any(c.diff(g) != 0 for c in kap.values()):
            return j
    return None


# ---------------------------------------------------------------------------
# regularity identity


def regularity_identity_check(alg: HomotopyAlgebra, r, b: dict, k_max: int = 4) -> dict:
    """Residual of ``kappa_A(I_* b) = sum I(b.., kappa_H(b), ..b)`` for the transferred ``I``.

    ``b`` lives on the cohomology ``r.H`` (possibly with polynomial
    coefficients, then ``alg.truncation`` must be set).
    """
    from .homotopy import curvature_intertwining_residual
    from .transfer import transfer

    tr = transfer(alg, r, k_max)
    minimal = HomotopyAlgebra(tr.minimal.space, tr.minimal.ops, AINF, alg.truncation)
    target = HomotopyAlgebra(alg.space, alg.ops, AINF, alg.truncation)
    from .homotopy import HomotopyMorphism

    I = HomotopyMorphism(minimal, target, tr.I.comps, AINF)
    return curvature_intertwining_residual(I, b)
