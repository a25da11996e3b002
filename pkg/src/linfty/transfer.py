"""Homotopy transfer along a retraction by sums over decorated planar trees.

Two independent routes compute the same maps:

*Tree route.*  The operator words of the perturbation lemma on the tensor
coalgebra,

    m_k = p D (H D)^(k-2) i^(x)k,   I_k = (H D)^(k-1) i^(x)k,   P_k = p (D H)^(k-1),

(``D`` the coderivation of ``m_2``, ``H = h`` extended by
``sum_j (ip)^(x)j (x) H (x) 1^(x)rest``) are expanded symbolically once per
arity.  Every term is a planar binary tree with a label on each edge; terms
that vanish by ``hh = ph = hi = 0`` are dropped and equal trees are merged.
Signs are tracked as affine functions of the input degrees over GF(2) and
compared with the Koszul sign of evaluating the tree by grafting, which
leaves a constant coefficient per decorated tree.  The resulting decorated
tree sets are the tree families of the transfer formulas.

*Tensor route.*  The same words are applied literally to tensors of basis
vectors (:class:`TensorRoute`); it shares no code with the tree route beyond
the unary maps ``i, p, h`` themselves and serves as the oracle.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .graded import (GradedError, GradedSpace, MultiMap, compose, graft, identity,
                     operator_norm, sum_maps, zero_map)
from .hodge import RetractionData
from .homotopy import AINF, HomotopyAlgebra, HomotopyMorphism, compositions, ledger_bound_holds, norm_ledger

# ---------------------------------------------------------------------------
# planar binary trees

LEAF = "x"


def enumerate_trees(k: int) -> list:
    """All planar binary trees with ``k`` leaves in canonical order.

    A leaf is ``"x"`` and an internal vertex is a pair ``(left, right)``.
    """
    if k < 1:
        raise GradedError("trees need at least one leaf")
    return sorted(_trees(k), key=tree_string)


@lru_cache(maxsize=None)
def _trees(k: int) -> tuple:
    if k == 1:
        return (LEAF,)
    out = []
    for a in range(1, k):
        for left in _trees(a):
            for right in _trees(k - a):
                out.append((left, right))
    return tuple(out)


def tree_string(t) -> str:
    if t == LEAF:
        return LEAF
    return "(" + tree_string(t[0]) + tree_string(t[1]) + ")"


def leaf_count(t) -> int:
    return 1 if t == LEAF else leaf_count(t[0]) + leaf_count(t[1])


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


# ---------------------------------------------------------------------------
# decorated trees
#
# A decorated tree is ("leaf", label) or ("node", label, left, right); the
# label sits on the edge leaving the vertex toward the root.  Labels are
# strings ("i", "p", "ip", "h", "id") or, after substitution, any key of the
# evaluation table.


def dtree_string(t) -> str:
    if t[0] == "leaf":
        return t[1]
    return f"{t[1]}({dtree_string(t[2])},{dtree_string(t[3])})"


def dtree_shape(t):
    if t[0] == "leaf":
        return LEAF
    return (dtree_shape(t[2]), dtree_shape(t[3]))


def dtree_edges(t) -> list:
    """All edge labels in prefix order."""
    if t[0] == "leaf":
        return [t[1]]
    return [t[1]] + dtree_edges(t[2]) + dtree_edges(t[3])


def dtree_leaves(t) -> int:
    return 1 if t[0] == "leaf" else dtree_leaves(t[2]) + dtree_leaves(t[3])


def relabel(t, fn):
    if t[0] == "leaf":
        return ("leaf", fn(t[1]))
    return ("node", fn(t[1]), relabel(t[2], fn), relabel(t[3], fn))


# Reduction of label words under the side conditions.  ``_AFTER[(x, l)]`` is
# the label of "apply x after l", or None when the composite vanishes.
_AFTER = {
    ("ip", "id"): "ip", ("ip", "ip"): "ip", ("ip", "h"): None, ("ip", "i"): "i",
    ("h", "id"): "h", ("h", "ip"): None, ("h", "h"): None, ("h", "i"): None,
    ("p", "id"): "p", ("p", "ip"): "p", ("p", "h"): None, ("p", "i"): "id_H",
}

_DEGREE = {"i": 0, "p": 0, "ip": 0, "id": 0, "h": 1, "id_H": 0}


@dataclass(frozen=True)
class _Factor:
    tree: tuple          # decorated subtree without its outgoing label
    label: str           # current outgoing label
    form: tuple          # (constant bit, input mask) = shifted degree mod 2


def _xor(a, b):
    return (a[0] ^ b[0], a[1] ^ b[1])


def _apply_label(f: _Factor, x: str):
    new = _AFTER[(x, f.label)]
    if new is None:
        return None
    deg = _DEGREE[x]
    return _Factor(f.tree, new, (f.form[0] ^ (deg & 1), f.form[1]))


def _finish(f: _Factor):
    if f.tree[0] == "leaf":
        return ("leaf", f.label)
    return ("node", f.label, f.tree[1], f.tree[2])


def _merge(a: _Factor, b: _Factor) -> _Factor:
    tree = ("node", _finish(a), _finish(b))
    return _Factor(tree, "id", (a.form[0] ^ b.form[0] ^ 1, a.form[1] ^ b.form[1]))


def _prefix_form(factors, upto):
    s = (0, 0)
    for f in factors[:upto]:
        s = _xor(s, f.form)
    return s


def _step_delta(terms):
    out = []
    for sign, factors in terms:
        for a in range(len(factors) - 1):
            s = _xor(sign, _prefix_form(factors, a))
            merged = _merge(factors[a], factors[a + 1])
            out.append((s, factors[:a] + (merged,) + factors[a + 2:]))
    return out


def _step_H(terms):
    """Apply ``h`` extended by ``(ip)^j (x) h (x) 1``."""
    out = []
    for sign, factors in terms:
        for j in range(len(factors)):
            new = []
            ok = True
            for q, f in enumerate(factors):
                if q < j:
                    g = _apply_label(f, "ip")
                elif q == j:
                    g = _apply_label(f, "h")
                else:
                    g = f
                if g is None:
                    ok = False
                    break
                new.append(g)
            if not ok:
                continue
            out.append((_xor(sign, _prefix_form(factors, j)), tuple(new)))
    return out


def _step_all(terms, x):
    out = []
    for sign, factors in terms:
        new = [_apply_label(f, x) for f in factors]
        if any(g is None for g in new):
            continue
        out.append((sign, tuple(new)))
    return out


def _graft_form(t):
    """Koszul sign of evaluating a decorated tree by grafting, plus its degree parity.

    Returns ``(sign form, operator degree parity, leaf mask, leaf count)`` for
    leaves numbered from the subtree's first leaf at bit 0.
    """
    if t[0] == "leaf":
        return (0, 0), _DEGREE.get(t[1], 0) & 1, 1, 1
    lf, ldeg, lmask, ln = _graft_form(t[2])
    rf, rdeg, rmask, rn = _graft_form(t[3])
    rmask_sh = rmask << ln
    rf_sh = (rf[0], rf[1] << ln)
    s = _xor(lf, rf_sh)
    if rdeg:
        # the right branch is moved past the inputs of the left branch
        s = (s[0], s[1] ^ lmask)
    deg = (ldeg + rdeg + 1 + _DEGREE.get(t[1], 0)) & 1
    return s, deg, lmask | rmask_sh, ln + rn


def _expand(word: str, k: int) -> dict:
    """Expand an operator word on ``k`` inputs into ``{decorated tree: coefficient}``."""
    start = "i" if word in ("m", "I") else "id"
    factors = tuple(_Factor(("leaf",), start, (0, 1 << q)) for q in range(k))
    terms = [((0, 0), factors)]
    if word == "m":
        if k == 1:
            terms = _step_all(terms, "p")
        else:
            terms = _step_delta(terms)
            for _ in range(k - 2):
                terms = _step_H(terms)
                terms = _step_delta(terms)
            terms = _step_all(terms, "p")
    elif word == "I":
        for _ in range(k - 1):
            terms = _step_delta(terms)
            terms = _step_H(terms)
    elif word == "P":
        for _ in range(k - 1):
            terms = _step_H(terms)
            terms = _step_delta(terms)
        terms = _step_all(terms, "p")
    else:
        raise GradedError(f"unknown word {word!r}")
    coeffs: Counter = Counter()
    for sign, facs in terms:
        (f,) = facs
        t = _finish(f)
        if t[0] == "leaf":
            t = ("leaf", t[1])
        gform = _graft_form(t)[0]
        rel = _xor(sign, gform)
        if rel[1] != 0:
            raise AssertionError("sign of an expansion term depends on the inputs")
        coeffs[t] += -1 if rel[0] else 1
    return {t: c for t, c in coeffs.items() if c != 0}


@lru_cache(maxsize=None)
def decorated_trees(word: str, k: int) -> tuple:
    """Sorted ``(decorated tree, coefficient)`` pairs for ``m``, ``I`` or ``P`` at arity ``k``."""
    if k < 1:
        raise GradedError("arity must be at least 1")
    if word == "m" and k == 1:
        return ((("leaf", "id_H"), 0),)
    if word == "I" and k == 1:
        return ((("leaf", "i"), 1),)
    if word == "P" and k == 1:
        return ((("leaf", "p"), 1),)
    items = _expand(word, k)
    return tuple(sorted(items.items(), key=lambda kv: dtree_string(kv[0])))


def p_decorations(k: int) -> list:
    """The decorated trees with nonzero coefficient in ``P_k``."""
    return [t for t, c in decorated_trees("P", k) if c]


# ---------------------------------------------------------------------------
# evaluation by grafting


def evaluate_dtree(t, table: dict, m2: MultiMap) -> MultiMap:
    """Operadic composition along ``t``: ``m2`` on vertices, ``table[label]`` on edges."""
    if t[0] == "leaf":
        return table[t[1]]
    left = evaluate_dtree(t[2], table, m2)
    right = evaluate_dtree(t[3], table, m2)
    body = graft(m2, [left, right])
    if t[1] == "id":
        return body
    return compose(table[t[1]], body, 1)


def _table(r: RetractionData) -> dict:
    return {"i": r.i, "p": r.p, "ip": r.ip, "h": r.h, "id": identity(r.algebra.space)}


def _tree_sum(items, table, m2, src, tgt, degree, parallel: int = 1) -> MultiMap:
    items = [(t, c) for t, c in items if c]

    def one(tc):
        t, c = tc
        return evaluate_dtree(t, table, m2).scale(Fraction(c) if not _is_float(table) else float(c))

    if parallel > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as ex:
            parts = list(ex.map(one, items))
    else:
        parts = [one(tc) for tc in items]
    if not parts:
        return zero_map(src, tgt, degree)
    out = sum_maps(parts)
    out.degree = degree
    return out


def _is_float(table) -> bool:
    for m in table.values():
        for row in m.entries.values():
            for v in row.values():
                return isinstance(v, float)
    return False


def transfer_m(alg: HomotopyAlgebra, r: RetractionData, k: int, parallel: int = 1) -> MultiMap:
    """Arity-``k`` transferred product on the cohomology ``r.H``."""
    H = r.H
    if k == 1:
        return compose(compose(r.p, alg.m1, 1), r.i, 1)
    table = _table(r)
    return _tree_sum(decorated_trees("m", k), table, alg.m2, (H,) * k, H, 1, parallel)


def transfer_I(alg: HomotopyAlgebra, r: RetractionData, k: int, parallel: int = 1) -> MultiMap:
    H, A = r.H, alg.space
    if k == 1:
        return r.i
    return _tree_sum(decorated_trees("I", k), _table(r), alg.m2, (H,) * k, A, 0, parallel)


def transfer_P(alg: HomotopyAlgebra, r: RetractionData, k: int, parallel: int = 1) -> MultiMap:
    H, A = r.H, alg.space
    if k == 1:
        return r.p
    return _tree_sum(decorated_trees("P", k), _table(r), alg.m2, (A,) * k, H, 0, parallel)


@dataclass
class Transfer:
    """The transferred structure with its quasi-isomorphisms, up to ``k_max``."""

    algebra: HomotopyAlgebra
    retraction: RetractionData
    k_max: int
    minimal: HomotopyAlgebra
    I: HomotopyMorphism
    P: HomotopyMorphism


def transfer(alg: HomotopyAlgebra, r: RetractionData, k_max: int, parallel: int = 1) -> Transfer:
    H = r.H
    ops = {}
    for k in range(1, k_max + 1):
        mk = transfer_m(alg, r, k, parallel)
        mk.degree = 1
        ops[k] = mk
    minimal = HomotopyAlgebra(H, ops, AINF)
    Ic = {k: transfer_I(alg, r, k, parallel) for k in range(1, k_max + 1)}
    Pc = {k: transfer_P(alg, r, k, parallel) for k in range(1, k_max + 1)}
    return Transfer(alg, r, k_max, minimal,
                    HomotopyMorphism(minimal, alg, Ic, AINF),
                    HomotopyMorphism(alg, minimal, Pc, AINF))


# ---------------------------------------------------------------------------
# tensor route (oracle)


class TensorRoute:
    """Apply the perturbation-lemma words literally to tensors of basis vectors.

    A tensor is ``{key: coeff}`` with ``key`` a tuple of ``(space tag, index)``
    pairs; the tag selects the big space ``A`` (0) or the small space ``H`` (1).
    """

    def __init__(self, alg: HomotopyAlgebra, r: RetractionData, i=None, p=None, ip=None, h=None):
        self.alg = alg
        self.spaces = (alg.space, r.H)
        self.i = i if i is not None else r.i
        self.p = p if p is not None else r.p
        self.ip = ip if ip is not None else r.ip
        self.h = h if h is not None else r.h
        self.m2 = alg.m2
        self._m2_rows = {}
        for (a, b), row in self.m2.entries.items():
            self._m2_rows[(a, b)] = row

    def _shdeg(self, factor) -> int:
        tag, idx = factor
        return self.spaces[tag].degrees[idx] - 1

    def _apply_unary(self, tensor, j, f: MultiMap, out_tag: int):
        out = {}
        odd = f.degree & 1
        for key, c in tensor.items():
            tag, idx = key[j]
            row = f.entries.get((idx,))
            if not row:
                continue
            s = c
            if odd and sum(self._shdeg(x) for x in key[:j]) & 1:
                s = -c
            for o, v in row.items():
                nk = key[:j] + ((out_tag, o),) + key[j + 1:]
                out[nk] = out.get(nk, 0) + s * v
        return {k: v for k, v in out.items() if v != 0}

    def apply_all(self, tensor, f: MultiMap, out_tag: int):
        n = len(next(iter(tensor))) if tensor else 0
        for j in range(n):
            tensor = self._apply_unary(tensor, j, f, out_tag)
        return tensor

    def delta(self, tensor):
        out = {}
        for key, c in tensor.items():
            n = len(key)
            pre = 0
            for a in range(n - 1):
                row = self._m2_rows.get((key[a][1], key[a + 1][1]))
                if row:
                    s = -c if pre & 1 else c
                    for o, v in row.items():
                        nk = key[:a] + ((0, o),) + key[a + 2:]
                        out[nk] = out.get(nk, 0) + s * v
                pre += self._shdeg(key[a])
        return {k: v for k, v in out.items() if v != 0}

    def H(self, tensor):
        """``sum_j (ip)^(x)j (x) h (x) 1``."""
        out = {}
        n = len(next(iter(tensor))) if tensor else 0
        for j in range(n):
            t = tensor
            for q in range(j):
                t = self._apply_unary(t, q, self.ip, 0)
            t = self._apply_unary(t, j, self.h, 0)
            for k, v in t.items():
                out[k] = out.get(k, 0) + v
        return {k: v for k, v in out.items() if v != 0}

    def word(self, name: str, k: int) -> MultiMap:
        A, H = self.spaces
        if name in ("m", "I"):
            src, tag = H, 1
        else:
            src, tag = A, 0
        tgt = H if name in ("m", "P") else A
        deg = 1 if name == "m" else 0
        ent = {}
        for key in product(range(src.dim), repeat=k):
            t = {tuple((tag, x) for x in key): Fraction(1)}
            if name == "m":
                t = self.apply_all(t, self.i, 0)
                t = self.delta(t)
                for _ in range(k - 2):
                    t = self.H(t)
                    t = self.delta(t)
                t = self.apply_all(t, self.p, 1)
            elif name == "I":
                t = self.apply_all(t, self.i, 0)
                for _ in range(k - 1):
                    t = self.delta(t)
                    t = self.H(t)
            else:
                for _ in range(k - 1):
                    t = self.H(t)
                    t = self.delta(t)
                t = self.apply_all(t, self.p, 1)
            row = {}
            for kk, v in t.items():
                (ft,) = kk
                row[ft[1]] = row.get(ft[1], 0) + v
            row = {o: v for o, v in row.items() if v != 0}
            if row:
                ent[key] = row
        return MultiMap((src,) * k, tgt, deg, ent, check=False)


# ---------------------------------------------------------------------------
# norm ledger


def verify_norm_ledger(maps: dict, m2: MultiMap, h: MultiMap) -> dict:
    """Norms of a family and the check ``||f_k|| <= (4 D^2)^k``, ``D = max(||m2||, ||h||, 1)``."""
    D = max(operator_norm(m2), operator_norm(h), Fraction(1))
    bound = 4 * D * D
    ledger = norm_ledger(maps)
    ok = ledger_bound_holds(ledger, bound)
    return {"D": D, "bound": bound, "C": ledger["C"], "per_k": ledger["per_k"], "holds": ok}


# ---------------------------------------------------------------------------
# counting


def count_p_trees(k: int) -> int:
    return len(p_decorations(k))


def admissible_colorings(k: int, labels=("id", "ip", "h")):
    """All decorations of all planar trees with ``k`` leaves: root ``p``, other edges from ``labels``."""
    for shape in enumerate_trees(k):
        edges = _count_edges(shape) - 1
        for cols in product(labels, repeat=edges):
            it = iter(cols)
            yield _decorate(shape, it, root=True)


def _count_edges(shape) -> int:
    return 1 if shape == LEAF else 1 + _count_edges(shape[0]) + _count_edges(shape[1])


def _decorate(shape, it, root=False):
    lab = "p" if root else next(it)
    if shape == LEAF:
        return ("leaf", lab)
    left = _decorate(shape[0], it)
    right = _decorate(shape[1], it)
    return ("node", lab, left, right)


# ---------------------------------------------------------------------------
# heat-kernel homotopy between id and I o P
#
# W-trees: an I-tree on s leaves (root and internal edges h) with a P-tree
# grafted onto each leaf; the joining edges and the black edges of the
# P-trees carry K_t, white edges carry h_t.  V-trees switch one K_t to the
# blue operator B_t = -m1* K_t.


def _graft_leaves(top, subs):
    it = iter(subs)

    def go(t):
        if t[0] == "leaf":
            return next(it)
        return ("node", t[1], go(t[2]), go(t[3]))

    return go(top)


@lru_cache(maxsize=None)
def w_trees(k: int) -> tuple:
    """``(decorated tree, coefficient)`` pairs of the arity-``k`` component of ``R``."""
    out = []
    for s in range(1, k + 1):
        for top, c in decorated_trees("I", s):
            for parts in compositions(k, s):
                for choice in product(*[decorated_trees("P", n) for n in parts]):
                    coeff = c
                    subs = []
                    for pt, cc in choice:
                        coeff *= cc
                        subs.append(relabel((pt[0], "ip") + pt[2:], lambda l: "K" if l == "ip" else l))
                    if coeff:
                        out.append((_graft_leaves(top, subs), coeff))
    return tuple(sorted(out, key=lambda tc: dtree_string(tc[0])))


def _parity(t) -> int:
    odd = 1 if t[1] in ("h", "B") else 0
    if t[0] == "leaf":
        return odd
    return (1 + odd + _parity(t[2]) + _parity(t[3])) & 1


def _blue_variants(t):
    """Trees with one ``K`` switched to ``B``, with the Koszul parity of the subtrees to its right."""
    if t[0] == "leaf":
        return [(("leaf", "B"), 0)] if t[1] == "K" else []
    out = []
    if t[1] == "K":
        out.append((("node", "B", t[2], t[3]), 0))
    for left, s in _blue_variants(t[2]):
        out.append((("node", t[1], left, t[3]), s ^ _parity(t[3])))
    for right, s in _blue_variants(t[3]):
        out.append((("node", t[1], t[2], right), s))
    return out


@lru_cache(maxsize=None)
def v_trees(k: int) -> tuple:
    """``(decorated tree, coefficient)`` pairs of the arity-``k`` component of ``S``."""
    out = []
    for t, c in w_trees(k):
        for bt, s in _blue_variants(t):
            out.append((bt, -c if s else c))
    return tuple(out)


def _heat_table(alg: HomotopyAlgebra, heat, t: float) -> dict:
    from .hodge import _float_map

    A = alg.space
    return {"K": _float_map(A, heat.K(t), 0), "h": _float_map(A, heat.h(t), -1),
            "B": _float_map(A, heat.blue(t), -1), "L": _float_map(A, -heat.laplacian() @ heat.K(t), 0),
            "id": identity(A)}


def _float_m2(alg):
    return alg.m2.map_coeffs(float)


def _parse_t(t):
    if isinstance(t, str):
        return math.inf if t.strip().lower() in ("inf", "infinity", "oo") else float(t)
    if t < 0:
        raise GradedError("heat time must be nonnegative")
    return t


def homotopy_R(alg: HomotopyAlgebra, r: RetractionData, heat, k: int, t, parallel: int = 1) -> MultiMap:
    """Arity-``k`` component of ``R(t)``; exact at ``t = 0`` and ``t = inf``."""
    t = _parse_t(t)
    A = alg.space
    if t == 0:
        return identity(A) if k == 1 else zero_map((A,) * k, A, 0)
    if t == math.inf:
        table = {"K": r.ip, "h": r.h, "id": identity(A)}
        return _tree_sum(w_trees(k), table, alg.m2, (A,) * k, A, 0, parallel)
    return _tree_sum(w_trees(k), _heat_table(alg, heat, t), _float_m2(alg), (A,) * k, A, 0, parallel)


def homotopy_S(alg: HomotopyAlgebra, r: RetractionData, heat, k: int, t, parallel: int = 1) -> MultiMap:
    """Arity-``k`` component of ``S(t)``, of degree -1; zero at ``t = inf``."""
    t = _parse_t(t)
    A = alg.space
    if t == math.inf:
        return zero_map((A,) * k, A, -1)
    return _tree_sum(v_trees(k), _heat_table(alg, heat, t), _float_m2(alg), (A,) * k, A, -1, parallel)


def homotopy_dR(alg: HomotopyAlgebra, r: RetractionData, heat, k: int, t) -> MultiMap:
    """``d/dt R_k(t)`` by the Leibniz rule: ``K' = -L K`` and ``h' = B``."""
    t = _parse_t(t)
    A = alg.space
    if t == math.inf:
        return zero_map((A,) * k, A, 0)
    items = []
    for tree, c in w_trees(k):
        for variant in _edge_variants(tree, {"K": "L", "h": "B"}):
            items.append((variant, c))
    return _tree_sum(items, _heat_table(alg, heat, t), _float_m2(alg), (A,) * k, A, 0)


def _edge_variants(t, swap: dict):
    if t[0] == "leaf":
        return [("leaf", swap[t[1]])] if t[1] in swap else []
    out = []
    if t[1] in swap:
        out.append(("node", swap[t[1]], t[2], t[3]))
    out += [("node", t[1], v, t[3]) for v in _edge_variants(t[2], swap)]
    out += [("node", t[1], t[2], v) for v in _edge_variants(t[3], swap)]
    return out


def reparametrize(u: float) -> tuple[float, float]:
    """``f(u) = tan(pi u / 2)`` and ``f'(u)``, exact at ``u = 0, 1/2, 1``."""
    if not 0 <= u <= 1:
        raise GradedError("u must lie in [0, 1]")
    if u == 0:
        return 0.0, math.pi / 2
    if u == 0.5:
        return 1.0, math.pi
    if u == 1:
        return math.inf, math.inf
    x = math.pi * u / 2
    return math.tan(x), (math.pi / 2) / math.cos(x) ** 2


def homotopy_H(alg: HomotopyAlgebra, r: RetractionData, heat, k: int, u) -> tuple[MultiMap, MultiMap]:
    """``(R(f(u)), S(f(u)) f'(u))``: the two form components of the pulled back homotopy on ``[0, 1]``."""
    t, dt = reparametrize(float(u))
    A = alg.space
    R = homotopy_R(alg, r, heat, k, t)
    if t == math.inf:
        return R, zero_map((A,) * k, A, -1)
    return R, homotopy_S(alg, r, heat, k, t).scale(dt)


def _dt_target(alg: HomotopyAlgebra) -> HomotopyAlgebra:
    from .homotopy import exterior_dt, tensor_with_cdga

    return tensor_with_cdga(alg, exterior_dt())


def _pack(A: GradedSpace, tgt: GradedSpace, R: MultiMap, S: MultiMap) -> MultiMap:
    """``x -> R(x) (x) 1 + (-1)^|S(x)| S(x) (x) dt`` on the basis pairs of ``A (x) Q[dt]``."""
    ent: dict = {}
    for key, row in R.entries.items():
        for o, v in row.items():
            ent.setdefault(key, {})[2 * o] = v
    for key, row in S.entries.items():
        for o, v in row.items():
            ent.setdefault(key, {})[2 * o + 1] = -v if A.degrees[o] & 1 else v
    return MultiMap(R.src, tgt, 0, ent, check=False)


def homotopy_residual(alg: HomotopyAlgebra, r: RetractionData, heat, n: int, t,
                      derivative: MultiMap | None = None) -> MultiMap:
    """Arity-``n`` morphism equation of ``R + S dt`` into ``A (x) Q[dt]``.

    The time derivative enters through the de Rham term ``-(-1)^|a|' a' (x) dt``;
    pass ``derivative`` to use another approximation of ``d/dt R_n``.
    """
    t = _parse_t(t)
    A = alg.space
    tgt = _dt_target(alg)
    # exact arithmetic only at t = inf; S(0) is already float
    conv = (lambda m: m) if t == math.inf else (lambda m: m.map_coeffs(float))
    src_alg = HomotopyAlgebra(A, {k: conv(m) for k, m in alg.ops.items()}, AINF)
    tgt_alg = HomotopyAlgebra(tgt.space, {k: conv(m) for k, m in tgt.ops.items()}, AINF)
    comps = {}
    for k in range(1, n + 1):
        R = conv(homotopy_R(alg, r, heat, k, t))
        S = conv(homotopy_S(alg, r, heat, k, t))
        comps[k] = _pack(A, tgt.space, R, S)
    res = HomotopyMorphism(src_alg, tgt_alg, comps, AINF).residual(n)
    if t == math.inf:
        return res
    dR = derivative if derivative is not None else homotopy_dR(alg, r, heat, n, t)
    ent = {}
    for key, row in dR.entries.items():
        for o, v in row.items():
            ent.setdefault(key, {})[2 * o + 1] = v if (A.degrees[o] - 1) & 1 else -v
    return res + MultiMap((A,) * n, tgt.space, 1, ent, check=False)
