"""Transfinite induction on boundary systems.

Starting from a verified model, ``run_induction`` repeatedly classifies
the system, applies the matching transformation (each one verified on
the spot) and, once the parameter reaches (0, 0), walks back through the
recorded back-translations.  Every model produced on the way back is
verified as well, so the result is a model of the input system built
only from what the last system's model provides.

The parameter of ``(S, M)`` is ``(alpha, n)``: alpha is the largest
position of an index where some box ends, n the number of boxes ending
there.  Positions and everything else are exact ordinals below
``omega^omega``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from .boundary import (BoundaryModel, BoundarySystem, FactorizationScheme, common_refinement,
                       compose_theta, dual, restrict, require_model, s_mul, s_value,
                       scheme_of, sv, translate_BH, verify_scheme, with_duals, zeta_chi_of)
from .config import budget_override
from .equality import HOracle, TRIVIAL, equal_mod_DRH
from .errors import (BudgetExceeded, DecompositionFailed, OrdinalError, PreconditionFailed,
                     SideConditionViolated)
from .factorization import alpha, extract, is_reduced_product, regular_part, split_at_content
from .ordinals import ZERO, Ordinal, format_ordinal, ord_divmod
from .terms import EMPTY, Empty, KappaTerm, Lit, concat, omega, power, render, repeat

log = logging.getLogger(__name__)

DEFAULT_STEP_BUDGET = 10 ** 4


def _rel_key(S, rel):
    i, x, j, xb = rel
    return (S.pos(i), x, S.pos(j), xb)


class _Names:
    """Fresh names avoiding a given set."""

    def __init__(self, taken=()):
        self.taken = set(taken)
        self.next = {}

    def new(self, stem):
        n = self.next.get(stem, 1)
        while f"{stem}{n}" in self.taken:
            n += 1
        self.next[stem] = n + 1
        name = f"{stem}{n}"
        self.taken.add(name)
        return name

    def pair(self, stem):
        a = self.new(stem)
        b = a + "*"
        self.taken.add(b)
        return a, b


# ------------------------------------------------------------ parameter

def induction_parameter(S: BoundarySystem, mdl: BoundaryModel) -> tuple:
    """``(alpha, n)``; (0, 0) when no box ends at a positive position."""
    boxes = S.boxes()
    if not boxes:
        return (ZERO, 0)
    top = max(mdl.iota[S.right[x]] for _, x in boxes)
    if top.is_zero():
        return (ZERO, 0)
    n = sum(1 for _, x in boxes if mdl.iota[S.right[x]] == top)
    return (top, n)


def format_parameter(p) -> list:
    return [format_ordinal(p[0]), p[1]]


def _top_index(S, mdl):
    a, _ = induction_parameter(S, mdl)
    for i in S.J:
        if mdl.iota[i] == a:
            return i
    raise AssertionError("the parameter position is not an index")


@dataclass
class CaseTag:
    case: str
    witness: Optional[tuple] = None
    r: Optional[str] = None
    letter: Optional[str] = None

    def to_json(self):
        return {"case": self.case, "witness": list(self.witness) if self.witness else None,
                "r": self.r, "letter": self.letter}


def classify_case(S: BoundarySystem, mdl: BoundaryModel) -> CaseTag:
    """The first case (in the fixed order 1..5) that applies."""
    if induction_parameter(S, mdl)[0].is_zero():
        return CaseTag("Base")
    r = _top_index(S, mdl)
    rels = sorted(S.B, key=lambda rel: _rel_key(S, rel))
    for rel in rels:
        i, x, _, _ = rel
        if i == r and S.right[x] == r:
            return CaseTag("Case1", rel, r)
    for rel in rels:
        i, x, j, xb = rel
        if i == j and S.right[x] == r and S.right[xb] == r:
            return CaseTag("Case2", rel, r)
    for rel in rels:
        i, x, j, xb = rel
        if S.lt(i, j) and S.right[x] == r and S.right[xb] == r:
            small = mdl.piece(i, j).letters
            big = mdl.piece(i, r).letters
            if small < big:
                return CaseTag("Case3", rel, r, min(big - small))
    for rel in rels:
        i, x, j, xb = rel
        if S.right[x] == r and S.lt(S.right[xb], r):
            return CaseTag("Case4", rel, r)
    for rel in rels:
        i, x, j, xb = rel
        if S.lt(i, j) and S.right[x] == r and S.right[xb] == r:
            return CaseTag("Case5", rel, r)
    raise AssertionError("no case applies to a system with a positive parameter")


# ------------------------------------------------------------- steps

@dataclass
class Step:
    """One verified transformation and the way back."""
    label: str
    system: BoundarySystem
    model: BoundaryModel
    back: Callable[[BoundaryModel], BoundaryModel]
    info: dict = field(default_factory=dict)


def _names_for(S):
    return _Names(set(S.variables) | set(S.J))


def _system(S, C, w, variables, right, B, label):
    zeta, chi = zeta_chi_of(C, w)
    S1 = BoundarySystem(variables, C.J, zeta, dict(C.M), chi, right, B, [],
                        S.semigroup, dict(S.phi), origin={"derived": label})
    return S1, BoundaryModel(w, dict(C.iota), dict(C.theta))


def _eq(S1, a, b, c, d):
    """``(a|b) = (c|d)`` as chains of S1, or None when both are empty."""
    lhs, rhs = S1.chain(a, b), S1.chain(c, d)
    if isinstance(lhs, Empty) and isinstance(rhs, Empty):
        return None
    return (lhs, rhs)


def _xi(S, mdl, C):
    inv = {v: i for i, v in C.iota.items()}
    return {i: inv[mdl.iota[i]] for i in S.J}


def _back_restrict(S, S1, m1, lam, xi, iota, keys):
    C1 = scheme_of(S1, m1)
    return restrict(C1, S.J, iota, {k: lam[k] for k in keys}, S.semigroup, xi).theta


def delete_relations(S: BoundarySystem, mdl: BoundaryModel, rels, label) -> Step:
    """Drop relations (with their duals); the models do not change."""
    drop = with_duals(rels)
    S1 = BoundarySystem(dict(S.variables), S.J, S.zeta, S.M, S.chi, dict(S.right),
                        S.B - drop, list(S.BH), S.semigroup, dict(S.phi), origin={"derived": label})
    return Step(label, S1, mdl, lambda m1: m1, {"deleted": sorted(list(r) for r in drop)})


def case1(S, mdl, tag) -> Step:
    r = tag.r
    rels = [rel for rel in S.B if rel[0] == r and S.right[rel[1]] == r]
    return delete_relations(S, mdl, rels, "Case1")


def case2(S, mdl, tag) -> Step:
    return delete_relations(S, mdl, [tag.witness], "Case2")


def factorize_pair(S: BoundarySystem, mdl: BoundaryModel, E, Delta, h: HOracle = TRIVIAL,
                   label="Factorize") -> Step:
    """Factorization of ``(S, M)`` along relations ``E`` at cut pairs ``Delta``.

    Each relation ``(i, x, j, xbar)`` of E with cut pair ``(beta, gamma)``
    is replaced by ``(i, y, j, ybar)`` (boxes ending at beta and gamma)
    and ``(l, x, k, xbar)`` where l, k are the new indices at beta,
    gamma; B_H gains ``(i|l) = (j|k)``.
    """
    E = [tuple(e) for e in E]
    Delta = [(Ordinal.finite(b) if isinstance(b, int) else b, Ordinal.finite(g) if isinstance(g, int) else g)
             for b, g in Delta]
    if len(E) != len(Delta):
        raise SideConditionViolated("F.1", "one cut pair per relation is needed")
    for e in E:
        if e not in S.B:
            raise SideConditionViolated("F.1", f"{e} is not a relation of the system")
        if dual(e) in E and dual(e) != e:
            raise SideConditionViolated("F.1", f"both {e} and its dual were given")
    for (i, x, j, xb), (b, g) in zip(E, Delta):
        if not (mdl.iota[i] < b < mdl.iota[S.right[x]]):
            raise SideConditionViolated("F.1", f"need iota({i}) < {b} < iota(right({x}))")
        if not (mdl.iota[j] < g < mdl.iota[S.right[xb]]):
            raise SideConditionViolated("F.1", f"need iota({j}) < {g} < iota(right({xb}))")
        if not equal_mod_DRH(mdl.slice(mdl.iota[i], b), mdl.slice(mdl.iota[j], g), h):
            raise SideConditionViolated("F.2", f"w[iota({i}), {b}[ and w[iota({j}), {g}[ differ")

    names = _names_for(S)
    cut_pos = sorted({p for pair in Delta for p in pair} - set(mdl.iota.values()))
    cut = FactorizationScheme([names.new("c") for _ in cut_pos], {}, {}, {})
    cut.iota = dict(zip(cut.J, cut_pos))
    C0, lam, _ = common_refinement(scheme_of(S, mdl), cut, mdl.w, S.semigroup, S.phi)
    xi = _xi(S, mdl, C0)
    at = {v: i for i, v in C0.iota.items()}

    variables, right = dict(S.variables), {x: xi[r] for x, r in S.right.items()}
    drop = with_duals(E)
    B0 = {(xi[i], x, xi[j], xb) for (i, x, j, xb) in S.B - drop}
    added = []
    for (i, x, j, xb), (b, g) in zip(E, Delta):
        y, yb = names.pair("y")
        variables[y], variables[yb] = yb, y
        right[y], right[yb] = at[b], at[g]
        B0 |= with_duals([(xi[i], y, xi[j], yb), (at[b], x, at[g], xb)])
        added.append((xi[i], at[b], xi[j], at[g]))
    S0, M0 = _system(S, C0, mdl.w, variables, right, B0, label)
    BH = translate_BH(S.BH, xi, lam, C0.J)
    for a, b, c, d in added:
        eq = _eq(S0, a, b, c, d)
        if eq:
            BH.append(eq)
    S0.BH = BH

    def back(m0):
        iota = {i: m0.iota[xi[i]] for i in S.J}
        theta = _back_restrict(S, S0, m0, lam, xi, iota, S.tuples())
        return BoundaryModel(m0.w, iota, theta)

    return Step(label, S0, M0, back, {"E": [list(e) for e in E],
                                      "Delta": [[format_ordinal(b), format_ordinal(g)] for b, g in Delta]})


def case3(S, mdl, tag, h) -> list:
    """Cut the relation at the first occurrence of the witness letter,
    then delete the (now trivial) relation that ends there."""
    i0, x0, j0, xb0 = tag.witness
    r, a = tag.r, tag.letter
    whole = mdl.piece(i0, r)
    u_i, _ = split_at_content(whole.letters - {a}, whole)
    beta = mdl.iota[i0] + alpha(u_i)
    step = factorize_pair(S, mdl, [tag.witness], [(beta, beta)], h, label="Case3")
    S0 = step.system
    at = {v: i for i, v in step.model.iota.items()}
    rel = (at[beta], x0, at[beta], xb0)
    if rel not in S0.B:
        raise DecompositionFailed("the factorized relation is not trivial")
    return [step, delete_relations(S0, step.model, [rel], "Case2")]


def _E(S, r, i0):
    return sorted((rel for rel in S.B
                   if S.right[rel[1]] == r and S.right[rel[3]] == r
                   and S.lt(rel[0], rel[2]) and not S.lt(i0, rel[0])),
                  key=lambda rel: _rel_key(S, rel))


def aux_step(S, mdl, r, i0, h) -> Step:
    """Push one relation of E(S, i0) past the position of ``i0``."""
    k0, x0, k1, xb0 = _E(S, r, i0)[0]
    a = alpha(mdl.piece(k0, k1))
    try:
        q, _ = ord_divmod(alpha(mdl.piece(k0, i0)), a)
    except OrdinalError as e:
        raise DecompositionFailed(f"no finite multiple of {a} passes {i0}: {e}")
    n = q + 1
    beta = lambda p: mdl.iota[k0] + a * Ordinal.finite(p)
    return factorize_pair(S, mdl, [(k0, x0, k1, xb0)], [(beta(n), beta(n + 1))], h, label="Aux")


def _transport_value(phi_t, W, h):
    """v with ``Phi v = W`` modulo DRH, for R-equivalent Phi and W."""
    reg = regular_part(phi_t)
    v = EMPTY if reg is None else concat(power(reg), regular_part(W) or EMPTY)
    if not equal_mod_DRH(concat(phi_t, v), W, h):
        raise DecompositionFailed(f"cannot complete {render(phi_t)} to {render(W)}")
    return v


def case4_main(S, mdl, r, h) -> Step:
    """Transport the segment from l to r onto the partner box."""
    cands = [rel for rel in S.B if S.right[rel[1]] == r and S.lt(S.right[rel[3]], r)]
    ell = min((rel[0] for rel in cands), key=S.pos)
    x_rel = min((rel for rel in cands if rel[0] == ell), key=lambda rel: _rel_key(S, rel))
    _, x0, ell_s, xb0 = x_rel
    rm = S.pred(r)
    T = sorted({i for (i, x) in S.boxes() if S.right[x] == r} | {rm, r}, key=S.pos)
    io = {i: mdl.iota[ell_s] + (mdl.iota[i] - mdl.iota[ell]) for i in T}

    names = _names_for(S)
    J0 = [names.new("o") for _ in T]
    C0 = FactorizationScheme(J0, {n: io[i] for n, i in zip(J0, T)}, {}, {})
    o_of = dict(zip(T, J0))
    W = mdl.slice(io[rm], io[r])
    sg = S.semigroup
    t_of = {}
    for (i, j, s, mu) in S.tuples():
        if (i, j) != (rm, r):
            continue
        phi_t, _ = mdl.theta[(i, j, s, mu)]
        v = _transport_value(phi_t, W, h)
        t = (s[0], s_value(sg, S.phi, v))
        k = C0.M.get((o_of[rm], o_of[r], t), 0)
        C0.M[(o_of[rm], o_of[r], t)] = k + 1
        C0.theta[(o_of[rm], o_of[r], t, k)] = (phi_t, v)
        t_of[(s, mu)] = (t, k)
    rep = verify_scheme(C0, mdl.w, sg, S.phi, h)
    if not rep.ok:
        raise DecompositionFailed("transport scheme invalid: " + "; ".join(rep.failures()[:3]))

    C1, lam, lam0 = common_refinement(scheme_of(S, mdl), C0, mdl.w, sg, S.phi)
    xi = _xi(S, mdl, C1)
    at = {v: i for i, v in C1.iota.items()}
    bul = {i: at[io[i]] for i in T}

    variables = dict(S.variables)
    right = {}
    for x, rx in S.right.items():
        right[x] = bul[r] if rx == r else xi[rx]
    B1 = set()
    for i in T:
        if i == r:
            continue
        y, yb = names.pair("y")
        variables[y], variables[yb] = yb, y
        right[y], right[yb] = xi[i], bul[i]
        B1 |= with_duals([(xi[ell], y, bul[ell], yb)])
    Bp = S.B - with_duals([x_rel])
    for (i, x, j, xb) in Bp:
        if S.right[x] == r:
            if S.lt(S.right[xb], r):
                B1 |= with_duals([(bul[i], x, xi[j], xb)])
            else:
                B1 |= with_duals([(bul[i], x, bul[j], xb)])
        elif S.lt(S.right[xb], r):
            B1 |= with_duals([(xi[i], x, xi[j], xb)])
    S1, M1 = _system(S, C1, mdl.w, variables, right, B1, "Case4")
    BH = translate_BH(S.BH, xi, lam, C1.J)
    eq = _eq(S1, xi[ell], xi[rm], bul[ell], bul[rm])
    if eq:
        BH.append(eq)
    pr, pxr = S1.pred(bul[r]), S1.pred(xi[r])
    for (s, mu), (t, k) in sorted(t_of.items()):
        ts0, mu0 = lam0[(o_of[rm], o_of[r], t, k)]
        ts, mu1 = lam[(rm, r, s, mu)]
        rhs = concat(S1.chain(bul[rm], bul[r]), power(Lit(sv(pr, bul[r], ts0[-1], mu0))),
                     Lit(sv(pxr, xi[r], ts[-1], mu1)))
        BH.append((S1.chain(xi[rm], xi[r]), rhs))
    S1.BH = BH

    first = min(t_of)

    def back(m1):
        C1p = scheme_of(S1, m1)
        (s_q, mu_q), (t_q, k_q) = first, t_of[first]
        ts0, mu0 = lam0[(o_of[rm], o_of[r], t_q, k_q)]
        ts, mu1 = lam[(rm, r, s_q, mu_q)]
        tail = _pow_m1(m1.theta[(pr, bul[r], ts0[-1], mu0)][1])
        last = m1.theta[(pxr, xi[r], ts[-1], mu1)][1]
        head = m1.slice(ZERO, m1.iota[xi[rm]])
        mid = concat(m1.piece(bul[rm], bul[r]), tail, last)
        rest = m1.slice(m1.iota[xi[r]], alpha(m1.w))
        w = concat(head, mid, rest)
        iota = {}
        for i in S.J:
            if not S.lt(rm, i):
                iota[i] = m1.iota[xi[i]]
        iota[r] = iota[rm] + (m1.iota[bul[r]] - m1.iota[bul[rm]])
        for i in S.J:
            if S.lt(r, i):
                iota[i] = iota[r] + (m1.iota[xi[i]] - m1.iota[xi[r]])
        keys = [k for k in S.tuples() if (k[0], k[1]) != (rm, r)]
        theta = _back_restrict(S, S1, m1, lam, xi, iota, keys)
        for (s, mu), (t, k) in t_of.items():
            phi_t, _ = compose_theta(C1p, bul[rm], bul[r], t, lam0[(o_of[rm], o_of[r], t, k)], S.semigroup)
            ts, mu1 = lam[(rm, r, s, mu)]
            theta[(rm, r, s, mu)] = (phi_t, m1.theta[(pxr, xi[r], ts[-1], mu1)][1])
        return BoundaryModel(w, iota, theta)

    return Step("Case4", S1, M1, back, {"l": ell, "l*": ell_s, "r*": S.right[xb0], "T": T})


def _pow_m1(t):
    return EMPTY if isinstance(t, Empty) else power(t)


def case4(S, mdl, tag, h) -> list:
    r = tag.r
    cands = [rel for rel in S.B if S.right[rel[1]] == r and S.lt(S.right[rel[3]], r)]
    ell = min((rel[0] for rel in cands), key=S.pos)
    steps = []
    cur, m = S, mdl
    while _E(cur, r, ell):
        st = aux_step(cur, m, r, ell, h)
        steps.append(st)
        cur, m = st.system, st.model
        r = _top_index(cur, m)
    steps.append(case4_main(cur, m, r, h))
    return steps


# -------------------------------------------------------- periodicity

@dataclass
class PeriodicityDecomposition:
    u: KappaTerm
    v_list: list
    p_list: list

    def to_json(self):
        return {"u": render(self.u), "v": [render(v) for v in self.v_list], "p": list(self.p_list)}


def _strip(u, x):
    """``(p, v)`` with ``x = u^p v`` read off positions; p may be 0."""
    au, ax = alpha(u), alpha(x)
    try:
        p, _ = ord_divmod(ax, au)
    except OrdinalError as e:
        raise DecompositionFailed(f"{render(x)} is not a finite power of {render(u)}: {e}")
    return p, extract(x, au * Ordinal.finite(p), ax)


def _pair_root(x, y, h, budget):
    for _ in range(budget):
        ax, ay = alpha(x), alpha(y)
        if ax == ay:
            if not equal_mod_DRH(x, y, h):
                raise DecompositionFailed(f"{render(x)} and {render(y)} have no common root")
            return x
        if ay < ax:
            x, y = y, x
        p, rem = _strip(x, y)
        if not equal_mod_DRH(concat(repeat(x, p), rem), y, h):
            raise DecompositionFailed(f"{render(y)} does not start with powers of {render(x)}")
        if isinstance(rem, Empty) or rem.letters < x.letters:
            return x
        y = rem
    raise BudgetExceeded(budget, "periodicity")


def periodicity_decompose(xs, h: HOracle = TRIVIAL, budget: int = 1000) -> PeriodicityDecomposition:
    """``u``, ``v_i``, ``p_i`` with ``x_i = u^p_i v_i`` and ``v_i u = u``.

    Preconditions: each ``x_i x_i`` is a reduced product and all
    ``x_i^omega`` coincide modulo DRH (else PreconditionFailed with the
    offending pair).  The root is found by a Euclid-style descent on
    positions; the final decomposition is checked with the oracle.
    """
    xs = [x for x in xs]
    if not xs:
        raise PreconditionFailed("nothing to decompose")
    for x in xs:
        if isinstance(x, Empty):
            raise PreconditionFailed("empty factor", render(x))
        if not is_reduced_product(x, x):
            raise PreconditionFailed(f"{render(x)} {render(x)} is not a reduced product", [render(x)])
    w0 = omega(xs[0])
    for x in xs[1:]:
        if not equal_mod_DRH(omega(x), w0, h):
            raise PreconditionFailed(f"({render(xs[0])})^w and ({render(x)})^w differ",
                                     [render(xs[0]), render(x)])
    u = xs[0]
    for _ in range(budget):
        old = u
        for x in xs:
            u = _pair_root(u, x, h, budget)
        if equal_mod_DRH(u, old, h):
            break
    else:
        raise BudgetExceeded(budget, "periodicity")
    vs, ps = [], []
    for x in xs:
        p, v = _strip(u, x)
        if p < 1:
            raise DecompositionFailed(f"{render(u)} is longer than {render(x)}")
        if not equal_mod_DRH(concat(repeat(u, p), v), x, h):
            raise DecompositionFailed(f"{render(x)} differs from ({render(u)})^{p} {render(v)}")
        if not equal_mod_DRH(concat(v, u), u, h):
            raise DecompositionFailed(f"{render(v)} {render(u)} differs from {render(u)}")
        if not is_reduced_product(u, u) or not (isinstance(v, Empty) or
                                                (is_reduced_product(u, v) and is_reduced_product(v, u))):
            raise DecompositionFailed("a product in the decomposition is not reduced")
        vs.append(v)
        ps.append(p)
    return PeriodicityDecomposition(u, vs, ps)


# ---------------------------------------------------------------- Case 5

def _case5_c(S, mdl, r):
    cands = [S.J[0]]
    rights = [S.right[x] for (_, x) in S.boxes() if S.lt(S.right[x], r)]
    if rights:
        cands.append(max(rights, key=S.pos))
    with_box = {i for (i, _) in S.boxes()}
    free = [i for i in S.J if S.lt(i, r) and i not in with_box]
    if free:
        cands.append(max(free, key=S.pos))
    return max(cands, key=S.pos)


def case5(S, mdl, tag, h, n_rule="least") -> list:
    r = tag.r
    c = _case5_c(S, mdl, r)
    steps = []
    cur, m = S, mdl
    while _E(cur, r, c):
        st = aux_step(cur, m, r, c, h)
        steps.append(st)
        cur, m = st.system, st.model
    E = _E(cur, r, cur.J[-1])
    ell = max((rel[0] for rel in E), key=cur.pos)
    off = [rel for rel in E if rel[0] != ell]
    if off:
        Delta = [(m.iota[ell], m.iota[j] + (m.iota[ell] - m.iota[i])) for (i, _, j, _) in off]
        st = factorize_pair(cur, m, off, Delta, h, label="Align")
        steps.append(st)
        cur, m = st.system, st.model
        trivial = [rel for rel in cur.B if rel[0] == rel[2] == ell
                   and cur.right[rel[1]] == r and cur.right[rel[3]] == r]
        if trivial:
            st = delete_relations(cur, m, trivial, "Case2")
            steps.append(st)
            cur, m = st.system, st.model
    steps.append(case5_main(cur, m, r, h, n_rule))
    return steps


def _least_N(S, mdl, jn, r, b0, au, hn, card_T):
    """Smallest N for which the prefix products along the cut chain from
    jn to r repeat at some 1 <= H < M < N.

    The values of the links are fixed by the first factorization of each
    constraint pair on (jn, r), exactly as the common refinement will
    compute them, so the repetition found here is the one used later.
    """
    sg = S.semigroup
    fulls = [concat(*mdl.theta[(jn, r, s, 0)]) for (i, j, s) in sorted(S.M) if (i, j) == (jn, r)]
    start = mdl.iota[jn]
    cuts = [start]
    if hn > 1:
        cuts.append(b0 + au * Ordinal.finite(hn + 1))
    cur = [sg.I] * len(fulls)
    seen = {}
    p = 2
    for m in range(1, card_T + 3):
        nxt = b0 + au * Ordinal.finite(hn * p) if m >= len(cuts) else cuts[m]
        if m >= len(cuts):
            cuts.append(nxt)
            p += 1
        lo, hi = cuts[m - 1] - start, cuts[m] - start
        cur = [s_mul(sg, c_, s_value(sg, S.phi, extract(f, lo, hi))) for c_, f in zip(cur, fulls)]
        key = tuple(cur)
        if key in seen:
            # the chain has N + 1 links when hn > 1 and N otherwise, and the
            # repetition must not involve the last link
            return max(2, m if hn > 1 else m + 1)
        seen[key] = m
    return card_T + 2


def case5_main(S, mdl, r, h, n_rule="least") -> Step:
    E = _E(S, r, S.J[-1])
    ells = {rel[0] for rel in E}
    if len(ells) != 1:
        raise DecompositionFailed(f"relations ending at {r} are not aligned: lefts {sorted(ells)}")
    (ell,) = ells
    E.sort(key=lambda rel: (S.pos(rel[2]), rel[1]))
    jn = E[-1][2]
    if S.pred(r) != jn:
        raise DecompositionFailed(f"{jn} is not the index preceding {r}")
    sg = S.semigroup
    dec = periodicity_decompose([mdl.piece(ell, rel[2]) for rel in E], h)
    u, hs = dec.u, dec.p_list
    hn = max(hs)
    K = sum(n for (i, j, s), n in S.M.items() if (i, j) == (jn, r))
    card_T = sg.order ** K
    au, b0 = alpha(u), mdl.iota[ell]
    if n_rule == "card":
        N = card_T + 2
    else:
        N = _least_N(S, mdl, jn, r, b0, au, hn, card_T)
    beta = [b0 + au * Ordinal.finite(q) for q in range(hn + 2)]
    gamma = [b0 + (mdl.iota[rel[2]] - beta[hm]) for rel, hm in zip(E, hs)]
    delta = [b0 + au * Ordinal.finite(hn * p) for p in range(N + 1)]
    top = mdl.iota[r]
    for o in beta + gamma + delta:
        if not o < top:
            raise DecompositionFailed(f"cut {format_ordinal(o)} is not below iota({r})")

    names = _names_for(S)
    pos = sorted(set(beta + gamma + delta) - set(mdl.iota.values()))
    cut = FactorizationScheme([names.new("p") for _ in pos], {}, {}, {})
    cut.iota = dict(zip(cut.J, pos))
    C1, lam, _ = common_refinement(scheme_of(S, mdl), cut, mdl.w, sg, S.phi)
    xi = _xi(S, mdl, C1)
    at = {v: i for i, v in C1.iota.items()}
    b = [at[x] for x in beta]
    d = [at[x] for x in delta]

    variables, right = dict(S.variables), {x: xi[rx] for x, rx in S.right.items()}
    drop = with_duals(E)
    B1 = {(xi[i], x, xi[j], xb) for (i, x, j, xb) in S.B - drop}

    def pair(stem, ri, rb, rel):
        nonlocal B1
        y, yb = names.pair(stem)
        variables[y], variables[yb] = yb, y
        right[y], right[yb] = ri, rb
        B1 |= with_duals([(rel[0], y, rel[1], yb)])

    for q in range(1, hn + 1):
        pair("y", b[q], b[q + 1], (b[q - 1], b[q]))
    for rel, hm in zip(E, hs):
        pair("z", b[hm + 1], b[hm + 1], (b[hm], xi[rel[2]]))
    for p in range(1, N):
        pair("f", d[p], d[p + 1], (d[p - 1], d[p]))
    S1, M1 = _system(S, C1, mdl.w, variables, right, B1, "Case5")
    BH = translate_BH(S.BH, xi, lam, C1.J)
    for q in range(1, hn + 1):
        BH.append((S1.chain(b[q - 1], b[q]), S1.chain(b[q], b[q + 1])))
    for rel, hm in zip(E, hs):
        if b[hm] != xi[rel[2]]:
            BH.append((S1.chain(b[hm], b[hm + 1]), S1.chain(xi[rel[2]], b[hm + 1])))
    for p in range(1, N):
        BH.append((S1.chain(d[p - 1], d[p]), S1.chain(d[p], d[p + 1])))
    S1.BH = BH

    chain = S1.J[S1.pos(xi[jn]):S1.pos(xi[r]) + 1]
    keys_r = [k for k in S.tuples() if (k[0], k[1]) == (jn, r)]

    def coordinates(m):
        vals = []
        for key in keys_r:
            ts, _ = lam[key]
            vals.append([s_mul(sg, t[0], t[1]) for t in ts])
        return vals

    def find_HM():
        vals = coordinates(None)
        k = len(chain) - 1
        prefix = []
        cur = [sg.I] * len(vals)
        for m_ in range(k):
            cur = [s_mul(sg, c_, v[m_]) for c_, v in zip(cur, vals)]
            prefix.append(tuple(cur))
        seen = {}
        for M_ in range(1, k):
            p = prefix[M_ - 1]
            if p in seen:
                return seen[p], M_
            seen[p] = M_
        raise DecompositionFailed("no repetition among the prefix products")

    H, M_ = find_HM()

    def back(m1):
        C1p = scheme_of(S1, m1)
        eH, eM = chain[H], chain[M_]
        X = m1.piece(eH, eM)
        pre = concat(m1.slice(ZERO, m1.iota[eM]), omega(X))
        w = concat(pre, m1.slice(m1.iota[eM], alpha(m1.w)))
        iota = {}
        for i in S.J:
            if S.lt(i, r):
                iota[i] = m1.iota[xi[i]]
        iota[r] = alpha(pre)
        for i in S.J:
            if S.lt(r, i):
                iota[i] = iota[r] + (m1.iota[xi[i]] - m1.iota[xi[r]])
        keys = [k for k in S.tuples() if (k[0], k[1]) != (jn, r)]
        theta = _back_restrict(S, S1, m1, lam, xi, iota, keys)
        for key in keys_r:
            ts, mu1 = lam[key]
            links = [concat(*C1p.theta[(chain[q], chain[q + 1], tuple(ts[q]), 0)]) for q in range(len(ts) - 1)]
            phi_last, psi_last = C1p.theta[(chain[-2], chain[-1], tuple(ts[-1]), mu1)]
            p1 = concat(*links[:H])
            p2 = concat(*links[H:M_])
            p3 = concat(*links[M_:], phi_last)
            theta[key] = (concat(p1, p2, p2, power(p2), p3), psi_last)
        return BoundaryModel(w, iota, theta)

    info = {"l": ell, "j": [rel[2] for rel in E], "u": render(u), "h": hs, "K": K, "N": N,
            "H": H, "M": M_, "chain": chain}
    return Step("Case5", S1, M1, back, info)


# ----------------------------------------------------------- driver

def base_solve(S: BoundarySystem, mdl: BoundaryModel, h: HOracle = TRIVIAL) -> BoundaryModel:
    """Models here are kappa-terms already: verify and return unchanged."""
    require_model(S, mdl, h, "base model")
    return mdl


def apply_case(S, mdl, tag, h: HOracle = TRIVIAL, n_rule="least") -> list:
    """The verified steps that handle ``tag`` (preparatory steps first)."""
    if tag.case == "Case1":
        return [case1(S, mdl, tag)]
    if tag.case == "Case2":
        return [case2(S, mdl, tag)]
    if tag.case == "Case3":
        return case3(S, mdl, tag, h)
    if tag.case == "Case4":
        return case4(S, mdl, tag, h)
    if tag.case == "Case5":
        return case5(S, mdl, tag, h, n_rule)
    raise ValueError(f"nothing to apply for {tag.case}")


@dataclass
class InductionResult:
    model: BoundaryModel
    trace: list

    def trace_lines(self) -> str:
        return "\n".join(json.dumps(t) for t in self.trace)


def run_induction(S: BoundarySystem, mdl: BoundaryModel, h: HOracle = TRIVIAL,
                  budget: Optional[int] = None, on_step=None, n_rule="least") -> InductionResult:
    """Run the induction down to the base and translate the model back.

    ``budget`` bounds the number of forward steps (``KDRH_BUDGET`` or
    10^4 by default); exceeding it raises BudgetExceeded whose
    ``partial`` attribute holds the trace so far.  ``n_rule`` picks the
    number of cuts in Case 5: "card" uses ``card T + 2``, "least" (the
    default) the smallest count whose prefix products already repeat.
    """
    if budget is None:
        budget = budget_override() or DEFAULT_STEP_BUDGET
    require_model(S, mdl, h, "input model")
    trace, stack = [], []
    cur, m = S, mdl

    def record(entry):
        trace.append(entry)
        if on_step:
            on_step(entry)

    while True:
        tag = classify_case(cur, m)
        if tag.case == "Base":
            break
        before = induction_parameter(cur, m)
        steps = apply_case(cur, m, tag, h, n_rule)
        for st in steps:
            if len(stack) >= budget:
                raise BudgetExceeded(budget, "induction", partial=trace)
            rep = require_model(st.system, st.model, h, st.label)
            stack.append((cur, st))
            cur, m = st.system, st.model
            record({"step": len(trace) + 1, "case": st.label, "group": tag.case,
                    "parameter": format_parameter(before),
                    "result": format_parameter(induction_parameter(cur, m)),
                    "verified": rep.ok, "direction": "forward"})
        after = induction_parameter(cur, m)
        trace[-1]["decreased"] = after < before
        log.debug("%s: %s -> %s", tag.case, format_parameter(before), format_parameter(after))
    m1 = base_solve(cur, m, h)
    record({"step": len(trace) + 1, "case": "Base", "group": "Base",
            "parameter": format_parameter(induction_parameter(cur, m)),
            "result": format_parameter(induction_parameter(cur, m)), "verified": True, "direction": "forward"})
    for prev, st in reversed(stack):
        m1 = st.back(m1)
        rep = require_model(prev, m1, h, f"back-translation of {st.label}")
        record({"step": len(trace) + 1, "case": st.label, "group": st.label,
                "parameter": format_parameter(induction_parameter(prev, m1)),
                "verified": rep.ok, "direction": "back"})
    return InductionResult(m1, trace)
