"""Systems of boundary relations, their models, and factorization schemes.

A boundary system is the tuple ``(X, J, zeta, M, chi, right, B, B_H)``:

* ``variables`` maps each variable x to its partner x-bar (an involution
  without fixed points);
* ``J`` is a finite list of index names in increasing order;
* ``zeta`` sends a consecutive pair ``(i, j)`` to a set of pairs
  ``(s1, s2)`` of semigroup elements, where ``s2`` may be the adjoined
  identity (stored as the index ``S.order``);
* ``M`` counts, for ``(i, j, s)``, how many factorizations are recorded;
* ``chi`` fixes the cumulative content of each consecutive factor;
* ``B`` holds relations ``(i, x, j, xbar)`` and is closed under duals;
* ``BH`` holds kappa-equations over the symbols ``(i|j)`` (consecutive
  factors) and ``{i|j}_s1,s2,mu`` (recorded suffixes), to be solved
  modulo the group pseudovariety H.

A model is a triple ``(w, iota, theta)``: a kappa-term, the positions of
the indices in ``w`` and a pair ``(Phi, Psi)`` for every recorded
factorization.  ``verify_model`` checks it condition by condition.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .equality import HOracle, TRIVIAL, equal_mod_DRH, r_equivalent_mod_DRH
from .errors import CandidateInvalid, MalformedSystem, ParseError, UnmappedVariable, VerificationFailed
from .factorization import alpha, cum, extract
from .ordinals import ZERO, format_ordinal, ord_cmp, parse_ordinal, to_ordinal
from .semigroups import FiniteSemigroup, eval_term, from_json as semigroup_from_json
from .terms import EMPTY, Empty, KappaTerm, Lit, as_term, concat, parse, render, rename

_CV = re.compile(r"^\(([^|(){}]+)\|([^|(){}]+)\)$")
_SV = re.compile(r"^\{([^|(){}]+)\|([^|(){}]+)\}_(\d+),(\d+),(\d+)$")
_BAD_INDEX = set("|(){},<> ")


def cv(i, j) -> str:
    """Name of the factor variable ``(i|j)``."""
    return f"({i}|{j})"


def sv(i, j, s, mu) -> str:
    """Name of the suffix variable ``{i|j}_s,mu``."""
    return f"{{{i}|{j}}}_{s[0]},{s[1]},{mu}"


def parse_var(name: str):
    """``("factor", i, j)``, ``("suffix", i, j, s, mu)`` or None."""
    m = _CV.match(name)
    if m:
        return ("factor", m.group(1), m.group(2))
    m = _SV.match(name)
    if m:
        return ("suffix", m.group(1), m.group(2), (int(m.group(3)), int(m.group(4))), int(m.group(5)))
    return None


def s_value(S: FiniteSemigroup, phi: dict, t) -> int:
    """phi(t) with the adjoined identity written as ``S.order``."""
    v = eval_term(S, as_term(t), phi)
    return S.I if v is None else v


def s_mul(S: FiniteSemigroup, *xs) -> int:
    out = S.I
    for x in xs:
        out = int(S.table_I[out, x])
    return out


# ------------------------------------------------------------- systems

@dataclass
class BoundarySystem:
    variables: dict
    J: list
    zeta: dict
    M: dict
    chi: dict
    right: dict
    B: set
    BH: list
    semigroup: FiniteSemigroup
    phi: dict
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.J = list(self.J)
        self._pos = {i: k for k, i in enumerate(self.J)}
        if len(self._pos) != len(self.J):
            raise MalformedSystem("repeated index in J")
        for i in self.J:
            if not i or set(i) & _BAD_INDEX:
                raise MalformedSystem(f"bad index name {i!r}")
        self.B = set(self.B)
        self.BH = [(as_term(l), as_term(r)) for l, r in self.BH]

    def pos(self, i) -> int:
        return self._pos[i]

    def lt(self, i, j) -> bool:
        return self._pos[i] < self._pos[j]

    def pred(self, j):
        return self.J[self._pos[j] - 1]

    def consecutive(self) -> list:
        return list(zip(self.J, self.J[1:]))

    def chain(self, i, j) -> KappaTerm:
        """The product ``(i|j)`` of consecutive factor variables."""
        a, b = self._pos[i], self._pos[j]
        if a > b:
            raise MalformedSystem(f"{i} does not precede {j}")
        return concat(*(Lit(cv(p, q)) for p, q in zip(self.J[a:b], self.J[a + 1:b + 1])))

    def tuples(self) -> list:
        return [(i, j, s, mu) for (i, j, s), n in sorted(self.M.items(), key=_mkey) for mu in range(n)]

    def boxes(self) -> set:
        return {(i, x) for (i, x, _, _) in self.B}

    def left(self, x) -> set:
        return {i for (i, y, _, _) in self.B if y == x}

    def check(self):
        """Structural invariants; raises MalformedSystem."""
        for x, xb in self.variables.items():
            if x == xb or self.variables.get(xb) != x:
                raise MalformedSystem(f"involution broken at {x!r}")
            if self.right.get(x) not in self._pos:
                raise MalformedSystem(f"right({x}) is not an index")
        for rel in self.B:
            i, x, j, xb = rel
            if i not in self._pos or j not in self._pos:
                raise MalformedSystem(f"relation {rel} uses an unknown index")
            if self.variables.get(x) != xb:
                raise MalformedSystem(f"relation {rel} does not pair x with its partner")
            if dual(rel) not in self.B:
                raise MalformedSystem(f"relation {rel} lacks its dual")
        cons = set(self.consecutive())
        for (i, j), ss in self.zeta.items():
            if (i, j) not in cons:
                raise MalformedSystem(f"zeta defined on non-consecutive pair ({i}, {j})")
            for s in ss:
                if self.M.get((i, j, s), 0) < 1:
                    raise MalformedSystem(f"M undefined on ({i}, {j}, {s})")
        for (i, j, s), n in self.M.items():
            if s not in self.zeta.get((i, j), ()):
                raise MalformedSystem(f"M defined outside zeta at ({i}, {j}, {s})")
            if n < 1:
                raise MalformedSystem("M values must be positive")
        names = self.bh_variables()
        for eq in self.BH:
            for t in eq:
                for a in t.letters:
                    if a not in names:
                        raise MalformedSystem(f"unknown B_H variable {a!r}")

    def bh_variables(self) -> set:
        out = {cv(i, j) for i, j in self.consecutive()}
        out |= {sv(i, j, s, mu) for i, j, s, mu in self.tuples()}
        return out

    def to_json(self) -> dict:
        return {
            "J": list(self.J),
            "variables": dict(sorted(self.variables.items())),
            "right": dict(sorted(self.right.items())),
            "zeta": [[i, j, sorted([list(s) for s in self.zeta[(i, j)]])]
                     for i, j in self.consecutive() if (i, j) in self.zeta],
            "M": [[i, j, list(s), n] for (i, j, s), n in sorted(self.M.items(), key=_mkey)],
            "chi": [[i, j, sorted(self.chi[(i, j)])] for i, j in self.consecutive() if (i, j) in self.chi],
            "B": [list(r) for r in sorted(self.B, key=lambda r: (self._pos[r[0]], r[1], self._pos[r[2]], r[3]))],
            "BH": [[render(l), render(r)] for l, r in self.BH],
            "semigroup": self.semigroup.to_json(),
            "phi": dict(sorted(self.phi.items())),
            "origin": self.origin,
        }


def _mkey(item):
    (i, j, s), _ = item
    return (str(i), str(j), s)


def dual(rel):
    i, x, j, xb = rel
    return (j, xb, i, x)


def with_duals(rels) -> set:
    out = set()
    for r in rels:
        out.add(tuple(r))
        out.add(dual(tuple(r)))
    return out


def expand_bh(t: KappaTerm, J: list) -> KappaTerm:
    """Rewrite non-consecutive ``(i|j)`` symbols into chains."""
    pos = {i: k for k, i in enumerate(J)}
    mapping = {}
    for a in t.letters:
        p = parse_var(a)
        if p and p[0] == "factor":
            i, j = p[1], p[2]
            if i not in pos or j not in pos or pos[i] >= pos[j]:
                raise MalformedSystem(f"bad factor variable {a!r}")
            if pos[j] != pos[i] + 1:
                mapping[a] = concat(*(Lit(cv(p_, q_)) for p_, q_ in zip(J[pos[i]:pos[j]], J[pos[i] + 1:pos[j] + 1])))
    return rename(t, mapping) if mapping else t


# -------------------------------------------------------------- models

@dataclass
class BoundaryModel:
    w: KappaTerm
    iota: dict
    theta: dict

    def __post_init__(self):
        self.w = as_term(self.w)
        self.iota = {i: to_ordinal(v) for i, v in self.iota.items()}
        self.theta = {k: (as_term(p), as_term(q)) for k, (p, q) in self.theta.items()}
        self._cache = {}

    def slice(self, beta, gamma) -> KappaTerm:
        key = (to_ordinal(beta), to_ordinal(gamma))
        if key not in self._cache:
            self._cache[key] = extract(self.w, *key)
        return self._cache[key]

    def piece(self, i, j) -> KappaTerm:
        """``w(i, j)``: the factor between the positions of i and j."""
        return self.slice(self.iota[i], self.iota[j])

    def to_json(self) -> dict:
        return {
            "w": render(self.w),
            "iota": {i: format_ordinal(v) for i, v in self.iota.items()},
            "theta": [[i, j, list(s), mu, render(p), render(q)]
                      for (i, j, s, mu), (p, q) in sorted(self.theta.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]), kv[0][2], kv[0][3]))],
        }


@dataclass
class ModelReport:
    failures_by: dict = field(default_factory=dict)

    def fail(self, condition, detail, witness=None):
        self.failures_by.setdefault(condition, []).append({"detail": detail, "witness": witness})

    @property
    def ok(self) -> bool:
        return not any(self.failures_by.values())

    def passed(self, condition) -> bool:
        return not self.failures_by.get(condition)

    def failures(self) -> list:
        return [f"{c}: {f['detail']}" for c, fs in self.failures_by.items() for f in fs]

    def to_json(self):
        conds = ["structure", "M.1", "M.2", "M.3", "M.4", "M.5"]
        return {"ok": self.ok,
                "conditions": {c: self.passed(c) for c in conds},
                "failures": {c: fs for c, fs in self.failures_by.items() if fs}}


def _check_positions(report, J, iota, w, tag="structure", anchored=True):
    if set(iota) != set(J):
        report.fail(tag, "iota is not defined exactly on J", sorted(set(iota) ^ set(J)))
        return False
    vals = [iota[i] for i in J]
    for a, b, i, j in zip(vals, vals[1:], J, J[1:]):
        if not ord_cmp(a, b) < 0:
            report.fail(tag, f"iota({i}) = {a} is not below iota({j}) = {b}", [i, j])
            return False
    aw = alpha(w) if not isinstance(w, Empty) else ZERO
    if J and not anchored and vals[-1] > aw:
        report.fail(tag, f"iota({J[-1]}) = {vals[-1]} exceeds alpha(w) = {aw}", J[-1])
        return False
    if J and anchored:
        if not vals[0].is_zero():
            report.fail(tag, f"iota({J[0]}) = {vals[0]} is not 0", J[0])
            return False
        if vals[-1] != aw:
            report.fail(tag, f"iota({J[-1]}) = {vals[-1]} differs from alpha(w) = {aw}", J[-1])
            return False
    return True


def verify_model(S: BoundarySystem, mdl: BoundaryModel, h: HOracle = TRIVIAL) -> ModelReport:
    """Check every model condition and collect witnesses of failures."""
    rep = ModelReport()
    try:
        S.check()
    except MalformedSystem as e:
        rep.fail("structure", str(e))
        return rep
    if not _check_positions(rep, S.J, mdl.iota, mdl.w):
        return rep
    tuples = S.tuples()
    if set(mdl.theta) != set(tuples):
        rep.fail("structure", "theta is not defined exactly on the recorded factorizations",
                 [list(map(str, k)) for k in set(mdl.theta) ^ set(tuples)])
        return rep
    sg = S.semigroup
    for key in tuples:
        i, j, s, mu = key
        phi_t, psi_t = mdl.theta[key]
        if isinstance(phi_t, Empty):
            rep.fail("structure", f"Phi{key} is empty", list(map(str, key)))
            continue
        if not psi_t.letters <= cum(phi_t):
            rep.fail("structure", f"c(Psi) not inside cum(Phi) at {key}", list(map(str, key)))
        wij = mdl.piece(i, j)
        if not equal_mod_DRH(concat(phi_t, psi_t), wij, h):
            rep.fail("M.1", f"Phi Psi differs from w({i},{j}) at {key}",
                     {"tuple": list(map(str, key)), "product": render(concat(phi_t, psi_t)), "w(i,j)": render(wij)})
        got = (s_value(sg, S.phi, phi_t), s_value(sg, S.phi, psi_t))
        if got != tuple(s):
            rep.fail("M.2", f"phi(Phi), phi(Psi) = {got} but the tuple asks for {tuple(s)}",
                     {"tuple": list(map(str, key)), "values": list(got)})
    for i, j in S.consecutive():
        if (i, j) in S.chi:
            c = cum(mdl.piece(i, j))
            if c != frozenset(S.chi[(i, j)]):
                rep.fail("M.3", f"cum w({i},{j}) = {sorted(c)} but chi = {sorted(S.chi[(i, j)])}", [i, j])
    for rel in sorted(S.B, key=str):
        i, x, j, xb = rel
        a = mdl.piece(i, S.right[x]) if not S.lt(S.right[x], i) else None
        b = mdl.piece(j, S.right[xb]) if not S.lt(S.right[xb], j) else None
        if a is None or b is None:
            rep.fail("M.4", f"right of a variable precedes its box in {rel}", list(rel))
        elif not r_equivalent_mod_DRH(a, b, h):
            rep.fail("M.4", f"w({i},right({x})) and w({j},right({xb})) are not R-equivalent",
                     {"relation": list(rel), "left": render(a), "right": render(b)})
    delta = delta_of(S, mdl)
    for lhs, rhs in S.BH:
        l, r = rename(lhs, delta), rename(rhs, delta)
        if not h.equal_mod_H(l, r):
            rep.fail("M.5", f"B_H equation {render(lhs)} = {render(rhs)} fails modulo {h.name}",
                     {"equation": [render(lhs), render(rhs)], "values": [render(l), render(r)]})
    return rep


def delta_of(S: BoundarySystem, mdl: BoundaryModel) -> dict:
    """The substitution sending ``(i|j)`` to w(i,j) and suffix symbols to Psi."""
    d = {cv(i, j): mdl.piece(i, j) for i, j in S.consecutive()}
    for key in S.tuples():
        d[sv(*key)] = mdl.theta[key][1]
    return d


def require_model(S, mdl, h=TRIVIAL, what="model"):
    rep = verify_model(S, mdl, h)
    if not rep.ok:
        raise VerificationFailed(f"{what} does not verify: " + "; ".join(rep.failures()[:5]), rep)
    return rep


# ---------------------------------------------------- construction from S_uv

def _spanning_forest(n_vertices, edges):
    """Depth-first spanning forest; vertices 1..n, neighbours in increasing order."""
    adj = {v: set() for v in range(1, n_vertices + 1)}
    for p, q in edges:
        if p != q:
            adj[p].add(q)
            adj[q].add(p)
    seen, forest = set(), []
    for root in range(1, n_vertices + 1):
        if root in seen:
            continue
        seen.add(root)
        stack = [(root, iter(sorted(adj[root])))]
        while stack:
            v, it = stack[-1]
            for q in it:
                if q not in seen:
                    seen.add(q)
                    forest.append((v, q))
                    stack.append((q, iter(sorted(adj[q]))))
                    break
            else:
                stack.pop()
    return forest


def build_boundary_system(suv) -> tuple:
    """The boundary system of a reduced equation ``u' = v'`` with its model.

    ``suv`` is a ``SuvSystem`` whose solution is reduced with respect to
    ``u' v'``.  Positions ``1..t`` of ``u' v'`` give the indices
    ``i0 .. it``; the variable ``x_p`` at position p occupies the factor
    ``(i_{p-1}, i_p)``.
    """
    from .errors import NonReducedSolution
    if not suv.is_reduced():
        raise NonReducedSolution("the solution is not reduced with respect to u' v'")
    word = list(suv.u) + list(suv.v)
    t, r = len(word), len(suv.u)
    J = [f"i{p}" for p in range(t + 1)]
    cons = suv.constraints
    vals = [suv.value(x) for x in word]

    occ = {}
    for p, x in enumerate(word, 1):
        occ.setdefault(x, []).append(p)
    edges = []
    for x, ps in occ.items():
        edges += [(ps[0], q) for q in ps[1:]]
        edges += [(p, q) for p, q in zip(ps, ps[1:])]
    for x, y, z in suv.s1:
        for p in occ.get(x, ()):
            for q in occ.get(z, ()):
                edges.append((p, q))
    forest = _spanning_forest(t, sorted(set(edges)))

    variables, right, B = {}, {}, set()
    for p, q in forest:
        a, b = f"({p},{q})", f"({q},{p})"
        variables[a], variables[b] = b, a
        right[a], right[b] = J[p], J[q]
        B |= with_duals([(J[p - 1], a, J[q - 1], b)])
    variables["l"], variables["r"] = "r", "l"
    right["l"], right["r"] = J[r], J[t]
    B |= with_duals([(J[0], "l", J[r], "r")])

    zeta, M, chi = {}, {}, {}
    iota = {J[0]: ZERO}
    theta = {}
    prefix = EMPTY
    for p in range(1, t + 1):
        i, j = J[p - 1], J[p]
        s = (s_value(cons.semigroup, cons.phi, vals[p - 1]), cons.semigroup.I)
        zeta[(i, j)] = {s}
        M[(i, j, s)] = 1
        chi[(i, j)] = cum(vals[p - 1])
        prefix = concat(prefix, vals[p - 1])
        iota[j] = alpha(prefix)
        theta[(i, j, s, 0)] = (vals[p - 1], EMPTY)

    def f(p):
        return Lit(cv(J[p - 1], J[p]))

    def chain(a, b):
        return concat(*(f(p) for p in range(a + 1, b + 1)))

    BH = [(chain(0, r), chain(r, t))]
    for x, ps in occ.items():
        for p, q in zip(ps, ps[1:]):
            BH.append((f(p), f(q)))
    for x, y, z in suv.s1:
        if x in occ and y in occ and z in occ:
            BH.append((f(occ[z][0]), concat(f(occ[x][0]), f(occ[y][0]))))

    S = BoundarySystem(variables, J, zeta, M, chi, right, B, BH, cons.semigroup, dict(cons.phi),
                       origin={"positions": word, "split": r,
                               "variables": list(suv.variables), "dropped": list(suv.dropped)})
    return S, BoundaryModel(prefix, iota, theta)


def bh_groups(BH) -> list:
    """Classes of equation sides linked by B_H equations (sorted, rendered)."""
    parent = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for l, r in BH:
        a, b = find(render(l)), find(render(r))
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups = {}
    for a in list(parent):
        groups.setdefault(find(a), set()).add(a)
    return sorted(sorted(g) for g in groups.values())


def extract_solution(S: BoundarySystem, mdl: BoundaryModel, h: HOracle = TRIVIAL) -> dict:
    """Solution of the originating reduced equation read off a model.

    A variable first occurring at position p is sent to the product
    Phi Psi recorded for the factor ``(i_{p-1}, i_p)``.
    """
    require_model(S, mdl, h)
    word = S.origin.get("positions")
    if word is None:
        raise VerificationFailed("the system does not record the positions of an equation")
    variables = set(S.origin.get("variables", ()))
    eps = {}
    for p, x in enumerate(word, 1):
        if x in variables and x not in eps:
            i, j = S.J[p - 1], S.J[p]
            ss = sorted(S.zeta[(i, j)])
            key = (i, j, ss[0], 0)
            phi_t, psi_t = mdl.theta[key]
            eps[x] = concat(phi_t, psi_t)
    for x in S.origin.get("dropped", ()):
        eps[x] = EMPTY
    return eps


# --------------------------------------------------- factorization schemes

@dataclass
class FactorizationScheme:
    J: list
    iota: dict
    M: dict
    theta: dict

    def __post_init__(self):
        self.J = list(self.J)
        self.iota = {i: to_ordinal(v) for i, v in self.iota.items()}

    def tuples(self):
        return [(i, j, s, mu) for (i, j, s), n in sorted(self.M.items(), key=_mkey) for mu in range(n)]

    def index_at(self, beta):
        for i, b in self.iota.items():
            if b == beta:
                return i
        return None

    def to_json(self):
        return {"J": list(self.J), "iota": {i: format_ordinal(v) for i, v in self.iota.items()},
                "M": [[i, j, list(s), n] for (i, j, s), n in sorted(self.M.items(), key=_mkey)],
                "theta": [[i, j, list(s), mu, render(p), render(q)] for (i, j, s, mu), (p, q) in sorted(
                    self.theta.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]), kv[0][2], kv[0][3]))]}


def scheme_of(S: BoundarySystem, mdl: BoundaryModel) -> FactorizationScheme:
    return FactorizationScheme(list(S.J), dict(mdl.iota), dict(S.M), dict(mdl.theta))


def zeta_chi_of(C: FactorizationScheme, w) -> tuple:
    """The zeta and chi that a scheme induces on consecutive pairs."""
    w = as_term(w)
    zeta = {}
    for (i, j, s) in C.M:
        zeta.setdefault((i, j), set()).add(s)
    chi = {(i, j): cum(extract(w, C.iota[i], C.iota[j])) for i, j in zip(C.J, C.J[1:])}
    return zeta, chi


def verify_scheme(C: FactorizationScheme, w, semigroup: FiniteSemigroup, phi: dict,
                  h: HOracle = TRIVIAL) -> ModelReport:
    """FS.1 (products match the slices of w) and FS.2 (constraint values)."""
    w = as_term(w)
    rep = ModelReport()
    if not _check_positions(rep, C.J, C.iota, w, anchored=False):
        return rep
    if set(C.theta) != set(C.tuples()):
        rep.fail("structure", "theta is not defined exactly on the domain of M")
        return rep
    cache = {}
    for key in C.tuples():
        i, j, s, mu = key
        if not C.iota[i] < C.iota[j]:
            rep.fail("structure", f"{i} does not precede {j}")
            continue
        phi_t, psi_t = C.theta[key]
        if isinstance(phi_t, Empty) or not psi_t.letters <= cum(phi_t):
            rep.fail("structure", f"bad pair at {key}")
            continue
        if (i, j) not in cache:
            cache[(i, j)] = extract(w, C.iota[i], C.iota[j])
        if not equal_mod_DRH(concat(phi_t, psi_t), cache[(i, j)], h):
            rep.fail("FS.1", f"Phi Psi differs from w[iota({i}), iota({j})[ at {key}", list(map(str, key)))
        got = (s_value(semigroup, phi, phi_t), s_value(semigroup, phi, psi_t))
        if got != tuple(s):
            rep.fail("FS.2", f"values {got} differ from {tuple(s)} at {key}", list(map(str, key)))
    return rep


def _fresh_index(used, stem="k"):
    n = 1
    while f"{stem}{n}" in used:
        n += 1
    used.add(f"{stem}{n}")
    return f"{stem}{n}"


def common_refinement(C1: FactorizationScheme, C2: FactorizationScheme, w,
                      semigroup: FiniteSemigroup, phi: dict) -> tuple:
    """A common refinement C3 of two schemes of ``w`` and the refining
    functions ``(Lambda1, Lambda2)`` from C1 and C2 to it.

    The cut set is the union of both position sets.  An index of C3 keeps
    the name it has in C1 (else in C2) when that name is still free.
    Every factorization of ``C_k`` over ``(i, j)`` is cut at the
    positions lying strictly between: the inner pieces come from the
    first recorded factorization, the last piece keeps the suffix Psi.
    A new entry always takes the next unused counter value.
    """
    w = as_term(w)
    positions = sorted(set(C1.iota.values()) | set(C2.iota.values()))
    used, names = set(), {}
    inv1 = {v: i for i, v in C1.iota.items()}
    inv2 = {v: i for i, v in C2.iota.items()}
    for b in positions:
        for cand in (inv1.get(b), inv2.get(b)):
            if cand is not None and cand not in used:
                names[b] = cand
                used.add(cand)
                break
        else:
            names[b] = None
    for b in positions:
        if names[b] is None:
            names[b] = _fresh_index(used | set(C1.J) | set(C2.J))
            used.add(names[b])
    J3 = [names[b] for b in positions]
    iota3 = {names[b]: b for b in positions}
    M3, theta3 = {}, {}

    def add(a, b, t, pair):
        mu = M3.get((a, b, t), 0)
        M3[(a, b, t)] = mu + 1
        theta3[(a, b, t, mu)] = pair
        return mu

    lambdas = []
    for C in (C1, C2):
        lam = {}
        for (i, j, s), count in sorted(C.M.items(), key=_mkey):
            lo, hi = C.iota[i], C.iota[j]
            cuts = [b for b in positions if lo <= b <= hi]
            offs = [b - lo for b in cuts]
            base = C.theta[(i, j, s, 0)]
            full0 = concat(*base)
            ts = []
            for r in range(1, len(cuts) - 1):
                piece = extract(full0, offs[r - 1], offs[r])
                t = (s_value(semigroup, phi, piece), semigroup.I)
                add(names[cuts[r - 1]], names[cuts[r]], t, (piece, EMPTY))
                ts.append(t)
            a, b = names[cuts[-2]], names[cuts[-1]]
            for mu in range(count):
                phi_t, psi_t = C.theta[(i, j, s, mu)]
                last = extract(phi_t, offs[-2], alpha(phi_t))
                tn = (s_value(semigroup, phi, last), s[1])
                mu2 = add(a, b, tn, (last, psi_t))
                lam[(i, j, s, mu)] = (tuple(ts) + (tn,), mu2)
        lambdas.append(lam)
    C3 = FactorizationScheme(J3, iota3, M3, theta3)
    return C3, lambdas[0], lambdas[1]


def verify_refinement(C2: FactorizationScheme, C1: FactorizationScheme, lam: dict,
                      semigroup: FiniteSemigroup, h: HOracle = TRIVIAL) -> ModelReport:
    """Check that ``lam`` is a refining function from C2 to C1 (R.1, R.2.x)."""
    rep = ModelReport()
    im1 = set(C1.iota.values())
    for i, b in C2.iota.items():
        if b not in im1:
            rep.fail("R.1", f"iota2({i}) = {b} is not a position of C1", i)
    if set(lam) != set(C2.tuples()):
        rep.fail("R.2", "the refining function is not defined exactly on the factorizations of C2")
        return rep
    inv1 = {v: i for i, v in C1.iota.items()}
    pos1 = {i: k for k, i in enumerate(C1.J)}
    for key, (ts, mu2) in lam.items():
        i, j, s, mu = key
        a, b = inv1.get(C2.iota[i]), inv1.get(C2.iota[j])
        if a is None or b is None or pos1[b] - pos1[a] != len(ts):
            rep.fail("R.2.1", f"no chain of length {len(ts)} for {key}", list(map(str, key)))
            continue
        chain = C1.J[pos1[a]:pos1[b] + 1]
        for m, t in enumerate(ts):
            if C1.M.get((chain[m], chain[m + 1], tuple(t)), 0) < 1:
                rep.fail("R.2.2", f"({chain[m]}, {chain[m + 1]}, {t}) is not in the domain of M1", list(map(str, key)))
        flat = [x for t in ts[:-1] for x in t] + [ts[-1][0]]
        if s_mul(semigroup, *flat) != s[0] or ts[-1][1] != s[1]:
            rep.fail("R.2.3", f"constraint values do not compose at {key}", list(map(str, key)))
        last = (chain[-2], chain[-1], tuple(ts[-1]))
        if mu2 >= C1.M.get(last, 0):
            rep.fail("R.2.4", f"counter {mu2} out of range at {key}", list(map(str, key)))
        elif not h.equal_mod_H(C2.theta[key][1], C1.theta[last + (mu2,)][1]):
            rep.fail("R.2.4", f"suffixes differ modulo {h.name} at {key}", list(map(str, key)))
    return rep


def restrict(C1: FactorizationScheme, J2, iota2: dict, lam: dict, semigroup: FiniteSemigroup,
             xi: Optional[dict] = None) -> FactorizationScheme:
    """The restriction of C1 to ``J2`` along the candidate ``lam``.

    Indices of J2 are matched with indices of C1 through their positions,
    or through ``xi`` when it is given (the positions ``iota2`` are then
    only recorded).  Raises CandidateInvalid naming the violated clause.
    """
    J2 = list(J2)
    iota2 = {i: to_ordinal(v) for i, v in iota2.items()}
    pos2 = {i: k for k, i in enumerate(J2)}
    if xi is None:
        inv1 = {v: i for i, v in C1.iota.items()}
        for v in iota2.values():
            if v not in inv1:
                raise CandidateInvalid("image", f"position {v} is not a position of the refined scheme")
        xi = {i: inv1[iota2[i]] for i in J2}
    for (i, j, s, mu) in lam:
        if i not in pos2 or j not in pos2 or pos2[j] != pos2[i] + 1:
            raise CandidateInvalid("domain", f"({i}, {j}) is not a consecutive pair of J2")
        if mu > 0 and (i, j, s, mu - 1) not in lam:
            raise CandidateInvalid("C.2", f"({i}, {j}, {s}, {mu}) present without {mu - 1}")
    M2, theta2 = {}, {}
    for key in sorted(lam, key=lambda k: (pos2[k[0]], k[2], k[3])):
        i, j, s, mu = key
        theta2[key] = compose_theta(C1, xi[i], xi[j], s, lam[key], semigroup)
        M2[(i, j, s)] = max(M2.get((i, j, s), 0), mu + 1)
    return FactorizationScheme(J2, iota2, M2, theta2)


def compose_theta(C1: FactorizationScheme, a, b, s, image, semigroup: FiniteSemigroup) -> tuple:
    """``(Phi, Psi)`` assembled along the chain from ``a`` to ``b`` in C1.

    ``image`` is ``((t_1, ..., t_n), mu')``: the inner factors use the
    first recorded factorization of each link, the last link contributes
    its Phi and Psi at counter mu'.
    """
    ts, mu2 = image
    pos1 = {i: k for k, i in enumerate(C1.J)}
    if a not in pos1 or b not in pos1 or not ts or pos1[b] - pos1[a] != len(ts):
        raise CandidateInvalid("C.3.1", f"no chain of length {len(ts)} from {a} to {b}")
    chain = C1.J[pos1[a]:pos1[b] + 1]
    flat = [x for t in ts[:-1] for x in t] + [ts[-1][0]]
    if s_mul(semigroup, *flat) != s[0] or ts[-1][1] != s[1]:
        raise CandidateInvalid("C.3.2", f"constraint values do not compose for {s} along {a}..{b}")
    for m, t in enumerate(ts):
        if C1.M.get((chain[m], chain[m + 1], tuple(t)), 0) < 1:
            raise CandidateInvalid("C.3.3", f"({chain[m]}, {chain[m + 1]}, {t}) is not recorded")
    last = (chain[-2], chain[-1], tuple(ts[-1]))
    if mu2 >= C1.M[last]:
        raise CandidateInvalid("C.3.3", f"counter {mu2} not below M1{last}")
    head = [concat(*C1.theta[(chain[m], chain[m + 1], tuple(ts[m]), 0)]) for m in range(len(ts) - 1)]
    phi_t, psi_t = C1.theta[last + (mu2,)]
    return concat(*head, phi_t), psi_t


def translate_BH(BH, xi: dict, lam: dict, J1: list) -> list:
    """Rewrite B_H along ``xi`` (old index -> new index) and ``lam``.

    ``(i|j)`` becomes the chain ``(xi(i)|xi(j))``; a suffix symbol
    ``{i|j}_s,mu`` becomes ``{xi(j)^-|xi(j)}_t,mu'`` where ``t`` is the
    last constraint pair of ``lam(i, j, s, mu)``.
    """
    pos = {i: k for k, i in enumerate(J1)}
    out = []
    for eq in BH:
        new = []
        for t in eq:
            mapping = {}
            for a in t.letters:
                p = parse_var(a)
                if p is None:
                    raise UnmappedVariable(f"{a!r} is not a B_H variable")
                if p[0] == "factor":
                    i, j = p[1], p[2]
                    if i not in xi or j not in xi:
                        raise UnmappedVariable(f"no image for the indices of {a!r}")
                    a1, b1 = pos[xi[i]], pos[xi[j]]
                    mapping[a] = concat(*(Lit(cv(x, y)) for x, y in zip(J1[a1:b1], J1[a1 + 1:b1 + 1])))
                else:
                    key = (p[1], p[2], p[3], p[4])
                    if key not in lam or p[2] not in xi:
                        raise UnmappedVariable(f"no refining data for {a!r}")
                    ts, mu2 = lam[key]
                    j1 = xi[p[2]]
                    mapping[a] = Lit(sv(J1[pos[j1] - 1], j1, tuple(ts[-1]), mu2))
            new.append(rename(t, mapping))
        out.append(tuple(new))
    return out


# ----------------------------------------------------------------- JSON

def _pair(v):
    return (int(v[0]), int(v[1]))


def system_from_json(data) -> BoundarySystem:
    if isinstance(data, str):
        with open(data) as fh:
            data = json.load(fh)
    try:
        sg = semigroup_from_json(data["semigroup"])
        J = list(data["J"])
        zeta = {(i, j): {_pair(s) for s in ss} for i, j, ss in data["zeta"]}
        M = {(i, j, _pair(s)): int(n) for i, j, s, n in data["M"]}
        chi = {(i, j): frozenset(c) for i, j, c in data["chi"]}
        B = {tuple(r) for r in data["B"]}
        BH = [(expand_bh(parse(l), J), expand_bh(parse(r), J)) for l, r in data.get("BH", [])]
        S = BoundarySystem(dict(data["variables"]), J, zeta, M, chi, dict(data["right"]), B, BH,
                           sg, dict(data["phi"]), dict(data.get("origin") or {}))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, (MalformedSystem, ParseError)):
            raise
        raise MalformedSystem(f"bad boundary system: {e}") from e
    S.check()
    return S


def model_from_json(data) -> BoundaryModel:
    if isinstance(data, str):
        with open(data) as fh:
            data = json.load(fh)
    try:
        theta = {(i, j, _pair(s), int(mu)): (parse(p), parse(q)) for i, j, s, mu, p, q in data["theta"]}
        return BoundaryModel(parse(data["w"]), {i: parse_ordinal(v) for i, v in data["iota"].items()}, theta)
    except (KeyError, TypeError) as e:
        raise MalformedSystem(f"bad model: {e}") from e


def scheme_from_json(data) -> FactorizationScheme:
    theta = {(i, j, _pair(s), int(mu)): (parse(p), parse(q)) for i, j, s, mu, p, q in data["theta"]}
    M = {(i, j, _pair(s)): int(n) for i, j, s, n in data["M"]}
    return FactorizationScheme(list(data["J"]), {i: parse_ordinal(v) for i, v in data["iota"].items()}, M, theta)


def lambda_to_json(lam: dict) -> list:
    return [[i, j, list(s), mu, [list(t) for t in ts], mu2] for (i, j, s, mu), (ts, mu2) in sorted(
        lam.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]), kv[0][2], kv[0][3]))]
