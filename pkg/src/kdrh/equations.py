"""Constrained systems of kappa-equations with parameters.

A system pairs a list of equations over variables and parameters with a
constraint ``(phi, nu)`` into a finite semigroup S.  A solution is a map
``delta`` from variables and parameters to kappa-terms; it solves the
system when every equation holds modulo DRH, ``phi(delta(x)) = nu(x)`` and
parameters take their prescribed values.

The reductions implemented here are:

* ``to_word_system``: replace every ``t^(w-1)`` by a fresh variable ``z``
  with the word equations ``z t z = z`` and ``z t = t z`` plus a content
  link ``c(z) = c(t)``;
* ``build_S_uv``: rewrite one word equation so that a given solution is
  reduced with respect to it (every adjacent product is reduced).

Parameters are eliminated by substituting their values; the letters of the
alphabet that then occur in an equation behave as reserved letters, i.e.
parameters evaluated to themselves.  The guards ``#``, ``#1``, ... used
by ``build_S_uv`` are reserved letters of the same kind.

Content constraints are carried by the semigroup ``S' x P+(A')`` where
``S'`` is S with an identity (adjoined if needed) and ``P+(A')`` is the
semilattice of nonempty subsets of the extended alphabet.  When S lies in
DRH so does this product, hence ``phi`` is constant on DRH-classes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .equality import HOracle, TRIVIAL, equal_mod_DRH
from .errors import KdrhError, MalformedSystem, NonKappaSolution, ParseError, VerificationFailed
from .factorization import cum, is_reduced_product, split_at_cumulative
from .semigroups import FiniteSemigroup, direct_product, eval_term, from_json as semigroup_from_json, subset_semilattice
from .terms import EMPTY, Concat, Empty, KappaTerm, Lit, OmegaMinusOne, as_term, concat, items, omega, power, render, rename


@dataclass
class ConstraintPair:
    """``phi`` sends letters to elements of ``semigroup``; ``nu`` sends
    variables to elements (``None`` stands for the adjoined identity I).
    Variables missing from ``nu`` are unconstrained."""
    semigroup: FiniteSemigroup
    phi: dict
    nu: dict = field(default_factory=dict)

    def value(self, t: KappaTerm):
        return eval_term(self.semigroup, t, self.phi)

    def to_json(self):
        return {"semigroup": self.semigroup.to_json(), "phi": dict(self.phi), "nu": dict(self.nu)}


@dataclass
class EquationSystem:
    alphabet: tuple
    variables: list
    equations: list                                  # (lhs, rhs) pairs of terms
    parameters: dict = field(default_factory=dict)   # name -> value over the alphabet
    constraints: Optional[ConstraintPair] = None
    content_links: list = field(default_factory=list)  # (z, t): c(z) = c(t)
    solution: Optional[dict] = None

    def __post_init__(self):
        clash = set(self.variables) & set(self.parameters)
        if clash:
            raise MalformedSystem(f"names used both as variable and parameter: {sorted(clash)}")

    def symbols(self):
        return set(self.variables) | set(self.parameters)


# ------------------------------------------------------------ solutions

@dataclass
class SolutionReport:
    equations: list       # (lhs, rhs, holds)
    constraints: dict     # variable -> holds
    parameters: dict      # parameter -> holds
    links: list           # (z, t, holds)

    @property
    def ok(self) -> bool:
        return (all(e[2] for e in self.equations) and all(self.constraints.values())
                and all(self.parameters.values()) and all(l[2] for l in self.links))

    def failures(self) -> list:
        out = [f"equation {render(l)} = {render(r)}" for l, r, ok in self.equations if not ok]
        out += [f"constraint on {x}" for x, ok in self.constraints.items() if not ok]
        out += [f"parameter {p}" for p, ok in self.parameters.items() if not ok]
        out += [f"content link {z} ~ {render(t)}" for z, t, ok in self.links if not ok]
        return out

    def to_json(self):
        return {
            "ok": self.ok,
            "equations": [[render(l), render(r), ok] for l, r, ok in self.equations],
            "constraints": self.constraints,
            "parameters": self.parameters,
            "content_links": [[z, render(t), ok] for z, t, ok in self.links],
        }


def _full_assignment(sys: EquationSystem, delta: dict) -> dict:
    sub = {}
    for x in sys.variables:
        if x not in delta:
            raise MalformedSystem(f"solution has no value for variable {x!r}")
        sub[x] = as_term(delta[x])
    for p, ev in sys.parameters.items():
        sub[p] = as_term(delta.get(p, ev))
    return sub


def check_solution(sys: EquationSystem, delta: dict, h: HOracle = TRIVIAL) -> SolutionReport:
    """Check the three solution conditions (plus content links)."""
    sub = _full_assignment(sys, delta)
    eqs = []
    for lhs, rhs in sys.equations:
        eqs.append((lhs, rhs, equal_mod_DRH(rename(lhs, sub), rename(rhs, sub), h)))
    cons = {}
    if sys.constraints is not None:
        c = sys.constraints
        for x in sys.variables:
            if x in c.nu:
                cons[x] = c.value(sub[x]) == c.nu[x]
    params = {p: equal_mod_DRH(sub[p], as_term(ev), h) for p, ev in sys.parameters.items()}
    links = [(z, t, sub[z].letters == rename(t, sub).letters) for z, t in sys.content_links]
    return SolutionReport(eqs, cons, params, links)


# ------------------------------------------------- content constraints

def with_identity(S: FiniteSemigroup) -> FiniteSemigroup:
    """S itself if it is a monoid, otherwise S^I as a semigroup of order n+1."""
    if S.identity is not None:
        return S
    names = list(S.names) + ["I"]
    return FiniteSemigroup(S.table_I.copy(), names, S.order, (S.name or "S") + "^I")


def content_constraints(base: Optional[ConstraintPair], alphabet, reserved, delta: dict) -> ConstraintPair:
    """Constraint into ``S' x P+(A')`` pinning each variable of ``delta`` to
    the pair (S-value, content) of its value.

    Letters of the alphabet map to ``(phi(a), {a})`` and reserved letters to
    ``(1, {#})``.  Variables valued I are left unconstrained.
    """
    from .semigroups import trivial
    S = with_identity(base.semigroup) if base is not None else trivial()
    letters = sorted(set(alphabet) | set(reserved))
    P = subset_semilattice(letters)
    T = direct_product(S, P, name=f"{S.name}xP+")
    m = P.order
    pindex = {s: i for i, s in enumerate(P.subsets)}
    T.content_of = [P.subsets[i % m] for i in range(T.order)]
    T.base_order = S.order

    def s_value(a):
        if base is None:
            return 0
        v = base.phi[a]
        return S.identity if v is None else v

    phi = {}
    for a in alphabet:
        phi[a] = s_value(a) * m + pindex[frozenset([a])]
    for r in reserved:
        phi[r] = S.identity * m + pindex[frozenset([r])]
    out = ConstraintPair(T, phi, {})
    for x, t in delta.items():
        t = as_term(t)
        if not isinstance(t, Empty):
            out.nu[x] = out.value(t)
    return out


# ------------------------------------------------- eliminating powers

def _fresh(prefix, used, start=1):
    k = start
    while f"{prefix}{k}" in used:
        k += 1
    name = f"{prefix}{k}"
    used.add(name)
    return name


def _as_word(t: KappaTerm) -> list:
    out = []
    for it in items(t):
        if not isinstance(it, Lit):
            raise MalformedSystem(f"not a word: {render(t)}")
        out.append(it.symbol)
    return out


def to_word_system(sys: EquationSystem, solution: Optional[dict] = None) -> EquationSystem:
    """Word equations equivalent to ``sys``.

    Parameters are replaced by their values.  Each power ``t^(w-1)`` is
    eliminated innermost first: a fresh variable ``z`` (or the variable on
    the other side, for equations of the shape ``x = t^(w-1)``) is
    constrained by ``z t z = z``, ``z t = t z`` and ``c(z) = c(t)``.

    With a ``solution`` of ``sys``, the returned system carries the extended
    solution and a content constraint pinning every variable, which makes
    the content links redundant but keeps them for reporting.
    """
    used = set(sys.variables) | set(sys.parameters) | set(sys.alphabet)
    variables = list(sys.variables)
    equations = []
    links = list(sys.content_links)
    delta = None
    if solution is not None:
        delta = {x: as_term(solution[x]) for x in sys.variables}
    ev = {p: as_term(v) for p, v in sys.parameters.items()}

    def elim(t: KappaTerm) -> KappaTerm:
        if isinstance(t, (Empty, Lit)):
            return t
        if isinstance(t, Concat):
            return concat(*(elim(p) for p in t.parts))
        base = elim(t.base)
        z = _fresh("w", used)
        variables.append(z)
        add_power_equations(z, base)
        return Lit(z)

    def add_power_equations(z, base):
        zl = Lit(z)
        equations.append((concat(zl, base, zl), zl))
        equations.append((concat(zl, base), concat(base, zl)))
        links.append((z, base))
        if delta is not None:
            delta[z] = power(rename(base, delta))

    for lhs, rhs in sys.equations:
        lhs, rhs = rename(lhs, ev), rename(rhs, ev)
        # x = t^(w-1): characterise x by c(x)=c(t), xtx = x and xt = tx directly
        for a, b in ((lhs, rhs), (rhs, lhs)):
            if isinstance(a, Lit) and a.symbol in sys.variables and isinstance(b, OmegaMinusOne):
                add_power_equations(a.symbol, elim(b.base))
                break
        else:
            equations.append((elim(lhs), elim(rhs)))

    out = EquationSystem(tuple(sys.alphabet), variables, equations, {}, sys.constraints, links)
    if delta is not None:
        out.solution = delta
        out.constraints = content_constraints(sys.constraints, sys.alphabet, [], delta)
        # the original constraint values are encoded in the first coordinate
        if sys.constraints is not None:
            _check_pinned(sys, delta)
    return out


def _check_pinned(sys, delta):
    c = sys.constraints
    for x, v in c.nu.items():
        if c.value(delta[x]) != v:
            raise VerificationFailed(f"solution violates the constraint on {x}")


def combine_equations(equations, used) -> tuple:
    """Merge word equations into one, separated by fresh reserved letters.

    Letters that occur nowhere else are weakly cancellable, so the merged
    equation holds exactly when each of the original ones does.
    """
    if not equations:
        raise MalformedSystem("no equations to combine")
    u, v, seps = [], [], []
    for k, (lhs, rhs) in enumerate(equations):
        if k:
            s = _fresh("$", used)
            seps.append(s)
            u.append(s)
            v.append(s)
        u += _as_word(lhs)
        v += _as_word(rhs)
    return u, v, seps


# ------------------------------------------------- the reduced equation

@dataclass
class SuvSystem:
    """One word equation ``u' = v'`` with auxiliary sets S1 and S2.

    ``s1`` holds triples ``(x, y, z)`` standing for ``x y = z``; ``s2`` maps
    a variable to the letters ``a`` with ``x a^w = x``.  ``reserved`` are the
    letters evaluated to themselves (guards, separators, constants).
    """
    u: list
    v: list
    variables: list
    s1: list
    s2: dict
    reserved: list
    alphabet: tuple
    solution: dict
    constraints: ConstraintPair
    dropped: list = field(default_factory=list)   # variables valued I

    def equation_terms(self):
        return from_symbols(self.u), from_symbols(self.v)

    def as_system(self) -> EquationSystem:
        eqs = [self.equation_terms()]
        for x, y, z in self.s1:
            eqs.append((concat(Lit(x), Lit(y)), Lit(z)))
        for x in self.variables:
            for a in sorted(self.s2.get(x, ())):
                eqs.append((concat(Lit(x), omega(Lit(a))), Lit(x)))
        params = {r: Lit(r) for r in self.reserved}
        return EquationSystem(tuple(self.alphabet), list(self.variables), eqs, params,
                              self.constraints, [], dict(self.solution))

    def value(self, symbol) -> KappaTerm:
        if symbol in self.solution:
            return self.solution[symbol]
        return Lit(symbol)

    def is_reduced(self) -> bool:
        for word in (self.u, self.v):
            for x, y in zip(word, word[1:]):
                if not is_reduced_product(self.value(x), self.value(y)):
                    return False
        return True

    def to_json(self):
        return {
            "u": list(self.u), "v": list(self.v),
            "variables": list(self.variables),
            "S1": [list(t) for t in self.s1],
            "S2": {x: sorted(a) for x, a in self.s2.items()},
            "reserved": list(self.reserved),
            "alphabet": "".join(self.alphabet) if all(len(a) == 1 for a in self.alphabet) else list(self.alphabet),
            "dropped": list(self.dropped),
            "solution": {x: render(t) for x, t in self.solution.items()},
            "constraints": {"semigroup": self.constraints.semigroup.to_json(),
                            "phi": self.constraints.phi, "nu": self.constraints.nu},
        }


def from_symbols(symbols) -> KappaTerm:
    return concat(*(Lit(s) for s in symbols))


def _fresh_name(name, used):
    while name in used:
        name += "'"
    used.add(name)
    return name


def _replace_pair(word, x, y, z, tail=None):
    """Replace non-overlapping occurrences of ``x y`` (left to right) by ``z``
    (followed by ``tail`` when given)."""
    out, k = [], 0
    while k < len(word):
        if k + 1 < len(word) and word[k] == x and word[k + 1] == y:
            out.append(z)
            if tail is not None:
                out.append(tail)
            k += 2
        else:
            out.append(word[k])
            k += 1
    return out


def build_S_uv(u, v, delta: dict, constraints: Optional[ConstraintPair] = None,
               alphabet=None, budget: int = 10 ** 4) -> SuvSystem:
    """Rewrite ``u = v`` so that ``delta`` is reduced with respect to it.

    ``u`` and ``v`` are words (sequences of symbols, or word terms).  Symbols
    without a value in ``delta`` are reserved letters evaluated to
    themselves.  ``delta`` must solve ``u = v`` modulo DRH; this is not
    re-checked here (``reduce_system`` does it).

    While some adjacent product ``x y`` of ``u#v#`` is not reduced (leftmost
    first):

    * if ``c(delta(y))`` lies in ``cum(delta(x))``, a variable ``z`` valued
      ``delta(x) delta(y)`` replaces ``x y`` and ``x y = z`` joins S1;
    * otherwise ``delta(y) = y1 y2`` with ``c(y1)`` inside ``cum(delta(x))``
      and ``delta(x) y1 . y2`` reduced; ``y = y1 y2`` is recorded and
      ``x y1 = z`` joins S1, while ``x y`` becomes ``z y2``.

    The recorded equations ``y = y1 y2`` and every variable that no longer
    occurs are appended to both sides behind fresh guards ``#k``; a final
    guard ``#`` closes both sides.
    """
    if isinstance(u, KappaTerm):
        u = _as_word(u)
    if isinstance(v, KappaTerm):
        v = _as_word(v)
    delta = {x: as_term(t) for x, t in delta.items()}
    for x, t in delta.items():
        if not isinstance(t, KappaTerm):
            raise NonKappaSolution(f"value of {x} is not a kappa-term")
    dropped = sorted(x for x, t in delta.items() if isinstance(t, Empty))
    u = [s for s in u if s not in dropped]
    v = [s for s in v if s not in dropped]
    if not u and not v:
        raise MalformedSystem("both sides vanish under the solution")
    variables = [x for x in delta if x not in dropped]
    used = set(delta) | set(u) | set(v) | {"#"}
    if alphabet is None:
        alphabet = sorted({a for t in delta.values() for a in t.letters} | {s for s in u + v if s not in delta})
    values = dict(delta)

    def val(s):
        return values[s] if s in values else Lit(s)

    s1, s0 = [], []
    steps = 0
    while True:
        word = u + ["#"] + v + ["#"]
        bad = None
        for k in range(len(word) - 1):
            if not is_reduced_product(val(word[k]), val(word[k + 1])):
                bad = (word[k], word[k + 1])
                break
        if bad is None:
            break
        steps += 1
        if steps > budget:
            from .errors import BudgetExceeded
            raise BudgetExceeded(budget, "reduction")
        x, y = bad
        dx, dy = val(x), val(y)
        if dy.letters <= cum(dx):
            z = _fresh_name(f"t_{x}{y}", used)
            values[z] = concat(dx, dy)
            variables.append(z)
            s1.append((x, y, z))
            u = _replace_pair(u, x, y, z)
            v = _replace_pair(v, x, y, z)
        else:
            if y not in delta and y not in values:
                raise NonKappaSolution(f"reserved letter {y!r} is absorbed by {x!r}")
            y1t, y2t = split_at_cumulative(dx, dy)
            y1 = _fresh_name(f"{y}_1", used)
            y2 = _fresh_name(f"{y}_2", used)
            values[y1], values[y2] = y1t, y2t
            z = _fresh_name(f"t_{x}{y1}", used)
            values[z] = concat(dx, y1t)
            variables += [y1, y2, z]
            s0.append((y, y1, y2))
            s1.append((x, y1, z))
            u = _replace_pair(u, x, y, z, y2)
            v = _replace_pair(v, x, y, z, y2)

    guards = []
    for y, y1, y2 in s0:
        g = _fresh("#", used)
        guards.append(g)
        u += [g, y]
        v += [g, y1, y2]
    present = set(u) | set(v)
    for x in variables:
        if x not in present:
            g = _fresh("#", used)
            guards.append(g)
            u += [g, x]
            v += [g, x]
    u.append("#")
    v.append("#")
    reserved = sorted({s for s in u + v if s not in values} | {"#"} | set(guards))
    sol = {x: values[x] for x in variables}
    for x in dropped:
        sol[x] = EMPTY
    s2 = {x: cum(values[x]) for x in variables if cum(values[x])}
    cons = content_constraints(constraints, alphabet, [r for r in reserved if r not in alphabet], sol)
    return SuvSystem(u, v, variables, s1, s2, reserved, tuple(alphabet), sol, cons, dropped)


# ----------------------------------------------------------- pipeline

def reduce_to_suv(sys: EquationSystem, h: HOracle = TRIVIAL):
    """Word system and reduced single equation for a system with a solution.

    Returns ``(word_system, suv)``; raises VerificationFailed naming the
    stage whose output does not check.
    """
    if sys.solution is None:
        raise MalformedSystem("the system carries no solution")
    rep = check_solution(sys, sys.solution, h)
    if not rep.ok:
        raise VerificationFailed("input solution fails: " + "; ".join(rep.failures()), rep)
    ws = to_word_system(sys, sys.solution)
    rep = check_solution(ws, ws.solution, h)
    if not rep.ok:
        raise VerificationFailed("word system: " + "; ".join(rep.failures()), rep)
    used = ws.symbols() | set(ws.alphabet)
    u, v, _ = combine_equations(ws.equations, used)
    suv = build_S_uv(u, v, ws.solution, sys.constraints, alphabet=ws.alphabet)
    rep = check_solution(suv.as_system(), suv.solution, h)
    if not rep.ok:
        raise VerificationFailed("reduced equation: " + "; ".join(rep.failures()), rep)
    if not suv.is_reduced():
        raise VerificationFailed("reduced equation: solution is not reduced")
    return ws, suv


def restrict_solution(sys: EquationSystem, eps: dict) -> dict:
    out = {x: eps[x] for x in sys.variables}
    out.update({p: as_term(v) for p, v in sys.parameters.items()})
    return out


# ------------------------------------------------------------- JSON

def _term(text, alphabet=None, what="term"):
    try:
        return as_term(text)
    except ParseError as e:
        raise MalformedSystem(f"bad {what} {text!r}: {e}") from None


def _element(S, value):
    if value is None or value == "I":
        return None
    if isinstance(value, int):
        if not 0 <= value < S.order:
            raise MalformedSystem(f"element {value} out of range")
        return value
    if value in S.names:
        return S.names.index(value)
    raise MalformedSystem(f"unknown element {value!r}")


def system_from_json(data) -> EquationSystem:
    if isinstance(data, str):
        with open(data) as fh:
            data = json.load(fh)
    try:
        alphabet = tuple(data["alphabet"])
        variables = list(data["variables"])
        eqs = [(_term(l), _term(r)) for l, r in data["equations"]]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, KdrhError):
            raise
        raise MalformedSystem(f"malformed system: {e}") from None
    params = {p: _term(t, what="parameter value") for p, t in data.get("parameters", {}).items()}
    cons = None
    c = data.get("constraints")
    if c:
        S = semigroup_from_json(c["semigroup"])
        phi = {a: _element(S, e) for a, e in c.get("phi", {}).items()}
        nu = {x: _element(S, e) for x, e in c.get("nu", {}).items()}
        cons = ConstraintPair(S, phi, nu)
    sol = None
    if data.get("solution") is not None:
        sol = {}
        for x, t in data["solution"].items():
            if not isinstance(t, str):
                raise NonKappaSolution(f"value of {x} is not a kappa-term")
            try:
                sol[x] = as_term(t)
            except ParseError as e:
                raise NonKappaSolution(f"value of {x} is not a kappa-term: {e}") from None
    links = [(z, _term(t)) for z, t in data.get("content_links", [])]
    return EquationSystem(alphabet, variables, eqs, params, cons, links, sol)


def system_to_json(sys: EquationSystem) -> dict:
    al = sys.alphabet
    out = {
        "alphabet": "".join(al) if all(len(a) == 1 for a in al) else list(al),
        "variables": list(sys.variables),
        "parameters": {p: render(t) for p, t in sys.parameters.items()},
        "equations": [[render(l), render(r)] for l, r in sys.equations],
    }
    if sys.constraints is not None:
        out["constraints"] = sys.constraints.to_json()
    if sys.content_links:
        out["content_links"] = [[z, render(t)] for z, t in sys.content_links]
    if sys.solution is not None:
        out["solution"] = {x: render(t) for x, t in sys.solution.items()}
    return out
