"""Deciding equality of kappa-terms modulo R and DRH.

Two nonempty terms are R-equivalent modulo DRH exactly when their lbf
streams agree pairwise (factors compared recursively, markers literally);
they are equal when, in addition, they agree modulo the group
pseudovariety H.  The H side is pluggable through ``HOracle``.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache
from math import lcm
from typing import Optional

from .factorization import lbf_seq
from .terms import Empty, KappaTerm, Lit, OmegaMinusOne, Concat, as_term


class HOracle:
    """Decides equality modulo a pseudovariety of groups."""
    name = "H"
    description = ""

    def equal_mod_H(self, u: KappaTerm, v: KappaTerm) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class TrivialOracle(HOracle):
    """The trivial pseudovariety: every pair is equal, so DRH = R."""
    name = "I"
    description = "trivial group pseudovariety (DRH = R)"

    def equal_mod_H(self, u, v):
        return True


class AbOracle(HOracle):
    """All finite abelian groups: compare abelianization vectors."""
    name = "Ab"
    description = "finite abelian groups (image in the free abelian group)"

    def equal_mod_H(self, u, v):
        return abelianize(u) == abelianize(v)


class FiniteGroupOracle(HOracle):
    """Pseudovariety generated by a finite list of finite groups.

    Two terms are equal modulo it iff they agree in each listed group
    under every assignment of the letters, which is decided exhaustively.
    """

    def __init__(self, groups, name="H"):
        from .semigroups import is_group
        self.groups = list(groups)
        for g in self.groups:
            if not is_group(g):
                raise ValueError("FiniteGroupOracle needs groups")
        self.name = name
        self.description = f"generated by {len(self.groups)} finite group(s)"

    def equal_mod_H(self, u, v):
        from .semigroups import satisfies
        return all(satisfies(g, u, v, empty_is_identity=True) for g in self.groups)


TRIVIAL = TrivialOracle()
AB = AbOracle()


def oracle_by_name(name: str) -> HOracle:
    key = name.strip().lower()
    if key in ("r", "i", "trivial"):
        return TRIVIAL
    if key in ("drab", "ab"):
        return AB
    raise ValueError(f"unknown oracle {name!r}")


# ------------------------------------------------------------ abelian

def abelianize(t) -> dict:
    """Image in the free abelian group: letter -> integer exponent."""
    t = as_term(t)
    return {a: n for a, n in _ab(t).items() if n}


@lru_cache(maxsize=65536)
def _ab_cached(t: KappaTerm):
    return tuple(sorted(_ab_raw(t).items()))


def _ab(t):
    return Counter(dict(_ab_cached(t)))


def _ab_raw(t):
    if isinstance(t, Empty):
        return Counter()
    if isinstance(t, Lit):
        return Counter({t.symbol: 1})
    if isinstance(t, Concat):
        out = Counter()
        for p in t.parts:
            for k, n in _ab_cached(p):
                out[k] += n
        return out
    if isinstance(t, OmegaMinusOne):
        return Counter({k: -n for k, n in _ab_cached(t.base)})
    raise TypeError(t)


# ------------------------------------------------------------ DRH

def sequences_equal(s1, s2, h: HOracle) -> bool:
    if s1.finite != s2.finite:
        return False
    if s1.finite:
        if len(s1.preperiod) != len(s2.preperiod):
            return False
        n = len(s1.preperiod)
    else:
        n = max(len(s1.preperiod), len(s2.preperiod)) + lcm(len(s1.period), len(s2.period))
    for k in range(n):
        (f1, a1), (f2, a2) = s1.pair(k), s2.pair(k)
        if a1 != a2:
            return False
        if not equal_mod_DRH(f1, f2, h):
            return False
    return True


def r_equivalent_mod_DRH(u, v, h: HOracle = TRIVIAL, budget: Optional[int] = None) -> bool:
    """Same R-class modulo DRH (lbf streams agree)."""
    u, v = as_term(u), as_term(v)
    if isinstance(u, Empty) or isinstance(v, Empty):
        return isinstance(u, Empty) and isinstance(v, Empty)
    if u == v:
        return True
    if u.letters != v.letters:
        return False
    return sequences_equal(lbf_seq(u, budget), lbf_seq(v, budget), h)


@lru_cache(maxsize=65536)
def _equal_cached(u, v, h):
    if u == v:
        return True
    if isinstance(u, Empty) or isinstance(v, Empty):
        return False
    if u.letters != v.letters:
        return False
    if not h.equal_mod_H(u, v):
        return False
    return sequences_equal(lbf_seq(u), lbf_seq(v), h)


def equal_mod_DRH(u, v, h: HOracle = TRIVIAL) -> bool:
    return _equal_cached(as_term(u), as_term(v), h)


def equal_mod_R(u, v) -> bool:
    return equal_mod_DRH(u, v, TRIVIAL)


def equal_mod_DRAb(u, v) -> bool:
    return equal_mod_DRH(u, v, AB)


def explain(u, v, h: HOracle = TRIVIAL) -> dict:
    """Data behind a verdict: lbf streams and H information."""
    u, v = as_term(u), as_term(v)
    out = {"u": str(u), "v": str(v), "oracle": h.name}
    for name, t in (("u", u), ("v", v)):
        if isinstance(t, Empty):
            out[f"lbf_{name}"] = None
        else:
            out[f"lbf_{name}"] = lbf_seq(t).as_strings()
    out["r_equivalent"] = r_equivalent_mod_DRH(u, v, h)
    out["equal_mod_H"] = h.equal_mod_H(u, v)
    if isinstance(h, AbOracle):
        out["abelian_u"] = abelianize(u)
        out["abelian_v"] = abelianize(v)
    out["equal"] = equal_mod_DRH(u, v, h)
    return out
