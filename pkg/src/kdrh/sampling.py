"""Random kappa-terms and term rewrites for property tests and the
acceptance suite.  Everything is driven by an explicit ``random.Random``.
"""
from __future__ import annotations

import random
from typing import Optional

from .terms import EMPTY, Concat, Empty, KappaTerm, Lit, OmegaMinusOne, concat, normalize, power


def random_term(rng: random.Random, letters="ab", max_size=12, max_depth=3) -> KappaTerm:
    """A nonempty normalized term with at most ``max_size`` AST nodes."""
    budget = rng.randint(1, max_size)

    def build(size, depth):
        if size <= 1 or (depth >= max_depth and size <= 2):
            return Lit(rng.choice(letters))
        if depth < max_depth and size >= 2 and rng.random() < 0.35:
            return OmegaMinusOne(build(size - 1, depth + 1))
        if size < 3:
            return Lit(rng.choice(letters))
        k = rng.randint(2, min(4, size - 1))
        rest = size - 1
        cuts = sorted(rng.sample(range(1, rest), k - 1)) if rest > k - 1 else list(range(1, k))
        sizes = [b - a for a, b in zip([0] + cuts, cuts + [rest])]
        return Concat([build(max(1, s), depth) for s in sizes])

    return normalize(build(budget, 0))


def _positions(t, path=()):
    yield path, t
    if isinstance(t, Concat):
        for i, p in enumerate(t.parts):
            yield from _positions(p, path + (i,))
    elif isinstance(t, OmegaMinusOne):
        yield from _positions(t.base, path + (0,))


def _replace(t, path, new):
    if not path:
        return new
    i = path[0]
    if isinstance(t, Concat):
        parts = list(t.parts)
        parts[i] = _replace(parts[i], path[1:], new)
        return concat(*parts)
    if isinstance(t, OmegaMinusOne):
        b = _replace(t.base, path[1:], new)
        return EMPTY if isinstance(b, Empty) else OmegaMinusOne(normalize(b))
    raise ValueError("bad path")


# identities of every DRH, as functions of a power P = s^(w-1)
DRH_RULES = {
    "unfold": lambda p: concat(p.base, p, p),         # P = s P P
    "middle": lambda p: concat(p, p.base, p),         # P = P s P
    "right": lambda p: concat(p, p, p.base),          # P = P P s
}

# identities that hold in R but fail in (for instance) DRAb
R_RULES = {
    "square": lambda p: concat(p, p),                 # P P = P
    "omega": lambda p: concat(p.base, p),             # s^(w-1) = s^w
    "nest": lambda p: power(p),                       # (s^(w-1))^(w-1) = s^(w-1)
}


def rewrite(rng: random.Random, t: KappaTerm, r_only=False) -> Optional[KappaTerm]:
    """Rewrite one power occurrence by a DRH identity (or an R identity)."""
    spots = [(path, s) for path, s in _positions(t) if isinstance(s, OmegaMinusOne)]
    if not spots:
        return None
    path, p = rng.choice(spots)
    rules = dict(DRH_RULES)
    if r_only:
        rules.update(R_RULES)
    name = rng.choice(sorted(rules))
    return _replace(t, path, rules[name](p))


def absorb(rng: random.Random, t: KappaTerm, letters) -> KappaTerm:
    """Append a random word over ``letters`` (caller ensures it is absorbed)."""
    letters = sorted(letters)
    if not letters:
        return t
    w = [Lit(rng.choice(letters)) for _ in range(rng.randint(1, 3))]
    return concat(t, *w)


def mutate(rng: random.Random, t: KappaTerm, letters="ab") -> KappaTerm:
    """Change one letter occurrence (usually breaks equality)."""
    spots = [(path, s) for path, s in _positions(t) if isinstance(s, Lit)]
    path, s = rng.choice(spots)
    return _replace(t, path, Lit(rng.choice(letters)))
