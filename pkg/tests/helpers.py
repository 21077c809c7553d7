"""Shared helpers for the test suite: independent oracles and generators."""
import random
from functools import lru_cache
from itertools import product

from kdrh.boundary import FactorizationScheme, s_value
from kdrh.equations import EquationSystem
from kdrh.factorization import alpha, cum, extract
from kdrh.ordinals import Ordinal
from kdrh.semigroups import monogenic_index2, left_zero2, direct_product
from kdrh.terms import EMPTY, Empty, Lit, omega, parse


# ------------------------------------------------------------------
# Ordinals below omega^5 as coefficient tuples (c4, c3, c2, c1, c0).
# Arithmetic follows the recursive definitions only: successor bumps the
# last coordinate, limits are sups of cofinal sequences, products are
# iterated sums.  Comparison is lexicographic on the tuples.

D = 5
ZERO_T = (0,) * D
SAMPLES = (3, 4, 5)


def tup(x: Ordinal):
    out = [0] * D
    for e, c in x.terms:
        out[D - 1 - e] = c
    return tuple(out)


def to_ord(t):
    return Ordinal([(D - 1 - k, c) for k, c in enumerate(t) if c])


def _pred(t):
    return t[:-1] + (t[-1] - 1,)


def _succ(t):
    return t[:-1] + (t[-1] + 1,)


def _cofinal(t, n):
    """n-th element of the standard cofinal sequence of a limit t."""
    k = max(i for i, c in enumerate(t) if c)
    out = list(t)
    out[k] -= 1
    out[k + 1] = n
    return tuple(out)


def _sup(values):
    """Sup of a strictly increasing sequence sampled at SAMPLES."""
    a, b, c = values
    if a == b == c:
        return a
    k = next(i for i in range(D) if a[i] != b[i])
    assert a[:k] == b[:k] == c[:k] and a[k] < b[k] < c[k], values
    if k == 0:
        raise OverflowError("sup leaves the tuple range")
    out = list(a[:k - 1]) + [a[k - 1] + 1] + [0] * (D - k)
    return tuple(out)


@lru_cache(maxsize=None)
def bf_add(x, y):
    if y == ZERO_T:
        return x
    if y[-1]:
        return _succ(bf_add(x, _pred(y)))
    return _sup([bf_add(x, _cofinal(y, n)) for n in SAMPLES])


@lru_cache(maxsize=None)
def bf_mul(x, y):
    if y == ZERO_T or x == ZERO_T:
        return ZERO_T
    if y[-1]:
        return bf_add(bf_mul(x, _pred(y)), x)
    return _sup([bf_mul(x, _cofinal(y, n)) for n in SAMPLES])


def bf_less(x, y):
    return x < y


def bf_left_diff(b, a):
    """The z with b + z = a, found by search over tuples bounded by a."""
    bound = max(a) + 1
    top = next((k for k in range(D) if a[k]), D - 1)
    hits = [(0,) * top + z for z in product(range(bound), repeat=D - top) if bf_add(b, (0,) * top + z) == a]
    assert len(hits) == 1, (b, a, hits)
    return hits[0]


def random_small_ordinal(rng, top_exp=2, coef=3):
    return tuple([0] * (D - 1 - top_exp) + [rng.randint(0, coef) for _ in range(top_exp + 1)])


# ------------------------------------------------------------------
# Random ordinals below a bound and random factorization schemes.

def random_ordinal_upto(rng, bound: Ordinal) -> Ordinal:
    """Uniform-ish ordinal in [0, bound]."""
    terms = []
    for e, c in bound.terms:
        k = rng.randint(0, c)
        if k:
            terms.append((e, k))
        if k < c:
            for e2 in range(e - 1, -1, -1):
                if rng.random() < 0.5:
                    terms.append((e2, rng.randint(1, 3)))
            break
    return Ordinal(terms)


def scheme_semigroup():
    """A small monoid-free semigroup and a letter map for scheme tests."""
    sg = direct_product(monogenic_index2(), left_zero2())
    return sg


def random_scheme(rng, w, sg, phi, stem, max_cuts=5):
    """A scheme of ``w`` whose cut set has at most ``max_cuts`` positions."""
    aw = alpha(w)
    cuts = set()
    for _ in range(rng.randint(2, max_cuts)):
        cuts.add(random_ordinal_upto(rng, aw))
    cuts = sorted(cuts)
    if len(cuts) < 2:
        cuts = sorted({Ordinal(), aw})
    J = [f"{stem}{k}" for k in range(len(cuts))]
    iota = dict(zip(J, cuts))
    M, theta = {}, {}
    for i, j in zip(J, J[1:]):
        piece = extract(w, iota[i], iota[j])
        options = [(piece, EMPTY)]
        for a in sorted(cum(piece)):
            options.append((piece, omega(Lit(a))))
        for phi_t, psi_t in options[:rng.randint(1, len(options))]:
            s = (s_value(sg, phi, phi_t), s_value(sg, phi, psi_t))
            mu = M.get((i, j, s), 0)
            M[(i, j, s)] = mu + 1
            theta[(i, j, s, mu)] = (phi_t, psi_t)
    return FactorizationScheme(J, iota, M, theta)


# ------------------------------------------------------------------
# Curated instances for the induction engine: equation, solution, and
# the case each one is chosen for.

CURATED = [
    ("Case1", [("x", "a")], {"x": "a"}),
    ("Case2", [("x", "y")], {"x": "a", "y": "a"}),
    ("Case3", [("ax", "x")], {"x": "(a)^[w]b"}),
    ("Case4", [("xx", "y")], {"x": "ab", "y": "abab"}),
    ("Case5", [("xa", "ax")], {"x": "(a)^[w]"}),
]


def equation_system(eqs, sol, alphabet=("a", "b")):
    return EquationSystem(tuple(alphabet), sorted(sol), [(parse(l), parse(r)) for l, r in eqs],
                          solution={k: parse(v) for k, v in sol.items()})


def is_empty(t):
    return isinstance(t, Empty)


def rng_for(name):
    return random.Random(sum(map(ord, name)) * 7919)
