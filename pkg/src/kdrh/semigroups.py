"""Finite semigroups given by Cayley tables: the brute-force oracle.

Elements are the integers ``0..n-1``.  The empty word evaluates to the
adjoined identity of S^I, represented by the index ``n`` inside the
extended table ``S.table_I`` (and by ``None`` at the API surface).

Term evaluation is vectorized with numpy so that a pseudoidentity can be
checked on all substitutions at once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .errors import NotAssociative, SubstitutionLimit, UnboundLetter
from .terms import Concat, Empty, Lit, OmegaMinusOne, as_term

SUBSTITUTION_CAP = 10 ** 6


@dataclass(eq=False)
class FiniteSemigroup:
    table: np.ndarray
    names: list = field(default_factory=list)
    identity: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.int64)
        n = self.table.shape[0]
        if not self.names:
            self.names = [str(i) for i in range(n)]
        ext = np.empty((n + 1, n + 1), dtype=np.int64)
        ext[:n, :n] = self.table
        ext[n, :] = np.arange(n + 1)
        ext[:, n] = np.arange(n + 1)
        self.table_I = ext
        self.omm = np.array([_omega_minus_one(self.table, s) for s in range(n)] + [n], dtype=np.int64)

    @property
    def order(self) -> int:
        return self.table.shape[0]

    @property
    def I(self) -> int:
        return self.order

    def mul(self, x, y):
        if x is None:
            return y
        if y is None:
            return x
        return int(self.table[x, y])

    def product(self, elems):
        out = None
        for e in elems:
            out = self.mul(out, e)
        return out

    def elements(self):
        return range(self.order)

    def to_json(self) -> dict:
        d = {"order": self.order, "table": self.table.tolist(), "names": list(self.names)}
        if self.identity is not None:
            d["identity"] = self.identity
        return d

    def __repr__(self):
        return f"FiniteSemigroup({self.name or 'unnamed'}, order={self.order})"


def validate(table, names=None, identity=None, name="") -> FiniteSemigroup:
    """Check shape, range and associativity, returning the semigroup."""
    arr = np.asarray(table, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError("table must be a nonempty square matrix")
    n = arr.shape[0]
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError("table entries out of range")
    # (xy)z versus x(yz) for all triples at once
    left = arr[arr[:, :, None], np.arange(n)[None, None, :]]
    right = arr[np.arange(n)[:, None, None], arr[None, :, :]]
    bad = np.argwhere(left != right)
    if len(bad):
        x, y, z = (int(v) for v in bad[0])
        raise NotAssociative((x, y, z))
    if names is not None and len(names) != n:
        raise ValueError("names must match the order")
    if identity is not None:
        if not (np.all(arr[identity, :] == np.arange(n)) and np.all(arr[:, identity] == np.arange(n))):
            raise ValueError(f"element {identity} is not an identity")
    return FiniteSemigroup(arr, list(names) if names else [], identity, name)


def _omega_minus_one(table, s):
    powers = [s]
    seen = {s: 1}
    while True:
        nxt = int(table[powers[-1], s])
        if nxt in seen:
            index = seen[nxt]
            period = len(powers) + 1 - index
            break
        seen[nxt] = len(powers) + 1
        powers.append(nxt)
    m = period
    while m < index:
        m += period
    k = m + period - 1          # exponent in the kernel group with k+1 = 0 mod period
    if k <= len(powers):
        return powers[k - 1]
    return powers[index - 1 + (k - index) % period]


def power_omega_minus_one(S: FiniteSemigroup, s: int) -> int:
    return int(S.omm[s])


def power_omega(S: FiniteSemigroup, s: int) -> int:
    return int(S.table[S.omm[s], s])


# ---------------------------------------------------------- evaluation

def _eval_vec(S, t, env, size):
    if isinstance(t, Empty):
        return np.full(size, S.I, dtype=np.int64)
    if isinstance(t, Lit):
        if t.symbol not in env:
            raise UnboundLetter(f"no value for letter {t.symbol!r}")
        return env[t.symbol]
    if isinstance(t, Concat):
        out = _eval_vec(S, t.parts[0], env, size)
        for p in t.parts[1:]:
            out = S.table_I[out, _eval_vec(S, p, env, size)]
        return out
    if isinstance(t, OmegaMinusOne):
        return S.omm[_eval_vec(S, t.base, env, size)]
    raise TypeError(t)


def eval_term(S: FiniteSemigroup, t, sub: dict):
    """Evaluate under a substitution; returns an index, or None for I."""
    t = as_term(t)
    env = {}
    for k, v in sub.items():
        env[k] = np.array([S.I if v is None else v], dtype=np.int64)
    r = int(_eval_vec(S, t, env, 1)[0])
    return None if r == S.I else r


def all_substitutions(S: FiniteSemigroup, letters, cap=SUBSTITUTION_CAP):
    letters = sorted(letters)
    n = S.order
    total = n ** len(letters)
    if total > cap:
        raise SubstitutionLimit(f"{total} substitutions exceed the cap of {cap}")
    if not letters:
        return letters, {}, 1
    grids = np.meshgrid(*([np.arange(n)] * len(letters)), indexing="ij")
    env = {a: g.reshape(-1).astype(np.int64) for a, g in zip(letters, grids)}
    return letters, env, total


def counterexample(S: FiniteSemigroup, u, v, empty_is_identity=False, cap=SUBSTITUTION_CAP):
    """First substitution where u and v differ in S (or None)."""
    u, v = as_term(u), as_term(v)
    letters, env, size = all_substitutions(S, u.letters | v.letters, cap)
    a = _eval_vec(S, u, env, size)
    b = _eval_vec(S, v, env, size)
    if empty_is_identity and S.identity is not None:
        a = np.where(a == S.I, S.identity, a)
        b = np.where(b == S.I, S.identity, b)
    diff = np.nonzero(a != b)[0]
    if len(diff) == 0:
        return None
    i = int(diff[0])
    return {x: int(env[x][i]) for x in letters}


def satisfies(S: FiniteSemigroup, u, v, empty_is_identity=False, cap=SUBSTITUTION_CAP) -> bool:
    return counterexample(S, u, v, empty_is_identity, cap) is None


# ---------------------------------------------------------- structure

def right_ideal(S, x):
    return frozenset([x]) | frozenset(int(y) for y in S.table[x, :])


def green_R(S) -> list:
    """R-classes as a list of sorted tuples."""
    ideals = {x: right_ideal(S, x) for x in S.elements()}
    classes = {}
    for x in S.elements():
        classes.setdefault(ideals[x], []).append(x)
    return sorted(tuple(c) for c in classes.values())


def is_R_trivial(S) -> bool:
    return all(len(c) == 1 for c in green_R(S))


def idempotents(S):
    return [x for x in S.elements() if S.table[x, x] == x]


def _class_is_group(S, cls):
    cls = set(cls)
    es = [x for x in cls if S.table[x, x] == x]
    if len(es) != 1:
        return False
    e = es[0]
    for x in cls:
        for y in cls:
            if int(S.table[x, y]) not in cls:
                return False
        if S.table[e, x] != x or S.table[x, e] != x:
            return False
        if not any(S.table[x, y] == e for y in cls):
            return False
    return True


def subtable(S, cls):
    cls = sorted(cls)
    pos = {x: i for i, x in enumerate(cls)}
    tab = [[pos[int(S.table[x, y])] for y in cls] for x in cls]
    return FiniteSemigroup(np.array(tab), [S.names[x] for x in cls])


def is_group(S) -> bool:
    return _class_is_group(S, range(S.order))


def is_commutative(S) -> bool:
    return bool(np.all(S.table == S.table.T))


def is_in_DRH(S, group_test=lambda G: G.order == 1) -> bool:
    """Every regular R-class is a group accepted by ``group_test``."""
    for cls in green_R(S):
        if not any(S.table[x, x] == x for x in cls):
            continue
        if not _class_is_group(S, cls):
            return False
        if not group_test(subtable(S, cls)):
            return False
    return True


def is_in_DRAb(S) -> bool:
    return is_in_DRH(S, is_commutative)


# ---------------------------------------------------------- constructions

def direct_product(S, T, name=None) -> FiniteSemigroup:
    n, m = S.order, T.order
    tab = np.empty((n * m, n * m), dtype=np.int64)
    for a in range(n):
        for b in range(m):
            for c in range(n):
                for d in range(m):
                    tab[a * m + b, c * m + d] = S.table[a, c] * m + T.table[b, d]
    names = [f"({S.names[a]},{T.names[b]})" for a in range(n) for b in range(m)]
    ident = None
    if S.identity is not None and T.identity is not None:
        ident = S.identity * m + T.identity
    return FiniteSemigroup(tab, names, ident, name or f"{S.name}x{T.name}")


def subset_semilattice(letters, name=None) -> FiniteSemigroup:
    """Nonempty subsets of ``letters`` under union (free semilattice)."""
    letters = sorted(letters)
    subsets = []
    for mask in range(1, 2 ** len(letters)):
        subsets.append(frozenset(a for i, a in enumerate(letters) if mask >> i & 1))
    index = {s: i for i, s in enumerate(subsets)}
    tab = [[index[x | y] for y in subsets] for x in subsets]
    names = ["{" + ",".join(sorted(s)) + "}" for s in subsets]
    S = FiniteSemigroup(np.array(tab), names, None, name or "P+(" + "".join(letters) + ")")
    S.subsets = subsets
    return S


def augment_with_content(S, A) -> FiniteSemigroup:
    """S x (nonempty subsets of A, union): a semigroup with a content function."""
    P = subset_semilattice(A)
    out = direct_product(S, P, name=f"{S.name}+content")
    out.content_of = [P.subsets[i % P.order] for i in range(out.order)]
    return out


# ---------------------------------------------------------- catalog

def _tab(rows, name, names=None, identity=None):
    return validate(rows, names, identity, name)


def trivial():
    return _tab([[0]], "trivial", identity=0)


def semilattice2():
    # 1 is the identity, 0 the zero
    return _tab([[0, 0], [0, 1]], "semilattice2", ["0", "1"], identity=1)


def left_zero2():
    return _tab([[0, 0], [1, 1]], "left_zero2", ["x", "y"])


def right_zero2():
    return _tab([[0, 1], [0, 1]], "right_zero2", ["x", "y"])


def null2():
    return _tab([[0, 0], [0, 0]], "null2", ["0", "n"])


def monogenic_index2():
    # s, s2 with s^2 = s^3
    return _tab([[1, 1], [1, 1]], "monogenic_s2=s3", ["s", "s2"])


def cyclic_group(n):
    return _tab([[(i + j) % n for j in range(n)] for i in range(n)], f"Z{n}",
                [f"g{i}" for i in range(n)], identity=0)


def extensive_maps3():
    """The six maps f of {0,1,2} with f(x) >= x, composed left to right.

    A non-commutative R-trivial monoid (not L-trivial).
    """
    return extensive_maps(3)


def flip_flop():
    """Left-zero semigroup on two elements with an identity adjoined."""
    return _tab([[0, 0, 0], [1, 1, 1], [0, 1, 2]], "flip_flop", ["x", "y", "e"], identity=2)


def extensive_maps(n):
    """All maps f of {0..n-1} with f(x) >= x, composed left to right."""
    maps = list(product(*[range(x, n) for x in range(n)]))
    index = {m: i for i, m in enumerate(maps)}
    tab = [[index[tuple(g[f[x]] for x in range(n))] for g in maps] for f in maps]
    names = ["".join(map(str, m)) for m in maps]
    return _tab(tab, f"extensive{n}", names, identity=index[tuple(range(n))])


def zero_adjoined(S, name=None):
    n = S.order
    tab = np.zeros((n + 1, n + 1), dtype=np.int64)
    tab[:n, :n] = S.table
    tab[n, :] = n
    tab[:, n] = n
    return validate(tab, list(S.names) + ["0"], S.identity, name or f"{S.name}^0")


def r_trivial_catalog() -> list:
    base = [trivial(), semilattice2(), left_zero2(), null2(), monogenic_index2(),
            flip_flop(), extensive_maps3(), extensive_maps(4)]
    base.append(direct_product(left_zero2(), semilattice2()))
    base.append(direct_product(monogenic_index2(), left_zero2()))
    return base


def drab_catalog() -> list:
    z2, z3 = cyclic_group(2), cyclic_group(3)
    out = [z2, z3, zero_adjoined(z2), zero_adjoined(z3)]
    out.append(direct_product(left_zero2(), z2))
    out.append(direct_product(extensive_maps3(), z2))
    out.append(direct_product(semilattice2(), z3))
    out.append(direct_product(z2, z3))
    out.append(direct_product(monogenic_index2(), z3))
    return out + r_trivial_catalog()


CATALOG = {
    "trivial": trivial, "semilattice2": semilattice2, "left_zero2": left_zero2,
    "right_zero2": right_zero2, "null2": null2, "monogenic": monogenic_index2,
    "extensive3": extensive_maps3, "flip_flop": flip_flop,
    "Z2": lambda: cyclic_group(2), "Z3": lambda: cyclic_group(3),
}


# ---------------------------------------------------------- JSON

def from_json(data) -> FiniteSemigroup:
    if isinstance(data, str):
        if data in CATALOG:
            return CATALOG[data]()
        with open(data) as fh:
            data = json.load(fh)
    if "order" not in data or "table" not in data:
        raise ValueError("semigroup JSON needs 'order' and 'table'")
    S = validate(data["table"], data.get("names"), data.get("identity"), data.get("name", ""))
    if S.order != data["order"]:
        raise ValueError("'order' does not match the table")
    return S


def to_json(S: FiniteSemigroup) -> dict:
    return S.to_json()
