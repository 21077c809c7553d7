"""Left basic factorizations and the ordinal bookkeeping of prefixes.

All functions work on normalized kappa-terms and produce kappa-terms that
are equal to the intended factor modulo DRH.  Two devices do the work:

* a *scan* over the top-level items that unfolds a power ``P = s^(w-1)``
  into ``s . P . P`` when the letter we are looking for lies inside it;
* a *state machine* over items whose state is the cumulative content of
  the prefix read so far.  It yields alpha, cumulative content, and the
  cut positions used by ``extract``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .errors import BudgetExceeded, EmptyTerm, OutOfRange
from .ordinals import ONE, OMEGA, ZERO, Ordinal, ord_add, ord_cmp, ord_divmod, ord_left_diff, ord_mul, to_ordinal
from .terms import EMPTY, Empty, KappaTerm, Lit, OmegaMinusOne, as_term, first_letter, from_items, items

NOTHING = frozenset()


@dataclass(frozen=True)
class LbfTriple:
    left: KappaTerm
    marker: str
    right: KappaTerm

    def as_strings(self):
        return (str(self.left), self.marker, str(self.right))


@dataclass(frozen=True)
class LbfSequence:
    """Eventually periodic sequence of (factor, marker) pairs."""
    preperiod: tuple
    period: tuple = ()
    steps: int = field(default=0, compare=False)

    @property
    def finite(self) -> bool:
        return not self.period

    def __len__(self):
        # only meaningful for finite sequences
        return len(self.preperiod)

    def pair(self, k: int):
        if k < len(self.preperiod):
            return self.preperiod[k]
        if not self.period:
            raise IndexError(k)
        return self.period[(k - len(self.preperiod)) % len(self.period)]

    def window(self, n: int):
        if self.finite:
            return list(self.preperiod[:n])
        return [self.pair(k) for k in range(n)]

    def as_strings(self):
        def show(seq):
            return [(str(f), a) for f, a in seq]
        return {"preperiod": show(self.preperiod), "period": show(self.period)}


# ------------------------------------------------------------------ lbf

def _scan(seq, running, full):
    """Find the first letter completing ``full``; unfold powers as needed."""
    for idx, it in enumerate(seq):
        if isinstance(it, Lit):
            if it.symbol in running:
                continue
            running = running | {it.symbol}
            if running == full:
                return list(seq[:idx]), it.symbol, list(seq[idx + 1:])
            continue
        grown = running | it.letters
        if grown != full:
            running = grown
            continue
        # the completing letter lies in the first copy of the base
        res = _scan(items(it.base), running, full)
        left, a, right = res
        return list(seq[:idx]) + left, a, right + [it, it] + list(seq[idx + 1:])
    return None


def _lbf_items(seq):
    full = frozenset().union(*(it.letters for it in seq))
    left, a, right = _scan(seq, NOTHING, full)
    return tuple(left), a, tuple(right)


def lbf(t) -> LbfTriple:
    """Left basic factorization ``t = left . marker . right``."""
    t = as_term(t)
    if isinstance(t, Empty):
        raise EmptyTerm("the empty word has no left basic factorization")
    left, a, right = _lbf_items(items(t))
    return LbfTriple(from_items(left), a, from_items(right))


def first_occurrences(t) -> list:
    """``[(a1, u1), ..., (an, un)]`` with ``t = a1 u1 a2 u2 ... an un``."""
    t = as_term(t)
    if isinstance(t, Empty):
        raise EmptyTerm("the empty word has no first-occurrence factorization")
    out = []
    while not isinstance(t, Empty):
        tri = lbf(t)
        out.append((tri.marker, tri.right))
        t = tri.left
    out.reverse()
    return out


# --------------------------------------------------------------- lbf_seq

def _trim(seq):
    """Drop the tail after the first power absorbing everything after it.

    If ``Q`` is a top-level power and the content of what follows ``Q`` is
    inside ``c(Q)``, that tail lies in the cumulative content of the prefix
    ending with ``Q`` and therefore does not influence the lbf stream.
    """
    n = len(seq)
    suffix = [NOTHING] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] | seq[i].letters
    for i, it in enumerate(seq):
        if isinstance(it, OmegaMinusOne) and suffix[i + 1] <= it.letters:
            return tuple(seq[:i + 1])
    return tuple(seq)


def default_budget(t: KappaTerm) -> int:
    from .config import budget_override
    override = budget_override()
    if override is not None:
        return override
    return 10 * t.size * 2 ** max(1, len(t.letters)) + 16


def _canonical(pre, per):
    pre = list(pre)
    per = list(per)
    while pre and per and pre[-1] == per[-1]:
        pre.pop()
        per = [per[-1]] + per[:-1]
    n = len(per)
    for d in range(1, n + 1):
        if n % d == 0 and per[:d] * (n // d) == per:
            per = per[:d]
            break
    return tuple(pre), tuple(per)


@lru_cache(maxsize=4096)
def _lbf_seq_cached(t: KappaTerm, budget: int) -> LbfSequence:
    rem = items(t)
    seen = {}
    pairs = []
    for step in range(budget + 1):
        if not rem:
            return LbfSequence(tuple(pairs), (), step)
        rem = _trim(rem)
        if rem in seen:
            j = seen[rem]
            pre, per = _canonical(pairs[:j], pairs[j:])
            return LbfSequence(pre, per, step)
        seen[rem] = len(pairs)
        left, a, right = _lbf_items(rem)
        pairs.append((from_items(left), a))
        rem = right
    raise BudgetExceeded(budget, "lbf iteration")


def lbf_seq(t, budget: Optional[int] = None) -> LbfSequence:
    t = as_term(t)
    if isinstance(t, Empty):
        raise EmptyTerm("lbf sequence of the empty word")
    if budget is None:
        budget = default_budget(t)
    return _lbf_seq_cached(t, budget)


def cumulative_content(t, budget: Optional[int] = None) -> frozenset:
    """Cumulative content read off the periodic part of the lbf stream."""
    t = as_term(t)
    if isinstance(t, Empty):
        return NOTHING
    seq = lbf_seq(t, budget)
    out = set()
    for f, a in seq.period:
        out |= f.letters
        out.add(a)
    return frozenset(out)


def regular_part(t, budget: Optional[int] = None) -> Optional[KappaTerm]:
    """Exact remainder at the first step whose factor already has full
    cumulative content; None when the cumulative content is empty."""
    t = as_term(t)
    if isinstance(t, Empty):
        raise EmptyTerm("regular part of the empty word")
    cum = cumulative_content(t, budget)
    if not cum:
        return None
    rem = items(t)
    while True:
        left, a, right = _lbf_items(rem)
        if (frozenset().union(*(x.letters for x in left)) | {a}) == cum:
            return from_items(rem)
        rem = right


# ------------------------------------------------------- state machine

@dataclass(frozen=True)
class PowerProfile:
    """How the copies of a power's base are read, starting from a state."""
    counts: tuple       # ordinal count contributed by copy k (k < len)
    states: tuple       # state before copy k
    start: int          # copies start.. repeat with period len - start
    total: Ordinal

    def locate(self, rho: Ordinal):
        """Copy index k holding marked position rho, offset inside it, state."""
        for k in range(self.start):
            if ord_cmp(rho, self.counts[k]) < 0:
                return k, rho, self.states[k]
            rho = ord_left_diff(self.counts[k], rho)
        period = self.counts[self.start:]
        sigma = sum_ordinals(period)
        q, r = ord_divmod(rho, sigma)
        for j, c in enumerate(period):
            if ord_cmp(r, c) < 0:
                return self.start + q * len(period) + j, r, self.states[self.start + j]
            r = ord_left_diff(c, r)
        raise OutOfRange(f"position {rho} beyond the power")


def sum_ordinals(values):
    out = ZERO
    for v in values:
        out = ord_add(out, v)
    return out


@lru_cache(maxsize=65536)
def power_profile(p: OmegaMinusOne, state: frozenset) -> PowerProfile:
    base = items(p.base)
    states = [state]
    counts = []
    index = {state: 0}
    while True:
        n, nxt = process(base, states[-1])
        counts.append(n)
        if nxt in index:
            start = index[nxt]
            break
        index[nxt] = len(states)
        states.append(nxt)
    pre = sum_ordinals(counts[:start])
    per = sum_ordinals(counts[start:])
    total = pre if per.is_zero() else ord_add(pre, ord_mul(per, OMEGA))
    return PowerProfile(tuple(counts), tuple(states), start, total)


def process(seq, state: frozenset):
    """Read items from ``state``; return (number of end-marked steps, state)."""
    total = ZERO
    for it in seq:
        if isinstance(it, Lit):
            if it.symbol not in state:
                total = ord_add(total, ONE)
                state = NOTHING
            continue
        if it.letters <= state:
            continue
        total = ord_add(total, power_profile(it, state).total)
        state = it.letters
    return total, state


def alpha(t) -> Ordinal:
    """Order type of the end-marked prefixes."""
    t = as_term(t)
    return process(items(t), NOTHING)[0]


def cum(t) -> frozenset:
    """Cumulative content computed by the state machine (fast path)."""
    t = as_term(t)
    return process(items(t), NOTHING)[1]


def _cut(seq, state, rho):
    """Split ``seq`` (read from ``state``) just before marked position rho.

    Returns (left items, right items, state at the cut).  When rho equals
    the total count, the cut is at the very end.
    """
    seq = tuple(seq)
    for idx, it in enumerate(seq):
        if isinstance(it, Lit):
            if it.symbol in state:
                continue
            if rho.is_zero():
                return seq[:idx], seq[idx:], state
            rho = ord_left_diff(ONE, rho)
            state = NOTHING
            continue
        if it.letters <= state:
            continue
        prof = power_profile(it, state)
        if ord_cmp(rho, prof.total) < 0:
            k, offset, st = prof.locate(rho)
            base = items(it.base)
            left, right, at = _cut(base, st, offset)
            if k == 0 and not left:
                return seq[:idx], seq[idx:], at
            return (seq[:idx] + base * k + tuple(left),
                    tuple(right) + (it,) * (k + 2) + seq[idx + 1:], at)
        rho = ord_left_diff(prof.total, rho)
        state = it.letters
    if rho.is_zero():
        return seq, (), state
    raise OutOfRange("position beyond alpha")


def split_at_position(t, beta) -> tuple:
    """``(t[0, beta[, t[beta, alpha[)`` together with the state at beta."""
    t = as_term(t)
    beta = to_ordinal(beta)
    if ord_cmp(beta, alpha(t)) > 0:
        raise OutOfRange(f"{beta} exceeds alpha = {alpha(t)}")
    left, right, st = _cut(items(t), NOTHING, beta)
    return from_items(left), from_items(right), st


def extract(t, beta, gamma) -> KappaTerm:
    """The factor ``t[beta, gamma[`` between two end-marked positions."""
    t = as_term(t)
    beta, gamma = to_ordinal(beta), to_ordinal(gamma)
    a = alpha(t)
    if ord_cmp(beta, gamma) > 0 or ord_cmp(gamma, a) > 0:
        raise OutOfRange(f"need beta <= gamma <= alpha, got {beta}, {gamma}, {a}")
    if ord_cmp(beta, gamma) == 0:
        return EMPTY
    _, right, st = _cut(items(t), NOTHING, beta)
    piece, _, _ = _cut(right, st, ord_left_diff(beta, gamma))
    return from_items(piece)


def cut_many(t, cuts) -> list:
    """Pieces between consecutive cut ordinals (sorted, within alpha)."""
    t = as_term(t)
    cuts = [to_ordinal(c) for c in cuts]
    return [extract(t, a, b) for a, b in zip(cuts, cuts[1:])]


# ------------------------------------------------- reduced products

def _split_outside(seq, allowed):
    for idx, it in enumerate(seq):
        if isinstance(it, Lit):
            if it.symbol not in allowed:
                return tuple(seq[:idx]), tuple(seq[idx:])
            continue
        if it.letters <= allowed:
            continue
        left, right = _split_outside(items(it.base), allowed)
        return tuple(seq[:idx]) + left, right + (it, it) + tuple(seq[idx + 1:])
    return tuple(seq), ()


def split_at_cumulative(u, v):
    """``v = v1 . v2`` with ``c(v1)`` inside cum(u) and ``u v1 . v2`` reduced."""
    u, v = as_term(u), as_term(v)
    left, right = _split_outside(items(v), cum(u))
    return from_items(left), from_items(right)


def split_at_content(allowed, v):
    """Same as split_at_cumulative with an explicit letter set."""
    left, right = _split_outside(items(as_term(v)), frozenset(allowed))
    return from_items(left), from_items(right)


def is_reduced_product(u, v) -> bool:
    u, v = as_term(u), as_term(v)
    if isinstance(v, Empty):
        return False
    return first_letter(v) not in cum(u)
