"""Ordinals below omega^omega in Cantor normal form.

An ordinal is stored as a tuple of ``(exponent, coefficient)`` pairs with
strictly decreasing exponents and positive coefficients.  Exponents are
natural numbers, so every representable value is below omega^omega and
products of representable values stay representable.
"""
from __future__ import annotations

import re
from functools import total_ordering

from .errors import OrdinalError


@total_ordering
class Ordinal:
    __slots__ = ("terms",)

    def __init__(self, terms=()):
        cleaned = []
        for e, c in terms:
            if c < 0 or e < 0:
                raise OrdinalError("negative exponent or coefficient")
            if c:
                cleaned.append((int(e), int(c)))
        cleaned.sort(key=lambda ec: -ec[0])
        for a, b in zip(cleaned, cleaned[1:]):
            if a[0] == b[0]:
                raise OrdinalError("repeated exponent in normal form")
        self.terms = tuple(cleaned)

    @classmethod
    def finite(cls, n: int) -> "Ordinal":
        if n < 0:
            raise OrdinalError("ordinals are nonnegative")
        return cls(((0, n),)) if n else ZERO

    @classmethod
    def omega_power(cls, e: int, c: int = 1) -> "Ordinal":
        return cls(((e, c),))

    # --- inspection
    def is_zero(self):
        return not self.terms

    def is_finite(self):
        return not self.terms or self.terms[0][0] == 0

    def is_successor(self):
        return bool(self.terms) and self.terms[-1][0] == 0

    def is_limit(self):
        return bool(self.terms) and self.terms[-1][0] > 0

    def leading_exponent(self):
        return self.terms[0][0] if self.terms else None

    def coefficient(self, e):
        for ee, c in self.terms:
            if ee == e:
                return c
        return 0

    def as_int(self):
        if not self.is_finite():
            raise OrdinalError(f"{self} is infinite")
        return self.terms[0][1] if self.terms else 0

    # --- arithmetic
    def __add__(self, other):
        return ord_add(self, to_ordinal(other))

    def __radd__(self, other):
        return ord_add(to_ordinal(other), self)

    def __mul__(self, other):
        return ord_mul(self, to_ordinal(other))

    def __rmul__(self, other):
        return ord_mul(to_ordinal(other), self)

    def __sub__(self, other):
        """``a - b`` is the left difference: the x with ``b + x = a``."""
        return ord_left_diff(to_ordinal(other), self)

    # --- order
    def _cmp(self, other):
        return ord_cmp(self, to_ordinal(other))

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, OrdinalError):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __hash__(self):
        if self.is_finite():
            return hash(self.as_int())
        return hash(self.terms)

    def __repr__(self):
        return f"Ordinal({str(self)!r})"

    def __str__(self):
        return format_ordinal(self)


ZERO = Ordinal()
ONE = Ordinal(((0, 1),))
OMEGA = Ordinal(((1, 1),))


def to_ordinal(x) -> Ordinal:
    if isinstance(x, Ordinal):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not an ordinal")
    if isinstance(x, int):
        return Ordinal.finite(x)
    if isinstance(x, str):
        return parse_ordinal(x)
    raise TypeError(f"cannot interpret {x!r} as an ordinal")


def ord_cmp(x: Ordinal, y: Ordinal) -> int:
    """-1, 0 or 1 (lexicographic on the normal form)."""
    for (e1, c1), (e2, c2) in zip(x.terms, y.terms):
        if e1 != e2:
            return 1 if e1 > e2 else -1
        if c1 != c2:
            return 1 if c1 > c2 else -1
    if len(x.terms) == len(y.terms):
        return 0
    return 1 if len(x.terms) > len(y.terms) else -1


def ord_add(x: Ordinal, y: Ordinal) -> Ordinal:
    if y.is_zero():
        return x
    e = y.terms[0][0]
    head = [(ee, c) for ee, c in x.terms if ee > e]
    carry = x.coefficient(e)
    tail = list(y.terms)
    tail[0] = (e, tail[0][1] + carry)
    return Ordinal(head + tail)


def ord_mul(x: Ordinal, y: Ordinal) -> Ordinal:
    if x.is_zero() or y.is_zero():
        return ZERO
    lead_e, lead_c = x.terms[0]
    out = ZERO
    for f, d in y.terms:
        if f > 0:
            piece = Ordinal(((lead_e + f, d),))
        else:
            # x * d = omega^e * (c*d) + (rest of x)
            piece = Ordinal(((lead_e, lead_c * d),) + x.terms[1:])
        out = ord_add(out, piece)
    return out


def ord_left_diff(base: Ordinal, target: Ordinal) -> Ordinal:
    """The unique x with ``base + x == target``; requires base <= target."""
    if ord_cmp(base, target) > 0:
        raise OrdinalError(f"left difference undefined: {base} > {target}")
    for i, (e, c) in enumerate(target.terms):
        bc = base.coefficient(e)
        # the first exponent (from the top) where the two differ
        if bc != c or (i < len(base.terms) and base.terms[i][0] != e):
            return Ordinal(((e, c - bc),) + target.terms[i + 1:])
    return ZERO


def ord_divmod(x: Ordinal, d: Ordinal):
    """Return ``(q, r)`` with ``x = d*q + r``, q a natural number and r < d.

    Requires ``x < d * omega``.
    """
    if d.is_zero():
        raise OrdinalError("division by zero")
    if ord_cmp(x, ord_mul(d, OMEGA)) >= 0:
        raise OrdinalError(f"{x} is not below {d}*w")
    e = d.terms[0][0]
    q = x.coefficient(e) // d.terms[0][1]
    while q > 0 and ord_cmp(ord_mul(d, Ordinal.finite(q)), x) > 0:
        q -= 1
    while ord_cmp(ord_mul(d, Ordinal.finite(q + 1)), x) <= 0:
        q += 1
    return q, ord_left_diff(ord_mul(d, Ordinal.finite(q)), x)


def ord_sum(values) -> Ordinal:
    out = ZERO
    for v in values:
        out = ord_add(out, v)
    return out


# ------------------------------------------------------------ text form

_TERM_RE = re.compile(r"^(?:w(?:\^(\d+))?(?:\*(\d+))?|(\d+))$")


def parse_ordinal(text: str) -> Ordinal:
    """Parse ``"w^2*3+w*1+4"``, ``"w+1"``, ``"0"`` ..."""
    s = text.replace(" ", "")
    if not s:
        raise OrdinalError("empty ordinal text")
    if s == "0":
        return ZERO
    out = ZERO
    for part in s.split("+"):
        m = _TERM_RE.match(part)
        if not m:
            raise OrdinalError(f"bad ordinal term {part!r} in {text!r}")
        if m.group(3) is not None:
            piece = Ordinal.finite(int(m.group(3)))
        else:
            e = int(m.group(1)) if m.group(1) is not None else 1
            c = int(m.group(2)) if m.group(2) is not None else 1
            piece = Ordinal(((e, c),))
        out = ord_add(out, piece)
    return out


def format_ordinal(x: Ordinal) -> str:
    if x.is_zero():
        return "0"
    parts = []
    for e, c in x.terms:
        if e == 0:
            parts.append(str(c))
            continue
        s = "w" if e == 1 else f"w^{e}"
        if c != 1:
            s += f"*{c}"
        parts.append(s)
    return "+".join(parts)
