"""Kappa-terms: words built from letters, concatenation and the (omega-1)-power.

Terms are immutable and hashable.  Constructors do not normalize; use
``concat``/``power`` (or ``normalize``) to obtain the flattened form that
every other module expects:

* no ``Concat`` directly inside a ``Concat``,
* no ``Empty`` inside ``Concat`` or ``OmegaMinusOne``,
* a ``Concat`` always has at least two parts.

Letters are normally single characters ``a``-``z``.  Auxiliary symbols
(equation variables, guard letters, boundary-system variables) may have
longer names; they print as ``<name>``.
"""
from __future__ import annotations

from typing import Iterable, Optional

from .errors import EmptyTerm, ParseError


class KappaTerm:
    __slots__ = ("_hash", "_content", "_size")

    def __init__(self):
        self._hash = None
        self._content = None
        self._size = None

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return f"term({render(self)!r})"

    def __str__(self):
        return render(self)

    def __mul__(self, other):
        return concat(self, other)

    @property
    def letters(self) -> frozenset:
        if self._content is None:
            self._content = self._compute_content()
        return self._content

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = self._compute_size()
        return self._size


class Empty(KappaTerm):
    """The empty word I (identity of S^I)."""
    __slots__ = ()

    def _key(self):
        return ("I",)

    def _compute_content(self):
        return frozenset()

    def _compute_size(self):
        return 1


class Lit(KappaTerm):
    __slots__ = ("symbol",)

    def __init__(self, symbol: str):
        super().__init__()
        if not isinstance(symbol, str) or not symbol:
            raise ValueError("letter symbol must be a nonempty string")
        self.symbol = symbol

    def _key(self):
        return ("L", self.symbol)

    def _compute_content(self):
        return frozenset((self.symbol,))

    def _compute_size(self):
        return 1


class Concat(KappaTerm):
    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[KappaTerm]):
        super().__init__()
        self.parts = tuple(parts)

    def _key(self):
        return ("C", self.parts)

    def _compute_content(self):
        out = set()
        for p in self.parts:
            out |= p.letters
        return frozenset(out)

    def _compute_size(self):
        return 1 + sum(p.size for p in self.parts)


class OmegaMinusOne(KappaTerm):
    __slots__ = ("base",)

    def __init__(self, base: KappaTerm):
        super().__init__()
        self.base = base

    def _key(self):
        return ("P", self.base)

    def _compute_content(self):
        return self.base.letters

    def _compute_size(self):
        return 1 + self.base.size


EMPTY = Empty()


def letter(symbol: str) -> Lit:
    return Lit(symbol)


def items(t: KappaTerm) -> tuple:
    """Top-level factors of a normalized term (letters and powers)."""
    if isinstance(t, Empty):
        return ()
    if isinstance(t, Concat):
        return t.parts
    return (t,)


def from_items(seq) -> KappaTerm:
    """Rebuild a term from a sequence of letters/powers (already normalized)."""
    seq = tuple(seq)
    if not seq:
        return EMPTY
    if len(seq) == 1:
        return seq[0]
    return Concat(seq)


def concat(*terms: KappaTerm) -> KappaTerm:
    out = []
    for t in terms:
        out.extend(items(normalize(t)))
    return from_items(out)


def power(t: KappaTerm) -> KappaTerm:
    """t^(omega-1).  The base must be nonempty."""
    t = normalize(t)
    if isinstance(t, Empty):
        raise EmptyTerm("the (omega-1)-power of the empty word is not a term")
    return OmegaMinusOne(t)


def omega(t: KappaTerm) -> KappaTerm:
    """t^omega, written as t . t^(omega-1)."""
    return concat(t, power(t))


def repeat(t: KappaTerm, n: int) -> KappaTerm:
    return from_items(items(normalize(t)) * n)


def normalize(t: KappaTerm) -> KappaTerm:
    if isinstance(t, (Empty, Lit)):
        return t
    if isinstance(t, OmegaMinusOne):
        b = normalize(t.base)
        if isinstance(b, Empty):
            raise ValueError("(omega-1)-power of the empty word")
        return t if b is t.base else OmegaMinusOne(b)
    if isinstance(t, Concat):
        out = []
        for p in t.parts:
            out.extend(items(normalize(p)))
        if len(out) == len(t.parts) and all(a is b for a, b in zip(out, t.parts)):
            return t
        return from_items(out)
    raise TypeError(f"not a kappa-term: {t!r}")


def content(t: KappaTerm) -> frozenset:
    return t.letters


def first_letter(t: KappaTerm) -> Optional[str]:
    while True:
        if isinstance(t, Empty):
            return None
        if isinstance(t, Lit):
            return t.symbol
        if isinstance(t, Concat):
            t = t.parts[0]
        else:
            t = t.base


def depth(t: KappaTerm) -> int:
    """Nesting depth of (omega-1)-powers."""
    if isinstance(t, OmegaMinusOne):
        return 1 + depth(t.base)
    if isinstance(t, Concat):
        return max(depth(p) for p in t.parts)
    return 0


def rename(t: KappaTerm, mapping: dict) -> KappaTerm:
    """Substitute terms for letters (a continuous homomorphism on kappa-terms)."""
    if isinstance(t, Empty):
        return t
    if isinstance(t, Lit):
        return normalize(mapping[t.symbol]) if t.symbol in mapping else t
    if isinstance(t, Concat):
        return concat(*(rename(p, mapping) for p in t.parts))
    b = rename(t.base, mapping)
    if isinstance(b, Empty):
        return EMPTY  # I^(omega-1) = I in S^I
    return OmegaMinusOne(b)


# ---------------------------------------------------------------- printing

def _render_symbol(s: str) -> str:
    if len(s) == 1 and "a" <= s <= "z":
        return s
    return f"<{s}>"


def render(t: KappaTerm) -> str:
    if isinstance(t, Empty):
        return "1"
    if isinstance(t, Lit):
        return _render_symbol(t.symbol)
    if isinstance(t, Concat):
        return "".join(render(p) for p in t.parts)
    if isinstance(t, OmegaMinusOne):
        return f"({render(t.base)})^[w-1]"
    raise TypeError(f"not a kappa-term: {t!r}")


# ----------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text, alphabet):
        self.text = text
        self.pos = 0
        self.alphabet = None if alphabet is None else set(alphabet)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else None

    def parse_term(self, closing):
        factors = []
        while True:
            ch = self.peek()
            if ch is None or ch == closing:
                break
            factors.append(self.parse_factor())
        if not factors:
            raise ParseError("expected a factor", self.pos)
        return concat(*factors)

    def parse_factor(self):
        ch = self.peek()
        start = self.pos
        if ch == "1":
            self.pos += 1
            return EMPTY
        if "a" <= ch <= "z":
            self.pos += 1
            if self.alphabet is not None and ch not in self.alphabet:
                raise ParseError(f"letter {ch!r} is not in the alphabet", start)
            return Lit(ch)
        if ch == "<":
            end = self.text.find(">", self.pos)
            if end < 0:
                raise ParseError("unterminated <name>", start)
            name = self.text[self.pos + 1:end]
            if not name:
                raise ParseError("empty <name>", start)
            self.pos = end + 1
            return Lit(name)
        if ch == "(":
            self.pos += 1
            inner = self.parse_term(")")
            if self.peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            self.skip()
            rest = self.text[self.pos:]
            if rest.startswith("^[w-1]"):
                self.pos += 6
                kind = "w-1"
            elif rest.startswith("^[w]"):
                self.pos += 4
                kind = "w"
            else:
                raise ParseError("expected '^[w-1]' or '^[w]' after ')'", self.pos)
            if isinstance(inner, Empty):
                raise ParseError("power of the empty word", start)
            p = OmegaMinusOne(inner)
            return p if kind == "w-1" else concat(inner, p)
        raise ParseError(f"unexpected character {ch!r}", self.pos)


def parse(text: str, alphabet=None) -> KappaTerm:
    """Parse the textual syntax, e.g. ``"ab(ab)^[w-1]"`` or ``"(a)^[w]"``.

    ``alphabet`` (any iterable of single letters) restricts the plain
    letters that may occur; ``None`` accepts all of a-z.
    """
    if not isinstance(text, str):
        raise ParseError("term text must be a string")
    p = _Parser(text, alphabet)
    if p.peek() is None:
        raise ParseError("empty input", 0)
    t = p.parse_term(None)
    if p.peek() is not None:
        raise ParseError(f"unexpected character {p.peek()!r}", p.pos)
    return t


def as_term(x, alphabet=None) -> KappaTerm:
    if isinstance(x, KappaTerm):
        return normalize(x)
    return parse(x, alphabet)
