import random

import pytest
from hypothesis import given, settings, strategies as st

from kdrh.errors import EmptyTerm, ParseError
from kdrh.sampling import random_term
from kdrh.terms import (EMPTY, Concat, Lit, OmegaMinusOne, concat, depth, normalize, omega, parse,
                        power, render, rename, repeat)

seeds = st.integers(min_value=0, max_value=10 ** 6)


def test_parse_basic_shapes():
    t = parse("(ab)^[w-1]c")
    assert isinstance(t, Concat)
    assert isinstance(t.parts[0], OmegaMinusOne)
    assert t.letters == frozenset("abc")
    assert parse("1") == EMPTY


def test_omega_is_base_times_power():
    assert omega(parse("ab")) == concat(parse("ab"), power(parse("ab")))
    assert parse("(ab)^[w]") == omega(parse("ab"))


def test_concat_flattens_and_drops_empty():
    t = concat(Lit("a"), EMPTY, concat(Lit("b"), Lit("c")))
    assert isinstance(t, Concat) and len(t.parts) == 3
    assert concat() == EMPTY
    assert concat(Lit("a")) == Lit("a")


def test_power_of_empty_is_rejected():
    with pytest.raises(EmptyTerm):
        power(EMPTY)


def test_repeat_and_depth():
    assert render(repeat(parse("ab"), 3)) == "ababab"
    assert repeat(parse("ab"), 0) == EMPTY
    assert depth(parse("((a)^[w-1]b)^[w-1]")) == 2


def test_rename_substitutes_letters():
    t = rename(parse("<x1>a<x1>"), {"x1": parse("bb")})
    assert render(t) == "bbabb"


@pytest.mark.parametrize("bad", ["(ab", "a)", "a^b", "(a)^[w-2]", "()^[w-1]"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse(bad)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_render_parse_roundtrip(seed):
    t = random_term(random.Random(seed), "abc", 12, 3)
    assert parse(render(t)) == t


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_normalize_is_idempotent(seed):
    t = random_term(random.Random(seed), "ab", 12, 3)
    assert normalize(t) == t
    assert normalize(normalize(t)) == normalize(t)


def test_terms_are_hashable_values():
    assert len({parse("ab"), parse("ab"), parse("ba")}) == 2
