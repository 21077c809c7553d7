import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_ordinal_upto
from kdrh.equality import equal_mod_R
from kdrh.errors import EmptyTerm
from kdrh.factorization import (alpha, cum, extract, is_reduced_product, lbf, lbf_seq, regular_part,
                                split_at_content)
from kdrh.ordinals import ZERO, Ordinal, format_ordinal
from kdrh.sampling import random_term
from kdrh.terms import EMPTY, concat, parse, render

seeds = st.integers(min_value=0, max_value=10 ** 6)


def test_lbf_of_a_word():
    assert lbf(parse("aba")).as_strings() == ("a", "b", "a")
    assert lbf(parse("aab")).as_strings() == ("aa", "b", "1")


def test_lbf_of_empty():
    with pytest.raises(EmptyTerm):
        lbf(EMPTY)


def test_alpha_values():
    assert format_ordinal(alpha(parse("(ab)^[w]c"))) == "w+1"
    assert alpha(parse("abc")) == Ordinal.finite(3)
    assert format_ordinal(alpha(parse("(a)^[w]"))) == "w"


def test_cumulative_content():
    assert cum(parse("abc")) == frozenset()
    assert cum(parse("c(ab)^[w]")) == frozenset("ab")
    assert cum(parse("(ab)^[w]c")) == frozenset()


def test_regular_part():
    assert regular_part(parse("abc")) is None
    r = regular_part(parse("c(ab)^[w]"))
    assert r is not None and r.letters <= frozenset("abc")


def test_lbf_sequence_of_a_power_is_periodic():
    seq = lbf_seq(parse("(ab)^[w]"))
    assert not seq.finite


def test_extract_of_a_word():
    w = parse("abcab")
    assert render(extract(w, Ordinal.finite(1), Ordinal.finite(4))) == "bca"
    assert extract(w, ZERO, ZERO) == EMPTY


def test_split_at_content():
    head, tail = split_at_content(frozenset("a"), parse("aab"))
    assert render(head) == "aa" and render(tail) == "b"


def test_reduced_product():
    assert is_reduced_product(parse("(a)^[w]"), parse("b"))
    assert not is_reduced_product(parse("(a)^[w]"), parse("a"))
    assert is_reduced_product(parse("ab"), parse("ab"))


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_extract_pieces_recompose(seed):
    rng = random.Random(seed)
    w = random_term(rng, "abc", 10, 2)
    aw = alpha(w)
    b, g = sorted([random_ordinal_upto(rng, aw), random_ordinal_upto(rng, aw)])
    parts = concat(extract(w, ZERO, b), extract(w, b, g), extract(w, g, aw))
    assert equal_mod_R(parts, w)
    assert alpha(extract(w, b, g)) == g - b


@settings(max_examples=150, deadline=None)
@given(seeds, seeds)
def test_alpha_is_additive_on_reduced_products(s1, s2):
    u = random_term(random.Random(s1), "abc", 8, 2)
    v = random_term(random.Random(s2), "abc", 8, 2)
    if is_reduced_product(u, v):
        assert alpha(concat(u, v)) == alpha(u) + alpha(v)
