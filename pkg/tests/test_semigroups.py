import itertools

import numpy as np
import pytest

from kdrh.errors import NotAssociative
from kdrh.semigroups import (CATALOG, cyclic_group, direct_product, drab_catalog, eval_term,
                             extensive_maps, from_json, green_R, is_in_DRAb, is_R_trivial,
                             power_omega, power_omega_minus_one, r_trivial_catalog, right_zero2,
                             satisfies, subset_semilattice, validate)
from kdrh.terms import parse


def _powers(S, s, n):
    out, cur = [], s
    for _ in range(n):
        out.append(cur)
        cur = int(S.table[cur, s])
    return out


@pytest.mark.parametrize("S", drab_catalog(), ids=lambda S: S.name)
def test_omega_powers_by_enumeration(S):
    # s^omega is the unique idempotent power; s^(omega-1) is the group
    # element t with t s = s^omega and t s^omega = t
    for s in S.elements():
        pw = _powers(S, s, 2 * S.order + 2)
        idem = [p for p in pw if S.table[p, p] == p]
        assert len(set(idem)) == 1
        e = idem[0]
        assert power_omega(S, s) == e
        t = power_omega_minus_one(S, s)
        assert S.table[t, s] == e and S.table[t, e] == t and t in pw + [e]


def test_catalog_membership():
    assert all(is_R_trivial(S) for S in r_trivial_catalog())
    assert all(is_in_DRAb(S) for S in drab_catalog())
    assert not is_R_trivial(right_zero2())
    assert not is_R_trivial(cyclic_group(2))


def test_green_R_classes_of_right_zero():
    assert green_R(right_zero2()) == [(0, 1)]


def test_validate_rejects_non_associative():
    with pytest.raises(NotAssociative):
        validate([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        validate([[0, 2], [1, 0]])


def test_evaluation_of_words_is_iterated_product():
    S = extensive_maps(3)
    for x, y in itertools.product(S.elements(), repeat=2):
        want = int(S.table[int(S.table[x, y]), x])
        assert eval_term(S, parse("<x><y><x>"), {"x": x, "y": y}) == want


def test_satisfies_examples():
    z3 = from_json("Z3")
    assert satisfies(z3, parse("(x)^[w](x)^[w]"), parse("(x)^[w]"))
    assert not satisfies(z3, parse("<x><y>"), parse("<y><x><x>"))
    assert satisfies(z3, parse("<x><y>"), parse("<y><x>"))


def test_direct_product_and_semilattice():
    P = direct_product(cyclic_group(2), cyclic_group(3))
    assert P.order == 6 and satisfies(P, parse("<x><y>"), parse("<y><x>"))
    L = subset_semilattice("ab")
    assert all(L.table[x, x] == x for x in L.elements())


def test_json_roundtrip():
    for name in CATALOG:
        S = from_json(name)
        T = from_json(S.to_json())
        assert np.array_equal(S.table, T.table)
