import json
import random

import pytest

from helpers import equation_system, random_scheme, scheme_semigroup
from kdrh.boundary import (BoundaryModel, FactorizationScheme, bh_groups, build_boundary_system,
                           common_refinement, compose_theta, cv, extract_solution, model_from_json,
                           parse_var, restrict, scheme_of, sv, system_from_json, verify_model,
                           verify_refinement, verify_scheme)
from kdrh.equality import AB, TRIVIAL, equal_mod_DRH
from kdrh.equations import check_solution, reduce_to_suv
from kdrh.errors import CandidateInvalid, MalformedSystem
from kdrh.ordinals import Ordinal
from kdrh.sampling import random_term
from kdrh.terms import EMPTY, concat, parse


@pytest.fixture(scope="module")
def example():
    sysm = equation_system([("xyx", "xxz")], {"x": "a", "y": "(ab)^[w]", "z": "(ba)^[w]"})
    _, suv = reduce_to_suv(sysm, AB)
    S, mdl = build_boundary_system(suv)
    return suv, S, mdl


def test_variable_names():
    assert parse_var(cv("i0", "i1")) == ("factor", "i0", "i1")
    assert parse_var(sv("i0", "i1", (2, 3), 1)) == ("suffix", "i0", "i1", (2, 3), 1)
    assert parse_var("l") is None


def test_example_shape(example):
    suv, S, mdl = example
    assert S.J == [f"i{k}" for k in range(12)]
    assert all(S.variables[S.variables[x]] == x and S.variables[x] != x for x in S.variables)
    assert ("i0", "l", "i5", "r") in S.B and ("i5", "r", "i0", "l") in S.B
    # one B_H group per class of linked factors plus the whole-equation one
    assert len(bh_groups(S.BH)) == 6
    assert verify_model(S, mdl, AB).ok


def test_extracted_solution_solves_the_reduced_equation(example):
    suv, S, mdl = example
    eps = extract_solution(S, mdl, AB)
    assert check_solution(suv.as_system(), eps, AB).ok


def test_json_roundtrip(example):
    _, S, mdl = example
    S2 = system_from_json(json.loads(json.dumps(S.to_json())))
    m2 = model_from_json(json.loads(json.dumps(mdl.to_json())))
    assert S2.to_json() == S.to_json()
    assert m2.to_json() == mdl.to_json()
    assert verify_model(S2, m2, AB).ok


def _corrupt(mdl, **changes):
    data = dict(w=mdl.w, iota=dict(mdl.iota), theta=dict(mdl.theta))
    data.update(changes)
    return BoundaryModel(**data)


def test_bad_positions_are_structural(example):
    _, S, mdl = example
    iota = dict(mdl.iota)
    iota["i3"], iota["i4"] = iota["i4"], iota["i3"]
    rep = verify_model(S, _corrupt(mdl, iota=iota), AB)
    assert not rep.passed("structure")


def test_wrong_factor_breaks_M1(example):
    _, S, mdl = example
    theta = dict(mdl.theta)
    key = next(k for k in theta if k[0] == "i0")
    theta[key] = (parse("b"), EMPTY)
    rep = verify_model(S, _corrupt(mdl, theta=theta), AB)
    assert not rep.passed("M.1")


def test_broken_relation_breaks_M4(example):
    _, S, mdl = example
    # a relation between the boxes of x and t_yx, which start with different letters
    bad = S.to_json()
    bad["B"].append(["i0", "(2,4)", "i1", "(4,2)"])
    bad["B"].append(["i1", "(4,2)", "i0", "(2,4)"])
    S2 = system_from_json(bad)
    assert not verify_model(S2, mdl, AB).passed("M.4")


def test_BH_fails_modulo_Ab_when_abelian_data_differ(example):
    _, S, mdl = example
    bad = S.to_json()
    bad["BH"].append(["<(i1|i2)>", "<(i3|i4)>"])  # (ab)^w a against (ab)^w
    S2 = system_from_json(bad)
    rep = verify_model(S2, mdl, AB)
    assert not rep.passed("M.5")
    assert verify_model(S2, mdl, TRIVIAL).passed("M.5")


def test_malformed_json():
    with pytest.raises(MalformedSystem):
        system_from_json({"J": ["i0"]})


def test_refinement_of_a_model_scheme(example):
    _, S, mdl = example
    C1 = scheme_of(S, mdl)
    aw = mdl.iota["i11"]
    cuts = sorted({Ordinal.finite(1), Ordinal.finite(3), aw})
    C2 = FactorizationScheme(["c0", "c1", "c2"], dict(zip(["c0", "c1", "c2"], cuts)), {}, {})
    C3, lam1, lam2 = common_refinement(C1, C2, mdl.w, S.semigroup, S.phi)
    assert verify_scheme(C3, mdl.w, S.semigroup, S.phi, AB).ok
    assert verify_refinement(C1, C3, lam1, S.semigroup, AB).ok
    assert set(C3.iota.values()) == set(C1.iota.values()) | set(cuts)
    back = restrict(C3, C1.J, C1.iota, lam1, S.semigroup)
    assert back.M == C1.M
    assert verify_scheme(back, mdl.w, S.semigroup, S.phi, AB).ok


def test_compose_theta_reassembles_a_factor(example):
    _, S, mdl = example
    C1 = scheme_of(S, mdl)
    cut = FactorizationScheme(["c"], {"c": Ordinal.finite(1) + mdl.iota["i5"]}, {}, {})
    C3, lam1, _ = common_refinement(C1, cut, mdl.w, S.semigroup, S.phi)
    pos3 = {v: i for i, v in C3.iota.items()}
    for (i, j, s, mu), image in lam1.items():
        Phi, Psi = compose_theta(C3, pos3[mdl.iota[i]], pos3[mdl.iota[j]], s, image, S.semigroup)
        assert equal_mod_DRH(concat(Phi, Psi), mdl.piece(i, j), AB)


def test_compose_theta_rejects_bad_candidates(example):
    _, S, mdl = example
    C1 = scheme_of(S, mdl)
    key = next(iter(S.tuples()))
    i, j, s, mu = key
    with pytest.raises(CandidateInvalid):
        compose_theta(C1, i, j, s, ([], 0), S.semigroup)
    with pytest.raises(CandidateInvalid):
        compose_theta(C1, i, j, s, ([s], 5), S.semigroup)


def test_random_refinements():
    rng = random.Random(17)
    sg = scheme_semigroup()
    for _ in range(40):
        w = random_term(rng, "abc", 10, 2)
        phi = {a: rng.randrange(sg.order) for a in "abc"}
        C1, C2 = random_scheme(rng, w, sg, phi, "p"), random_scheme(rng, w, sg, phi, "q")
        C3, lam1, lam2 = common_refinement(C1, C2, w, sg, phi)
        assert verify_refinement(C1, C3, lam1, sg).ok
        assert verify_refinement(C2, C3, lam2, sg).ok
        assert restrict(C3, C2.J, C2.iota, lam2, sg).M == C2.M
