import json

import pytest

from helpers import equation_system
from kdrh.equality import AB, TRIVIAL
from kdrh.equations import (check_solution, reduce_to_suv, restrict_solution, system_from_json,
                            system_to_json, to_word_system)
from kdrh.errors import MalformedSystem, NonKappaSolution, VerificationFailed
from kdrh.terms import Concat, OmegaMinusOne, parse


def _has_power(t):
    if isinstance(t, OmegaMinusOne):
        return True
    return isinstance(t, Concat) and any(_has_power(p) for p in t.parts)


def test_check_solution_reports_failing_equation():
    sysm = equation_system([("xy", "yx")], {"x": "a", "y": "b"})
    rep = check_solution(sysm, sysm.solution, TRIVIAL)
    assert not rep.ok and rep.failures()
    good = equation_system([("xy", "yx")], {"x": "a", "y": "aa"})
    assert check_solution(good, good.solution).ok


def test_word_system_removes_powers():
    sysm = equation_system([("xa", "ax")], {"x": "(a)^[w]"})
    ws = to_word_system(sysm, sysm.solution)
    for l, r in ws.equations:
        assert not _has_power(l) and not _has_power(r)
    assert check_solution(ws, ws.solution).ok


@pytest.mark.parametrize("eqs,sol,h", [
    ([("xyx", "xxz")], {"x": "a", "y": "(ab)^[w]", "z": "(ba)^[w]"}, AB),
    ([("xab", "abx")], {"x": "(ab)^[w]"}, TRIVIAL),
    ([("xx", "y")], {"x": "ab", "y": "abab"}, TRIVIAL),
])
def test_reduction_stages_verify(eqs, sol, h):
    sysm = equation_system(eqs, sol)
    ws, suv = reduce_to_suv(sysm, h)
    assert check_solution(ws, ws.solution, h).ok
    assert check_solution(suv.as_system(), suv.solution, h).ok
    assert suv.is_reduced()
    # the reduced equation's solution restricts to one of the input
    eps = restrict_solution(sysm, suv.solution)
    assert check_solution(sysm, eps, h).ok


def test_reduce_rejects_wrong_solution():
    sysm = equation_system([("xy", "y")], {"x": "a", "y": "(ab)^[w]"})
    with pytest.raises(VerificationFailed):
        reduce_to_suv(sysm)


def test_json_roundtrip():
    sysm = equation_system([("xyx", "xxz")], {"x": "a", "y": "(ab)^[w]", "z": "(ba)^[w]"})
    data = system_to_json(sysm)
    back = system_from_json(json.loads(json.dumps(data)))
    assert system_to_json(back) == data


def test_json_errors():
    with pytest.raises(NonKappaSolution):
        system_from_json({"alphabet": "ab", "variables": ["x"], "equations": [["x", "a"]],
                          "solution": {"x": 3}})
    with pytest.raises(MalformedSystem):
        system_from_json({"alphabet": "ab", "equations": [["x", "a"]]})
    with pytest.raises(MalformedSystem):
        system_from_json({"alphabet": "ab", "variables": ["x"], "equations": [["(x", "a"]]})


def test_parameters_are_fixed():
    sysm = system_from_json({"alphabet": "ab", "variables": ["x"], "parameters": {"p": "ab"},
                             "equations": [["x<p>", "<p>x"]], "solution": {"x": "ab"}})
    assert check_solution(sysm, {"x": parse("ab")}).ok
