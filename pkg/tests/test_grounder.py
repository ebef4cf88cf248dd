from __future__ import annotations

import pytest

from amcs.asp import (
    GroundingBudgetExceeded,
    Limits,
    RecursiveAggregate,
    ground,
    parse,
    parse_facts,
    solve,
)
from amcs.asp.syntax import ChoiceHead

from helpers import atoms, ground_example, load_example


def models(text: str, facts=()):
    return [a.atoms for a in solve(ground(parse(text), facts), None)]


def test_example1_choice_instances():
    gp = ground_example(1)
    choice = [r for r in gp.rules if isinstance(r.head, ChoiceHead)]
    assert len(choice) == 1
    assert {e.atom for e in choice[0].head.elements} == atoms(
        "aux_case_in_pack(ca_ds11)", "aux_case_in_pack(ca_ds12)"
    )


def test_unbounded_term_depth():
    with pytest.raises(GroundingBudgetExceeded):
        ground(parse("p(f(X)) :- p(X). p(0)."), limits=Limits(max_term_depth=64))


def test_atom_budget():
    with pytest.raises(GroundingBudgetExceeded):
        ground(parse("p(X) :- X = 1..100."), limits=Limits(max_ground_atoms=50))


def test_empty_program():
    gp = ground(parse(""))
    assert gp.atoms == () and gp.rules == () and gp.facts == frozenset()
    assert [a.atoms for a in solve(gp, None)] == [frozenset()]


def test_empty_aggregate_fails_body():
    assert models("r(X) :- X = #max{Y : q(Y)}.") == [frozenset()]
    assert models("r(X) :- X = #count{Y : q(Y)}.") == [frozenset()]


def test_aggregates_evaluated():
    m = models("q(3). q(5). q(1). hi(X) :- X = #max{Y : q(Y)}. lo(X) :- X = #min{Y : q(Y)}. n(X) :- X = #count{Y : q(Y)}.")
    assert len(m) == 1
    assert atoms("hi(5)", "lo(1)", "n(3)") <= m[0]


def test_aggregate_over_choice_is_residual():
    m = models("{p(1); p(2)}. best(X) :- X = #max{Y : p(Y)}.")
    assert sorted(sorted(map(str, x)) for x in m) == [
        [],
        ["best(1)", "p(1)"],
        ["best(2)", "p(1)", "p(2)"],
        ["best(2)", "p(2)"],
    ]


def test_count_tuples_are_distinct():
    m = models("q(1,a). q(1,b). n(X) :- X = #count{Y : q(Y,Z)}. m(X) :- X = #count{Y,Z : q(Y,Z)}.")
    assert atoms("n(1)", "m(2)") <= m[0]


def test_division_by_zero_drops_instance():
    m = models("d(0). d(2). r(X) :- d(Y), X = 6 / Y.")
    assert {a for a in m[0] if a.name == "r"} == atoms("r(3)")


def test_floor_division_and_modulo():
    m = models("r(X, Y) :- X = -7 / 2, Y = -7 \\ 3.")
    assert atoms("r(-4,2)") <= m[0]


def test_ranges_and_comparisons():
    m = models("p(I) :- I = 1..4, I != 2.")
    assert m == [atoms("p(1)", "p(3)", "p(4)")]


def test_recursive_aggregate_rejected():
    with pytest.raises(RecursiveAggregate):
        ground(parse("p(1). p(X) :- X = #max{Y : p(Y)}."))


def test_function_terms_and_lists():
    m = models("item(a). item(b). l([X,Y]) :- item(X), item(Y), X < Y.")
    assert m == [atoms("item(a)", "item(b)", "l([a,b])")]


def test_facts_argument_merged():
    m = models("r(X) :- q(X).", parse_facts("q(1). q(2)."))
    assert atoms("r(1)", "r(2)") <= m[0]


def test_stratified_program_settles_to_facts():
    gp = ground(parse("e(1,2). e(2,3). path(X,Y) :- e(X,Y). path(X,Z) :- path(X,Y), e(Y,Z). no(X) :- e(X,Y), not path(Y,3)."))
    assert gp.atoms == ()
    assert atoms("path(1,3)", "no(2)") <= gp.facts


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_grounding_idempotence(n):
    gp = ground_example(n)
    again = ground(parse(str(gp)))
    assert [a.atoms for a in solve(again, None)] == [a.atoms for a in solve(gp, None)]
    assert [a.objective for a in solve(again, None)] == [a.objective for a in solve(gp, None)]


def test_ground_program_text_is_deterministic():
    program, facts = load_example(3)
    assert str(ground(program, facts)) == str(ground(program, facts))


def test_limits_from_env():
    limits = Limits.from_env({"AMCS_MAX_GROUND_ATOMS": "7", "AMCS_MAX_TERM_DEPTH": "3", "AMCS_ORACLE_BUDGET": "5"})
    assert limits == Limits(7, 3, 5)
