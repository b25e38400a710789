import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disentlab import (
    Fact,
    IndexSet,
    SupervisionSpec,
    closure,
    entails,
    nuisance_closure,
    parse_fact,
    parse_facts,
    plan_supervision,
)
from disentlab.calculus import expand_eta_fact
from disentlab.errors import ArityTooLarge, CalculusError, FactParseError, NuisanceInAxiomIndexSet


def F(kind, indices, n, nuisance=False):
    return Fact(kind, IndexSet.of(indices, n, nuisance))


def axiom_lists(n=4):
    atoms = st.tuples(st.sampled_from(["C", "R", "D"]), st.integers(0, (1 << n) - 1))
    return st.lists(atoms, max_size=6).map(
        lambda items: [Fact(k, IndexSet(n, b)) for k, b in items]
    )


# -- rule applications from the rule box --------------------------------------------


def test_intersection_rule():
    fs = closure([F("C", [1, 2], 3), F("C", [2, 3], 3)], 3)
    assert fs.contains(F("C", [2], 3))


def test_complement_rule():
    fs = closure([F("C", [1], 3)], 3)
    assert fs.contains(F("R", [2, 3], 3))


def test_full_disentanglement_from_singleton_consistency():
    fs = closure([F("C", [i], 3) for i in (1, 2, 3)], 3)
    for i in (1, 2, 3):
        assert fs.contains(F("D", [i], 3))


def test_full_disentanglement_from_singleton_restrictiveness():
    c_side = closure([F("C", [i], 3) for i in (1, 2, 3)], 3)
    r_side = closure([F("R", [i], 3) for i in (1, 2, 3)], 3)
    assert {f.index_set.bits for f in c_side.derived_d()} == {
        f.index_set.bits for f in r_side.derived_d()
    }


def test_consistency_does_not_imply_restrictiveness():
    ok, _ = entails([F("C", [1], 3)], F("R", [1], 3), 3)
    assert not ok


def test_union_rule_entailment_with_trace():
    ok, trace = entails([F("R", [1], 3), F("R", [2], 3)], F("R", [1, 2], 3), 3)
    assert ok
    assert any("r_union" in line for line in trace)


def test_empty_set_disentanglement_is_free():
    ok, trace = entails([], F("D", [], 3), 3)
    assert ok
    assert all("trivial" in line for line in trace)


# -- structural properties --------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(axiom_lists())
def test_closure_is_idempotent(axioms):
    fs = closure(axioms, 4)
    again = closure(fs.facts(), 4)
    assert fs == again


@settings(max_examples=60, deadline=None)
@given(axiom_lists(), axiom_lists())
def test_closure_is_monotone(a, b):
    small = closure(a, 4)
    big = closure(a + b, 4)
    assert small.atoms <= big.atoms


@settings(max_examples=60, deadline=None)
@given(axiom_lists(), st.randoms())
def test_closure_is_order_independent(axioms, rnd):
    shuffled = list(axioms)
    rnd.shuffle(shuffled)
    assert closure(axioms, 4) == closure(shuffled, 4)


@settings(max_examples=40, deadline=None)
@given(axiom_lists())
def test_traces_replay_to_axioms(axioms):
    fs = closure(axioms, 4)
    axiom_strs = {str(a) for ax in axioms for a in
                  [Fact(k, IndexSet(4, b)) for k, b in ax.atoms()]}
    for f in fs.facts():
        lines = fs.trace_lines(f)
        assert lines
        for line in lines:
            head, _, rest = line.partition(" <= ")
            if rest.startswith("axiom"):
                assert head in axiom_strs


def test_arity_cap():
    with pytest.raises(ArityTooLarge):
        closure([], 17)
    with pytest.raises(ArityTooLarge):
        closure([], 16, nuisance=True)


def test_guard_suppresses_rule_applications():
    # r_union and c_intersect are complement duals, so a sound guard must
    # suppress both routes to the same conclusion
    axioms = [F("R", [1], 3), F("R", [2], 3)]
    permissive = closure(axioms, 3)
    assert permissive.contains(F("R", [1, 2], 3))
    blocked = closure(
        axioms, 3, guard=lambda rule, I, J: rule not in ("r_union", "c_intersect")
    )
    assert not blocked.contains(F("R", [1, 2], 3))


# -- nuisance ---------------------------------------------------------------------------------


def test_nuisance_closure_derives_eta_restrictiveness():
    fs = nuisance_closure([F("C", [1], 2), F("C", [2], 2)], 2)
    eta = IndexSet.of([3], 2, nuisance=True)
    assert fs.contains(Fact("R", eta))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_nuisance_full_disentanglement(n):
    fs = nuisance_closure([F("C", [i], n) for i in range(1, n + 1)], n)
    for i in range(1, n + 1):
        assert fs.contains_eta(F("D", [i], n))


def test_nuisance_nothing_from_nothing():
    fs = nuisance_closure([], 2)
    eta_bit = 1 << 2
    assert not any(bits & eta_bit and bits != 0b111 for _, bits in fs.atoms)


def test_nuisance_rejects_eta_in_axioms():
    eta_set = IndexSet.of([3], 2, nuisance=True)
    with pytest.raises(NuisanceInAxiomIndexSet):
        nuisance_closure([Fact("C", eta_set)], 2)


def test_expand_eta_fact_definitions():
    c, = expand_eta_fact(F("C", [1], 2), 2)
    assert str(c) == "C{1}"
    r, = expand_eta_fact(F("R", [1], 2), 2)
    assert str(r) == "R{1,eta}"
    d = expand_eta_fact(F("D", [1], 2), 2)
    assert [str(f) for f in d] == ["C{1}", "R{1,eta}"]


# -- supervision planning ------------------------------------------------------------------------


def shares(n):
    return [SupervisionSpec("share-pairing", (i,)) for i in range(1, n + 1)]


def test_plan_full_disentanglement_with_shares():
    goal = [F("D", [i], 3) for i in (1, 2, 3)]
    plans = plan_supervision(3, goal, shares(3), budget=3)
    assert plans == [tuple(shares(3))]


def test_plan_restrictiveness_by_intersection():
    candidates = [
        SupervisionSpec("change-pairing", (1, 2)),
        SupervisionSpec("change-pairing", (2, 3)),
    ]
    plans = plan_supervision(3, [F("R", [2], 3)], candidates, budget=2)
    assert plans == [tuple(candidates)]


def test_plan_unreachable_goal():
    only_label = [SupervisionSpec("restricted-labeling", (1,))]
    assert plan_supervision(3, [F("R", [1], 3)], only_label, budget=1) == []


# -- textual fact language -----------------------------------------------------------------------


def test_parse_examples():
    assert str(parse_fact("C{1,2}", 3)) == "C{1,2}"
    assert str(parse_fact("D{}", 3)) == "D{}"
    facts = parse_facts("C{1,2} & C{2,3}", 3)
    assert [str(f) for f in facts] == ["C{1,2}", "C{2,3}"]


def test_parse_eta_tokens():
    f = parse_fact("R{1,eta}", 2, nuisance=True)
    assert f.index_set.has_eta()
    facts = parse_facts("Ceta{1} & Reta{2}", 2, nuisance=True)
    assert [str(f) for f in facts] == ["C{1}", "R{2,eta}"]


def test_parse_errors():
    for bad in ("C{9}", "X{1}", "C{1", "C{one}", "Ceta{1}"):
        with pytest.raises((FactParseError, CalculusError)):
            parse_fact(bad, 3)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["C", "R", "D"]), st.integers(0, 15), st.booleans())
def test_printed_form_round_trips(kind, bits, nuisance):
    n = 4 if not nuisance else 3
    f = Fact(kind, IndexSet(n, bits, nuisance))
    assert parse_fact(str(f), n, nuisance) == f
