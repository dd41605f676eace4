"""Model relations, their algebra, and the operational soundness check.

The small propositional program with a disjunctive tangle is checked
exhaustively: all 256 interpretations of its four atoms are classified,
which verifies in one sweep that equality models are exactly the
operator's fixed points, that refinement models are exactly the
interpretations the operator deflates, that refinement models are
closed under consensus while equality models are not, and that the
bounded fixpoint is the least refinement model.  The subtraction-family
matrix freezes which of the 28 program/interpretation pairs stand in
which relation."""

import itertools

import pytest

from belnaplp.bilattice import TV, info_leq, meet_info
from belnaplp.engine import lfp, phi
from belnaplp.interp import ExtensionalInterpretation, meet_interp, value_of
from belnaplp.models import (
    RELATIONS,
    ValueDomainError,
    check_geq4_via_phi,
    check_model,
    check_relations,
    soundness_table_check,
)
from belnaplp.syntax import Atom, parse_atom, parse_program, universe

from conftest import FOUR_WAYS_TEXT, IMPLIES_TEXT, SUB_INTERP_ORDER

# ---------------------------------------------------------------------------
# Exhaustive classification of a propositional program
#
# Two looping atoms feed a disjunctive pair in which r and s each accept
# the other's support; the program has several total models that do not
# share a total lower bound.

TANGLE = parse_program("p :- p. q :- q. r :- p ; q ; s. s :- p ; q ; not r.")
TANGLE_CARRIER = universe(TANGLE, 1)
TANGLE_ATOMS = [parse_atom(x) for x in ("p", "q", "r", "s")]


def tangle_interp(values):
    t = {a for a, v in zip(TANGLE_ATOMS, values) if v in (TV.T, TV.I)}
    f = {a for a, v in zip(TANGLE_ATOMS, values) if v in (TV.F, TV.I)}
    return ExtensionalInterpretation(t, f, TANGLE_CARRIER)


def tangle_values(I):
    return tuple(I.value_of(a) for a in TANGLE_ATOMS)


def classify_all():
    eq4, geq4 = set(), set()
    for combo in itertools.product(list(TV), repeat=4):
        I = tangle_interp(combo)
        reports = check_relations(TANGLE, I, ("eq4", "info_geq4"), TANGLE_CARRIER)
        if reports["eq4"].holds:
            eq4.add(combo)
        if reports["info_geq4"].holds:
            geq4.add(combo)
    return eq4, geq4


EQ4_MODELS, GEQ4_MODELS = classify_all()


def test_equality_models_are_exactly_operator_fixed_points():
    for combo in itertools.product(list(TV), repeat=4):
        I = tangle_interp(combo)
        fixed = tangle_values(phi(TANGLE, I, TANGLE_CARRIER)) == combo
        assert fixed == (combo in EQ4_MODELS), combo


def test_refinement_models_are_exactly_deflated_interpretations():
    for combo in itertools.product(list(TV), repeat=4):
        I = tangle_interp(combo)
        after = tangle_values(phi(TANGLE, I, TANGLE_CARRIER))
        deflated = all(info_leq(b, a) for a, b in zip(combo, after))
        assert deflated == (combo in GEQ4_MODELS), combo


def test_operator_route_agrees_with_pointwise_route():
    for combo in itertools.product(list(TV), repeat=4):
        I = tangle_interp(combo)
        assert check_geq4_via_phi(TANGLE, I, TANGLE_CARRIER) == (combo in GEQ4_MODELS)


def test_refinement_models_closed_under_consensus():
    assert EQ4_MODELS <= GEQ4_MODELS
    for m, n in itertools.combinations(GEQ4_MODELS, 2):
        met = tuple(meet_info(a, b) for a, b in zip(m, n))
        assert met in GEQ4_MODELS, (m, n)


def test_bounded_fixpoint_is_least_refinement_model():
    bottom = tangle_values(lfp(TANGLE, 1, carrier=TANGLE_CARRIER).result)
    assert bottom in GEQ4_MODELS
    for m in GEQ4_MODELS:
        assert all(info_leq(a, b) for a, b in zip(bottom, m)), m


def test_equality_models_not_closed_under_consensus():
    """The defining counterexample: two total equality models whose
    consensus satisfies the refinement relation but not equality."""
    M = (TV.T, TV.F, TV.T, TV.T)
    N = (TV.F, TV.T, TV.T, TV.T)
    assert M in EQ4_MODELS and N in EQ4_MODELS
    met = tuple(meet_info(a, b) for a, b in zip(M, N))
    assert met == (TV.U, TV.U, TV.T, TV.T)
    assert met not in EQ4_MODELS
    assert met in GEQ4_MODELS
    report = check_model(TANGLE, tangle_interp(met), "eq4", TANGLE_CARRIER)
    assert not report.holds
    assert report.witness == parse_atom("s")
    assert report.head_value is TV.T and report.body_value is TV.U
    # one operator step erodes s back to undefined
    after = tangle_values(phi(TANGLE, tangle_interp(met), TANGLE_CARRIER))
    assert after == (TV.U, TV.U, TV.T, TV.U)


def test_meet_interp_matches_tuple_meet():
    M = tangle_interp((TV.T, TV.F, TV.T, TV.T))
    N = tangle_interp((TV.F, TV.T, TV.T, TV.T))
    met = meet_interp(M, N, TANGLE_CARRIER)
    assert tangle_values(met) == (TV.U, TV.U, TV.T, TV.T)


# ---------------------------------------------------------------------------
# Value-domain restrictions

def test_two_and_three_valued_relations_reject_foreign_values():
    program = parse_program(FOUR_WAYS_TEXT)
    I = lfp(program, 1).result  # contains u atoms
    carrier = I.carrier
    with pytest.raises(ValueDomainError):
        check_model(program, I, "eq2", carrier)
    with pytest.raises(ValueDomainError):
        check_model(program, I, "info_geq3", carrier)
    assert check_model(program, I, "eq3", carrier).holds
    assert check_model(program, I, "eq4", carrier).holds


def test_total_fixpoint_satisfies_every_relation():
    program = parse_program(IMPLIES_TEXT)
    I = lfp(program, 1).result  # decides every atom
    carrier = I.carrier
    for relation in RELATIONS:
        assert check_model(program, I, relation, carrier).holds, relation


def test_unknown_relation_rejected():
    program = parse_program(IMPLIES_TEXT)
    I = lfp(program, 1).result
    with pytest.raises(ValueError):
        check_model(program, I, "eq5", I.carrier)


# ---------------------------------------------------------------------------
# Boundary reporting

def test_undecidable_deep_reference_is_reported_unchecked():
    program = parse_program("p(0). q(X) :- p(s(s(s(X)))).")
    carrier = universe(program, 2)
    I = lfp(program, 2, carrier=carrier).result
    report = check_model(program, I, "info_geq4", carrier)
    # the body of q(0) reads p three levels beyond the bound, and its
    # truncations disagree (p(0) is t, p(s(0)) is f), so no verdict
    assert parse_atom("q(0)") in report.unchecked


# ---------------------------------------------------------------------------
# Alternative disjunction definitions and one shared intention

OR_BY_TABLE = parse_program(
    ":- functors(42). or(t, t, t). or(t, f, t). or(f, t, t). or(f, f, f)."
)
OR_ON_FIRST = parse_program(":- functors(42). or(t, X, t). or(f, X, X).")
OR_ON_SECOND = parse_program(":- functors(42). or(X, t, t). or(X, f, X).")
OR_PROGRAMS = (OR_BY_TABLE, OR_ON_FIRST, OR_ON_SECOND)

OR_INTENDED_TEXT = """
i or(X, Y, Z) when not bool(X)
i or(X, Y, Z) when not bool(Y)
i or(X, Y, Z) when not bool(Z)
t or(t, t, t)
t or(t, f, t)
t or(f, t, t)
t or(f, f, f)
default f
where
bool(t).
bool(f).
"""


def test_or_least_models_disagree_on_junk():
    carrier = universe(OR_BY_TABLE, 1)
    by_table, on_first, on_second = (
        lfp(p, 1, carrier=carrier).result for p in OR_PROGRAMS
    )
    a_left = parse_atom("or(t, 42, t)")
    a_right = parse_atom("or(42, f, 42)")
    assert on_first.value_of(a_left) is TV.T
    assert on_second.value_of(a_left) is TV.F
    assert on_second.value_of(a_right) is TV.T
    assert on_first.value_of(a_right) is TV.F
    assert by_table.value_of(a_left) is TV.F
    assert by_table.value_of(a_right) is TV.F
    # consequently no least model is a refinement model of a sibling
    assert not check_model(OR_ON_SECOND, on_first, "info_geq4", carrier).holds
    assert not check_model(OR_ON_FIRST, on_second, "info_geq4", carrier).holds


def test_single_intention_covers_every_or_definition(or_intended=None):
    """One three-valued intended interpretation (inconsistent off the
    boolean domain) is a refinement model of all three definitions at
    once, though an equality model of none."""
    from belnaplp.interp import parse_pattern_interpretation

    carrier = universe(OR_BY_TABLE, 1)
    intended = parse_pattern_interpretation(OR_INTENDED_TEXT).materialize(carrier)
    assert all(intended.value_of(a) is not TV.U for a in carrier.atoms)
    for program in OR_PROGRAMS:
        reports = check_relations(
            program, intended, ("eq4", "info_geq4", "info_geq3"), carrier
        )
        assert reports["info_geq4"].holds
        assert reports["info_geq3"].holds
        assert not reports["eq4"].holds


# ---------------------------------------------------------------------------
# Subtraction-family matrix

# Full frozen verdicts for all 28 program/interpretation pairs.  The
# fixpoints of P3 and P4 agree on every subtraction atom (the two
# definitions differ only on heads whose bodies come out f either way)
# and differ only in how many difference-comparison atoms stay
# undefined, which is why each is an equality model of the other's
# program and why the relabelled variants carry over to P4.
EXPECTED_EQ4 = {
    ("P1", "I1"), ("P2", "I2"),
    ("P3", "I3"), ("P3", "I3p"), ("P3", "I3pp"), ("P3", "I4"),
    ("P4", "I3"), ("P4", "I3p"), ("P4", "I3pp"), ("P4", "I4"),
}
EXPECTED_GEQ4 = EXPECTED_EQ4 | {
    ("P1", "I0"), ("P2", "I0"), ("P3", "I0"), ("P4", "I0"),
}


def test_relation_matrix(relation_matrix):
    for pname in ("P1", "P2", "P3", "P4"):
        for iname in SUB_INTERP_ORDER:
            reports = relation_matrix[(pname, iname)]
            assert reports["eq4"].holds == ((pname, iname) in EXPECTED_EQ4), (pname, iname)
            assert reports["info_geq4"].holds == ((pname, iname) in EXPECTED_GEQ4), (pname, iname)
            assert not reports["eq4"].unchecked


def test_information_chain_of_subtraction_interpretations(sub_interps, sub_carrier):
    """The intended interpretation sits above the relabelled fixpoint,
    which sits above the fixpoint; the two relabellings are incomparable."""
    from belnaplp.interp import compare

    assert compare(sub_interps["I3"], sub_interps["I3p"], sub_carrier)[0] == "leq"
    assert compare(sub_interps["I3p"], sub_interps["I0"], sub_carrier)[0] == "leq"
    assert compare(sub_interps["I3pp"], sub_interps["I0"], sub_carrier)[0] == "leq"
    assert compare(sub_interps["I3p"], sub_interps["I3pp"], sub_carrier)[0] == "incomparable"


def test_matrix_spot_checks_by_operator_route(sub_programs, sub_carrier, sub_interps):
    assert check_geq4_via_phi(sub_programs["P4"], sub_interps["I0"], sub_carrier)
    assert not check_geq4_via_phi(sub_programs["P1"], sub_interps["I2"], sub_carrier)


def test_relabelled_pair_meets_back_to_fixpoint(sub_interps, sub_carrier):
    met = meet_interp(sub_interps["I3p"], sub_interps["I3pp"], sub_carrier)
    for a in sub_carrier.atoms:
        assert met.value_of(a) is sub_interps["I3"].value_of(a)


# ---------------------------------------------------------------------------
# Operational soundness

def test_soundness_table_accepts_fixpoint():
    program = parse_program(FOUR_WAYS_TEXT)
    I = lfp(program, 1).result
    report = soundness_table_check(program, I, I.carrier, sld_budget=2_000)
    assert report.holds
    outcomes = {r.atom: r.outcome for r in report.rows}
    assert outcomes[parse_atom("p(a)")] == "succeeds"
    assert outcomes[parse_atom("p(d)")] == "finitely_fails"
    assert outcomes[parse_atom("p(b)")] == "unresolved"


def test_soundness_table_flags_wrong_interpretation():
    program = parse_program(FOUR_WAYS_TEXT)
    I = lfp(program, 1).result
    wrong = ExtensionalInterpretation(
        I.true_set - {parse_atom("p(a)")},
        I.false_set | {parse_atom("p(a)")},
        I.carrier,
    )
    report = soundness_table_check(program, wrong, I.carrier, sld_budget=2_000)
    assert not report.holds
    assert any(r.atom == parse_atom("p(a)") and r.violation for r in report.rows)
