"""Operational semantics: resolution, proof and failure trees, budgets.

The oracle pairing here is operational-vs-denotational: on whole
carriers (exhaustively) and on random programs (property), an atom that
succeeds must be t in the bounded fixpoint and an atom that finitely
fails must be f — the two soundness directions — while budget
exhaustion is the only permitted outcome for u atoms.  Tree shapes are
frozen for hand derivations."""

import pytest
from hypothesis import given, settings, strategies as st

from belnaplp.bilattice import TV
from belnaplp.engine import lfp
from belnaplp.sld import (
    AbortedByError,
    BudgetExceeded,
    FailureTree,
    FinitelyFails,
    FlounderError,
    ProofTree,
    Succeeds,
    build_failure_tree,
    build_proof_tree,
    solve,
)
from belnaplp.syntax import (
    Compound,
    Conj,
    Literal,
    Var,
    parse_atom,
    parse_program,
    parse_query,
    universe,
)

from conftest import FOUR_WAYS_TEXT, IMPLIES_TEXT
from test_engine import programs as random_programs

IMPLIES = parse_program(IMPLIES_TEXT)
FOUR_WAYS = parse_program(FOUR_WAYS_TEXT)


def ask(program, text, budget=10_000):
    return solve(program, parse_query(text), budget)


# ---------------------------------------------------------------------------
# Success and proof trees

def test_success_with_answer_and_proof_shape():
    out = ask(IMPLIES, "implies(X, f).")
    assert isinstance(out, Succeeds)
    # the answer binds exactly the query variable, not clause-local ones
    assert out.answer.bindings == {Var("X"): Compound("f")}
    tree = out.tree
    assert tree.atom == parse_atom("implies(f, f)")
    assert tree.clause_index == 6
    assert [c.atom for c in tree.children] == [
        parse_atom("neg(f, t)"),
        parse_atom("or(t, f, t)"),
    ]
    assert all(isinstance(c, ProofTree) and c.clause_index is not None
               for c in tree.children)


def test_fact_proof_is_a_leaf():
    out = ask(FOUR_WAYS, "p(a).")
    assert isinstance(out, Succeeds)
    assert out.tree == ProofTree(parse_atom("p(a)"), 0, ())


def test_succeeding_negation_embeds_a_failure_tree():
    out = ask(FOUR_WAYS, "not p(d).")
    assert isinstance(out, Succeeds)
    node = out.trees[0]
    assert isinstance(node, FailureTree) and node.negative
    assert node.atom == parse_atom("p(d)")
    # p(d) fails because p(a) succeeds under the inner negation
    inner = node.children[0]
    assert isinstance(inner, ProofTree) and inner.negative
    assert inner.atom == parse_atom("p(a)")


def test_multi_literal_query_gets_pseudo_root():
    out = ask(IMPLIES, "neg(X, U), or(U, f, t).")
    assert isinstance(out, Succeeds)
    assert len(out.trees) == 2
    root = out.tree
    assert root.atom.pred == "$query"
    assert len(root.children) == 2


# ---------------------------------------------------------------------------
# Finite failure and failure trees

def test_failure_tree_blames_the_dying_subgoal():
    out = ask(IMPLIES, "implies(t, f).")
    assert isinstance(out, FinitelyFails)
    tree = out.tree
    assert tree.atom == parse_atom("implies(t, f)")
    [attempt] = tree.attempts
    assert attempt.clause_index == 6 and attempt.unified
    [sub] = attempt.failures
    assert isinstance(sub, FailureTree)
    assert sub.atom == parse_atom("or(f, f, t)")
    # every disjunction fact was tried and none unified
    assert len(sub.attempts) == 4
    assert not any(a.unified for a in sub.attempts)


def test_failure_by_successful_negation():
    out = ask(FOUR_WAYS, "p(d).")
    assert isinstance(out, FinitelyFails)
    # every p/1 clause is attempted; only the matching head unifies
    assert [a.unified for a in out.tree.attempts] == [False, False, False, True]
    attempt = out.tree.attempts[3]
    assert attempt.clause_index == 3
    [proof] = attempt.failures
    assert isinstance(proof, ProofTree) and proof.negative
    assert proof.atom == parse_atom("p(a)")


def test_negative_query_fails_under_pseudo_root():
    out = ask(FOUR_WAYS, "not p(a).")
    assert isinstance(out, FinitelyFails)
    assert out.tree.atom.pred == "$query"


# ---------------------------------------------------------------------------
# Resource bounds and aborts

def test_looping_atom_exceeds_budget():
    out = ask(FOUR_WAYS, "p(b).", budget=100)
    assert isinstance(out, BudgetExceeded)


def test_deep_recursion_is_a_budget_outcome_not_a_crash():
    """A looping derivation must hit the resource bound even when the
    budget would outrun the interpreter stack."""
    out = ask(FOUR_WAYS, "p(b).", budget=50_000)
    assert isinstance(out, BudgetExceeded)


def test_error_predicate_aborts():
    program = parse_program("e :- error(boom). ok.")
    out = ask(program, "e.")
    assert isinstance(out, AbortedByError)
    assert out.atom == parse_atom("error(boom)")
    assert isinstance(ask(program, "ok."), Succeeds)


def test_nonground_negation_flounders():
    program = parse_program("p :- not q(X). q(a).")
    with pytest.raises(FlounderError):
        ask(program, "p.")


# ---------------------------------------------------------------------------
# Tree builders

def test_build_proof_tree_and_failure_tree_guards():
    tree = build_proof_tree(FOUR_WAYS, parse_atom("p(a)"), 1_000)
    assert tree.atom == parse_atom("p(a)")
    fail = build_failure_tree(FOUR_WAYS, parse_atom("p(d)"), 1_000)
    assert fail.atom == parse_atom("p(d)")
    with pytest.raises(ValueError):
        build_proof_tree(FOUR_WAYS, parse_atom("p(d)"), 1_000)
    with pytest.raises(ValueError):
        build_failure_tree(FOUR_WAYS, parse_atom("p(a)"), 1_000)


# ---------------------------------------------------------------------------
# Operational soundness against the fixpoint

def check_operational_soundness(program, carrier, budget=3_000,
                                exhaustion_means_u=False):
    """Succeeding atoms must be t and finitely failing ones f in the
    fixpoint.  Budget exhaustion proves nothing in general (depth-first
    search can loop on a derivable atom), but on fixtures known to loop
    only where the fixpoint is undefined the caller may demand u."""
    I = lfp(program, 1, carrier=carrier).result
    for a in carrier.atoms:
        try:
            out = solve(program, Conj((Literal(a),)), budget)
        except FlounderError:
            continue
        v = I.value_of(a)
        if isinstance(out, Succeeds):
            assert v is TV.T, (a, v)
        elif isinstance(out, FinitelyFails):
            assert v is TV.F, (a, v)
        elif exhaustion_means_u:
            assert v is TV.U, (a, v)


def test_soundness_on_hand_programs():
    for program in (FOUR_WAYS, IMPLIES):
        check_operational_soundness(program, universe(program, 1),
                                    exhaustion_means_u=True)


@settings(max_examples=150, deadline=None)
@given(random_programs)
def test_soundness_on_random_programs(program):
    check_operational_soundness(program, universe(program, 1), budget=800)
