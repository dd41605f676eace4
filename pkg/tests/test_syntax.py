"""Terms, parsing, unification, completion, bounded universes, types.

Independent oracles: printing/parsing are inverse bijections on a
random term universe; unification is validated by applying the result
(a unifier must actually unify) and by brute-force checking that a None
answer really has no unifier over a small ground universe; carrier
sizes are compared against closed-form counts."""

import itertools

import pytest
from hypothesis import given, strategies as st

from belnaplp.syntax import (
    Atom,
    Compound,
    NIL,
    Substitution,
    SyntaxError4,
    UniverseCapExceeded,
    Var,
    atom_to_str,
    body_to_dnf,
    complete,
    depth,
    has_type,
    is_ground,
    parse_atom,
    parse_program,
    parse_query,
    parse_term,
    prune,
    rename_apart,
    term_to_str,
    term_vars,
    unify,
    unify_atoms,
    universe,
)


# ---------------------------------------------------------------------------
# Random terms

def terms(max_depth: int = 3):
    constants = st.sampled_from([Compound("a"), Compound("b"), Compound("0"), NIL])
    variables = st.sampled_from([Var("X"), Var("Y"), Var("Z")])
    base = st.one_of(constants, variables)

    def extend(children):
        return st.one_of(
            st.builds(lambda x: Compound("s", (x,)), children),
            st.builds(lambda x, y: Compound("f", (x, y)), children, children),
        )

    return st.recursive(base, extend, max_leaves=8)


@given(terms())
def test_print_parse_round_trip(t):
    assert parse_term(term_to_str(t)) == t


@given(terms(), terms())
def test_unify_result_actually_unifies(t1, t2):
    subst = unify(t1, t2)
    if subst is not None:
        assert subst.apply(t1) == subst.apply(t2)
        # idempotence: applying twice changes nothing
        assert subst.apply(subst.apply(t1)) == subst.apply(t1)


@given(terms(), terms())
def test_unify_none_means_no_ground_unifier(t1, t2):
    """A failed unification has no common ground instance over a small
    universe — checked by brute force on the variables involved."""
    if unify(t1, t2) is not None:
        return
    pool = [Compound("a"), Compound("0"), Compound("s", (Compound("a"),))]
    vs = sorted(term_vars(t1) | term_vars(t2), key=lambda v: v.name)
    if len(pool) ** len(vs) > 200:
        return
    for combo in itertools.product(pool, repeat=len(vs)):
        sigma = Substitution(dict(zip(vs, combo)))
        assert sigma.apply(t1) != sigma.apply(t2)


def test_occurs_check():
    x = Var("X")
    assert unify(x, Compound("f", (x,))) is None
    assert unify(Compound("f", (x, x)), Compound("f", (Compound("a"), Compound("b")))) is None


def test_unify_atoms_respects_predicate():
    assert unify_atoms(parse_atom("p(X)"), parse_atom("q(a)")) is None
    theta = unify_atoms(parse_atom("p(X, b)"), parse_atom("p(a, Y)"))
    assert theta.apply(Var("X")) == Compound("a")
    assert theta.apply(Var("Y")) == Compound("b")


@given(terms())
def test_rename_apart_is_fresh_and_invertible_in_shape(t):
    renamed = rename_apart(term_vars(t)).apply(t)
    assert term_vars(renamed).isdisjoint(term_vars(t)) or not term_vars(t)
    assert term_to_str(renamed).count("(") == term_to_str(t).count("(")


# ---------------------------------------------------------------------------
# Parsing programs

def test_parse_program_shapes():
    program = parse_program("p(a). p(X) :- q(X), not r(X). q(b).")
    # only defined predicates get definitions; r/1 is treated as the
    # empty (false) completion at evaluation time
    assert set(program.definitions) == {("p", 1), ("q", 1)}
    p_def = program.definitions[("p", 1)]
    assert len(p_def.body.conjuncts) == 2
    # most general head: a distinct variable per argument
    assert all(isinstance(a, Var) for a in p_def.head.args)


def test_completion_local_variables():
    program = parse_program("p(X) :- q(X, Y).")
    defn = program.definitions[("p", 1)]
    conj_variables = {v for c in defn.body.conjuncts for lit in c.literals
                      for v in term_vars(lit.atom.args[0]) | term_vars(lit.atom.args[1])}
    assert defn.local_vars <= conj_variables
    assert Var("Y") not in defn.head.args


def test_lists_and_strings_parse():
    assert parse_term("[a, b]") == Compound(".", (Compound("a"), Compound(".", (Compound("b"), NIL))))
    assert parse_term("[H | T]") == Compound(".", (Var("H"), Var("T")))
    assert parse_atom("X = [a]").pred == "="


def test_anonymous_variables_are_distinct():
    a = parse_atom("p(_, _)")
    assert a.args[0] != a.args[1]


def test_queries_and_dnf():
    q = parse_query("p(X), not q(X).")
    assert len(q.literals) == 2
    assert not q.literals[1].positive
    program = parse_program("p :- (a ; b), c.")
    assert len(program.definitions[("p", 0)].body.conjuncts) == 2


@pytest.mark.parametrize(
    "bad",
    ["p(X", "p(X) :- .", ":- unknown_decl(x).", "X.", "p :- q(]."],
)
def test_parse_errors(bad):
    with pytest.raises(SyntaxError4):
        parse_program(bad)


def test_equality_cannot_be_defined():
    with pytest.raises(SyntaxError4):
        parse_program("=(a, b).")


# ---------------------------------------------------------------------------
# Depth and pruning

def test_depth_and_prune():
    t = parse_term("s(s(s(0)))")
    assert depth(t) == 4
    pruned = prune(t, 2)
    assert depth(pruned) <= 2
    assert not is_ground(pruned)
    assert prune(t, 4) == t


# ---------------------------------------------------------------------------
# Bounded universes

def test_universe_counts_nat():
    program = parse_program("n(0). n(s(X)) :- n(X).")
    for d in (1, 2, 3, 5):
        carrier = universe(program, d)
        # exactly one term per depth: 0, s(0), s(s(0)), ...
        assert len(carrier.terms) == d
        assert len(carrier.atoms) == d
        assert not carrier.exhaustive


def test_universe_counts_binary():
    program = parse_program(":- functors(a, g(2)). p(a).")
    carrier = universe(program, 2)
    # depth 1: a; depth 2: g(a, a)
    assert len(carrier.terms) == 2
    carrier3 = universe(program, 3)
    # depth <= 3 over one constant and one binary symbol: 1 + 1 + 3
    assert len(carrier3.terms) == 5
    assert all(depth(t) <= 3 for t in carrier3.terms)


def test_universe_constants_only_is_exhaustive():
    program = parse_program("p(a). p(b).")
    carrier = universe(program, 2)
    assert carrier.exhaustive
    assert len(carrier.terms) == 2


def test_universe_cap():
    program = parse_program(":- functors(a, b, c, f(3)). p(a).")
    with pytest.raises(UniverseCapExceeded):
        universe(program, 4, cap=100)


def test_universe_membership_and_order_deterministic():
    program = parse_program("n(0). n(s(X)) :- n(X).")
    c1 = universe(program, 3)
    c2 = universe(program, 3)
    assert c1.terms == c2.terms
    assert c1.atoms == c2.atoms
    assert c1.contains_term(parse_term("s(s(0))"))
    assert not c1.contains_term(parse_term("s(s(s(0)))"))
    assert c1.contains_atom(parse_atom("n(s(0))"))


# ---------------------------------------------------------------------------
# Types

TYPES = parse_program(
    ":- type b ---> t ; f. :- type pair(X, Y) ---> c(X, Y). p(t)."
).declarations.types


def test_has_type_simple():
    assert has_type(parse_term("t"), parse_term("b"), TYPES)
    assert not has_type(parse_term("42"), parse_term("b"), TYPES)


def test_has_type_parametric():
    assert has_type(parse_term("c(t, f)"), parse_term("pair(b, b)"), TYPES)
    assert not has_type(parse_term("c(t, 42)"), parse_term("pair(b, b)"), TYPES)


def test_builtin_list_type():
    assert has_type(parse_term("[t, f]"), parse_term("list(b)"), TYPES)
    assert not has_type(parse_term("[t | f]"), parse_term("list(b)"), TYPES)
    assert has_type(NIL, parse_term("list(b)"), TYPES)


def test_user_list_overrides_builtin():
    override = parse_program(":- type list ---> nil. p(nil).").declarations.types
    assert has_type(parse_term("nil"), parse_term("list"), override)
    assert not has_type(NIL, parse_term("list"), override)
