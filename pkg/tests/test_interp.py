"""Interpretations and body evaluation.

The central oracle here is a brute-force evaluator: a body's value is
computed by enumerating every grounding of its variables over the
carrier and folding literal values directly, with no unification
shortcuts, no deferral, and no memoisation.  ``eval_body`` must agree
with it on randomly generated bodies.  Dump/parse are checked as exact
inverses, and the derived operations (relabelling, comparison, meet)
against their pointwise definitions."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from belnaplp.bilattice import TV, and4, neg4, or4, meet_info, info_leq
from belnaplp.interp import (
    CarrierError,
    ExtensionalInterpretation,
    TransformedInterpretation,
    compare,
    equality_value,
    eval_body,
    meet_interp,
    parse_extensional,
    parse_pattern_interpretation,
    value_of,
)
from belnaplp.syntax import (
    Atom,
    Conj,
    Disj,
    Literal,
    Substitution,
    Var,
    literal_vars,
    parse_atom,
    parse_program,
    parse_term,
    universe,
)

PROGRAM = parse_program("p(0). p(s(X)) :- p(X). q(0, 0).")
CARRIER = universe(PROGRAM, 3)
X, Y = Var("X"), Var("Y")

# arguments are carrier terms or bare variables, so every instance of a
# generated body stays inside the carrier and the brute-force oracle
# never has to extrapolate
args = st.sampled_from(list(CARRIER.terms) + [X, Y])
atoms = st.one_of(
    st.builds(lambda a: Atom("p", (a,)), args),
    st.builds(lambda a, b: Atom("q", (a, b)), args, args),
    st.builds(lambda a, b: Atom("=", (a, b)), args, args),
)
literals = st.builds(Literal, atoms, st.booleans())
bodies = st.builds(
    lambda cs: Disj(tuple(cs)),
    st.lists(
        st.builds(lambda ls: Conj(tuple(ls)), st.lists(literals, min_size=1, max_size=3)),
        min_size=1,
        max_size=3,
    ),
)
interps = st.builds(
    lambda t, f: ExtensionalInterpretation(t, f, CARRIER),
    st.sets(st.sampled_from(list(CARRIER.atoms))),
    st.sets(st.sampled_from(list(CARRIER.atoms))),
)


def brute_force(I, body: Disj) -> TV:
    acc = TV.F
    for conj in body.conjuncts:
        free = sorted({v for l in conj.literals for v in literal_vars(l)},
                      key=lambda v: v.name)
        fold = TV.F
        for combo in itertools.product(CARRIER.terms, repeat=len(free)):
            sigma = Substitution(dict(zip(free, combo)))
            x = TV.T
            for lit in conj.literals:
                v = value_of(I, sigma.apply_atom(lit.atom))
                x = and4(x, v if lit.positive else neg4(v))
            fold = or4(fold, x)
        acc = or4(acc, fold)
    return acc


@settings(max_examples=300)
@given(interps, bodies)
def test_eval_body_matches_brute_force(I, body):
    assert eval_body(I, body, CARRIER) is brute_force(I, body)


@settings(max_examples=100)
@given(interps, bodies)
def test_eval_body_memo_is_transparent(I, body):
    assert eval_body(I, body, CARRIER, memo={}) is eval_body(I, body, CARRIER)


# ---------------------------------------------------------------------------
# Atom lookup

def test_equality_is_decided_syntactically():
    assert equality_value(parse_atom("s(0) = s(0)")) is TV.T
    assert equality_value(parse_atom("s(0) = 0")) is TV.F
    I = ExtensionalInterpretation(set(), set(), CARRIER)
    # equality bypasses the interpretation even when outside the carrier
    assert value_of(I, parse_atom("f(g(h)) = f(g(h))")) is TV.T


def test_extensional_four_values_and_strictness():
    a_t, a_f, a_i, a_u = (parse_atom(s) for s in
                          ["p(0)", "p(s(0))", "p(s(s(0)))", "q(0, 0)"])
    I = ExtensionalInterpretation({a_t, a_i}, {a_f, a_i}, CARRIER)
    assert I.value_of(a_t) is TV.T
    assert I.value_of(a_f) is TV.F
    assert I.value_of(a_i) is TV.I
    assert I.value_of(a_u) is TV.U
    outside = parse_atom("p(s(s(s(0))))")
    with pytest.raises(CarrierError):
        I.value_of(outside)
    lax = ExtensionalInterpretation({a_t}, set(), CARRIER, strict=False)
    assert lax.value_of(outside) is TV.U


def test_eval_body_tracks_out_of_carrier_references():
    I = ExtensionalInterpretation(set(), set(), CARRIER)
    outside = parse_atom("p(s(s(s(0))))")
    boundary = []
    v = eval_body(I, Disj((Conj((Literal(outside),)),)), CARRIER, boundary=boundary)
    assert v is TV.U
    assert boundary == [outside]


# ---------------------------------------------------------------------------
# Dump / parse round trip

@given(interps)
def test_dump_parse_round_trip(I):
    back = parse_extensional(I.dump(), CARRIER)
    for a in CARRIER.atoms:
        assert back.value_of(a) is I.value_of(a)


def test_parse_extensional_skips_blanks_and_comments():
    I = parse_extensional("% header\n\np(0) t\np(s(0)) i\n", CARRIER)
    assert I.value_of(parse_atom("p(0)")) is TV.T
    assert I.value_of(parse_atom("p(s(0))")) is TV.I
    assert I.value_of(parse_atom("p(s(s(0)))")) is TV.U


# ---------------------------------------------------------------------------
# Pattern interpretations

PATTERN_TEXT = """
i p(X) when not nat(X)
t p(X) when even(X)
f p(X)
default u
where
nat(0).
nat(s(N)) :- nat(N).
even(0).
even(s(s(N))) :- even(N).
"""


def test_pattern_rules_first_match_with_guards():
    I = parse_pattern_interpretation(PATTERN_TEXT)
    assert I.value_of(parse_atom("p(0)")) is TV.T
    assert I.value_of(parse_atom("p(s(0))")) is TV.F
    assert I.value_of(parse_atom("p(s(s(0)))")) is TV.T
    assert I.value_of(parse_atom("p(a)")) is TV.I
    # no rule mentions q, so the default applies
    assert I.value_of(parse_atom("q(0, 0)")) is TV.U
    # equality still bypasses the rules
    assert I.value_of(parse_atom("0 = 0")) is TV.T


def test_pattern_type_guards():
    types = parse_program(":- type b ---> tt ; ff. p(tt).").declarations.types
    I = parse_pattern_interpretation("t r(X) when b(X)\ndefault f\n", types)
    assert I.value_of(parse_atom("r(tt)")) is TV.T
    assert I.value_of(parse_atom("r(ff)")) is TV.T
    assert I.value_of(parse_atom("r(0)")) is TV.F


def test_pattern_requires_default():
    with pytest.raises(ValueError):
        parse_pattern_interpretation("t p(X)\n")


def test_materialize_agrees_pointwise():
    I = parse_pattern_interpretation(PATTERN_TEXT)
    ext = I.materialize(CARRIER)
    for a in CARRIER.atoms:
        assert ext.value_of(a) is I.value_of(a)


# ---------------------------------------------------------------------------
# Relabelling

@given(interps)
def test_transformed_relabels_pointwise(I):
    J = TransformedInterpretation(I, {TV.U: TV.F})
    for a in CARRIER.atoms:
        v = I.value_of(a)
        assert J.value_of(a) is (TV.F if v is TV.U else v)
    assert J.value_of(parse_atom("0 = 0")) is TV.T


# ---------------------------------------------------------------------------
# Comparison and meet

def _with(values: dict[str, TV]) -> ExtensionalInterpretation:
    t, f = set(), set()
    for text, v in values.items():
        a = parse_atom(text)
        if v in (TV.T, TV.I):
            t.add(a)
        if v in (TV.F, TV.I):
            f.add(a)
    return ExtensionalInterpretation(t, f, CARRIER)


def test_compare_directions():
    low = _with({"p(0)": TV.T})
    high = _with({"p(0)": TV.T, "p(s(0))": TV.F})
    assert compare(low, low, CARRIER) == ("equal", None)
    rel, w = compare(low, high, CARRIER)
    assert rel == "leq" and w == parse_atom("p(s(0))")
    rel, w = compare(high, low, CARRIER)
    assert rel == "geq" and w == parse_atom("p(s(0))")
    other = _with({"p(0)": TV.F})
    rel, w = compare(high, other, CARRIER)
    assert rel == "incomparable" and w is not None


@given(interps, interps)
def test_meet_is_pointwise_consensus(I1, I2):
    m = meet_interp(I1, I2, CARRIER)
    for a in CARRIER.atoms:
        v = m.value_of(a)
        assert v is meet_info(I1.value_of(a), I2.value_of(a))
        assert info_leq(v, I1.value_of(a)) and info_leq(v, I2.value_of(a))
