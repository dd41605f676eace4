"""Exhaustive truth-table conformance and lattice laws for the four
truth values.  The connective tables are frozen verbatim; the algebraic
laws (orderings, interlacing, De Morgan, distributivity) are checked
over every combination, so any regression in a single cell is caught."""

import itertools

import pytest
from hypothesis import given, strategies as st

from belnaplp.bilattice import (
    TV,
    and4,
    arrow4,
    info_leq,
    join_info,
    meet_info,
    neg4,
    or4,
    parse_tv,
    truth_leq,
)

U, F, T, I = TV.U, TV.F, TV.T, TV.I
ALL = (U, T, F, I)

tvs = st.sampled_from(list(TV))


# ---------------------------------------------------------------------------
# Frozen connective tables (rows = left operand, columns u, t, f, i)

AND_TABLE = {
    U: (U, U, F, F),
    T: (U, T, F, I),
    F: (F, F, F, F),
    I: (F, I, F, I),
}

OR_TABLE = {
    U: (U, T, U, T),
    T: (T, T, T, T),
    F: (U, T, F, I),
    I: (T, T, I, I),
}

NEG_TABLE = {U: U, F: T, T: F, I: I}

#: rows = head value, columns = body value u, t, f, i; True where the
#: head/body pair is allowed in an information-order model
ARROW_TABLE = {
    U: (True, False, False, False),
    T: (True, True, False, False),
    F: (True, False, True, False),
    I: (True, True, True, True),
}


def test_conjunction_table():
    for a in ALL:
        for b, expected in zip(ALL, AND_TABLE[a]):
            assert and4(a, b) is expected, f"{a} and {b}"


def test_disjunction_table():
    for a in ALL:
        for b, expected in zip(ALL, OR_TABLE[a]):
            assert or4(a, b) is expected, f"{a} or {b}"


def test_negation_table():
    for a, expected in NEG_TABLE.items():
        assert neg4(a) is expected


def test_arrow_table():
    for head in ALL:
        for body, expected in zip(ALL, ARROW_TABLE[head]):
            assert arrow4(head, body) is expected, f"{head} :- {body}"


def test_arrow_is_information_order():
    for head in TV:
        for body in TV:
            assert arrow4(head, body) == info_leq(body, head)


# ---------------------------------------------------------------------------
# Orderings

@pytest.mark.parametrize("leq", [info_leq, truth_leq])
def test_partial_order_laws(leq):
    for a in TV:
        assert leq(a, a)
    for a, b in itertools.product(TV, repeat=2):
        if leq(a, b) and leq(b, a):
            assert a is b
    for a, b, c in itertools.product(TV, repeat=3):
        if leq(a, b) and leq(b, c):
            assert leq(a, c)


def test_info_order_extremes():
    for a in TV:
        assert info_leq(TV.U, a)
        assert info_leq(a, TV.I)
    assert not info_leq(TV.T, TV.F)
    assert not info_leq(TV.F, TV.T)


def test_truth_order_extremes():
    for a in TV:
        assert truth_leq(TV.F, a)
        assert truth_leq(a, TV.T)
    assert not truth_leq(TV.U, TV.I)
    assert not truth_leq(TV.I, TV.U)


def _is_meet(meet, leq):
    for a, b in itertools.product(TV, repeat=2):
        m = meet(a, b)
        assert leq(m, a) and leq(m, b)
        for lower in TV:
            if leq(lower, a) and leq(lower, b):
                assert leq(lower, m)


def _is_join(join, leq):
    for a, b in itertools.product(TV, repeat=2):
        j = join(a, b)
        assert leq(a, j) and leq(b, j)
        for upper in TV:
            if leq(a, upper) and leq(b, upper):
                assert leq(j, upper)


def test_conjunction_is_truth_meet():
    _is_meet(and4, truth_leq)


def test_disjunction_is_truth_join():
    _is_join(or4, truth_leq)


def test_consensus_is_information_meet():
    _is_meet(meet_info, info_leq)


def test_gullibility_is_information_join():
    _is_join(join_info, info_leq)


# ---------------------------------------------------------------------------
# Bilattice laws

@given(tvs, tvs, tvs)
def test_interlacing(a, b, c):
    """Every operation is monotone in both orderings."""
    for op in (and4, or4, meet_info, join_info):
        for leq in (info_leq, truth_leq):
            if leq(a, b):
                assert leq(op(a, c), op(b, c))
                assert leq(op(c, a), op(c, b))


@given(tvs, tvs)
def test_de_morgan(a, b):
    assert neg4(and4(a, b)) is or4(neg4(a), neg4(b))
    assert neg4(or4(a, b)) is and4(neg4(a), neg4(b))


@given(tvs)
def test_negation_involution_and_info_invariance(a):
    assert neg4(neg4(a)) is a
    # negation reflects the truth ordering but preserves information
    for b in TV:
        assert truth_leq(a, b) == truth_leq(neg4(b), neg4(a))
        assert info_leq(a, b) == info_leq(neg4(a), neg4(b))


@given(tvs, tvs, tvs)
def test_distributivity(a, b, c):
    """All four operations distribute over each other."""
    ops = (and4, or4, meet_info, join_info)
    for f in ops:
        for g in ops:
            assert f(a, g(b, c)) is g(f(a, b), f(a, c))


@given(tvs, tvs)
def test_commutative_idempotent(a, b):
    for op in (and4, or4, meet_info, join_info):
        assert op(a, b) is op(b, a)
        assert op(a, a) is a


# ---------------------------------------------------------------------------
# Parsing

def test_parse_tv_round_trip():
    for v in TV:
        assert parse_tv(v.value) is v


def test_parse_tv_rejects_junk():
    with pytest.raises(ValueError):
        parse_tv("x")
