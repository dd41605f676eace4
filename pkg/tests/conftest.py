"""Shared fixtures: the subtraction program family, its intended
interpretations, and small helper programs used across the suite."""

from __future__ import annotations

import pathlib

import pytest

from belnaplp.bilattice import TV
from belnaplp.engine import lfp
from belnaplp.interp import TransformedInterpretation, parse_pattern_interpretation
from belnaplp.models import check_relations
from belnaplp.syntax import parse_program, universe

#: fixture order for the model-relation matrix over the subtraction family
SUB_INTERP_ORDER = ("I0", "I1", "I2", "I3", "I3p", "I3pp", "I4")

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

#: four alternative subtractions over successor naturals, sharing a
#: difference-comparison predicate; [] is added as a junk constant
SUB_SHARED = ":- functors([]). eq_diff(A,B,E,F) :- sub(A,B,D), sub(E,F,D)."
SUB_PROGRAMS = {
    "P1": "sub(0,0,0). sub(s(A),0,s(D)) :- sub(A,0,D). sub(s(A),s(B),D) :- sub(A,B,D).",
    "P2": "sub(A,0,A). sub(s(A),s(B),D) :- sub(A,B,D).",
    "P3": "sub(A,A,0). sub(A,B,s(D)) :- not A = B, sub(A,s(B),D).",
    "P4": "sub(A,A,0). sub(A,B,s(D)) :- sub(A,s(B),D).",
}

#: the typical intended interpretation of the subtraction family:
#: non-numeric arguments are inadmissible, otherwise arithmetic decides
SUB_INTENDED_TEXT = """
i eq_diff(A,B,E,F) when not defined(A,B)
i eq_diff(A,B,E,F) when not defined(E,F)
t eq_diff(A,B,E,F) when minus(A,B,D), minus(E,F,D)
f eq_diff(A,B,E,F)
i sub(A,B,C) when not nat(A)
i sub(A,B,C) when not nat(B)
t sub(A,B,C) when minus(A,B,C)
f sub(A,B,C)
default f
where
nat(0).
nat(s(N)) :- nat(N).
minus(A,0,A) :- nat(A).
minus(s(A),s(B),D) :- minus(A,B,D).
defined(A,B) :- minus(A,B,D).
"""

#: boolean connectives with a junk constant, used by the §2/§12 fixtures
IMPLIES_TEXT = """
:- functors(42).
or(t, t, t).  or(t, f, t).  or(f, t, t).  or(f, f, f).
neg(t, f).    neg(f, t).
implies(X, Y) :- neg(X, U), or(U, Y, t).
"""

#: four-atom propositional program exercising success, looping, and
#: negation-driven failure in one fixpoint
FOUR_WAYS_TEXT = """
p(a).
p(b) :- p(b).
p(c) :- not p(c).
p(d) :- not p(a).
"""


@pytest.fixture(scope="session")
def sub_programs():
    return {k: parse_program(v + SUB_SHARED) for k, v in SUB_PROGRAMS.items()}


@pytest.fixture(scope="session")
def sub_carrier(sub_programs):
    return universe(sub_programs["P1"], 4)


@pytest.fixture(scope="session")
def sub_interps(sub_programs, sub_carrier):
    """I0 (pattern-rule intended) and I1-I4 (per-program fixpoints), plus
    the I3 variants mapping u to f and u to t."""
    out = {}
    for name, program in sub_programs.items():
        report = lfp(program, 4, carrier=sub_carrier)
        assert report.stable
        out["I" + name[1]] = report.result
    out["I3p"] = TransformedInterpretation(out["I3"], {TV.U: TV.F})
    out["I3pp"] = TransformedInterpretation(out["I3"], {TV.U: TV.T})
    out["I0"] = parse_pattern_interpretation(SUB_INTENDED_TEXT).materialize(sub_carrier)
    return out


#: mode-checking fixtures with the universe depth each needs
MODE_FIXTURES = {
    "modes_nrev.pl": 3,
    "modes_nrev_swapped.pl": 3,
    "modes_rrev.pl": 3,
    "modes_fold_and3.pl": 2,
    "modes_head.pl": 3,
    "modes_disjunct.pl": 3,
}


@pytest.fixture(scope="session")
def mode_reports():
    """(program, carrier, well-modedness report) per mode fixture."""
    from belnaplp.modes import check_well_moded

    out = {}
    for name, d in MODE_FIXTURES.items():
        program = parse_program((FIXTURES / name).read_text())
        carrier = universe(program, d)
        out[name] = (program, carrier, check_well_moded(program, carrier))
    return out


@pytest.fixture(scope="session")
def relation_matrix(sub_programs, sub_carrier, sub_interps):
    """eq4/info_geq4 reports for every program/interpretation pair of the
    subtraction family (computed once; consumed by the model-relation
    matrix test and the acceptance gate)."""
    out = {}
    for pname, program in sub_programs.items():
        for iname in SUB_INTERP_ORDER:
            out[(pname, iname)] = check_relations(
                program, sub_interps[iname], ("eq4", "info_geq4"), sub_carrier
            )
    return out


@pytest.fixture(scope="session")
def implies_program():
    return parse_program(IMPLIES_TEXT)


@pytest.fixture(scope="session")
def implies_carrier(implies_program):
    return universe(implies_program, 1)
