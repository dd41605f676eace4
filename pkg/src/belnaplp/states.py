"""Computation states and the information-ordering of computation steps.

A computation state is an existentially closed disjunction of literal
conjunctions — the frontier of a resolution search, keeping the failure
continuation (alternatives on backtracking) alongside the success
continuation.  A step selects one positive literal in one disjunct and
replaces it by the body of its predicate's completed definition,
distributed over the conjunction; the definition's local variables are
freshly renamed and join the state's existential variables.

Under any information-order model of the program, the value of a state
(per grounding of its free variables) can only move *down* the
information ordering as computation proceeds — a successor state never
gains information its predecessor lacked.  ``check_step_monotonicity``
verifies this per-grounding inequality exhaustively over a carrier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from belnaplp.bilattice import TV, info_leq
from belnaplp.interp import eval_body
from belnaplp.syntax import (
    EQ,
    Atom,
    Conj,
    Disj,
    Literal,
    Program,
    Substitution,
    Universe,
    Var,
    atom_to_str,
    conj_vars,
    is_ground,
    rename_apart,
    term_to_str,
    unify_atoms,
)

import itertools


class StateError(Exception):
    """A malformed state or an illegal step selection."""


@dataclass(frozen=True)
class ComputationState:
    """``ex free_vars . (D_1 ; ... ; D_m)`` with local vars existential.

    Free variables are those of the original top-level goal; every other
    variable occurring in the disjuncts must be registered as local."""

    free_vars: tuple[Var, ...]
    disjuncts: tuple[Conj, ...]
    local_vars: frozenset[Var] = frozenset()

    def __post_init__(self) -> None:
        free = set(self.free_vars)
        if len(free) != len(self.free_vars):
            raise StateError("duplicate free variable")
        if free & self.local_vars:
            overlap = ", ".join(sorted(v.name for v in free & self.local_vars))
            raise StateError(f"variables both free and local: {overlap}")
        occurring: set[Var] = set()
        for d in self.disjuncts:
            occurring |= conj_vars(d)
        stray = occurring - free - self.local_vars
        if stray:
            names = ", ".join(sorted(v.name for v in stray))
            raise StateError(f"unregistered variables in state: {names}")

    @property
    def variables(self) -> set[Var]:
        return set(self.free_vars) | self.local_vars


def initial_state(goal: Conj) -> ComputationState:
    """The state of a fresh top-level goal: one disjunct, no locals."""
    return ComputationState(
        tuple(sorted(conj_vars(goal), key=lambda v: v.name)), (goal,)
    )


def state_to_str(state: ComputationState) -> str:
    disjuncts = " ; ".join(f"({d!r})" for d in state.disjuncts) or "fail"
    if state.local_vars:
        names = ", ".join(sorted(v.name for v in state.local_vars))
        return f"ex [{names}] ({disjuncts})"
    return disjuncts


def successor(
    state: ComputationState, i: int, j: int, program: Program
) -> ComputationState:
    """Replace literal j of disjunct i by its definition body.

    The body's disjuncts are distributed over the host conjunction, so
    one disjunct becomes as many as the definition has; body locals are
    renamed apart from every variable of the state.  Selecting an
    equality literal is an identity step (equality has no definition to
    unfold)."""
    if not 0 <= i < len(state.disjuncts):
        raise StateError(f"no disjunct {i}")
    host = state.disjuncts[i]
    if not 0 <= j < len(host.literals):
        raise StateError(f"no literal {j} in disjunct {i}")
    selected = host.literals[j]
    if not selected.positive:
        raise StateError("cannot select a negated literal")
    if selected.atom.pred == EQ:
        return state
    defn = program.definitions.get(selected.atom.key)
    if defn is None:
        raise StateError(f"no definition for {selected.atom.pred}/{selected.atom.arity}")
    fresh = rename_apart(defn.local_vars | set(a for a in defn.head.args))  # type: ignore[arg-type]
    head = fresh.apply_atom(defn.head)
    body = fresh.apply_disj(defn.body)
    renamed_locals = {fresh.apply(v) for v in defn.local_vars}
    theta = unify_atoms(head, selected.atom)
    if theta is None:  # most general head always unifies
        raise StateError("definition head did not unify with the selected atom")
    body = theta.apply_disj(body)
    prefix = host.literals[:j]
    suffix = host.literals[j + 1:]
    distributed = tuple(
        Conj(prefix + b.literals + suffix) for b in body.conjuncts
    )
    return ComputationState(
        state.free_vars,
        state.disjuncts[:i] + distributed + state.disjuncts[i + 1:],
        state.local_vars | {v for v in renamed_locals if isinstance(v, Var)},
    )


def simplify_failures(state: ComputationState) -> ComputationState:
    """Drop disjuncts containing a ground equality between distinct terms.

    Failure propagation from unsatisfiable equations — optional; steps
    themselves never apply it, matching the bare successor definition."""
    kept = tuple(
        d
        for d in state.disjuncts
        if not any(
            lit.positive
            and lit.atom.pred == EQ
            and all(is_ground(t) for t in lit.atom.args)
            and lit.atom.args[0] != lit.atom.args[1]
            for lit in d.literals
        )
    )
    return ComputationState(state.free_vars, kept, state.local_vars)


def eval_state(
    M, state: ComputationState, theta: Substitution, carrier: Universe,
    horizon: bool = False,
) -> TV:
    """Value of the state under a grounding of exactly its free variables.

    Local variables stay existentially quantified: ``eval_body`` folds
    them over the carrier with the truth-order join."""
    for v in state.free_vars:
        t = theta.bindings.get(v)
        if t is None or not is_ground(theta.apply(v)):
            raise StateError(f"grounding must bind free variable {v.name}")
    extra = set(theta.bindings) - set(state.free_vars)
    if extra:
        names = ", ".join(sorted(v.name for v in extra))
        raise StateError(f"grounding binds non-free variables: {names}")
    return eval_body(
        M, theta.apply_disj(Disj(state.disjuncts)), carrier, horizon=horizon
    )


@dataclass
class StepReport:
    """Per-grounding verdict of the step-monotonicity inequality."""

    holds: bool
    witness: Substitution | None = None
    before: TV | None = None
    after: TV | None = None
    groundings: int = 0

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None
            if self.witness is None
            else {
                v.name: term_to_str(t) for v, t in self.witness.bindings.items()
            },
            "before": None if self.before is None else self.before.value,
            "after": None if self.after is None else self.after.value,
            "groundings": self.groundings,
        }


def check_step_monotonicity(
    M,
    state: ComputationState,
    successor_state: ComputationState,
    carrier: Universe,
    horizon: bool = False,
) -> StepReport:
    """Check that no grounding gains information across the step.

    For every grounding of the free variables over the carrier, the
    successor's value must sit at or below the predecessor's in the
    information ordering.  Guaranteed when the interpretation is an
    information-order model of the program; a violation pinpoints the
    grounding where a non-model loses the guarantee."""
    if state.free_vars != successor_state.free_vars:
        raise StateError("states do not share their free variables")
    free = list(state.free_vars)
    count = 0
    for combo in itertools.product(carrier.terms, repeat=len(free)):
        theta = Substitution(dict(zip(free, combo)))
        count += 1
        before = eval_state(M, state, theta, carrier, horizon=horizon)
        after = eval_state(M, successor_state, theta, carrier, horizon=horizon)
        if not info_leq(after, before):
            return StepReport(False, theta, before, after, count)
    return StepReport(True, groundings=count)
