"""Model checking for the two-, three- and four-valued model relations.

A program and an interpretation stand in one of five relations, checked
head grounding by head grounding over a bounded carrier:

* ``eq2`` — classical completion models: head value equals body value,
  values restricted to {t, f};
* ``eq3`` — three-valued completion models over {t, f, u} (u allowed,
  i rejected);
* ``eq4`` — four-valued completion models: head equals body, all four
  values allowed;
* ``info_geq3`` — three-valued over {t, f, i}: the body's value must
  carry no more information than the head's (u rejected);
* ``info_geq4`` — the same refinement reading over all four values.

Bodies are evaluated with the horizon mechanism (out-of-carrier
instantiations contribute their extrapolated value), which is what makes
bounded checks agree with the unbounded semantics; head groundings whose
value actually consumed an out-of-carrier ground atom are reported as
unchecked rather than as violations or confirmations.

``check_geq4_via_phi`` decides the ``info_geq4`` relation by the dual
route — one application of the immediate-consequence operator followed
by a pointwise comparison — and must agree with ``check_model``.
``soundness_table_check`` confronts an interpretation with the
operational semantics: atoms that succeed must read t or i, atoms that
finitely fail must read f or i, and u atoms may do neither.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from belnaplp.bilattice import TV, info_leq
from belnaplp.engine import phi
from belnaplp.interp import eval_body, value_of
from belnaplp.sld import ERROR_PRED
from belnaplp.syntax import (
    Atom,
    Program,
    Universe,
    atom_to_str,
    complete,
    unify_atoms,
)

RELATIONS = ("eq2", "eq3", "eq4", "info_geq3", "info_geq4")

#: Values an interpretation may not use under each relation.
EXCLUDED_VALUES: dict[str, frozenset[TV]] = {
    "eq2": frozenset({TV.U, TV.I}),
    "eq3": frozenset({TV.I}),
    "eq4": frozenset(),
    "info_geq3": frozenset({TV.U}),
    "info_geq4": frozenset(),
}


class ValueDomainError(Exception):
    """The interpretation uses a value the relation excludes."""


@dataclass
class ModelCheckReport:
    """Verdict of one model check, with a reproducible counterexample."""

    relation: str
    holds: bool
    #: first violating head grounding in carrier order, with its values
    witness: Atom | None = None
    head_value: TV | None = None
    body_value: TV | None = None
    #: head groundings whose body value consumed an out-of-carrier
    #: ground atom; excluded from the verdict either way
    unchecked: list[Atom] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "holds": self.holds,
            "witness": None if self.witness is None else atom_to_str(self.witness),
            "head_value": None if self.head_value is None else self.head_value.value,
            "body_value": None if self.body_value is None else self.body_value.value,
            "unchecked": [atom_to_str(a) for a in self.unchecked],
        }


def _relation_holds(relation: str, head: TV, body: TV) -> bool:
    if relation in ("eq2", "eq3", "eq4"):
        return head is body
    return info_leq(body, head)


def check_model(
    program: Program,
    I,
    relation: str,
    carrier: Universe,
) -> ModelCheckReport:
    """Check one model relation over every head grounding of the carrier."""
    return check_relations(program, I, (relation,), carrier)[relation]


def check_relations(
    program: Program,
    I,
    relations: tuple[str, ...],
    carrier: Universe,
) -> dict[str, ModelCheckReport]:
    """Check several model relations in one body-evaluation pass.

    Body values do not depend on the relation, so checking eq4 and
    info_geq4 together costs one pass instead of two."""
    for relation in relations:
        if relation not in RELATIONS:
            raise ValueError(
                f"unknown relation {relation!r}; expected one of {RELATIONS}"
            )
        excluded = EXCLUDED_VALUES[relation]
        if excluded:
            for a in carrier.atoms:
                v = value_of(I, a)
                if v in excluded:
                    raise ValueDomainError(
                        f"relation {relation} excludes value {v} "
                        f"but {atom_to_str(a)} has it"
                    )
    defs = complete(program.clauses)
    unchecked: list[Atom] = []
    first_violation: dict[str, tuple[Atom, TV, TV]] = {}
    memo: dict = {}
    for a in carrier.atoms:
        if a.pred == ERROR_PRED and len(a.args) == 1:
            # abnormal-termination primitive: it has no definition, so
            # the empty completion would wrongly pit its u value against f
            continue
        defn = defs.get((a.pred, len(a.args)))
        if defn is None:
            body_value = TV.F  # empty completion
        else:
            theta = unify_atoms(defn.head, a)
            touched: list[Atom] = []
            body_value = eval_body(
                I, theta.apply_disj(defn.body), carrier, horizon=True,
                boundary=touched, memo=memo,
            )
            if touched:
                unchecked.append(a)
                continue
        head_value = value_of(I, a)
        for relation in relations:
            if relation not in first_violation and not _relation_holds(
                relation, head_value, body_value
            ):
                first_violation[relation] = (a, head_value, body_value)
    out: dict[str, ModelCheckReport] = {}
    for relation in relations:
        hit = first_violation.get(relation)
        if hit is None:
            out[relation] = ModelCheckReport(relation, True, unchecked=list(unchecked))
        else:
            w, hv, bv = hit
            out[relation] = ModelCheckReport(relation, False, w, hv, bv, list(unchecked))
    return out


def check_geq4_via_phi(program: Program, I, carrier: Universe) -> bool:
    """Decide the ⊒⁴ relation via the operator: one application of the
    immediate-consequence function, then a pointwise information-order
    comparison (boundary-contaminated atoms skipped, as in check_model)."""
    boundary: list[Atom] = []
    J = phi(program, I, carrier, horizon=True, boundary=boundary)
    contaminated = _contaminated_atoms(program, I, carrier) if boundary else frozenset()
    for a in carrier.atoms:
        if a in contaminated:
            continue
        if a.pred == ERROR_PRED and len(a.args) == 1:
            continue
        if not info_leq(J.value_of(a), value_of(I, a)):
            return False
    return True


def _contaminated_atoms(program: Program, I, carrier: Universe) -> frozenset[Atom]:
    """Head groundings whose body value consumed an out-of-carrier atom."""
    defs = complete(program.clauses)
    out: set[Atom] = set()
    memo: dict = {}
    for a in carrier.atoms:
        defn = defs.get((a.pred, len(a.args)))
        if defn is None:
            continue
        touched: list[Atom] = []
        theta = unify_atoms(defn.head, a)
        eval_body(I, theta.apply_disj(defn.body), carrier, horizon=True,
                  boundary=touched, memo=memo)
        if touched:
            out.add(a)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Operational soundness table


@dataclass
class SoundnessRow:
    atom: Atom
    value: TV
    #: "succeeds" | "finitely_fails" | "unresolved" | "aborted"
    outcome: str
    violation: bool

    def to_dict(self) -> dict:
        return {
            "atom": atom_to_str(self.atom),
            "value": self.value.value,
            "outcome": self.outcome,
            "violation": self.violation,
        }


@dataclass
class SoundnessReport:
    model_check: ModelCheckReport
    rows: list[SoundnessRow]

    @property
    def violations(self) -> list[SoundnessRow]:
        return [r for r in self.rows if r.violation]

    @property
    def holds(self) -> bool:
        return self.model_check.holds and not self.violations


def soundness_table_check(
    program: Program,
    I,
    carrier: Universe,
    sld_budget: int,
) -> SoundnessReport:
    """Confront an interpretation with the operational semantics.

    For a refinement model no t atom may finitely fail, no f atom may
    succeed, and no u atom may do either; i atoms are unconstrained.
    Atoms exceeding the budget are reported unresolved, never as
    violations.  The ⊒⁴-model check runs first; its failure makes the
    whole report fail but the table is still produced.
    """
    from belnaplp import sld
    from belnaplp.syntax import Conj, Literal

    model_check = check_model(program, I, "info_geq4", carrier)
    rows: list[SoundnessRow] = []
    for a in carrier.atoms:
        out = sld.solve(program, Conj((Literal(a),)), sld_budget)
        if isinstance(out, sld.Succeeds):
            outcome = "succeeds"
            violation = value_of(I, a) not in (TV.T, TV.I)
        elif isinstance(out, sld.FinitelyFails):
            outcome = "finitely_fails"
            violation = value_of(I, a) not in (TV.F, TV.I)
        elif isinstance(out, sld.BudgetExceeded):
            outcome = "unresolved"
            violation = False
        else:
            outcome = "aborted"
            violation = False
        rows.append(SoundnessRow(a, value_of(I, a), outcome, violation))
    return SoundnessReport(model_check, rows)
