"""Types, modes, mode groups, mode interpretations, well-modedness.

Type and mode declarations induce a four-valued interpretation per
predicate: ``error/1`` atoms are u; atoms with all arguments well-typed
are t; atoms where no declared mode has all its input arguments
well-typed are i; the rest (inputs fine for some mode, an output
ill-typed) are f.  These interpretations approximate intended
interpretations from above in the information ordering, so comparing
them against an intended interpretation (``approximates``) shows which
intentions the mode system can express.

Well-modedness of the code itself is decided by dataflow mode analysis,
clause by clause: starting from the variables of a head's input
arguments, body literals are consumed in any order that has every input
argument sufficiently instantiated (a known variable or a non-variable
term), binding the literal's remaining variables; the clause is
well-moded for a mode when all literals can be consumed and the head's
variables end up known.  An ``error/1`` call ends the clause vacuously.
A ground-level disjunct condition complements the analysis: no head
grounding with a t head may have an i-valued body disjunct (a proof
must not be forced through an inadmissible call).

Predicates may declare several mode groups separated by ``also``.  For
the external view (a call from another predicate) the groups' meet is
used; internally every group must be covered: within each strongly
connected component of the call graph, some passing candidate
assignment must give the predicate exactly that group's modes.
Candidate assignments draw, per predicate of the component, from each
single group and from the union of all groups.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from belnaplp.bilattice import TV, info_leq
from belnaplp.interp import (
    ExtensionalInterpretation,
    equality_value,
    eval_body,
    value_of,
)
from belnaplp.sld import ERROR_PRED
from belnaplp.syntax import (
    EQ,
    Atom,
    BodyAnd,
    BodyLit,
    BodyOr,
    BodyTrue,
    Clause,
    Declarations,
    Disj,
    Literal,
    Mode,
    Program,
    Substitution,
    Universe,
    Var,
    atom_to_str,
    complete,
    literal_vars,
    rename_apart,
    term_vars,
    type_instantiations,
    unify_atoms,
)


class ModeError(Exception):
    """Missing or inconsistent type/mode declarations."""


# ---------------------------------------------------------------------------
# Well-typedness


def _decl_types(a: Atom, decls: Declarations):
    decl = decls.preds.get((a.pred, len(a.args)))
    if decl is None:
        raise ModeError(f"no :- pred declaration for {a.pred}/{len(a.args)}")
    renaming = rename_apart(
        {v for texpr in decl.arg_types for v in term_vars(texpr)}
    )
    return tuple(renaming.apply(texpr) for texpr in decl.arg_types)


def well_typed(a: Atom, decls: Declarations) -> tuple[bool, ...]:
    """Per-argument type membership for a ground atom.

    Each argument is checked against its declared type individually
    (some instantiation of the type parameters works); joint
    consistency of polymorphic parameters across arguments is the
    province of args_well_typed.
    """
    arg_types = _decl_types(a, decls)
    return tuple(
        bool(type_instantiations(t, texpr, decls.types, Substitution()))
        for t, texpr in zip(a.args, arg_types)
    )


def args_well_typed(a: Atom, decls: Declarations, positions) -> bool:
    """Do the arguments at the given positions jointly inhabit their
    declared types, with type parameters instantiated consistently
    across the atom?"""
    arg_types = _decl_types(a, decls)
    substs = [Substitution()]
    for j in sorted(positions):
        next_substs: list[Substitution] = []
        for s in substs:
            next_substs.extend(
                type_instantiations(a.args[j], arg_types[j], decls.types, s)
            )
        substs = next_substs
        if not substs:
            return False
    return True


# ---------------------------------------------------------------------------
# Mode interpretations


@dataclass(frozen=True)
class ModeInterpretation:
    """The four-valued interpretation induced by a set of modes.

    A single mode gives the definition's four cases; a set of modes
    realizes the pointwise meet of the single-mode interpretations:
    the t case (all arguments well-typed) is mode-independent, the
    atom is i exactly when no mode in the set has all its inputs
    well-typed, and f otherwise.
    """

    pred: str
    arity: int
    modes: tuple[Mode, ...]
    decls: Declarations
    #: human-readable provenance ("group 1", "meet", ...)
    label: str = ""
    _cache: dict = field(default_factory=dict, compare=False)

    def value_of(self, a: Atom) -> TV:
        if a.pred == EQ and len(a.args) == 2:
            return equality_value(a)
        if a.pred == ERROR_PRED and len(a.args) == 1:
            return TV.U
        if (a.pred, len(a.args)) != (self.pred, self.arity):
            raise ModeError(
                f"atom {atom_to_str(a)} is not a {self.pred}/{self.arity} atom"
            )
        hit = self._cache.get(a)
        if hit is not None:
            return hit
        if args_well_typed(a, self.decls, range(self.arity)):
            v = TV.T
        elif any(
            args_well_typed(
                a, self.decls,
                [j for j, m in enumerate(mode.markers) if m == "in"],
            )
            for mode in self.modes
        ):
            v = TV.F
        else:
            v = TV.I
        self._cache[a] = v
        return v


def mode_interpretation(pred: str, arity: int, mode: Mode,
                        decls: Declarations, label: str = "") -> ModeInterpretation:
    """MI(P, m): the interpretation induced by a single mode."""
    if len(mode.markers) != arity:
        raise ModeError(f"mode arity mismatch for {pred}/{arity}")
    return ModeInterpretation(pred, arity, (mode,), decls, label or repr(mode))


def group_interpretation(pred: str, arity: int, group: tuple[Mode, ...],
                         decls: Declarations, label: str = "") -> ModeInterpretation:
    """The meet over a mode group's members."""
    if not group:
        raise ModeError(f"empty mode group for {pred}/{arity}")
    return ModeInterpretation(pred, arity, tuple(group), decls,
                              label or " and ".join(map(repr, group)))


def external_interpretation(pred: str, arity: int, decls: Declarations) -> ModeInterpretation:
    """The external view of a moded predicate: the meet over all its
    declared groups (``also`` is treated like ``and`` for callers)."""
    md = decls.modes.get((pred, arity))
    if md is None:
        raise ModeError(f"no :- mode declaration for {pred}/{arity}")
    modes = tuple(m for g in md.groups for m in g)
    return ModeInterpretation(pred, arity, modes, decls, "meet")


class ProgramModeInterpretation:
    """One mode interpretation per predicate, queried uniformly."""

    def __init__(self, per_pred: dict[tuple[str, int], ModeInterpretation]):
        self.per_pred = per_pred

    def value_of(self, a: Atom) -> TV:
        if a.pred == EQ and len(a.args) == 2:
            return equality_value(a)
        if a.pred == ERROR_PRED and len(a.args) == 1:
            return TV.U
        mi = self.per_pred.get((a.pred, len(a.args)))
        if mi is None:
            raise ModeError(f"no mode interpretation for {a.pred}/{len(a.args)}")
        return mi.value_of(a)

    def materialize(self, carrier: Universe) -> ExtensionalInterpretation:
        true_set, false_set = set(), set()
        for a in carrier.atoms:
            v = self.value_of(a)
            if v in (TV.T, TV.I):
                true_set.add(a)
            if v in (TV.F, TV.I):
                false_set.add(a)
        return ExtensionalInterpretation(true_set, false_set, carrier)


def covers_inadmissible(M, intended, carrier: Universe,
                        preds=None) -> tuple[bool, Atom | None]:
    """Does M preserve every inadmissibility of the intended
    interpretation (intended(A) = i implies M(A) = i)?

    A mode interpretation that does not is unsafe: static analysis
    would clear calls the programmer considers inadmissible.  The mode
    system cannot declare well-typed atoms inadmissible, so intentions
    like "head of a list, never called on []" fail this check, while
    the variant that turns the empty case into an abnormal termination
    (intended value u rather than i) passes — distinguishing i from u
    is what makes the approximation expressible.  With ``preds`` the
    comparison is restricted to those predicates.
    """
    pred_set = None if preds is None else set(preds)
    for a in carrier.atoms:
        if pred_set is not None and (a.pred, len(a.args)) not in pred_set:
            continue
        if value_of(intended, a) is TV.I and value_of(M, a) is not TV.I:
            return False, a
    return True, None


# ---------------------------------------------------------------------------
# Dataflow mode analysis


def _flatten_conjunction(body) -> list[list[Literal]]:
    """A clause body as a list of alternative literal sequences (one
    per disjunct of its ';' structure)."""
    if isinstance(body, BodyTrue):
        return [[]]
    if isinstance(body, BodyLit):
        return [[body.literal]]
    if isinstance(body, BodyOr):
        return _flatten_conjunction(body.left) + _flatten_conjunction(body.right)
    assert isinstance(body, BodyAnd)
    return [
        left + right
        for left in _flatten_conjunction(body.left)
        for right in _flatten_conjunction(body.right)
    ]


def _sufficiently_instantiated(t, known: set[Var]) -> bool:
    """An input argument may be a known variable or any non-variable
    term (a partially instantiated skeleton is acceptable: the call
    completes its bindings)."""
    if isinstance(t, Var):
        return t in known
    return True


def clause_supports_mode(clause: Clause, mode: Mode,
                         chosen: dict[tuple[str, int], tuple[Mode, ...]]) -> bool:
    """Dataflow check of one clause for one head mode.

    Variables of the head's input arguments start known; body literals
    are consumed in any order for which some available mode of the
    callee has every input argument sufficiently instantiated, after
    which all the literal's variables are known.  Equalities propagate
    from a fully known side; negated literals bind nothing, so all
    their variables must already be known.  error/1 aborts the
    computation and ends the clause vacuously.  The clause is moded
    when every literal is consumed and every head variable is known.
    """
    for lits in _flatten_conjunction(clause.body):
        known: set[Var] = set()
        for j, marker in enumerate(mode.markers):
            if marker == "in":
                known |= term_vars(clause.head.args[j])
        pending = list(lits)
        aborted = False
        progress = True
        while pending and progress and not aborted:
            progress = False
            for lit in list(pending):
                a = lit.atom
                if a.pred == ERROR_PRED and len(a.args) == 1:
                    aborted = True
                    progress = True
                    break
                if a.pred == EQ and len(a.args) == 2:
                    lhs_vars = term_vars(a.args[0])
                    rhs_vars = term_vars(a.args[1])
                    if lhs_vars <= known or rhs_vars <= known:
                        known |= lhs_vars | rhs_vars
                        pending.remove(lit)
                        progress = True
                    continue
                if not lit.positive:
                    # negated literals bind nothing: every argument must
                    # be fully known and input-moded in some available mode
                    if literal_vars(lit) <= known and any(
                        all(marker == "in" for marker in m.markers)
                        for m in chosen.get(a.key, ())
                    ):
                        pending.remove(lit)
                        progress = True
                    continue
                for m in chosen.get(a.key, ()):
                    if all(
                        _sufficiently_instantiated(arg, known)
                        for arg, marker in zip(a.args, m.markers)
                        if marker == "in"
                    ):
                        known |= {v for arg in a.args for v in term_vars(arg)}
                        pending.remove(lit)
                        progress = True
                        break
        if aborted:
            continue
        head_vars = {v for arg in clause.head.args for v in term_vars(arg)}
        if pending or not head_vars <= known:
            return False
    return True


@dataclass
class ModeFailure:
    pred: tuple[str, int]
    mode: Mode
    clause_line: int

    def to_dict(self) -> dict:
        return {"pred": f"{self.pred[0]}/{self.pred[1]}",
                "mode": repr(self.mode), "line": self.clause_line}


@dataclass
class DisjunctViolation:
    head: Atom
    disjunct_index: int

    def to_dict(self) -> dict:
        return {"head": atom_to_str(self.head), "disjunct": self.disjunct_index}


@dataclass
class AssignmentReport:
    """One candidate assignment of mode sets to a component."""

    #: predicate key -> provenance label of the chosen mode set
    choice: dict[tuple[str, int], str]
    mode_failures: list[ModeFailure]
    disjunct_violations: list[DisjunctViolation]

    @property
    def holds(self) -> bool:
        return not self.mode_failures and not self.disjunct_violations


@dataclass
class ComponentReport:
    """Verdict for one call-graph component of moded predicates."""

    preds: list[tuple[str, int]]
    assignments: list[AssignmentReport]
    #: (predicate key, group index) pairs no passing assignment covers
    uncovered: list[tuple[tuple[str, int], int]]

    @property
    def holds(self) -> bool:
        return not self.uncovered


@dataclass
class ModeCheckReport:
    components: list[ComponentReport]

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.components)


def disjunct_condition(program: Program, M, carrier: Universe,
                       preds) -> list[DisjunctViolation]:
    """Head groundings with a t head must have no i-valued disjunct."""
    defs = complete(program.clauses)
    out: list[DisjunctViolation] = []
    pred_set = set(preds)
    for a in carrier.atoms:
        if (a.pred, len(a.args)) not in pred_set:
            continue
        defn = defs.get((a.pred, len(a.args)))
        if defn is None or value_of(M, a) is not TV.T:
            continue
        theta = unify_atoms(defn.head, a)
        for j, conj in enumerate(defn.body.conjuncts):
            v = eval_body(
                M, theta.apply_disj(Disj((conj,))), carrier, horizon=True
            )
            if v is TV.I:
                out.append(DisjunctViolation(a, j))
    return out


def check_assignment(program: Program,
                     chosen: dict[tuple[str, int], tuple[Mode, ...]],
                     carrier: Universe,
                     preds,
                     choice: dict[tuple[str, int], str] | None = None) -> AssignmentReport:
    """Well-modedness of the given predicates under one assignment of
    available mode sets: the dataflow analysis for every (clause, head
    mode) pair, plus the ground disjunct condition."""
    failures: list[ModeFailure] = []
    pred_set = set(preds)
    for clause in program.clauses:
        key = clause.head.key
        if key not in pred_set:
            continue
        for mode in chosen[key]:
            if not clause_supports_mode(clause, mode, chosen):
                failures.append(ModeFailure(key, mode, clause.line))
    decls = program.declarations
    per_pred = {
        key: ModeInterpretation(key[0], key[1], modes, decls)
        for key, modes in chosen.items()
    }
    M = ProgramModeInterpretation(per_pred).materialize(carrier)
    violations = disjunct_condition(program, M, carrier, preds)
    return AssignmentReport(dict(choice or {}), failures, violations)


def _call_components(program: Program,
                     moded: list[tuple[str, int]]) -> list[list[tuple[str, int]]]:
    """Strongly connected components of the call graph restricted to
    moded predicates, callees first."""
    calls: dict[tuple[str, int], set[tuple[str, int]]] = {k: set() for k in moded}
    for key in moded:
        defn = program.definitions.get(key)
        if defn is None:
            continue
        for conj in defn.body.conjuncts:
            for lit in conj.literals:
                if lit.atom.pred != EQ and lit.atom.key in calls:
                    calls[key].add(lit.atom.key)
    index: dict[tuple[str, int], int] = {}
    low: dict[tuple[str, int], int] = {}
    on_stack: set[tuple[str, int]] = set()
    stack: list[tuple[str, int]] = []
    out: list[list[tuple[str, int]]] = []
    counter = itertools.count()

    def strong(v) -> None:
        index[v] = low[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        for w in sorted(calls[v]):
            if w not in index:
                strong(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            out.append(sorted(comp))

    for v in sorted(calls):
        if v not in index:
            strong(v)
    return out


def check_well_moded(program: Program, carrier: Universe) -> ModeCheckReport:
    """Check every moded predicate's definition against its declared
    mode groups, component by component.

    For each call-graph component, candidate assignments draw one mode
    set per member predicate from {each declared group, the union of
    all groups}; predicates outside the component contribute all their
    declared modes (the external view).  The component passes when
    every declared group of every member is covered by some assignment
    under which its clauses are well-moded.
    """
    decls = program.declarations
    moded = sorted(decls.modes.keys())
    missing = [k for k in sorted(program.definitions.keys())
               if k not in decls.modes and k != (ERROR_PRED, 1)]
    if missing:
        raise ModeError(
            "predicates without mode declarations: "
            + ", ".join(f"{p}/{n}" for p, n in missing)
        )
    if not moded:
        raise ModeError("program declares no modes")
    external = {
        key: tuple(m for g in decls.modes[key].groups for m in g) for key in moded
    }
    components = _call_components(program, moded)
    reports: list[ComponentReport] = []
    for comp in components:
        candidates: dict[tuple[str, int], list[tuple[str, tuple[Mode, ...]]]] = {}
        for key in comp:
            groups = decls.modes[key].groups
            cands = [(f"group {gi + 1}", tuple(g)) for gi, g in enumerate(groups)]
            if len(groups) > 1:
                cands.append(("meet", external[key]))
            candidates[key] = cands
        assignments: list[AssignmentReport] = []
        for combo in itertools.product(*(candidates[key] for key in comp)):
            chosen = dict(external)
            choice: dict[tuple[str, int], str] = {}
            for key, (label, modes) in zip(comp, combo):
                chosen[key] = modes
                choice[key] = label
            assignments.append(
                check_assignment(program, chosen, carrier, comp, choice)
            )
        uncovered: list[tuple[tuple[str, int], int]] = []
        for key in comp:
            for gi in range(len(decls.modes[key].groups)):
                label = f"group {gi + 1}"
                if not any(a.holds and a.choice[key] == label for a in assignments):
                    uncovered.append((key, gi))
        reports.append(ComponentReport(comp, assignments, uncovered))
    return ModeCheckReport(reports)
