"""Executable specifications and their four-valued meaning.

A specification is a definite program (the *vocabulary program*) plus,
for selected predicates, a precondition and a postcondition written as
first-order formulas over the vocabulary predicates.  The meaning of a
specification is a four-valued interpretation:

* a ground instance whose precondition is false is inadmissible (i) —
  the question should not have been asked;
* otherwise the instance is t or f according to its postcondition,
  evaluated classically over the least Herbrand model of the vocabulary
  program restricted to a bounded carrier;
* vocabulary predicates not carrying a specification are valued
  two-valued (t if derivable, f otherwise) so the meaning can be pitted
  against a whole program, not just the specified predicates.

``check_against_spec`` reports two facts about a program P:

* whether the specification's meaning is an information-order model of
  P — the model property is the *sufficient* static condition; and
* whether that meaning pointwise information-dominates P's bounded
  least fixpoint — the direct, per-atom comparison.

Keeping both routes separate lets tests confirm they agree where both
apply and diverge exactly where the model property is only sufficient.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from belnaplp.bilattice import TV, info_leq
from belnaplp.engine import lfp
from belnaplp.interp import ExtensionalInterpretation, value_of
from belnaplp.models import ModelCheckReport, check_model
from belnaplp.sld import ERROR_PRED
from belnaplp.syntax import (
    EQ,
    Atom,
    BodyTrue,
    Clause,
    Declarations,
    Literal,
    Program,
    Substitution,
    SyntaxError4,
    Term,
    Universe,
    Var,
    _Parser,
    atom_to_str,
    atom_vars,
    body_to_dnf,
    complete,
    term_to_str,
    unify,
    unify_atoms,
)


class SpecError(Exception):
    """A malformed specification or an evaluation outside its terms."""


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class WAtom:
    atom: Atom

    def __repr__(self) -> str:
        return atom_to_str(self.atom)


@dataclass(frozen=True)
class WNot:
    sub: "Wff"

    def __repr__(self) -> str:
        return f"not {self.sub!r}"


@dataclass(frozen=True)
class WAnd:
    left: "Wff"
    right: "Wff"

    def __repr__(self) -> str:
        return f"({self.left!r}, {self.right!r})"


@dataclass(frozen=True)
class WOr:
    left: "Wff"
    right: "Wff"

    def __repr__(self) -> str:
        return f"({self.left!r}; {self.right!r})"


@dataclass(frozen=True)
class WImplies:
    left: "Wff"
    right: "Wff"

    def __repr__(self) -> str:
        return f"({self.left!r} => {self.right!r})"


@dataclass(frozen=True)
class WForall:
    vars: tuple[Var, ...]
    sub: "Wff"

    def __repr__(self) -> str:
        names = ", ".join(v.name for v in self.vars)
        return f"all [{names}] {self.sub!r}"


@dataclass(frozen=True)
class WExists:
    vars: tuple[Var, ...]
    sub: "Wff"

    def __repr__(self) -> str:
        names = ", ".join(v.name for v in self.vars)
        return f"some [{names}] {self.sub!r}"


Wff = WAtom | WNot | WAnd | WOr | WImplies | WForall | WExists


def wff_free_vars(w: Wff, acc: set[Var] | None = None) -> set[Var]:
    if acc is None:
        acc = set()
    if isinstance(w, WAtom):
        acc |= atom_vars(w.atom)
    elif isinstance(w, WNot):
        wff_free_vars(w.sub, acc)
    elif isinstance(w, (WAnd, WOr, WImplies)):
        wff_free_vars(w.left, acc)
        wff_free_vars(w.right, acc)
    else:
        inner: set[Var] = set()
        wff_free_vars(w.sub, inner)
        acc |= inner - set(w.vars)
    return acc


# ---------------------------------------------------------------------------
# Specifications


@dataclass(frozen=True)
class SpecifiedPredicate:
    """One ``predicate`` statement: a head pattern with its conditions.

    The pattern's arguments are distinct variables; a missing condition
    reads as "true".
    """

    atom: Atom
    precondition: Wff | None
    postcondition: Wff | None

    @property
    def key(self) -> tuple[str, int]:
        return self.atom.key

    def __post_init__(self) -> None:
        args = self.atom.args
        if not all(isinstance(a, Var) for a in args) or len(set(args)) != len(args):
            raise SpecError(
                f"specified pattern {atom_to_str(self.atom)} must apply the "
                "predicate to distinct variables"
            )
        allowed = set(args)  # type: ignore[arg-type]
        for label, wff in (("precondition", self.precondition),
                           ("postcondition", self.postcondition)):
            if wff is None:
                continue
            stray = wff_free_vars(wff) - allowed
            if stray:
                names = ", ".join(sorted(v.name for v in stray))
                raise SpecError(
                    f"{label} of {atom_to_str(self.atom)} has free "
                    f"variables not bound by the pattern: {names}"
                )


@dataclass
class Specification:
    """A definite vocabulary program plus per-predicate conditions."""

    delta: Program
    specified: list[SpecifiedPredicate]

    def specified_keys(self) -> set[tuple[str, int]]:
        return {sp.key for sp in self.specified}


class _SpecParser(_Parser):
    """Extends the clause parser with formulas and ``predicate`` items."""

    def parse_wff(self) -> Wff:
        left = self.parse_wff_disj()
        if self.peek().text == "=>":
            self.next()
            return WImplies(left, self.parse_wff())
        return left

    def parse_wff_disj(self) -> Wff:
        left = self.parse_wff_conj()
        while self.peek().text == ";":
            self.next()
            left = WOr(left, self.parse_wff_conj())
        return left

    def parse_wff_conj(self) -> Wff:
        left = self.parse_wff_prim()
        while self.peek().text == ",":
            self.next()
            left = WAnd(left, self.parse_wff_prim())
        return left

    def parse_wff_prim(self) -> Wff:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            inner = self.parse_wff()
            self.expect(")")
            return inner
        if tok.text == "not":
            self.next()
            return WNot(self.parse_wff_prim())
        if tok.text in ("all", "some"):
            self.next()
            self.expect("[")
            names = [self.next()]
            while self.peek().text == ",":
                self.next()
                names.append(self.next())
            self.expect("]")
            for name in names:
                if name.kind != "var" or name.text == "_":
                    raise SyntaxError4(
                        "quantified variable expected", name.line, name.column
                    )
            variables = tuple(Var(n.text) for n in names)
            body = self.parse_wff_prim()
            return (WForall if tok.text == "all" else WExists)(variables, body)
        return WAtom(self.parse_atom())

    def parse_specified(self) -> SpecifiedPredicate:
        pattern = self.parse_atom()
        pre: Wff | None = None
        post: Wff | None = None
        if self.peek().text == "precondition":
            self.next()
            pre = self.parse_wff()
        if self.peek().text == "postcondition":
            self.next()
            post = self.parse_wff()
        self.expect(".")
        return SpecifiedPredicate(pattern, pre, post)


def parse_specification(text: str) -> Specification:
    """Parse vocabulary clauses and ``predicate`` statements from text."""
    parser = _SpecParser(text)
    clauses: list[Clause] = []
    decls = Declarations()
    specified: list[SpecifiedPredicate] = []
    seen: set[tuple[str, int]] = set()
    while parser.peek().kind != "end":
        tok = parser.peek()
        if tok.text == "predicate":
            parser.next()
            sp = parser.parse_specified()
            if sp.key in seen:
                raise SpecError(f"duplicate specification for {sp.atom.pred}")
            seen.add(sp.key)
            specified.append(sp)
            continue
        if tok.text == ":-":
            _, one_decls = _parse_one_directive(parser)
            decls.types.update(one_decls.types)
            decls.preds.update(one_decls.preds)
            decls.modes.update(one_decls.modes)
            decls.extra_functors |= one_decls.extra_functors
            continue
        head = parser.parse_atom()
        if head.pred == EQ:
            raise parser.error("the equality predicate cannot be defined")
        if parser.peek().text == ":-":
            parser.next()
            body = parser.parse_body()
        else:
            body = BodyTrue()
        parser.expect(".")
        clauses.append(Clause(head, body, tok.line))
    delta = Program(complete(clauses), decls, clauses)
    _require_definite(delta)
    return Specification(delta, specified)


def _parse_one_directive(parser: _SpecParser) -> tuple[None, Declarations]:
    parser.expect(":-")
    kw = parser.next()
    decls = Declarations()
    if kw.text == "type":
        decl = parser.parse_type_decl()
        decls.types[decl.name] = decl
    elif kw.text == "pred":
        pd = parser.parse_pred_decl()
        decls.preds[pd.key] = pd
    elif kw.text == "mode":
        md = parser.parse_mode_decl()
        decls.modes[md.key] = md
    elif kw.text == "functors":
        decls.extra_functors |= parser.parse_functors_decl()
    else:
        raise SyntaxError4(f"unknown declaration {kw.text!r}", kw.line, kw.column)
    return None, decls


def _require_definite(delta: Program) -> None:
    for clause in delta.clauses:
        for conj in body_to_dnf(clause.body).conjuncts:
            for lit in conj.literals:
                if not lit.positive:
                    raise SpecError(
                        "vocabulary program must be definite; negated "
                        f"literal in clause at line {clause.line}"
                    )
                if lit.atom.pred == ERROR_PRED:
                    raise SpecError(
                        "vocabulary program must not abort; error/1 in "
                        f"clause at line {clause.line}"
                    )


# ---------------------------------------------------------------------------
# Least Herbrand model of the vocabulary program (carrier-bounded)


def least_model(delta: Program, carrier: Universe) -> frozenset[Atom]:
    """Derivable carrier atoms of a definite program, by naive iteration.

    Bodies are solved by unification against already-derived facts;
    head variables the body leaves open range over the carrier.  Head
    instances that fall outside the carrier are dropped — the result is
    the least Herbrand model intersected with the carrier whenever the
    program's derivations never pass through deeper terms on the way to
    shallow conclusions (true of structurally recursive definitions).
    """
    _require_definite(delta)
    rules: list[tuple[Atom, tuple[Literal, ...]]] = []
    for clause in delta.clauses:
        for conj in body_to_dnf(clause.body).conjuncts:
            rules.append((clause.head, conj.literals))
    facts: set[Atom] = set()
    by_pred: dict[tuple[str, int], list[Atom]] = {}
    changed = True
    while changed:
        changed = False
        for head, lits in rules:
            for theta in _solve(lits, 0, Substitution(), by_pred):
                grounded = theta.apply_atom(head)
                open_vars = sorted(atom_vars(grounded), key=lambda v: v.name)
                for combo in itertools.product(carrier.terms, repeat=len(open_vars)):
                    sigma = Substitution(dict(zip(open_vars, combo)))
                    fact = sigma.apply_atom(grounded)
                    if fact in facts or not carrier.contains_atom(fact):
                        continue
                    facts.add(fact)
                    by_pred.setdefault(fact.key, []).append(fact)
                    changed = True
    return frozenset(facts)


def _solve(lits, i, theta, by_pred):
    if i == len(lits):
        yield theta
        return
    atom = lits[i].atom
    if atom.pred == EQ:
        sigma = unify(atom.args[0], atom.args[1], theta)
        if sigma is not None:
            yield from _solve(lits, i + 1, sigma, by_pred)
        return
    for fact in by_pred.get(atom.key, ()):
        sigma = unify_atoms(atom, fact, theta)
        if sigma is not None:
            yield from _solve(lits, i + 1, sigma, by_pred)


# ---------------------------------------------------------------------------
# Formula evaluation and the meaning of a specification


def eval_wff(w: Wff, theta: Substitution, facts: frozenset[Atom],
             carrier: Universe) -> bool:
    """Classical truth over the vocabulary program's least model.

    Quantified variables range over the carrier; atoms whose instance
    falls outside the carrier count as underivable (false).
    """
    if isinstance(w, WAtom):
        a = theta.apply_atom(w.atom)
        if not a.ground:
            raise SpecError(f"formula atom not ground at evaluation: {atom_to_str(a)}")
        if a.pred == EQ:
            return a.args[0] == a.args[1]
        return a in facts
    if isinstance(w, WNot):
        return not eval_wff(w.sub, theta, facts, carrier)
    if isinstance(w, WAnd):
        return eval_wff(w.left, theta, facts, carrier) and eval_wff(
            w.right, theta, facts, carrier
        )
    if isinstance(w, WOr):
        return eval_wff(w.left, theta, facts, carrier) or eval_wff(
            w.right, theta, facts, carrier
        )
    if isinstance(w, WImplies):
        return not eval_wff(w.left, theta, facts, carrier) or eval_wff(
            w.right, theta, facts, carrier
        )
    universal = isinstance(w, WForall)
    for combo in itertools.product(carrier.terms, repeat=len(w.vars)):
        sigma = theta
        for v, t in zip(w.vars, combo):
            sigma = sigma.bind(v, t)
        holds = eval_wff(w.sub, sigma, facts, carrier)
        if universal and not holds:
            return False
        if not universal and holds:
            return True
    return universal


def spec_meaning(spec: Specification, carrier: Universe) -> ExtensionalInterpretation:
    """The specification as a four-valued interpretation over the carrier.

    Specified predicates: i where the precondition fails, else t or f by
    the postcondition.  Other vocabulary predicates: t where derivable,
    f elsewhere.  (u never arises: the postcondition is evaluated in a
    single two-valued model, so no instance is left undecided.)
    """
    facts = least_model(spec.delta, carrier)
    specified_keys = spec.specified_keys()
    by_key = {sp.key: sp for sp in spec.specified}
    true_set: set[Atom] = set()
    false_set: set[Atom] = set()
    for a in carrier.atoms:
        sp = by_key.get(a.key)
        if sp is None:
            if a.key in {c.head.key for c in spec.delta.clauses}:
                (true_set if a in facts else false_set).add(a)
            continue
        theta = Substitution(dict(zip(sp.atom.args, a.args)))  # type: ignore[arg-type]
        if sp.precondition is not None and not eval_wff(
            sp.precondition, theta, facts, carrier
        ):
            true_set.add(a)
            false_set.add(a)
            continue
        if sp.postcondition is None or eval_wff(sp.postcondition, theta, facts, carrier):
            true_set.add(a)
        else:
            false_set.add(a)
    return ExtensionalInterpretation(true_set, false_set, carrier)


# ---------------------------------------------------------------------------
# Checking a program against a specification


@dataclass
class SpecCheckReport:
    """Two verdicts: the model property and the direct fixpoint comparison."""

    model: ModelCheckReport
    covers_lfp: bool
    witness: Atom | None = None
    lfp_value: TV | None = None
    spec_value: TV | None = None

    @property
    def holds(self) -> bool:
        return self.model.holds and self.covers_lfp

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "covers_lfp": self.covers_lfp,
            "witness": None if self.witness is None else atom_to_str(self.witness),
            "lfp_value": None if self.lfp_value is None else self.lfp_value.value,
            "spec_value": None if self.spec_value is None else self.spec_value.value,
            "holds": self.holds,
        }


def pointwise_covers(high, low, carrier: Universe) -> tuple[bool, Atom | None]:
    """Whether ``high`` information-dominates ``low`` on every carrier atom."""
    for a in carrier.atoms:
        if a.pred == ERROR_PRED and len(a.args) == 1:
            continue
        if not info_leq(value_of(low, a), value_of(high, a)):
            return False, a
    return True, None


def check_against_spec(
    program: Program, spec: Specification, carrier: Universe
) -> SpecCheckReport:
    """Pit the specification's meaning against a program, both ways.

    The model route checks the information-order model property — the
    sufficient condition a static analyser would establish; the direct
    route compares the meaning pointwise against the program's bounded
    least fixpoint.  The model property implies the direct one, so a
    report with ``model.holds`` but not ``covers_lfp`` signals a
    boundary artifact, never a sound configuration.
    """
    meaning = spec_meaning(spec, carrier)
    model = check_model(program, meaning, "info_geq4", carrier)
    fix = lfp(program, carrier.d, carrier=carrier)
    ok, witness = pointwise_covers(meaning, fix.result, carrier)
    if ok:
        return SpecCheckReport(model, True)
    return SpecCheckReport(
        model,
        False,
        witness,
        value_of(fix.result, witness),
        value_of(meaning, witness),
    )
