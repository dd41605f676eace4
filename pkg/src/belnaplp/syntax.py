"""Terms, atoms, programs and declarations for the Prolog subset.

This module provides:

* the term language (variables and compound terms; constants are
  compounds of arity zero) with substitutions and unification
  (occurs-check on);
* a parser for the concrete syntax: Edinburgh-style clauses, ``not``
  applied to atoms, the reserved equality ``=``/2, list sugar, and the
  declaration operators ``:- type``, ``:- pred``, ``:- mode`` and
  ``:- functors``;
* completion of the clauses for each predicate into a single-definition
  form ``(H, exists W [D])`` where the head has distinct fresh variables
  and the body is a disjunction of conjunctions with explicit argument
  equalities;
* term depth, depth-k pruning, and the bounded universe of ground terms
  and ground atoms used as a finite carrier by the rest of the package.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    """A logic variable, identified by name."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class Compound:
    """A function symbol applied to argument terms; arity 0 is a constant.

    Hash and groundness are precomputed bottom-up at construction, so
    both are O(1) on arbitrarily deep terms.
    """

    functor: str
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((self.functor, self.args)))
        object.__setattr__(
            self,
            "ground",
            all(isinstance(a, Compound) and a.ground for a in self.args),
        )

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, Compound)
            and self._hash == other._hash
            and self.functor == other.functor
            and self.args == other.args
        )

    def __repr__(self) -> str:
        return term_to_str(self)


Term = Var | Compound

NIL = Compound("[]")
CONS = "."  # list constructor functor


def mk_list(items: list[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(items):
        out = Compound(CONS, (item, out))
    return out


@dataclass(frozen=True, eq=False)
class Atom:
    """A predicate symbol applied to argument terms."""

    pred: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((self.pred, self.args)))
        object.__setattr__(
            self,
            "ground",
            all(isinstance(a, Compound) and a.ground for a in self.args),
        )

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, Atom)
            and self._hash == other._hash
            and self.pred == other.pred
            and self.args == other.args
        )

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, len(self.args))

    def __repr__(self) -> str:
        return atom_to_str(self)


@dataclass(frozen=True)
class Literal:
    """An atom or its negation."""

    atom: Atom
    positive: bool = True

    def __repr__(self) -> str:
        return atom_to_str(self.atom) if self.positive else f"not {atom_to_str(self.atom)}"


EQ = "="  # reserved equality predicate, never user-defined


@dataclass(frozen=True)
class Conj:
    """A conjunction of literals (empty conjunction is true)."""

    literals: tuple[Literal, ...] = ()

    def __repr__(self) -> str:
        return ", ".join(map(repr, self.literals)) if self.literals else "true"


@dataclass(frozen=True)
class Disj:
    """A disjunction of conjunctions (empty disjunction is false)."""

    conjuncts: tuple[Conj, ...] = ()

    def __repr__(self) -> str:
        return " ; ".join(f"({c!r})" for c in self.conjuncts) if self.conjuncts else "fail"


# ---------------------------------------------------------------------------
# Printing

_PLAIN_NAME = re.compile(r"[a-z][A-Za-z0-9_]*\Z|[0-9]+\Z|\[\]\Z")


def _functor_str(name: str) -> str:
    return name if _PLAIN_NAME.match(name) else f"'{name}'"


def term_to_str(t: Term) -> str:
    """Canonical prefix printing: functor(arg, ...), with variables by name."""
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return _functor_str(t.functor)
    inner = ", ".join(term_to_str(a) for a in t.args)
    return f"{_functor_str(t.functor)}({inner})"


def term_to_pretty(t: Term) -> str:
    """Like term_to_str but with list sugar [a, b | T]."""
    if isinstance(t, Compound) and t.functor == CONS and len(t.args) == 2:
        items = []
        while isinstance(t, Compound) and t.functor == CONS and len(t.args) == 2:
            items.append(term_to_pretty(t.args[0]))
            t = t.args[1]
        if isinstance(t, Compound) and t.functor == "[]" and not t.args:
            return "[" + ", ".join(items) + "]"
        return "[" + ", ".join(items) + " | " + term_to_pretty(t) + "]"
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return _functor_str(t.functor)
    return f"{_functor_str(t.functor)}({', '.join(term_to_pretty(a) for a in t.args)})"


def atom_to_str(a: Atom) -> str:
    if not a.args:
        return _functor_str(a.pred)
    if a.pred == EQ and len(a.args) == 2:
        return f"{term_to_str(a.args[0])} = {term_to_str(a.args[1])}"
    return f"{_functor_str(a.pred)}({', '.join(term_to_str(x) for x in a.args)})"


def atom_to_pretty(a: Atom) -> str:
    if not a.args:
        return _functor_str(a.pred)
    if a.pred == EQ and len(a.args) == 2:
        return f"{term_to_pretty(a.args[0])} = {term_to_pretty(a.args[1])}"
    return f"{_functor_str(a.pred)}({', '.join(term_to_pretty(x) for x in a.args)})"


# ---------------------------------------------------------------------------
# Substitutions and unification


class Substitution:
    """An idempotent binding of variables to terms."""

    def __init__(self, bindings: dict[Var, Term] | None = None):
        self.bindings: dict[Var, Term] = dict(bindings or {})

    def apply(self, t: Term) -> Term:
        while isinstance(t, Var):
            bound = self.bindings.get(t)
            if bound is None:
                return t
            t = bound
        if t.ground or not t.args:
            return t
        return Compound(t.functor, tuple(self.apply(a) for a in t.args))

    def apply_atom(self, a: Atom) -> Atom:
        if a.ground:
            return a
        return Atom(a.pred, tuple(self.apply(t) for t in a.args))

    def apply_literal(self, lit: Literal) -> Literal:
        return Literal(self.apply_atom(lit.atom), lit.positive)

    def apply_conj(self, c: Conj) -> Conj:
        return Conj(tuple(self.apply_literal(l) for l in c.literals))

    def apply_disj(self, d: Disj) -> Disj:
        return Disj(tuple(self.apply_conj(c) for c in d.conjuncts))

    def bind(self, v: Var, t: Term) -> "Substitution":
        out = Substitution(self.bindings)
        out.bindings[v] = t
        return out

    def __repr__(self) -> str:
        inner = ", ".join(f"{v.name} -> {term_to_str(t)}" for v, t in self.bindings.items())
        return "{" + inner + "}"


def term_vars(t: Term, acc: set[Var] | None = None) -> set[Var]:
    if acc is None:
        acc = set()
    if isinstance(t, Var):
        acc.add(t)
    elif not t.ground:
        for a in t.args:
            term_vars(a, acc)
    return acc


def atom_vars(a: Atom) -> set[Var]:
    acc: set[Var] = set()
    for t in a.args:
        term_vars(t, acc)
    return acc


def literal_vars(lit: Literal) -> set[Var]:
    return atom_vars(lit.atom)


def conj_vars(c: Conj) -> set[Var]:
    acc: set[Var] = set()
    for lit in c.literals:
        acc |= literal_vars(lit)
    return acc


def disj_vars(d: Disj) -> set[Var]:
    acc: set[Var] = set()
    for c in d.conjuncts:
        acc |= conj_vars(c)
    return acc


def is_ground(t: Term) -> bool:
    return isinstance(t, Compound) and t.ground


def atom_is_ground(a: Atom) -> bool:
    return a.ground


def occurs(v: Var, t: Term, subst: Substitution) -> bool:
    t = subst.apply(t)
    if isinstance(t, Var):
        return t == v
    if t.ground:
        return False
    return any(occurs(v, a, subst) for a in t.args)


def unify(t1: Term, t2: Term, subst: Substitution | None = None) -> Substitution | None:
    """Unify two terms with occurs check; None if not unifiable."""
    subst = subst if subst is not None else Substitution()
    s1, s2 = subst.apply(t1), subst.apply(t2)
    if isinstance(s1, Var):
        if s1 == s2:
            return subst
        if occurs(s1, s2, subst):
            return None
        return subst.bind(s1, s2)
    if isinstance(s2, Var):
        if occurs(s2, s1, subst):
            return None
        return subst.bind(s2, s1)
    if s1.ground and s2.ground:
        return subst if s1 == s2 else None
    if s1.functor != s2.functor or len(s1.args) != len(s2.args):
        return None
    for a1, a2 in zip(s1.args, s2.args):
        result = unify(a1, a2, subst)
        if result is None:
            return None
        subst = result
    return subst


def unify_atoms(a1: Atom, a2: Atom, subst: Substitution | None = None) -> Substitution | None:
    if a1.pred != a2.pred or len(a1.args) != len(a2.args):
        return None
    subst = subst if subst is not None else Substitution()
    for t1, t2 in zip(a1.args, a2.args):
        result = unify(t1, t2, subst)
        if result is None:
            return None
        subst = result
    return subst


class _Renamer:
    """Produces fresh variables with a common prefix, avoiding clashes."""

    def __init__(self, prefix: str = "_R"):
        self.prefix = prefix
        self.counter = itertools.count()

    def fresh(self) -> Var:
        return Var(f"{self.prefix}{next(self.counter)}")


_global_renamer = _Renamer("_G")


def fresh_var() -> Var:
    return _global_renamer.fresh()


def rename_apart(variables: set[Var], renamer: _Renamer | None = None) -> Substitution:
    renamer = renamer or _global_renamer
    return Substitution({v: renamer.fresh() for v in sorted(variables, key=lambda v: v.name)})


# ---------------------------------------------------------------------------
# Declarations and programs


@dataclass(frozen=True)
class TypeDecl:
    """A discriminated-union type: name, parameters, constructor list.

    Each constructor is (functor, argument type expressions), where a
    type expression is itself a Term over type constructors and type
    variables.
    """

    name: str
    params: tuple[Var, ...]
    constructors: tuple[tuple[str, tuple[Term, ...]], ...]


_LIST_PARAM = Var("T")

#: Types available without declaration; a user-declared type of the
#: same name takes precedence.
BUILTIN_TYPES: dict[str, TypeDecl] = {
    "list": TypeDecl(
        "list",
        (_LIST_PARAM,),
        (
            ("[]", ()),
            (CONS, (_LIST_PARAM, Compound("list", (_LIST_PARAM,)))),
        ),
    ),
}


@dataclass(frozen=True)
class PredDecl:
    """Argument types for a predicate: ``:- pred p(list(T), list(T)).``"""

    pred: str
    arg_types: tuple[Term, ...]

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, len(self.arg_types))


@dataclass(frozen=True)
class Mode:
    """Per-argument in/out markers."""

    markers: tuple[str, ...]  # each "in" or "out"

    def __repr__(self) -> str:
        return "(" + ", ".join(self.markers) + ")"


@dataclass(frozen=True)
class ModeDecl:
    """Mode groups for a predicate: groups joined by `and`, separated by `also`."""

    pred: str
    arity: int
    groups: tuple[tuple[Mode, ...], ...]

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, self.arity)


@dataclass
class Declarations:
    types: dict[str, TypeDecl] = field(default_factory=dict)
    preds: dict[tuple[str, int], PredDecl] = field(default_factory=dict)
    modes: dict[tuple[str, int], ModeDecl] = field(default_factory=dict)
    extra_functors: set[tuple[str, int]] = field(default_factory=set)


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: "BodyExpr"
    line: int = 0


# Raw (pre-completion) body expressions as parsed: a tree of And/Or over
# literals, flattened into Disj-of-Conj (disjunctive normal form) by
# `body_to_dnf`.
@dataclass(frozen=True)
class BodyLit:
    literal: Literal


@dataclass(frozen=True)
class BodyAnd:
    left: "BodyExpr"
    right: "BodyExpr"


@dataclass(frozen=True)
class BodyOr:
    left: "BodyExpr"
    right: "BodyExpr"


@dataclass(frozen=True)
class BodyTrue:
    pass


BodyExpr = BodyLit | BodyAnd | BodyOr | BodyTrue


def body_to_dnf(b: BodyExpr) -> Disj:
    """Flatten a parsed body into a disjunction of literal conjunctions."""
    if isinstance(b, BodyTrue):
        return Disj((Conj(()),))
    if isinstance(b, BodyLit):
        return Disj((Conj((b.literal,)),))
    if isinstance(b, BodyOr):
        return Disj(body_to_dnf(b.left).conjuncts + body_to_dnf(b.right).conjuncts)
    # conjunction: distribute
    left, right = body_to_dnf(b.left), body_to_dnf(b.right)
    return Disj(
        tuple(Conj(lc.literals + rc.literals) for lc in left.conjuncts for rc in right.conjuncts)
    )


@dataclass(frozen=True)
class PredicateDefinition:
    """Completed single-definition form: most general head, local vars, DNF body."""

    head: Atom
    local_vars: frozenset[Var]
    body: Disj

    @property
    def key(self) -> tuple[str, int]:
        return self.head.key


@dataclass
class Program:
    definitions: dict[tuple[str, int], PredicateDefinition]
    declarations: Declarations
    clauses: list[Clause] = field(default_factory=list)

    def alphabet(self) -> set[tuple[str, int]]:
        """Function symbols of the program, declarations and `functors` extras."""
        syms: set[tuple[str, int]] = set(self.declarations.extra_functors)
        for clause in self.clauses:
            for term in clause.head.args:
                _collect_functors(term, syms)
            _collect_body_functors(clause.body, syms)
        for decl in self.declarations.types.values():
            for functor, argtypes in decl.constructors:
                syms.add((functor, len(argtypes)))
        return syms

    def predicate_keys(self) -> list[tuple[str, int]]:
        """Defined predicates plus any referenced only in bodies (which
        have the empty completion, hence are false everywhere)."""
        keys = set(self.definitions.keys())
        for defn in self.definitions.values():
            for conj in defn.body.conjuncts:
                for lit in conj.literals:
                    if lit.atom.pred != EQ:
                        keys.add(lit.atom.key)
        for decl in self.declarations.preds.values():
            keys.add(decl.key)
        return sorted(keys)


def _collect_functors(t: Term, acc: set[tuple[str, int]]) -> None:
    if isinstance(t, Compound):
        acc.add((t.functor, len(t.args)))
        for a in t.args:
            _collect_functors(a, acc)


def _collect_body_functors(b: BodyExpr, acc: set[tuple[str, int]]) -> None:
    if isinstance(b, BodyLit):
        for t in b.literal.atom.args:
            _collect_functors(t, acc)
    elif isinstance(b, (BodyAnd, BodyOr)):
        _collect_body_functors(b.left, acc)
        _collect_body_functors(b.right, acc)


# ---------------------------------------------------------------------------
# Parsing


class SyntaxError4(Exception):
    """Parse error with position information."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class _Token:
    kind: str  # name var punct string end
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<arrow>--->)
  | (?P<neck>:-)
  | (?P<implies>=>)
  | (?P<punct>[()\[\],;.=|])
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*|[0-9]+)
  | (?P<string>"[^"]*")
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SyntaxError4(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        column = pos - line_start + 1
        kind = m.lastgroup or ""
        tok = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, tok, line, column))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("end", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0
        # per-clause map of anonymous-variable occurrences to fresh names
        self._anon = itertools.count()

    # -- token utilities

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def next(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise SyntaxError4(f"expected {text!r}, found {tok.text!r}", tok.line, tok.column)
        return tok

    def error(self, message: str) -> SyntaxError4:
        tok = self.peek()
        return SyntaxError4(message + f" (at {tok.text!r})", tok.line, tok.column)

    # -- terms

    def parse_term(self) -> Term:
        tok = self.next()
        if tok.kind == "var":
            if tok.text == "_":
                return Var(f"_A{next(self._anon)}")
            return Var(tok.text)
        if tok.kind == "string":
            return Compound(tok.text[1:-1])
        if tok.kind == "name":
            if self.peek().text == "(":
                self.next()
                args = [self.parse_term()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.parse_term())
                self.expect(")")
                return Compound(tok.text, tuple(args))
            return Compound(tok.text)
        if tok.text == "[":
            if self.peek().text == "]":
                self.next()
                return NIL
            items = [self.parse_term()]
            while self.peek().text == ",":
                self.next()
                items.append(self.parse_term())
            tail: Term = NIL
            if self.peek().text == "|":
                self.next()
                tail = self.parse_term()
            self.expect("]")
            return mk_list(items, tail)
        raise SyntaxError4(f"expected a term, found {tok.text!r}", tok.line, tok.column)

    def parse_atom(self) -> Atom:
        term = self.parse_term()
        if self.peek().text == "=":
            self.next()
            rhs = self.parse_term()
            return Atom(EQ, (term, rhs))
        if isinstance(term, Var):
            raise self.error("a variable is not an atom")
        return Atom(term.functor, term.args)

    # -- bodies

    def parse_body(self) -> BodyExpr:
        left = self.parse_body_conj()
        if self.peek().text == ";":
            self.next()
            return BodyOr(left, self.parse_body())
        return left

    def parse_body_conj(self) -> BodyExpr:
        left = self.parse_body_prim()
        if self.peek().text == ",":
            self.next()
            return BodyAnd(left, self.parse_body_conj())
        return left

    def parse_body_prim(self) -> BodyExpr:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            inner = self.parse_body()
            self.expect(")")
            return inner
        if tok.text == "not":
            self.next()
            if self.peek().text == "(":
                self.next()
                atom = self.parse_atom()
                self.expect(")")
            else:
                atom = self.parse_atom()
            if atom.pred == "not":
                raise self.error("nested not is not supported")
            return BodyLit(Literal(atom, positive=False))
        if tok.text == "true":
            nxt = self.tokens[self.index + 1]
            if nxt.text not in ("(", "="):
                self.next()
                return BodyTrue()
        atom = self.parse_atom()
        return BodyLit(Literal(atom))

    # -- declarations

    def parse_type_decl(self) -> TypeDecl:
        head = self.parse_term()
        if isinstance(head, Var):
            raise self.error("type name expected")
        params = tuple(a for a in head.args)
        if not all(isinstance(p, Var) for p in params):
            raise self.error("type parameters must be variables")
        self.expect("--->")
        constructors: list[tuple[str, tuple[Term, ...]]] = []
        while True:
            ctor = self.parse_term()
            if isinstance(ctor, Var):
                raise self.error("constructor expected")
            constructors.append((ctor.functor, ctor.args))
            if self.peek().text == ";":
                self.next()
                continue
            break
        self.expect(".")
        return TypeDecl(head.functor, tuple(p for p in params if isinstance(p, Var)), tuple(constructors))

    def parse_pred_decl(self) -> PredDecl:
        head = self.parse_term()
        if isinstance(head, Var):
            raise self.error("predicate name expected")
        self.expect(".")
        return PredDecl(head.functor, head.args)

    def parse_mode_decl(self) -> ModeDecl:
        head = self.parse_term()
        if isinstance(head, Var) or not head.args:
            raise self.error("moded predicate expected")
        pred, arity = head.functor, len(head.args)

        def to_mode(args: tuple[Term, ...]) -> Mode:
            markers = []
            for a in args:
                if isinstance(a, Compound) and not a.args and a.functor in ("in", "out"):
                    markers.append(a.functor)
                else:
                    raise self.error("mode markers must be `in` or `out`")
            return Mode(tuple(markers))

        groups: list[list[Mode]] = [[to_mode(head.args)]]
        while self.peek().text in ("and", "also"):
            sep = self.next().text
            self.expect("(")
            markers = [self.parse_term()]
            while self.peek().text == ",":
                self.next()
                markers.append(self.parse_term())
            self.expect(")")
            mode = to_mode(tuple(markers))
            if len(mode.markers) != arity:
                raise self.error("mode arity mismatch")
            if sep == "and":
                groups[-1].append(mode)
            else:
                groups.append([mode])
        self.expect(".")
        return ModeDecl(pred, arity, tuple(tuple(g) for g in groups))

    def parse_functors_decl(self) -> set[tuple[str, int]]:
        out: set[tuple[str, int]] = set()
        self.expect("(")
        while True:
            tok = self.next()
            if tok.text == "[" and self.peek().text == "]":
                self.next()
                name = "[]"
            elif tok.kind == "name":
                name = tok.text
            else:
                raise SyntaxError4("functor name expected", tok.line, tok.column)
            # allow f/2 form or bare constant
            if self.peek().text == "/":
                raise self.error("use name(arity) form")
            if self.peek().text == "(":
                self.next()
                arity_tok = self.next()
                if not arity_tok.text.isdigit():
                    raise SyntaxError4("arity expected", arity_tok.line, arity_tok.column)
                self.expect(")")
                out.add((name, int(arity_tok.text)))
            else:
                out.add((name, 0))
            if self.peek().text == ",":
                self.next()
                continue
            break
        self.expect(")")
        self.expect(".")
        return out

    # -- top level

    def parse_program_items(self) -> tuple[list[Clause], Declarations]:
        clauses: list[Clause] = []
        decls = Declarations()
        while self.peek().kind != "end":
            tok = self.peek()
            if tok.text == ":-":
                self.next()
                kw = self.next()
                if kw.text == "type":
                    decl = self.parse_type_decl()
                    if decl.name in decls.types:
                        raise SyntaxError4(f"duplicate type {decl.name}", kw.line, kw.column)
                    decls.types[decl.name] = decl
                elif kw.text == "pred":
                    pd = self.parse_pred_decl()
                    if pd.key in decls.preds:
                        raise SyntaxError4(f"duplicate pred declaration {pd.pred}", kw.line, kw.column)
                    decls.preds[pd.key] = pd
                elif kw.text == "mode":
                    md = self.parse_mode_decl()
                    if md.key in decls.modes:
                        raise SyntaxError4(f"duplicate mode declaration {md.pred}", kw.line, kw.column)
                    decls.modes[md.key] = md
                elif kw.text == "functors":
                    decls.extra_functors |= self.parse_functors_decl()
                else:
                    raise SyntaxError4(f"unknown declaration {kw.text!r}", kw.line, kw.column)
                continue
            head = self.parse_atom()
            if head.pred == EQ:
                raise self.error("the equality predicate cannot be defined")
            if self.peek().text == ":-":
                self.next()
                body = self.parse_body()
            else:
                body = BodyTrue()
            self.expect(".")
            clauses.append(Clause(head, body, tok.line))
        return clauses, decls


def parse_term(text: str) -> Term:
    """Parse a single term from text."""
    parser = _Parser(text)
    term = parser.parse_term()
    if parser.peek().kind != "end":
        raise parser.error("trailing input after term")
    return term


def parse_atom(text: str) -> Atom:
    """Parse a single atom from text."""
    parser = _Parser(text)
    atom = parser.parse_atom()
    if parser.peek().kind != "end":
        raise parser.error("trailing input after atom")
    return atom


def parse_query(text: str) -> Conj:
    """Parse a query: a comma-separated conjunction of literals."""
    parser = _Parser(text.rstrip().rstrip("."))
    body = parser.parse_body_conj()
    if parser.peek().kind != "end":
        raise parser.error("trailing input after query")
    dnf = body_to_dnf(body)
    if len(dnf.conjuncts) != 1:
        raise ValueError("query must be a conjunction")
    return dnf.conjuncts[0]


def parse_program(text: str) -> Program:
    """Parse program text into completed single-definition form."""
    parser = _Parser(text)
    clauses, decls = parser.parse_program_items()
    definitions = complete(clauses)
    return Program(definitions, decls, clauses)


# ---------------------------------------------------------------------------
# Completion


class CompletionError(Exception):
    pass


def complete(clauses: list[Clause]) -> dict[tuple[str, int], PredicateDefinition]:
    """Group clauses into one definition per predicate.

    Each predicate p/n receives a most-general head p(V1, ..., Vn) with
    machine-generated distinct variables; every clause contributes a
    disjunct V1 = t1, ..., Vn = tn, body with its variables renamed
    apart from other clauses; local variables are exactly the body
    variables not in the head.
    """
    by_pred: dict[tuple[str, int], list[Clause]] = {}
    arity_seen: dict[str, int] = {}
    for clause in clauses:
        pred, arity = clause.head.key
        if pred in arity_seen and arity_seen[pred] != arity:
            raise CompletionError(
                f"predicate {pred} used with arities {arity_seen[pred]} and {arity}"
            )
        arity_seen[pred] = arity
        by_pred.setdefault(clause.head.key, []).append(clause)

    definitions: dict[tuple[str, int], PredicateDefinition] = {}
    for (pred, arity), group in by_pred.items():
        head_vars = tuple(Var(f"V{j + 1}") for j in range(arity))
        head = Atom(pred, head_vars)
        renamer = _Renamer(f"_W_{pred}_")
        disjuncts: list[Conj] = []
        for clause in group:
            clause_vars = atom_vars(clause.head) | disj_vars(body_to_dnf(clause.body))
            renaming = rename_apart(clause_vars, renamer)
            eqs = tuple(
                Literal(Atom(EQ, (v, renaming.apply(arg))))
                for v, arg in zip(head_vars, clause.head.args)
            )
            for conj in body_to_dnf(clause.body).conjuncts:
                renamed = renaming.apply_conj(conj)
                disjuncts.append(Conj(eqs + renamed.literals))
        body = Disj(tuple(disjuncts))
        local = frozenset(disj_vars(body) - set(head_vars))
        definitions[(pred, arity)] = PredicateDefinition(head, local, body)
    return definitions


class HeadGroundingError(Exception):
    pass


def head_grounding(defn: PredicateDefinition, theta: Substitution) -> tuple[Atom, Disj]:
    """Instantiate a definition's head to ground, leaving local variables."""
    head_vars = set(defn.head.args)
    for v in theta.bindings:
        if v in defn.local_vars:
            raise HeadGroundingError(f"substitution binds local variable {v.name}")
        if v not in head_vars:
            raise HeadGroundingError(f"substitution binds foreign variable {v.name}")
    ground_head = theta.apply_atom(defn.head)
    if not atom_is_ground(ground_head):
        raise HeadGroundingError("substitution leaves a head variable free")
    return ground_head, theta.apply_disj(defn.body)


# ---------------------------------------------------------------------------
# Depth and pruning


def depth(t: Term) -> int:
    """Term depth: 1 for variables and constants, 1 + max child depth else."""
    if isinstance(t, Var) or not t.args:
        return 1
    return 1 + max(depth(a) for a in t.args)


def prune(t: Term, k: int, _renamer: _Renamer | None = None) -> Term:
    """Replace every subterm at depth k by a fresh variable.

    The result has depth at most k and the original term is an instance
    of it; fresh variables are pairwise distinct.
    """
    if k < 1:
        raise ValueError("prune depth must be at least 1")
    renamer = _renamer or _Renamer("_P")

    def go(t: Term, level: int) -> Term:
        if level == k:
            if isinstance(t, Var) or not t.args:
                return t
            return renamer.fresh()
        if isinstance(t, Var) or not t.args:
            return t
        return Compound(t.functor, tuple(go(a, level + 1) for a in t.args))

    return go(t, 1)


def prune_atom(a: Atom, k: int, _renamer: _Renamer | None = None) -> Atom:
    renamer = _renamer or _Renamer("_P")
    return Atom(a.pred, tuple(prune(t, k, renamer) for t in a.args))


# ---------------------------------------------------------------------------
# Bounded universes


class UniverseCapExceeded(Exception):
    pass


class Universe:
    """All ground terms of depth <= d over an alphabet, plus ground atoms.

    Enumeration order is deterministic: terms sorted by (depth,
    canonical text); atoms by (predicate, canonical text).
    """

    def __init__(
        self,
        alphabet: set[tuple[str, int]],
        predicate_keys: list[tuple[str, int]],
        d: int,
        cap: int = 500_000,
    ):
        if d < 1:
            raise ValueError("universe depth must be at least 1")
        self.d = d
        self.alphabet = sorted(alphabet)
        self.predicate_keys = sorted(predicate_keys)
        by_depth: list[list[Term]] = []
        seen: set[Term] = set()
        for level in range(1, d + 1):
            layer: list[Term] = []
            for functor, arity in self.alphabet:
                if arity == 0:
                    if level == 1:
                        layer.append(Compound(functor))
                    continue
                if level == 1:
                    continue
                # arguments drawn from all strictly shallower terms
                pool = [t for lvl in by_depth for t in lvl]
                for combo in itertools.product(pool, repeat=arity):
                    if 1 + max(depth(a) for a in combo) == level:
                        candidate = Compound(functor, combo)
                        if candidate not in seen:
                            layer.append(candidate)
                if len(seen) + len(layer) > cap:
                    raise UniverseCapExceeded(
                        f"more than {cap} ground terms at depth {level}; lower d"
                    )
            layer.sort(key=term_to_str)
            seen |= set(layer)
            by_depth.append(layer)
        self.layers: list[list[Term]] = by_depth  # layers[k] = terms of depth k+1
        #: a constants-only alphabet makes the carrier the whole
        #: Herbrand universe: no out-of-carrier instances exist
        self.exhaustive = all(arity == 0 for _, arity in self.alphabet)
        self.terms: list[Term] = [t for lvl in by_depth for t in lvl]
        self._term_set = set(self.terms)

        atoms: list[Atom] = []
        for pred, arity in self.predicate_keys:
            if len(self.terms) ** arity + len(atoms) > cap:
                raise UniverseCapExceeded(f"more than {cap} ground atoms; lower d")
            for combo in itertools.product(self.terms, repeat=arity):
                atoms.append(Atom(pred, combo))
        atoms.sort(key=lambda a: (a.pred, a.arity, atom_to_str(a)))
        self.atoms: list[Atom] = atoms
        self._atom_set = set(atoms)

    def contains_term(self, t: Term) -> bool:
        return t in self._term_set

    def contains_atom(self, a: Atom) -> bool:
        return a in self._atom_set


def universe(program: Program, d: int, cap: int = 500_000,
             extra_predicates: list[tuple[str, int]] | None = None) -> Universe:
    """The bounded carrier for a program: terms of depth <= d and all atoms."""
    keys = program.predicate_keys()
    for key in extra_predicates or []:
        if key not in keys:
            keys.append(key)
    return Universe(program.alphabet(), keys, d, cap)


# ---------------------------------------------------------------------------
# Type membership

# Type expressions reuse Term: a declared type name applied to type
# expressions, or a type variable.  A ground term inhabits a polymorphic
# type expression iff some instantiation of the type variables works;
# callers needing consistency across several arguments thread a shared
# substitution through successive checks.


#: Memo for infer_types, keyed by the identity of the type table and the
#: term; the table object is pinned so its id cannot be recycled.
_infer_cache: dict[tuple[int, Term], list[Term]] = {}
_infer_cache_tables: dict[int, dict] = {}


def infer_types(t: Term, types: dict[str, TypeDecl], _renamer: _Renamer | None = None) -> list[Term]:
    """All type expressions (possibly with free type variables) a ground term inhabits."""
    renamer = _renamer or _Renamer("_T")
    if isinstance(t, Var):
        return []
    cache_key = (id(types), t)
    hit = _infer_cache.get(cache_key)
    if hit is not None:
        # cached results carry free type variables in the reserved _TC
        # namespace: rename them apart so concurrent uses cannot capture
        # each other's bindings
        return [rename_apart(term_vars(texpr), renamer).apply(texpr) for texpr in hit]
    out: list[Term] = []
    for decl in {**BUILTIN_TYPES, **types}.values():
        for functor, argtexprs in decl.constructors:
            if functor != t.functor or len(argtexprs) != len(t.args):
                continue
            renaming = rename_apart(set(decl.params), renamer)
            substs = [Substitution()]
            ok = True
            for argtexpr, argterm in zip(argtexprs, t.args):
                texpr = renaming.apply(argtexpr)
                next_substs: list[Substitution] = []
                for s in substs:
                    for candidate in infer_types(argterm, types, renamer):
                        u = unify(s.apply(texpr), candidate, Substitution(s.bindings))
                        if u is not None:
                            next_substs.append(u)
                substs = next_substs
                if not substs:
                    ok = False
                    break
            if ok:
                head = Compound(decl.name, tuple(renaming.apply(p) for p in decl.params))
                for s in substs:
                    out.append(s.apply(head))
    # canonicalize free type variables into a namespace no renamer
    # produces, so retrieval-time fresh names cannot collide with them
    canon = []
    for texpr in out:
        vs = sorted(term_vars(texpr), key=lambda v: v.name)
        canon.append(
            Substitution({v: Var(f"_TC{i}") for i, v in enumerate(vs)}).apply(texpr)
        )
    _infer_cache[cache_key] = canon
    _infer_cache_tables[id(types)] = types
    return out


def type_instantiations(t: Term, texpr: Term, types: dict[str, TypeDecl],
                        subst: Substitution) -> list[Substitution]:
    """Substitutions extending `subst` under which ground term t inhabits texpr."""
    out = []
    # the global renamer keeps candidate type variables distinct across
    # argument positions of one atom, so joint instantiation cannot
    # conflate unrelated candidates through shared names
    for candidate in infer_types(t, types, _global_renamer):
        u = unify(subst.apply(texpr), candidate, Substitution(subst.bindings))
        if u is not None:
            out.append(u)
    return out


def has_type(t: Term, texpr: Term, types: dict[str, TypeDecl]) -> bool:
    """Does the ground term inhabit the type expression under some instantiation?"""
    return bool(type_instantiations(t, texpr, types, Substitution()))
