"""Depth-bounded operational semantics: SLD(NF) resolution.

The solver uses the leftmost selection rule, source clause order and
depth-first search with a node-count budget; unification carries the
occurs check.  A selected negative literal must be ground (no delaying:
a non-ground one raises ``FlounderError``); ``error/1`` aborts the whole
computation with a distinguished outcome.

Successful computations yield a proof tree (each node a ground head
instance, children one per body literal); finitely failed ones yield a
failure tree (each node an atom, children the failed clause attempts).
Negated literals embed the opposite kind of tree: a succeeding ``not A``
appears as a failed-atom node for A, a failing ``not A`` as the proof of
A.  Budget exhaustion is reported as such and never conflated with
failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from belnaplp.syntax import (
    EQ,
    Atom,
    Clause,
    Conj,
    Literal,
    Program,
    Substitution,
    atom_is_ground,
    atom_to_str,
    atom_vars,
    body_to_dnf,
    conj_vars,
    rename_apart,
    unify,
    unify_atoms,
)

#: Predicate whose selection aborts the computation (arity 1).
ERROR_PRED = "error"


class FlounderError(Exception):
    """A selected negative literal was not ground."""


class _BudgetExhausted(Exception):
    pass


class _Aborted(Exception):
    def __init__(self, atom: Atom):
        self.atom = atom


@dataclass(frozen=True)
class ProofTree:
    """A successful derivation: node atom proved by clause ``clause_index``
    whose body literals are proved by the children.  Equality leaves have
    no clause index.  A child may be a FailureTree: that is the record of
    a succeeding negated literal (the atom's failure proves ``not A``)."""

    atom: Atom
    clause_index: int | None = None
    children: tuple["ProofTree | FailureTree", ...] = ()
    negative: bool = False


@dataclass(frozen=True)
class FailureAttempt:
    """One clause tried while failing an atom: either the head did not
    unify, or every body branch died; ``failures`` holds one subtree per
    point where a branch's selected literal had no answers (a ProofTree
    child records a negated literal failing because its atom succeeds)."""

    clause_index: int
    unified: bool
    failures: tuple["ProofTree | FailureTree", ...] = ()


@dataclass(frozen=True)
class FailureTree:
    """A finitely failed atom with its per-clause failed attempts."""

    atom: Atom
    attempts: tuple[FailureAttempt, ...] = ()
    negative: bool = False

    @property
    def children(self) -> tuple["ProofTree | FailureTree", ...]:
        return tuple(f for att in self.attempts for f in att.failures)


@dataclass
class Succeeds:
    answer: Substitution
    trees: tuple[ProofTree, ...]

    @property
    def tree(self) -> ProofTree:
        if len(self.trees) == 1:
            return self.trees[0]
        return ProofTree(Atom("$query", ()), None, self.trees)


@dataclass
class FinitelyFails:
    tree: FailureTree | None = None


@dataclass
class BudgetExceeded:
    budget: int = 0


@dataclass
class AbortedByError:
    atom: Atom | None = None


SldOutcome = Succeeds | FinitelyFails | BudgetExceeded | AbortedByError


class _Search:
    def __init__(self, program: Program, budget: int):
        self.clauses: dict[tuple[str, int], list[tuple[int, Clause]]] = {}
        for idx, c in enumerate(program.clauses):
            self.clauses.setdefault(c.head.key, []).append((idx, c))
        self.remaining = budget

    def _tick(self) -> None:
        self.remaining -= 1
        if self.remaining < 0:
            raise _BudgetExhausted()

    def solutions(self, lits: tuple[Literal, ...], subst: Substitution):
        """Yield (substitution, proof trees: one per literal), depth-first."""
        if not lits:
            yield subst, ()
            return
        first, rest = lits[0], lits[1:]
        a = subst.apply_atom(first.atom)
        if first.atom.pred == ERROR_PRED and len(first.atom.args) == 1:
            raise _Aborted(a)
        if first.positive:
            if a.pred == EQ and len(a.args) == 2:
                theta = unify(a.args[0], a.args[1], subst)
                if theta is None:
                    return
                leaf = ProofTree(a)
                for s2, trees in self.solutions(rest, theta):
                    yield s2, (leaf,) + trees
                return
            for idx, clause, s_head, body_alts in self._resolutions(a, subst):
                for alt in body_alts:
                    for s_body, child_trees in self.solutions(alt, s_head):
                        node = ProofTree(s_body.apply_atom(a), idx, child_trees)
                        for s2, trees in self.solutions(rest, s_body):
                            yield s2, (node,) + trees
            return
        # negative literal
        if not atom_is_ground(a):
            raise FlounderError(f"non-ground negated literal: not {atom_to_str(a)}")
        if a.pred == EQ and len(a.args) == 2:
            if a.args[0] == a.args[1]:
                return
            leaf = ProofTree(a, negative=True)
            for s2, trees in self.solutions(rest, subst):
                yield s2, (leaf,) + trees
            return
        for _s, _t in self.solutions((Literal(a),), Substitution()):
            return  # the atom succeeds, so its negation fails
        node = FailureTree(a, self.failure_attempts(a, Substitution()), negative=True)
        for s2, trees in self.solutions(rest, subst):
            yield s2, (node,) + trees

    def _resolutions(self, a: Atom, subst: Substitution):
        """Clause resolution steps for an atom, in source order: yields
        (clause index, clause, extended substitution, body alternatives)."""
        for idx, clause in self.clauses.get((a.pred, len(a.args)), []):
            self._tick()
            ren = rename_apart(atom_vars(clause.head) | disjv(clause))
            theta = unify_atoms(ren.apply_atom(clause.head), a, subst)
            if theta is None:
                continue
            alts = tuple(
                ren.apply_conj(conj).literals for conj in body_to_dnf(clause.body).conjuncts
            )
            yield idx, clause, theta, alts

    def failure_attempts(self, a: Atom, subst: Substitution) -> tuple[FailureAttempt, ...]:
        attempts: list[FailureAttempt] = []
        for idx, clause in self.clauses.get((a.pred, len(a.args)), []):
            self._tick()
            ren = rename_apart(atom_vars(clause.head) | disjv(clause))
            theta = unify_atoms(ren.apply_atom(clause.head), a, subst)
            if theta is None:
                attempts.append(FailureAttempt(idx, unified=False))
                continue
            for conj in body_to_dnf(clause.body).conjuncts:
                fails = self.branch_failures(ren.apply_conj(conj).literals, theta)
                attempts.append(FailureAttempt(idx, unified=True, failures=fails))
        return tuple(attempts)

    def branch_failures(
        self, lits: tuple[Literal, ...], subst: Substitution
    ) -> tuple[ProofTree | FailureTree, ...]:
        """Subtrees for every point at which a branch of the conjunction
        dies: the selected literal that has no answers (or, if negated,
        whose atom wrongly succeeds)."""
        out: list[ProofTree | FailureTree] = []
        if not lits:
            return ()
        first, rest = lits[0], lits[1:]
        a = subst.apply_atom(first.atom)
        if first.atom.pred == ERROR_PRED and len(first.atom.args) == 1:
            raise _Aborted(a)
        if first.positive:
            if a.pred == EQ and len(a.args) == 2:
                theta = unify(a.args[0], a.args[1], subst)
                if theta is None:
                    return (FailureTree(a),)
                return self.branch_failures(rest, theta)
            any_solution = False
            for s2, _trees in self.solutions((first,), subst):
                any_solution = True
                out.extend(self.branch_failures(rest, s2))
            if not any_solution:
                out.append(FailureTree(a, self.failure_attempts(a, Substitution())))
            return tuple(out)
        if not atom_is_ground(a):
            raise FlounderError(f"non-ground negated literal: not {atom_to_str(a)}")
        if a.pred == EQ and len(a.args) == 2:
            if a.args[0] == a.args[1]:
                return (ProofTree(a, negative=True),)
            return self.branch_failures(rest, subst)
        for _s, trees in self.solutions((Literal(a),), Substitution()):
            proof = trees[0]
            return (
                ProofTree(proof.atom, proof.clause_index, proof.children, negative=True),
            )
        return self.branch_failures(rest, subst)


def disjv(clause: Clause):
    out = set()
    for conj in body_to_dnf(clause.body).conjuncts:
        out |= conj_vars(conj)
    return out


def _restrict(subst: Substitution, query: Conj) -> Substitution:
    qvars = set()
    for lit in query.literals:
        qvars |= atom_vars(lit.atom)
    return Substitution({v: subst.apply(v) for v in qvars if subst.apply(v) != v})


def _apply_tree(subst: Substitution, node):
    if isinstance(node, ProofTree):
        return ProofTree(
            subst.apply_atom(node.atom),
            node.clause_index,
            tuple(_apply_tree(subst, c) for c in node.children),
            node.negative,
        )
    return FailureTree(
        subst.apply_atom(node.atom),
        tuple(
            FailureAttempt(
                att.clause_index,
                att.unified,
                tuple(_apply_tree(subst, f) for f in att.failures),
            )
            for att in node.attempts
        ),
        node.negative,
    )


def solve(program: Program, query: Conj, budget: int) -> SldOutcome:
    """Resolve a query: first answer with its proof, finite failure with
    its failure tree, budget exhaustion, or abnormal termination.

    The search nests interpreter frames per resolution step, so it runs
    in a worker thread with a large stack and a recursion limit sized to
    the budget; a derivation deep enough to exhaust even that is
    reported as exceeding the budget — it is the same resource bound,
    never a failure verdict.
    """
    import sys
    import threading

    limit = min(3 * budget + 200, 60_000)
    if limit <= sys.getrecursionlimit():
        return _solve_guarded(program, query, budget)
    result: dict = {}

    def run() -> None:
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(limit)
        try:
            result["value"] = _solve_guarded(program, query, budget)
        except BaseException as e:  # re-raised in the caller
            result["error"] = e
        finally:
            sys.setrecursionlimit(old_limit)

    old_stack = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        worker = threading.Thread(target=run, name="sld-search")
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_stack)
    if "error" in result:
        raise result["error"]
    return result["value"]


def _solve_guarded(program: Program, query: Conj, budget: int) -> SldOutcome:
    try:
        return _solve(program, query, budget)
    except RecursionError:
        return BudgetExceeded(budget)


def _solve(program: Program, query: Conj, budget: int) -> SldOutcome:
    search = _Search(program, budget)
    try:
        for subst, trees in search.solutions(query.literals, Substitution()):
            return Succeeds(
                _restrict(subst, query),
                tuple(_apply_tree(subst, t) for t in trees),
            )
    except _BudgetExhausted:
        return BudgetExceeded(budget)
    except _Aborted as e:
        return AbortedByError(e.atom)
    try:
        if len(query.literals) == 1 and query.literals[0].positive \
                and query.literals[0].atom.pred != EQ:
            tree = FailureTree(
                query.literals[0].atom,
                search.failure_attempts(query.literals[0].atom, Substitution()),
            )
        else:
            fails = search.branch_failures(query.literals, Substitution())
            tree = FailureTree(
                Atom("$query", ()),
                (FailureAttempt(-1, unified=True, failures=fails),),
            )
    except _BudgetExhausted:
        return BudgetExceeded(budget)
    except _Aborted as e:
        return AbortedByError(e.atom)
    return FinitelyFails(tree)


def build_proof_tree(program: Program, atom: Atom, budget: int) -> ProofTree:
    """Proof tree of a query atom, ground-instantiated by the first answer."""
    outcome = solve(program, Conj((Literal(atom),)), budget)
    if not isinstance(outcome, Succeeds):
        raise ValueError(
            f"{atom_to_str(atom)} did not succeed: {type(outcome).__name__}"
        )
    return outcome.trees[0]


def build_failure_tree(program: Program, atom: Atom, budget: int) -> FailureTree:
    """Failure tree of a finitely failing query atom."""
    outcome = solve(program, Conj((Literal(atom),)), budget)
    if not isinstance(outcome, FinitelyFails):
        raise ValueError(
            f"{atom_to_str(atom)} did not finitely fail: {type(outcome).__name__}"
        )
    assert outcome.tree is not None
    return outcome.tree
