"""Four-valued declarative debugging over proof and failure trees.

A derivation tree node holds a ground atom; an oracle classifies it as
correct, erroneous, or inadmissible.  The diagnosis kind is carried by
the node's tree kind: a proof node asks the wrong-answer question ("is
this true?"), a failure node asks the missing-answer question ("should
this have failed?").  Under a four-valued intended interpretation the
classification is

* wrong answer:  t correct, i inadmissible, f erroneous — and u is
  treated the same as f (an undefined atom should not have succeeded);
* missing answer: f correct, i inadmissible, t erroneous — and u is
  treated the same as t (an undefined atom should not have failed).

The search walks top-down, descending into the first erroneous child;
a buggy node is an erroneous node with no erroneous children.  If all
its children are correct the bug is an *e-bug* (the clause instance
itself is wrong); if some child is inadmissible it is an *i-bug* (the
clause asked a question it should not have).

``serve_session`` drives the same search with a human oracle over a
line-delimited JSON protocol, suitable for terminals or a browser UI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from belnaplp.bilattice import TV, parse_tv
from belnaplp.interp import equality_value, value_of
from belnaplp.sld import (
    FailureTree,
    FinitelyFails,
    ProofTree,
    Succeeds,
    solve,
)
from belnaplp.syntax import EQ, Atom, Conj, Literal, Program, atom_to_str

WRONG_ANSWER = "wrong_answer"
MISSING_ANSWER = "missing_answer"
DIAGNOSES = (WRONG_ANSWER, MISSING_ANSWER)

#: pseudo-predicate used by the resolver for multi-literal query roots
QUERY_ROOT = "$query"


class NodeClass(Enum):
    CORRECT = "correct"
    ERRONEOUS = "erroneous"
    INADMISSIBLE = "inadmissible"


class OracleError(Exception):
    """The oracle could not or may not answer."""


class ProtocolError(Exception):
    """A malformed or out-of-order message on the session transport."""


def value_to_class(v: TV, diagnosis: str) -> NodeClass:
    """Fold a four-valued intended value into a three-way classification."""
    if diagnosis not in DIAGNOSES:
        raise ValueError(f"unknown diagnosis kind {diagnosis!r}")
    if v is TV.I:
        return NodeClass.INADMISSIBLE
    if diagnosis == WRONG_ANSWER:
        # u is treated the same as f: it should not have succeeded
        return NodeClass.CORRECT if v is TV.T else NodeClass.ERRONEOUS
    # u is treated the same as t: it should not have failed
    return NodeClass.CORRECT if v is TV.F else NodeClass.ERRONEOUS


def node_diagnosis(node: ProofTree | FailureTree) -> str:
    """Proof nodes pose wrong-answer questions, failure nodes missing-answer
    ones; negation flips the embedded tree kind, and with it the question."""
    return WRONG_ANSWER if isinstance(node, ProofTree) else MISSING_ANSWER


class Oracle:
    """Classifies ground atoms, one question per (atom, diagnosis) pair.

    Answers are cached; equality atoms are decided objectively and never
    reach the underlying source.  ``questions`` records the questions
    actually asked, in order, for transcripts."""

    def __init__(self) -> None:
        self._cache: dict[tuple[Atom, str], NodeClass] = {}
        self.questions: list[tuple[Atom, str, NodeClass]] = []

    def classify(self, atom: Atom, diagnosis: str) -> NodeClass:
        if not atom.ground:
            raise OracleError(f"cannot classify non-ground atom {atom_to_str(atom)}")
        if atom.pred == EQ and len(atom.args) == 2:
            return value_to_class(equality_value(atom), diagnosis)
        key = (atom, diagnosis)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        answer = self._ask(atom, diagnosis)
        self._cache[key] = answer
        self.questions.append((atom, diagnosis, answer))
        return answer

    def _ask(self, atom: Atom, diagnosis: str) -> NodeClass:
        raise NotImplementedError


class StoredOracle(Oracle):
    """Answers from a stored intended interpretation."""

    def __init__(self, intended) -> None:
        super().__init__()
        self.intended = intended

    def _ask(self, atom: Atom, diagnosis: str) -> NodeClass:
        return value_to_class(value_of(self.intended, atom), diagnosis)


class InteractiveOracle(Oracle):
    """Answers from a callback — a terminal prompt or a wire transport.

    The callback receives (question id, atom, diagnosis) and returns a
    classification name, a truth-value name, a NodeClass, or a TV.  The
    cache in the base class guarantees the same question is never posed
    twice."""

    def __init__(self, ask) -> None:
        super().__init__()
        self._callback = ask
        self._next_id = 0

    def _ask(self, atom: Atom, diagnosis: str) -> NodeClass:
        qid = self._next_id
        self._next_id += 1
        raw = self._callback(qid, atom, diagnosis)
        if isinstance(raw, NodeClass):
            return raw
        if isinstance(raw, TV):
            return value_to_class(raw, diagnosis)
        if isinstance(raw, str):
            for cls in NodeClass:
                if raw == cls.value:
                    return cls
            try:
                return value_to_class(parse_tv(raw), diagnosis)
            except ValueError:
                pass
        raise OracleError(f"unintelligible oracle answer {raw!r}")


def classify(oracle: Oracle, atom: Atom, diagnosis: str) -> NodeClass:
    """Ask the oracle to classify one ground atom."""
    return oracle.classify(atom, diagnosis)


@dataclass(frozen=True)
class BugReport:
    """An erroneous node none of whose children are erroneous."""

    kind: str  # "e-bug" or "i-bug"
    atom: Atom
    diagnosis: str
    #: clause index of the definition instance (proof nodes only)
    clause_index: int | None
    children: tuple[tuple[Atom, str, NodeClass], ...] = ()

    def to_dict(self) -> dict:
        return {
            "type": "bug",
            "kind": self.kind,
            "atom": atom_to_str(self.atom),
            "diagnosis": self.diagnosis,
            "clause": self.clause_index,
            "children": [
                {"atom": atom_to_str(a), "kind": d, "class": c.value}
                for a, d, c in self.children
            ],
        }


@dataclass(frozen=True)
class NoBug:
    """The search ended without a buggy node."""

    reason: str

    def to_dict(self) -> dict:
        return {"type": "nobug", "reason": self.reason}


def find_bug(
    tree: ProofTree | FailureTree, oracle: Oracle, diagnosis: str | None = None
) -> BugReport | NoBug:
    """Top-down search for an erroneous node with no erroneous children.

    Children are classified left to right and the search descends into
    the first erroneous one; on finite trees with an erroneous root this
    always terminates at a buggy node.  A correct root yields NoBug; an
    inadmissible root yields NoBug flagged as an inadmissible query."""
    root_diag = node_diagnosis(tree)
    if diagnosis is not None and diagnosis != root_diag:
        raise ValueError(
            f"{diagnosis} diagnosis needs a "
            f"{'proof' if diagnosis == WRONG_ANSWER else 'failure'} tree"
        )
    pseudo_root = tree.atom.pred == QUERY_ROOT
    if not pseudo_root:
        root_class = oracle.classify(tree.atom, root_diag)
        if root_class is NodeClass.CORRECT:
            return NoBug("root classified correct")
        if root_class is NodeClass.INADMISSIBLE:
            return NoBug("inadmissible query")
    node: ProofTree | FailureTree = tree
    while True:
        classified = [
            (child, oracle.classify(child.atom, node_diagnosis(child)))
            for child in node.children
        ]
        descend = next(
            (c for c, cls in classified if cls is NodeClass.ERRONEOUS), None
        )
        if descend is not None:
            node = descend
            pseudo_root = False
            continue
        if pseudo_root:
            return NoBug("no erroneous answer in query")
        kind = (
            "i-bug"
            if any(cls is NodeClass.INADMISSIBLE for _, cls in classified)
            else "e-bug"
        )
        return BugReport(
            kind,
            node.atom,
            node_diagnosis(node),
            node.clause_index if isinstance(node, ProofTree) else None,
            tuple(
                (c.atom, node_diagnosis(c), cls) for c, cls in classified
            ),
        )


# ---------------------------------------------------------------------------
# Interactive sessions over line-delimited JSON


class JsonLineTransport:
    """One JSON object per line, over a pair of text streams."""

    def __init__(self, infile, outfile) -> None:
        self.infile = infile
        self.outfile = outfile

    def send(self, message: dict) -> None:
        self.outfile.write(json.dumps(message, sort_keys=True) + "\n")
        self.outfile.flush()

    def recv(self) -> dict:
        line = self.infile.readline()
        if not line:
            raise ProtocolError("transport closed mid-session")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"not a JSON message: {line!r}") from e
        if not isinstance(message, dict):
            raise ProtocolError(f"expected a JSON object, got {message!r}")
        return message


def _transport_ask(transport) -> "callable":
    def ask(qid: int, atom: Atom, diagnosis: str):
        transport.send(
            {"type": "ask", "id": qid, "atom": atom_to_str(atom), "kind": diagnosis}
        )
        answer = transport.recv()
        if answer.get("type") != "answer":
            raise ProtocolError(f"expected an answer message, got {answer!r}")
        if answer.get("id") != qid:
            raise ProtocolError(
                f"answer id {answer.get('id')!r} does not match question {qid}"
            )
        if "class" in answer:
            return answer["class"]
        if "value" in answer:
            return answer["value"]
        raise ProtocolError(f"answer carries neither class nor value: {answer!r}")

    return ask


def serve_session(
    program: Program,
    query: Atom,
    diagnosis: str,
    transport,
    budget: int = 100_000,
) -> BugReport | NoBug:
    """Run one debugging session over a transport; returns the verdict sent.

    The query is resolved first; a wrong-answer session debugs its proof
    tree, a missing-answer session its failure tree.  If the outcome
    does not match the diagnosis kind there is nothing to debug and a
    nobug message says so."""
    if diagnosis not in DIAGNOSES:
        raise ValueError(f"unknown diagnosis kind {diagnosis!r}")
    outcome = solve(program, Conj((Literal(query),)), budget)
    tree: ProofTree | FailureTree
    if diagnosis == WRONG_ANSWER:
        if not isinstance(outcome, Succeeds):
            verdict = NoBug(
                f"query did not succeed ({type(outcome).__name__}); "
                "no wrong answer to debug"
            )
            transport.send(verdict.to_dict())
            return verdict
        tree = outcome.trees[0]
    else:
        if not isinstance(outcome, FinitelyFails) or outcome.tree is None:
            verdict = NoBug(
                f"query did not finitely fail ({type(outcome).__name__}); "
                "no missing answer to debug"
            )
            transport.send(verdict.to_dict())
            return verdict
        tree = outcome.tree
    oracle = InteractiveOracle(_transport_ask(transport))
    verdict = find_bug(tree, oracle, diagnosis)
    transport.send(verdict.to_dict())
    return verdict


def replay_session(
    program: Program,
    query: Atom,
    diagnosis: str,
    intended,
    budget: int = 100_000,
) -> tuple[BugReport | NoBug, list[tuple[Atom, str, NodeClass]]]:
    """Run a session against a stored interpretation; returns the verdict
    and the question log (the deterministic transcript skeleton)."""
    outcome = solve(program, Conj((Literal(query),)), budget)
    if diagnosis == WRONG_ANSWER:
        if not isinstance(outcome, Succeeds):
            return NoBug("query did not succeed"), []
        tree: ProofTree | FailureTree = outcome.trees[0]
    else:
        if not isinstance(outcome, FinitelyFails) or outcome.tree is None:
            return NoBug("query did not finitely fail"), []
        tree = outcome.tree
    oracle = StoredOracle(intended)
    verdict = find_bug(tree, oracle, diagnosis)
    return verdict, oracle.questions
