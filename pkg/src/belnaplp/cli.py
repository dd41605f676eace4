"""Command-line entry point for the four-valued workbench.

Subcommands map one-to-one onto the library modules:

* ``lfp``      — bounded fixpoint meaning of a program;
* ``check``    — a program against an interpretation file, per relation;
* ``modes``    — well-modedness of a program's mode declarations;
* ``analyze``  — depth-k approximation of the meaning;
* ``spec``     — a program against a specification file, both routes;
* ``debug``    — a declarative-debugging session (stored, terminal, or
  line-delimited JSON transport for UIs);
* ``step``     — unfold computation states and check step monotonicity.

Exit codes are a stable contract: 0 success/pass, 1 semantic failure
(violated relation, mode failure, bug found), 2 resource bound hit
(carrier cap, unstable iteration, resolution budget), 3 usage or parse
error.
"""

from __future__ import annotations

import argparse
import json
import sys

from belnaplp import models
from belnaplp.debug import (
    DIAGNOSES,
    BugReport,
    JsonLineTransport,
    OracleError,
    ProtocolError,
    WRONG_ANSWER,
    replay_session,
    serve_session,
)
from belnaplp.engine import NegationError, analyze_depthk, lfp
from belnaplp.interp import (
    CarrierError,
    parse_extensional,
    parse_pattern_interpretation,
)
from belnaplp.modes import ModeCheckReport, ModeError, check_well_moded
from belnaplp.speccheck import SpecError, check_against_spec, parse_specification
from belnaplp.states import (
    StateError,
    check_step_monotonicity,
    initial_state,
    state_to_str,
    successor,
)
from belnaplp.syntax import (
    SyntaxError4,
    UniverseCapExceeded,
    atom_to_str,
    parse_atom,
    parse_program,
    parse_query,
    universe,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_RESOURCE = 2
EXIT_USAGE = 3


class _UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise _UsageError(f"cannot read {path}: {e}") from e


def _load_program(path: str):
    return parse_program(_read(path))


def _load_interpretation(path: str, program, carrier):
    """Interpretation file: pattern-rule format, or the flat dump format
    (``atom value`` lines) — detected by content."""
    text = _read(path)
    meaningful = [
        ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("%")
    ]
    is_pattern = any(
        ln == "where" or ln.startswith("default ") or " when " in ln
        for ln in meaningful
    )
    if is_pattern:
        pat = parse_pattern_interpretation(text, program.declarations.types)
        return pat.materialize(carrier)
    return parse_extensional(text, carrier)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_lfp(args) -> int:
    program = _load_program(args.program)
    report = lfp(program, args.depth, max_iters=args.max_iters, cap=args.cap)
    if args.format == "json":
        print(
            json.dumps(
                {
                    "stable": report.stable,
                    "iterations": report.iterations,
                    "depth": report.depth_bound,
                    "boundary": [atom_to_str(a) for a in report.boundary_atoms],
                    "values": {
                        atom_to_str(a): report.result.value_of(a).value
                        for a in report.result.carrier.atoms
                    },
                },
                sort_keys=True,
            )
        )
    else:
        sys.stdout.write(report.result.dump())
        print(f"% iterations: {report.iterations}  stable: {report.stable}")
    return EXIT_PASS if report.stable else EXIT_RESOURCE


def cmd_check(args) -> int:
    program = _load_program(args.program)
    carrier = universe(program, args.depth, args.cap)
    I = _load_interpretation(args.interpretation, program, carrier)
    report = models.check_model(program, I, args.relation, carrier)
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(f"{args.relation}: {'pass' if report.holds else 'FAIL'}")
        if not report.holds:
            print(
                f"  witness {atom_to_str(report.witness)}: head "
                f"{report.head_value.value}, body {report.body_value.value}"
            )
        if report.unchecked:
            print(f"  unchecked boundary atoms: {len(report.unchecked)}")
    return EXIT_PASS if report.holds else EXIT_FAIL


def _modes_to_dict(report: ModeCheckReport) -> dict:
    return {
        "holds": report.holds,
        "components": [
            {
                "preds": [f"{p}/{n}" for p, n in comp.preds],
                "uncovered": [
                    {"pred": f"{p}/{n}", "group": gi}
                    for (p, n), gi in comp.uncovered
                ],
                "assignments": [
                    {
                        "choice": {f"{p}/{n}": label for (p, n), label in a.choice.items()},
                        "holds": a.holds,
                        "mode_failures": [f.to_dict() for f in a.mode_failures],
                        "disjunct_violations": [
                            v.to_dict() for v in a.disjunct_violations
                        ],
                    }
                    for a in comp.assignments
                ],
            }
            for comp in report.components
        ],
    }


def cmd_modes(args) -> int:
    program = _load_program(args.program)
    carrier = universe(program, args.depth, args.cap)
    report = check_well_moded(program, carrier)
    if args.format == "json":
        print(json.dumps(_modes_to_dict(report), sort_keys=True))
    else:
        for comp in report.components:
            preds = ", ".join(f"{p}/{n}" for p, n in comp.preds)
            print(f"component {{{preds}}}: {'pass' if comp.holds else 'FAIL'}")
            for (p, n), gi in comp.uncovered:
                print(f"  uncovered: {p}/{n} group {gi + 1}")
            for a in comp.assignments:
                if a.holds or comp.holds:
                    continue
                for f in a.mode_failures:
                    print(f"  mode failure: {f.to_dict()}")
                for v in a.disjunct_violations:
                    print(f"  unsupported disjunct: {v.to_dict()}")
        print(f"well-moded: {'pass' if report.holds else 'FAIL'}")
    return EXIT_PASS if report.holds else EXIT_FAIL


def cmd_analyze(args) -> int:
    program = _load_program(args.program)
    result = analyze_depthk(program, args.k)
    if args.format == "json":
        print(
            json.dumps(
                {
                    "k": result.k,
                    "true": sorted(atom_to_str(a) for a in result.true_atoms),
                    "false": sorted(atom_to_str(a) for a in result.false_atoms),
                },
                sort_keys=True,
            )
        )
    else:
        print("true:")
        for a in sorted(atom_to_str(x) for x in result.true_atoms):
            print(f"  {a}")
        print("false:")
        for a in sorted(atom_to_str(x) for x in result.false_atoms):
            print(f"  {a}")
    return EXIT_PASS


def cmd_spec(args) -> int:
    spec = parse_specification(_read(args.spec))
    program = _load_program(args.program) if args.program else spec.delta
    carrier = universe(program, args.depth, args.cap)
    report = check_against_spec(program, spec, carrier)
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(f"model (info_geq4): {'pass' if report.model.holds else 'FAIL'}")
        if not report.model.holds:
            print(
                f"  witness {atom_to_str(report.model.witness)}: head "
                f"{report.model.head_value.value}, body {report.model.body_value.value}"
            )
        print(f"covers fixpoint:   {'pass' if report.covers_lfp else 'FAIL'}")
        if not report.covers_lfp:
            print(
                f"  witness {atom_to_str(report.witness)}: fixpoint "
                f"{report.lfp_value.value}, specification {report.spec_value.value}"
            )
    return EXIT_PASS if report.holds else EXIT_FAIL


def _terminal_transport():
    class _Terminal:
        def send(self, message: dict) -> None:
            if message.get("type") == "ask":
                print(
                    f"[{message['id']}] {message['atom']} "
                    f"({message['kind'].replace('_', ' ')})"
                )
            else:
                print(json.dumps(message, sort_keys=True))

        def recv(self) -> dict:
            while True:
                raw = input("correct/erroneous/inadmissible or t/f/i/u> ").strip()
                if not raw:
                    continue
                if raw in ("correct", "erroneous", "inadmissible"):
                    return {"type": "answer", "id": self._last, "class": raw}
                if raw in ("t", "f", "i", "u"):
                    return {"type": "answer", "id": self._last, "value": raw}
                print(f"unrecognised answer {raw!r}")

    term = _Terminal()
    original_send = term.send

    def send(message: dict) -> None:
        if message.get("type") == "ask":
            term._last = message["id"]
        original_send(message)

    term.send = send  # type: ignore[method-assign]
    return term


def cmd_debug(args) -> int:
    program = _load_program(args.program)
    query = parse_atom(args.query)
    if args.intended:
        intended = parse_pattern_interpretation(
            _read(args.intended), program.declarations.types
        )
        verdict, questions = replay_session(
            program, query, args.kind, intended, args.budget
        )
        for atom, kind, answer in questions:
            print(f"% {atom_to_str(atom)} ({kind}) -> {answer.value}")
        print(json.dumps(verdict.to_dict(), sort_keys=True))
    elif args.serve:
        transport = JsonLineTransport(sys.stdin, sys.stdout)
        verdict = serve_session(program, query, args.kind, transport, args.budget)
    else:
        transport = _terminal_transport()
        verdict = serve_session(program, query, args.kind, transport, args.budget)
    return EXIT_FAIL if isinstance(verdict, BugReport) else EXIT_PASS


def cmd_step(args) -> int:
    program = _load_program(args.program)
    state = initial_state(parse_query(args.goal))
    carrier = universe(program, args.depth, args.cap)
    intended = None
    if args.intended:
        intended = parse_pattern_interpretation(
            _read(args.intended), program.declarations.types
        ).materialize(carrier)
    print(f"state 0: {state_to_str(state)}")
    for n, sel in enumerate(args.select or [], start=1):
        try:
            i_text, j_text = sel.split(",")
            i, j = int(i_text), int(j_text)
        except ValueError as e:
            raise _UsageError(f"selection must be 'disjunct,literal': {sel!r}") from e
        after = successor(state, i, j, program)
        print(f"state {n}: {state_to_str(after)}")
        if intended is not None:
            report = check_step_monotonicity(intended, state, after, carrier)
            if not report.holds:
                print(f"  monotonicity VIOLATED: {json.dumps(report.to_dict())}")
                return EXIT_FAIL
            print(f"  monotone over {report.groundings} groundings")
        state = after
    return EXIT_PASS


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 3, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser, depth: bool = True) -> None:
    if depth:
        p.add_argument("-d", "--depth", type=int, default=3, help="carrier term depth bound")
    p.add_argument("--cap", type=int, default=500_000, help="carrier size cap")
    p.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="belnaplp", description=__doc__.split("\n\n")[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lfp", help="bounded fixpoint meaning")
    p.add_argument("program")
    p.add_argument("--max-iters", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_lfp)

    p = sub.add_parser("check", help="check a model relation")
    p.add_argument("program")
    p.add_argument("interpretation")
    p.add_argument("--relation", choices=models.RELATIONS, default="info_geq4")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("modes", help="check well-modedness")
    p.add_argument("program")
    _add_common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("analyze", help="depth-k approximation")
    p.add_argument("program")
    p.add_argument("-k", type=int, required=True, help="term depth bound")
    _add_common(p, depth=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("spec", help="check a program against a specification")
    p.add_argument("spec")
    p.add_argument("--program", default=None, help="program file (defaults to the spec's clauses)")
    _add_common(p)
    p.set_defaults(func=cmd_spec)

    p = sub.add_parser("debug", help="declarative debugging session")
    p.add_argument("program")
    p.add_argument("query")
    p.add_argument("--kind", choices=DIAGNOSES, default=WRONG_ANSWER)
    p.add_argument("--intended", default=None, help="stored oracle: pattern interpretation file")
    p.add_argument("--serve", action="store_true", help="line-delimited JSON over stdio")
    p.add_argument("--budget", type=int, default=100_000)
    _add_common(p, depth=False)
    p.set_defaults(func=cmd_debug)

    p = sub.add_parser("step", help="computation-state stepping")
    p.add_argument("program")
    p.add_argument("--goal", required=True)
    p.add_argument(
        "--select",
        action="append",
        metavar="I,J",
        help="unfold literal J of disjunct I (repeatable)",
    )
    p.add_argument("--intended", default=None, help="check step monotonicity against this interpretation")
    _add_common(p)
    p.set_defaults(func=cmd_step)
    return top


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UniverseCapExceeded as e:
        print(f"resource bound: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (
        SyntaxError4,
        SpecError,
        StateError,
        ModeError,
        NegationError,
        CarrierError,
        OracleError,
        ProtocolError,
        _UsageError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
