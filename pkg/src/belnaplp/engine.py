"""Immediate-consequence operator, bounded least fixpoint, depth-k analysis.

``phi`` is the four-valued immediate-consequence operator: the value of
each ground head atom in the output is the value of the corresponding
completed-definition body in the input.  ``lfp`` iterates it from the
all-undefined interpretation over a finite carrier until stable.

Because the carrier is finite, a naive stabilised fixpoint over-decides
programs whose recursion grows terms: an existential body that is false
for every ground instance, but only at instantiation-depth-dependent
iteration stages, would come out false at every bound even though the
unbounded iteration leaves it undefined.  The fixpoint here therefore
evaluates existential bodies with the horizon mechanism of
``interp.eval_body``: out-of-carrier instantiations contribute a value
extrapolated from the two deepest carrier layers, accepted only when
those layers agree in value and in first-decided iteration stage.
Depth-uniform (compact) behaviour extrapolates to its limit value;
depth-dependent behaviour extrapolates to u.  Out-of-carrier ground
atoms referenced by a body are valued u and the affected head atoms are
flagged in the report as boundary-contaminated.

``analyze_depthk`` is the separate approximating analysis: bottom-up
derivation of possibly non-ground atoms, pruning every derived term to
depth k, yielding a pair of (possibly overlapping) true/false atom sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from belnaplp.bilattice import TV
from belnaplp.interp import (
    ExtensionalInterpretation,
    eval_body,
    deep_reference_proxies,
    _instantiations,
)
from belnaplp.syntax import (
    EQ,
    Atom,
    Compound,
    Conj,
    Disj,
    Literal,
    PredicateDefinition,
    Program,
    Substitution,
    Term,
    Universe,
    Var,
    atom_is_ground,
    atom_to_str,
    complete,
    depth,
    fresh_var,
    is_ground,
    literal_vars,
    prune_atom,
    rename_apart,
    term_to_str,
    unify,
    unify_atoms,
    universe,
)

# Truth values as two evidence bits: bit 1 = evidence-for-false,
# bit 2 = evidence-for-true.  u=0, f=1, t=2, i=3.
_TO_BITS = {TV.U: 0, TV.F: 1, TV.T: 2, TV.I: 3}
_FROM_BITS = {v: k for k, v in _TO_BITS.items()}


def _and(a: int, b: int) -> int:
    return ((a & b) & 2) | ((a | b) & 1)


def _or(a: int, b: int) -> int:
    return ((a | b) & 2) | ((a & b) & 1)


def _neg(a: int) -> int:
    return ((a & 1) << 1) | ((a & 2) >> 1)


@dataclass
class FixpointReport:
    """Result of a bounded fixpoint computation."""

    result: ExtensionalInterpretation
    iterations: int
    stable: bool
    depth_bound: int
    #: head atoms whose bodies reference ground atoms outside the
    #: carrier; their values are boundary artifacts (u), not limits.
    boundary_atoms: list[Atom] = field(default_factory=list)


def phi(
    program: Program,
    I,
    carrier: Universe | None = None,
    horizon: bool = False,
    boundary: list[Atom] | None = None,
) -> ExtensionalInterpretation:
    """One application of the immediate-consequence operator.

    The value of each carrier head atom in the result is the value of
    its completed-definition body under I.  Predicates without clauses
    have the empty-disjunction body, hence come out f everywhere.
    """
    if carrier is None:
        carrier = I.carrier
    defs = complete(program.clauses)
    true_set: set[Atom] = set()
    false_set: set[Atom] = set()
    memo: dict = {}
    for a in carrier.atoms:
        defn = defs.get((a.pred, len(a.args)))
        if defn is None:
            v = TV.F
        else:
            theta = unify_atoms(defn.head, a)
            v = eval_body(I, theta.apply_disj(defn.body), carrier, horizon, boundary,
                          memo=memo)
        if v in (TV.T, TV.I):
            true_set.add(a)
        if v in (TV.F, TV.I):
            false_set.add(a)
    return ExtensionalInterpretation(true_set, false_set, carrier)


# ---------------------------------------------------------------------------
# Compiled evaluation plans
#
# Body values under a changing interpretation are needed once per atom
# per iteration; everything except the atom values themselves (equality
# solving, existential instantiation over the carrier, out-of-carrier
# detection) is interpretation-independent, so it is done once, up
# front.  A plan is a disjunction of instances; an instance is a static
# truth value (the conjunction of all literals decided at compile time)
# together with references to carrier atoms and horizon-tail patterns.
# The compilation mirrors interp._eval_conj literal by literal so the
# compiled result provably computes the same value.


#: (pattern, deep vars, cache key, negated); a pattern of None marks a
#: resolved out-of-carrier ground reference, with deep_vars holding the
#: proxy atom indices instead
_Tail = tuple[Atom | None, tuple, str, bool]


@dataclass
class _Instance:
    static: int
    lits: list[tuple[int, bool]]   # (atom index, negated)
    tails: list[_Tail]


class _Compiler:
    def __init__(self, carrier: Universe, atom_index: dict[Atom, int]):
        self.carrier = carrier
        self.atom_index = atom_index
        # same index keyed by (pred, args): avoids Atom construction on
        # the instantiation fast path
        self.flat_index = {(a.pred, a.args): i for a, i in atom_index.items()}
        self.boundary = False

    def out_ref(self, a: Atom, negated: bool) -> _Tail | None:
        """Tail for an out-of-carrier ground reference: the majority
        value of its in-carrier truncated stand-ins (no stage
        requirement — each standard ground atom is decided at its own
        finite stage)."""
        proxies = deep_reference_proxies(a, self.carrier.d)
        if proxies is None:
            self.boundary = True
            return None
        refs = tuple(self.atom_index.get(p) for p in proxies)
        if any(r is None for r in refs):
            self.boundary = True
            return None
        return (None, refs, "", negated)

    def compile_body(self, body: Disj) -> list[_Instance]:
        out: list[_Instance] = []
        for conj in body.conjuncts:
            out.extend(self.compile_conj(list(conj.literals), Substitution()))
        return out

    def compile_conj(self, lits: list[Literal], subst: Substitution) -> list[_Instance]:
        lits = [subst.apply_literal(l) for l in lits]
        static = 2  # t, the conjunction unit
        ground: list[tuple[int, bool]] = []
        gtails: list[_Tail] = []
        deferred: list[Literal] = []
        for idx, lit in enumerate(lits):
            a = lit.atom
            if a.pred == EQ and len(a.args) == 2:
                lhs, rhs = a.args
                if is_ground(lhs) and is_ground(rhs):
                    v = 2 if lhs == rhs else 1
                    static = _and(static, v if lit.positive else _neg(v))
                    if static == 1:
                        return []
                    continue
                if lit.positive:
                    theta = unify(lhs, rhs)
                    if theta is None:
                        return []
                    rest = lits[idx + 1 :]
                    inner = self.compile_conj(deferred + rest, theta)
                    return [_Instance(_and(static, i.static), ground + i.lits,
                                      gtails + i.tails)
                            for i in inner]
                deferred.append(lit)
                continue
            if atom_is_ground(a):
                ref = self.atom_index.get(a)
                if ref is None:
                    tail = self.out_ref(a, not lit.positive)
                    if tail is None:
                        static = _and(static, 0)
                    else:
                        gtails.append(tail)
                else:
                    ground.append((ref, not lit.positive))
                continue
            deferred.append(lit)
        if not deferred:
            return [_Instance(static, ground, gtails)]
        free = sorted({v for lit in deferred for v in literal_vars(lit)},
                      key=lambda v: v.name)
        var = free[0]
        out: list[_Instance] = []
        # fast path: one free variable, occurring only at top-level
        # argument positions of ordinary atoms — instantiate by direct
        # index lookup instead of substitution
        fast = len(free) == 1 and all(
            lit.atom.pred != EQ
            and all(is_ground(x) or x == var for x in lit.atom.args)
            for lit in deferred
        )
        if fast:
            flat = self.flat_index
            shapes = [
                (lit.atom.pred,
                 [x if is_ground(x) else None for x in lit.atom.args],
                 not lit.positive)
                for lit in deferred
            ]
            for t in self.carrier.terms:
                lits2 = ground[:]
                tails2 = gtails[:]
                s2 = static
                for pred, args, negated in shapes:
                    inst_args = tuple(x if x is not None else t for x in args)
                    ref = flat.get((pred, inst_args))
                    if ref is None:
                        tail = self.out_ref(Atom(pred, inst_args), negated)
                        if tail is None:
                            s2 = _and(s2, 0)
                        else:
                            tails2.append(tail)
                    else:
                        lits2.append((ref, negated))
                out.append(_Instance(s2, lits2, tails2))
        else:
            for t in self.carrier.terms:
                for inst in self.compile_conj(deferred, Substitution({var: t})):
                    out.append(_Instance(_and(static, inst.static),
                                         ground + inst.lits, gtails + inst.tails))
        deep = (None if self.carrier.exhaustive
                else self.compile_deep(deferred, var))
        if deep is not None:
            out.append(_Instance(_and(static, deep.static),
                                 ground + deep.lits, gtails + deep.tails))
        return out

    def compile_deep(self, lits: list[Literal], deep_var: Var) -> _Instance | None:
        static = 2
        ground: list[tuple[int, bool]] = []
        tails: list[_Tail] = []
        for lit in lits:
            a = lit.atom
            if a.pred == EQ and len(a.args) == 2:
                if not lit.positive:
                    static = _and(static, 0)
                    continue
                theta = unify(*a.args)
                if theta is None:
                    return None
                if is_ground(theta.apply(deep_var)):
                    # the equality pins the deep variable to a carrier
                    # term: there are no out-of-carrier instances
                    return None
                static = _and(static, 0)
                continue
            if atom_is_ground(a):
                ref = self.atom_index.get(a)
                if ref is None:
                    tail = self.out_ref(a, not lit.positive)
                    if tail is None:
                        static = _and(static, 0)
                    else:
                        tails.append(tail)
                else:
                    ground.append((ref, not lit.positive))
                continue
            if deep_var in literal_vars(lit):
                tails.append((a, (deep_var,), _canonical_key(a, (deep_var,)),
                              not lit.positive))
            else:
                static = _and(static, 0)
        return _Instance(static, ground, tails)


def _majority(values: list[int], refs: tuple) -> int:
    """Bit-encoded majority over truncation-level proxies (0 when no
    two levels agree on a decided value)."""
    v1 = values[refs[0]]
    v2 = values[refs[1]]
    if len(refs) == 2:
        return v1 if v1 == v2 else 0
    v3 = values[refs[2]]
    if v1 == v2 or v1 == v3:
        return v1
    if v2 == v3:
        return v2
    return 0


class _Extrapolator:
    """Extrapolation over the working value/stage arrays.

    Deep variables range over the two deepest carrier layers, other
    variables over the whole carrier.  Both layers must agree in value
    and in latest decision stage — growing stages mean the unbounded
    join stays undefined.  (Individual out-of-carrier ground references
    are resolved by truncation-proxy majority instead; see _majority.)
    """

    def __init__(self, carrier: Universe, atom_index: dict[Atom, int]):
        self.carrier = carrier
        self.atom_index = atom_index
        layers = [l for l in carrier.layers if l]
        self.top_layers = layers[-2:] if len(layers) >= 2 else []
        self.cache: dict[str, int] = {}

    def reset(self) -> None:
        self.cache.clear()

    def value(self, pattern: Atom, deep_vars: tuple[Var, ...], key: str,
              values: list[int], stages: list[int]) -> int:
        if not self.top_layers:
            return 0
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        deep_set = set(deep_vars)
        others = sorted({v for v in _pattern_vars(pattern) if v not in deep_set},
                        key=lambda v: v.name)
        per_layer: list[tuple[set[int], int]] = []
        for layer in self.top_layers:
            seen: set[int] = set()
            max_stage = -1
            for inst in _instantiations(
                pattern, list(deep_vars), layer, others, self.carrier.terms
            ):
                idx = self.atom_index.get(inst)
                if idx is None:
                    self.cache[key] = 0
                    return 0
                v = values[idx]
                seen.add(v)
                if v != 0:
                    max_stage = max(max_stage, stages[idx])
            per_layer.append((seen, max_stage))
        (v1, s1), (v2, s2) = per_layer
        if v1 != v2 or len(v1) != 1:
            result = 0
        elif s1 != s2:
            result = 0
        else:
            result = next(iter(v1))
        self.cache[key] = result
        return result


def _pattern_vars(a: Atom) -> set[Var]:
    out: set[Var] = set()

    def go(t: Term) -> None:
        if isinstance(t, Var):
            out.add(t)
        else:
            for x in t.args:
                go(x)

    for t in a.args:
        go(t)
    return out


def _canonical_key(pattern: Atom, deep_vars: tuple[Var, ...]) -> str:
    names: dict[Var, str] = {v: f"_D{i}" for i, v in enumerate(deep_vars)}

    def go(t: Term) -> str:
        if isinstance(t, Var):
            if t not in names:
                names[t] = f"_O{len(names)}"
            return names[t]
        if not t.args:
            return t.functor
        return t.functor + "(" + ",".join(go(a) for a in t.args) + ")"

    return pattern.pred + "(" + ",".join(go(t) for t in pattern.args) + ")"


def _split_conjunct(conj: Conj, arity: int) -> tuple[tuple[Term, ...], tuple[Literal, ...]]:
    """Split a completed-definition conjunct into the clause-head argument
    patterns (from the leading V_i = t_i equalities) and the remaining
    literals, so head groundings can be compiled by one-way matching
    instead of equality solving."""
    lits = conj.literals
    pattern: list[Term] = []
    for j in range(arity):
        lit = lits[j]
        assert lit.positive and lit.atom.pred == EQ and isinstance(lit.atom.args[0], Var)
        pattern.append(lit.atom.args[1])
    return tuple(pattern), lits[arity:]


def _resolve(t: Term, bindings: dict[Var, Term]) -> Term:
    if isinstance(t, Var):
        return bindings.get(t, t)
    if t.ground or not t.args:
        return t
    return Compound(t.functor, tuple(_resolve(x, bindings) for x in t.args))


def _compile_atom(
    a: Atom,
    conj_plans: list[tuple[tuple[Term, ...], tuple[Literal, ...]]],
    compiler: _Compiler,
) -> list[tuple[int, list[tuple[int, bool]], tuple]]:
    """Evaluation plan for one head grounding: match each clause's head
    pattern against the atom, resolve the body under the bindings, and
    reduce it to (static value, atom references, horizon tails) triples.
    Anything beyond ground literals plus a single top-level existential
    variable falls back to the generic compiler, which replays the body
    evaluation rules literal by literal."""
    out: list[tuple[int, list[tuple[int, bool]], tuple]] = []
    flat = compiler.flat_index
    terms = compiler.carrier.terms
    for pattern_args, rest in conj_plans:
        bindings: dict[Var, Term] = {}
        if not all(_match(p, x, bindings) for p, x in zip(pattern_args, a.args)):
            continue
        static = 2  # t, the conjunction unit
        glits: list[tuple[int, bool]] = []
        gtails: list[_Tail] = []
        deferred: list[tuple[str, tuple[Term, ...], bool]] = []
        bail = False
        for lit in rest:
            la = lit.atom
            rargs = tuple(_resolve(x, bindings) for x in la.args)
            if la.pred == EQ and len(rargs) == 2:
                lhs, rhs = rargs
                if is_ground(lhs) and is_ground(rhs):
                    v = 2 if lhs == rhs else 1
                    static = _and(static, v if lit.positive else _neg(v))
                    if static == 1:
                        break
                else:
                    bail = True
                    break
                continue
            if all(is_ground(x) for x in rargs):
                ref = flat.get((la.pred, rargs))
                if ref is None:
                    tail = compiler.out_ref(Atom(la.pred, rargs), not lit.positive)
                    if tail is None:
                        static = _and(static, 0)
                    else:
                        gtails.append(tail)
                else:
                    glits.append((ref, not lit.positive))
                continue
            deferred.append((la.pred, rargs, lit.positive))
        if static == 1 and not bail:
            continue
        if not bail and not deferred:
            out.append((static, glits, tuple(gtails)))
            continue
        if not bail:
            evars: set[Var] = set()
            top_level = True
            for _pred, rargs, _pos in deferred:
                for x in rargs:
                    if isinstance(x, Var):
                        evars.add(x)
                    elif not x.ground:
                        top_level = False
            if top_level and len(evars) == 1:
                (var,) = evars
                for t in terms:
                    lits2 = glits[:]
                    tails2 = gtails[:]
                    s2 = static
                    for pred, rargs, positive in deferred:
                        inst_args = tuple(t if isinstance(x, Var) else x for x in rargs)
                        ref = flat.get((pred, inst_args))
                        if ref is None:
                            tail = compiler.out_ref(Atom(pred, inst_args), not positive)
                            if tail is None:
                                s2 = _and(s2, 0)
                            else:
                                tails2.append(tail)
                        else:
                            lits2.append((ref, not positive))
                    out.append((s2, lits2, tuple(tails2)))
                if not compiler.carrier.exhaustive:
                    tails = tuple(gtails) + tuple(
                        (Atom(pred, rargs), (var,),
                         _canonical_key(Atom(pred, rargs), (var,)), not positive)
                        for pred, rargs, positive in deferred
                    )
                    out.append((static, glits, tails))
                continue
            bail = True
        if bail:
            for inst in compiler.compile_conj(
                list(rest), Substitution(dict(bindings))
            ):
                out.append((inst.static, inst.lits, tuple(inst.tails)))
    return out


def _pred_sccs(body_preds: dict[str, set[str]]) -> list[set[str]]:
    """Strongly connected components of the predicate dependency graph,
    emitted callees-first (so each component's dependencies are already
    final when it is iterated)."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[set[str]] = []
    counter = itertools.count()

    def visit(v: str) -> None:
        index[v] = low[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        for w in sorted(body_preds.get(v, ())):
            if w not in body_preds:
                continue
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp: set[str] = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.add(w)
                if w == v:
                    break
            sccs.append(comp)

    for v in sorted(body_preds):
        if v not in index:
            visit(v)
    return sccs


def lfp(
    program: Program,
    d: int,
    max_iters: int | None = None,
    cap: int = 500_000,
    carrier: Universe | None = None,
) -> FixpointReport:
    """Least fixpoint of the immediate-consequence operator over universe(d).

    Iterates from the all-undefined interpretation until two successive
    iterations agree, recording for each atom the iteration at which it
    first left u (its decision stage, consumed by the extrapolator).
    """
    if carrier is None:
        carrier = universe(program, d, cap)
    defs = complete(program.clauses)
    atom_index = {a: i for i, a in enumerate(carrier.atoms)}
    n = len(carrier.atoms)

    compiler = _Compiler(carrier, atom_index)
    plans: list[list[tuple[int, list[tuple[int, bool]], tuple]]] = [[] for _ in range(n)]
    boundary: list[Atom] = []
    atoms_by_pred: dict[str, list[int]] = {}
    for i, a in enumerate(carrier.atoms):
        atoms_by_pred.setdefault(a.pred, []).append(i)
    body_preds: dict[str, set[str]] = {}
    for pred, _arity in carrier.predicate_keys:
        defn = defs.get((pred, _arity))
        body_preds[pred] = (
            {
                lit.atom.pred
                for conj in defn.body.conjuncts
                for lit in conj.literals
                if lit.atom.pred != EQ
            }
            if defn is not None
            else set()
        )
        if defn is None:
            continue
        conj_plans = [_split_conjunct(conj, _arity) for conj in defn.body.conjuncts]
        for i in atoms_by_pred.get(pred, []):
            compiler.boundary = False
            plans[i] = _compile_atom(carrier.atoms[i], conj_plans, compiler)
            if compiler.boundary:
                boundary.append(carrier.atoms[i])

    extrap = _Extrapolator(carrier, atom_index)
    values = [0] * n
    stages = [-1] * n
    iterations = 0
    stable = True
    for scc in _pred_sccs(body_preds):
        scc_atoms = [i for p in sorted(scc) for i in atoms_by_pred.get(p, [])]
        limit = max_iters if max_iters is not None else 2 * len(scc_atoms) + 2
        changed_preds: frozenset[str] | None = None  # first round: evaluate all
        rounds = 0
        scc_stable = False
        while rounds < limit:
            rounds += 1
            iterations += 1
            extrap.reset()
            new_values = values[:]
            round_changes: set[str] = set()
            for i in scc_atoms:
                if changed_preds is not None and not (
                    body_preds[carrier.atoms[i].pred] & changed_preds
                ):
                    continue
                acc = 1  # f, the disjunction unit
                for static, lits, tails in plans[i]:
                    iv = static
                    for ref, negated in lits:
                        x = values[ref]
                        if negated:
                            x = ((x & 1) << 1) | ((x & 2) >> 1)
                        iv = ((iv & x) & 2) | ((iv | x) & 1)
                        if iv == 1:
                            break
                    if iv != 1:
                        for pattern, deep_vars, key, negated in tails:
                            if pattern is None:
                                x = _majority(values, deep_vars)
                            else:
                                x = extrap.value(
                                    pattern, deep_vars, key, values, stages
                                )
                            if negated:
                                x = ((x & 1) << 1) | ((x & 2) >> 1)
                            iv = ((iv & x) & 2) | ((iv | x) & 1)
                            if iv == 1:
                                break
                    acc = ((acc | iv) & 2) | ((acc & iv) & 1)
                    if acc == 2:
                        break
                if acc != values[i]:
                    new_values[i] = acc
                    round_changes.add(carrier.atoms[i].pred)
                    if values[i] == 0:
                        stages[i] = iterations
            if not round_changes:
                scc_stable = True
                break
            values = new_values
            changed_preds = frozenset(round_changes)
        if not scc_stable:
            stable = False

    # An out-of-carrier ground reference whose extrapolation stayed
    # undecided leaves its head atom's value a boundary artifact.
    extrap.reset()
    flagged: set[int] = set()
    for i in range(n):
        for _static, _lits, tails in plans[i]:
            for pattern, deep_vars, key, _negated in tails:
                if pattern is None and i not in flagged:
                    if _majority(values, deep_vars) == 0:
                        flagged.add(i)
    boundary.extend(carrier.atoms[i] for i in sorted(flagged))

    true_set: set[Atom] = set()
    false_set: set[Atom] = set()
    stage_map: dict[Atom, int] = {}
    for i, a in enumerate(carrier.atoms):
        if values[i] & 2:
            true_set.add(a)
        if values[i] & 1:
            false_set.add(a)
        if stages[i] >= 0:
            stage_map[a] = stages[i]
    result = ExtensionalInterpretation(true_set, false_set, carrier, stages=stage_map)
    return FixpointReport(result, iterations, stable, d, boundary)


# ---------------------------------------------------------------------------
# Depth-k analysis


class NegationError(Exception):
    """The depth-k analysis supports negation-free programs only."""


@dataclass
class AbstractInterpretation:
    """Pair of possibly non-ground atom sets; an atom denotes all its
    ground instances, and the sets may overlap (such instances read i:
    "don't know")."""

    true_atoms: list[Atom]
    false_atoms: list[Atom]
    k: int


def _match(pattern: Term, t: Term, bindings: dict[Var, Term]) -> bool:
    """One-way matching: instantiates pattern variables only."""
    if isinstance(pattern, Var):
        bound = bindings.get(pattern)
        if bound is None:
            bindings[pattern] = t
            return True
        return bound == t
    if isinstance(t, Var):
        return False
    if pattern.functor != t.functor or len(pattern.args) != len(t.args):
        return False
    return all(_match(p, x, bindings) for p, x in zip(pattern.args, t.args))


def _instance_of(a: Atom, pattern: Atom) -> bool:
    if a.pred != pattern.pred or len(a.args) != len(pattern.args):
        return False
    bindings: dict[Var, Term] = {}
    return all(_match(p, x, bindings) for p, x in zip(pattern.args, a.args))


def _variant_key(a: Atom) -> str:
    names: dict[Var, str] = {}

    def go(t: Term) -> str:
        if isinstance(t, Var):
            if t not in names:
                names[t] = f"_V{len(names)}"
            return names[t]
        if not t.args:
            return t.functor
        return t.functor + "(" + ",".join(go(x) for x in t.args) + ")"

    return a.pred + "(" + ",".join(go(t) for t in a.args) + ")"


def _shape_terms(alphabet: list[tuple[str, int]], k: int) -> list[Term]:
    """All terms of depth <= k whose leaves are constants or variables,
    with every variable occurrence distinct (canonical candidate shapes)."""
    by_depth: list[list[Term]] = []
    for level in range(1, k + 1):
        layer: list[Term] = []
        if level == 1:
            layer.append(Var("_shape"))  # placeholder, freshened on use
            layer.extend(Compound(f) for f, ar in alphabet if ar == 0)
        else:
            pool = [t for lvl in by_depth for t in lvl]
            for functor, arity in alphabet:
                if arity == 0:
                    continue
                for combo in itertools.product(pool, repeat=arity):
                    if 1 + max(depth(x) for x in combo) == level:
                        layer.append(Compound(functor, combo))
        by_depth.append(layer)
    out = [t for lvl in by_depth for t in lvl]
    return [_freshen(t) for t in out]


def _freshen(t: Term) -> Term:
    if isinstance(t, Var):
        return fresh_var()
    if not t.args:
        return t
    return Compound(t.functor, tuple(_freshen(x) for x in t.args))


def analyze_depthk(program: Program, k: int, max_rounds: int = 10_000) -> AbstractInterpretation:
    """Bottom-up depth-k approximation of the program's meaning.

    The true set is derived forwards: unify clause bodies with derived
    atoms (renamed apart), prune the instantiated head to depth k.  The
    false set contains atoms every ground instance of which fails: an
    atom qualifies when, for every clause whose head it unifies with,
    some body literal of the unified instance is an instance of an
    already-false atom.  Candidates are all depth-bounded constructor
    shapes plus heads reached backwards through clause bodies from known
    false atoms (whose pruning is what introduces the overlap between
    the two sets).
    """
    if k < 1:
        raise ValueError("depth bound must be at least 1")
    clauses = program.clauses
    for c in clauses:
        for lit in _clause_body_literals(c):
            if not lit.positive:
                raise NegationError(
                    "depth-k analysis is defined for negation-free programs"
                )

    # --- true set: non-ground forward derivation with pruning
    true_atoms: list[Atom] = []
    seen_t: set[str] = set()
    for _ in range(max_rounds):
        added = False
        for c in clauses:
            body = [lit.atom for lit in _clause_body_literals(c)]
            for combo in itertools.product(true_atoms, repeat=len(body)):
                # each picked atom freshly renamed, apart from the
                # clause and from every other pick
                picks = [rename_apart(_pattern_vars(a)).apply_atom(a) for a in combo]
                subst = Substitution()
                for b, a in zip(body, picks):
                    subst = unify_atoms(b, a, subst)
                    if subst is None:
                        break
                if subst is None:
                    continue
                derived = prune_atom(subst.apply_atom(c.head), k)
                key = _variant_key(derived)
                if key not in seen_t:
                    seen_t.add(key)
                    true_atoms.append(derived)
                    added = True
        if not added:
            break

    # --- false set
    heads_by_pred: dict[tuple[str, int], list] = {}
    for c in clauses:
        heads_by_pred.setdefault((c.head.pred, len(c.head.args)), []).append(c)
    alphabet = sorted(program.alphabet())
    shapes = _shape_terms(alphabet, k)
    candidates: list[Atom] = []
    for pred, arity in sorted(program.predicate_keys()):
        for combo in itertools.product(shapes, repeat=arity):
            candidates.append(Atom(pred, tuple(_freshen(x) for x in combo)))

    false_atoms: list[Atom] = []
    seen_f: set[str] = set()

    def qualifies(a: Atom) -> bool:
        for c in heads_by_pred.get((a.pred, len(a.args)), []):
            cvars = _pattern_vars(c.head)
            for l in _clause_body_literals(c):
                cvars |= literal_vars(l)
            ren = rename_apart(cvars)
            sigma = unify_atoms(ren.apply_atom(c.head), a)
            if sigma is None:
                continue
            body = [sigma.apply_atom(ren.apply_atom(l.atom))
                    for l in _clause_body_literals(c)]
            if not any(
                any(_instance_of_open(b, f) for f in false_atoms) for b in body
            ):
                return False
        return True

    for _ in range(max_rounds):
        added = False
        derived: list[Atom] = []
        for f in false_atoms:
            for c in clauses:
                for lit in _clause_body_literals(c):
                    ren = rename_apart(_pattern_vars(f))
                    theta = unify_atoms(lit.atom, ren.apply_atom(f))
                    if theta is not None:
                        derived.append(theta.apply_atom(c.head))
        for a in candidates + derived:
            key = _variant_key(prune_atom(a, k))
            if key in seen_f:
                continue
            if qualifies(a):
                pruned = prune_atom(a, k)
                seen_f.add(_variant_key(pruned))
                false_atoms.append(pruned)
                added = True
        if not added:
            break

    return AbstractInterpretation(true_atoms, false_atoms, k)


def _instance_of_open(a: Atom, pattern: Atom) -> bool:
    """Whether every ground instance of a is an instance of pattern:
    pattern must match a one-way (binding only pattern variables)."""
    return _instance_of(a, pattern)


def _clause_body_literals(c) -> list[Literal]:
    from belnaplp.syntax import BodyAnd, BodyLit, BodyOr, BodyTrue

    out: list[Literal] = []

    def go(b) -> None:
        if isinstance(b, BodyLit):
            out.append(b.literal)
        elif isinstance(b, (BodyAnd, BodyOr)):
            go(b.left)
            go(b.right)
        elif isinstance(b, BodyTrue):
            pass

    go(c.body)
    return out


def concretize(abstract: AbstractInterpretation, carrier: Universe) -> ExtensionalInterpretation:
    """Read the abstract pair as a four-valued interpretation on the carrier."""
    true_set: set[Atom] = set()
    false_set: set[Atom] = set()
    for a in carrier.atoms:
        if any(_instance_of(a, p) for p in abstract.true_atoms):
            true_set.add(a)
        if any(_instance_of(a, p) for p in abstract.false_atoms):
            false_set.add(a)
    return ExtensionalInterpretation(true_set, false_set, carrier)
