"""Four-valued interpretations over ground atoms and body evaluation.

An interpretation maps every ground atom of a bounded carrier to one of
the four truth values.  Two representations are provided:

* extensional — a pair of ground-atom sets (true set, false set); an
  atom is u if in neither set, f if only in the false set, t if only in
  the true set, and i if in both;
* intensional — ordered pattern rules ``value pattern [when guards]``
  with a mandatory default, where guards are type-membership tests or
  goals over an auxiliary definite program.

``eval_body`` evaluates existentially closed disjunctions of literal
conjunctions: equality atoms are decided syntactically, conjunction and
disjunction fold with the truth-ordering meet and join, and existential
variables range over the finite carrier.  With ``horizon=True`` the
fold additionally accounts for out-of-carrier ("nonstandard")
instantiations via the interpretation's extrapolator; this is what lets
bounded model checks agree with the unbounded semantics on programs
whose existential bodies are false only non-compactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from belnaplp.bilattice import TV, and4, or4, neg4, meet_info, info_leq, parse_tv
from belnaplp.syntax import (
    EQ,
    Atom,
    Compound,
    Conj,
    Disj,
    Literal,
    Program,
    Substitution,
    TypeDecl,
    Universe,
    Var,
    atom_is_ground,
    atom_to_str,
    atom_vars,
    depth,
    fresh_var,
    has_type,
    is_ground,
    literal_vars,
    parse_atom,
    parse_program,
    parse_query,
    unify,
    unify_atoms,
)


class CarrierError(Exception):
    """A ground atom fell outside the interpretation's carrier."""


def equality_value(a: Atom) -> TV:
    """Equality atoms bypass the interpretation: identical ground terms are t."""
    lhs, rhs = a.args
    return TV.T if lhs == rhs else TV.F


# ---------------------------------------------------------------------------
# Extensional representation


class ExtensionalInterpretation:
    """A pair of ground atom sets over a bounded carrier."""

    def __init__(
        self,
        true_set: set[Atom],
        false_set: set[Atom],
        carrier: Universe,
        stages: dict[Atom, int] | None = None,
        strict: bool = True,
    ):
        self.true_set = frozenset(true_set)
        self.false_set = frozenset(false_set)
        self.carrier = carrier
        #: iteration stage at which each decided atom first left u (when
        #: produced by the fixpoint engine); used by the extrapolator.
        self.stages = stages
        self.strict = strict
        self._extrapolate_cache: dict = {}

    def value_of(self, a: Atom) -> TV:
        if a.pred == EQ and len(a.args) == 2:
            return equality_value(a)
        if self.strict and not self.carrier.contains_atom(a):
            raise CarrierError(f"atom outside carrier: {atom_to_str(a)}")
        in_t = a in self.true_set
        in_f = a in self.false_set
        if in_t and in_f:
            return TV.I
        if in_t:
            return TV.T
        if in_f:
            return TV.F
        return TV.U

    def extrapolate(self, pattern: Atom, deep_vars: set[Var]) -> TV:
        """Value of the pattern's out-of-carrier instances.

        Deep variables are instantiated over the two deepest carrier
        layers; other variables range over the whole carrier.  The
        extrapolated value is the layers' shared value when both layers
        agree and (when stages are recorded) were decided at the same
        latest stage — a decision stage that keeps growing with depth
        means the unbounded iteration never decides the existential
        join, so u is returned.  (Individual out-of-carrier ground
        references are handled separately, by truncation proxies.)
        """
        key = (pattern, frozenset(deep_vars))
        cached = self._extrapolate_cache.get(key)
        if cached is not None:
            return cached
        result = self._extrapolate(pattern, deep_vars)
        self._extrapolate_cache[key] = result
        return result

    def _extrapolate(self, pattern: Atom, deep_vars: set[Var]) -> TV:
        layers = [l for l in self.carrier.layers if l]
        if len(layers) < 2:
            return TV.U
        deep = sorted(deep_vars, key=lambda v: v.name)
        other = sorted(
            {v for v in _atom_vars_ordered(pattern) if v not in deep_vars},
            key=lambda v: v.name,
        )
        per_layer: list[tuple[set[TV], int]] = []
        for layer in layers[-2:]:
            values: set[TV] = set()
            max_stage = -1
            for inst in _instantiations(pattern, deep, layer, other, self.carrier.terms):
                if not self.carrier.contains_atom(inst):
                    return TV.U
                v = self.value_of(inst)
                values.add(v)
                if self.stages is not None and v is not TV.U:
                    max_stage = max(max_stage, self.stages.get(inst, -1))
            per_layer.append((values, max_stage))
        (vals1, stage1), (vals2, stage2) = per_layer
        if not vals1 or not vals2:
            return TV.U
        if vals1 != vals2 or len(vals1) != 1:
            return TV.U
        value = next(iter(vals1))
        if value is TV.U:
            return TV.U
        if self.stages is not None and stage1 != stage2:
            return TV.U
        return value

    def dump(self) -> str:
        """Sorted `atom value` lines (canonical term printing)."""
        lines = []
        for a in self.carrier.atoms:
            lines.append(f"{atom_to_str(a)} {self.value_of(a).value}")
        return "\n".join(lines) + "\n"


def _atom_vars_ordered(a: Atom) -> list[Var]:
    out: list[Var] = []

    def go(t):
        if isinstance(t, Var):
            if t not in out:
                out.append(t)
        else:
            for x in t.args:
                go(x)

    for t in a.args:
        go(t)
    return out


def _occurs_in_fixed(t, s, deep_set) -> bool:
    """Whether t equals or occurs inside s, ignoring deep-variable holes."""
    if isinstance(s, Var) and s in deep_set:
        return False
    if t == s:
        return True
    return isinstance(s, Compound) and any(
        _occurs_in_fixed(t, x, deep_set) for x in s.args
    )


def _proxy_pool(layer, pattern, deep_set):
    """Layer terms usable as stand-ins for a deep variable.

    A term strictly deeper than the carrier bound can never equal a
    subterm of the pattern's bounded part, so proxies that collide with
    it behave unrepresentatively (e.g. they trigger a clause that
    requires two arguments to be equal).  The most generic proxies are
    preferred: collision-free ones, else those merely distinct from the
    pattern's arguments, else the whole layer.
    """
    strong = [
        t
        for t in layer
        if not any(_occurs_in_fixed(t, arg, deep_set) for arg in pattern.args)
    ]
    if strong:
        return strong
    weak = [t for t in layer if all(t != arg for arg in pattern.args)]
    return weak or list(layer)


def _instantiations(pattern, deep, deep_pool, other, other_pool):
    import itertools

    pool = _proxy_pool(deep_pool, pattern, set(deep)) if deep else deep_pool
    for deep_choice in itertools.product(pool, repeat=len(deep)):
        for other_choice in itertools.product(other_pool, repeat=len(other)):
            s = Substitution(
                dict(zip(deep, deep_choice)) | dict(zip(other, other_choice))
            )
            yield s.apply_atom(pattern)


def parse_extensional(text: str, carrier: Universe) -> ExtensionalInterpretation:
    """Parse the dump format back into an interpretation."""
    true_set: set[Atom] = set()
    false_set: set[Atom] = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        body, _, value_text = line.rpartition(" ")
        value = parse_tv(value_text)
        atom = parse_atom(body.strip())
        if value in (TV.T, TV.I):
            true_set.add(atom)
        if value in (TV.F, TV.I):
            false_set.add(atom)
    return ExtensionalInterpretation(true_set, false_set, carrier)


class TransformedInterpretation:
    """A value-for-value relabelling of another interpretation.

    Used for interpretations described as "the same as I except that u
    atoms are f/t"; the relabelling applies to extrapolated values too.
    """

    def __init__(self, base, mapping: dict[TV, TV]):
        self.base = base
        self.mapping = mapping
        self.carrier = base.carrier

    def value_of(self, a: Atom) -> TV:
        if a.pred == EQ and len(a.args) == 2:
            return equality_value(a)
        return self.mapping.get(self.base.value_of(a), self.base.value_of(a))

    def extrapolate(self, pattern: Atom, deep_vars: set[Var]) -> TV:
        v = self.base.extrapolate(pattern, deep_vars)
        return self.mapping.get(v, v)


# ---------------------------------------------------------------------------
# Pattern representation


@dataclass(frozen=True)
class PatternRule:
    value: TV
    pattern: Atom
    guards: tuple[Literal, ...] = ()


@dataclass
class PatternInterpretation:
    """Ordered first-match rules with a mandatory default value."""

    rules: list[PatternRule]
    default: TV
    types: dict[str, TypeDecl] = field(default_factory=dict)
    guard_program: Program | None = None
    guard_budget: int = 20000
    carrier: Universe | None = None

    def value_of(self, a: Atom) -> TV:
        if a.pred == EQ and len(a.args) == 2:
            return equality_value(a)
        for rule in self.rules:
            theta = unify_atoms(rule.pattern, a)
            if theta is None:
                continue
            if self._guards_hold(tuple(theta.apply_literal(g) for g in rule.guards)):
                return rule.value
        return self.default

    def extrapolate(self, pattern: Atom, deep_vars: set[Var]) -> TV:
        return TV.U

    def _guards_hold(self, guards: tuple[Literal, ...]) -> bool:
        """Type-membership guards are decided individually; the remaining
        guard literals form one conjunctive query over the auxiliary
        program, so variables shared between them are threaded."""
        goal_lits: list[Literal] = []
        for guard in guards:
            atom = guard.atom
            if atom.pred in self.types and len(atom.args) == 1:
                decl = self.types[atom.pred]
                ok = has_type(atom.args[0], _type_expr_of(decl), self.types)
                if not (ok if guard.positive else not ok):
                    return False
                continue
            goal_lits.append(guard)
        if not goal_lits:
            return True
        if self.guard_program is None:
            raise ValueError(
                f"guard predicate {goal_lits[0].atom.pred} has no definition"
            )
        from belnaplp import sld

        outcome = sld.solve(self.guard_program, Conj(tuple(goal_lits)), self.guard_budget)
        if isinstance(outcome, sld.Succeeds):
            return True
        if isinstance(outcome, sld.FinitelyFails):
            return False
        raise ValueError("guard goal did not terminate within budget")

    def materialize(self, carrier: Universe) -> ExtensionalInterpretation:
        true_set, false_set = set(), set()
        for a in carrier.atoms:
            v = self.value_of(a)
            if v in (TV.T, TV.I):
                true_set.add(a)
            if v in (TV.F, TV.I):
                false_set.add(a)
        return ExtensionalInterpretation(true_set, false_set, carrier)


def _type_expr_of(decl: TypeDecl):
    from belnaplp.syntax import Compound, fresh_var

    # a bare type name in a guard means "inhabits the type for some
    # instantiation of its parameters"
    return Compound(decl.name, tuple(fresh_var() for _ in decl.params))


def parse_pattern_interpretation(
    text: str,
    types: dict[str, TypeDecl] | None = None,
) -> PatternInterpretation:
    """Parse the rule-file format.

    One rule per line: ``value pattern [when goal, goal, ...]``; a line
    ``default value``; and an optional trailing section introduced by a
    line ``where`` holding definite clauses for guard predicates.
    """
    rules: list[PatternRule] = []
    default: TV | None = None
    lines = text.splitlines()
    guard_lines: list[str] = []
    in_where = False
    for raw in lines:
        line = raw.strip()
        if in_where:
            guard_lines.append(raw)
            continue
        if not line or line.startswith("%"):
            continue
        if line == "where":
            in_where = True
            continue
        if line.startswith("default"):
            default = parse_tv(line.split(None, 1)[1])
            continue
        value_text, _, rest = line.partition(" ")
        value = parse_tv(value_text)
        pattern_text, _, guard_text = rest.partition(" when ")
        pattern = parse_atom(pattern_text.strip())
        guards: tuple[Literal, ...] = ()
        if guard_text.strip():
            guards = parse_query(guard_text.strip()).literals
        rules.append(PatternRule(value, pattern, guards))
    if default is None:
        raise ValueError("pattern interpretation needs a `default value` line")
    guard_program = parse_program("\n".join(guard_lines)) if guard_lines else None
    return PatternInterpretation(rules, default, dict(types or {}), guard_program)


# ---------------------------------------------------------------------------
# Body evaluation


def value_of(I, a: Atom) -> TV:
    """Atom value under an interpretation, with the equality special case."""
    if a.pred == EQ and len(a.args) == 2:
        return equality_value(a)
    return I.value_of(a)


def eval_body(I, body: Disj, carrier: Universe, horizon: bool = False,
              boundary: list[Atom] | None = None,
              memo: dict | None = None) -> TV:
    """Value of an existentially closed disjunction of conjunctions.

    Literals are looked up in I (equality decided syntactically, negation
    via the truth-ordering reflection); conjunction folds with the truth
    meet, disjunction and the existential closure fold with the truth
    join over carrier instantiations.  With horizon=True the existential
    fold also includes the extrapolated contribution of out-of-carrier
    instantiations (see the module docstring).  When a list is passed as
    ``boundary``, every ground atom the body references outside the
    carrier is appended to it: such atoms read u by fiat, so the caller
    may want to treat the result as a boundary artifact.
    """
    acc = TV.F
    for conj in body.conjuncts:
        acc = or4(acc, _eval_conj(I, list(conj.literals), Substitution(), carrier,
                                  horizon, boundary, memo))
        if acc is TV.T:
            # references skipped by the short-circuit cannot affect the
            # value, so boundary tracking stays exact
            return acc
    return acc


def _eval_conj(I, lits: list[Literal], subst: Substitution, carrier: Universe,
               horizon: bool, boundary: list[Atom] | None = None,
               memo: dict | None = None) -> TV:
    lits = [subst.apply_literal(l) for l in lits]
    acc = TV.T
    deferred: list[Literal] = []
    for idx, lit in enumerate(lits):
        a = lit.atom
        if a.pred == EQ and len(a.args) == 2:
            lhs, rhs = a.args
            if is_ground(lhs) and is_ground(rhs):
                v = equality_value(a)
                acc = and4(acc, v if lit.positive else neg4(v))
                if acc is TV.F:
                    return TV.F
                continue
            if lit.positive:
                theta = unify(lhs, rhs)
                if theta is None:
                    # no instantiation satisfies the equality: every
                    # instance of the conjunction is false
                    return TV.F
                # instances violating the equality contribute f, the
                # join's identity, so only the unified residue matters
                rest = lits[idx + 1 :]
                inner = _eval_conj(I, deferred + rest, theta, carrier, horizon,
                                   boundary, memo)
                return and4(acc, inner)
            deferred.append(lit)
            continue
        if atom_is_ground(a):
            v = _atom_value(I, a, carrier, boundary, horizon)
            acc = and4(acc, v if lit.positive else neg4(v))
            if acc is TV.F:
                return TV.F
            continue
        deferred.append(lit)
    if not deferred:
        return acc
    free = sorted({v for lit in deferred for v in literal_vars(lit)}, key=lambda v: v.name)
    var = free[0]
    # the fold below is a pure function of the residual literals (the
    # quantified variable is chosen deterministically), so a per-pass
    # memo shares it across head groundings with a common subgoal
    key = None
    if memo is not None:
        key = tuple((lit.positive, lit.atom) for lit in deferred)
        hit = memo.get(key)
        if hit is not None:
            fold, touched = hit
            if boundary is not None:
                boundary.extend(touched)
            return and4(acc, fold)
    inner_boundary = boundary if memo is None else []
    fold = TV.F
    if len(free) == 1 and all(l.atom.pred != EQ for l in deferred):
        # every deferred literal is a non-equality atom over the single
        # quantified variable: fold its instances directly, without the
        # generic substitution recursion
        for t in carrier.terms:
            s = Substitution({var: t})
            x = TV.T
            for lit in deferred:
                v = _atom_value(I, s.apply_atom(lit.atom), carrier,
                                inner_boundary, horizon)
                x = and4(x, v if lit.positive else neg4(v))
                if x is TV.F:
                    break
            fold = or4(fold, x)
            if fold is TV.T:
                break
    else:
        for t in carrier.terms:
            fold = or4(fold, _eval_conj(I, deferred, Substitution({var: t}), carrier,
                                        horizon, inner_boundary, memo))
            if fold is TV.T:
                break
    if horizon and fold is not TV.T and not carrier.exhaustive:
        fold = or4(fold, _eval_deep(I, deferred, var, carrier, inner_boundary))
    if memo is not None:
        memo[key] = (fold, tuple(inner_boundary))
        if boundary is not None:
            boundary.extend(inner_boundary)
    return and4(acc, fold)


def _eval_deep(I, lits: list[Literal], deep_var: Var, carrier: Universe,
               boundary: list[Atom] | None = None) -> TV:
    """Join contribution of instantiations of deep_var beyond the carrier."""
    acc = TV.T
    for lit in lits:
        a = lit.atom
        if a.pred == EQ and len(a.args) == 2:
            if not lit.positive:
                acc = and4(acc, TV.U)
                continue
            theta = unify(*a.args)
            if theta is None:
                return TV.F
            bound = theta.apply(deep_var)
            if is_ground(bound):
                # the equality forces the deep variable onto a carrier
                # term, so there are no out-of-carrier instances at all
                return TV.F
            acc = and4(acc, TV.U)
            continue
        if atom_is_ground(a):
            v = _atom_value(I, a, carrier, boundary, horizon=True)
        else:
            frees = atom_vars(a)
            v = I.extrapolate(a, {deep_var}) if deep_var in frees else TV.U
        acc = and4(acc, v if lit.positive else neg4(v))
        if acc is TV.F:
            return TV.F
    return acc


def _subterms(t) -> set:
    out = {t}
    if isinstance(t, Compound):
        for x in t.args:
            out |= _subterms(x)
    return out


def deep_reference_proxies(a: Atom, d: int) -> tuple[Atom, ...] | None:
    """In-carrier stand-ins for an out-of-carrier ground atom.

    Each argument deeper than the bound is replaced by its own deepest
    subterms within the bound — shape-preserving truncations, so a
    numeral stands in for a deeper numeral, a list for a deeper list.
    Three truncation levels are produced (two when the argument has only
    two bounded subterms): a single level can behave unrepresentatively
    when its truncation coincides with one of the atom's bounded
    arguments or crosses a structural threshold a genuinely deep term
    never crosses, so callers take the majority value of the levels.
    None when no argument exceeds the bound or a deep argument has
    fewer than two bounded subterms.
    """
    per_arg: list[list | None] = []
    levels = 3
    any_deep = False
    for x in a.args:
        if depth(x) <= d:
            per_arg.append(None)
            continue
        any_deep = True
        cands = sorted(
            (s for s in _subterms(x) if depth(s) <= d),
            key=depth,
            reverse=True,
        )
        if len(cands) < 2:
            return None
        per_arg.append(cands)
        levels = min(levels, len(cands))
    if not any_deep:
        return None
    return tuple(
        Atom(a.pred, tuple(x if p is None else p[k] for x, p in zip(a.args, per_arg)))
        for k in range(levels)
    )


def majority_value(values: list[TV]) -> TV:
    """The value at least two truncation levels agree on, else u."""
    for v in values:
        if v is not TV.U and values.count(v) >= min(2, len(values)):
            return v
    return TV.U


def _atom_value(I, a: Atom, carrier: Universe, boundary: list[Atom] | None = None,
                horizon: bool = False) -> TV:
    if a.pred == EQ and len(a.args) == 2:
        return equality_value(a)
    if not carrier.contains_atom(a):
        if horizon:
            # A specific ground reference beyond the carrier is decided at
            # its own finite stage, so the agreeing value of two truncated
            # stand-ins extrapolates it; no stage uniformity is required
            # (unlike the existential deep join).
            proxies = deep_reference_proxies(a, carrier.d)
            if proxies is not None:
                v = majority_value([value_of(I, p) for p in proxies])
                if v is not TV.U:
                    return v
        if boundary is not None:
            boundary.append(a)
        return TV.U
    return I.value_of(a)


# ---------------------------------------------------------------------------
# Comparison and meet


def compare(I1, I2, carrier: Universe) -> tuple[str, Atom | None]:
    """Pointwise information-ordering comparison with a witness atom.

    Returns one of ("equal", None), ("leq", w), ("geq", w),
    ("incomparable", w) where w witnesses a strict difference.
    """
    leq = True
    geq = True
    witness = None
    for a in carrier.atoms:
        v1, v2 = value_of(I1, a), value_of(I2, a)
        if v1 is v2:
            continue
        if witness is None:
            witness = a
        if not info_leq(v1, v2):
            leq = False
        if not info_leq(v2, v1):
            geq = False
    if leq and geq:
        return ("equal", None)
    if leq:
        return ("leq", witness)
    if geq:
        return ("geq", witness)
    return ("incomparable", witness)


def meet_interp(I1, I2, carrier: Universe) -> ExtensionalInterpretation:
    """Pointwise consensus: (T1 n T2, F1 n F2)."""
    true_set, false_set = set(), set()
    for a in carrier.atoms:
        v = meet_info(value_of(I1, a), value_of(I2, a))
        if v in (TV.T, TV.I):
            true_set.add(a)
        if v in (TV.F, TV.I):
            false_set.add(a)
    return ExtensionalInterpretation(true_set, false_set, carrier)
