"""The four-element interlaced bilattice of truth values.

The four values are ``u`` (undefined: no evidence either way), ``f``
(false), ``t`` (true) and ``i`` (inconsistent/inadmissible: evidence
both ways).  They carry two lattice orderings:

* the *truth ordering* ``<=``: f at the bottom, t at the top, with u and
  i incomparable in between; conjunction and disjunction are meet and
  join here, negation is the order-reversing reflection;
* the *information ordering* (written ``info_leq`` here): u at the
  bottom, i at the top, with f and t incomparable in between; its meet
  is *consensus* and its join *gullibility*.

Both structures interact: every one of the four lattice operations is
monotone with respect to both orderings, and each distributes over every
other.  All operations are pure functions over an opaque enumeration.
"""

from __future__ import annotations

import enum


class TV(enum.Enum):
    """One of the four truth values u, f, t, i."""

    U = "u"
    F = "f"
    T = "t"
    I = "i"

    def __repr__(self) -> str:
        return f"TV.{self.name}"

    def __str__(self) -> str:
        return self.value


U, F, T, I = TV.U, TV.F, TV.T, TV.I

#: All four values in a fixed order (handy for exhaustive checks).
ALL: tuple[TV, TV, TV, TV] = (U, F, T, I)

# The sets-of-classical-booleans reading: u = {}, f = {False}, t = {True},
# i = {False, True}.  Used only by tests as an independent oracle for the
# truth tables; the core treats TV as opaque.
AS_BOOL_SET: dict[TV, frozenset[bool]] = {
    U: frozenset(),
    F: frozenset({False}),
    T: frozenset({True}),
    I: frozenset({False, True}),
}
FROM_BOOL_SET: dict[frozenset[bool], TV] = {v: k for k, v in AS_BOOL_SET.items()}

# Numeric coordinates in the information ordering: rank 0 for u, 1 for
# f/t, 2 for i.  Used to decide both orderings without table lookups.
_HAS_TRUE = {U: False, F: False, T: True, I: True}
_HAS_FALSE = {U: False, F: True, T: False, I: True}


def info_leq(a: TV, b: TV) -> bool:
    """Decide the information ordering: a carries no more evidence than b."""
    return a is U or a is b or b is I


def truth_leq(a: TV, b: TV) -> bool:
    """Decide the truth ordering: f below u and i, both below t."""
    # a <= b iff evidence-for(a) implies evidence-for(b) and
    # evidence-against(b) implies evidence-against(a).
    return (not _HAS_TRUE[a] or _HAS_TRUE[b]) and (not _HAS_FALSE[b] or _HAS_FALSE[a])


def and4(a: TV, b: TV) -> TV:
    """Conjunction: the meet in the truth ordering."""
    return FROM_BOOL_SET[
        frozenset(
            {True} if _HAS_TRUE[a] and _HAS_TRUE[b] else set()
        ) | frozenset(
            {False} if _HAS_FALSE[a] or _HAS_FALSE[b] else set()
        )
    ]


def or4(a: TV, b: TV) -> TV:
    """Disjunction: the join in the truth ordering."""
    return FROM_BOOL_SET[
        frozenset(
            {True} if _HAS_TRUE[a] or _HAS_TRUE[b] else set()
        ) | frozenset(
            {False} if _HAS_FALSE[a] and _HAS_FALSE[b] else set()
        )
    ]


def neg4(a: TV) -> TV:
    """Negation: reflection in the truth ordering (u and i are fixed)."""
    if a is T:
        return F
    if a is F:
        return T
    return a


def meet_info(a: TV, b: TV) -> TV:
    """Consensus: greatest lower bound in the information ordering."""
    return FROM_BOOL_SET[AS_BOOL_SET[a] & AS_BOOL_SET[b]]


def join_info(a: TV, b: TV) -> TV:
    """Gullibility: least upper bound in the information ordering."""
    return FROM_BOOL_SET[AS_BOOL_SET[a] | AS_BOOL_SET[b]]


def arrow4(head_val: TV, body_val: TV) -> bool:
    """Clause check for the information-refinement reading of ``:-``.

    A definition instance with these head and body values is accepted
    exactly when the body's value carries no more information than the
    head's.  The result is a host boolean ("model" / "not model"), not a
    truth value.
    """
    return info_leq(body_val, head_val)


def parse_tv(text: str) -> TV:
    """Parse one of the letters u, f, t, i into a truth value."""
    try:
        return TV(text.strip())
    except ValueError:
        raise ValueError(f"not a truth value: {text!r} (expected one of u, f, t, i)") from None
