"""Four-valued semantics workbench for pure Prolog programs with negation.

The package computes fixpoint meanings of logic programs over the
four-element bilattice {u, f, t, i}, checks programs against intended
interpretations, mode declarations and formal specifications, runs a
depth-bounded approximating analysis, and performs four-valued
declarative debugging with a human or stored oracle.
"""

from belnaplp.bilattice import TV, and4, or4, neg4, meet_info, join_info, info_leq, truth_leq, arrow4

__all__ = [
    "TV",
    "and4",
    "or4",
    "neg4",
    "meet_info",
    "join_info",
    "info_leq",
    "truth_leq",
    "arrow4",
]
