"""A saturation prover: best-first search over justified items in an assumption-box lattice."""

from .boxlattice import EMPTY, Box, BoxRegistry
from .kernel import GoalStatement, Justification, replay, replay_report
from .rewrite import EqualityRecord, RewriteTable
from .search import Outcome, SearchConfig, SearchState, init, run, trace
from .script import interpret, parse as parse_script
from .syntax import parse_term
from .theory import Theory, builtin_nat, load

__all__ = [
    "EMPTY", "Box", "BoxRegistry", "GoalStatement", "Justification", "replay", "replay_report",
    "EqualityRecord", "RewriteTable", "Outcome", "SearchConfig", "SearchState", "init", "run",
    "trace", "interpret", "parse_script", "parse_term", "Theory", "builtin_nat", "load",
]
