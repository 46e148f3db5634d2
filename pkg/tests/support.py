"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

import oracles as O
from boxprover.boxlattice import EMPTY, Box, BoxRegistry
from boxprover.cli import load_problem, solve
from boxprover.kernel import assume
from boxprover.rewrite import EqualityRecord, RewriteTable
from boxprover.search import SearchConfig
from boxprover.syntax import parse_term
from boxprover.term import NAT, SimpleType, Term, mk_eq
from boxprover.theory import builtin_nat

HERE = Path(__file__).parent
CORPUS_DIR = HERE / "corpus"
DATA_DIR = Path(str(resources.files("boxprover").joinpath("data")))

PRIME_ODD = DATA_DIR / "prime_odd.prob"
LARGER_PRIME = DATA_DIR / "larger_prime.prob"

# every problem the suite runs end to end
CORPUS = [PRIME_ODD, LARGER_PRIME] + sorted(CORPUS_DIR.glob("*.prob"))

_NAT = builtin_nat()


def nat_theory():
    return _NAT


def nat_term(src: str, variables: Optional[Dict[str, SimpleType]] = None, expect=None) -> Term:
    from boxprover.term import BOOL
    return parse_term(src, _NAT.scope(variables or {}), BOOL if expect is None else expect)


def run_problem(path, config: Optional[SearchConfig] = None, use_script: bool = True):
    prob, th = load_problem(path)
    state = solve(prob, th, config, use_script=use_script)
    return state


def random_table(rng: random.Random, max_terms: int, max_eqs: int, max_boxes: int):
    """A registry of primitive boxes whose assumptions are the equalities, and the filled table."""
    terms = []
    while True:
        t = O.random_term(rng, rng.randint(1, 7))
        grown = list(dict.fromkeys(terms + [u for u in O.proper_subterms(t)]))
        if len(grown) > max_terms:
            break
        terms = grown
        if rng.random() < 0.15:
            break
    n_boxes = rng.randint(1, max_boxes)
    parents = O.random_forest(rng, n_boxes)
    eqs = []
    own = [[] for _ in range(n_boxes)]
    for _ in range(rng.randint(0, max_eqs)):
        a, b = rng.choice(terms), rng.choice(terms)
        i = rng.randrange(n_boxes)
        own[i].append(mk_eq(a, b))
        eqs.append((i, len(own[i]) - 1, a, b))
    reg = BoxRegistry()
    for i in range(n_boxes):
        hyps = own[i] or [mk_eq(terms[0], terms[0])]
        reg.new_primitive(reg.canonical(parents[i]) if i else EMPTY, hyps)
    table = RewriteTable(reg)
    for t in terms:
        table.register_term(t)
    order = list(eqs)
    rng.shuffle(order)
    for i, k, a, b in order:
        table.add_equality(EqualityRecord(a, b, Box((i,)), assume(i, k, mk_eq(a, b))))
    return table, reg, parents, eqs
