"""Independent reference implementations used to cross-check the package.

Nothing here reuses the algorithms under test: closure, matching and counting
are all recomputed from the raw term structure by brute force.
"""

from __future__ import annotations

import itertools
import random
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from boxprover.term import Abs, App, Const, Free, NAT, Term, Var, fun_type


# --- terms ---------------------------------------------------------------------


def count_nodes(t: Term) -> int:
    if isinstance(t, App):
        return 1 + count_nodes(t.fun) + count_nodes(t.arg)
    if isinstance(t, Abs):
        return 1 + count_nodes(t.body)
    return 1


def spine(t: Term) -> Tuple[Term, List[Term]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    return t, args[::-1]


def proper_subterms(t: Term) -> List[Term]:
    """t, then arguments recursively; heads and partial applications skipped."""
    out: List[Term] = []

    def go(u: Term) -> None:
        if u not in out:
            out.append(u)
        for a in spine(u)[1]:
            go(a)

    go(t)
    return out


# --- random ground terms over a tiny signature -----------------------------------

F1 = Const("f", fun_type(NAT, NAT))
G2 = Const("g", fun_type(NAT, NAT, NAT))
LEAVES = [Free(n, NAT) for n in "abcde"]


def random_term(rng: random.Random, budget: int) -> Term:
    """A ground nat term of at most budget nodes."""
    r = rng.random()
    if budget >= 5 and r < 0.35:
        k = rng.randint(1, budget - 3)
        return App(App(G2, random_term(rng, k)), random_term(rng, budget - 2 - k))
    if budget >= 2 and r < 0.7:
        return App(F1, random_term(rng, budget - 1))
    return rng.choice(LEAVES)


def random_pattern(rng: random.Random, budget: int, names=("x", "y")) -> Term:
    r = rng.random()
    if r < 0.25:
        return Var(rng.choice(names), NAT)
    if budget >= 5 and r < 0.5:
        k = rng.randint(1, budget - 3)
        return App(App(G2, random_pattern(rng, k, names)), random_pattern(rng, budget - 2 - k, names))
    if budget >= 2 and r < 0.8:
        return App(F1, random_pattern(rng, budget - 1, names))
    return rng.choice(LEAVES)


# --- box forests -----------------------------------------------------------------


def random_forest(rng: random.Random, n: int) -> List[Tuple[int, ...]]:
    """Parent index tuples; box 0 is the root, later boxes pick earlier parents."""
    parents: List[Tuple[int, ...]] = [()]
    for i in range(1, n):
        k = rng.choice([1, 1, 1, 2]) if i > 1 else 1
        parents.append(tuple(sorted(rng.sample(range(i), min(k, i)))))
    return parents


def ancestors(parents: Sequence[Tuple[int, ...]], i: int) -> FrozenSet[int]:
    seen = {i}
    stack = [i]
    while stack:
        for p in parents[stack.pop()]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return frozenset(seen)


def assumption_set(parents, own: Sequence[Set], members: Iterable[int]) -> FrozenSet:
    out: Set = set()
    for m in members:
        for a in ancestors(parents, m):
            out |= own[a]
    return frozenset(out)


def all_canonical(parents) -> List[Tuple[int, ...]]:
    """Every canonical composite box over the forest, including the empty one."""
    n = len(parents)
    seen = set()
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            keep = tuple(i for i in combo if not any(j != i and i in ancestors(parents, j) for j in combo))
            seen.add(keep)
    return sorted(seen, key=lambda b: (len(b), b))


def box_below(parents, a: Sequence[int], b: Sequence[int]) -> bool:
    ca = set().union(*(ancestors(parents, i) for i in a)) if a else set()
    cb = set().union(*(ancestors(parents, i) for i in b)) if b else set()
    return ca <= cb


# --- congruence closure by fixpoint ------------------------------------------------


def brute_partition(terms: Sequence[Term], eqs: Sequence[Tuple[Term, Term]]) -> Set[FrozenSet[Term]]:
    """Smallest equivalence over terms containing eqs and closed under congruence."""
    idx = {t: k for k, t in enumerate(terms)}
    parent = list(range(len(terms)))

    def find(k: int) -> int:
        while parent[k] != k:
            k = parent[k]
        return k

    def union(a: int, b: int) -> bool:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[max(ra, rb)] = min(ra, rb)
        return True

    for l, r in eqs:
        union(idx[l], idx[r])
    apps = []
    for t in terms:
        h, args = spine(t)
        if args and isinstance(h, (Const, Free)):
            apps.append((t, h, args))
    changed = True
    while changed:
        changed = False
        for (t1, h1, a1), (t2, h2, a2) in itertools.combinations(apps, 2):
            if h1 != h2 or len(a1) != len(a2):
                continue
            if all(find(idx[x]) == find(idx[y]) for x, y in zip(a1, a2)):
                changed |= union(idx[t1], idx[t2])
    classes: Dict[int, Set[Term]] = {}
    for t in terms:
        classes.setdefault(find(idx[t]), set()).add(t)
    return {frozenset(c) for c in classes.values()}


# --- naive E-matching ---------------------------------------------------------------


def naive_match(p: Term, t: Term, s: Optional[Dict[str, Term]] = None) -> Optional[Dict[str, Term]]:
    """Plain syntactic first-order matching."""
    s = dict(s or {})
    if isinstance(p, Var):
        if p.name in s:
            return s if s[p.name] == t else None
        s[p.name] = t
        return s
    if isinstance(p, App):
        if not isinstance(t, App):
            return None
        s2 = naive_match(p.fun, t.fun, s)
        return None if s2 is None else naive_match(p.arg, t.arg, s2)
    return s if p == t else None


def naive_ematch(table, p: Term, t: Term) -> List[Tuple[Dict[str, Term], list]]:
    """Every registered u equal to t, matched syntactically; with the boxes where u ~ t."""
    out = []
    for u in table.terms:
        boxes = table.minboxes(u, t)
        if not boxes:
            continue
        s = naive_match(p, u)
        if s is not None:
            out.append((s, boxes))
    return out



# --- propositional entailment by truth tables ------------------------------------------

_CONNECTIVES = {"&": lambda a, b: a and b, "|": lambda a, b: a or b, "-->": lambda a, b: (not a) or b}


def _atoms(t: Term, acc: List[Term]) -> None:
    h, args = spine(t)
    name = getattr(h, "name", None)
    if isinstance(h, Const) and (name in _CONNECTIVES and len(args) == 2 or name == "~" and len(args) == 1):
        for a in args:
            _atoms(a, acc)
    elif not (isinstance(h, Const) and name in ("True", "False") and not args):
        if t not in acc:
            acc.append(t)


def _value(t: Term, val: Dict[Term, bool]) -> bool:
    h, args = spine(t)
    name = getattr(h, "name", None)
    if isinstance(h, Const) and name in _CONNECTIVES and len(args) == 2:
        return _CONNECTIVES[name](_value(args[0], val), _value(args[1], val))
    if isinstance(h, Const) and name == "~" and len(args) == 1:
        return not _value(args[0], val)
    if isinstance(h, Const) and not args and name in ("True", "False"):
        return name == "True"
    return val[t]


def entails(prems: Sequence[Term], concl: Term) -> bool:
    atoms: List[Term] = []
    for t in list(prems) + [concl]:
        _atoms(t, atoms)
    for bits in itertools.product([False, True], repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if all(_value(p, val) for p in prems) and not _value(concl, val):
            return False
    return True
