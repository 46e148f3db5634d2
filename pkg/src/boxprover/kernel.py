"""Justification records and an independent replay checker.

Every derived proposition carries a Justification node; the node stores its
claimed statement and replay recomputes validity bottom-up from a small rule
set.  Boxes are never stored: they are recomputed from the leaves.

Two kinds of leaves are pending hypotheses that must be discharged before the
final proof closes: Skolem (existential instantiation, discharged by ExE) and
the induction hypotheses (discharged by NatInduct / StrongInduct).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .boxlattice import EMPTY, Box, BoxRegistry, EmptyBoxResolution
from .term import (
    AND, EQ, FALSE, FALSE_NAME, IMP, NAT, NOT, OR, TRUE_NAME, ALL, EX,
    App, Const, Free, IllTyped, Num, Term, Var, apply_subst, check_subst,
    dest_binder, dest_binop, dest_eq, fun_type, instantiate, is_not, mk_all,
    mk_app, mk_conj, mk_eq, mk_ex, mk_imp, mk_not, neg, occurs_free,
    abstract_free, show, strip_comb, BOOL,
)


@dataclass(frozen=True, eq=False)
class Justification:
    """One derivation step.  Identity equality: nodes form a DAG."""
    rule: str
    prop: Term
    prems: Tuple["Justification", ...] = ()
    data: Tuple[Any, ...] = ()

    def __repr__(self) -> str:
        return f"<{self.rule}: {show(self.prop)}>"


@dataclass(frozen=True)
class GoalStatement:
    assumptions: Tuple[Term, ...]
    conclusion: Term
    variables: Tuple[Tuple[str, Any], ...] = ()


class MalformedJustification(Exception):
    pass


# ---------------------------------------------------------------------------
# Constructors used by proof steps


def assume(i: int, k: int, prop: Term) -> Justification:
    return Justification("Assume", prop, (), (i, k))


def axiom(name: str, subst: Mapping[str, Term], prop: Term) -> Justification:
    return Justification("Axiom", prop, (), (name, tuple(sorted(subst.items()))))


def rule(name: str, prop: Term, *prems: Justification, data: Tuple = ()) -> Justification:
    return Justification(name, prop, tuple(prems), data)


def refl(t: Term) -> Justification:
    return Justification("Refl", mk_eq(t, t), (), (t,))


def sym(j: Justification) -> Justification:
    a, b = dest_eq(j.prop)  # type: ignore[misc]
    if j.rule == "Sym":
        return j.prems[0]
    if j.rule == "Refl":
        return j
    return Justification("Sym", mk_eq(b, a), (j,))


def trans(j1: Justification, j2: Justification) -> Justification:
    if j1.rule == "Refl":
        return j2
    if j2.rule == "Refl":
        return j1
    a, _ = dest_eq(j1.prop)  # type: ignore[misc]
    _, c = dest_eq(j2.prop)  # type: ignore[misc]
    return Justification("Trans", mk_eq(a, c), (j1, j2))


def cong(jf: Justification, ja: Justification) -> Justification:
    f, g = dest_eq(jf.prop)  # type: ignore[misc]
    a, b = dest_eq(ja.prop)  # type: ignore[misc]
    if jf.rule == "Refl" and ja.rule == "Refl":
        return refl(App(f, a))
    return Justification("Cong", mk_eq(App(f, a), App(g, b)), (jf, ja))


def eq_mp(j: Justification, jeq: Justification) -> Justification:
    """From P and P = Q conclude Q."""
    if jeq.rule == "Refl":
        return j
    _, q = dest_eq(jeq.prop)  # type: ignore[misc]
    return Justification("EqMP", q, (j, jeq))


def taut(prop: Term, *prems: Justification) -> Justification:
    return Justification("Taut", prop, tuple(prems))


# ---------------------------------------------------------------------------
# Contradiction form


def contradiction_form(g: GoalStatement, unfold=None) -> List[Term]:
    unfold = unfold or (lambda t: t)
    return [unfold(a) for a in g.assumptions] + [neg(unfold(g.conclusion))]


# ---------------------------------------------------------------------------
# Numeral evaluation

_ARITH = {"+": lambda a, b: a + b, "-": lambda a, b: max(a - b, 0), "*": lambda a, b: a * b}
_REL = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b, "dvd": lambda a, b: (b == 0) if a == 0 else b % a == 0,
}
_NAT2 = fun_type(NAT, NAT, NAT)
_NATREL = fun_type(NAT, NAT, BOOL)


def eval_nat(t: Term) -> Optional[int]:
    if isinstance(t, Num):
        return t.value
    h, args = strip_comb(t)
    if isinstance(h, Const) and h.name in _ARITH and len(args) == 2 and h.typ == _NAT2:
        a, b = eval_nat(args[0]), eval_nat(args[1])
        if a is not None and b is not None:
            return _ARITH[h.name](a, b)
    return None


def eval_prop(t: Term) -> Optional[bool]:
    """Truth value of a closed numeral fact, None if not one."""
    if is_not(t):
        v = eval_prop(t.arg)  # type: ignore[attr-defined]
        return None if v is None else not v
    h, args = strip_comb(t)
    if not isinstance(h, Const) or len(args) != 2:
        return None
    if h.name == EQ and h.typ == _NATREL or h.name in _REL and h.typ == _NATREL:
        a, b = eval_nat(args[0]), eval_nat(args[1])
        if a is None or b is None:
            return None
        return a == b if h.name == EQ else _REL[h.name](a, b)
    return None


# ---------------------------------------------------------------------------
# Propositional entailment on atoms


def _prop_atoms(t: Term, acc: Dict[Term, int]) -> None:
    h, args = strip_comb(t)
    if isinstance(h, Const):
        if h.name in (AND, OR, IMP) and len(args) == 2:
            _prop_atoms(args[0], acc)
            _prop_atoms(args[1], acc)
            return
        if h.name == NOT and len(args) == 1:
            _prop_atoms(args[0], acc)
            return
        if h.name in (TRUE_NAME, FALSE_NAME) and not args:
            return
    acc.setdefault(t, len(acc))


def _prop_eval(t: Term, val: Dict[Term, bool]) -> bool:
    h, args = strip_comb(t)
    if isinstance(h, Const):
        if h.name == AND and len(args) == 2:
            return _prop_eval(args[0], val) and _prop_eval(args[1], val)
        if h.name == OR and len(args) == 2:
            return _prop_eval(args[0], val) or _prop_eval(args[1], val)
        if h.name == IMP and len(args) == 2:
            return (not _prop_eval(args[0], val)) or _prop_eval(args[1], val)
        if h.name == NOT and len(args) == 1:
            return not _prop_eval(args[0], val)
        if h.name == TRUE_NAME and not args:
            return True
        if h.name == FALSE_NAME and not args:
            return False
    return val[t]


MAX_TAUT_ATOMS = 14


def entails(prems: Sequence[Term], concl: Term) -> bool:
    """Propositional consequence, treating non-connective subterms as atoms."""
    atoms: Dict[Term, int] = {}
    for p in prems:
        _prop_atoms(p, atoms)
    _prop_atoms(concl, atoms)
    if len(atoms) > MAX_TAUT_ATOMS:
        return False
    keys = list(atoms)
    for bits in itertools.product((False, True), repeat=len(keys)):
        val = dict(zip(keys, bits))
        if all(_prop_eval(p, val) for p in prems) and not _prop_eval(concl, val):
            return False
    return True


# ---------------------------------------------------------------------------
# Induction hypotheses


def induction_predicate(boxes: BoxRegistry, i: int, names: Sequence[str]) -> List[Term]:
    """Assumptions of primitive box i mentioning any of the given variables."""
    return [a for a in boxes[i].assumptions if any(occurs_free(n, a) for n in names)]


def nat_induct_hyp(boxes: BoxRegistry, i: int, n: str) -> Term:
    """P(n-1) where P(n) is the negated conjunction of box i's n-assumptions."""
    ass = induction_predicate(boxes, i, [n])
    if not ass:
        raise MalformedJustification(f"box {i} has no assumption mentioning {n}")
    var = Free(n, NAT)
    pred = neg(mk_conj(ass))
    minus = Const("-", _NAT2)
    return _replace_free(pred, n, mk_app(minus, var, Num(1)))


def strong_induct_hyp(boxes: BoxRegistry, i: int, n: str, arbs: Sequence[str]) -> Term:
    """∀m. m < n ⟶ ∀arbs. P(m, arbs)."""
    ass = induction_predicate(boxes, i, [n, *arbs])
    if not ass:
        raise MalformedJustification(f"box {i} has no assumption mentioning {n}")
    types = dict(boxes[i].variables)
    body = neg(mk_conj(ass))
    tmp = "_m"
    body = _replace_free(body, n, Free(tmp, NAT))
    for a in reversed(arbs):
        body = mk_all(types[a], abstract_free(body, a), a)
    less = Const("<", _NATREL)
    body = mk_imp(mk_app(less, Free(tmp, NAT), Free(n, NAT)), body)
    return mk_all(NAT, abstract_free(body, tmp), "m")


def _replace_free(t: Term, name: str, new: Term) -> Term:
    from .term import Abs
    if isinstance(t, Free):
        return new if t.name == name else t
    if isinstance(t, Abs):
        return Abs(t.typ, _replace_free(t.body, name, new), t.hint)
    if isinstance(t, App):
        return App(_replace_free(t.fun, name, new), _replace_free(t.arg, name, new))
    return t


# ---------------------------------------------------------------------------
# Structural conclusions


def conclusion_of(j: Justification, boxes: BoxRegistry,
                  memo: Optional[Dict[int, Box]] = None) -> Tuple[Term, Box]:
    return j.prop, box_of(j, boxes, memo)


def box_of(j: Justification, boxes: BoxRegistry, memo: Optional[Dict[int, Box]] = None) -> Box:
    memo = {} if memo is None else memo
    order = _postorder(j)
    for node in order:
        if id(node) in memo:
            continue
        memo[id(node)] = _node_box(node, boxes, memo)
    return memo[id(j)]


def _node_box(node: Justification, boxes: BoxRegistry, memo: Dict[int, Box]) -> Box:
    r = node.rule
    if r == "Assume":
        return boxes.prim(node.data[0])
    if r == "StrongIndHyp":
        return boxes.prim(node.data[0])
    if r in ("Axiom", "NumEval", "Refl"):
        return EMPTY
    prem_boxes = [memo[id(p)] for p in node.prems]
    if r == "Resolved":
        i = node.data[0]
        b = prem_boxes[0]
        if i not in b.members:
            raise MalformedJustification(f"Resolved({i}) over box {b}")
        rest = Box(tuple(m for m in b.members if m != i))
        return boxes.merge(boxes[i].parent, rest)
    if r == "IndHyp":
        return boxes.merge(boxes.prim(node.data[0]), *prem_boxes)
    return boxes.merge(*prem_boxes)


def _postorder(root: Justification) -> List[Justification]:
    out: List[Justification] = []
    seen = set()
    stack: List[Tuple[Justification, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            out.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node.prems):
            if id(p) not in seen:
                stack.append((p, False))
    return out


def nodes(root: Justification) -> List[Justification]:
    return _postorder(root)


# ---------------------------------------------------------------------------
# Pending hypotheses and discharge


def pending(j: Justification, memo: Optional[Dict[int, FrozenSet]] = None) -> FrozenSet:
    """Undischarged Skolem / induction hypotheses below j."""
    memo = {} if memo is None else memo
    for node in _postorder(j):
        if id(node) not in memo:
            memo[id(node)] = _node_pending(node, memo)
    return memo[id(j)]


def _node_pending(node: Justification, memo) -> FrozenSet:
    acc: FrozenSet = frozenset().union(*(memo[id(p)] for p in node.prems)) if node.prems else frozenset()
    r = node.rule
    if r == "Skolem":
        return acc | {("sk", node.data[0], node.prems[0].prop)}
    if r == "IndHyp":
        return acc | {("ind", node.data[0], node.data[1], node.prop)}
    if r == "StrongIndHyp":
        return acc | {("sind", node.data[0], node.data[1], node.prop)}
    if r == "ExE":
        c = node.data[0]
        ex = node.prems[0]
        return memo[id(ex)] | frozenset(p for p in memo[id(node.prems[1])] if not (p[0] == "sk" and p[1] == c))
    if r == "NatInduct":
        i, n = node.data[0], node.data[1]
        return frozenset(p for p in acc if not (p[0] == "ind" and p[1] == i and p[2] == n))
    if r == "StrongInduct":
        i, n = node.data[0], node.data[1]
        return frozenset(p for p in acc if not (p[0] == "sind" and p[1] == i and p[2] == n))
    return acc


def discharge(contra: Justification, boxes: BoxRegistry, i: Optional[int] = None,
              skolem_order: Optional[Mapping[str, int]] = None) -> Justification:
    """Wrap a proof of False so pending hypotheses scoped to primitive box i
    (or all of them when i is None) are discharged."""
    pend = pending(contra)
    order = skolem_order or {}
    memo: Dict[int, Box] = {}
    ind = [p for p in pend if p[0] in ("ind", "sind") and (i is None or p[1] == i)]
    sks = []
    for p in pend:
        if p[0] != "sk":
            continue
        leaf = _find_skolem(contra, p[1])
        ex = leaf.prems[0]
        if i is None or i in boxes.closure(box_of(ex, boxes, memo)):
            sks.append((p[1], leaf))
    j = contra
    for p in sorted(ind, key=lambda p: (p[0], p[1], p[2])):
        if p[0] == "ind":
            leaf = _find_leaf(contra, "IndHyp", p[1], p[2])
            nz = leaf.prems[0]
            j = Justification("NatInduct", FALSE, (nz, j), (p[1], p[2]))
        else:
            leaf = _find_leaf(contra, "StrongIndHyp", p[1], p[2])
            j = Justification("StrongInduct", FALSE, (j,), leaf.data)
    for c, leaf in sorted(sks, key=lambda cl: -order.get(cl[0], 0)):
        j = Justification("ExE", j.prop, (leaf.prems[0], j), (c,))
    return j


def _find_skolem(root: Justification, c: str) -> Justification:
    for node in _postorder(root):
        if node.rule == "Skolem" and node.data[0] == c:
            return node
    raise MalformedJustification(f"no Skolem leaf for {c}")


def _find_leaf(root: Justification, rule_name: str, i: int, n: str) -> Justification:
    for node in _postorder(root):
        if node.rule == rule_name and node.data[0] == i and node.data[1] == n:
            return node
    raise MalformedJustification(f"no {rule_name} leaf for box {i}, {n}")


# ---------------------------------------------------------------------------
# Resolution of boxes


@dataclass
class Resolution:
    success: bool
    exports: List[Tuple[Justification, Box]] = field(default_factory=list)
    proof: Optional[Justification] = None
    warning: str = ""


def resolve(b: Box, contradiction: Justification, boxes: BoxRegistry,
            skolem_order: Optional[Mapping[str, int]] = None) -> Resolution:
    """Export negated assumptions of each member of b to its parent context."""
    if contradiction.prop != FALSE:
        raise MalformedJustification("resolve needs a proof of False")
    if not b.members:
        proof = discharge(contradiction, boxes, None, skolem_order)
        return Resolution(True, proof=proof, warning="False derived in the empty box: theory is inconsistent")
    if b.members == (0,):
        return Resolution(True, proof=discharge(contradiction, boxes, None, skolem_order))
    exports = []
    for i, target in boxes.resolve_targets(b):
        contra = discharge(contradiction, boxes, i, skolem_order)
        j = Justification("Resolved", boxes.export_formula(i), (contra,), (i,))
        exports.append((j, target))
    return Resolution(False, exports)


# ---------------------------------------------------------------------------
# Replay


@dataclass
class ReplayReport:
    ok: bool
    reason: str = ""
    path: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


class _Reject(Exception):
    def __init__(self, node: Justification, reason: str):
        super().__init__(reason)
        self.node = node
        self.reason = reason


def replay(j: Justification, theory, boxes: BoxRegistry, closed: bool = True,
           expect_box: Optional[Box] = None) -> bool:
    return replay_report(j, theory, boxes, closed, expect_box).ok


def replay_report(j: Justification, theory, boxes: BoxRegistry, closed: bool = True,
                  expect_box: Optional[Box] = None) -> ReplayReport:
    box_memo: Dict[int, Box] = {}
    pend_memo: Dict[int, FrozenSet] = {}
    order = _postorder(j)
    try:
        for node in order:
            _check_node(node, theory, boxes, box_memo)
            box_memo[id(node)] = _node_box(node, boxes, box_memo)
            pend_memo[id(node)] = _node_pending(node, pend_memo)
            _check_scoping(node, boxes, box_memo, pend_memo)
        if closed and pend_memo[id(j)]:
            raise _Reject(j, f"undischarged hypotheses {sorted(str(p[:3]) for p in pend_memo[id(j)])}")
        if expect_box is not None and not boxes.leq(box_memo[id(j)], expect_box):
            raise _Reject(j, f"proof lives in box {box_memo[id(j)]}, expected {expect_box}")
    except _Reject as e:
        return ReplayReport(False, e.reason, _path_to(j, e.node))
    except (MalformedJustification, IllTyped, IndexError, KeyError, TypeError, ValueError) as e:
        return ReplayReport(False, f"malformed: {e}", [])
    return ReplayReport(True)


def _path_to(root: Justification, target: Justification) -> List[str]:
    parent: Dict[int, Tuple[Justification, int]] = {}
    stack = [root]
    seen = {id(root)}
    while stack:
        node = stack.pop()
        if node is target:
            break
        for k, p in enumerate(node.prems):
            if id(p) not in seen:
                seen.add(id(p))
                parent[id(p)] = (node, k)
                stack.append(p)
    path = [f"{target.rule}: {show(target.prop)}"]
    cur = target
    while id(cur) in parent:
        cur, k = parent[id(cur)]
        path.append(f"{cur.rule}[{k}]: {show(cur.prop)}")
    return list(reversed(path))


def _need(cond: bool, node: Justification, reason: str) -> None:
    if not cond:
        raise _Reject(node, reason)


def _arity(node: Justification, n: int) -> None:
    _need(len(node.prems) == n, node, f"{node.rule} expects {n} premises")


def _check_node(node: Justification, theory, boxes: BoxRegistry, box_memo) -> None:
    r, c = node.rule, node.prop
    ps = [p.prop for p in node.prems]
    _need(c.ground, node, "conclusion must be ground")
    _need(c.type == BOOL, node, "conclusion must be boolean")
    if r == "Assume":
        i, k = node.data
        _need(0 <= i < len(boxes) and 0 <= k < len(boxes[i].assumptions), node, "no such assumption")
        _need(boxes[i].assumptions[k] == c, node, "assumption mismatch")
    elif r == "Axiom":
        name, items = node.data
        stmt = theory.axioms.get(name)
        _need(stmt is not None, node, f"unknown axiom {name}")
        s = dict(items)
        _need(check_subst(s, stmt), node, "substitution not type-preserving")
        _need(apply_subst(s, stmt) == c, node, f"not an instance of {name}")
    elif r == "NumEval":
        _arity(node, 0)
        _need(eval_prop(c) is True, node, "numeral fact does not evaluate to true")
    elif r == "Refl":
        _arity(node, 0)
        _need(c == mk_eq(node.data[0], node.data[0]), node, "bad reflexivity")
    elif r == "Sym":
        _arity(node, 1)
        e = dest_eq(ps[0])
        _need(e is not None and c == mk_eq(e[1], e[0]), node, "bad symmetry")
    elif r == "Trans":
        _arity(node, 2)
        e1, e2 = dest_eq(ps[0]), dest_eq(ps[1])
        _need(e1 is not None and e2 is not None and e1[1] == e2[0], node, "trans middle mismatch")
        _need(c == mk_eq(e1[0], e2[1]), node, "bad transitivity")
    elif r == "Cong":
        _arity(node, 2)
        e1, e2 = dest_eq(ps[0]), dest_eq(ps[1])
        _need(e1 is not None and e2 is not None, node, "congruence needs equalities")
        _need(c == mk_eq(App(e1[0], e2[0]), App(e1[1], e2[1])), node, "bad congruence")
    elif r == "EqMP":
        _arity(node, 2)
        e = dest_eq(ps[1])
        _need(e is not None and e[0] == ps[0] and e[1] == c, node, "bad equality modus ponens")
    elif r == "ConjE1" or r == "ConjE2":
        _arity(node, 1)
        parts = dest_binop(ps[0], AND)
        _need(parts is not None and parts[0 if r == "ConjE1" else 1] == c, node, "bad conjunction elimination")
    elif r == "ConjI":
        _arity(node, 2)
        _need(c == mk_app(Const(AND, fun_type(BOOL, BOOL, BOOL)), ps[0], ps[1]), node, "bad conjunction")
    elif r in ("DisjI1", "DisjI2"):
        _arity(node, 1)
        parts = dest_binop(c, OR)
        _need(parts is not None and parts[0 if r == "DisjI1" else 1] == ps[0], node, "bad disjunction intro")
    elif r == "DisjE":
        _arity(node, 2)
        parts = dest_binop(ps[0], OR)
        _need(parts is not None, node, "DisjE needs a disjunction")
        a, b = parts
        ok = (ps[1] == neg(a) and c == b) or (ps[1] == neg(b) and c == a)
        _need(ok, node, "bad disjunctive syllogism")
    elif r == "MP":
        _arity(node, 2)
        parts = dest_binop(ps[0], IMP)
        _need(parts is not None and parts[0] == ps[1] and parts[1] == c, node, "bad modus ponens")
    elif r == "NotE":
        _arity(node, 2)
        _need(c == FALSE and (ps[1] == mk_not(ps[0]) or ps[0] == mk_not(ps[1])), node, "bad contradiction")
    elif r == "Taut":
        _need(entails(ps, c), node, "not a propositional consequence")
    elif r == "ForallE":
        _arity(node, 1)
        body = dest_binder(ps[0], ALL)
        t = node.data[0]
        _need(body is not None and t.ground and t.type == body.typ, node, "bad forall instance")
        _need(instantiate(body.body, t) == c, node, "bad forall elimination")
    elif r == "NotEx":
        _arity(node, 1)
        _need(is_not(ps[0]), node, "NotEx needs a negation")
        body = dest_binder(ps[0].arg, EX)  # type: ignore[attr-defined]
        _need(body is not None and c == mk_all(body.typ, neg(body.body), body.hint), node, "bad ¬∃ rule")
    elif r == "NotAll":
        _arity(node, 1)
        _need(is_not(ps[0]), node, "NotAll needs a negation")
        body = dest_binder(ps[0].arg, ALL)  # type: ignore[attr-defined]
        _need(body is not None and c == mk_ex(body.typ, neg(body.body), body.hint), node, "bad ¬∀ rule")
    elif r == "Resolved":
        _arity(node, 1)
        i = node.data[0]
        _need(ps[0] == FALSE, node, "Resolved needs a contradiction")
        _need(0 < i < len(boxes), node, "no such primitive box")
        _need(i in box_memo[id(node.prems[0])].members, node, "resolved box not a member")
        _need(c == boxes.export_formula(i), node, "bad exported formula")
    elif r == "Skolem":
        _arity(node, 1)
        cname = node.data[0]
        body = dest_binder(ps[0], EX)
        _need(body is not None, node, "Skolem needs an existential")
        _need(not occurs_free(cname, ps[0]), node, "skolem constant occurs in its existence fact")
        _need(c == instantiate(body.body, Free(cname, body.typ)), node, "bad skolem instance")
    elif r == "ExE":
        _arity(node, 2)
        cname = node.data[0]
        _need(dest_binder(ps[0], EX) is not None, node, "ExE needs an existential")
        _need(not occurs_free(cname, c) and not occurs_free(cname, ps[0]), node, "skolem constant escapes")
        _need(c == ps[1], node, "ExE conclusion must equal body conclusion")
        for a in boxes.assumptions(box_memo[id(node.prems[1])]):
            _need(not occurs_free(cname, a), node, "skolem constant occurs in an open assumption")
    elif r == "IndHyp":
        _arity(node, 1)
        i, n = node.data
        _need(n in dict(boxes[i].variables), node, "not an introduced variable")
        _need(ps[0] == mk_not(mk_eq(Free(n, NAT), Num(0))), node, "IndHyp needs n ≠ 0")
        _need(c == nat_induct_hyp(boxes, i, n), node, "bad induction hypothesis")
    elif r == "StrongIndHyp":
        _arity(node, 0)
        i, n, arbs = node.data
        vs = dict(boxes[i].variables)
        _need(n in vs and all(a in vs for a in arbs), node, "not introduced variables")
        _need(c == strong_induct_hyp(boxes, i, n, arbs), node, "bad strong induction hypothesis")
    elif r in ("NatInduct", "StrongInduct"):
        i, n = node.data[0], node.data[1]
        _need(c == FALSE and node.prems[-1].prop == FALSE, node, "induction must close a contradiction")
        if r == "NatInduct":
            _arity(node, 2)
            _need(ps[0] == mk_not(mk_eq(Free(n, NAT), Num(0))), node, "zero case must prove n ≠ 0")
            names = [n]
        else:
            _arity(node, 1)
            names = [n, *node.data[2]]
        _need(n in dict(boxes[i].variables), node, "not an introduced variable")
        open_box = boxes.merge(*(box_memo[id(p)] for p in node.prems))
        for j in sorted(boxes.closure(open_box)):
            if j == i:
                continue
            for a in boxes[j].assumptions:
                _need(not any(occurs_free(v, a) for v in names), node,
                      "induction variable occurs in an unrelated open assumption")
    else:
        raise _Reject(node, f"unknown rule {r}")


def _check_scoping(node: Justification, boxes: BoxRegistry, box_memo, pend_memo) -> None:
    r = node.rule
    if r == "ExE":
        cname = node.data[0]
        ex_prop = node.prems[0].prop
        inner = pend_memo[id(node.prems[1])]
        for p in inner:
            if p[0] == "sk" and p[1] == cname:
                _need(p[2] == ex_prop, node, "skolem leaf uses a different existence fact")
        for p in pend_memo[id(node)]:
            _need(not occurs_free(cname, p[-1]), node, "pending hypothesis mentions discharged constant")
    elif r in ("NatInduct", "StrongInduct"):
        i, n = node.data[0], node.data[1]
        names = [n] + (list(node.data[2]) if r == "StrongInduct" else [])
        if r == "NatInduct":
            _need(not any(p[0] == "ind" and p[1] == i and p[2] == n for p in pend_memo[id(node.prems[0])]),
                  node, "zero case may not use the induction hypothesis")
        for p in pend_memo[id(node)]:
            _need(not any(occurs_free(v, p[-1]) for v in names), node,
                  "pending hypothesis depends on the induction variable")
