"""Proof steps: the built-in logic library and steps generated from theorems.

A step looks at one or two items and returns outputs; each output is a
payload of new items (or a request for a new primitive box) together with the
ids of the items it consumed.  Every emitted proposition carries a
justification in the kernel's rule set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

from .boxlattice import EMPTY, Box
from .kernel import (
    Justification, axiom, cong, eq_mp, eval_nat, eval_prop, nat_induct_hyp, refl,
    induction_predicate, rule, sym, taut, trans,
)
from .rewrite import EMatchResult, _decompose
from .term import (
    ALL, AND, BOOL, EQ, EX, FALSE, IMP, NAT, NOT_C, OR, Const, Free, Num, Term, Var,
    apply_subst, dest_binder, dest_binop, dest_eq, flatten_binop, head_name, instantiate,
    is_not, mk_all, mk_app, mk_conj, mk_disj, mk_eq, mk_ex, mk_not, neg, schematics,
    show, strip_comb, subterms, term_size, fun_type,
)
from .theory import TheoremSpec, premises_and_conclusion

log = logging.getLogger(__name__)

PROP, TERM, DISJ, DISJ_ACTIVE = "PROP", "TERM", "DISJ", "DISJ_ACTIVE"
PROP_KINDS = (PROP, DISJ, DISJ_ACTIVE)


class StepError(Exception):
    pass


class TooManyPremises(StepError):
    pass


class UnboundSchematic(StepError):
    pass


class NoEligibleVariable(StepError):
    pass


# ---------------------------------------------------------------------------
# Payloads


@dataclass(frozen=True)
class Emit:
    kind: str
    tname: Term
    box: Box
    just: Optional[Justification]
    flags: frozenset = frozenset()


@dataclass(frozen=True)
class NewBox:
    parent: Box
    assumptions: Tuple[Term, ...]
    variables: Tuple[Tuple[str, object], ...] = ()
    tag: object = None


Payload = Union[Emit, NewBox]


@dataclass(frozen=True)
class Output:
    inputs: Tuple[int, ...]
    payload: Tuple[Payload, ...]


@dataclass(frozen=True)
class ProofStep:
    name: str
    arity: int
    kinds: Tuple[Tuple[str, ...], ...]
    body: Callable
    accept: Tuple[Optional[Callable], ...] = ()
    fast: Optional[Callable] = None  # unary fast path of a binary step


def disjuncts(t: Term) -> Optional[List[Term]]:
    """Disjunctive view: A ∨ B, A ⟶ B as [¬A, B], ¬(A ∧ B) as [¬A, ¬B]."""
    if dest_binop(t, OR) is not None:
        return flatten_binop(t, OR)
    parts = dest_binop(t, IMP)
    if parts is not None:
        rest = disjuncts(parts[1])
        return [neg(parts[0])] + (rest if rest is not None else [parts[1]])
    if is_not(t) and dest_binop(t.arg, AND) is not None:  # type: ignore[attr-defined]
        return [neg(x) for x in flatten_binop(t.arg, AND)]  # type: ignore[attr-defined]
    return None


def prop_kind(t: Term, passive: bool = False) -> str:
    if dest_binop(t, OR) is not None:
        return DISJ if passive else DISJ_ACTIVE
    if disjuncts(t) is not None:
        return DISJ
    return PROP


def shape(t: Term) -> Optional[str]:
    if is_not(t):
        return "~" + str(head_name(t.arg))  # type: ignore[attr-defined]
    return head_name(t)


def fact_of(item, r: EMatchResult) -> Justification:
    """Proof of the pattern instance from an item matched up to the table."""
    return eq_mp(item.just, sym(r.eq_just))


# ---------------------------------------------------------------------------
# Numerals up to the rewrite table

_ARITH = ("+", "-", "*")
_RELS = ("=", "<", "<=", ">", ">=", "dvd")
_NAT2 = fun_type(NAT, NAT, NAT)
_NATREL = fun_type(NAT, NAT, BOOL)


def _numeral_of(ctx, t: Term) -> Optional[Tuple[Term, Justification, Box]]:
    """A numeral expression equal to t, with proof expr = t."""
    if eval_nat(t) is not None:
        return t, refl(t), EMPTY
    best = None
    for m in ctx.table.class_of(t):
        if isinstance(m, Num):
            boxes = ctx.table.minboxes(m, t)
            if boxes:
                cand = (ctx.boxes.depth(boxes[0]), boxes[0], m)
                if best is None or cand[:2] < best[:2]:
                    best = cand
    if best is None:
        return None
    _, box, m = best
    return m, ctx.table.explain(m, t, box), box


def numeral_view(ctx, prop: Term) -> Optional[Tuple[bool, Term, Justification, Box]]:
    """For R(a, b) over nat with numeral-valued sides: (value, R(a', b'), R(a', b') = prop, box)."""
    h, args = strip_comb(prop)
    if not (isinstance(h, Const) and h.name in _RELS and len(args) == 2 and h.typ == _NATREL):
        return None
    va = _numeral_of(ctx, args[0])
    if va is None:
        return None
    vb = _numeral_of(ctx, args[1])
    if vb is None:
        return None
    prop2 = mk_app(h, va[0], vb[0])
    value = eval_prop(prop2)
    if value is None:
        return None
    eq = cong(cong(refl(h), va[1]), vb[1])
    return value, prop2, eq, ctx.boxes.merge(va[2], vb[2])


def numeric_fact(ctx, prop: Term) -> Optional[Tuple[Justification, Box]]:
    """Prove a ground numeral fact (possibly negated) by evaluation."""
    negated = is_not(prop)
    atom = prop.arg if negated else prop  # type: ignore[attr-defined]
    view = numeral_view(ctx, atom)
    if view is None:
        return None
    value, prop2, eq, box = view
    if value == negated:
        return None
    if not negated:
        return eq_mp(rule("NumEval", prop2), eq), box
    j = rule("NumEval", mk_not(prop2))
    return eq_mp(j, cong(refl(NOT_C), eq)), box


# ---------------------------------------------------------------------------
# Built-in steps


def _emit_prop(t: Term, box: Box, just: Justification, passive: bool = False, flags=frozenset()) -> Emit:
    return Emit(prop_kind(t, passive), t, box, just, flags)


def conj_split(ctx, item) -> List[Output]:
    out = []
    for r in ctx.ematch(_CONJ_PAT, item.tname):
        s = r.s
        fact = fact_of(item, r)
        box = ctx.boxes.merge(item.box, r.box)
        a, b = s["A"], s["B"]
        out.append(Output((item.id,), (
            _emit_prop(a, box, rule("ConjE1", a, fact)),
            _emit_prop(b, box, rule("ConjE2", b, fact)),
        )))
    return out


_CONJ_PAT = mk_app(Const(AND, fun_type(BOOL, BOOL, BOOL)), Var("A", BOOL), Var("B", BOOL))


def neg_split(ctx, item) -> List[Output]:
    """¬(A ∨ B) gives ¬A, ¬B; ¬(A ⟶ B) gives A, ¬B; ¬¬A gives A."""
    t = item.tname
    if not is_not(t):
        return []
    inner = t.arg  # type: ignore[attr-defined]
    parts = dest_binop(inner, OR)
    if parts is not None:
        outs = [neg(x) for x in flatten_binop(inner, OR)]
    elif dest_binop(inner, IMP) is not None:
        a, b = dest_binop(inner, IMP)  # type: ignore[misc]
        outs = [a, neg(b)]
    elif is_not(inner):
        outs = [inner.arg]  # type: ignore[attr-defined]
    else:
        return []
    return [Output((item.id,), tuple(_emit_prop(x, item.box, taut(x, item.just)) for x in outs))]


def not_ex(ctx, item) -> List[Output]:
    t = item.tname
    if not is_not(t):
        return []
    body = dest_binder(t.arg, EX)  # type: ignore[attr-defined]
    if body is None:
        return []
    res = mk_all(body.typ, neg(body.body), body.hint)
    return [Output((item.id,), (_emit_prop(res, item.box, rule("NotEx", res, item.just)),))]


def not_all(ctx, item) -> List[Output]:
    t = item.tname
    if not is_not(t):
        return []
    body = dest_binder(t.arg, ALL)  # type: ignore[attr-defined]
    if body is None:
        return []
    res = mk_ex(body.typ, neg(body.body), body.hint)
    return [Output((item.id,), (_emit_prop(res, item.box, rule("NotAll", res, item.just)),))]


def skolemize(ctx, item) -> List[Output]:
    if item.id in ctx.skolemized:
        return []
    body = dest_binder(item.tname, EX)
    if body is None:
        return []
    ctx.skolemized.add(item.id)
    name = ctx.fresh(body.hint or "x")
    return [skolem_output(ctx, item, name)]


def skolem_output(ctx, item, name: str) -> Output:
    body = dest_binder(item.tname, EX)
    assert body is not None
    inst = instantiate(body.body, Free(name, body.typ))
    ctx.note_skolem(name)
    j = Justification("Skolem", inst, (item.just,), (name,))
    return Output((item.id,), (_emit_prop(inst, item.box, j),))


def disj_case(ctx, item) -> List[Output]:
    if item.kind != DISJ_ACTIVE:
        return []
    ds = disjuncts(item.tname)
    if not ds or len(ds) < 2:
        return []
    for d in ds:
        if ctx.known(d, item.box):
            return []  # already satisfied
    first = ds[0]
    if ctx.known(neg(first), item.box):
        return []  # disj_resolve will handle it
    key = (first, item.box)
    if key in ctx.case_done:
        return []
    ctx.case_done.add(key)
    return [Output((item.id,), (NewBox(item.box, (first,), (), ("case", item.id)),))]


def disj_resolve(ctx, d, f) -> List[Output]:
    ds = disjuncts(d.tname)
    if not ds:
        return []
    out = []
    for i, di in enumerate(ds):
        target = neg(di)
        for r in ctx.ematch(target, f.tname):
            rest = ds[:i] + ds[i + 1:]
            res = mk_disj(rest)
            box = ctx.boxes.merge(d.box, f.box, r.box)
            j = taut(res, d.just, fact_of(f, r))
            out.append(Output((d.id, f.id), (_emit_prop(res, box, j, passive=d.kind == DISJ),)))
            break
    return out


def contra_pair(ctx, x, y) -> List[Output]:
    if not is_not(y.tname):
        return []
    inner = y.tname.arg  # type: ignore[attr-defined]
    boxes = ctx.table.minboxes(x.tname, inner)
    if not boxes:
        return []
    eqbox = boxes[0]
    fact = eq_mp(x.just, ctx.table.explain(x.tname, inner, eqbox))
    box = ctx.boxes.merge(x.box, y.box, eqbox)
    j = rule("NotE", FALSE, fact, y.just)
    return [Output((x.id, y.id), (Emit(PROP, FALSE, box, j),))]


def num_contra(ctx, item) -> List[Output]:
    """A numeral relation or equality that evaluates to false gives False."""
    t = item.tname
    negated = is_not(t)
    atom = t.arg if negated else t  # type: ignore[attr-defined]
    view = numeral_view(ctx, atom)
    if view is None:
        return []
    value, prop2, eq, vbox = view
    if value != negated:
        return []
    if negated:
        fact = eq_mp(rule("NumEval", prop2), eq)
        j = rule("NotE", FALSE, fact, item.just)
    else:
        nf = eq_mp(rule("NumEval", mk_not(prop2)), cong(refl(NOT_C), eq))
        j = rule("NotE", FALSE, item.just, nf)
    return [Output((item.id,), (Emit(PROP, FALSE, ctx.boxes.merge(item.box, vbox), j),))]


def num_eval(ctx, item) -> List[Output]:
    """TERM a ⊕ b with numeral-valued sides: a ⊕ b = value."""
    t = item.tname
    h, args = strip_comb(t)
    if not (isinstance(h, Const) and h.name in _ARITH and len(args) == 2 and h.typ == _NAT2):
        return []
    va = _numeral_of(ctx, args[0])
    vb = _numeral_of(ctx, args[1])
    if va is None or vb is None:
        return []
    expr = mk_app(h, va[0], vb[0])
    value = Num(eval_nat(expr))  # type: ignore[arg-type]
    if any(isinstance(m, Num) for m in ctx.table.class_of(t)) and value in ctx.table.class_of(t):
        if ctx.table.minboxes(t, value):
            return []
    ev = rule("NumEval", mk_eq(expr, value))
    back = cong(cong(refl(h), va[1]), vb[1])  # expr = t
    j = trans(sym(back), ev)
    res = mk_eq(t, value)
    box = ctx.boxes.merge(va[2], vb[2])
    return [Output((item.id,), (Emit(PROP, res, box, j),))]


def nat_induct(ctx, item) -> List[Output]:
    eq = dest_eq(item.tname.arg) if is_not(item.tname) else None  # type: ignore[attr-defined]
    if eq is None or eq[1] != Num(0) or not isinstance(eq[0], Free) or eq[0].typ != NAT:
        return []
    n = eq[0].name
    out = []
    for i in sorted(ctx.boxes.closure(item.box)):
        if n not in dict(ctx.boxes[i].variables) or (i, n) in ctx.induct_done:
            continue
        if not induction_predicate(ctx.boxes, i, [n]):
            continue
        ctx.induct_done.add((i, n))
        hyp = nat_induct_hyp(ctx.boxes, i, n)
        j = Justification("IndHyp", hyp, (item.just,), (i, n))
        box = ctx.boxes.merge(ctx.boxes.prim(i), item.box)
        out.append(Output((item.id,), (_emit_prop(hyp, box, j),)))
    return out


def nat_induct_checked(ctx, i: int, n: str) -> None:
    if n not in dict(ctx.boxes[i].variables):
        raise NoEligibleVariable(f"{n} is not introduced in box {i}")


# --- universal instantiation ---------------------------------------------------


@dataclass(frozen=True)
class _ForallView:
    names: Tuple[str, ...]
    body: Term
    ant: Term
    rest: Term
    mode: str  # "imp", "nand" or "or"


def forall_view(ctx, item) -> Optional[_ForallView]:
    cache = ctx.cache.setdefault("forall", {})
    if item.id in cache:
        return cache[item.id]
    view = None
    t = item.tname
    names: List[str] = []
    while True:
        b = dest_binder(t, ALL)
        if b is None:
            break
        name = f"_{len(names)}"
        names.append(name)
        t = instantiate(b.body, Var(name, b.typ))
    if names:
        parts = dest_binop(t, IMP)
        if parts is not None:
            view = _ForallView(tuple(names), t, parts[0], parts[1], "imp")
        elif is_not(t) and dest_binop(t.arg, AND) is not None:  # type: ignore[attr-defined]
            a, b2 = dest_binop(t.arg, AND)  # type: ignore[attr-defined,misc]
            view = _ForallView(tuple(names), t, a, neg(b2), "nand")
        elif dest_binop(t, OR) is not None:
            a, b2 = dest_binop(t, OR)  # type: ignore[misc]
            view = _ForallView(tuple(names), t, neg(a), b2, "or")
        if view is not None:
            need = set(names)
            if not (need <= set(schematics(view.ant)) or need <= set(schematics(view.rest))):
                view = None
    cache[item.id] = view
    return view


def _forall_elim(item, names: Sequence[str], s) -> Justification:
    j = item.just
    prop = item.tname
    for name in names:
        b = dest_binder(prop, ALL)
        assert b is not None
        prop = instantiate(b.body, s[name])
        j = Justification("ForallE", prop, (j,), (s[name],))
    return j


def forall_inst(ctx, q, f) -> List[Output]:
    view = forall_view(ctx, q)
    if view is None:
        return []
    out = []
    need = set(view.names)
    if need <= set(schematics(view.ant)):
        for r in ctx.ematch(view.ant, f.tname):
            s = r.s
            inst = _forall_elim(q, view.names, s)
            res = apply_subst(s, view.rest)
            fact = fact_of(f, r)
            j = rule("MP", res, inst, fact) if view.mode == "imp" else taut(res, inst, fact)
            box = ctx.boxes.merge(q.box, f.box, r.box)
            out.append(Output((q.id, f.id), (_emit_prop(res, box, j),)))
    if need <= set(schematics(view.rest)):
        for r in ctx.ematch(neg(view.rest), f.tname):
            s = r.s
            inst = _forall_elim(q, view.names, s)
            res = neg(apply_subst(s, view.ant))
            j = taut(res, inst, fact_of(f, r))
            box = ctx.boxes.merge(q.box, f.box, r.box)
            out.append(Output((q.id, f.id), (_emit_prop(res, box, j),)))
    return out


def _forall_accept(ctx, item) -> bool:
    return forall_view(ctx, item) is not None


# ---------------------------------------------------------------------------
# Steps from theorems


def _smallest_cover(t: Term, names: Set[str]) -> Optional[Term]:
    """Smallest subterm (outside binders) containing all the given schematics."""
    best = None

    def walk(u: Term) -> None:
        nonlocal best
        if not u.closed:
            return
        if names <= set(schematics(u)) and not isinstance(u, Var):
            if best is None or term_size(u) < term_size(best):
                best = u
        h, args = strip_comb(u)
        for a in args:
            walk(a)

    walk(t)
    return best


def _pattern_shapes(ctx, p: Term) -> Optional[Set[str]]:
    cache = ctx.cache.setdefault("pshape", {})
    if p in cache:
        return cache[p]
    shapes: Optional[Set[str]] = set()
    for q in [p] + ctx.table.custom_alternatives(p):
        if isinstance(strip_comb(q)[0], Var):
            shapes = None
            break
        if is_not(q) and isinstance(strip_comb(q.arg)[0], Var):  # type: ignore[attr-defined]
            shapes = None
            break
        shapes.add(shape(q))  # type: ignore[union-attr]
    cache[p] = shapes
    return shapes


def _accepts(ctx, p: Term, item) -> bool:
    shapes = _pattern_shapes(ctx, p)
    if shapes is None:
        return True
    return bool(shapes & ctx.class_shapes(item.tname))


def step_from_theorem(spec: TheoremSpec) -> ProofStep:
    prems, concl = premises_and_conclusion(spec.statement)
    allv = set(schematics(spec.statement))
    name, stmt = spec.name, spec.statement

    def ax(s):
        full = {k: v for k, v in s.items() if k in allv}
        return axiom(name, full, apply_subst(full, stmt))

    if spec.direction == "rewrite":
        lhs, rhs = dest_eq(stmt)  # type: ignore[misc]

        def rewrite_body(ctx, item):
            out = []
            for r in ctx.ematch(lhs, item.tname):
                res_r = apply_subst(r.s, rhs)
                if res_r == item.tname:
                    continue
                if ctx.table.is_registered(res_r) and any(
                        ctx.boxes.leq(b, r.box) for b in ctx.table.minboxes(item.tname, res_r)):
                    continue  # already equal at no extra cost
                j = trans(sym(r.eq_just), ax(r.s))
                out.append(Output((item.id,), (Emit(PROP, mk_eq(item.tname, res_r), r.box, j),)))
            return out

        return ProofStep(name, 1, ((TERM,),), rewrite_body,
                         (lambda ctx, it: _accepts(ctx, lhs, it),))

    if spec.direction == "forward":
        slots = list(prems)
        result = concl

        def build(s, facts):
            j = ax(s)
            for f in facts:
                j = rule("MP", apply_subst(s, dest_binop(j.prop, IMP)[1]), j, f)  # type: ignore[index]
            return j
    elif spec.direction == "backward":
        k = spec.k or 1
        slots = [neg(concl)] + prems[:k - 1] + prems[k:]
        result = neg(prems[k - 1])

        def build(s, facts):
            return taut(apply_subst(s, result), ax(s), *facts)
    elif spec.direction == "resolve":
        slots = [neg(concl)]
        result = mk_disj([neg(p) for p in prems]) if prems else FALSE

        def build(s, facts):
            return taut(apply_subst(s, result), ax(s), *facts)
    else:
        raise StepError(f"unknown direction {spec.direction}")

    if len(slots) > 2:
        raise TooManyPremises(f"{name}: {len(slots)} slots needed, at most 2 supported")
    covered: Set[str] = set()
    for p in slots:
        covered |= set(schematics(p))

    if not slots:
        trigger = _smallest_cover(result, allv) if allv else None
        if allv and trigger is None:
            raise UnboundSchematic(f"{name}: no trigger term covers {sorted(allv)}")

        def term_body(ctx, item):
            if trigger is None:
                return []
            out = []
            for r in ctx.ematch(trigger, item.tname):
                res = apply_subst(r.s, result)
                out.append(Output((item.id,), (_emit_prop(res, r.box, ax(r.s), spec.passive),)))
            return out

        return ProofStep(name, 1, ((TERM,),), term_body,
                         (lambda ctx, it: trigger is not None and _accepts(ctx, trigger, it),))

    if not allv <= covered:
        raise UnboundSchematic(f"{name}: {sorted(allv - covered)} not determined by the matched premises")

    def emit(ctx, s, facts, box, inputs):
        res = apply_subst(s, result)
        return Output(tuple(inputs), (_emit_prop(res, box, build(s, facts), spec.passive),))

    if len(slots) == 1:
        pat = slots[0]

        def unary(ctx, item):
            out = []
            for r in ctx.ematch(pat, item.tname):
                box = ctx.boxes.merge(item.box, r.box)
                out.append(emit(ctx, r.s, [fact_of(item, r)], box, [item.id]))
            return out

        return ProofStep(name, 1, (PROP_KINDS,), unary, (lambda ctx, it: _accepts(ctx, pat, it),))

    p0, p1 = slots

    def binary(ctx, a, b):
        out = []
        for r0 in ctx.ematch(p0, a.tname):
            for r1 in ctx.ematch(p1, b.tname, r0.s):
                s = r1.s
                box = ctx.boxes.merge(a.box, b.box, r0.box, r1.box)
                out.append(emit(ctx, s, [fact_of(a, r0), fact_of(b, r1)], box, [a.id, b.id]))
        return out

    def fast(ctx, item):
        """One slot from an item, the other discharged by numeral evaluation."""
        out = []
        for i, (pi, pj) in enumerate(((p0, p1), (p1, p0))):
            if not _accepts(ctx, pi, item):
                continue
            for r in ctx.ematch(pi, item.tname):
                other = apply_subst(r.s, pj)
                if not other.ground:
                    continue
                nf = numeric_fact(ctx, other)
                if nf is None:
                    continue
                mine = fact_of(item, r)
                facts = [mine, nf[0]] if i == 0 else [nf[0], mine]
                box = ctx.boxes.merge(item.box, r.box, nf[1])
                out.append(emit(ctx, r.s, facts, box, [item.id]))
        return out

    return ProofStep(name, 2, (PROP_KINDS, PROP_KINDS), binary,
                     (lambda ctx, it: _accepts(ctx, p0, it), lambda ctx, it: _accepts(ctx, p1, it)),
                     fast)


# ---------------------------------------------------------------------------
# Registry


def _is_neg(ctx, item) -> bool:
    return is_not(item.tname)


def builtin_steps() -> List[ProofStep]:
    P = (PROP_KINDS,)
    return [
        ProofStep("conj_split", 1, P, conj_split, (lambda ctx, it: "&" in ctx.class_shapes(it.tname),)),
        ProofStep("neg_split", 1, P, neg_split),
        ProofStep("not_ex", 1, P, not_ex),
        ProofStep("not_all", 1, P, not_all),
        ProofStep("skolemize", 1, P, skolemize),
        ProofStep("disj_case", 1, ((DISJ_ACTIVE,),), disj_case),
        ProofStep("disj_resolve", 2, ((DISJ, DISJ_ACTIVE), PROP_KINDS), disj_resolve),
        ProofStep("contra_pair", 2, (PROP_KINDS, PROP_KINDS), contra_pair, (None, _is_neg)),
        ProofStep("forall_inst", 2, (PROP_KINDS, PROP_KINDS), forall_inst, (_forall_accept, None)),
        ProofStep("nat_induct", 1, P, nat_induct),
    ]


def numeric_steps() -> List[ProofStep]:
    return [
        ProofStep("num_contra", 1, (PROP_KINDS,), num_contra),
        ProofStep("num_eval", 1, ((TERM,),), num_eval),
    ]


def build_registry(theory) -> List[ProofStep]:
    """Logic steps first, then theorem steps in declaration order, then numerals."""
    steps = builtin_steps()
    for spec in theory.specs:
        steps.append(step_from_theorem(spec))
    steps.extend(numeric_steps())
    return steps


def registry_dispatch(registry: Sequence[ProofStep], ctx, item, others: Sequence) -> List[Tuple[str, Output]]:
    """Apply unary steps to item and binary steps to (item, other) and (other, item)."""
    out: List[Tuple[str, Output]] = []
    for step in registry:
        try:
            if step.arity == 1:
                if item.kind in step.kinds[0] and (not step.accept or step.accept[0] is None
                                                   or step.accept[0](ctx, item)):
                    out.extend((step.name, o) for o in step.body(ctx, item))
                continue
            if step.fast is not None and item.kind in step.kinds[0] + step.kinds[1]:
                out.extend((step.name, o) for o in step.fast(ctx, item))
            acc0 = step.accept[0] if step.accept else None
            acc1 = step.accept[1] if step.accept else None
            first = item.kind in step.kinds[0] and (acc0 is None or acc0(ctx, item))
            second = item.kind in step.kinds[1] and (acc1 is None or acc1(ctx, item))
            if not (first or second):
                continue
            for other in others:
                if other.id == item.id:
                    continue
                if first and other.kind in step.kinds[1] and (acc1 is None or acc1(ctx, other)):
                    out.extend((step.name, o) for o in step.body(ctx, item, other))
                if second and other.kind in step.kinds[0] and (acc0 is None or acc0(ctx, other)):
                    out.extend((step.name, o) for o in step.body(ctx, other, item))
        except Exception:  # a failing body is logged and skipped
            log.exception("step %s failed on item %d", step.name, item.id)
    return out
