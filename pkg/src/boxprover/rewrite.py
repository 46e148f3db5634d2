"""Box-annotated rewrite table.

Ground equalities live in congruence closures, one per box context: the
context for box m sees every record whose box is below m.  Contexts exist for
the merge-closure of record boxes (the only places a minimal box can sit), and
one extra "top" context holding every record drives candidate generation for
E-matching.  Each context keeps a proof forest so equivalences come with
replayable Trans/Sym/Cong chains.
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .boxlattice import EMPTY, Box, BoxRegistry
from .kernel import Justification, axiom, cong, refl, sym, trans
from .term import (
    Abs, App, Const, Free, Num, Subst, Term, Var, _match, apply_subst, dest_binop,
    fun_type, mk_app, mk_eq, schematics, show, strip_comb, subst_key, term_key, BOOL,
)

log = logging.getLogger(__name__)

MAX_CONTEXTS = 512
MAX_RESULTS = 256
MAX_AC_EXPANSIONS = 2


@dataclass(frozen=True)
class EqualityRecord:
    lhs: Term
    rhs: Term
    box: Box
    just: Justification


class EMatchResult:
    """A match: substitution, the box it needs, and a proof pσ = target built on demand."""
    __slots__ = ("subst", "box", "_build", "_just")

    def __init__(self, subst: Tuple[Tuple[str, Term], ...], box: Box, build):
        self.subst = subst
        self.box = box
        self._build = build
        self._just: Optional[Justification] = None

    @property
    def eq_just(self) -> Justification:
        if self._just is None:
            self._just = self._build()
        return self._just

    @property
    def s(self) -> Dict[str, Term]:
        return dict(self.subst)

    def __repr__(self) -> str:
        return f"EMatchResult({dict(self.subst)}, {self.box})"


def _decompose(t: Term) -> Tuple[Optional[Term], List[Term]]:
    """Head and arguments for congruence; leaves have no head."""
    if isinstance(t, App):
        h, args = strip_comb(t)
        if isinstance(h, (Const, Free)):
            return h, args
    return None, []


# ---------------------------------------------------------------------------
# One congruence closure with a proof forest


class _Closure:
    def __init__(self, records: List[EqualityRecord]):
        self.records = records
        self.rep: Dict[Term, Term] = {}
        self.members: Dict[Term, List[Term]] = {}
        self.uses: Dict[Term, List[Term]] = {}
        self.sig: Dict[tuple, Term] = {}
        self.pf: Dict[Term, Tuple[Term, tuple]] = {}

    def copy(self) -> "_Closure":
        c = _Closure(self.records)
        c.rep = dict(self.rep)
        c.members = {k: list(v) for k, v in self.members.items()}
        c.uses = {k: list(v) for k, v in self.uses.items()}
        c.sig = dict(self.sig)
        c.pf = dict(self.pf)
        return c

    def find(self, t: Term) -> Term:
        return self.rep[t]

    def same(self, a: Term, b: Term) -> bool:
        ra, rb = self.rep.get(a), self.rep.get(b)
        return ra is not None and ra == rb

    def add_term(self, t: Term, touched: Set[Term]) -> None:
        if t in self.rep:
            return
        h, args = _decompose(t)
        for a in args:
            self.add_term(a, touched)
        self.rep[t] = t
        self.members[t] = [t]
        self.uses[t] = []
        if h is not None:
            for a in args:
                self.uses[self.rep[a]].append(t)
            key = (h, tuple(self.rep[a] for a in args))
            other = self.sig.get(key)
            if other is None:
                self.sig[key] = t
            else:
                self.merge(t, other, ("cong", t, other), touched)

    def _reroot(self, x: Term) -> None:
        prev: Optional[Tuple[Term, tuple]] = None
        cur = x
        while True:
            nxt = self.pf.get(cur)
            if prev is None:
                self.pf.pop(cur, None)
            else:
                self.pf[cur] = prev
            if nxt is None:
                break
            prev = (cur, nxt[1])
            cur = nxt[0]

    def merge(self, a: Term, b: Term, reason: tuple, touched: Set[Term]) -> None:
        pending = [(a, b, reason)]
        while pending:
            a, b, reason = pending.pop()
            ra, rb = self.rep[a], self.rep[b]
            if ra == rb:
                continue
            self._reroot(a)
            self.pf[a] = (b, reason)
            if len(self.members[ra]) > len(self.members[rb]):
                ra, rb = rb, ra
            touched.update(self.members[ra])
            touched.update(self.members[rb])
            for m in self.members[ra]:
                self.rep[m] = rb
            self.members[rb].extend(self.members.pop(ra))
            moved = self.uses.pop(ra)
            for app in moved:
                h, args = _decompose(app)
                key = (h, tuple(self.rep[x] for x in args))
                other = self.sig.get(key)
                if other is None:
                    self.sig[key] = app
                elif self.rep[other] != self.rep[app]:
                    pending.append((app, other, ("cong", app, other)))
            self.uses[rb].extend(moved)

    # explanations

    def _edge(self, x: Term, y: Term, reason: tuple) -> Justification:
        if reason[0] == "rec":
            r = self.records[reason[1]]
            return r.just if (r.lhs, r.rhs) == (x, y) else sym(r.just)
        _, xs = _decompose(x)
        h, ys = _decompose(y)
        j = refl(h)  # type: ignore[arg-type]
        for xi, yi in zip(xs, ys):
            j = cong(j, self.explain(xi, yi))
        return j

    def explain(self, a: Term, b: Term) -> Justification:
        if a == b:
            return refl(a)
        up_a = [a]
        while up_a[-1] in self.pf:
            up_a.append(self.pf[up_a[-1]][0])
        pos = {t: i for i, t in enumerate(up_a)}
        up_b = [b]
        while up_b[-1] not in pos:
            up_b.append(self.pf[up_b[-1]][0])
        w = up_b[-1]
        j: Optional[Justification] = None
        for x in up_a[:pos[w]]:
            y, r = self.pf[x]
            e = self._edge(x, y, r)
            j = e if j is None else trans(j, e)
        k: Optional[Justification] = None
        for x in up_b[:-1]:
            y, r = self.pf[x]
            e = self._edge(x, y, r)
            k = e if k is None else trans(k, e)
        if k is not None:
            k = sym(k)
            j = k if j is None else trans(j, k)
        assert j is not None
        return j

    def classes(self) -> List[List[Term]]:
        return [list(v) for v in self.members.values()]


# ---------------------------------------------------------------------------
# AC axioms and proof-producing normalization


def ac_axiom_names(op: str) -> Tuple[str, str]:
    return f"ac_assoc[{op}]", f"ac_comm[{op}]"


def ac_axioms(op: Const) -> Dict[str, Term]:
    ty = op.typ.dom  # type: ignore[attr-defined]
    a, b, c = Var("a", ty), Var("b", ty), Var("c", ty)
    assoc, comm = ac_axiom_names(op.name)
    return {
        assoc: mk_eq(mk_app(op, mk_app(op, a, b), c), mk_app(op, a, mk_app(op, b, c))),
        comm: mk_eq(mk_app(op, a, b), mk_app(op, b, a)),
    }


class ACOp:
    def __init__(self, op: Const):
        self.op = op
        self.assoc_name, self.comm_name = ac_axiom_names(op.name)
        self.axioms = ac_axioms(op)

    def is_app(self, t: Term) -> bool:
        h, args = strip_comb(t)
        return h == self.op and len(args) == 2

    def flatten(self, t: Term) -> List[Term]:
        if self.is_app(t):
            return self.flatten(t.fun.arg) + self.flatten(t.arg)  # type: ignore[attr-defined]
        return [t]

    def combine(self, elems: Sequence[Term]) -> Term:
        """Left-associated chain in term order."""
        xs = sorted(elems, key=term_key)
        out = xs[0]
        for x in xs[1:]:
            out = mk_app(self.op, out, x)
        return out

    def _ax(self, name: str, **s: Term) -> Justification:
        return axiom(name, s, apply_subst(s, self.axioms[name]))

    def _assoc(self, a: Term, b: Term, c: Term) -> Justification:
        return self._ax(self.assoc_name, a=a, b=b, c=c)

    def _comm(self, a: Term, b: Term) -> Justification:
        return self._ax(self.comm_name, a=a, b=b)

    def _cong2(self, ja: Justification, jb: Justification) -> Justification:
        return cong(cong(refl(self.op), ja), jb)

    def normalize(self, t: Term) -> Tuple[Term, Justification]:
        """t = N where N is the left-associated sorted chain of t's operands."""
        if not self.is_app(t):
            return t, refl(t)
        a, b = t.fun.arg, t.arg  # type: ignore[attr-defined]
        na, ja = self.normalize(a)
        nb, jb = self.normalize(b)
        j = self._cong2(ja, jb)
        n, jm = self._merge(na, nb)
        return n, trans(j, jm)

    def _merge(self, a: Term, b: Term) -> Tuple[Term, Justification]:
        if not self.is_app(b):
            return self._insert(a, b)
        b1, b2 = b.fun.arg, b.arg  # type: ignore[attr-defined]
        j = sym(self._assoc(a, b1, b2))
        c, jc = self._merge(a, b1)
        j = trans(j, self._cong2(jc, refl(b2)))
        d, jd = self._insert(c, b2)
        return d, trans(j, jd)

    def _insert(self, c: Term, x: Term) -> Tuple[Term, Justification]:
        here = mk_app(self.op, c, x)
        if not self.is_app(c):
            if term_key(c) <= term_key(x):
                return here, refl(here)
            return mk_app(self.op, x, c), self._comm(c, x)
        c1, last = c.fun.arg, c.arg  # type: ignore[attr-defined]
        if term_key(last) <= term_key(x):
            return here, refl(here)
        j = self._assoc(c1, last, x)
        j = trans(j, self._cong2(refl(c1), self._comm(last, x)))
        j = trans(j, sym(self._assoc(c1, x, last)))
        d, jd = self._insert(c1, x)
        res = mk_app(self.op, d, last)
        return res, trans(j, self._cong2(jd, refl(last)))

    def replace_operand(self, t: Term, old: Term, new: Term,
                        just: Justification) -> Optional[Tuple[Term, Justification]]:
        """Replace the first operand (or sub-chain) equal to old; proof of t = t'."""
        if t == old:
            return new, just
        if not self.is_app(t):
            return None
        a, b = t.fun.arg, t.arg  # type: ignore[attr-defined]
        r = self.replace_operand(a, old, new, just)
        if r is not None:
            return mk_app(self.op, r[0], b), self._cong2(r[1], refl(b))
        r = self.replace_operand(b, old, new, just)
        if r is not None:
            return mk_app(self.op, a, r[0]), self._cong2(refl(a), r[1])
        return None


# ---------------------------------------------------------------------------
# Match trees: what a match needs, rebuilt into a proof once boxes are chosen
#   ("refl", t)               pσ-part is syntactically t
#   ("eq", a, b)              pσ-part is a, needs a ~ b
#   ("app", h, subs, m, t)    arguments via subs give h(..) = m, then m ~ t
#   ("ac", op, pat, subs, expansions, m, t)
#   ("custom", name, subst, inner)  axiom L = R instance, then inner match of R


def _reqs(tree: tuple, out: List[Tuple[Term, Term]]) -> None:
    kind = tree[0]
    if kind == "eq":
        if tree[1] != tree[2]:
            out.append((tree[1], tree[2]))
    elif kind == "app":
        for s in tree[2]:
            _reqs(s, out)
        if tree[3] != tree[4]:
            out.append((tree[3], tree[4]))
    elif kind == "ac":
        for _, s in tree[3]:
            _reqs(s, out)
        for e, e2 in tree[4]:
            out.append((e, e2))
        if tree[5] != tree[6]:
            out.append((tree[5], tree[6]))
    elif kind == "custom":
        _reqs(tree[3], out)


class RewriteTable:
    def __init__(self, boxes: BoxRegistry, ac_ops: Sequence[Const] = (),
                 matchers: Sequence[Tuple[str, Term]] = (), max_contexts: int = MAX_CONTEXTS):
        self.boxes = boxes
        self.records: List[EqualityRecord] = []
        self.terms: List[Term] = []
        self._known: Set[Term] = set()
        self.contexts: Dict[Box, _Closure] = {EMPTY: _Closure(self.records)}
        self.top = _Closure(self.records)
        self.ac: Dict[str, ACOp] = {op.name: ACOp(op) for op in ac_ops}
        self.matchers: List[Tuple[str, Term, Term, Term]] = []
        for name, stmt in matchers:
            lhs, rhs = dest_binop(stmt, "=")  # type: ignore[misc]
            self.matchers.append((name, stmt, lhs, rhs))
        self.max_contexts = max_contexts
        self.capped = False
        self.version = 0
        self._minbox_cache: Dict[Tuple[Term, Term], List[Box]] = {}

    # --- registration ---------------------------------------------------

    def is_registered(self, t: Term) -> bool:
        return t in self._known

    def register_term(self, t: Term) -> List[Term]:
        """Add t and its subterms; returns terms whose class changed by congruence."""
        if t in self._known:
            return []
        if not t.ground:
            raise ValueError(f"cannot register non-ground term {show(t)}")
        new: List[Term] = []
        self._collect(t, new)
        touched: Set[Term] = set()
        for u in new:
            self.top.add_term(u, touched)
            for ctx in self.contexts.values():
                ctx.add_term(u, touched)
        if touched:
            self._changed()
        return self._ordered(touched)

    def _collect(self, t: Term, new: List[Term]) -> None:
        if t in self._known:
            return
        for a in _decompose(t)[1]:
            self._collect(a, new)
        self._known.add(t)
        self.terms.append(t)
        new.append(t)

    def _ordered(self, ts: Set[Term]) -> List[Term]:
        order = {t: i for i, t in enumerate(self.terms)}
        return sorted(ts, key=lambda t: order.get(t, -1))

    def _changed(self) -> None:
        self.version += 1
        self._minbox_cache.clear()

    # --- equalities -------------------------------------------------------

    def add_equality(self, e: EqualityRecord) -> List[Term]:
        """Merge lhs and rhs in every context above e.box; returns touched terms."""
        touched: Set[Term] = set(self.register_term(e.lhs))
        touched.update(self.register_term(e.rhs))
        if e.lhs == e.rhs:
            return self._ordered(touched)
        for ctx_box, ctx in self.contexts.items():
            if self.boxes.leq(ctx_box, e.box) and ctx.same(e.lhs, e.rhs):
                return self._ordered(touched)  # already known at least as cheaply
        idx = len(self.records)
        self.records.append(e)
        reason = ("rec", idx)
        self.top.merge(e.lhs, e.rhs, reason, touched)
        existing = list(self.contexts.items())
        for ctx_box, ctx in existing:
            if self.boxes.leq(e.box, ctx_box):
                ctx.merge(e.lhs, e.rhs, reason, touched)
        wanted = {e.box} | {self.boxes.merge(e.box, b) for b, _ in existing}
        for b in sorted(wanted):
            if b in self.contexts:
                continue
            if len(self.contexts) >= self.max_contexts:
                if not self.capped:
                    log.warning("rewrite table context cap %d reached", self.max_contexts)
                self.capped = True
                break
            self.contexts[b] = self._build_context(b, touched)
        self._changed()
        return self._ordered(touched)

    def _build_context(self, b: Box, touched: Set[Term]) -> _Closure:
        base_box = max((c for c in self.contexts if self.boxes.leq(c, b)),
                       key=lambda c: (len(self.boxes.closure(c)), c))
        ctx = self.contexts[base_box].copy()
        sink: Set[Term] = set()
        for k, r in enumerate(self.records):
            if self.boxes.leq(r.box, b) and not self.boxes.leq(r.box, base_box):
                ctx.merge(r.lhs, r.rhs, ("rec", k), sink)
        return ctx

    # --- queries ------------------------------------------------------------

    def minboxes(self, a: Term, b: Term) -> List[Box]:
        """Minimal boxes in which a ~ b."""
        if a == b:
            return [EMPTY]
        key = (a, b)
        hit = self._minbox_cache.get(key)
        if hit is not None:
            return hit
        found: List[Box] = []
        if self.top.same(a, b):
            for bx in sorted(self.contexts, key=lambda c: (len(self.boxes.closure(c)), c)):
                if any(self.boxes.leq(f, bx) for f in found):
                    continue
                if self.contexts[bx].same(a, b):
                    found.append(bx)
        self._minbox_cache[key] = found
        return found

    def equiv(self, a: Term, b: Term) -> Optional[Tuple[Box, Justification]]:
        boxes = self.minboxes(a, b)
        if not boxes:
            return None
        bx = boxes[0]
        return bx, self.explain(a, b, bx)

    def equiv_in(self, a: Term, b: Term, box: Box) -> Optional[Tuple[Box, Justification]]:
        """Like equiv, restricted to boxes below the given one."""
        for bx in self.minboxes(a, b):
            if self.boxes.leq(bx, box):
                return bx, self.explain(a, b, bx)
        return None

    def explain(self, a: Term, b: Term, box: Box) -> Justification:
        if a == b:
            return refl(a)
        return self.contexts[box].explain(a, b)

    def class_of(self, t: Term) -> List[Term]:
        """Members of t's class in the coarsest context."""
        if t not in self.top.rep:
            return [t]
        return self.top.members[self.top.rep[t]]

    def partition(self, box: Box) -> List[List[Term]]:
        """Classes of registered terms in the context of box."""
        ctx = self.contexts.get(box)
        if ctx is None:
            below = [c for c in self.contexts if self.boxes.leq(c, box)]
            best = max(below, key=lambda c: (len(self.boxes.closure(c)), c))
            ctx = self._build_context_for_query(best, box)
        return [sorted(c, key=term_key) for c in ctx.classes()]

    def _build_context_for_query(self, base: Box, b: Box) -> _Closure:
        ctx = self.contexts[base].copy()
        sink: Set[Term] = set()
        for k, r in enumerate(self.records):
            if self.boxes.leq(r.box, b):
                ctx.merge(r.lhs, r.rhs, ("rec", k), sink)
        return ctx

    # --- E-matching -----------------------------------------------------------

    def ematch(self, p: Term, t: Term, partial: Optional[Subst] = None) -> List[EMatchResult]:
        trees = list(itertools.islice(self._top(p, t, dict(partial or {})), MAX_RESULTS))
        h = strip_comb(p)[0]
        if isinstance(h, Const) and h.name in self.ac and len(strip_comb(p)[1]) == 2:
            trees += list(itertools.islice(self._ac(self.ac[h.name], p, t, dict(partial or {})), MAX_RESULTS))
        trees += self._custom(p, t, dict(partial or {}))
        return self._finish(p, trees)

    def ematch_ac(self, p: Term, t: Term, op: str, partial: Optional[Subst] = None) -> List[EMatchResult]:
        trees = list(itertools.islice(self._ac(self.ac[op], p, t, dict(partial or {})), MAX_RESULTS))
        return self._finish(p, trees)

    def _finish(self, p: Term, trees) -> List[EMatchResult]:
        out: Dict[tuple, EMatchResult] = {}
        for s, tree in trees:
            reqs: List[Tuple[Term, Term]] = []
            _reqs(tree, reqs)
            for box, choice in self._box_choices(reqs):
                key = (subst_key(s), box)
                if key in out:
                    continue
                out[key] = EMatchResult(key[0], box, functools.partial(self._build, tree, choice))
        # the same substitution in a larger box says nothing new
        kept = [r for r in out.values()
                if not any(o.subst == r.subst and o.box != r.box and self.boxes.leq(o.box, r.box)
                           for o in out.values())]
        return sorted(kept, key=lambda r: (self.boxes.depth(r.box), r.box))

    def _box_choices(self, reqs: List[Tuple[Term, Term]]) -> List[Tuple[Box, Dict]]:
        uniq = list(dict.fromkeys(reqs))
        options = []
        for a, b in uniq:
            mb = self.minboxes(a, b)
            if not mb:
                return []
            options.append(mb)
        results: List[Tuple[Box, Dict]] = []
        for combo in itertools.product(*options):
            box = self.boxes.merge(*combo) if combo else EMPTY
            results.append((box, dict(zip(uniq, combo))))
            if len(results) > 64:
                break
        minimal = []
        for box, choice in sorted(results, key=lambda bc: (len(self.boxes.closure(bc[0])), bc[0])):
            if any(self.boxes.leq(m, box) for m, _ in minimal):
                continue
            minimal.append((box, choice))
        return minimal

    def _build(self, tree: tuple, choice: Dict) -> Justification:
        kind = tree[0]
        if kind == "refl":
            return refl(tree[1])
        if kind == "eq":
            a, b = tree[1], tree[2]
            return refl(a) if a == b else self.explain(a, b, choice[(a, b)])
        if kind == "app":
            _, h, subs, m, t = tree
            j = refl(h)
            for sub in subs:
                j = cong(j, self._build(sub, choice))
            if m != t:
                j = trans(j, self.explain(m, t, choice[(m, t)]))
            return j
        if kind == "ac":
            return self._build_ac(tree, choice)
        _, name, ax_subst, inner = tree
        _, stmt, _, _ = next(x for x in self.matchers if x[0] == name)
        inst = axiom(name, ax_subst, apply_subst(ax_subst, stmt))
        return trans(inst, self._build(inner, choice))

    def _build_ac(self, tree: tuple, choice: Dict) -> Justification:
        _, opname, pat, subs, expansions, m, t = tree
        ac = self.ac[opname]
        # pattern side: replace rigid operands by the matched elements
        cur = pat
        j_pat = refl(pat)
        for piece, sub in subs:
            jp = self._build(sub, choice)
            elem = jp.prop.arg  # type: ignore[attr-defined]
            r = ac.replace_operand(cur, piece, elem, jp)
            assert r is not None
            cur, jr = r
            j_pat = trans(j_pat, jr)
        n1, jn1 = ac.normalize(cur)
        # target side: expand operands of m
        side = m
        j_t = refl(m)
        for e, e2 in expansions:
            r = ac.replace_operand(side, e, e2, self.explain(e, e2, choice[(e, e2)]))
            assert r is not None
            side, jr = r
            j_t = trans(j_t, jr)
        n2, jn2 = ac.normalize(side)
        assert n1 == n2, (show(n1), show(n2))
        j = trans(trans(j_pat, jn1), sym(trans(j_t, jn2)))
        if m != t:
            j = trans(j, self.explain(m, t, choice[(m, t)]))
        return j

    # generators yielding (subst, tree)

    def _top(self, p: Term, t: Term, s: Subst) -> Iterator[Tuple[Subst, tuple]]:
        if isinstance(p, Var) and not p.numc and p.name not in s and t.type == p.typ:
            # a bare schematic matches every member of t's class
            yield {**s, p.name: t}, ("refl", t)
            for m in self.class_of(t):
                if m != t:
                    yield {**s, p.name: m}, ("eq", m, t)
            return
        yield from self._m(p, t, s)

    def _m(self, p: Term, t: Term, s: Subst) -> Iterator[Tuple[Subst, tuple]]:
        if not p.schematic:
            if p == t:
                yield s, ("refl", t)
                return
            if p in self._known:
                if self.top.same(p, t):
                    yield s, ("eq", p, t)
                return
            if not p.ground or _decompose(p)[0] is None:
                return
            # unregistered ground application: match it structurally
        if isinstance(p, Var):
            if p.name in s:
                v = s[p.name]
                if v == t:
                    yield s, ("refl", t)
                elif self.top.same(v, t):
                    yield s, ("eq", v, t)
                return
            if t.type != p.typ:
                return
            if p.numc:
                for n in self.class_of(t):
                    if isinstance(n, Num):
                        yield {**s, p.name: n}, ("eq", n, t)
                return
            yield {**s, p.name: t}, ("refl", t)
            return
        h, pargs = strip_comb(p)
        if isinstance(h, Var) or isinstance(p, Abs):
            # flexible head or binder: syntactic higher-order match per member
            for m in self.class_of(t):
                r = _match(p, m, s, ho=True)
                if r is not None:
                    yield r, ("eq", m, t)
            return
        for m in self.class_of(t):
            mh, margs = _decompose(m)
            if mh != h or len(margs) != len(pargs):
                continue
            for s2, subs in self._args(pargs, margs, s, 0):
                yield s2, ("app", h, subs, m, t)

    def _args(self, ps: Sequence[Term], ts: Sequence[Term], s: Subst, k: int) -> Iterator[Tuple[Subst, list]]:
        if k == len(ps):
            yield s, []
            return
        p, t = ps[k], ts[k]
        if isinstance(p, Abs) or isinstance(t, Abs):
            r = _match(p, t, s, ho=True) if p.schematic else (s if p == t else None)
            if r is None:
                return
            for s2, rest in self._args(ps, ts, r, k + 1):
                yield s2, [("refl", t)] + rest
            return
        for s1, tree in self._m(p, t, s):
            for s2, rest in self._args(ps, ts, s1, k + 1):
                yield s2, [tree] + rest

    def _ac(self, ac: ACOp, p: Term, t: Term, s: Subst) -> Iterator[Tuple[Subst, tuple]]:
        pops = ac.flatten(p)
        bare_names = [x.name for x in pops if isinstance(x, Var) and x.name not in s and not x.numc]
        if len(set(bare_names)) != len(bare_names):
            return
        bare = [x for x in pops if isinstance(x, Var) and x.name in bare_names]
        rigid = [x for x in pops if x not in bare]
        for m in self.class_of(t):
            if not ac.is_app(m):
                continue
            yield from self._ac_assign(ac, p, rigid, bare, ac.flatten(m), s, [], [], m, t)

    def _ac_assign(self, ac: ACOp, p, rigid, bare, elems, s, subs, expansions, m, t):
        if len(subs) == len(rigid):
            yield from self._ac_bare(ac, p, bare, elems, s, subs, expansions, m, t)
            return
        q = rigid[len(subs)]
        hit = False
        for i, e in enumerate(elems):
            rest = elems[:i] + elems[i + 1:]
            for s2, tree in self._m(q, e, s):
                hit = True
                yield from self._ac_assign(ac, p, rigid, bare, rest, s2, subs + [(q, tree)], expansions, m, t)
        if hit or len(expansions) >= MAX_AC_EXPANSIONS:
            return
        for i, e in enumerate(elems):
            for e2 in self.class_of(e):
                if e2 == e or not ac.is_app(e2):
                    continue
                grown = elems[:i] + elems[i + 1:] + ac.flatten(e2)
                yield from self._ac_assign(ac, p, rigid, bare, grown, s, subs, expansions + [(e, e2)], m, t)

    def _ac_bare(self, ac: ACOp, p, bare, elems, s, subs, expansions, m, t):
        if not bare:
            if not elems:
                yield self._ac_result(ac, p, s, subs, expansions, m, t)
            return
        if len(elems) < len(bare):
            return
        ty = ac.op.typ.dom  # type: ignore[attr-defined]
        if any(v.typ != ty for v in bare):
            return
        seen = set()
        # any one bare schematic may absorb the remainder; the others take single elements
        for j, absorber in enumerate(bare):
            singles = bare[:j] + bare[j + 1:]
            for pick in itertools.permutations(range(len(elems)), len(singles)):
                s2 = dict(s)
                for v, i in zip(singles, pick):
                    s2[v.name] = elems[i]
                rest = [e for i, e in enumerate(elems) if i not in pick]
                s2[absorber.name] = ac.combine(rest)
                key = subst_key(s2)
                if key in seen:
                    continue
                seen.add(key)
                yield self._ac_result(ac, p, s2, subs, expansions, m, t)

    def _ac_result(self, ac, p, s, subs, expansions, m, t):
        pat = apply_subst(s, p)
        # each rigid operand instance is located in pat by its instantiated form
        inst_subs = tuple((apply_subst(s, q), tree) for q, tree in subs)
        return s, ("ac", ac.op.name, pat, inst_subs, tuple(expansions), m, t)

    def custom_alternatives(self, p: Term) -> List[Term]:
        """Patterns the custom matchers try in place of p."""
        out = []
        for _, _, lhs, rhs in self.matchers:
            theta = _match(lhs, p, {}, ho=False)
            if theta is not None:
                out.append(apply_subst(theta, rhs))
        return out

    def _custom(self, p: Term, t: Term, s: Subst) -> List[Tuple[Subst, tuple]]:
        out = []
        for name, stmt, lhs, rhs in self.matchers:
            theta = _match(lhs, p, {}, ho=False)
            if theta is None:
                continue
            p2 = apply_subst(theta, rhs)
            for s2, tree in itertools.islice(self._m(p2, t, s), MAX_RESULTS):
                ax_s = {k: apply_subst(s2, v) for k, v in theta.items()}
                if not all(v.ground for v in ax_s.values()):
                    continue
                out.append((s2, ("custom", name, ax_s, tree)))
        return out

    # --- debugging -------------------------------------------------------------

    def dump(self) -> str:
        lines = []
        for b in sorted(self.contexts, key=lambda c: (len(self.boxes.closure(c)), c)):
            classes = [c for c in self.partition(b) if len(c) > 1]
            if not classes:
                continue
            lines.append(f"box {b}:")
            for c in sorted(classes, key=lambda c: term_key(c[0])):
                lines.append("  " + " = ".join(show(x) for x in c))
        return "\n".join(lines)
