"""Best-first saturation: items, scored updates, incremental matching."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .boxlattice import EMPTY, Box, BoxRegistry
from .kernel import GoalStatement, Justification, assume, contradiction_form, resolve
from .rewrite import EqualityRecord, RewriteTable
from .steps import (
    DISJ, DISJ_ACTIVE, PROP, PROP_KINDS, TERM, Emit, NewBox, Output, ProofStep, builtin_steps,
    numeric_steps, prop_kind, registry_dispatch, shape, skolem_output,
)
from .term import FALSE, TFun, Term, dest_eq, frees, show, subterms, term_size

log = logging.getLogger(__name__)


class IllFormedGoal(Exception):
    pass


@dataclass(frozen=True)
class Item:
    id: int
    kind: str
    tname: Term
    just: Optional[Justification]
    score: int
    box: Box
    update: int  # seq of the producing update
    flags: frozenset = frozenset()


@dataclass(frozen=True)
class Update:
    payload: Tuple
    score: int
    seq: int
    source: Tuple[str, Tuple[int, ...]]
    script: bool = False  # script updates carry no increment

    def __lt__(self, other: "Update") -> bool:
        return (self.score, self.seq) < (other.score, other.seq)


@dataclass(frozen=True)
class SearchConfig:
    max_updates: int = 2000
    w_base: int = 1
    w_size: int = 1
    w_box: int = 10

    def __post_init__(self):
        if self.max_updates < 1:
            raise ValueError("max_updates must be at least 1")


@dataclass(frozen=True)
class Outcome:
    kind: str  # Proved | Saturated | Timeout
    proof: Optional[Justification] = None
    pulled: int = 0
    warning: str = ""


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    score: int
    step: str
    inputs: Tuple[int, ...]
    payload: Tuple[str, ...]
    box: str
    items: Tuple[int, ...]
    edges: Tuple[int, ...]  # seqs of the updates that produced the inputs
    script: bool = False

    def text(self) -> str:
        ins = ",".join(str(i) for i in self.inputs)
        body = "; ".join(self.payload)
        tag = " [script]" if self.script else ""
        return f"#{self.seq} score={self.score} {self.step}({ins}) box={self.box}{tag}: {body}"

    def as_dict(self) -> dict:
        return {"seq": self.seq, "score": self.score, "step": self.step, "inputs": list(self.inputs),
                "payload": list(self.payload), "box": self.box, "items": list(self.items),
                "edges": list(self.edges), "script": self.script}


def is_table_equality(t: Term) -> bool:
    eq = dest_eq(t)
    return eq is not None and t.ground and not isinstance(eq[0].type, TFun)


class SearchState:
    def __init__(self, goal: GoalStatement, theory=None, config: Optional[SearchConfig] = None,
                 registry: Optional[Sequence[ProofStep]] = None):
        self.goal = goal
        self.theory = theory
        self.config = config or SearchConfig()
        if registry is None:
            registry = theory.registry() if theory is not None else builtin_steps() + numeric_steps()
        self.registry = list(registry)
        self.boxes = BoxRegistry()
        ac = theory.ac if theory is not None else ()
        matchers = theory.matcher_axioms() if theory is not None else ()
        self.table = RewriteTable(self.boxes, ac, matchers)
        self.items: List[Item] = []
        self.queue: List[Update] = []
        self.seq = 0
        self.pulled = 0
        self.outcome: Optional[Outcome] = None
        self.records: List[TraceRecord] = []
        self.history: List[Update] = []  # pulled updates, in order
        self.resolved: List[Box] = []
        # step bookkeeping
        self.cache: Dict[str, dict] = {}
        self.skolemized: Set[int] = set()
        self.case_done: Set = set()
        self.induct_done: Set = set()
        self.skolem_order: Dict[str, int] = {}
        self._used_names: Set[str] = set()
        self._by_tname: Dict[Term, List[Item]] = {}
        self._terms: Dict[Term, Item] = {}
        self._subterms: Dict[int, frozenset] = {}
        self._emitted: Set = set()
        self._shape_cache: Dict[Term, Tuple[int, frozenset]] = {}
        # script hooks: primitive box -> callback on its resolution; choose names by box
        self.on_resolved: Dict[int, Callable[[], None]] = {}
        self.choose_names: Dict[int, str] = {}
        self.box_tags: Dict[int, object] = {}
        self.box_origin: Dict[int, int] = {}  # primitive index -> seq of the creating update
        self.script_open: Dict[int, object] = {}  # subgoal box -> script command

    # --- context used by steps -----------------------------------------------

    def ematch(self, p: Term, t: Term, partial=None):
        return self.table.ematch(p, t, partial)

    def class_shapes(self, t: Term) -> frozenset:
        hit = self._shape_cache.get(t)
        if hit is not None and hit[0] == self.table.version:
            return hit[1]
        out = frozenset(shape(m) for m in self.table.class_of(t))
        self._shape_cache[t] = (self.table.version, out)
        return out

    def fresh(self, hint: str) -> str:
        base = hint.rstrip("0123456789") or "x"
        k = 0
        while f"{base}{k}" in self._used_names:
            k += 1
        name = f"{base}{k}"
        self._used_names.add(name)
        return name

    def reserve(self, name: str) -> None:
        self._used_names.add(name)

    def note_skolem(self, name: str) -> None:
        self.skolem_order.setdefault(name, len(self.skolem_order))

    def known(self, prop: Term, box: Box) -> bool:
        return any(self.boxes.leq(it.box, box) for it in self._by_tname.get(prop, ()) if it.kind != TERM)

    def dead(self, box: Box) -> bool:
        return any(self.boxes.leq(r, box) for r in self.resolved)

    def live_items(self) -> List[Item]:
        return [it for it in self.items if not self.dead(it.box)]

    # --- scoring ----------------------------------------------------------------

    def payload_box(self, payload: Sequence) -> Box:
        return self.boxes.merge(*(p.parent if isinstance(p, NewBox) else p.box for p in payload))

    def increment(self, payload: Sequence) -> int:
        size = 0
        for p in payload:
            if isinstance(p, NewBox):
                size += sum(term_size(a) for a in p.assumptions)
            else:
                size += term_size(p.tname)
        c = self.config
        return c.w_base + c.w_size * size + c.w_box * self.boxes.depth(self.payload_box(payload))

    def score_update(self, payload: Sequence, inputs: Sequence[int], script: bool = False) -> int:
        base = max((self.items[i].score for i in inputs), default=0)
        return base if script else base + self.increment(payload)

    # --- queue ------------------------------------------------------------------

    def push(self, step: str, inputs: Sequence[int], payload: Sequence, script: bool = False,
             score: Optional[int] = None) -> Optional[Update]:
        inputs = tuple(inputs)
        key = (step, inputs, tuple((p.tname, p.box) if isinstance(p, Emit) else (p.assumptions, p.parent)
                                   for p in payload))
        if key in self._emitted:
            return None
        self._emitted.add(key)
        if score is None:
            score = self.score_update(payload, inputs, script)
        u = Update(tuple(payload), score, self.seq, (step, inputs), script)
        self.seq += 1
        heapq.heappush(self.queue, u)
        return u

    def _useful(self, payload: Sequence) -> bool:
        for p in payload:
            if isinstance(p, NewBox):
                return True
            if self.dead(p.box):
                continue
            if p.kind == TERM:
                if p.tname not in self._terms:
                    return True
            elif not self.known(p.tname, p.box):
                return True
        return False

    def enqueue_outputs(self, outs: Sequence[Tuple[str, Output]]) -> None:
        for step, o in outs:
            if self._useful(o.payload):
                self.push(step, o.inputs, o.payload)

    # --- item insertion ---------------------------------------------------------

    def _append(self, kind: str, tname: Term, just, score: int, box: Box, seq: int, flags=frozenset()) -> Item:
        it = Item(len(self.items), kind, tname, just, score, box, seq, frozenset(flags))
        self.items.append(it)
        self._by_tname.setdefault(tname, []).append(it)
        for name in frees(tname):
            self._used_names.add(name)
        return it

    def _dispatch(self, it: Item) -> None:
        outs = registry_dispatch(self.registry, self, it, self.live_items())
        self.enqueue_outputs(outs)

    def _add_terms(self, t: Term, score: int, seq: int) -> List[Item]:
        new = []
        for s in subterms(t):
            if s in self._terms:
                continue
            touched = self.table.register_term(s)
            it = self._append(TERM, s, None, score, EMPTY, seq)
            self._terms[s] = it
            new.append(it)
            if touched:
                self._redispatch(touched, skip={it.id})
        return new

    def _redispatch(self, touched: Sequence[Term], skip=frozenset()) -> None:
        tset = set(touched)
        for it in list(self.items):
            if it.id in skip or self.dead(it.box):
                continue
            subs = self._subterms.get(it.id)
            if subs is None:
                subs = frozenset(subterms(it.tname)) | {it.tname}
                self._subterms[it.id] = subs
            if subs & tset:
                self._dispatch(it)

    def insert(self, e: Emit, score: int, seq: int) -> Optional[Item]:
        if self.dead(e.box):
            return None
        if e.kind == TERM:
            new = self._add_terms(e.tname, score, seq)
            for it in new:
                self._dispatch(it)
            return new[0] if new else None
        if self.known(e.tname, e.box):
            return None
        it = self._append(e.kind, e.tname, e.just, score, e.box, seq, e.flags)
        if e.tname == FALSE:
            self._resolve(it)
            return it
        new_terms = self._add_terms(e.tname, score, seq)
        if is_table_equality(e.tname):
            lhs, rhs = dest_eq(e.tname)  # type: ignore[misc]
            touched = self.table.add_equality(EqualityRecord(lhs, rhs, e.box, e.just))
            if touched:
                self._redispatch(touched, skip={it.id} | {t.id for t in new_terms})
        for f in e.flags:
            if isinstance(f, tuple) and f[0] == "choose":
                self.skolemized.add(it.id)
                self.reserve(f[1])
                o = skolem_output(self, it, f[1])
                self.push("choose", o.inputs, o.payload, script=True)
        self._dispatch(it)
        for t in new_terms:
            self._dispatch(t)
        return it

    def open_box(self, parent: Box, assumptions: Sequence[Term], variables=(), tag=None,
                 inputs: Sequence[int] = (), score: int = 0, seq: int = 0, script: bool = False) -> int:
        i = self.boxes.new_primitive(parent, assumptions, variables)
        self.box_tags[i] = tag
        self.box_origin[i] = seq
        for name, _ in variables:
            self.reserve(name)
        payload = [Emit(prop_kind(a), a, self.boxes.prim(i), assume(i, k, a)) for k, a in enumerate(assumptions)]
        if payload:
            self.push("assume", inputs, payload, script=script, score=score if script else None)
        return i

    def _resolve(self, it: Item) -> None:
        b = it.box
        res = resolve(b, it.just, self.boxes, self.skolem_order)  # type: ignore[arg-type]
        if res.success:
            if res.warning:
                log.warning(res.warning)
            self.outcome = Outcome("Proved", res.proof, self.pulled, res.warning)
            return
        self.resolved.append(b)
        for (j, target), i in zip(res.exports, b.members):
            flags = set()
            if i in self.choose_names:
                flags.add(("choose", self.choose_names[i]))
            e = Emit(prop_kind(j.prop), j.prop, target, j, frozenset(flags))
            self.push("resolve", (it.id,), [e], script=bool(flags))
        if len(b.members) == 1:
            self.script_open.pop(b.members[0], None)
            cb = self.on_resolved.pop(b.members[0], None)
            if cb is not None:
                cb()

    # --- main loop ----------------------------------------------------------------

    def apply(self, u: Update) -> None:
        step, inputs = u.source
        made: List[int] = []
        shown: List[str] = []
        rec_box = self.payload_box(u.payload)
        for p in u.payload:
            if isinstance(p, NewBox):
                i = self.open_box(p.parent, p.assumptions, p.variables, p.tag, inputs, u.score, u.seq)
                rec_box = self.boxes.prim(i)
                shown.append(f"new box {{{i}}}: " + ", ".join(show(a) for a in p.assumptions))
                continue
            before = len(self.items)
            self.insert(p, u.score, u.seq)
            made.extend(range(before, len(self.items)))
            shown.append(f"{p.kind} {show(p.tname)} @{p.box}")
        edges = tuple(sorted({self.items[i].update for i in inputs}))
        self.records.append(TraceRecord(u.seq, u.score, step, tuple(inputs), tuple(shown), str(rec_box),
                                        tuple(made), edges, u.script))

    def _live(self, u: Update) -> bool:
        for p in u.payload:
            b = p.parent if isinstance(p, NewBox) else p.box
            if not self.dead(b):
                return True
        return False

    def step_once(self) -> bool:
        """Pull and apply one update; False when the queue is empty."""
        while self.queue:
            u = heapq.heappop(self.queue)
            if not self._live(u):
                continue
            self.pulled += 1
            self.history.append(u)
            self.apply(u)
            return True
        return False


def init(goal: GoalStatement, theory=None, config: Optional[SearchConfig] = None,
         registry: Optional[Sequence[ProofStep]] = None) -> SearchState:
    try:
        props = contradiction_form(goal, theory.unfold if theory is not None else None)
    except Exception as e:
        raise IllFormedGoal(str(e)) from e
    for p in props:
        if not p.ground or p.type != FALSE.type:
            raise IllFormedGoal(f"not a closed proposition: {show(p)}")
    st = SearchState(goal, theory, config, registry)
    if theory is not None:
        for name in theory.names():
            st.reserve(name)
    for p in props:
        for name in frees(p):
            st.reserve(name)
    st.open_box(EMPTY, props, tuple(goal.variables), "goal", script=True)
    return st


def run(state: SearchState, config: Optional[SearchConfig] = None) -> Outcome:
    cfg = config or state.config
    while state.outcome is None:
        if state.pulled >= cfg.max_updates:
            state.outcome = Outcome("Timeout", None, state.pulled)
            break
        if not state.step_once():
            state.outcome = Outcome("Saturated", None, state.pulled)
            break
    out = state.outcome
    if out.pulled != state.pulled:
        out = Outcome(out.kind, out.proof, state.pulled, out.warning)
        state.outcome = out
    return out


def trace(state: SearchState) -> List[TraceRecord]:
    return list(state.records)
