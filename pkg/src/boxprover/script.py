"""Proof scripts: OBTAIN, CASE, CHOOSE and induction commands joined by THEN and WITH.

Terms inside a script are written infix (``prime p ∧ p dvd fact n + 1``) or as
s-expressions when a parenthesis opens on an operator (``(dvd p (fact n))``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

from .boxlattice import Box
from .kernel import Justification, strong_induct_hyp
from .steps import Emit, prop_kind
from .syntax import Elaborator, ParseError, SExpr
from .term import BOOL, NAT, Free, Num, SimpleType, Term, mk_eq, mk_ex, abstract_free, neg, show


class ScriptSyntaxError(SyntaxError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


class FreshnessError(Exception):
    pass


class ScriptStuck(Exception):
    def __init__(self, cmd: "Command"):
        super().__init__(f"script step not proved: {render_command(cmd)}")
        self.cmd = cmd


# --- commands and script trees ---------------------------------------------------


@dataclass(frozen=True)
class Obtain:
    goal: Term


@dataclass(frozen=True)
class Case:
    hyp: Term


@dataclass(frozen=True)
class Choose:
    var: str
    typ: SimpleType
    body: Term


@dataclass(frozen=True)
class StrongInduct:
    var: str
    arbitraries: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Induct:
    var: str


Command = Union[Obtain, Case, Choose, StrongInduct, Induct]


@dataclass(frozen=True)
class Atomic:
    command: Command


@dataclass(frozen=True)
class Then:
    first: "Script"
    second: "Script"


@dataclass(frozen=True)
class With:
    atomic: Atomic
    sub: "Script"


Script = Union[Atomic, Then, With]


def render_command(cmd: Command) -> str:
    if isinstance(cmd, Obtain):
        return f"OBTAIN {show(cmd.goal)}"
    if isinstance(cmd, Case):
        return f"CASE {show(cmd.hyp)}"
    if isinstance(cmd, Choose):
        return f"CHOOSE {cmd.var}, {show(cmd.body)}"
    if isinstance(cmd, StrongInduct):
        arbs = f", [Arbitrary {', '.join(cmd.arbitraries)}]" if cmd.arbitraries else ""
        return f"STRONG_INDUCT ({cmd.var}{arbs})"
    return f"INDUCT {cmd.var}"


def render_script(s: Script) -> str:
    if isinstance(s, Atomic):
        return render_command(s.command)
    if isinstance(s, Then):
        return f"{render_script(s.first)} THEN {render_script(s.second)}"
    return f"{render_script(s.atomic)} WITH {render_script(s.sub)}"


# --- tokens ------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op>-->|⟶|<=|>=|!=|=>|≤|≥|≠|∧|∨|¬|∀|∃|/\\|\\/|::|[&|~=<>+\-*()\[\],.:])
  | (?P<id>\??[A-Za-z_][A-Za-z0-9_']*|\d+)
""", re.VERBOSE)

KEYWORDS = {"OBTAIN", "CASE", "CHOOSE", "STRONG_INDUCT", "INDUCT", "THEN", "WITH"}
_ALIAS = {"&": "∧", "/\\": "∧", "|": "∨", "\\/": "∨", "~": "¬", "-->": "⟶", "<=": "≤", ">=": "≥",
          "!=": "≠", "::": ":"}
_RELOPS = {"=": "=", "≠": "!=", "<": "<", "≤": "<=", ">": ">", "≥": ">=", "dvd": "dvd"}
_SEXPR_HEADS = {"and", "or", "not", "=>", "=", "!=", "forall", "exists", "lambda",
                "<", "<=", ">", ">=", "+", "-", "*", "dvd"}


@dataclass(frozen=True)
class Tok:
    text: str
    pos: int
    raw: str


def tokenize(src: str) -> List[Tok]:
    out = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            raise ScriptSyntaxError(f"unexpected character {src[i]!r}", i)
        if m.lastgroup != "ws":
            raw = m.group()
            out.append(Tok(_ALIAS.get(raw, raw), i, raw))
        i = m.end()
    return out


# --- infix terms -------------------------------------------------------------------


class _TermParser:
    def __init__(self, toks: List[Tok], end: int):
        self.toks = toks
        self.i = 0
        self.end = end

    def peek(self) -> Optional[str]:
        return self.toks[self.i].text if self.i < len(self.toks) else None

    def pos(self) -> int:
        return self.toks[self.i].pos if self.i < len(self.toks) else self.end

    def take(self, want: Optional[str] = None) -> Tok:
        if self.i >= len(self.toks):
            raise ScriptSyntaxError(f"expected {want or 'more input'}", self.end)
        t = self.toks[self.i]
        if want is not None and t.text != want:
            raise ScriptSyntaxError(f"expected {want!r}, found {t.raw!r}", t.pos)
        self.i += 1
        return t

    def parse(self) -> SExpr:
        sx = self.imp()
        if self.i != len(self.toks):
            raise ScriptSyntaxError(f"unexpected {self.toks[self.i].raw!r}", self.pos())
        return sx

    def imp(self) -> SExpr:
        a = self.disj()
        if self.peek() in ("⟶", "=>"):
            self.take()
            return ["=>", a, self.imp()]
        return a

    def disj(self) -> SExpr:
        parts = [self.conj()]
        while self.peek() == "∨":
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else ["or", *parts]

    def conj(self) -> SExpr:
        parts = [self.unary()]
        while self.peek() == "∧":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else ["and", *parts]

    def unary(self) -> SExpr:
        t = self.peek()
        if t == "¬":
            self.take()
            return ["not", self.unary()]
        if t in ("∀", "∃"):
            self.take()
            name = self.take().text
            ty: SExpr = "nat"
            if self.peek() == ":":
                self.take()
                ty = self.type_()
            self.take(".")
            return ["forall" if t == "∀" else "exists", [name, ty], self.imp()]
        return self.rel()

    def type_(self) -> SExpr:
        if self.peek() == "(":
            self.take()
            parts = []
            while self.peek() != ")":
                parts.append(self.type_())
            self.take(")")
            return parts
        return self.take().text

    def rel(self) -> SExpr:
        a = self.sum()
        op = self.peek()
        if op in _RELOPS:
            self.take()
            return [_RELOPS[op], a, self.sum()]
        return a

    def sum(self) -> SExpr:
        a = self.prod()
        while self.peek() in ("+", "-"):
            op = self.take().text
            a = [op, a, self.prod()]
        return a

    def prod(self) -> SExpr:
        a = self.app()
        while self.peek() == "*":
            self.take()
            a = ["*", a, self.app()]
        return a

    def _starts_atom(self) -> bool:
        t = self.peek()
        if t is None:
            return False
        if t == "(":
            return True
        return re.fullmatch(r"\??[A-Za-z_][A-Za-z0-9_']*|\d+", t) is not None and t not in _RELOPS

    def app(self) -> SExpr:
        if not self._starts_atom():
            raise ScriptSyntaxError("expected a term", self.pos())
        parts = [self.atom()]
        while self._starts_atom():
            parts.append(self.atom())
        return parts[0] if len(parts) == 1 else parts

    def atom(self) -> SExpr:
        t = self.take()
        if t.text != "(":
            return t.text
        if self.peek() in _SEXPR_HEADS or (self.peek() or "") in ("⟶",):
            return self.sexpr_tail()
        inner = self.imp()
        self.take(")")
        return inner

    def sexpr_tail(self) -> SExpr:
        out: List[SExpr] = []
        while self.peek() != ")":
            t = self.take()
            if t.text == "(":
                out.append(self.sexpr_tail())
            else:
                out.append(t.raw if t.raw in ("=>", "<=", ">=", "!=") else t.text)
        self.take(")")
        return out


def infix_to_sexpr(toks: List[Tok], end: int) -> SExpr:
    if not toks:
        raise ScriptSyntaxError("expected a term", end)
    return _TermParser(toks, end).parse()


# --- script parser -------------------------------------------------------------------


class _ScriptParser:
    def __init__(self, src: str, theory, variables: Dict[str, SimpleType]):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.theory = theory
        self.problem_vars = dict(variables)
        self.vars = dict(variables)

    def peek(self) -> Optional[str]:
        return self.toks[self.i].text if self.i < len(self.toks) else None

    def pos(self) -> int:
        return self.toks[self.i].pos if self.i < len(self.toks) else len(self.src)

    def take(self, want: Optional[str] = None) -> Tok:
        if self.i >= len(self.toks):
            raise ScriptSyntaxError(f"expected {want or 'more input'}", len(self.src))
        t = self.toks[self.i]
        if want is not None and t.text != want:
            raise ScriptSyntaxError(f"expected {want!r}, found {t.raw!r}", t.pos)
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", t.text) or t.text in KEYWORDS:
            raise ScriptSyntaxError(f"expected a variable name, found {t.raw!r}", t.pos)
        return t.text

    def script(self) -> Script:
        s = self.seq()
        if self.i != len(self.toks):
            raise ScriptSyntaxError(f"unexpected {self.toks[self.i].raw!r}", self.pos())
        return s

    def seq(self) -> Script:
        s = self.withexpr()
        while self.peek() == "THEN":
            self.take()
            s = Then(s, self.withexpr())
        return s

    def withexpr(self) -> Script:
        a = self.atomic()
        if self.peek() == "WITH":
            self.take()
            return With(a, self.withexpr())
        return a

    def term_tokens(self) -> Tuple[List[Tok], int]:
        start = self.i
        depth = 0
        while self.i < len(self.toks):
            t = self.toks[self.i].text
            if depth == 0 and t in KEYWORDS:
                break
            depth += t == "("
            depth -= t == ")"
            self.i += 1
        return self.toks[start:self.i], self.pos()

    def elaborate(self, sx: SExpr, pos: int, new: Optional[str] = None) -> Tuple[Term, Dict]:
        scope = self.theory.scope(self.vars, allow_new_frees=new is not None)
        el = Elaborator(scope)
        try:
            t = el.term(sx, BOOL)
        except ParseError as e:
            raise ScriptSyntaxError(str(e), pos) from e
        extra = el.free_types()
        bad = sorted(k for k in extra if k != new)
        if bad:
            raise ScriptSyntaxError(f"unknown identifier {bad[0]}", pos)
        return self.theory.unfold(t), extra

    def atomic(self) -> Atomic:
        t = self.take()
        kw = t.text
        if kw in ("OBTAIN", "CASE"):
            toks, end = self.term_tokens()
            term, _ = self.elaborate(infix_to_sexpr(toks, end), t.pos)
            return Atomic(Obtain(term) if kw == "OBTAIN" else Case(term))
        if kw == "CHOOSE":
            name = self.ident()
            if name in self.problem_vars or name in self.theory.names():
                raise FreshnessError(f"CHOOSE variable {name} is already bound in the problem")
            self.take(",")
            toks, end = self.term_tokens()
            body, extra = self.elaborate(infix_to_sexpr(toks, end), t.pos, new=name)
            ty = extra.get(name, NAT)
            self.vars[name] = ty
            return Atomic(Choose(name, ty, body))
        if kw == "STRONG_INDUCT":
            self.take("(")
            var = self.ident()
            arbs: List[str] = []
            if self.peek() == ",":
                self.take()
                self.take("[")
                a = self.take()
                if a.text != "Arbitrary":
                    raise ScriptSyntaxError("expected Arbitrary", a.pos)
                arbs.append(self.ident())
                while self.peek() == ",":
                    self.take()
                    arbs.append(self.ident())
                self.take("]")
            self.take(")")
            self._known_var(var, t.pos)
            for a in arbs:
                self._known_var(a, t.pos)
            return Atomic(StrongInduct(var, tuple(arbs)))
        if kw == "INDUCT":
            var = self.ident()
            self._known_var(var, t.pos)
            return Atomic(Induct(var))
        raise ScriptSyntaxError(f"expected a command, found {t.raw!r}", t.pos)

    def _known_var(self, name: str, pos: int) -> None:
        if self.vars.get(name) is None:
            raise ScriptSyntaxError(f"unknown variable {name}", pos)
        if name in self.vars and self.vars[name] != NAT:
            raise ScriptSyntaxError(f"induction variable {name} must be a natural number", pos)


def parse(src: str, theory=None, variables: Optional[Dict[str, SimpleType]] = None) -> Script:
    """Parse a script; terms are elaborated against the theory and problem variables."""
    if theory is None:
        from .theory import builtin_nat
        theory = builtin_nat()
    return _ScriptParser(src, theory, variables or {}).script()


def parse_optional(src: str, theory=None, variables=None) -> Optional[Script]:
    return parse(src, theory, variables) if src.strip() else None


# --- interpretation -------------------------------------------------------------------


def _ambient_var_box(state, ambient: Box, name: str) -> int:
    for i in sorted(state.boxes.closure(ambient), reverse=True):
        if name in dict(state.boxes[i].variables):
            return i
    raise FreshnessError(f"{name} is not a variable of the ambient box")


def interpret(script: Optional[Script], state, ambient: Optional[Box] = None) -> None:
    """Queue the script's subgoals; later commands wait for earlier boxes to resolve."""
    if script is None:
        return
    amb = ambient if ambient is not None else state.boxes.prim(0)
    _run(script, state, amb, lambda: None)


def _open(state, ambient: Box, cmd: Command, hyp: Term, k: Callable[[], None]) -> int:
    i = state.open_box(ambient, [hyp], (), ("script", cmd), script=True, score=0)
    state.script_open[i] = cmd
    state.on_resolved[i] = k
    return i


def _run_atomic(cmd: Command, state, ambient: Box, k: Callable[[], None]) -> Optional[int]:
    if isinstance(cmd, Obtain):
        return _open(state, ambient, cmd, neg(cmd.goal), k)
    if isinstance(cmd, Case):
        return _open(state, ambient, cmd, cmd.hyp, k)
    if isinstance(cmd, Choose):
        state.reserve(cmd.var)
        ex = mk_ex(cmd.typ, abstract_free(cmd.body, cmd.var), cmd.var)
        i = _open(state, ambient, cmd, neg(ex), k)
        state.choose_names[i] = cmd.var
        return i
    if isinstance(cmd, Induct):
        _ambient_var_box(state, ambient, cmd.var)
        return _open(state, ambient, cmd, mk_eq(Free(cmd.var, NAT), Num(0)), k)
    # strong induction installs its hypothesis and continues at once
    i = _ambient_var_box(state, ambient, cmd.var)
    hyp = strong_induct_hyp(state.boxes, i, cmd.var, cmd.arbitraries)
    j = Justification("StrongIndHyp", hyp, (), (i, cmd.var, tuple(cmd.arbitraries)))
    state.push("strong_induct", (), [Emit(prop_kind(hyp), hyp, state.boxes.prim(i), j)], script=True)
    k()
    return None


def _run(s: Script, state, ambient: Box, k: Callable[[], None]) -> None:
    if isinstance(s, Atomic):
        _run_atomic(s.command, state, ambient, k)
    elif isinstance(s, Then):
        _run(s.first, state, ambient, lambda: _run(s.second, state, ambient, k))
    else:
        i = _run_atomic(s.atomic.command, state, ambient, k)
        inner = state.boxes.prim(i) if i is not None else ambient
        _run(s.sub, state, inner, lambda: None)


def stuck(state) -> Optional[ScriptStuck]:
    """The earliest script subgoal that never resolved."""
    if not state.script_open:
        return None
    i = min(state.script_open)
    return ScriptStuck(state.script_open[i])


def stuck_box(state) -> Optional[int]:
    return min(state.script_open) if state.script_open else None
