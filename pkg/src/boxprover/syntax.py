"""S-expression surface syntax for types, terms, theory and problem files."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .term import (
    ALL, AND, BOOL, EQ, EX, FALSE_NAME, IMP, NAT, NOT, OR, TRUE_NAME,
    Abs, App, Bound, Const, Free, Num, SimpleType, TBase, TFun, Term, Var,
    frees, fun_type, strip_comb,
)


class ParseError(Exception):
    pass


class TypeMismatch(ParseError):
    pass


@dataclass(frozen=True)
class Str:
    """A double-quoted string literal."""
    text: str


SExpr = Union[str, Str, list]


def tokenize(src: str) -> List[Tuple[str, int]]:
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and src[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append((c, i))
            i += 1
        elif c == '"':
            j = i + 1
            buf = []
            while j < n and src[j] != '"':
                if src[j] == "\\" and j + 1 < n:
                    j += 1
                buf.append(src[j])
                j += 1
            if j >= n:
                raise ParseError(f"unterminated string at offset {i}")
            tokens.append(('"' + "".join(buf), i))
            i = j + 1
        else:
            j = i
            while j < n and not src[j].isspace() and src[j] not in '();"':
                j += 1
            tokens.append((src[i:j], i))
            i = j
    return tokens


def read_all(src: str) -> List[SExpr]:
    tokens = tokenize(src)
    pos = 0
    out = []

    def read() -> SExpr:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok, off = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError(f"unclosed parenthesis at offset {off}")
                if tokens[pos][0] == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok == ")":
            raise ParseError(f"unexpected ')' at offset {off}")
        if tok.startswith('"'):
            return Str(tok[1:])
        return tok

    while pos < len(tokens):
        out.append(read())
    return out


def read_one(src: str) -> SExpr:
    forms = read_all(src)
    if len(forms) != 1:
        raise ParseError(f"expected one expression, found {len(forms)}")
    return forms[0]


# ---------------------------------------------------------------------------
# Types


def parse_type(sx: SExpr, bases: Optional[set] = None) -> SimpleType:
    if isinstance(sx, str):
        if sx in ("nat", "bool") or bases is None or sx in bases:
            return TBase(sx)
        raise ParseError(f"unknown type {sx}")
    if isinstance(sx, list) and len(sx) >= 3 and sx[0] == "=>":
        return fun_type(*[parse_type(x, bases) for x in sx[1:]])
    raise ParseError(f"bad type {sx!r}")


def type_sexpr(ty: SimpleType) -> str:
    if isinstance(ty, TFun):
        return f"(=> {type_sexpr(ty.dom)} {type_sexpr(ty.cod)})"
    return str(ty)


# ---------------------------------------------------------------------------
# Elaboration with type inference


class _Meta:
    _ids = itertools.count()

    def __init__(self):
        self.id = next(self._ids)

    def __repr__(self):
        return f"'t{self.id}"


class _Unifier:
    def __init__(self):
        self.sol: Dict[int, object] = {}

    def resolve(self, ty):
        while isinstance(ty, _Meta) and ty.id in self.sol:
            ty = self.sol[ty.id]
        return ty

    def unify(self, a, b, where: str) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a is b:
            return
        if isinstance(a, _Meta):
            if self._occurs(a, b):
                raise TypeMismatch(f"infinite type in {where}")
            self.sol[a.id] = b
            return
        if isinstance(b, _Meta):
            if self._occurs(b, a):
                raise TypeMismatch(f"infinite type in {where}")
            self.sol[b.id] = a
            return
        if isinstance(a, tuple) and isinstance(b, tuple):
            self.unify(a[0], b[0], where)
            self.unify(a[1], b[1], where)
            return
        if a == b:
            return
        raise TypeMismatch(f"type mismatch in {where}: {self.show(a)} vs {self.show(b)}")

    def _occurs(self, m, ty) -> bool:
        ty = self.resolve(ty)
        if ty is m:
            return True
        if isinstance(ty, tuple):
            return self._occurs(m, ty[0]) or self._occurs(m, ty[1])
        return False

    def zonk(self, ty, default: SimpleType = NAT) -> SimpleType:
        ty = self.resolve(ty)
        if isinstance(ty, _Meta):
            self.sol[ty.id] = default
            return default
        if isinstance(ty, tuple):
            return TFun(self.zonk(ty[0], default), self.zonk(ty[1], default))
        return ty

    def show(self, ty) -> str:
        ty = self.resolve(ty)
        if isinstance(ty, tuple):
            return f"({self.show(ty[0])} ⇒ {self.show(ty[1])})"
        return str(ty)


def _pre(ty: SimpleType):
    if isinstance(ty, TFun):
        return (_pre(ty.dom), _pre(ty.cod))
    return ty


_BOOL2 = (BOOL, (BOOL, BOOL))
_CONNECTIVES = {"and": AND, "or": OR, "=>": IMP}


@dataclass
class Scope:
    """Names visible while elaborating a term."""
    constants: Mapping[str, SimpleType] = field(default_factory=dict)
    variables: Mapping[str, SimpleType] = field(default_factory=dict)
    bases: Optional[set] = None
    allow_new_frees: bool = False


class Elaborator:
    def __init__(self, scope: Scope):
        self.scope = scope
        self.u = _Unifier()
        self.schem: Dict[str, Tuple[object, bool]] = {}
        self.new_frees: Dict[str, object] = {}

    def term(self, sx: SExpr, expect: Optional[SimpleType] = BOOL) -> Term:
        node, ty = self._elab(sx, [])
        if expect is not None:
            self.u.unify(ty, _pre(expect), f"term {render(sx)}")
        return self._build(node)

    # node forms: ("c", name, ty) ("f", name, ty) ("v", name, ty, numc) ("n", value)
    # ("b", index) ("abs", ty, body, hint) ("app", f, a)
    def _elab(self, sx: SExpr, env: List[Tuple[str, object]]):
        if isinstance(sx, Str):
            raise ParseError(f"unexpected string {sx.text!r} in term")
        if isinstance(sx, str):
            return self._atom(sx, env)
        if not sx:
            raise ParseError("empty application")
        head = sx[0]
        if head in ("forall", "exists", "lambda"):
            if len(sx) != 3:
                raise ParseError(f"{head} needs a binder and a body")
            binds = sx[1]
            if isinstance(binds, list) and binds and isinstance(binds[0], list):
                groups = binds
            else:
                groups = [binds]
            if not groups:
                raise ParseError("empty binder")
            return self._binders(head, groups, sx[2], env)
        if head == "not":
            if len(sx) != 2:
                raise ParseError("not takes one argument")
            a, aty = self._elab(sx[1], env)
            self.u.unify(aty, BOOL, "not")
            return ("app", ("c", NOT, (BOOL, BOOL)), a), BOOL
        if head in _CONNECTIVES:
            if len(sx) < 3:
                raise ParseError(f"{head} needs at least two arguments")
            parts = []
            for x in sx[1:]:
                a, aty = self._elab(x, env)
                self.u.unify(aty, BOOL, head)
                parts.append(a)
            node = parts[-1]
            c = ("c", _CONNECTIVES[head], _BOOL2)
            for p in reversed(parts[:-1]):
                node = ("app", ("app", c, p), node)
            return node, BOOL
        if head in ("=", "!="):
            if len(sx) != 3:
                raise ParseError(f"{head} takes two arguments")
            a, aty = self._elab(sx[1], env)
            b, bty = self._elab(sx[2], env)
            self.u.unify(aty, bty, "equality")
            node = ("app", ("app", ("c", EQ, (aty, (aty, BOOL))), a), b)
            if head == "!=":
                node = ("app", ("c", NOT, (BOOL, BOOL)), node)
            return node, BOOL
        f, fty = self._elab(head, env)
        for x in sx[1:]:
            a, aty = self._elab(x, env)
            res = _Meta()
            self.u.unify(fty, (aty, res), f"application {render(sx)}")
            f, fty = ("app", f, a), res
        return f, fty

    def _binders(self, kind: str, groups: list, body_sx: SExpr, env):
        decls = []
        for g in groups:
            if not (isinstance(g, list) and len(g) == 2 and isinstance(g[0], str)):
                raise ParseError(f"bad binder {g!r}")
            decls.append((g[0], _pre(parse_type(g[1], self.scope.bases))))
        inner_env = env + decls
        body, bty = self._elab(body_sx, inner_env)
        if kind != "lambda":
            self.u.unify(bty, BOOL, kind)
        node, ty = body, bty
        for name, vty in reversed(decls):
            node = ("abs", vty, node, name)
            if kind == "lambda":
                ty = (vty, ty)
            else:
                q = ALL if kind == "forall" else EX
                node = ("app", ("c", q, ((vty, BOOL), BOOL)), node)
                ty = BOOL
        return node, ty

    def _atom(self, tok: str, env):
        for depth, (name, ty) in enumerate(reversed(env)):
            if name == tok:
                return ("b", depth), ty
        if tok.isdigit():
            return ("n", int(tok)), NAT
        if tok == "true":
            return ("c", TRUE_NAME, BOOL), BOOL
        if tok == "false":
            return ("c", FALSE_NAME, BOOL), BOOL
        if tok.startswith("?"):
            name = tok[1:]
            if not name:
                raise ParseError("empty schematic name")
            numc = name.startswith("NUMC")
            if name not in self.schem:
                self.schem[name] = (NAT if numc else _Meta(), numc)
            ty, numc = self.schem[name]
            return ("v", name, ty, numc), ty
        if tok in self.scope.variables:
            ty = _pre(self.scope.variables[tok])
            return ("f", tok, ty), ty
        if tok in self.scope.constants:
            ty = _pre(self.scope.constants[tok])
            return ("c", tok, ty), ty
        if self.scope.allow_new_frees:
            if tok not in self.new_frees:
                self.new_frees[tok] = _Meta()
            ty = self.new_frees[tok]
            return ("f", tok, ty), ty
        raise ParseError(f"unknown identifier {tok}")

    def _build(self, node) -> Term:
        kind = node[0]
        z = self.u.zonk
        if kind == "c":
            return Const(node[1], z(node[2]))
        if kind == "f":
            return Free(node[1], z(node[2]))
        if kind == "v":
            return Var(node[1], z(node[2]), node[3])
        if kind == "n":
            return Num(node[1])
        if kind == "b":
            return Bound(node[1])
        if kind == "abs":
            return Abs(z(node[1]), self._build(node[2]), node[3])
        return App(self._build(node[1]), self._build(node[2]))

    def free_types(self) -> Dict[str, SimpleType]:
        return {k: self.u.zonk(v) for k, v in self.new_frees.items()}


def parse_term(src: Union[str, SExpr], scope: Scope, expect: Optional[SimpleType] = BOOL) -> Term:
    sx = read_one(src) if isinstance(src, str) else src
    return Elaborator(scope).term(sx, expect)


# ---------------------------------------------------------------------------
# Printing back to s-expressions

_SURFACE = {AND: "and", OR: "or", IMP: "=>", NOT: "not", TRUE_NAME: "true", FALSE_NAME: "false"}


def render(sx: SExpr) -> str:
    if isinstance(sx, Str):
        return '"' + sx.text.replace('"', '\\"') + '"'
    if isinstance(sx, str):
        return sx
    return "(" + " ".join(render(x) for x in sx) + ")"


def to_sexpr(t: Term) -> str:
    return _sx(t, [])


def _sx(t: Term, names: List[str]) -> str:
    if isinstance(t, Num):
        return str(t.value)
    if isinstance(t, Const):
        return _SURFACE.get(t.name, t.name)
    if isinstance(t, Free):
        return t.name
    if isinstance(t, Var):
        return "?" + t.name
    if isinstance(t, Bound):
        return names[len(names) - 1 - t.index]
    if isinstance(t, Abs):
        n = _fresh(t.hint, names, t)
        return f"(lambda ({n} {type_sexpr(t.typ)}) {_sx(t.body, names + [n])})"
    h, args = strip_comb(t)
    if isinstance(h, Const) and h.name in (ALL, EX) and len(args) == 1 and isinstance(args[0], Abs):
        a = args[0]
        n = _fresh(a.hint, names, a)
        q = "forall" if h.name == ALL else "exists"
        return f"({q} ({n} {type_sexpr(a.typ)}) {_sx(a.body, names + [n])})"
    return "(" + " ".join([_sx(h, names)] + [_sx(a, names) for a in args]) + ")"


def _fresh(hint: str, names: List[str], t: Term) -> str:
    used = set(names) | set(frees(t)) | _const_names(t)
    n = hint or "x"
    while n in used:
        n += "'"
    return n


def _const_names(t: Term) -> set:
    if isinstance(t, Const):
        return {t.name}
    if isinstance(t, Abs):
        return _const_names(t.body)
    if isinstance(t, App):
        return _const_names(t.fun) | _const_names(t.arg)
    return set()
