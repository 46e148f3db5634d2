"""Simply-typed terms with nameless bound variables and schematic variables.

Terms are immutable and hash-cached; structural equality is alpha-equivalence
because bound variables are de Bruijn indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple


class IllTyped(Exception):
    pass


class InvalidPattern(Exception):
    pass


# ---------------------------------------------------------------------------
# Types


class SimpleType:
    __slots__ = ()


@dataclass(frozen=True)
class TBase(SimpleType):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TFun(SimpleType):
    dom: SimpleType
    cod: SimpleType

    def __str__(self) -> str:
        d = f"({self.dom})" if isinstance(self.dom, TFun) else str(self.dom)
        return f"{d} ⇒ {self.cod}"


NAT = TBase("nat")
BOOL = TBase("bool")


def fun_type(*ts: SimpleType) -> SimpleType:
    """fun_type(a, b, c) is a ⇒ (b ⇒ c)."""
    result = ts[-1]
    for t in reversed(ts[:-1]):
        result = TFun(t, result)
    return result


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ("_h", "loose", "schematic", "_ty")

    def _setup(self, h: int, loose: int, schematic: bool) -> None:
        self._h = h
        self.loose = loose  # 1 + largest loose bound index, 0 when closed
        self.schematic = schematic
        self._ty = None

    def __hash__(self) -> int:
        return self._h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._h != other._h:  # type: ignore[attr-defined]
            return False
        return self._key() == other._key()  # type: ignore[attr-defined]

    def __ne__(self, other: object) -> bool:
        return not self == other

    def _key(self) -> tuple:
        raise NotImplementedError

    @property
    def closed(self) -> bool:
        return self.loose == 0

    @property
    def ground(self) -> bool:
        return self.loose == 0 and not self.schematic

    @property
    def type(self) -> SimpleType:
        if self._ty is None:
            self._ty = typecheck(self)
        return self._ty

    def __repr__(self) -> str:
        return show(self)


class Const(Term):
    __slots__ = ("name", "typ")

    def __init__(self, name: str, typ: SimpleType):
        self.name = name
        self.typ = typ
        self._setup(hash(("C", name, typ)), 0, False)

    def _key(self):
        return (self.name, self.typ)


class Num(Term):
    """Numeral constant of type nat, arbitrary precision."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        if value < 0:
            raise ValueError("numerals are natural numbers")
        self.value = value
        self._setup(hash(("N", value)), 0, False)

    def _key(self):
        return (self.value,)


class Free(Term):
    __slots__ = ("name", "typ")

    def __init__(self, name: str, typ: SimpleType):
        self.name = name
        self.typ = typ
        self._setup(hash(("F", name, typ)), 0, False)

    def _key(self):
        return (self.name, self.typ)


class Var(Term):
    """Schematic variable. numc=True restricts matches to numerals."""

    __slots__ = ("name", "typ", "numc")

    def __init__(self, name: str, typ: SimpleType, numc: bool = False):
        if numc and typ != NAT:
            raise IllTyped(f"numeric schematic ?{name} must have type nat")
        self.name = name
        self.typ = typ
        self.numc = numc
        self._setup(hash(("V", name, typ, numc)), 0, True)

    def _key(self):
        return (self.name, self.typ, self.numc)


class Bound(Term):
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index
        self._setup(hash(("B", index)), index + 1, False)

    def _key(self):
        return (self.index,)


class Abs(Term):
    __slots__ = ("typ", "body", "hint")

    def __init__(self, typ: SimpleType, body: Term, hint: str = "x"):
        self.typ = typ
        self.body = body
        self.hint = hint
        self._setup(hash(("L", typ, body._h)), max(body.loose - 1, 0), body.schematic)

    def _key(self):
        return (self.typ, self.body)


class App(Term):
    __slots__ = ("fun", "arg")

    def __init__(self, fun: Term, arg: Term):
        self.fun = fun
        self.arg = arg
        self._setup(hash(("A", fun._h, arg._h)), max(fun.loose, arg.loose),
                    fun.schematic or arg.schematic)

    def _key(self):
        return (self.fun, self.arg)


# ---------------------------------------------------------------------------
# Logical vocabulary. Logical constants are typed instances of fixed names.

AND, OR, IMP, NOT, EQ, ALL, EX = "&", "|", "-->", "~", "=", "All", "Ex"
TRUE_NAME, FALSE_NAME = "True", "False"

_BB = fun_type(BOOL, BOOL, BOOL)
TRUE = Const(TRUE_NAME, BOOL)
FALSE = Const(FALSE_NAME, BOOL)
NOT_C = Const(NOT, TFun(BOOL, BOOL))
LOGICAL = {AND, OR, IMP, NOT, EQ, ALL, EX, TRUE_NAME, FALSE_NAME}


def mk_app(f: Term, *args: Term) -> Term:
    for a in args:
        f = App(f, a)
    return f


def mk_and(a: Term, b: Term) -> Term:
    return mk_app(Const(AND, _BB), a, b)


def mk_or(a: Term, b: Term) -> Term:
    return mk_app(Const(OR, _BB), a, b)


def mk_imp(a: Term, b: Term) -> Term:
    return mk_app(Const(IMP, _BB), a, b)


def mk_not(a: Term) -> Term:
    return App(NOT_C, a)


def neg(a: Term) -> Term:
    """Negation with double-negation collapse."""
    if is_not(a):
        return a.arg  # type: ignore[attr-defined]
    return mk_not(a)


def mk_eq(a: Term, b: Term) -> Term:
    return mk_app(Const(EQ, fun_type(a.type, a.type, BOOL)), a, b)


def mk_eq_typed(a: Term, b: Term, ty: SimpleType) -> Term:
    return mk_app(Const(EQ, fun_type(ty, ty, BOOL)), a, b)


def mk_all(ty: SimpleType, body: Term, hint: str = "x") -> Term:
    return App(Const(ALL, TFun(TFun(ty, BOOL), BOOL)), Abs(ty, body, hint))


def mk_ex(ty: SimpleType, body: Term, hint: str = "x") -> Term:
    return App(Const(EX, TFun(TFun(ty, BOOL), BOOL)), Abs(ty, body, hint))


def mk_conj(ts: Sequence[Term]) -> Term:
    if not ts:
        return TRUE
    result = ts[-1]
    for t in reversed(ts[:-1]):
        result = mk_and(t, result)
    return result


def mk_disj(ts: Sequence[Term]) -> Term:
    if not ts:
        return FALSE
    result = ts[-1]
    for t in reversed(ts[:-1]):
        result = mk_or(t, result)
    return result


def strip_comb(t: Term) -> Tuple[Term, List[Term]]:
    args: List[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def head_name(t: Term) -> Optional[str]:
    h, _ = strip_comb(t)
    if isinstance(h, (Const, Free)):
        return h.name
    if isinstance(h, Num):
        return "#num"
    return None


def dest_binop(t: Term, name: str) -> Optional[Tuple[Term, Term]]:
    if isinstance(t, App) and isinstance(t.fun, App):
        c = t.fun.fun
        if isinstance(c, Const) and c.name == name:
            return t.fun.arg, t.arg
    return None


def dest_eq(t: Term) -> Optional[Tuple[Term, Term]]:
    return dest_binop(t, EQ)


def is_not(t: Term) -> bool:
    return isinstance(t, App) and isinstance(t.fun, Const) and t.fun.name == NOT


def dest_binder(t: Term, name: str) -> Optional[Abs]:
    """Body of a quantifier application, eta-expanded if needed."""
    if isinstance(t, App) and isinstance(t.fun, Const) and t.fun.name == name:
        body = t.arg
        if isinstance(body, Abs):
            return body
        ty = body.type
        assert isinstance(ty, TFun)
        return Abs(ty.dom, App(lift(body, 1), Bound(0)))
    return None


def flatten_binop(t: Term, name: str) -> List[Term]:
    parts = dest_binop(t, name)
    if parts is None:
        return [t]
    return flatten_binop(parts[0], name) + flatten_binop(parts[1], name)


# ---------------------------------------------------------------------------
# Typechecking


def typecheck(t: Term, env: Sequence[SimpleType] = ()) -> SimpleType:
    """Type of t; env lists binder types, innermost last."""
    if isinstance(t, (Const, Free, Var)):
        return t.typ
    if isinstance(t, Num):
        return NAT
    if isinstance(t, Bound):
        if t.index >= len(env):
            raise IllTyped(f"dangling bound variable {t.index}")
        return env[len(env) - 1 - t.index]
    if isinstance(t, Abs):
        return TFun(t.typ, typecheck(t.body, (*env, t.typ)))
    if isinstance(t, App):
        if not env and t._ty is not None:
            return t._ty
        ft = typecheck(t.fun, env)
        at = typecheck(t.arg, env)
        if not isinstance(ft, TFun):
            raise IllTyped(f"applying non-function {show(t.fun)}")
        if ft.dom != at:
            raise IllTyped(f"argument type {at} does not match {ft.dom} in {show(t)}")
        return ft.cod
    raise IllTyped(f"unknown term {t!r}")


# ---------------------------------------------------------------------------
# De Bruijn operations


def lift(t: Term, k: int, cutoff: int = 0) -> Term:
    if t.loose <= cutoff or k == 0:
        return t
    if isinstance(t, Bound):
        return Bound(t.index + k) if t.index >= cutoff else t
    if isinstance(t, Abs):
        return Abs(t.typ, lift(t.body, k, cutoff + 1), t.hint)
    if isinstance(t, App):
        return App(lift(t.fun, k, cutoff), lift(t.arg, k, cutoff))
    return t


def instantiate(body: Term, arg: Term, depth: int = 0) -> Term:
    """Replace Bound(depth) in body by arg (closed or lifted), lowering outer indices."""
    if body.loose <= depth:
        return body
    if isinstance(body, Bound):
        if body.index == depth:
            return lift(arg, depth)
        if body.index > depth:
            return Bound(body.index - 1)
        return body
    if isinstance(body, Abs):
        return Abs(body.typ, instantiate(body.body, arg, depth + 1), body.hint)
    if isinstance(body, App):
        return App(instantiate(body.fun, arg, depth), instantiate(body.arg, arg, depth))
    return body


def beta_norm(t: Term) -> Term:
    if isinstance(t, App):
        f = beta_norm(t.fun)
        a = beta_norm(t.arg)
        if isinstance(f, Abs):
            return beta_norm(instantiate(f.body, a))
        if f is t.fun and a is t.arg:
            return t
        return App(f, a)
    if isinstance(t, Abs):
        b = beta_norm(t.body)
        return t if b is t.body else Abs(t.typ, b, t.hint)
    return t


def eta_contract(t: Term) -> Term:
    while isinstance(t, Abs) and isinstance(t.body, App) and t.body.arg == Bound(0) \
            and t.body.fun.loose == 0:
        t = t.body.fun
    return t


def occurs_free(name: str, t: Term) -> bool:
    if isinstance(t, Free):
        return t.name == name
    if isinstance(t, Abs):
        return occurs_free(name, t.body)
    if isinstance(t, App):
        return occurs_free(name, t.fun) or occurs_free(name, t.arg)
    return False


def occurs_term(u: Term, t: Term) -> bool:
    if t == u:
        return True
    if isinstance(t, Abs):
        return u.closed and occurs_term(u, t.body)
    if isinstance(t, App):
        return occurs_term(u, t.fun) or occurs_term(u, t.arg)
    return False


def abstract_free(t: Term, name: str, depth: int = 0) -> Term:
    """Replace Free(name) by Bound(depth); the result is a binder body."""
    if isinstance(t, Free):
        return Bound(depth) if t.name == name else t
    if isinstance(t, Abs):
        return Abs(t.typ, abstract_free(t.body, name, depth + 1), t.hint)
    if isinstance(t, App):
        return App(abstract_free(t.fun, name, depth), abstract_free(t.arg, name, depth))
    return t


def replace_term(t: Term, old: Term, new: Term) -> Term:
    """Replace closed subterm old by new everywhere (including under binders)."""
    if t == old:
        return new
    if isinstance(t, Abs):
        return Abs(t.typ, replace_term(t.body, old, new), t.hint)
    if isinstance(t, App):
        f, a = replace_term(t.fun, old, new), replace_term(t.arg, old, new)
        return t if (f is t.fun and a is t.arg) else App(f, a)
    return t


def frees(t: Term, acc: Optional[Dict[str, SimpleType]] = None) -> Dict[str, SimpleType]:
    if acc is None:
        acc = {}
    if isinstance(t, Free):
        acc.setdefault(t.name, t.typ)
    elif isinstance(t, Abs):
        frees(t.body, acc)
    elif isinstance(t, App):
        frees(t.fun, acc)
        frees(t.arg, acc)
    return acc


def schematics(t: Term, acc: Optional[Dict[str, Var]] = None) -> Dict[str, Var]:
    if acc is None:
        acc = {}
    if not t.schematic:
        return acc
    if isinstance(t, Var):
        acc.setdefault(t.name, t)
    elif isinstance(t, Abs):
        schematics(t.body, acc)
    elif isinstance(t, App):
        schematics(t.fun, acc)
        schematics(t.arg, acc)
    return acc


# ---------------------------------------------------------------------------
# Substitutions

Subst = Dict[str, Term]


def apply_subst(s: Subst, t: Term) -> Term:
    """Instantiate schematics; beta-normalizes only if an abstraction was substituted."""
    if not s or not t.schematic:
        return t
    created = [False]

    def go(u: Term) -> Term:
        if not u.schematic:
            return u
        if isinstance(u, Var):
            if u.name in s:
                image = s[u.name]
                if isinstance(image, Abs):
                    created[0] = True
                return image
            return u
        if isinstance(u, Abs):
            return Abs(u.typ, go(u.body), u.hint)
        if isinstance(u, App):
            return App(go(u.fun), go(u.arg))
        return u

    result = go(t)
    return beta_norm(result) if created[0] else result


def subst_key(s: Subst) -> tuple:
    return tuple(sorted(s.items(), key=lambda kv: kv[0]))


def check_subst(s: Subst, t: Term) -> bool:
    """Every schematic of t in dom(s) gets a closed image of its declared type."""
    for name, v in schematics(t).items():
        if name in s:
            img = s[name]
            if not img.closed:
                return False
            try:
                if img.type != v.typ:
                    return False
            except IllTyped:
                return False
    return True


# ---------------------------------------------------------------------------
# Syntactic matching


def _distinct_bounds(args: Sequence[Term], depth: int) -> Optional[List[int]]:
    idx = []
    for a in args:
        if not isinstance(a, Bound) or a.index >= depth or a.index in idx:
            return None
        idx.append(a.index)
    return idx


def _remap_loose(t: Term, mapping: Dict[int, int], depth: int = 0) -> Optional[Term]:
    """Rename loose bound indices through mapping; None if some index is unmapped."""
    if t.loose <= depth:
        return t
    if isinstance(t, Bound):
        new = mapping.get(t.index - depth)
        return None if new is None else Bound(new + depth)
    if isinstance(t, Abs):
        b = _remap_loose(t.body, mapping, depth + 1)
        return None if b is None else Abs(t.typ, b, t.hint)
    if isinstance(t, App):
        f = _remap_loose(t.fun, mapping, depth)
        a = _remap_loose(t.arg, mapping, depth) if f is not None else None
        return None if a is None else App(f, a)
    return t


def _is_flex(p: Term) -> bool:
    h, args = strip_comb(p)
    return isinstance(h, Var) and bool(args)


def _match(p: Term, t: Term, s: Subst, ho: bool) -> Optional[Subst]:
    """Deterministic syntactic matcher; pieces whose flex head is not yet
    determined are postponed until some other piece binds the head."""
    s = dict(s)
    work: List[Tuple[Term, Term, Tuple[SimpleType, ...]]] = [(p, t, ())]
    postponed: List[Tuple[Term, Term, Tuple[SimpleType, ...]]] = []
    while work or postponed:
        if not work:
            progress = [c for c in postponed if strip_comb(c[0])[0].name in s]  # type: ignore[attr-defined]
            if not progress:
                return None
            work = postponed
            postponed = []
            continue
        pp, tt, env = work.pop()
        if not pp.schematic:
            if pp != tt:
                return None
            continue
        if isinstance(pp, Var):
            if pp.name in s:
                if s[pp.name] != tt:
                    return None
                continue
            if not tt.closed:
                return None
            if pp.numc and not isinstance(tt, Num):
                return None
            try:
                if typecheck(tt) != pp.typ:
                    return None
            except IllTyped:
                return None
            s[pp.name] = tt
            continue
        if ho and _is_flex(pp):
            h, args = strip_comb(pp)
            assert isinstance(h, Var)
            if h.name in s:
                inst = beta_norm(mk_app(s[h.name], *args))
                work.append((inst, tt, env))
                continue
            idx = _distinct_bounds(args, len(env))
            if idx is None:
                postponed.append((pp, tt, env))
                continue
            k = len(idx)
            body = _remap_loose(tt, {i: k - 1 - j for j, i in enumerate(idx)})
            if body is None:
                return None
            arg_types = [env[len(env) - 1 - i] for i in idx]
            lam = body
            for ty in reversed(arg_types):
                lam = Abs(ty, lam, "x")
            lam = eta_contract(lam)
            try:
                if typecheck(lam) != h.typ:
                    return None
            except IllTyped:
                return None
            s[h.name] = lam
            continue
        if isinstance(pp, App):
            if not isinstance(tt, App):
                return None
            work.append((pp.arg, tt.arg, env))
            work.append((pp.fun, tt.fun, env))
            continue
        if isinstance(pp, Abs):
            if not isinstance(tt, Abs) or tt.typ != pp.typ:
                return None
            work.append((pp.body, tt.body, (*env, pp.typ)))
            continue
        return None
    return s


def fo_match(p: Term, t: Term, partial: Optional[Subst] = None) -> List[Subst]:
    """First-order syntactic matching: at most one result."""
    r = _match(p, t, partial or {}, ho=False)
    return [] if r is None else [r]


def pattern_valid(p: Term, prebound: Sequence[str] = ()) -> bool:
    """Second-order restriction: some traversal order meets each function-position
    schematic first applied to distinct bound variables."""
    resolved = set(prebound)
    heads = set()

    def walk(u: Term, depth: int) -> None:
        if not u.schematic:
            return
        if isinstance(u, Var):
            resolved.add(u.name)
        elif _is_flex(u):
            h, args = strip_comb(u)
            heads.add(h.name)  # type: ignore[attr-defined]
            if _distinct_bounds(args, depth) is not None:
                resolved.add(h.name)  # type: ignore[attr-defined]
            for a in args:
                walk(a, depth)
        elif isinstance(u, Abs):
            walk(u.body, depth + 1)
        elif isinstance(u, App):
            walk(u.fun, depth)
            walk(u.arg, depth)

    walk(p, 0)
    return heads <= resolved


def ho_match(p: Term, t: Term, partial: Optional[Subst] = None) -> List[Subst]:
    partial = partial or {}
    if not pattern_valid(p, tuple(partial)):
        raise InvalidPattern(show(p))
    r = _match(p, t, partial, ho=True)
    return [] if r is None else [r]


# ---------------------------------------------------------------------------
# Size, subterms, ordering


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + term_size(t.fun) + term_size(t.arg)
    if isinstance(t, Abs):
        return 1 + term_size(t.body)
    return 1


def subterms(t: Term) -> List[Term]:
    """Closed schematic-free subterms outside binders, t first.

    Only standalone positions count: partial applications and bare head
    constants on an application spine are skipped, abstractions are opaque.
    """
    out: List[Term] = []
    seen = set()

    def walk(u: Term) -> None:
        if isinstance(u, Abs):
            return
        if u.ground and u not in seen:
            seen.add(u)
            out.append(u)
        for a in strip_comb(u)[1]:
            walk(a)

    walk(t)
    return out


_KIND_RANK = {Num: 0, Const: 1, Free: 2, Var: 3, Bound: 4, Abs: 5, App: 6}


def term_key(t: Term) -> tuple:
    """Total order: constant name first, then structure."""
    if isinstance(t, Num):
        return (0, t.value)
    if isinstance(t, (Const, Free)):
        return (_KIND_RANK[type(t)], t.name, str(t.typ))
    if isinstance(t, Var):
        return (3, t.name)
    if isinstance(t, Bound):
        return (4, t.index)
    if isinstance(t, Abs):
        return (5, str(t.typ), term_key(t.body))
    assert isinstance(t, App)
    h, args = strip_comb(t)
    return (6, term_key(h), len(args), tuple(term_key(a) for a in args))


# ---------------------------------------------------------------------------
# Printing

_INFIX = {
    "-->": (25, "⟶", "right"), "|": (30, "∨", "right"), "&": (35, "∧", "right"),
    "=": (50, "=", "none"), "<": (50, "<", "none"), "<=": (50, "≤", "none"),
    ">": (50, ">", "none"), ">=": (50, "≥", "none"), "dvd": (50, "dvd", "none"),
    "+": (65, "+", "left"), "-": (65, "-", "left"), "*": (70, "*", "left"),
}
_BINDERS = {ALL: "∀", EX: "∃"}


def show(t: Term) -> str:
    return _show(t, [], 0)


def _fresh_hint(hint: str, names: List[str], t: Term) -> str:
    used = set(names) | set(frees(t))
    name = hint or "x"
    while name in used:
        name += "'"
    return name


def _paren(s: str, cond: bool) -> str:
    return f"({s})" if cond else s


def _show(t: Term, names: List[str], prec: int) -> str:
    if isinstance(t, Num):
        return str(t.value)
    if isinstance(t, Const):
        return {"True": "True", "False": "False"}.get(t.name, t.name)
    if isinstance(t, Free):
        return t.name
    if isinstance(t, Var):
        return "?" + t.name
    if isinstance(t, Bound):
        if t.index < len(names):
            return names[len(names) - 1 - t.index]
        return f"#{t.index}"
    if isinstance(t, Abs):
        n = _fresh_hint(t.hint, names, t)
        body = _show(t.body, names + [n], 0)
        return _paren(f"λ{n}. {body}", prec > 0)
    assert isinstance(t, App)
    h, args = strip_comb(t)
    if isinstance(h, Const):
        if h.name in _BINDERS and len(args) == 1 and isinstance(args[0], Abs):
            a = args[0]
            n = _fresh_hint(a.hint, names, a)
            body = _show(a.body, names + [n], 0)
            return _paren(f"{_BINDERS[h.name]}{n}. {body}", prec > 0)
        if h.name == NOT and len(args) == 1:
            inner = args[0]
            eq = dest_eq(inner)
            if eq is not None:
                s = f"{_show(eq[0], names, 51)} ≠ {_show(eq[1], names, 51)}"
                return _paren(s, prec > 50)
            return _paren("¬" + _show(inner, names, 40), prec > 40)
        if h.name in _INFIX and len(args) == 2:
            p, sym, assoc = _INFIX[h.name]
            lp = p if assoc == "left" else p + 1
            rp = p if assoc == "right" else p + 1
            s = f"{_show(args[0], names, lp)} {sym} {_show(args[1], names, rp)}"
            return _paren(s, prec > p)
    parts = [_show(h, names, 100)] + [_show(a, names, 101) for a in args]
    return _paren(" ".join(parts), prec > 100)
