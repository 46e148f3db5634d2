"""Theory content: declarations, axioms with direction annotations, and loading."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .rewrite import ac_axioms
from .syntax import ParseError, Scope, Str, TypeMismatch, Elaborator, SExpr, parse_type, read_all, render
from .term import (
    BOOL, EQ, IMP, Abs, App, Const, SimpleType, TBase, TFun, Term, beta_norm, dest_binop,
    Var, schematics, show, strip_comb,
)


class TheoryError(Exception):
    pass


class DuplicateName(TheoryError):
    pass


class IllTypedAxiom(TheoryError):
    pass


class BadRewriteOrientation(TheoryError):
    pass


class UnknownName(TheoryError):
    pass


DIRECTIONS = ("forward", "backward", "rewrite", "resolve")


@dataclass(frozen=True)
class TheoremSpec:
    name: str
    statement: Term
    direction: str
    k: Optional[int] = None  # 1-based premise index for backward
    passive: bool = False    # disjunctive conclusions stay passive (no case split)


@dataclass
class Theory:
    bases: set = field(default_factory=set)
    constants: Dict[str, SimpleType] = field(default_factory=dict)
    axioms: Dict[str, Term] = field(default_factory=dict)
    specs: List[TheoremSpec] = field(default_factory=list)
    ac: List[Const] = field(default_factory=list)
    abbrevs: Dict[str, Term] = field(default_factory=dict)
    matchers: List[str] = field(default_factory=list)
    sources: List[str] = field(default_factory=list)

    def scope(self, variables=None, allow_new_frees: bool = False) -> Scope:
        consts = dict(self.constants)
        for name, body in self.abbrevs.items():
            consts[name] = body.type
        return Scope(consts, dict(variables or {}), self.bases | {"nat", "bool"}, allow_new_frees)

    def unfold(self, t: Term) -> Term:
        """Expand abbreviations."""
        if not self.abbrevs:
            return t
        changed = [False]

        def go(u: Term) -> Term:
            if isinstance(u, Const) and u.name in self.abbrevs and u.name not in self.constants:
                changed[0] = True
                return self.abbrevs[u.name]
            if isinstance(u, Abs):
                return Abs(u.typ, go(u.body), u.hint)
            if isinstance(u, App):
                return App(go(u.fun), go(u.arg))
            return u

        out = go(t)
        return beta_norm(out) if changed[0] else out

    def matcher_axioms(self) -> List[Tuple[str, Term]]:
        return [(m, self.axioms[m]) for m in self.matchers]

    def registry(self):
        from .steps import build_registry
        return build_registry(self)

    def names(self) -> set:
        return set(self.constants) | set(self.abbrevs) | set(self.axioms)


def _declare(th: Theory, name: str, kind: str) -> None:
    if name in th.constants or name in th.abbrevs or name in th.axioms:
        raise DuplicateName(f"{kind} {name} already declared")


def _elab(th: Theory, sx: SExpr, expect: Optional[SimpleType], what: str) -> Term:
    try:
        t = Elaborator(th.scope()).term(sx, expect)
    except TypeMismatch as e:
        raise IllTypedAxiom(f"{what}: {e}") from e
    return th.unfold(t)


def premises_and_conclusion(stmt: Term) -> Tuple[List[Term], Term]:
    prems = []
    while True:
        parts = dest_binop(stmt, IMP)
        if parts is None:
            return prems, stmt
        prems.append(parts[0])
        stmt = parts[1]


def check_rewrite(name: str, stmt: Term) -> None:
    eq = dest_binop(stmt, EQ)
    if eq is None:
        raise BadRewriteOrientation(f"{name}: rewrite axioms must be equalities")
    lhs, rhs = eq
    lv, rv = set(schematics(lhs)), set(schematics(rhs))
    if not rv <= lv:
        raise BadRewriteOrientation(f"{name}: {sorted(rv - lv)} occur only on the right")
    if isinstance(strip_comb(lhs)[0], Var):
        raise BadRewriteOrientation(f"{name}: left side needs a rigid head")


def load_forms(th: Theory, forms: Sequence[SExpr], origin: str = "<string>") -> Theory:
    for sx in forms:
        if not isinstance(sx, list) or not sx or not isinstance(sx[0], str):
            raise ParseError(f"{origin}: expected a declaration, got {render(sx)}")
        head, args = sx[0], sx[1:]
        if head == "type":
            _arity(args, 1, sx)
            if args[0] in th.bases or args[0] in ("nat", "bool"):
                raise DuplicateName(f"type {args[0]} already declared")
            th.bases.add(args[0])
        elif head == "const":
            _arity(args, 2, sx)
            _declare(th, args[0], "constant")
            th.constants[args[0]] = parse_type(args[1], th.bases | {"nat", "bool"})
        elif head == "abbrev":
            _arity(args, 2, sx)
            _declare(th, args[0], "abbreviation")
            th.abbrevs[args[0]] = _elab(th, args[1], None, f"abbreviation {args[0]}")
        elif head == "axiom":
            _arity(args, 2, sx)
            _declare(th, args[0], "axiom")
            stmt = _elab(th, args[1], None, f"axiom {args[0]}")
            if stmt.type != BOOL:
                raise IllTypedAxiom(f"axiom {args[0]} has type {stmt.type}, expected bool")
            if not stmt.closed:
                raise IllTypedAxiom(f"axiom {args[0]} has dangling bound variables")
            th.axioms[args[0]] = stmt
        elif head == "ac":
            _arity(args, 1, sx)
            op = args[0]
            ty = th.constants.get(op)
            if not (isinstance(ty, TFun) and isinstance(ty.cod, TFun) and ty.dom == ty.cod.dom == ty.cod.cod):
                raise IllTypedAxiom(f"ac operator {op} must have type T ⇒ T ⇒ T")
            c = Const(op, ty)
            for name, stmt in ac_axioms(c).items():
                _declare(th, name, "axiom")
                th.axioms[name] = stmt
            th.ac.append(c)
        elif head == "step":
            th.specs.append(_step(th, args, sx))
        elif head == "matcher":
            _arity(args, 1, sx)
            name = args[0]
            stmt = th.axioms.get(name)
            if stmt is None:
                raise UnknownName(f"matcher refers to unknown axiom {name}")
            check_rewrite(name, stmt)
            th.matchers.append(name)
        else:
            raise ParseError(f"{origin}: unknown declaration {head}")
    return th


def _step(th: Theory, args: list, sx: SExpr) -> TheoremSpec:
    if len(args) < 2 or args[0] not in DIRECTIONS:
        raise ParseError(f"bad step declaration {render(sx)}")
    direction, name = args[0], args[1]
    rest = list(args[2:])
    passive = False
    if rest and rest[-1] == "passive":
        passive = True
        rest.pop()
    stmt = th.axioms.get(name)
    if stmt is None:
        raise UnknownName(f"step refers to unknown axiom {name}")
    k = None
    if direction == "backward":
        if len(rest) != 1 or not str(rest[0]).isdigit():
            raise ParseError(f"backward step {name} needs a premise index")
        k = int(rest[0])
        prems, _ = premises_and_conclusion(stmt)
        if not 1 <= k <= len(prems):
            raise ParseError(f"backward step {name}: no premise {k}")
    elif rest:
        raise ParseError(f"unexpected arguments in {render(sx)}")
    if direction == "rewrite":
        check_rewrite(name, stmt)
    spec = TheoremSpec(name, stmt, direction, k, passive)
    from .steps import step_from_theorem
    step_from_theorem(spec)  # validates slot structure early
    return spec


def _arity(args: list, n: int, sx: SExpr) -> None:
    if len(args) != n or any(isinstance(a, Str) for a in args):
        raise ParseError(f"malformed declaration {render(sx)}")


def load_text(src: str, base: Optional[Theory] = None, origin: str = "<string>") -> Theory:
    th = base if base is not None else Theory()
    th.sources.append(origin)
    return load_forms(th, read_all(src), origin)


def resolve_include(name: str, relative_to: Optional[Path] = None) -> str:
    """Text of a theory by file path or bundled name."""
    p = Path(name)
    candidates = [p] if p.is_absolute() else ([relative_to / p] if relative_to else []) + [p]
    for c in candidates:
        if c.is_file():
            return c.read_text()
    bundled = name if name.endswith(".thy") else name + ".thy"
    res = resources.files("boxprover").joinpath("data", bundled)
    if res.is_file():
        return res.read_text()
    raise FileNotFoundError(name)


def load(files: Sequence[Union[str, Path]], base: Optional[Theory] = None) -> Theory:
    """Later files extend earlier ones; duplicate names are errors."""
    th = base if base is not None else Theory()
    for f in files:
        text = resolve_include(str(f))
        load_text(text, th, str(f))
    return th


def builtin_nat() -> Theory:
    return load(["nat-core.thy"])
