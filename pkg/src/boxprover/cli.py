"""Command-line entry point: load theories and a problem, run, report."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .kernel import GoalStatement, replay_report
from .script import FreshnessError, Script, ScriptSyntaxError, parse as parse_script, interpret, stuck, stuck_box
from .search import IllFormedGoal, SearchConfig, SearchState, TraceRecord, init, run
from .syntax import Elaborator, ParseError, Str, parse_type, read_all, render
from .term import BOOL, SimpleType, Term
from .theory import Theory, TheoryError, load_text, resolve_include

EXIT = {"Proved": 0, "Saturated": 1, "Timeout": 2}
EXIT_INPUT = 3
EXIT_CHECK = 4
TAIL = 20

TRACE_SCHEMA = {
    "type": "object",
    "required": ["seq", "score", "step", "inputs", "payload", "box", "items", "edges", "script"],
    "additionalProperties": False,
    "properties": {
        "seq": {"type": "integer", "minimum": 0},
        "score": {"type": "integer", "minimum": 0},
        "step": {"type": "string"},
        "inputs": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "payload": {"type": "array", "items": {"type": "string"}},
        "box": {"type": "string", "pattern": r"^\{(\d+(,\d+)*)?\}$"},
        "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "edges": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "script": {"type": "boolean"},
    },
}


class ProblemError(Exception):
    pass


@dataclass(frozen=True)
class ProblemFile:
    includes: Tuple[str, ...]
    variables: Tuple[Tuple[str, SimpleType], ...]
    assumptions: Tuple[Term, ...]
    goal: Term
    script_text: str = ""

    def statement(self) -> GoalStatement:
        return GoalStatement(self.assumptions, self.goal, self.variables)


def _include_key(name: str, relative_to: Optional[Path] = None) -> str:
    """Where an include resolves, so one theory named two ways loads once."""
    p = Path(name)
    for c in ([relative_to / p] if relative_to and not p.is_absolute() else []) + [p]:
        if c.is_file():
            return str(c.resolve())
    bundled = name if name.endswith(".thy") else name + ".thy"
    res = resources.files("boxprover").joinpath("data", bundled)
    return str(Path(str(res)).resolve()) if res.is_file() else name


def load_theories(names: Sequence[str], relative_to: Optional[Path] = None) -> Theory:
    th = Theory()
    seen = set()
    for name in names:
        key = _include_key(name, relative_to)
        if key in seen:
            continue
        seen.add(key)
        load_text(resolve_include(name, relative_to), th, name)
    return th


def read_problem(text: str, extra_theories: Sequence[str] = (), base_dir: Optional[Path] = None
                 ) -> Tuple[ProblemFile, Theory]:
    forms = read_all(text)
    includes: List[str] = list(extra_theories)
    for sx in forms:
        if isinstance(sx, list) and sx and sx[0] == "include":
            for a in sx[1:]:
                includes.append(a.text if isinstance(a, Str) else str(a))
    th = load_theories(includes, base_dir)
    variables: Dict[str, SimpleType] = {}
    assumptions_sx: List = []
    goal_sx = None
    script_text = ""
    for sx in forms:
        if not (isinstance(sx, list) and sx and isinstance(sx[0], str)):
            raise ProblemError(f"expected a problem form, got {render(sx)}")
        head, args = sx[0], sx[1:]
        if head == "include":
            continue
        if head == "var":
            if len(args) != 2 or not isinstance(args[0], str):
                raise ProblemError(f"malformed {render(sx)}")
            if args[0] in variables or args[0] in th.names():
                raise ProblemError(f"variable {args[0]} already declared")
            variables[args[0]] = parse_type(args[1], th.bases | {"nat", "bool"})
        elif head == "assume":
            if len(args) != 1:
                raise ProblemError(f"malformed {render(sx)}")
            assumptions_sx.append(args[0])
        elif head == "goal":
            if len(args) != 1 or goal_sx is not None:
                raise ProblemError("exactly one goal is required")
            goal_sx = args[0]
        elif head == "script":
            if len(args) != 1 or not isinstance(args[0], Str):
                raise ProblemError("script takes one string")
            script_text = args[0].text
        else:
            raise ProblemError(f"unknown problem form {head}")
    if goal_sx is None:
        raise ProblemError("missing goal")

    def elab(x) -> Term:
        return th.unfold(Elaborator(th.scope(variables)).term(x, BOOL))

    prob = ProblemFile(tuple(includes), tuple(variables.items()),
                       tuple(elab(a) for a in assumptions_sx), elab(goal_sx), script_text)
    return prob, th


def load_problem(path, extra_theories: Sequence[str] = ()) -> Tuple[ProblemFile, Theory]:
    p = Path(path)
    if p.is_file():
        return read_problem(p.read_text(), extra_theories, p.parent)
    for name in (str(path), f"{path}.prob"):
        bundled = resources.files("boxprover").joinpath("data", name)
        if bundled.is_file():
            return read_problem(bundled.read_text(), extra_theories)
    raise FileNotFoundError(f"no such problem file: {path}")


# --- running ---------------------------------------------------------------------


@dataclass
class RunReport:
    outcome: str
    pulled: int
    wall_time: float
    trace: List[TraceRecord] = field(default_factory=list)
    trace_ref: Optional[str] = None
    stuck: Optional[str] = None
    tail: List[TraceRecord] = field(default_factory=list)
    check: Optional[str] = None  # None when not requested, "ok" or a failure reason
    warning: str = ""


def solve(prob: ProblemFile, theory: Theory, config: Optional[SearchConfig] = None,
          script: Optional[Script] = None, use_script: bool = True) -> SearchState:
    """init + interpret + run."""
    if script is None and use_script and prob.script_text.strip():
        script = parse_script(prob.script_text, theory, dict(prob.variables))
    state = init(prob.statement(), theory, config)
    if use_script:
        interpret(script, state)
    run(state)
    return state


def _tail(state: SearchState, k: int = TAIL) -> List[TraceRecord]:
    i = stuck_box(state)
    if i is None:
        return []
    recs = [r for r in state.records if r.box != "{}" and i in state.boxes.closure(_parse_box(r.box))]
    return recs[-k:]


def _parse_box(s: str) -> Tuple[int, ...]:
    inner = s.strip("{}")
    return tuple(int(x) for x in inner.split(",")) if inner else ()


def check_state(state: SearchState) -> Optional[str]:
    """Replay the final proof and every stored justification; None when all pass."""
    out = state.outcome
    if out is not None and out.proof is not None:
        rep = replay_report(out.proof, state.theory, state.boxes, closed=True)
        if not rep.ok:
            return f"final proof: {rep.reason}"
    for it in state.items:
        if it.just is None:
            continue
        rep = replay_report(it.just, state.theory, state.boxes, closed=False, expect_box=it.box)
        if not rep.ok:
            return f"item {it.id}: {rep.reason}"
    return None


def report_for(state: SearchState, wall: float, check: bool = False) -> RunReport:
    out = state.outcome
    assert out is not None
    st = stuck(state) if out.kind != "Proved" else None
    rep = RunReport(out.kind, out.pulled, wall, list(state.records), warning=out.warning)
    if st is not None:
        rep.stuck = str(st)
        rep.tail = _tail(state)
    if check:
        reason = check_state(state)
        rep.check = "ok" if reason is None else reason
    return rep


def render_report(report: RunReport) -> str:
    word = {"Proved": "PROVED in", "Saturated": "SATURATED after", "Timeout": "TIMEOUT after"}[report.outcome]
    lines = [f"{word} {report.pulled} updates"]
    if report.warning:
        lines.append(f"warning: {report.warning}")
    if report.check is not None:
        lines.append("check: all justifications replay" if report.check == "ok" else f"check FAILED: {report.check}")
    if report.stuck:
        lines.append(report.stuck)
        if report.tail:
            lines.append(f"last {len(report.tail)} updates in that box:")
            lines.extend("  " + r.text() for r in report.tail)
    if report.trace_ref:
        lines.append(f"trace written to {report.trace_ref}")
    return "\n".join(lines)


def trace_lines(records: Sequence[TraceRecord]) -> List[str]:
    return [json.dumps(r.as_dict(), ensure_ascii=False, sort_keys=True) for r in records]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxprover", description="Saturation prover with assumption boxes.")
    ap.add_argument("problem", help="problem file (or the name of a bundled problem)")
    ap.add_argument("--theory", action="append", default=[], metavar="FILE",
                    help="theory file or bundled theory name; repeatable")
    ap.add_argument("--max-updates", type=int, default=2000)
    ap.add_argument("--trace", action="store_true", help="print the update trace")
    ap.add_argument("--trace-json", metavar="PATH", help="write line-delimited JSON trace records")
    ap.add_argument("--check", action="store_true", help="replay every stored justification")
    ap.add_argument("--dump-rewrites", action="store_true", help="print the rewrite table classes")
    ap.add_argument("--no-script", action="store_true", help="ignore the problem's script")
    ap.add_argument("--w-base", type=int, default=1)
    ap.add_argument("--w-size", type=int, default=1)
    ap.add_argument("--w-box", type=int, default=10)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else 0
    try:
        config = SearchConfig(args.max_updates, args.w_base, args.w_size, args.w_box)
        prob, theory = load_problem(args.problem, args.theory)
        script = None
        if prob.script_text.strip() and not args.no_script:
            script = parse_script(prob.script_text, theory, dict(prob.variables))
        t0 = time.perf_counter()
        state = init(prob.statement(), theory, config)
        if script is not None:
            interpret(script, state)
        run(state)
        wall = time.perf_counter() - t0
    except (OSError, ParseError, TheoryError, ProblemError, ScriptSyntaxError, FreshnessError,
            IllFormedGoal, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    rep = report_for(state, wall, args.check)
    if args.trace_json:
        Path(args.trace_json).write_text("\n".join(trace_lines(rep.trace)) + "\n")
        rep.trace_ref = args.trace_json
    if args.trace:
        for r in rep.trace:
            print(r.text())
    if args.dump_rewrites:
        print(state.table.dump())
    print(render_report(rep))
    print(f"time: {wall:.3f}s", file=sys.stderr)
    if rep.check not in (None, "ok"):
        return EXIT_CHECK
    return EXIT[rep.outcome]


if __name__ == "__main__":
    sys.exit(main())
