"""How proof scripts steer the search.

The larger-prime theorem needs a witness the prover would not invent on its own.
A two-command script supplies it; without the script the search gives up.
"""

from pathlib import Path

from boxprover.cli import load_problem, solve
from boxprover.script import render_script, parse, stuck
from boxprover.search import SearchConfig

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "corpus"


def show_run(label, path, **kw):
    prob, theory = load_problem(path)
    state = solve(prob, theory, SearchConfig(max_updates=400), **kw)
    out = state.outcome
    line = f"{label:<28} {out.kind:<10} {out.pulled:>4} updates"
    err = stuck(state)
    print(line + (f"  ({err})" if err else ""))
    return prob, theory


def main():
    prob, theory = show_run("larger_prime, scripted", "larger_prime")
    print("  script:", render_script(parse(prob.script_text, theory, dict(prob.variables))))
    show_run("larger_prime, no script", "larger_prime", use_script=False)

    # INDUCT n opens a case n = 0; the n ≠ 0 side gets an induction hypothesis at n - 1
    show_run("f n = 0 by INDUCT", CORPUS / "induct_zero.prob")
    # h steps down by two, so plain induction is not enough
    show_run("h n = 0 by STRONG_INDUCT", CORPUS / "strong_zero.prob")
    show_run("h n = 0, no script", CORPUS / "strong_zero.prob", use_script=False)


if __name__ == "__main__":
    main()
