"""Walk through the bundled proof that a prime above 2 is odd.

Run with `python3 demos/prime_odd_walkthrough.py`.
"""

from boxprover.cli import check_state, load_problem, solve
from boxprover.kernel import replay
from boxprover.search import trace


def main():
    prob, theory = load_problem("prime_odd")
    print("goal:", prob.statement())
    state = solve(prob, theory)

    # box 0 holds the goal in contradiction form: the hypotheses plus the negated conclusion
    print("box 0 assumes:", [str(a) for a in state.boxes[0].assumptions])

    for rec in trace(state):
        print(" ", rec.text())

    print(f"outcome: {state.outcome.kind} after {state.outcome.pulled} updates")
    # the case split on 2 = 1 ∨ 2 = p lives in its own box; its refutation is exported downward
    for i in range(1, len(state.boxes)):
        print(f"box {i}: parent {state.boxes[i].parent}, assumes",
              [str(a) for a in state.boxes[i].assumptions])

    assert replay(state.outcome.proof, theory, state.boxes, closed=True)
    print("final proof replays;", "every stored item replays" if check_state(state) is None else "replay FAILED")


if __name__ == "__main__":
    main()
