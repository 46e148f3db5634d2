"""The rewrite table on its own: equivalence classes per box, and matching modulo them."""

from boxprover.boxlattice import EMPTY, Box, BoxRegistry
from boxprover.kernel import assume
from boxprover.rewrite import EqualityRecord, RewriteTable
from boxprover.syntax import parse_term
from boxprover.term import NAT, show
from boxprover.theory import builtin_nat

th = builtin_nat()
V = {"p": NAT, "q": NAT, "x": NAT, "y": NAT, "z": NAT}


def term(src, expect=NAT):
    return parse_term(src, th.scope(V), expect)


def main():
    boxes = BoxRegistry()
    eq1, eq2 = term("(= x (* y z))", None), term("(= y p)", None)
    boxes.new_primitive(EMPTY, [eq1])
    boxes.new_primitive(Box((0,)), [eq2])
    table = RewriteTable(boxes, th.ac)
    a, b = term("(+ x 1)"), term("(+ (* p z) 1)")
    for t in (a, b):
        table.register_term(t)
    table.add_equality(EqualityRecord(term("x"), term("(* y z)"), Box((0,)), assume(0, 0, eq1)))
    table.add_equality(EqualityRecord(term("y"), term("p"), Box((1,)), assume(1, 0, eq2)))
    print(table.dump())

    # x + 1 and p * z + 1 agree only once y = p is assumed too
    box, just = table.equiv(a, b)
    print(f"{show(a)} = {show(b)} holds in box {box}, by {just.rule}")

    # one pattern, two answers: y in the smaller box, p in the larger one
    pat = parse_term("(+ (* ?a z) 1)", th.scope(V), NAT)
    for r in table.ematch(pat, a):
        print(" ", {k: show(v) for k, v in r.subst}, "in box", r.box)


if __name__ == "__main__":
    main()
