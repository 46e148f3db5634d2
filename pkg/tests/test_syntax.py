import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from support import nat_term

from boxprover.syntax import ParseError, Scope, Str, TypeMismatch, parse_term, parse_type, read_all, render, to_sexpr
from boxprover.term import BOOL, NAT, fun_type


def test_reader_nests_and_skips_comments():
    forms = read_all('; note\n(a (b c) "s t") x')
    assert forms == [["a", ["b", "c"], Str("s t")], "x"]


@pytest.mark.parametrize("src", ["(a", "a)", '"open'])
def test_reader_rejects_unbalanced(src):
    with pytest.raises(ParseError):
        read_all(src)


def test_types():
    assert parse_type("nat") == NAT
    assert parse_type(["=>", "nat", "nat", "bool"]) == fun_type(NAT, NAT, BOOL)
    with pytest.raises(ParseError):
        parse_type("real", set())


def test_type_mismatch():
    with pytest.raises(TypeMismatch):
        nat_term("(and (prime 1) 2)")


def test_render_round_trip():
    forms = read_all('(step backward abc 1) (script "OBTAIN a")')
    assert read_all(" ".join(render(f) for f in forms)) == forms


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_term_printing_round_trips(seed):
    rng = random.Random(seed)
    t = O.random_term(rng, rng.randint(1, 12))
    scope = Scope({"f": O.F1.type, "g": O.G2.type}, {n: NAT for n in "abcde"}, {"nat", "bool"})
    assert parse_term(to_sexpr(t), scope, NAT) == t


def test_binders_round_trip():
    t = nat_term("(forall (m nat) (=> (dvd m p) (or (= m 1) (= m p))))", {"p": NAT})
    assert nat_term(to_sexpr(t), {"p": NAT}) == t
