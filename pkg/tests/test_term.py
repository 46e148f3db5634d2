import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from support import nat_term, nat_theory

from boxprover.syntax import parse_term
from boxprover.term import (
    BOOL, NAT, Abs, App, Bound, Const, Free, IllTyped, InvalidPattern, Num, Var, abstract_free, apply_subst,
    beta_norm, fo_match, fun_type, ho_match, pattern_valid, schematics, show, subterms,
    term_size, typecheck,
)

P = {"p": NAT}


def pat(src, variables=None, expect=BOOL):
    return parse_term(src, nat_theory().scope(variables or {}), expect)


class TestTypecheck:
    def test_even_p_is_bool(self):
        assert typecheck(nat_term("(even p)", P)) == BOOL

    def test_free_leaf(self):
        assert typecheck(Free("p", NAT)) == NAT

    def test_non_function_head(self):
        with pytest.raises(IllTyped):
            typecheck(App(Free("p", NAT), Num(0)))

    def test_dangling_bound(self):
        with pytest.raises(IllTyped):
            typecheck(Bound(0))

    def test_numc_needs_nat(self):
        with pytest.raises(IllTyped):
            Var("A", BOOL, numc=True)


class TestSubstitution:
    def test_conjunction_instance(self):
        p = pat("(and ?A ?B)")
        a = nat_term("(> p 1)", P)
        b = nat_term("(forall (m nat) (=> (dvd m p) (or (= m 1) (= m p))))", P)
        assert apply_subst({"A": a, "B": b}, p) == nat_term(
            "(and (> p 1) (forall (m nat) (=> (dvd m p) (or (= m 1) (= m p)))))", P)

    def test_empty_is_identity(self):
        t = nat_term("(prime p)", P)
        assert apply_subst({}, t) == t

    def test_lambda_instance_beta_reduces(self):
        v = {"m": NAT, "n": NAT}
        p = pat("(<= (?f m) (?f n))", v)
        succ = Abs(NAT, abstract_free(nat_term("(+ x 1)", {"x": NAT}, expect=NAT), "x"), "x")
        out = apply_subst({"f": succ}, p)
        assert out == nat_term("(<= (+ m 1) (+ n 1))", v)
        assert typecheck(out) == BOOL


class TestMatching:
    def test_disjunction(self):
        t = nat_term("(or (= 2 1) (= 2 p))", P)
        assert fo_match(pat("(or ?A ?B)"), t) == [{"A": nat_term("(= 2 1)"), "B": nat_term("(= 2 p)", P)}]

    def test_schematic_matches_anything(self):
        u = nat_term("(+ p 3)", P, expect=NAT)
        assert fo_match(Var("x", NAT), u) == [{"x": u}]

    def test_numc_rejects_non_numeral(self):
        p = pat("(+ ?NUMC1 ?NUMC2)", expect=NAT)
        assert fo_match(p, nat_term("(+ n 2)", {"n": NAT}, expect=NAT)) == []
        assert fo_match(p, nat_term("(+ 3 2)", expect=NAT)) == [{"NUMC1": Num(3), "NUMC2": Num(2)}]

    def test_monotone_pattern(self):
        g = {"g": fun_type(NAT, NAT)}
        p = pat("(forall (n nat) (<= (?f n) (?f (+ n 1))))", g)
        t = pat("(forall (n nat) (<= (g n) (g (+ n 1))))", g)
        assert [{k: show(v) for k, v in s.items()} for s in ho_match(p, t)] == [{"f": "g"}]

    def test_schematic_applied_to_schematic_rejected(self):
        p = pat("(<= (?f ?x) 0)")
        assert not pattern_valid(p)
        with pytest.raises(InvalidPattern):
            ho_match(p, pat("(<= (g 1) 0)", {"g": fun_type(NAT, NAT)}))

    def test_repeated_bound_argument_rejected(self):
        h = {"h": fun_type(NAT, NAT, NAT)}
        p = pat("(forall (n nat) (= (?f n n) 0))", h)
        assert not pattern_valid(p)


class TestSizeAndSubterms:
    def test_sizes(self):
        assert term_size(Free("p", NAT)) == 1
        assert term_size(nat_term("(even p)", P)) == 3

    def test_prime_def_size_matches_oracle(self):
        t = nat_term("(= (prime p) (and (> p 1) (forall (m nat) (=> (dvd m p) (or (= m 1) (= m p))))))", P)
        assert term_size(t) == O.count_nodes(t)

    def test_subterms(self):
        assert [show(s) for s in subterms(nat_term("(even p)", P))] == ["even p", "p"]
        assert subterms(Free("p", NAT)) == [Free("p", NAT)]
        t = nat_term("(dvd 2 p)", P)
        assert [show(s) for s in subterms(t)] == ["2 dvd p", "2", "p"]
        assert subterms(t) == O.proper_subterms(t)

    def test_no_terms_under_binders(self):
        t = nat_term("(forall (m nat) (dvd m p))", P)
        assert all(s.loose == 0 for s in subterms(t))


# --- properties ---------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _brute_matches(p, t):
    """Every substitution from subterms of t (plus t) over p's schematics that makes p equal t."""
    names = sorted(schematics(p))
    pool = list(dict.fromkeys([t] + O.proper_subterms(t)))
    found = []
    for combo in itertools.product(pool, repeat=len(names)):
        s = dict(zip(names, combo))
        if apply_subst(s, p) == t:
            found.append(s)
    return found


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_fo_match_sound_and_complete(seed):
    rng = random.Random(seed)
    t = O.random_term(rng, rng.randint(1, 12))
    p = O.random_pattern(rng, rng.randint(1, 12))
    got = fo_match(p, t)
    for s in got:
        assert apply_subst(s, p) == t
    want = _brute_matches(p, t)
    for s in want:
        assert s in got


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_apply_subst_idempotent_and_typed(seed):
    rng = random.Random(seed)
    p = O.random_pattern(rng, rng.randint(1, 12))
    s = {n: O.random_term(rng, 4) for n in schematics(p)}
    once = apply_subst(s, p)
    assert apply_subst(s, once) == once
    assert typecheck(once) == typecheck(p) == NAT


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_ho_match_degenerates_to_fo_match(seed):
    rng = random.Random(seed)
    t = O.random_term(rng, rng.randint(1, 12))
    p = O.random_pattern(rng, rng.randint(1, 12))
    assert pattern_valid(p)
    assert ho_match(p, t) == fo_match(p, t)


def test_ho_match_sound_on_lambda_instances():
    g = {"g": fun_type(NAT, NAT), "k": fun_type(NAT, NAT, NAT)}
    p = pat("(forall (n nat) (= (?f n) (?f (+ n 1))))", g)
    t = pat("(forall (n nat) (= (k n 3) (k (+ n 1) 3)))", g)
    res = ho_match(p, t)
    assert len(res) == 1
    assert beta_norm(apply_subst(res[0], p)) == t


def test_constants_are_typed_instances():
    a = Const("c", NAT)
    b = Const("c", fun_type(NAT, NAT))
    assert a != b
