import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from drl import arith
from drl import syntax as S

import arith_check
from oracles import linear_ref as R


def v(text):
    return arith.valid(S.parse_formula(text))


@pytest.mark.parametrize("text", [
    "x>=0 -> x+1>0",
    "x<=y & y<=z -> x<=z",
    "\\exists x (x>=1 & x<=3)",
    "\\forall x (x>=0 -> x+1>0)",
    "(x = xp+1 & xp>=0) -> x>=xp",
    "\\forall x \\exists y y>x",
    "2*x+3*y>=1 & x-y>=0 -> 5*x>=1",
    "x=y -> y=x",
    "x>0 | x<=0",
])
def test_valid(text):
    assert isinstance(v(text), arith.Valid)


@pytest.mark.parametrize("text", [
    "x>=0",
    "x+v*0>=0",
    "\\exists y (y>x & y<x)",
    "x<=y -> x<y",
    "\\exists x \\forall y y>x",
])
def test_invalid_with_witness(text):
    r = v(text)
    assert isinstance(r, arith.Invalid)
    f = S.parse_formula(text)
    while isinstance(f, S.Forall):
        f = f.body
    if not any(isinstance(n, (S.Exists, S.Forall)) for n in S.walk(f.body if isinstance(
            f, S.Exists) else f)):
        assert not R.holds(f, {k: Fraction(val) for k, val in r.witness.items()})


def test_small_witnesses():
    assert v("x>=0").witness == {"x": Fraction(-1)}
    assert v("x+v*0>=0").witness == {"v": Fraction(0), "x": Fraction(-1)}


def test_nonlinear_is_unknown():
    r = v("x*x>=0")
    assert isinstance(r, arith.Unknown) and "onlinear" in r.reason


def test_size_budget():
    big = " & ".join(f"(x{i}>0 | x{i}<0)" for i in range(14))
    r = arith.valid(S.parse_formula(f"!({big})"), budget=100)
    assert isinstance(r, arith.Unknown)


def test_satisfiable():
    w = arith.satisfiable(S.parse_formula("x>1 & x<2 & y=x+1"))
    assert 1 < w["x"] < 2 and w["y"] == w["x"] + 1
    assert arith.satisfiable(S.parse_formula("x>1 & x<1")) is None


def test_evaluate():
    assert arith.evaluate(S.parse_formula("x+y<=3 & !(x=1)"), {"x": 2, "y": 1})


def test_eliminate():
    f = arith.eliminate("exists", S.Variable("y"), S.parse_formula("x<y & y<z"))
    # the projection is equivalent to x<z
    assert isinstance(arith.valid(S.Equiv(arith.dnf_to_formula(f) if isinstance(f, list)
                                          else f, S.parse_formula("x<z"))), arith.Valid)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_random_sentences_agree_with_reference(seed):
    rng = random.Random(seed)
    f = arith_check.random_sentence(rng)
    r = arith_check.compare(f, rng)
    if r["verdict"] == "valid":
        assert r["sampled_false"] is None, S.pretty(f)
    elif r["verdict"] == "invalid":
        assert r["witness_ok"], S.pretty(f)
