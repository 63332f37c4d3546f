from fractions import Fraction

import pytest
from hypothesis import given, settings

from drl import syntax as S

from gen import formulas, programs, terms

X, Y = S.Variable("x"), S.Variable("y")


@settings(max_examples=300)
@given(terms())
def test_term_round_trip(t):
    assert S.parse_term(S.pretty(t)) == t


@settings(max_examples=300)
@given(formulas)
def test_formula_round_trip(f):
    assert S.parse_formula(S.pretty(f)) == f


@settings(max_examples=300)
@given(programs)
def test_program_round_trip(p):
    assert S.parse_program(S.pretty(p)) == p


@settings(max_examples=200)
@given(formulas)
def test_desugar_idempotent_and_printable(f):
    d = S.desugar(f)
    assert S.desugar(d) == d
    assert S.parse_formula(S.pretty(d)) == d
    for n in S.walk(d):
        assert not isinstance(n, (S.Diamond, S.ProgEquiv))


def test_examples():
    assert S.parse_term("x+1") == S.Plus(S.Var(X), S.Number(Fraction(1)))
    assert S.parse_program("x:=1; y:=x") == S.Seq(S.Assign(X, S.Number(Fraction(1))),
                                                  S.Assign(Y, S.Var(X)))
    f = S.parse_formula("{?true} refines {x:=1}")
    assert f == S.Refines(S.Test(S.TRUE), S.Assign(X, S.Number(Fraction(1))))
    assert S.parse_formula("{a} equiv {b}") == S.ProgEquiv(S.ProgConst("a"), S.ProgConst("b"))


def test_precedence():
    assert S.parse_term("1+2*x") == S.Plus(S.Number(1), S.Times(S.Number(2), S.Var(X)))
    f = S.parse_formula("x>0 & y>0 | x<0")
    assert isinstance(f, S.Or) and isinstance(f.left, S.And)
    f = S.parse_formula("x>0 -> y>0 -> x<0")
    assert isinstance(f, S.Imply) and isinstance(f.right, S.Imply)
    p = S.parse_program("x:=1 ++ x:=2; y:=1")
    assert isinstance(p, S.Choice) and isinstance(p.right, S.Seq)


def test_desugar_diamond_and_equiv():
    d = S.desugar(S.parse_formula("<x:=1>x>0"))
    assert d == S.parse_formula("![x:=1]!x>0")
    d = S.desugar(S.parse_formula("{a} equiv {b}"))
    assert d == S.parse_formula("{a} refines {b} & {b} refines {a}")


def test_ode_with_domain():
    p = S.parse_program("{x'=v, v'=-1 & x<=5}")
    assert isinstance(p, S.ODE) and p.vars == (X, S.Variable("v"))


@pytest.mark.parametrize("text", ["x+", "x:=", "{x'=1", "[x:=1 x>0", "x>0 &", "x^2>0", "{}"])
def test_parse_errors_carry_location(text):
    with pytest.raises(S.ParseError) as err:
        S.parse_formula(text)
    assert "line 1" in str(err.value)


def test_ill_formed_rejected():
    for text in ("{x'=1, x'=2}", "?x'>0", "{x'=1 & x'>0}"):
        with pytest.raises((S.IllFormed, S.ParseError)):
            S.parse_program(text)
    with pytest.raises(S.IllFormed):
        S.ODE(((X, S.Number(1)), (X, S.Number(2))))
    with pytest.raises(S.IllFormed):
        S.Variable("refines")


def test_arity_consistency():
    with pytest.raises(S.ArityError):
        S.parse_formula("f(x)>0 & f(x,y)>0")


def test_signature():
    sig = S.signature(S.parse_formula("[a]p(f(x)) & P(||) & c()>0"))
    assert ("f", "func", 1) in sig and ("c", "func", 0) in sig
    assert ("p", "pred", 1) in sig and ("a", "prog", 0) in sig
