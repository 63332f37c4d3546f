import random

import pytest
from hypothesis import given, settings, strategies as st

from drl import statics as ST
from drl import syntax as S

import props
from gen import formulas, programs, terms
from oracles import static_ref as R

X, Y = S.Variable("x"), S.Variable("y")

# FV golden table; values computed by the reference in oracles/static_ref.py
# (an independent transcription of the equations) and frozen here
FV_GOLDEN = [
    ("formula", "{?true} refines {x:=1}", "{x}"),
    ("term", "x+y", "{x, y}"),
    ("term", "(x*y)'", "{x, x', y, y'}"),
    ("term", "f()", "{}"),
    ("formula", "[x:=1]x>=y", "{y}"),
    ("formula", "\\forall x x>=y", "{y}"),
    ("program", "x:=1 ++ ?true", "{}"),
    ("program", "{x'=v & x<=5}", "{v, x}"),
    ("program", "x:=*; ?x>=y", "{x, y}"),
    ("program", "a", "ALL"),
    ("formula", "P(||)", "ALL"),
    ("formula", "[a]x>0", "ALL"),
    ("formula", "{a} refines {x:=1}", "ALL"),
    ("formula", "{x:=1} refines {x:=2}", "{}"),
    ("formula", "{x:=1 ++ y:=2} refines {x:=3}", "{x, y}"),
    ("program", "{x:=y}*", "{y}"),
    ("program", "x:=y; y:=x", "{y}"),
    ("program", "{x:=1 ++ ?x>0}; y:=x", "{x}"),
    ("formula", "<x:=1>x=y", "{y}"),
    ("formula", "{x:=*} equiv {x:=*; x:=*}", "{x}"),
    ("program", "{x'=y, y'=-x & x>=z}", "{x, y, z}"),
    ("formula", "[{x'=1}]x>=t", "{t, x}"),
    ("formula", "\\exists y [x:=y]x>z", "{z}"),
    ("term", "(x+2*y)'+z", "{x, x', y, y', z}"),
    ("formula", "[{x:=x+1}*]x>=y", "{x, y}"),
    ("formula", "{?x>0} refines {?y>0}", "{x, y}"),
    ("program", "?p(x,y)", "{x, y}"),
    ("formula", "[x:=f(y)]q(x,z)", "{y, z}"),
    ("formula", "{{x:=1; y:=2} ++ x:=3} refines {x:=*}", "{x, y}"),
    ("formula", "x'=y & [z:=x']z>0", "{x', y}"),
    ("program", "{x'=v, v'=a}; ?x<=5", "{a, v, x}"),
]

BV_GOLDEN = [
    ("x:=1 ++ ?true", "{x}", "{}"),
    ("{x'=v & x<=5}", "{x, x'}", "{x, x'}"),
    ("x:=*; ?x>=y", "{x}", "{x}"),
    ("a", "ALL", "{}"),
    ("{x:=y}*", "{x}", "{}"),
    ("{x:=1 ++ ?x>0}; y:=x", "{x, y}", "{y}"),
    ("{x'=v, v'=a}; ?x<=5", "{v, v', x, x'}", "{v, v', x, x'}"),
    ("{x:=1; y:=1} ++ {y:=2; z:=2}", "{x, y, z}", "{y}"),
]

PARSE = {"term": S.parse_term, "formula": S.parse_formula, "program": S.parse_program}


@pytest.mark.parametrize("kind,text,expected", FV_GOLDEN)
def test_fv_golden(kind, text, expected):
    assert str(ST.fv(PARSE[kind](text))) == expected


@pytest.mark.parametrize("text,bv,mbv", BV_GOLDEN)
def test_bv_mbv_golden(text, bv, mbv):
    p = S.parse_program(text)
    assert str(ST.bv(p)) == bv
    assert str(ST.mbv(p)) == mbv


def test_refinement_example():
    assert ST.fv(S.parse_formula("{?true} refines {x:=1}")) == ST.VarSet.of(X)


def test_naive_refinement_fv_would_miss_x():
    # FV(?true) and FV(x:=1) are both empty; only the bound-but-not-must-bound
    # contribution brings x in
    a, b = S.parse_program("?true"), S.parse_program("x:=1")
    assert (ST.fv(a) | ST.fv(b)).is_empty


def test_cofinite_rendering():
    assert str(ST.ALL) == "ALL"
    assert str(ST.ALL - ST.VarSet.of(X)) == "ALL \\ {x}"
    assert (ST.ALL - ST.VarSet.of(X)).to_json() == {"all_except": ["x"]}


@settings(max_examples=300)
@given(formulas)
def test_fv_formula_matches_reference(f):
    assert str(ST.fv(f)) == R.render(R.form(f))


@settings(max_examples=300)
@given(programs)
def test_program_sets_match_reference(p):
    assert str(ST.fv(p)) == R.render(R.prog(p))
    assert str(ST.bv(p)) == R.render(R.bound(p))
    assert str(ST.mbv(p)) == R.render(R.must(p))


@settings(max_examples=200)
@given(terms())
def test_fv_term_matches_reference(t):
    assert str(ST.fv(t)) == R.render(R.t(t))


@settings(max_examples=300)
@given(programs)
def test_mbv_within_bv(p):
    assert ST.mbv(p) <= ST.bv(p)


varsets = st.builds(lambda names, co: ST.VarSet(frozenset(S.Variable(n) for n in names), co),
                    st.sets(st.sampled_from("xyzuv")), st.booleans())


@given(varsets, varsets)
def test_varset_algebra(a, b):
    assert a <= a | b and b <= a | b
    assert a & b <= a and a & b <= b
    assert (a - b).disjoint(b)
    assert (a - b) | (a & b) == a
    assert a.complement().complement() == a
    for v in (S.Variable(n) for n in "xyzw"):
        assert (v in a | b) == (v in a or v in b)
        assert (v in a & b) == (v in a and v in b)
        assert (v in a - b) == (v in a and v not in b)


@pytest.mark.parametrize("check", sorted(props.CHECKS))
def test_coincidence_and_bound_effect_smoke(check):
    rng = random.Random(check)
    results = [props.CHECKS[check](rng) for _ in range(60)]
    assert "violation" not in results
    assert results.count("ok") >= 40


def test_coincidence_harness_detects_wrong_fv(monkeypatch):
    # shrinking FV to nothing must make the term check fail
    monkeypatch.setattr(props.ST, "fv", lambda e: ST.EMPTY)
    rng = random.Random(1)
    assert "violation" in [props.check_term(rng) for _ in range(50)]
