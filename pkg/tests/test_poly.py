from fractions import Fraction

from hypothesis import given, settings, strategies as st

from drl import poly as P
from drl import syntax as S

from oracles import cells_ref

coeff = st.integers(-4, 4).map(Fraction)
upoly = st.lists(coeff, min_size=1, max_size=4)


def test_cells_examples():
    t2 = [Fraction(-2), Fraction(0), Fraction(1)]
    t1 = [Fraction(-1), Fraction(1)]
    assert P.sign_cells([t2, t1], Fraction(0)) == [
        (-1, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)]


@settings(max_examples=150, deadline=None)
@given(st.lists(upoly, min_size=1, max_size=3), st.integers(-2, 1).map(Fraction))
def test_sign_cells_match_reference(polys, lo):
    assert P.sign_cells(polys, lo) == cells_ref.sign_cells(polys, lo)


@settings(max_examples=150, deadline=None)
@given(st.lists(upoly, min_size=1, max_size=3))
def test_cells_are_ordered(polys):
    cuts = [c for kind, c, _ in P.cells(polys, Fraction(0)) if kind == "point"]
    for a, b in zip(cuts, cuts[1:]):
        # every cut sits strictly left of the next one
        assert a.b < b.a


@given(upoly)
def test_rational_roots(p):
    found = P.rational_roots(p)
    if found is None or len(P.u_trim(p)) <= 1:
        return
    roots, rest = found
    for r in roots:
        assert P.u_eval(p, r) == 0
    for r in P.rational_roots(rest)[0]:
        assert r in roots


def test_term_to_poly_and_back():
    t = S.parse_term("(x+1)*(x-1) - y*2")
    p = P.term_to_poly(t)
    assert p == P.term_to_poly(S.parse_term("x*x - 1 - 2*y"))
    assert P.term_to_poly(p.to_term()) == p


def test_differential():
    p = P.term_to_poly(S.parse_term("(x*y)'"))
    assert p == P.term_to_poly(S.parse_term("x'*y + x*y'"))


def test_forall_on_interval():
    t2 = [Fraction(-2), Fraction(0), Fraction(1)]
    # t^2 - 2 <= 0 on [0, 1] but not on [0, 3/2]
    assert P.forall_on_interval([t2], lambda s: s[0] <= 0, Fraction(0), Fraction(1))
    assert not P.forall_on_interval([t2], lambda s: s[0] <= 0, Fraction(0), Fraction(3, 2))
