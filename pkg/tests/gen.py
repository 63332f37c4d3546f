"""Hypothesis strategies and small random generators shared by the tests."""

from fractions import Fraction

from hypothesis import strategies as st

from drl import syntax as S

NAMES = ("x", "y", "z")
VARS = tuple(S.Variable(n) for n in NAMES)

numbers = st.builds(lambda n, d: S.Number(Fraction(n, d)),
                    st.integers(-5, 5), st.sampled_from((1, 1, 2, 3)))
variables = st.sampled_from(VARS)
var_terms = variables.map(S.Var)


def terms(symbols: bool = True, differentials: bool = True, max_leaves: int = 8):
    leaves = var_terms | numbers
    if symbols:
        leaves = leaves | st.builds(lambda: S.FuncApp("c"))

    def extend(inner):
        out = (st.builds(S.Plus, inner, inner) | st.builds(S.Minus, inner, inner)
               | st.builds(S.Times, inner, inner) | st.builds(S.Neg, inner))
        if symbols:
            out = out | st.builds(lambda a, b: S.FuncApp("f", (a, b)), inner, inner)
        return out

    base = st.recursive(leaves, extend, max_leaves=max_leaves)
    if not differentials:
        return base
    return base | st.builds(S.Differential, st.recursive(leaves, extend, max_leaves=4))


def _cmp(tm):
    return st.builds(S.Cmp, st.sampled_from(S.CMP_OPS), tm, tm)


def formulas_and_programs(symbols: bool = True, max_leaves: int = 10):
    """Pair of mutually recursive strategies (formulas, programs)."""
    tm = terms(symbols, differentials=False, max_leaves=4)
    atoms = _cmp(tm) | st.just(S.TRUE) | st.just(S.FALSE)
    if symbols:
        atoms = (atoms | st.builds(lambda t: S.PredApp("p", (t,)), tm)
                 | st.just(S.Predicational("P")))
    prog_atoms = (st.builds(S.Assign, variables, tm) | st.builds(S.AssignAny, variables)
                  | st.builds(S.Test, _cmp(tm))
                  | st.builds(lambda v, t, d: S.ODE(((v, t),), d), variables, tm,
                              st.just(S.TRUE) | _cmp(tm)))
    if symbols:
        prog_atoms = prog_atoms | st.just(S.ProgConst("a"))

    def ext_p(inner):
        return (st.builds(S.Seq, inner, inner) | st.builds(S.Choice, inner, inner)
                | st.builds(S.Loop, inner))

    programs = st.recursive(prog_atoms, ext_p, max_leaves=4)

    def ext_f(inner):
        return (st.builds(S.Not, inner) | st.builds(S.And, inner, inner)
                | st.builds(S.Or, inner, inner) | st.builds(S.Imply, inner, inner)
                | st.builds(S.Equiv, inner, inner)
                | st.builds(S.Forall, variables, inner) | st.builds(S.Exists, variables, inner)
                | st.builds(S.Box, programs, inner) | st.builds(S.Diamond, programs, inner)
                | st.builds(S.Refines, programs, programs)
                | st.builds(S.ProgEquiv, programs, programs))

    return st.recursive(atoms, ext_f, max_leaves=max_leaves), programs


formulas, programs = formulas_and_programs()
