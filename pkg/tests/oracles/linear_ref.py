"""Exact evaluation of linear formulas at a point.

Independent of the Fourier-Motzkin backend. A quantifier over ``x`` whose body
is quantifier-free is decided by trying one point from every sign cell of the
atoms, which become univariate linear once the outer variables are fixed:
roots, midpoints between adjacent roots and one point beyond each end.
"""

from fractions import Fraction

from drl import syntax as S


class NotLinear(ValueError):
    pass


def lin(t):
    """``{name: coefficient}`` with the constant under key ``None``."""
    if isinstance(t, S.Number):
        return {None: t.value}
    if isinstance(t, S.Var):
        return {str(t.var): Fraction(1)}
    if isinstance(t, (S.Plus, S.Minus)):
        a, b = lin(t.left), lin(t.right)
        sign = 1 if isinstance(t, S.Plus) else -1
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, 0) + sign * v
        return out
    if isinstance(t, S.Neg):
        return {k: -v for k, v in lin(t.arg).items()}
    if isinstance(t, S.Times):
        a, b = lin(t.left), lin(t.right)
        if set(a) <= {None}:
            a, b = b, a
        if not set(b) <= {None}:
            raise NotLinear(S.pretty(t))
        c = b.get(None, 0)
        return {k: v * c for k, v in a.items()}
    raise NotLinear(S.pretty(t))


def _val(form, env):
    return sum(v * (1 if k is None else env.get(k, 0)) for k, v in form.items())


OPS = {"=": lambda d: d == 0, "<": lambda d: d < 0, "<=": lambda d: d <= 0,
       ">": lambda d: d > 0, ">=": lambda d: d >= 0}


def _atoms(f, out):
    if isinstance(f, S.Cmp):
        out.append(f)
    for c in S.children(f):
        if isinstance(c, S.FORMULA_TYPES):
            _atoms(c, out)


def _points(f, x, env):
    roots = set()
    atoms = []
    _atoms(f, atoms)
    for a in atoms:
        d = lin(S.Minus(a.left, a.right))
        c = d.get(x, 0)
        if c:
            rest = {k: v for k, v in d.items() if k != x}
            roots.add(-_val(rest, env) / c)
    rs = sorted(roots)
    if not rs:
        return [Fraction(0)]
    pts = [rs[0] - 1, rs[-1] + 1] + rs
    pts += [(a + b) / 2 for a, b in zip(rs, rs[1:])]
    return pts


def holds(f, env) -> bool:
    if isinstance(f, S.TrueF):
        return True
    if isinstance(f, S.FalseF):
        return False
    if isinstance(f, S.Cmp):
        return OPS[f.op](_val(lin(S.Minus(f.left, f.right)), env))
    if isinstance(f, S.Not):
        return not holds(f.arg, env)
    if isinstance(f, S.And):
        return holds(f.left, env) and holds(f.right, env)
    if isinstance(f, S.Or):
        return holds(f.left, env) or holds(f.right, env)
    if isinstance(f, S.Imply):
        return not holds(f.left, env) or holds(f.right, env)
    if isinstance(f, S.Equiv):
        return holds(f.left, env) == holds(f.right, env)
    if isinstance(f, (S.Exists, S.Forall)):
        x = str(f.var)
        want = isinstance(f, S.Exists)
        if any(isinstance(n, (S.Exists, S.Forall)) for n in S.walk(f.body)):
            raise NotLinear("nested quantifiers are outside the reference")
        for p in _points(f.body, x, env):
            if holds(f.body, {**env, x: p}) == want:
                return want
        return not want
    raise TypeError(f)
