"""Reference free/bound variable computation, written straight from the equations.

Sets are pairs ``(co, names)``: ``co=False`` is the finite set ``names``,
``co=True`` is every variable except ``names``. Variables are plain strings,
differential symbols carry a trailing quote.
"""

from drl import syntax as S

ALL = (True, frozenset())
NONE = (False, frozenset())


def fin(*names):
    return (False, frozenset(names))


def cup(a, b):
    (ca, na), (cb, nb) = a, b
    if ca and cb:
        return (True, na & nb)
    if ca:
        return (True, na - nb)
    if cb:
        return (True, nb - na)
    return (False, na | nb)


def cap(a, b):
    (ca, na), (cb, nb) = a, b
    if ca and cb:
        return (True, na | nb)
    if ca:
        return (False, nb - na)
    if cb:
        return (False, na - nb)
    return (False, na & nb)


def minus(a, b):
    cb, nb = b
    return cap(a, (not cb, nb))


def render(a):
    co, names = a
    body = "{" + ", ".join(sorted(names, key=lambda n: (n.rstrip("'"), n.endswith("'")))) + "}"
    if not co:
        return body
    return "ALL" if not names else "ALL \\ " + body


def t(e):
    if isinstance(e, S.Var):
        return fin(str(e.var))
    if isinstance(e, (S.Number, S.Dot)):
        return NONE
    if isinstance(e, S.FuncApp):
        out = NONE
        for a in e.args:
            out = cup(out, t(a))
        return out
    if isinstance(e, (S.Plus, S.Minus, S.Times)):
        return cup(t(e.left), t(e.right))
    if isinstance(e, S.Neg):
        return t(e.arg)
    if isinstance(e, S.Differential):
        inner = t(e.arg)
        return cup(inner, (False, frozenset(n + "'" for n in inner[1])))
    raise TypeError(e)


def bound(p):
    if isinstance(p, S.ProgConst):
        return ALL
    if isinstance(p, S.Test):
        return NONE
    if isinstance(p, (S.Assign, S.AssignAny)):
        return fin(str(p.var))
    if isinstance(p, S.ODE):
        out = NONE
        for v, _ in p.eqs:
            out = cup(out, fin(str(v), str(v) + "'"))
        return out
    if isinstance(p, (S.Choice, S.Seq)):
        return cup(bound(p.left), bound(p.right))
    if isinstance(p, S.Loop):
        return bound(p.body)
    raise TypeError(p)


def must(p):
    if isinstance(p, (S.ProgConst, S.Test, S.Loop)):
        return NONE
    if isinstance(p, (S.Assign, S.AssignAny, S.ODE)):
        return bound(p)
    if isinstance(p, S.Choice):
        return cap(must(p.left), must(p.right))
    if isinstance(p, S.Seq):
        return cup(must(p.left), must(p.right))
    raise TypeError(p)


def prog(p):
    if isinstance(p, S.ProgConst):
        return ALL
    if isinstance(p, S.Test):
        return form(p.cond)
    if isinstance(p, S.Assign):
        return t(p.term)
    if isinstance(p, S.AssignAny):
        return fin(str(p.var))
    if isinstance(p, S.ODE):
        out = form(p.domain)
        for v, rhs in p.eqs:
            out = cup(out, cup(fin(str(v)), t(rhs)))
        return out
    if isinstance(p, S.Choice):
        return cup(prog(p.left), prog(p.right))
    if isinstance(p, S.Seq):
        return cup(prog(p.left), minus(prog(p.right), must(p.left)))
    if isinstance(p, S.Loop):
        return prog(p.body)
    raise TypeError(p)


def refines(a, b):
    extra = minus(cup(bound(a), bound(b)), cap(must(a), must(b)))
    return cup(cup(prog(a), prog(b)), extra)


def form(f):
    if isinstance(f, S.Cmp):
        return cup(t(f.left), t(f.right))
    if isinstance(f, S.PredApp):
        return t(S.FuncApp(f.name, f.args))
    if isinstance(f, S.Predicational):
        return ALL
    if isinstance(f, (S.TrueF, S.FalseF)):
        return NONE
    if isinstance(f, S.Not):
        return form(f.arg)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return cup(form(f.left), form(f.right))
    if isinstance(f, (S.Forall, S.Exists)):
        return minus(form(f.body), fin(str(f.var)))
    if isinstance(f, (S.Box, S.Diamond)):
        return cup(prog(f.program), minus(form(f.body), must(f.program)))
    if isinstance(f, S.Refines):
        return refines(f.left, f.right)
    if isinstance(f, S.ProgEquiv):
        return cup(refines(f.left, f.right), refines(f.right, f.left))
    raise TypeError(f)
