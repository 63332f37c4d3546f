"""Derived axioms and rules, built with the tactics in ``tactics``.

Each ``derive_*`` function returns a self-contained proof script; lemmas a
script needs are re-derived inside it. ``write_corpus`` regenerates the
shipped ``*.proof.json`` files.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import syntax as S
from .tactics import Builder, Eq, R

P = S.parse_program
F = S.parse_formula


# ------------------------------------------------------------ lemmas

def _test_and(b: Builder) -> str:
    """|- {?p(); ?q()} equiv {?p() & q()}"""
    p, q = F("p()"), F("q()")
    pq = S.And(p, q)
    tp, tq, tpq, tt = S.Test(p), S.Test(q), S.Test(pq), S.Test(S.TRUE)

    # ?(p&q) <= ?(p&q); ?true <= ?p; ?q
    idr = b.eq_axiom(";id_r", ("a", tpq))
    first = b.test_ref(pq, p)
    inner = b.inst("[?]", ("q()", pq), ("p()", S.Imply(S.TRUE, q)))
    inner = b.by_prop(S.Box(tpq, S.Imply(S.TRUE, q)), inner)
    as_ref = b.inst("?", ("p()", S.TRUE), ("q()", q))
    flip = b.by_prop(S.Equiv(S.Imply(S.TRUE, q), R(tt, tq)), as_ref)
    boxed = b.ce(inner, flip, [1])
    seq = b.inst(";", ("a", tpq), ("b", tt), ("c", tp), ("d", tq))
    step = b.by_prop(R(S.Seq(tpq, tt), S.Seq(tp, tq)), seq, first, boxed)
    bwd = b.trans(idr.bwd, step)

    # ?p; ?q <= ?true; ?(p&q) <= ?(p&q)
    idl = b.eq_axiom(";id_l", ("a", tpq))
    first = b.test_ref(p, S.TRUE)
    inner = b.inst("[?]", ("q()", p), ("p()", S.Imply(q, pq)))
    inner = b.by_prop(S.Box(tp, S.Imply(q, pq)), inner)
    as_ref = b.inst("?", ("p()", q), ("q()", pq))
    flip = b.by_prop(S.Equiv(S.Imply(q, pq), R(tq, tpq)), as_ref)
    boxed = b.ce(inner, flip, [1])
    seq = b.inst(";", ("a", tp), ("b", tq), ("c", tt), ("d", tpq))
    step = b.by_prop(R(S.Seq(tp, tq), S.Seq(tt, tpq)), seq, first, boxed)
    fwd = b.trans(step, idl.fwd)
    return b.join(Eq(S.Seq(tp, tq), tpq, fwd, bwd))


def _test_comm(b: Builder) -> str:
    """|- {?p(); ?q()} equiv {?q(); ?p()}"""
    ta = _test_and(b)
    e1 = b.split(ta)
    e3 = b.eq_inst(ta, ("p()", "q()"), ("q()", "p()")).sym()
    swap = b.prop("p() & q() <-> q() & p()")
    e2 = b.test_eq(swap)
    return b.join(b.eq_trans(b.eq_trans(e1, e2), e3))


def _assign_det(b: Builder, first: str, left: str, right: str, point) -> str:
    """R(first; left, first; right) when both sides coincide once the assigned
    value is substituted; ``point`` is the refinement with a dot for the variable."""
    pre, l, r = P(first), P(left), P(right)
    det = b.inst(":=det", ("f()", pre.term), ("a", l), ("b", r))
    sub = b.inst("[:=]", ("f()", pre.term), ("p(.)", R(*point)))
    closed = b.refl(b.concl(sub).right.left)
    return b.by_prop(R(S.Seq(pre, l), S.Seq(pre, r)), det, sub, closed)


def _assign_sub(b: Builder) -> str:
    """|- {x:=f(); y:=g(f())} equiv {x:=f(); y:=g(x)}"""
    fwd = _assign_det(b, "x:=f()", "y:=g(f())", "y:=g(x)", (P("y:=g(f())"), P("y:=g(.)")))
    bwd = _assign_det(b, "x:=f()", "y:=g(x)", "y:=g(f())", (P("y:=g(.)"), P("y:=g(f())")))
    return b.join(Eq(P("x:=f(); y:=g(f())"), P("x:=f(); y:=g(x)"), fwd, bwd))


def _test_s(b: Builder) -> str:
    """|- {x:=f(); ?p(f())} equiv {x:=f(); ?p(x)}"""
    fwd = _assign_det(b, "x:=f()", "?p(f())", "?p(x)", (P("?p(f())"), P("?p(.)")))
    bwd = _assign_det(b, "x:=f()", "?p(x)", "?p(f())", (P("?p(.)"), P("?p(f())")))
    return b.join(Eq(P("x:=f(); ?p(f())"), P("x:=f(); ?p(x)"), fwd, bwd))


def _assign_test(b: Builder) -> str:
    """|- {x:=f(); ?p(x)} equiv {?p(f()); x:=f()}"""
    ts = b.split(_test_s(b))
    comm = _test_comm(b)
    assign = b.eq_axiom(":=")
    c = b.chain("x:=f(); ?p(x)")
    c.rw(ts.sym())
    c.rw(assign, [0]).assoc()
    c.rw(b.eq_inst(comm, ("p()", "x=f()"), ("q()", "p(f())")), [1])
    c.unassoc()
    c.rw(b.eq_axiom(":*test", ("p()", "p(f())")), [0]).assoc()
    c.rw(assign.sym(), [1])
    return b.join(c.result())


def _assign_rand_comm(b: Builder) -> str:
    """|- {y:=*; x:=f()} equiv {x:=f(); y:=*}"""
    assign = b.eq_axiom(":=")
    c = b.chain("y:=*; x:=f()")
    c.rw(assign, [1]).unassoc()
    c.rw(b.eq_axiom(":*comm").sym(), [0]).assoc()
    test_y = b.rename(b.axiom(":*test"), "x", "y")
    c.rw(b.eq_inst(test_y, ("p()", "x=f()")), [1]).unassoc()
    c.rw(assign.sym(), [0])
    return b.join(c.result())


def _ode_test(b: Builder) -> Eq:
    """{x'=f(x) & q(x)}; ?q(x)  equivalent to  {x'=f(x) & q(x)}"""
    ode = P("{x'=f(x) & q(x)}")
    tq, tt = S.Test(F("q(x)")), S.Test(S.TRUE)
    weaken = b.test_ref("q(x)", "true")
    idr = b.eq_axiom(";id_r", ("a", ode))
    fwd = b.trans(b.seq_mono(b.refl(ode), weaken), idr.fwd)
    dw = b.eq_axiom("DW=", ("p(.)", "q(.)"))
    idl = b.eq_axiom(";id_l", ("a", S.Seq(ode, tq)))
    bwd = b.trans(dw.fwd, b.seq_mono(weaken, b.refl(S.Seq(ode, tq))), idl.fwd)
    return Eq(S.Seq(ode, tq), ode, fwd, bwd)


def _ode_holds(b: Builder, ode: S.ODE) -> str:
    """|- [ode](x'=f(x) & domain) from the ode axiom and reflexivity."""
    ax = b.inst("ode", ("f(.)", "f(.)"), ("g(.)", "f(.)"), ("p(.)", _dotted(ode.domain)),
                ("q(.)", _dotted(ode.domain)))
    return b.by_prop(S.Box(ode, S.And(F("x'=f(x)"), ode.domain)), ax, b.refl(ode))


def _dotted(f: S.Formula) -> str:
    """Print a formula over x with x replaced by the dot."""
    return S.pretty(f).replace("(x)", "(.)")


# ------------------------------------------------------------ scripts

def derive_cup_idemp() -> dict:
    b = Builder("cup_idemp", "choice is idempotent")
    b.join(Eq(P("a ++ a"), P("a"), b.choice_incl("a ++ a", "a"), b.choice_incl("a", "a ++ a")))
    return b.script("{a ++ a} equiv {a}")


def derive_cup_comm() -> dict:
    b = Builder("cup_comm", "choice is commutative")
    b.join(Eq(P("a ++ b"), P("b ++ a"), b.choice_incl("a ++ b", "b ++ a"),
              b.choice_incl("b ++ a", "a ++ b")))
    return b.script("{a ++ b} equiv {b ++ a}")


def derive_cup_assoc() -> dict:
    b = Builder("cup_assoc", "choice is associative")
    l, r = P("a ++ {b ++ c}"), P("{a ++ b} ++ c")
    b.join(Eq(l, r, b.choice_incl(l, r), b.choice_incl(r, l)))
    return b.script("{a ++ b ++ c} equiv {{a ++ b} ++ c}")


def derive_test_and() -> dict:
    b = Builder("test_and", "sequential tests are a conjunctive test")
    _test_and(b)
    return b.script("{?p(); ?q()} equiv {?p() & q()}")


def derive_test_or() -> dict:
    b = Builder("test_or", "a choice of tests is a disjunctive test")
    p, q = F("p()"), F("q()")
    tp, tq, tpq = S.Test(p), S.Test(q), S.Test(S.Or(p, q))
    choice = S.Choice(tp, tq)
    l = b.inst("cup_l", ("a", tp), ("b", tq), ("c", tpq))
    fwd = b.by_prop(R(choice, tpq), l, b.test_ref(p, S.Or(p, q)), b.test_ref(q, S.Or(p, q)))
    r = b.inst("cup_r", ("a", tpq), ("b", tp), ("c", tq))
    t1 = b.inst("?", ("p()", S.Or(p, q)), ("q()", p))
    t2 = b.inst("?", ("p()", S.Or(p, q)), ("q()", q))
    bwd = b.by_prop(R(tpq, choice), r, t1, t2)
    b.join(Eq(choice, tpq, fwd, bwd))
    return b.script("{?p() ++ ?q()} equiv {?p() | q()}")


def derive_dist_r() -> dict:
    # Only this direction is derived. The converse needs a choice on the left of a
    # sequence to be split, which no axiom does below the top level.
    b = Builder("dist_r", "sequential composition distributes over a left choice "
                          "(the refinement direction that the axioms derive)")
    ac, bc = P("a; c"), P("b; c")
    tgt = P("{a ++ b}; c")
    left = b.seq_mono(b.choice_incl("a", "a ++ b"), b.refl("c"))
    right = b.seq_mono(b.choice_incl("b", "a ++ b"), b.refl("c"))
    ax = b.inst("cup_l", ("a", ac), ("b", bc), ("c", tgt))
    b.by_prop(R(S.Choice(ac, bc), tgt), ax, left, right)
    return b.script("{a; c ++ b; c} refines {{a ++ b}; c}")


def derive_assign_sub() -> dict:
    b = Builder("assign_sub", "substitute an assigned value into a later assignment")
    _assign_sub(b)
    return b.script("{x:=f(); y:=g(f())} equiv {x:=f(); y:=g(x)}")


def derive_test_s() -> dict:
    b = Builder("test_s", "substitute an assigned value into a later test")
    _test_s(b)
    return b.script("{x:=f(); ?p(f())} equiv {x:=f(); ?p(x)}")


def derive_assign_test() -> dict:
    b = Builder("assign_test", "move a test in front of an assignment")
    _assign_test(b)
    return b.script("{x:=f(); ?p(x)} equiv {?p(f()); x:=f()}")


def derive_assign_merge() -> dict:
    b = Builder("assign_merge", "merge two assignments to the same variable")
    assign = b.eq_axiom(":=")
    c = b.chain("x:=f(); x:=g(x)")
    c.rw(assign, [0]).assoc()
    c.rw(b.eq_axiom(":=*merge", ("p(.)", ".=f()"), ("f(.)", "g(.)")))
    onepoint = b.inst("ex_onepoint", ("p(.)", "x=g(.)"))
    c.rw(b.test_eq(onepoint), [1])
    c.rw(b.eq_axiom(":=", ("f()", "g(f())")).sym())
    b.join(c.result())
    return b.script("{x:=f(); x:=g(x)} equiv {x:=g(f())}")


def derive_assign_rand_comm() -> dict:
    b = Builder("assign_rand_comm", "a nondeterministic assignment commutes with an "
                                    "assignment to another variable")
    _assign_rand_comm(b)
    return b.script("{y:=*; x:=f()} equiv {x:=f(); y:=*}")


def derive_assign_comm() -> dict:
    b = Builder("assign_comm", "assignments to different variables commute")
    sub = b.split(_assign_sub(b))
    test_y = b.rename(_assign_test(b), "x", "y")
    rand_x = b.rename(_assign_rand_comm(b), "x", "y")
    assign = b.eq_axiom(":=")
    c = b.chain("x:=f(); y:=g(x)")
    c.rw(sub.sym())
    c.rw(assign, [0]).assoc()
    c.rw(b.eq_inst(test_y, ("f()", "g(f())"), ("p(.)", "x=f()")).sym(), [1])
    c.unassoc()
    c.rw(b.eq_inst(rand_x, ("f()", "g(f())")), [0]).assoc()
    c.rw(assign.sym(), [1])
    b.join(c.result())
    return b.script("{x:=f(); y:=g(x)} equiv {y:=g(f()); x:=f()}")


def derive_assign_eq() -> dict:
    b = Builder("assign_eq", "assignment as a universally quantified equation")
    rand = b.inst("[:*]", ("p(.)", ".=f() -> p(.)"))
    test = b.inst("[?]", ("q()", "x=f()"), ("p()", "p(x)"))
    inner = b.congr("[x:=*][?x=f()]p(x)", [1], test)
    seq = b.inst("[;]", ("a", "x:=*"), ("b", "?x=f()"), ("P(||)", "p(x)"))
    boxed = b.box_eq(b.eq_axiom(":="), "p(x)")
    goal = "[x:=f()]p(x) <-> \\forall x (x=f() -> p(x))"
    b.by_prop(goal, rand, inner, seq, boxed)
    return b.script(goal)


def derive_iterate() -> dict:
    b = Builder("iterate", "unfold a loop under a box")
    unfold = b.box_eq(b.eq_axiom("unfold_l").sym(), "P(||)")
    choice = b.inst("[++]", ("a", "?true"), ("b", "a; a*"))
    test = b.inst("[?]", ("q()", "true"), ("p()", "P(||)"))
    seq = b.inst("[;]", ("b", "a*"))
    goal = "[a*]P(||) <-> P(||) & [a][a*]P(||)"
    b.by_prop(goal, unfold, choice, test, seq)
    return b.script(goal)


def derive_DE() -> dict:
    b = Builder("DE", "differential effect: the derivative equals the right-hand side")
    ode = "{x'=f(x) & q(x)}"
    seq = b.inst("[;]", ("a", ode), ("b", "x':=f(x)"))
    boxed = b.box_eq(b.eq_axiom("DE=", ("p(.)", "q(.)")), "P(||)")
    goal = f"[{ode}]P(||) <-> [{ode}][x':=f(x)]P(||)"
    b.by_prop(goal, seq, boxed)
    return b.script(goal)


def derive_DW() -> dict:
    b = Builder("DW", "differential weakening: the domain holds throughout")
    ode = "{x'=f(x) & q(x)}"
    boxed = b.box_eq(_ode_test(b), "p(x)")
    seq = b.inst("[;]", ("a", ode), ("b", "?q(x)"), ("P(||)", "p(x)"))
    test = b.inst("[?]", ("q()", "q(x)"), ("p()", "p(x)"))
    inner = b.congr(f"[{ode}][?q(x)]p(x)", [1], test)
    goal = f"[{ode}]p(x) <-> [{ode}](q(x) -> p(x))"
    b.by_prop(goal, boxed, seq, inner)
    return b.script(goal)


def derive_DC() -> dict:
    b = Builder("DC", "differential cut: a proven invariant may join the domain")
    oq, oqr = P("{x'=f(x) & q(x)}"), P("{x'=f(x) & q(x) & r(x)}")
    post_q, post_qr = F("x'=f(x) & q(x)"), F("x'=f(x) & q(x) & r(x)")

    # [oq]r -> R(oq, oqr)
    holds_q = _ode_holds(b, oq)
    taut = S.Imply(post_q, S.Imply(F("r(x)"), post_qr))
    step = b.k_step(b.g(b.prop(taut), oq), holds_q)
    k = b.inst("K", ("a", oq), ("P(||)", "r(x)"), ("Q(||)", post_qr))
    cut = b.mp(k, step)
    ax = b.inst("ode", ("f(.)", "f(.)"), ("g(.)", "f(.)"), ("p(.)", "q(.)"),
                ("q(.)", "q(.) & r(.)"))
    fwd = b.by_prop(S.Imply(S.Box(oq, F("r(x)")), R(oq, oqr)), cut, ax)

    # R(oqr, oq)
    holds_qr = _ode_holds(b, oqr)
    weak = b.box_mono(holds_qr, post_q)
    ax = b.inst("ode", ("f(.)", "f(.)"), ("g(.)", "f(.)"), ("p(.)", "q(.) & r(.)"),
                ("q(.)", "q(.)"))
    bwd = b.by_prop(R(oqr, oq), ax, weak)

    l = b.inst("[<=]", ("a", oq), ("b", oqr), ("P(||)", "p(x)"))
    r = b.inst("[<=]", ("a", oqr), ("b", oq), ("P(||)", "p(x)"))
    goal = ("[{x'=f(x) & q(x)}]r(x) -> ([{x'=f(x) & q(x)}]p(x) <-> "
            "[{x'=f(x) & q(x) & r(x)}]p(x))")
    b.by_prop(goal, fwd, bwd, l, r)
    return b.script(goal)


def derive_assign_rand() -> dict:
    b = Builder("assign_rand", "an assignment followed by a nondeterministic "
                               "assignment to the same variable")
    c = b.chain("x:=f(); x:=*")
    c.rw(b.eq_axiom(":="), [0]).assoc()
    c.rw(b.eq_axiom(":*merge", ("p(.)", ".=f()")))
    onepoint = b.inst("ex_onepoint", ("p(.)", "true"))
    drop = b.prop("y=f() & true <-> y=f()")
    exists = b.ce(onepoint, drop, [0, 0])
    c.rw(b.test_eq(b.by_prop("\\exists y y=f() <-> true", exists)), [1])
    c.rw(b.eq_axiom(";id_r", ("a", "x:=*")))
    b.join(c.result())
    return b.script("{x:=f(); x:=*} equiv {x:=*}")


DERIVATIONS = {
    "cup_idemp": derive_cup_idemp,
    "cup_comm": derive_cup_comm,
    "cup_assoc": derive_cup_assoc,
    "test_and": derive_test_and,
    "test_or": derive_test_or,
    "dist_r": derive_dist_r,
    "assign_sub": derive_assign_sub,
    "test_s": derive_test_s,
    "assign_test": derive_assign_test,
    "assign_merge": derive_assign_merge,
    "assign_comm": derive_assign_comm,
    "assign_rand_comm": derive_assign_rand_comm,
    "assign_eq": derive_assign_eq,
    "iterate": derive_iterate,
    "DE": derive_DE,
    "DW": derive_DW,
    "DC": derive_DC,
    "assign_rand": derive_assign_rand,
}


def write_corpus(directory) -> list:
    out = []
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, fn in DERIVATIONS.items():
        path = directory / f"{name}.proof.json"
        path.write_text(json.dumps(fn(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
        out.append(path)
    return out
