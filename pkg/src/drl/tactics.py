"""Untrusted proof construction.

A ``Builder`` records proof-script steps and replays each one through the
kernel as it is added, so a broken tactic fails at the offending step. The
scripts it emits are plain JSON and are re-checked from scratch by
``kernel.check_script``; nothing here is trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernel as K
from . import syntax as S

R = S.Refines


def _text(e) -> str:
    return e if isinstance(e, str) else S.pretty(e)


def _prog(p) -> S.Program:
    return S.parse_program(p) if isinstance(p, str) else p


def _form(f) -> S.Formula:
    return S.desugar(S.parse_formula(f)) if isinstance(f, str) else S.desugar(f)


@dataclass(frozen=True)
class Eq:
    """Step ids of both refinements between ``lhs`` and ``rhs``."""
    lhs: S.Program
    rhs: S.Program
    fwd: str
    bwd: str

    def sym(self) -> "Eq":
        return Eq(self.rhs, self.lhs, self.bwd, self.fwd)


class Builder:
    def __init__(self, name: str, description: str = ""):
        self.name = name
        self.description = description
        self.steps: list = []
        self.done: dict = {}

    # -------------------------------------------------------- raw steps

    def _step(self, rule: str, **args) -> str:
        sid = f"s{len(self.steps) + 1}"
        step = {"id": sid, "rule": rule, **args}
        try:
            self.done[sid] = K._run_step(step, self.done)
        except Exception as exc:
            raise RuntimeError(f"{self.name}: step {sid} ({rule}) failed: {exc}") from exc
        self.steps.append(step)
        return sid

    def concl(self, sid: str) -> S.Formula:
        return self.done[sid].conclusion

    def axiom(self, key: str) -> str:
        return self._step("axiom", key=key)

    def us(self, sid: str, rules) -> str:
        if not rules:
            return sid
        text = "\n".join(f"{lhs} ~> {_text(rep)}" for lhs, rep in rules)
        return self._step("us", **{"from": sid, "subst": text})

    def inst(self, key: str, *rules) -> str:
        return self.us(self.axiom(key), rules)

    def mp(self, imp: str, ant: str) -> str:
        return self._step("mp", **{"from": [imp, ant]})

    def g(self, sid: str, prog) -> str:
        return self._step("g", **{"from": sid, "program": _text(prog)})

    def prop(self, f) -> str:
        return self._step("prop", formula=_text(f))

    def ce(self, sid: str, equiv: str, pos) -> str:
        return self._step("ce", **{"from": sid, "equiv": equiv, "pos": list(pos)})

    def rename(self, sid: str, x: str, y: str) -> str:
        return self._step("rename", **{"from": sid, "x": x, "y": y})

    # -------------------------------------------------------- propositional glue

    def by_prop(self, goal, *sids) -> str:
        """Derive ``goal`` from the conclusions of ``sids`` by one tautology and MP."""
        goal = _form(goal)
        taut = goal
        for sid in reversed(sids):
            taut = S.Imply(self.concl(sid), taut)
        out = self.prop(taut)
        for sid in sids:
            out = self.mp(out, sid)
        return out

    def congr(self, f, pos, equiv: str) -> str:
        """|- f <-> f' where f' rewrites the subformula at ``pos`` by ``equiv``."""
        f = _form(f)
        return self.ce(self.prop(S.Equiv(f, f)), equiv, [1] + list(pos))

    def box_and(self, prog, ids) -> str:
        """From |- [a]A1, ..., |- [a]An get |- [a](A1 & ... & An)."""
        prog = _prog(prog)
        bodies = [self.concl(i).body for i in ids]
        target = S.conj(*bodies)
        taut = target
        for b in reversed(bodies):
            taut = S.Imply(b, taut)
        out = self.g(self.prop(taut), prog)
        for i, b in zip(ids, bodies):
            out = self.k_step(out, i)
        return out

    def k_step(self, box_imp: str, box_ant: str) -> str:
        """From |- [a](A -> B) and |- [a]A get |- [a]B using K."""
        f = self.concl(box_imp)
        k = self.inst("K", ("a", f.program), ("P(||)", f.body.left), ("Q(||)", f.body.right))
        return self.mp(self.mp(k, box_imp), box_ant)

    def box_mono(self, sid: str, target_body) -> str:
        """From |- [a]A get |- [a]B when A -> B is a tautology."""
        f = self.concl(sid)
        imp = self.g(self.prop(S.Imply(f.body, _form(target_body))), f.program)
        return self.k_step(imp, sid)

    # -------------------------------------------------------- refinement

    def refl(self, prog) -> str:
        return self.inst("<=refl", ("a", _prog(prog)))

    def trans(self, *ids) -> str:
        out = ids[0]
        for nxt in ids[1:]:
            a, c = self.concl(out).left, self.concl(out).right
            b = self.concl(nxt).right
            if self.concl(nxt).left != c:
                raise ValueError("trans: refinements do not chain")
            ax = self.inst("<=t", ("a", a), ("c", c), ("b", b))
            out = self.by_prop(R(a, b), ax, out, nxt)
        return out

    def seq_mono(self, left: str, right: str) -> str:
        """R(a,c), R(b,d) give R(a;b, c;d)."""
        a, c = self.concl(left).left, self.concl(left).right
        b, d = self.concl(right).left, self.concl(right).right
        boxed = self.g(right, a)
        ax = self.inst(";", ("a", a), ("b", b), ("c", c), ("d", d))
        return self.by_prop(R(S.Seq(a, b), S.Seq(c, d)), ax, left, boxed)

    def choice_mono(self, left: str, right: str) -> str:
        """R(a,c), R(b,d) give R(a++b, c++d)."""
        a, c = self.concl(left).left, self.concl(left).right
        b, d = self.concl(right).left, self.concl(right).right
        tgt = S.Choice(c, d)
        r1 = self.inst("cup_r", ("a", a), ("b", c), ("c", d))
        r2 = self.inst("cup_r", ("a", b), ("b", c), ("c", d))
        l = self.inst("cup_l", ("a", a), ("b", b), ("c", tgt))
        return self.by_prop(R(S.Choice(a, b), tgt), r1, r2, l, left, right)

    def loop_mono(self, sid: str) -> str:
        a, b = self.concl(sid).left, self.concl(sid).right
        boxed = self.g(sid, S.Loop(a))
        return self.mp(self.inst("unloop", ("a", a), ("b", b)), boxed)

    def refine_in(self, ctx: S.Program, path, sid: str) -> str:
        """From R(x, y) with x at ``path`` of ``ctx`` get R(ctx, ctx[y])."""
        path = list(path)
        if not path:
            if ctx != self.concl(sid).left:
                raise ValueError(f"refine_in: {S.pretty(ctx)} is not {S.pretty(self.concl(sid).left)}")
            return sid
        i, rest = path[0], path[1:]
        if isinstance(ctx, S.Loop):
            return self.loop_mono(self.refine_in(ctx.body, rest, sid))
        kids = [ctx.left, ctx.right]
        inner = self.refine_in(kids[i], rest, sid)
        other = self.refl(kids[1 - i])
        pair = (inner, other) if i == 0 else (other, inner)
        return self.seq_mono(*pair) if isinstance(ctx, S.Seq) else self.choice_mono(*pair)

    def choice_incl(self, src, tgt) -> str:
        """R(src, tgt) when every branch of ``src`` is a branch of ``tgt``."""
        src, tgt = _prog(src), _prog(tgt)
        if src == tgt:
            return self.refl(src)
        if isinstance(src, S.Choice) and not self._is_branch(src, tgt):
            l = self.choice_incl(src.left, tgt)
            r = self.choice_incl(src.right, tgt)
            ax = self.inst("cup_l", ("a", src.left), ("b", src.right), ("c", tgt))
            return self.by_prop(R(src, tgt), ax, l, r)
        if isinstance(tgt, S.Choice):
            side = tgt.left if self._is_branch(src, tgt.left) else tgt.right
            inner = self.choice_incl(src, side)
            ax = self.inst("cup_r", ("a", src), ("b", tgt.left), ("c", tgt.right))
            return self.by_prop(R(src, tgt), ax, inner)
        raise ValueError(f"choice_incl: {S.pretty(src)} is not a branch of {S.pretty(tgt)}")

    def _is_branch(self, p, tgt) -> bool:
        if p == tgt:
            return True
        return isinstance(tgt, S.Choice) and (self._is_branch(p, tgt.left)
                                              or self._is_branch(p, tgt.right))

    # -------------------------------------------------------- equivalences

    def split(self, sid: str) -> Eq:
        f = self.concl(sid)
        if not (isinstance(f, S.And) and isinstance(f.left, R) and isinstance(f.right, R)):
            raise ValueError(f"split: not an equivalence: {S.pretty(f)}")
        fwd = self.by_prop(f.left, sid)
        bwd = self.by_prop(f.right, sid)
        return Eq(f.left.left, f.left.right, fwd, bwd)

    def eq_axiom(self, key: str, *rules) -> Eq:
        return self.split(self.inst(key, *rules))

    def eq_inst(self, sid: str, *rules) -> Eq:
        return self.split(self.us(sid, rules))

    def eq_refl(self, p) -> Eq:
        r = self.refl(p)
        return Eq(_prog(p), _prog(p), r, r)

    def eq_trans(self, e1: Eq, e2: Eq) -> Eq:
        return Eq(e1.lhs, e2.rhs, self.trans(e1.fwd, e2.fwd), self.trans(e2.bwd, e1.bwd))

    def eq_in(self, ctx: S.Program, path, e: Eq) -> Eq:
        new = replace_prog(ctx, path, e.rhs)
        return Eq(ctx, new, self.refine_in(ctx, path, e.fwd), self.refine_in(new, path, e.bwd))

    def join(self, e: Eq) -> str:
        """Both refinements as one conjunction, the desugared program equivalence."""
        return self.by_prop(S.And(R(e.lhs, e.rhs), R(e.rhs, e.lhs)), e.fwd, e.bwd)

    def test_eq(self, equiv: str) -> Eq:
        """From |- A <-> B get ?A equivalent to ?B."""
        a, b = self.concl(equiv).left, self.concl(equiv).right
        t1 = self.inst("?", ("p()", a), ("q()", b))
        t2 = self.inst("?", ("p()", b), ("q()", a))
        return Eq(S.Test(a), S.Test(b), self.by_prop(R(S.Test(a), S.Test(b)), t1, equiv),
                  self.by_prop(R(S.Test(b), S.Test(a)), t2, equiv))

    def test_ref(self, a, b) -> str:
        """R(?A, ?B) when A -> B is a tautology."""
        a, b = _form(a), _form(b)
        t = self.inst("?", ("p()", a), ("q()", b))
        return self.by_prop(R(S.Test(a), S.Test(b)), t)

    def box_eq(self, e: Eq, post) -> str:
        """|- [lhs]post <-> [rhs]post."""
        post = _form(post)
        l = self.inst("[<=]", ("a", e.lhs), ("b", e.rhs), ("P(||)", post))
        r = self.inst("[<=]", ("a", e.rhs), ("b", e.lhs), ("P(||)", post))
        return self.by_prop(S.Equiv(S.Box(e.lhs, post), S.Box(e.rhs, post)), l, r, e.fwd, e.bwd)

    def chain(self, start) -> "Chain":
        return Chain(self, _prog(start))

    # -------------------------------------------------------- output

    def script(self, goal) -> dict:
        goal = _text(goal)
        final = self.concl(self.steps[-1]["id"])
        if final != _form(goal):
            raise RuntimeError(f"{self.name}: derived {S.pretty(final)}, wanted {goal}")
        return {"name": self.name, "description": self.description, "goal": goal,
                "steps": list(self.steps)}


def prog_at(p: S.Program, path) -> S.Program:
    for i in path:
        p = p.body if isinstance(p, S.Loop) else (p.left, p.right)[i]
    return p


def replace_prog(p: S.Program, path, new: S.Program) -> S.Program:
    path = list(path)
    if not path:
        return new
    if isinstance(p, S.Loop):
        return S.Loop(replace_prog(p.body, path[1:], new))
    if path[0] == 0:
        return type(p)(replace_prog(p.left, path[1:], new), p.right)
    return type(p)(p.left, replace_prog(p.right, path[1:], new))


class Chain:
    """Rewrites a program step by step, accumulating an equivalence."""

    def __init__(self, b: Builder, start: S.Program):
        self.b = b
        self.eq: Eq | None = None
        self.start = start
        self.current = start

    def rw(self, e: Eq, path=()) -> "Chain":
        here = prog_at(self.current, path)
        if here != e.lhs:
            raise ValueError(f"chain: found {S.pretty(here)} at {list(path)}, "
                             f"expected {S.pretty(e.lhs)}")
        step = self.b.eq_in(self.current, path, e)
        self.eq = step if self.eq is None else self.b.eq_trans(self.eq, step)
        self.current = step.rhs
        return self

    def assoc(self, path=()) -> "Chain":
        """{a; b}; c  to  a; b; c"""
        p = prog_at(self.current, path)
        e = self.b.eq_axiom(";assoc", ("a", p.left.left), ("b", p.left.right), ("c", p.right))
        return self.rw(e, path)

    def unassoc(self, path=()) -> "Chain":
        """a; b; c  to  {a; b}; c"""
        p = prog_at(self.current, path)
        e = self.b.eq_axiom(";assoc", ("a", p.left), ("b", p.right.left), ("c", p.right.right))
        return self.rw(e.sym(), path)

    def result(self) -> Eq:
        return self.eq if self.eq is not None else self.b.eq_refl(self.start)
