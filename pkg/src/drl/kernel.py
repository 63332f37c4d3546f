"""The trusted proof kernel.

A ``Provable`` records that its conclusion follows from its premises. The only
ways to obtain one are the functions in this module: axioms, uniform
substitution, the rules MP, G and forall-generalisation, propositional
tautologies, congruence rewriting, uniform renaming, assumption and merge. Every formula entering
the kernel is desugared first, so diamonds and program equivalences never
appear inside a Provable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import axioms as A
from . import syntax as S
from .statics import ALL, EMPTY
from .usubst import ClashError, Subst, apply_formula, parse_subst


class KernelError(Exception):
    pass


class ShapeError(KernelError):
    pass


class NotTautology(KernelError):
    def __init__(self, formula: S.Formula, assignment: dict):
        self.assignment = assignment
        shown = ", ".join(f"{S.pretty(a)}={'T' if v else 'F'}" for a, v in assignment.items())
        super().__init__(f"not a tautology: {S.pretty(formula)} fails when {shown}")


class TooManyAtoms(KernelError):
    pass


class PositionMismatch(KernelError):
    pass


MAX_ATOMS = 20


class Provable:
    """Premises and conclusion of a checked inference. Immutable."""
    __slots__ = ("premises", "conclusion")

    def __init__(self, *args, **kwargs):
        raise TypeError("Provable values are produced by kernel operations only")

    def __setattr__(self, name, value):
        raise AttributeError("Provable is immutable")

    def __delattr__(self, name):
        raise AttributeError("Provable is immutable")

    def __reduce__(self):
        raise TypeError("Provable cannot be copied or pickled")

    @property
    def is_theorem(self) -> bool:
        return not self.premises

    def __eq__(self, other):
        return (isinstance(other, Provable) and self.premises == other.premises
                and self.conclusion == other.conclusion)

    def __hash__(self):
        return hash((self.premises, self.conclusion))

    def __repr__(self):
        prem = ", ".join(S.pretty(p) for p in self.premises)
        return f"Provable([{prem}] |- {S.pretty(self.conclusion)})"


def _make(premises, conclusion) -> Provable:
    pv = object.__new__(Provable)
    seen = []
    for p in premises:
        if p not in seen:
            seen.append(p)
    object.__setattr__(pv, "premises", tuple(seen))
    object.__setattr__(pv, "conclusion", conclusion)
    return pv


def _formula(f) -> S.Formula:
    if isinstance(f, str):
        f = S.parse_formula(f)
    if not isinstance(f, S.FORMULA_TYPES):
        raise ShapeError(f"expected a formula, got {f!r}")
    return S.desugar(f)


# ------------------------------------------------------------ operations

def start_axiom(key: str) -> Provable:
    return _make((), S.desugar(A.lookup(key).formula))


def apply_us(pv: Provable, s: Subst) -> Provable:
    """Uniform substitution; premise-bearing inferences are substituted with taboo ALL."""
    taboo = EMPTY if pv.is_theorem else ALL
    premises = [apply_formula(s, taboo, p) for p in pv.premises]
    return _make(premises, apply_formula(s, taboo, pv.conclusion))


def apply_rule(name: str, inputs: list, arg=None) -> Provable:
    if name == "mp":
        if len(inputs) != 2:
            raise ShapeError("mp takes two inputs")
        imp, ant = inputs
        if not isinstance(imp.conclusion, S.Imply):
            raise ShapeError(f"mp: first input is not an implication: {S.pretty(imp.conclusion)}")
        if imp.conclusion.left != ant.conclusion:
            raise ShapeError(f"mp: second input {S.pretty(ant.conclusion)} does not match "
                             f"antecedent {S.pretty(imp.conclusion.left)}")
        return _make(imp.premises + ant.premises, imp.conclusion.right)
    if name == "g":
        if len(inputs) != 1:
            raise ShapeError("g takes one input")
        prog = S.parse_program(arg) if isinstance(arg, str) else arg
        if not isinstance(prog, S.PROGRAM_TYPES):
            raise ShapeError("g needs a program argument")
        return _make(inputs[0].premises, S.Box(S.desugar(prog), inputs[0].conclusion))
    if name == "allgen":
        if len(inputs) != 1:
            raise ShapeError("allgen takes one input")
        var = S.Variable(arg) if isinstance(arg, str) else arg
        if not isinstance(var, S.Variable):
            raise ShapeError("allgen needs a variable argument")
        return _make(inputs[0].premises, S.Forall(var, inputs[0].conclusion))
    raise ShapeError(f"unknown rule {name!r}")


def _atoms(f: S.Formula, out: list):
    if isinstance(f, (S.TrueF, S.FalseF)):
        return
    if isinstance(f, S.Not):
        _atoms(f.arg, out)
    elif isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        _atoms(f.left, out)
        _atoms(f.right, out)
    elif f not in out:
        out.append(f)


def _columns(n: int) -> list:
    """Bit columns of a truth table with 2**n rows; row r gives atom i the value bit i of r."""
    rows = 1 << n
    cols = []
    for i in range(n):
        period = 1 << (i + 1)
        block = ((1 << (1 << i)) - 1) << (1 << i)
        col, width = block, period
        while width < rows:
            col |= col << width
            width *= 2
        cols.append(col)
    return cols


def _table(f: S.Formula, env: dict, full: int) -> int:
    if isinstance(f, S.TrueF):
        return full
    if isinstance(f, S.FalseF):
        return 0
    if isinstance(f, S.Not):
        return full ^ _table(f.arg, env, full)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        a, b = _table(f.left, env, full), _table(f.right, env, full)
        if isinstance(f, S.And):
            return a & b
        if isinstance(f, S.Or):
            return a | b
        if isinstance(f, S.Imply):
            return (full ^ a) | b
        return full ^ (a ^ b)
    return env[f]


def prop_taut(f) -> Provable:
    """Truth-table check treating maximal non-propositional subformulas as atoms."""
    f = _formula(f)
    atoms: list = []
    _atoms(f, atoms)
    if len(atoms) > MAX_ATOMS:
        raise TooManyAtoms(f"{len(atoms)} atoms exceed the limit of {MAX_ATOMS}")
    full = (1 << (1 << len(atoms))) - 1
    env = dict(zip(atoms, _columns(len(atoms))))
    col = _table(f, env, full)
    if col != full:
        missing = full ^ col
        row = (missing & -missing).bit_length() - 1
        raise NotTautology(f, {a: bool(row >> i & 1) for i, a in enumerate(atoms)})
    return _make((), f)


def _formula_children(f: S.Formula):
    if isinstance(f, S.Not):
        return [f.arg]
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return [f.left, f.right]
    if isinstance(f, (S.Forall, S.Exists)):
        return [f.body]
    if isinstance(f, S.Box):
        return [f.program, f.body]
    return []


def _rebuild(f: S.Formula, i: int, new: S.Formula) -> S.Formula:
    if isinstance(f, S.Not):
        return S.Not(new)
    if isinstance(f, (S.And, S.Or, S.Imply, S.Equiv)):
        return type(f)(new, f.right) if i == 0 else type(f)(f.left, new)
    if isinstance(f, (S.Forall, S.Exists)):
        return type(f)(f.var, new)
    return S.Box(f.program, new)


def subformula_at(f: S.Formula, position) -> S.Formula:
    for depth, i in enumerate(position):
        kids = _formula_children(f)
        if not isinstance(i, int) or not 0 <= i < len(kids):
            raise PositionMismatch(f"position {list(position)} leaves the formula at step {depth}")
        if isinstance(f, S.Box) and i == 0:
            raise PositionMismatch("rewriting inside programs is not supported by CE")
        f = kids[i]
    return f


def _replace_at(f: S.Formula, position, new: S.Formula) -> S.Formula:
    if not position:
        return new
    i = position[0]
    return _rebuild(f, i, _replace_at(_formula_children(f)[i], position[1:], new))


def ce_rewrite(target: Provable, equiv: Provable, position) -> Provable:
    """From |- C{phi} and |- phi <-> psi conclude |- C{psi}."""
    position = list(position)
    if not isinstance(equiv.conclusion, S.Equiv):
        raise ShapeError("ce: second input is not an equivalence")
    here = subformula_at(target.conclusion, position)
    if here != equiv.conclusion.left:
        raise PositionMismatch(f"found {S.pretty(here)} at {position}, "
                               f"expected {S.pretty(equiv.conclusion.left)}")
    return _make(target.premises + equiv.premises,
                 _replace_at(target.conclusion, position, equiv.conclusion.right))


def assume(f) -> Provable:
    """The trivial inference phi |- phi."""
    f = _formula(f)
    return _make((f,), f)


def merge(pv: Provable, lemma: Provable) -> Provable:
    """Replace the premise ``lemma.conclusion`` of ``pv`` by the premises of ``lemma``."""
    if lemma.conclusion not in pv.premises:
        raise ShapeError(f"merge: {S.pretty(lemma.conclusion)} is not a premise")
    rest = [p for p in pv.premises if p != lemma.conclusion]
    return _make(rest + list(lemma.premises), pv.conclusion)


def _swap_var(v: S.Variable, x: S.Variable, y: S.Variable) -> S.Variable:
    if v.name == x.name:
        return S.Variable(y.name, v.differential)
    if v.name == y.name:
        return S.Variable(x.name, v.differential)
    return v


def _swap(e, x, y):
    if isinstance(e, S.Var):
        return S.Var(_swap_var(e.var, x, y))
    if isinstance(e, (S.Number, S.Dot, S.TrueF, S.FalseF, S.Predicational, S.ProgConst)):
        return e
    if isinstance(e, (S.FuncApp, S.PredApp)):
        return type(e)(e.name, tuple(_swap(a, x, y) for a in e.args))
    if isinstance(e, (S.Neg, S.Differential, S.Not)):
        return type(e)(_swap(e.arg, x, y))
    if isinstance(e, S.Cmp):
        return S.Cmp(e.op, _swap(e.left, x, y), _swap(e.right, x, y))
    if isinstance(e, (S.Forall, S.Exists)):
        return type(e)(_swap_var(e.var, x, y), _swap(e.body, x, y))
    if isinstance(e, S.Box):
        return S.Box(_swap(e.program, x, y), _swap(e.body, x, y))
    if isinstance(e, S.Test):
        return S.Test(_swap(e.cond, x, y))
    if isinstance(e, S.Assign):
        return S.Assign(_swap_var(e.var, x, y), _swap(e.term, x, y))
    if isinstance(e, S.AssignAny):
        return S.AssignAny(_swap_var(e.var, x, y))
    if isinstance(e, S.ODE):
        return S.ODE(tuple((_swap_var(v, x, y), _swap(t, x, y)) for v, t in e.eqs),
                     _swap(e.domain, x, y))
    if isinstance(e, S.Loop):
        return S.Loop(_swap(e.body, x, y))
    return type(e)(_swap(e.left, x, y), _swap(e.right, x, y))


def rename(pv: Provable, x, y) -> Provable:
    """Uniform renaming: swap base variables x and y (and x', y') everywhere.

    A permutation of the state space that respects differential symbols maps
    every interpretation to another one, so validity is preserved.
    """
    x = S.Variable(x) if isinstance(x, str) else x
    y = S.Variable(y) if isinstance(y, str) else y
    if x.differential or y.differential:
        raise ShapeError("rename swaps base variables only")
    return _make([_swap(p, x, y) for p in pv.premises], _swap(pv.conclusion, x, y))


# ------------------------------------------------------------ proof scripts

@dataclass
class StepReport:
    id: str
    rule: str
    ok: bool
    provable: Optional[Provable] = None
    error: Optional[str] = None

    def to_json(self):
        out = {"id": self.id, "rule": self.rule, "ok": self.ok}
        if self.provable is not None:
            out["premises"] = [S.pretty(p) for p in self.provable.premises]
            out["conclusion"] = S.pretty(self.provable.conclusion)
        if self.error:
            out["error"] = self.error
        return out


@dataclass
class ScriptReport:
    name: str
    steps: list = field(default_factory=list)
    ok: bool = False
    error: Optional[str] = None

    @property
    def theorem(self) -> Optional[Provable]:
        return self.steps[-1].provable if self.ok and self.steps else None

    def to_json(self):
        out = {"name": self.name, "ok": self.ok, "steps": [s.to_json() for s in self.steps]}
        if self.error:
            out["error"] = self.error
        return out


def _context(*pvs: Provable) -> S.Formula:
    out = S.TRUE
    for pv in pvs:
        for f in pv.premises + (pv.conclusion,):
            out = S.And(out, f)
    return out


def _run_step(step: dict, done: dict) -> Provable:
    def ref(key):
        name = step.get(key)
        if name not in done:
            raise KernelError(f"unknown step reference {name!r}")
        return done[name]

    rule = step["rule"]
    if rule == "axiom":
        return start_axiom(step["key"])
    if rule == "us":
        pv = ref("from")
        return apply_us(pv, parse_subst(step["subst"], _context(pv)))
    if rule == "mp":
        first, second = step["from"]
        if first not in done or second not in done:
            raise KernelError(f"unknown step reference in {step['from']!r}")
        return apply_rule("mp", [done[first], done[second]])
    if rule == "g":
        return apply_rule("g", [ref("from")], step["program"])
    if rule == "allgen":
        return apply_rule("allgen", [ref("from")], step["var"])
    if rule == "prop":
        return prop_taut(step["formula"])
    if rule == "ce":
        return ce_rewrite(ref("from"), ref("equiv"), step.get("pos", []))
    if rule == "assume":
        return assume(step["formula"])
    if rule == "merge":
        return merge(ref("from"), ref("lemma"))
    if rule == "rename":
        return rename(ref("from"), step["x"], step["y"])
    raise KernelError(f"unknown rule {rule!r}")


def check_script(script: dict) -> ScriptReport:
    """Replay every step; stops at the first failing step."""
    report = ScriptReport(name=script.get("name", "<unnamed>"))
    done: dict = {}
    steps = script.get("steps", [])
    if not steps:
        report.error = "script has no steps"
        return report
    for step in steps:
        sid, rule = str(step.get("id")), str(step.get("rule"))
        if sid in done:
            report.steps.append(StepReport(sid, rule, False, error="duplicate step id"))
            report.error = f"step {sid}: duplicate step id"
            return report
        try:
            pv = _run_step(step, done)
        except (KernelError, ClashError, A.UnknownAxiom, SyntaxError, ValueError, KeyError,
                TypeError) as exc:
            msg = f"{type(exc).__name__}: {exc}"
            report.steps.append(StepReport(sid, rule, False, error=msg))
            report.error = f"step {sid}: {msg}"
            return report
        done[sid] = pv
        report.steps.append(StepReport(sid, rule, True, provable=pv))
    final = report.steps[-1].provable
    if not final.is_theorem:
        report.error = "final step still has premises"
        return report
    goal = script.get("goal")
    if goal is not None and S.desugar(S.parse_formula(goal)) != final.conclusion:
        report.error = f"final conclusion {S.pretty(final.conclusion)} differs from the goal"
        return report
    report.ok = True
    return report


def check_file(path) -> ScriptReport:
    with open(path, encoding="utf-8") as fh:
        return check_script(json.load(fh))
