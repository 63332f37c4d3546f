"""Concrete axioms of differential refinement logic.

Every axiom is a single formula over reserved symbols: program constants
a, b, c, d; function symbols f, g (and a, b in DG); predicates p, q, r;
predicationals P, Q. Instances are obtained by uniform substitution only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import syntax as S


class UnknownAxiom(KeyError):
    pass


@dataclass(frozen=True)
class AxiomEntry:
    key: str
    text: str
    group: str
    aliases: tuple = ()

    @property
    def formula(self) -> S.Formula:
        return _parsed(self.text)


@lru_cache(maxsize=None)
def _parsed(text: str) -> S.Formula:
    return S.parse_formula(text)


_REFINEMENT = [
    ("<=t", "{a} refines {c} & {c} refines {b} -> {a} refines {b}", ("≤t",)),
    ("equiv", "{a} equiv {b} <-> {a} refines {b} & {b} refines {a}", ("≡",)),
    ("[<=]", "{a} refines {b} -> [b]P(||) -> [a]P(||)", ("[≤]",)),
    ("?", "{?p()} refines {?q()} <-> (p() -> q())", ()),
    (":=", "{x:=f()} equiv {x:=*; ?x=f()}", ()),
    ("?det", "{?p(); a} refines {?p(); b} <-> [?p()]({a} refines {b})", ()),
    (":=det", "{x:=f(); a} refines {x:=f(); b} <-> [x:=f()]({a} refines {b})", ()),
    ("stutter", "{x:=x} equiv {?true}", ()),
    ("cup_l", "{a ++ b} refines {c} <-> {a} refines {c} & {b} refines {c}", ("∪l",)),
    ("cup_r", "{a} refines {b} | {a} refines {c} -> {a} refines {b ++ c}", ("∪r",)),
    (";", "{a} refines {c} & [a]({b} refines {d}) -> {a; b} refines {c; d}", ()),
    ("loop_l", "[a*]({a; b} refines {b}) -> {a*; b} refines {b}", ("loop-l",)),
    ("loop_r", "{a; b} refines {a} -> {a; b*} refines {a}", ("loop-r",)),
    ("unloop", "[a*]({a} refines {b}) -> {a*} refines {b*}", ()),
    (":*merge", "{x:=*; ?p(x); x:=*} equiv {x:=*; ?\\exists y p(y)}", ()),
    (":=*merge", "{x:=*; ?p(x); x:=f(x)} equiv {x:=*; ?\\exists y (p(y) & x=f(y))}", ()),
    ("ode", "{x'=f(x) & p(x)} refines {x'=g(x) & q(x)} <-> [{x'=f(x) & p(x)}](x'=g(x) & q(x))",
     ("ODE",)),
    ("DW=", "{x'=f(x) & p(x)} equiv {?p(x); {x'=f(x) & p(x)}; ?p(x)}", ("DW≡",)),
    ("DE=", "{x'=f(x) & p(x)} equiv {{x'=f(x) & p(x)}; x':=f(x)}", ("DE≡",)),
    ("DX", "{x':=f(x); ?p(x)} refines {x'=f(x) & p(x)}", ()),
    ("ODEidemp", "{{x'=f(x) & p(x)}; {x'=f(x) & p(x)}} equiv {x'=f(x) & p(x)}", ()),
]

_DL = [
    ("[?]", "[?q()]p() <-> (q() -> p())", ()),
    ("[:=]", "[x:=f()]p(x) <-> p(f())", ()),
    ("[:*]", "[x:=*]p(x) <-> \\forall x p(x)", ()),
    ("[++]", "[a ++ b]P(||) <-> [a]P(||) & [b]P(||)", ("[∪]",)),
    ("[;]", "[a; b]P(||) <-> [a][b]P(||)", ()),
    ("K", "[a](P(||) -> Q(||)) -> [a]P(||) -> [a]Q(||)", ()),
    ("I", "[a*]P(||) <-> P(||) & [a*](P(||) -> [a]P(||))", ()),
    ("V", "p() -> [a]p()", ()),
    ("DI=", "(q(x) -> [{x'=f(x) & q(x)}](g(x))'=0) -> "
            "([{x'=f(x) & q(x)}]g(x)=0 <-> [?q(x)]g(x)=0)", ()),
    ("DI>=", "(q(x) -> [{x'=f(x) & q(x)}](g(x))'>=0) -> "
             "([{x'=f(x) & q(x)}]g(x)>=0 <-> [?q(x)]g(x)>=0)", ("DI≥",)),
    ("DG", "[{x'=f(x) & q(x)}]p(x) <-> \\exists y [{x'=f(x), y'=a(x)*y+b(x) & q(x)}]p(x)", ()),
    ("DS", "[{x'=f() & q(x)}]p(x) <-> \\forall t (t>=0 -> "
           "(\\forall s (0<=s & s<=t -> q(x+f()*s)) -> [x:=x+f()*t]p(x)))", ()),
    ("+'", "(f(x)+g(x))'=(f(x))'+(g(x))'", ()),
    ("-'", "(f(x)-g(x))'=(f(x))'-(g(x))'", ()),
    ("*'", "(f(x)*g(x))'=(f(x))'*g(x)+f(x)*(g(x))'", ("·'",)),
    ("c'", "(f())'=0", ()),
    ("x'", "(x)'=x'", ()),
]

_KAT = [
    ("<=refl", "{a} refines {a}", ("≤refl",)),
    ("cup_id", "{a ++ ?false} equiv {a}", ("∪id",)),
    (";assoc", "{{a; b}; c} equiv {a; b; c}", ()),
    (";id_l", "{?true; a} equiv {a}", (";id-l",)),
    (";id_r", "{a; ?true} equiv {a}", (";id-r",)),
    ("dist_l", "{a; {b ++ c}} equiv {a; b ++ a; c}", ("dist-l",)),
    ("annih_l", "{?false; a} equiv {?false}", ("annih-l",)),
    ("annih_r", "{a; ?false} equiv {?false}", ("annih-r",)),
    ("unfold_l", "{?true ++ a; a*} equiv {a*}", ("unfold-l",)),
    ("unfold_r", "{?true ++ a*; a} equiv {a*}", ("unfold-r",)),
]

_SKAT = [
    (":*comm", "{x:=*; y:=*} equiv {y:=*; x:=*}", ()),
    (":*test", "{x:=*; ?p()} equiv {?p(); x:=*}", ()),
]

# First-order facts used by derivations that reason under quantifiers. They are
# kernel axioms like the rest, but kept apart from the modal axiom base.
_FIRST_ORDER = [
    ("ex_onepoint", "\\exists y (y=f() & p(y)) <-> p(f())", ()),
    ("all_inst", "\\forall x p(x) -> p(f())", ()),
    ("ex_dual", "\\exists x p(x) <-> !\\forall x !p(x)", ()),
]


def _build(rows, group):
    return [AxiomEntry(k, t, group, al) for k, t, al in rows]


_CORE = (_build(_REFINEMENT, "refinement") + _build(_DL, "dL") + _build(_KAT, "KAT")
         + _build(_SKAT, "SKAT"))
_SUPPORT = _build(_FIRST_ORDER, "first-order")

_INDEX: dict = {}
for _e in _CORE + _SUPPORT:
    for _k in (_e.key,) + _e.aliases:
        if _k in _INDEX:
            raise RuntimeError(f"duplicate axiom key {_k}")
        _INDEX[_k] = _e


def all_axioms() -> list:
    """The modal axiom base (refinement, dL, KAT and SKAT axioms)."""
    return list(_CORE)


def support_axioms() -> list:
    return list(_SUPPORT)


def lookup(key: str) -> AxiomEntry:
    try:
        return _INDEX[key]
    except KeyError:
        raise UnknownAxiom(key) from None


@dataclass(frozen=True)
class RuleSchema:
    name: str
    premises: tuple
    conclusion: str
    argument: str


def axiomatic_rules() -> list:
    """Schematic rules; schema letters stand for whole formulas and programs."""
    return [
        RuleSchema("mp", ("p() -> q()", "p()"), "q()", "none"),
        RuleSchema("g", ("p()",), "[a]p()", "program"),
        RuleSchema("allgen", ("p(x)",), "\\forall x p(x)", "variable"),
    ]
