"""Exact polynomial arithmetic over the rationals.

``Poly`` is a sparse multivariate polynomial keyed by monomials, where a monomial
is a sorted tuple of ``(Variable, exponent)`` pairs. The second half of the
module works on univariate coefficient lists (lowest degree first) and provides
Sturm-sequence root isolation, which the oracle uses to check evolution domains
along closed-form ODE solutions without floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

from . import syntax as S


class Unsupported(ValueError):
    """A term falls outside polynomial arithmetic (e.g. an uninterpreted symbol)."""


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for v, e in b:
        out[v] = out.get(v, 0) + e
    return tuple(sorted(out.items()))


class Poly:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Optional[Mapping] = None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c}
        self._hash = None

    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): Fraction(c)})

    @staticmethod
    def var(v: S.Variable) -> "Poly":
        return Poly({((v, 1),): Fraction(1)})

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        return f"Poly({S.pretty(self.to_term())})"

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def scale(self, c) -> "Poly":
        return Poly({m: k * c for m, k in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    @property
    def const_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def degree_in(self, v: S.Variable) -> int:
        return max((e for m in self.terms for w, e in m if w == v), default=0)

    def vars(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def diff(self, v: S.Variable) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            for i, (w, e) in enumerate(m):
                if w == v:
                    rest = m[:i] + (((w, e - 1),) if e > 1 else ()) + m[i + 1:]
                    out[rest] = out.get(rest, 0) + c * e
        return Poly(out)

    def evaluate(self, env: Callable[[S.Variable], Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            val = c
            for v, e in m:
                val *= env(v) ** e
            total += val
        return total

    def substitute(self, mapping: Mapping) -> "Poly":
        """Replace variables by polynomials; unmapped variables stay."""
        out = Poly()
        for m, c in self.terms.items():
            acc = Poly.const(c)
            for v, e in m:
                acc = acc * (mapping[v] ** e if v in mapping else Poly({((v, e),): 1}))
            out = out + acc
        return out

    def linear_parts(self):
        """``(constant, {var: coeff})`` if the degree is at most one, else ``None``."""
        if self.degree() > 1:
            return None
        coeffs = {m[0][0]: c for m, c in self.terms.items() if m}
        return self.const_value, coeffs

    def to_term(self) -> S.Term:
        if not self.terms:
            return S.Number(0)
        ordered = sorted(self.terms.items(),
                         key=lambda mc: (sum(e for _, e in mc[0]), [(str(v), e) for v, e in mc[0]]))
        out = None
        for m, c in ordered:
            factors = []
            for v, e in m:
                factors.extend([S.Var(v)] * e)
            if not factors:
                piece, neg = S.Number(abs(c)), c < 0
            else:
                if abs(c) != 1:
                    factors.insert(0, S.Number(abs(c)))
                piece = factors[0]
                for f in factors[1:]:
                    piece = S.Times(piece, f)
                neg = c < 0
            if out is None:
                out = S.Neg(piece) if neg else piece
                if neg and isinstance(piece, S.Number):
                    out = S.Number(c)
            else:
                out = S.Minus(out, piece) if neg else S.Plus(out, piece)
        return out


def differential(p: Poly) -> Poly:
    """Total differential: sum of x' * dp/dx over the free base variables of ``p``."""
    out = Poly()
    for v in sorted(p.vars()):
        if v.differential:
            raise Unsupported("differential of a term mentioning differential symbols")
        out = out + Poly.var(v.prime()) * p.diff(v)
    return out


def term_to_poly(t: S.Term,
                 func: Optional[Callable[[str, list], Poly]] = None,
                 dots: Optional[Mapping[int, Poly]] = None) -> Poly:
    """Polynomial denoted by ``t``; ``func`` interprets function symbols."""
    if isinstance(t, S.Var):
        return Poly.var(t.var)
    if isinstance(t, S.Number):
        return Poly.const(t.value)
    if isinstance(t, S.Plus):
        return term_to_poly(t.left, func, dots) + term_to_poly(t.right, func, dots)
    if isinstance(t, S.Minus):
        return term_to_poly(t.left, func, dots) - term_to_poly(t.right, func, dots)
    if isinstance(t, S.Times):
        return term_to_poly(t.left, func, dots) * term_to_poly(t.right, func, dots)
    if isinstance(t, S.Neg):
        return -term_to_poly(t.arg, func, dots)
    if isinstance(t, S.Differential):
        return differential(term_to_poly(t.arg, func, dots))
    if isinstance(t, S.FuncApp):
        if func is None:
            raise Unsupported(f"uninterpreted function symbol {t.name}")
        return func(t.name, [term_to_poly(a, func, dots) for a in t.args])
    if isinstance(t, S.Dot):
        if dots is None or t.index not in dots:
            raise Unsupported("unbound dot")
        return dots[t.index]
    raise TypeError(f"not a term: {t!r}")


# ------------------------------------------------------ univariate tools
# A univariate polynomial is a list of Fractions, lowest degree first, with
# no trailing zeros (the zero polynomial is []).

def u_trim(p: list) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def u_from_poly(p: Poly, t: S.Variable) -> list:
    out: dict = {}
    for m, c in p.terms.items():
        e = 0
        for v, k in m:
            if v != t:
                raise Unsupported("not univariate")
            e = k
        out[e] = out.get(e, 0) + c
    n = max(out, default=-1)
    return u_trim([Fraction(out.get(i, 0)) for i in range(n + 1)])


def u_eval(p: list, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def u_deriv(p: list) -> list:
    return u_trim([c * i for i, c in enumerate(p)][1:])


def u_integrate(p: list) -> list:
    return u_trim([Fraction(0)] + [c / (i + 1) for i, c in enumerate(p)])


def u_add(p: list, q: list) -> list:
    n = max(len(p), len(q))
    return u_trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def u_mul(p: list, q: list) -> list:
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return u_trim(out)


def u_divmod(p: list, q: list):
    q = u_trim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(u_trim(p))
    quot = [Fraction(0)] * max(len(r) - len(q) + 1, 0)
    while len(r) >= len(q) and r:
        k = len(r) - len(q)
        c = r[-1] / q[-1]
        quot[k] = c
        for i, b in enumerate(q):
            r[i + k] -= c * b
        r = u_trim(r)
    return u_trim(quot), r


def u_gcd(p: list, q: list) -> list:
    a, b = u_trim(p), u_trim(q)
    while b:
        a, b = b, u_divmod(a, b)[1]
    if not a:
        return []
    lead = a[-1]
    return [c / lead for c in a]


def u_squarefree(p: list) -> list:
    p = u_trim(p)
    if len(p) <= 1:
        return p
    g = u_gcd(p, u_deriv(p))
    return u_divmod(p, g)[0] if len(g) > 1 else p


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def sturm_chain(p: list) -> list:
    chain = [u_trim(p), u_deriv(p)]
    while chain[-1]:
        r = u_divmod(chain[-2], chain[-1])[1]
        if not r:
            break
        chain.append([-c for c in r])
    return [c for c in chain if c]


def _variations(chain: list, x: Fraction) -> int:
    signs = [s for s in (_sign(u_eval(c, x)) for c in chain) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _count(chain: list, a: Fraction, b: Fraction) -> int:
    """Distinct roots in the open interval (a, b); a and b must not be roots."""
    return _variations(chain, a) - _variations(chain, b)


def isolate_roots(p: list, lo: Fraction, hi: Fraction):
    """Real roots of ``p`` in [lo, hi].

    Returns ``(exact, intervals, q)``: rational roots, disjoint open isolating
    intervals (each holding exactly one irrational-or-unfound root of the
    deflated squarefree polynomial ``q``), and ``q`` itself.
    """
    q = u_squarefree(p)
    exact: list = []
    if len(q) <= 1:
        return exact, [], q

    def deflate(q, r):
        exact.append(r)
        return u_divmod(q, [-r, Fraction(1)])[0]

    for end in (lo, hi):
        if len(q) > 1 and u_eval(q, end) == 0:
            q = deflate(q, end)
    intervals = []
    stack = [(lo, hi)] if lo < hi else []
    chain = sturm_chain(q) if len(q) > 1 else []
    while stack and len(q) > 1:
        a, b = stack.pop()
        n = _count(chain, a, b)
        if n == 0:
            continue
        if n == 1:
            intervals.append((a, b))
            continue
        m = (a + b) / 2
        if u_eval(q, m) == 0:
            q = deflate(q, m)
            chain = sturm_chain(q) if len(q) > 1 else []
        stack.append((a, m))
        stack.append((m, b))
    # Intervals found before a later deflation may no longer contain a root.
    if len(q) > 1:
        chain = sturm_chain(q)
        intervals = [(a, b) for a, b in intervals if _count(chain, a, b) == 1]
    else:
        intervals = []
    return sorted(exact), sorted(intervals), q


def _shrink(chain: list, q: list, a: Fraction, b: Fraction):
    """Bisect an isolating interval once; may return an exact rational root."""
    m = (a + b) / 2
    if u_eval(q, m) == 0:
        return m
    return (a, m) if _count(chain, a, m) == 1 else (m, b)


def forall_on_interval(polys: list, pred: Callable[[tuple], bool],
                       lo: Fraction, hi: Fraction) -> bool:
    """Exactly decide whether ``pred(signs)`` holds for every tau in [lo, hi].

    ``signs`` is the tuple of signs of ``polys`` at tau. Truth can only change at
    roots of the product of the polynomials, so it suffices to test every root
    (signs at irrational roots are computed symbolically) and one point inside
    every gap between consecutive roots.
    """
    polys = [u_trim(p) for p in polys]
    if lo > hi:
        return True

    def at(x: Fraction) -> bool:
        return pred(tuple(_sign(u_eval(p, x)) for p in polys))

    product = [Fraction(1)]
    for p in polys:
        if len(p) > 1:
            product = u_mul(product, p)
    exact, intervals, q = isolate_roots(product, lo, hi)
    chain = sturm_chain(q) if len(q) > 1 else []
    criticals = set(exact) | {lo, hi}
    refined = []
    for a, b in intervals:
        # shrink until both endpoints differ from the original ones so that they
        # sit strictly between this root and any neighbouring critical point
        # and no rational critical point lies in the closed interval
        a0, b0 = a, b
        fixed = sorted(criticals)
        while True:
            if a != a0 and b != b0 and not any(a <= r <= b for r in fixed):
                break
            nxt = _shrink(chain, q, a, b)
            if isinstance(nxt, Fraction):
                criticals.add(nxt)
                a = None
                break
            a, b = nxt
        if a is not None:
            refined.append((a, b))
    samples = set(criticals)
    for a, b in refined:
        samples.update((a, b))
    ordered = sorted(samples)
    samples.update((x + y) / 2 for x, y in zip(ordered, ordered[1:]))
    if not all(at(x) for x in samples):
        return False
    for a, b in refined:
        signs = []
        for p in polys:
            if len(p) <= 1:
                signs.append(_sign(p[0]) if p else 0)
                continue
            g = u_squarefree(u_gcd(p, q))
            if len(g) > 1 and _count(sturm_chain(g), a, b) > 0:
                signs.append(0)
            else:
                signs.append(_sign(u_eval(p, (a + b) / 2)))
        if not pred(tuple(signs)):
            return False
    return True


def rational_roots_hint(polys: Iterable[list], lo: Fraction, hi: Fraction) -> list:
    """Exact rational roots and interval midpoints of ``polys`` in [lo, hi]."""
    out = set()
    for p in polys:
        p = u_trim(p)
        if len(p) <= 1:
            continue
        exact, intervals, _ = isolate_roots(p, lo, hi)
        out.update(exact)
        out.update((a + b) / 2 for a, b in intervals)
    return sorted(out)


def _divisors(n: int, limit: int):
    n = abs(n)
    if n > limit:
        return None
    small = [d for d in range(1, int(n ** 0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def rational_roots(p: list, limit: int = 10 ** 6):
    """All rational roots of ``p`` by the rational root theorem.

    Returns ``(roots, rest)`` where ``rest`` is ``p`` with those roots divided
    out, or None when the coefficients are too large to enumerate divisors.
    """
    from math import lcm
    p = u_trim(p)
    roots: list = []
    if len(p) <= 1:
        return roots, p
    while len(p) > 1 and p[0] == 0:
        roots.append(Fraction(0))
        p = p[1:]
    if len(p) <= 1:
        return sorted(set(roots)), p
    den = lcm(*(c.denominator for c in p))
    ints = [int(c * den) for c in p]
    cands_num = _divisors(ints[0], limit)
    cands_den = _divisors(ints[-1], limit)
    if cands_num is None or cands_den is None:
        return None
    for a in cands_num:
        for b in cands_den:
            for r in (Fraction(a, b), Fraction(-a, b)):
                while len(p) > 1 and u_eval(p, r) == 0:
                    roots.append(r)
                    p = u_divmod(p, [-r, Fraction(1)])[0]
    return sorted(set(roots)), p


def _root_bound(p: list) -> Fraction:
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


class Cut:
    """A point on the time axis: rational, or the unique root of ``q`` in (a, b)."""
    __slots__ = ("a", "b", "q", "chain")

    def __init__(self, a, b=None, q=None, chain=None):
        self.a, self.b, self.q, self.chain = a, (a if b is None else b), q, chain

    @property
    def rational(self) -> bool:
        return self.a == self.b

    def below(self, width: Fraction) -> Fraction:
        """A rational at most ``width`` below an irrational cut."""
        while self.b - self.a > width:
            nxt = _shrink(self.chain, self.q, self.a, self.b)
            if isinstance(nxt, Fraction):  # pragma: no cover
                self.a = self.b = nxt
                break
            self.a, self.b = nxt
        return self.a

    def compare(self, r: Fraction) -> int:
        """Sign of ``r - self``."""
        if self.rational:
            return _sign(r - self.a)
        if self.a < r < self.b and u_eval(self.q, r) == 0:
            self.a = self.b = r
            return 0
        while self.a < r < self.b:
            nxt = _shrink(self.chain, self.q, self.a, self.b)
            if isinstance(nxt, Fraction):  # pragma: no cover - isolation keeps q irreducible here
                self.a = self.b = nxt
                return _sign(r - nxt)
            self.a, self.b = nxt
        return -1 if r <= self.a else 1


def cells(polys: list, lo: Fraction) -> list:
    """Consecutive cells covering [lo, infinity) with exact sign vectors.

    Returns a list of ``(kind, where, signs)``; kind is ``"point"`` (where is a
    Cut) or ``"gap"`` (where is the pair of neighbouring Cuts, the last gap has
    None on the right). Points and gaps alternate, starting with the point lo.
    """
    polys = [u_trim(p) for p in polys]
    product = [Fraction(1)]
    for p in polys:
        if len(p) > 1:
            product = u_mul(product, p)
    hi = max(lo, 0) + _root_bound(product) + 1 if len(product) > 1 else lo + 1
    found = rational_roots(product) if len(product) > 1 else ([], product)
    rational = []
    if found is not None:
        rational, product = found
    exact, intervals, q = isolate_roots(product, lo, hi)
    chain = sturm_chain(q) if len(q) > 1 else []
    points = set(exact) | {r for r in rational if r >= lo} | {lo}
    refined = []
    fixed = sorted(points)
    for a, b in intervals:
        a0, b0 = a, b
        # shrink until the interval is strictly inside and clear of every
        # rational point, so gaps can be sampled between neighbouring cuts
        while a is not None and (a == a0 or b == b0 or a < lo
                                 or any(a <= r <= b for r in fixed)):
            nxt = _shrink(chain, q, a, b)
            if isinstance(nxt, Fraction):
                points.add(nxt)
                a = None
            else:
                a, b = nxt
        if a is not None:
            refined.append((a, b))

    def at(x):
        return tuple(_sign(u_eval(p, x)) if p else 0 for p in polys)

    def at_root(a, b):
        out = []
        for p in polys:
            if len(p) <= 1:
                out.append(_sign(p[0]) if p else 0)
                continue
            g = u_squarefree(u_gcd(p, q))
            zero = len(g) > 1 and _count(sturm_chain(g), a, b) > 0
            out.append(0 if zero else _sign(u_eval(p, (a + b) / 2)))
        return tuple(out)

    cuts = [Cut(x) for x in points if x >= lo] + [Cut(a, b, q, chain) for a, b in refined]
    cuts.sort(key=lambda c: (c.a + c.b) / 2)
    out = []
    for i, c in enumerate(cuts):
        out.append(("point", c, at(c.a) if c.rational else at_root(c.a, c.b)))
        nxt = cuts[i + 1] if i + 1 < len(cuts) else None
        right = nxt.a if nxt is not None else c.b + 2
        out.append(("gap", (c, nxt), at((c.b + right) / 2)))
    return out


def sign_cells(polys: list, lo: Fraction) -> list:
    """Sign vectors of ``polys`` on consecutive cells covering [lo, infinity)."""
    return [signs for _, _, signs in cells(polys, lo)]
