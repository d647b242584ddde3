"""The ordered group of transmonomials.

A monomial is  prod_d (log^[d] x)**a_d  *  e**(-L)  where the a_d are exact
exponent scalars and L is a purely large series.  L is not stored as a
series: it is decomposed over the session's *generator registry* into a
rational exponent vector.  A generator is an interned atom (c, m): a single
purely large term with constant coefficient c and monomial m of strictly
lower exponential height.  Two monomials are equal iff their log parts match
and their exponent vectors match, which makes grid structure (products,
rational powers, degree windows) purely combinatorial.

Asymptotic comparison is exact.  Exponential parts are compared first by
recursing on the dominant generator difference (larger L means smaller
monomial); log parts break ties lexicographically from depth 0, since any
nonzero difference at a shallower depth dominates everything deeper.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

from .errors import OrderUndecidable, SignUndecidable
from .exactnum import (
    Coefficient,
    ExponentScalar,
    ES_ZERO,
    cmp_scalar,
)

Q = Fraction


@dataclass(frozen=True)
class Monomial:
    """Canonical transmonomial: log-power part times e**(-L) by reference."""

    logpart: tuple = ()   # sorted ((depth, ExponentScalar), ...), nonzero exps
    exppart: tuple = ()   # sorted ((generator id, Q), ...), nonzero exps

    def is_unit(self) -> bool:
        return not self.logpart and not self.exppart

    def log_map(self) -> dict[int, ExponentScalar]:
        return dict(self.logpart)

    def exp_map(self) -> dict[int, Q]:
        return dict(self.exppart)

    def log_exp(self, depth: int) -> ExponentScalar:
        return dict(self.logpart).get(depth, ES_ZERO)

    def max_log_depth(self) -> int:
        return max((d for d, _ in self.logpart), default=-1)

    def __repr__(self):
        if self.is_unit():
            return "1"
        bits = []
        for d, a in self.logpart:
            base = "x" if d == 0 else "log" * d + "(x)"
            bits.append(base if a == ExponentScalar.of(1) else f"{base}^({a!r})")
        for g, q in self.exppart:
            bits.append(f"E{g}^{q}" if q != 1 else f"E{g}")
        return "*".join(bits)


UNIT_MON = Monomial()


def mon_x(exp=1) -> Monomial:
    es = ExponentScalar.of(exp)
    if es.is_zero():
        return UNIT_MON
    return Monomial(logpart=((0, es),))


def mon_log(depth: int = 1, exp=1) -> Monomial:
    es = ExponentScalar.of(exp)
    if es.is_zero():
        return UNIT_MON
    return Monomial(logpart=((depth, es),))


def _merge_logparts(a: tuple, b: tuple) -> tuple:
    m = dict(a)
    for d, es in b:
        tot = m.get(d, ES_ZERO) + es
        if tot.is_zero():
            m.pop(d, None)
        else:
            m[d] = tot
    return tuple(sorted(m.items()))


def _merge_expparts(a: tuple, b: tuple) -> tuple:
    m = dict(a)
    for g, q in b:
        tot = m.get(g, Q(0)) + q
        if tot == 0:
            m.pop(g, None)
        else:
            m[g] = tot
    return tuple(sorted(m.items()))


def mul_monomial(m1: Monomial, m2: Monomial) -> Monomial:
    """Group product: log exponents add, exponent vectors add."""
    return Monomial(_merge_logparts(m1.logpart, m2.logpart),
                    _merge_expparts(m1.exppart, m2.exppart))


def inv_monomial(m: Monomial) -> Monomial:
    return Monomial(tuple((d, -es) for d, es in m.logpart),
                    tuple((g, -q) for g, q in m.exppart))


def mon_pow_rational(m: Monomial, q) -> Monomial:
    q = Q(q)
    if q == 0:
        return UNIT_MON
    return Monomial(
        tuple((d, es.scale(q)) for d, es in m.logpart),
        tuple((g, gq * q) for g, gq in m.exppart))


# ---------------------------------------------------------------------------
# generator registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    """Interned purely large atom  coeff * monomial  (coeff a signed
    constant single term; monomial of strictly lower height)."""

    coeff: Coefficient
    monomial: Monomial


class GeneratorRegistry:
    """Append-only interning table for exponent atoms.

    ``intern_atom`` is linearizable: lookups read an immutable snapshot and
    insertion happens under a lock, so concurrent composition jobs can share
    one registry.
    """

    def __init__(self):
        self._entries: list[Generator] = []
        self._by_monomial: dict[Monomial, list[int]] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def __getitem__(self, gid: int) -> Generator:
        return self._entries[gid]

    def entries(self) -> list[Generator]:
        return list(self._entries)

    def intern_atom(self, coeff: Coefficient, monomial: Monomial) -> tuple[int, Q]:
        """Return (generator id, q) with  coeff*monomial = q * generator.

        Atoms sharing a monomial are identified when their coefficients have
        a rational ratio; otherwise they get independent grid directions.
        """
        r, cp = coeff.single_term()
        if r == 0:
            raise ValueError("zero atom")
        with self._lock:
            for gid in self._by_monomial.get(monomial, ()):
                gr, gcp = self._entries[gid].coeff.single_term()
                if gcp == cp:
                    return gid, r / gr
            gid = len(self._entries)
            for g2, _ in monomial.exppart:
                if g2 >= gid:
                    raise ValueError("registry reference cycle")
            self._entries.append(Generator(coeff, monomial))
            self._by_monomial.setdefault(monomial, []).append(gid)
            return gid, Q(1)


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def cmp_monomial(reg: GeneratorRegistry, m1: Monomial, m2: Monomial,
                 max_prec: int = 256, _cache: dict | None = None) -> int:
    """Exact asymptotic three-way comparison: -1 for m1 < m2 (m1/m2 small),
    0 for equal-magnitude (identical) monomials, +1 for m1 > m2."""
    if m1 == m2:
        return 0
    if _cache is not None:
        hit = _cache.get((m1, m2))
        if hit is not None:
            return hit
    res = _cmp_impl(reg, m1, m2, max_prec, _cache)
    if _cache is not None:
        _cache[(m1, m2)] = res
        _cache[(m2, m1)] = -res
    return res


def _cmp_impl(reg, m1, m2, max_prec, cache) -> int:
    diff = _merge_expparts(m1.exppart, tuple((g, -q) for g, q in m2.exppart))
    if diff:
        # dominant term of L1 - L2; its sign decides (bigger L, smaller mon)
        groups: dict[Monomial, list[tuple[int, Q]]] = {}
        for g, q in diff:
            groups.setdefault(reg[g].monomial, []).append((g, q))
        order = sorted(groups, key=_CmpKey(reg, max_prec, cache), reverse=True)
        for mon in order:
            total = Coefficient.zero()
            for g, q in groups[mon]:
                total = total + reg[g].coeff.scale(q)
            if total.is_zero():
                continue
            try:
                sgn = total.sign(max_prec)
            except SignUndecidable as ex:
                raise OrderUndecidable(str(ex)) from ex
            return -sgn
        # exponential parts agree in value; compare log parts
    l1, l2 = dict(m1.logpart), dict(m2.logpart)
    for d in sorted(set(l1) | set(l2)):
        c = cmp_scalar(l1.get(d, ES_ZERO), l2.get(d, ES_ZERO), max_prec)
        if c:
            return c
    return 0


class _CmpKey:
    """functools.cmp_to_key without the import noise, bound to a registry."""

    def __init__(self, reg, max_prec, cache):
        self.reg, self.max_prec, self.cache = reg, max_prec, cache

    def __call__(self, mon):
        return _Wrapped(self, mon)


class _Wrapped:
    __slots__ = ("k", "mon")

    def __init__(self, k, mon):
        self.k, self.mon = k, mon

    def __lt__(self, other):
        return cmp_monomial(self.k.reg, self.mon, other.mon,
                            self.k.max_prec, self.k.cache) < 0


def mon_height(reg: GeneratorRegistry, m: Monomial) -> int:
    """Exponential height: 0 for pure log-powers, else 1 + max atom height."""
    if not m.exppart:
        return 0
    return 1 + max(mon_height(reg, reg[g].monomial) for g, _ in m.exppart)
