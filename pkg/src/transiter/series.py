"""Truncated grid-based transseries arithmetic with explicit O-bounds.

A ``Transseries`` is a finite, strictly descending list of
(monomial, coefficient) terms plus an optional O-bound monomial: every
discarded term is asymptotically at or below the bound.  All operations are
exact on the terms they keep; O-bound propagation is conservative (it may
over-truncate, it never claims false precision).

Construction always normalizes: like terms merge, zero coefficients drop,
terms at or below the bound are absorbed, and the session cut (when set)
truncates, raising the bound when it actually removed something.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from .context import Context
from .errors import (
    ConstantNotRepresentable,
    NegativeBase,
    NonConstantLeadingCoefficient,
    NoProgress,
    NotPurelyLarge,
    SignUndecidable,
    ZeroSeries,
)
from .exactnum import (
    Coefficient,
    ExponentScalar,
    coefficient_pow,
)
from .monomial import (
    Monomial,
    UNIT_MON,
    inv_monomial,
    mon_log,
    mon_pow_rational,
    mul_monomial,
)

Q = Fraction

Term = tuple[Monomial, Coefficient]


class Transseries:
    __slots__ = ("ctx", "terms", "obound")

    def __init__(self, ctx: Context, terms: tuple[Term, ...],
                 obound: Optional[Monomial]):
        self.ctx = ctx
        self.terms = terms
        self.obound = obound

    # -- construction -----------------------------------------------------------

    @staticmethod
    def make(ctx: Context, terms: Iterable[Term],
             obound: Optional[Monomial] = None) -> "Transseries":
        merged: dict[Monomial, Coefficient] = {}
        for m, c in terms:
            if not isinstance(c, Coefficient):
                c = Coefficient.rational(c)
            if c.is_zero():
                continue
            tot = merged.get(m)
            tot = c if tot is None else tot + c
            if tot.is_zero():
                merged.pop(m, None)
            else:
                merged[m] = tot
        keep: dict[Monomial, Coefficient] = {}
        cut = ctx.cut
        cut_hit = False
        for m, c in merged.items():
            if obound is not None and ctx.cmp(m, obound) <= 0:
                continue
            if cut is not None and cut.drops(m):
                cut_hit = True
                continue
            keep[m] = c
        if cut_hit and cut is not None:
            cm = cut.obound()
            if cm is not None and (obound is None or ctx.cmp(cm, obound) > 0):
                obound = cm
        order = sorted(keep, key=_DescKey(ctx), reverse=True)
        return Transseries(ctx, tuple((m, keep[m]) for m in order), obound)

    def with_obound(self, obound: Optional[Monomial]) -> "Transseries":
        return Transseries.make(self.ctx, self.terms, obound)

    # -- inspection ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def dominant(self) -> Term:
        if not self.terms:
            raise ZeroSeries("zero series has no dominant term")
        return self.terms[0]

    def mag(self) -> Monomial:
        return self.dominant()[0]

    def coefficient(self, m: Monomial) -> Coefficient:
        for mm, c in self.terms:
            if mm == m:
                return c
        return Coefficient.zero()

    def support(self) -> list[Monomial]:
        return [m for m, _ in self.terms]

    def constant_term(self) -> Coefficient:
        return self.coefficient(UNIT_MON)

    def split(self) -> tuple["Transseries", Coefficient, "Transseries"]:
        """(purely large part, constant coefficient, small part)."""
        ctx = self.ctx
        large, small = [], []
        const = Coefficient.zero()
        for m, c in self.terms:
            s = ctx.cmp(m, UNIT_MON)
            if s > 0:
                large.append((m, c))
            elif s == 0:
                const = c
            else:
                small.append((m, c))
        return (Transseries(ctx, tuple(large), None),
                const,
                Transseries(ctx, tuple(small), self.obound))

    def is_small(self) -> bool:
        return all(self.ctx.cmp(m, UNIT_MON) < 0 for m, _ in self.terms)

    def is_purely_large(self) -> bool:
        return all(self.ctx.cmp(m, UNIT_MON) > 0 for m, _ in self.terms)

    def is_large_positive(self) -> bool:
        """mag > 1 with a positive leading constant (SignUndecidable if the
        leading coefficient carries parameters)."""
        if not self.terms:
            return False
        m, c = self.terms[0]
        if self.ctx.cmp(m, UNIT_MON) <= 0:
            return False
        return c.sign(self.ctx.precision) > 0

    def compare_asymptotic(self, other: "Transseries") -> int:
        if not self.terms or not other.terms:
            raise ZeroSeries("compare_asymptotic needs nonzero series")
        return self.ctx.cmp(self.mag(), other.mag())

    # -- ring operations ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Transseries):
            return other
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.ctx.constant(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        ob = _max_obound(self.ctx, self.obound, other.obound)
        return Transseries.make(self.ctx, self.terms + other.terms, ob)

    __radd__ = __add__

    def __neg__(self):
        return Transseries(self.ctx,
                           tuple((m, -c) for m, c in self.terms), self.obound)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scalar_mul(self, c) -> "Transseries":
        if not isinstance(c, Coefficient):
            c = Coefficient.rational(c)
        return Transseries.make(
            self.ctx, tuple((m, cc * c) for m, cc in self.terms), self.obound)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scalar_mul(other)
        if not isinstance(other, Transseries):
            return NotImplemented
        ctx = self.ctx
        out = []
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                out.append((mul_monomial(m1, m2), c1 * c2))
        ob = None
        candidates = []
        if self.obound is not None and other.terms:
            candidates.append(mul_monomial(self.obound, other.mag()))
        if other.obound is not None and self.terms:
            candidates.append(mul_monomial(other.obound, self.mag()))
        if self.obound is not None and other.obound is not None:
            candidates.append(mul_monomial(self.obound, other.obound))
        for cand in candidates:
            if ob is None or ctx.cmp(cand, ob) > 0:
                ob = cand
        return Transseries.make(ctx, out, ob)

    __rmul__ = __mul__

    def __pow__(self, a):
        if isinstance(a, int):
            if a >= 0:
                out = self.ctx.one()
                for _ in range(a):
                    out = out * self
                return out
            return invert_unit(self ** (-a))
        return pow_real(self, a)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * invert_unit(other)

    def __rtruediv__(self, other):
        num = self._coerce(other)
        return num * invert_unit(self)

    def __call__(self, arg: "Transseries") -> "Transseries":
        from .compose import compose
        return compose(self, arg)

    # -- calculus / composition conveniences ---------------------------------------

    def derive(self):
        from .calculus import derive
        return derive(self)

    def exp(self):
        from .calculus import exp_series
        return exp_series(self)

    def log(self):
        from .calculus import log_series
        return log_series(self)

    def integrate(self):
        from .calculus import integrate
        return integrate(self)

    # -- equality ------------------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            other = self.ctx.constant(other)
        if not isinstance(other, Transseries):
            return NotImplemented
        return self.terms == other.terms and self.obound == other.obound

    def same_terms(self, other: "Transseries") -> bool:
        return self.terms == other.terms

    __hash__ = None

    def __repr__(self):
        from .printer import format_series
        return format_series(self)


def _max_obound(ctx, a: Optional[Monomial], b: Optional[Monomial]):
    if a is None:
        return b
    if b is None:
        return a
    return a if ctx.cmp(a, b) >= 0 else b


class _DescKey:
    def __init__(self, ctx):
        self.ctx = ctx

    def __call__(self, m):
        return _MonWrap(self.ctx, m)


class _MonWrap:
    __slots__ = ("ctx", "m")

    def __init__(self, ctx, m):
        self.ctx, self.m = ctx, m

    def __lt__(self, other):
        return self.ctx.cmp(self.m, other.m) < 0


# ---------------------------------------------------------------------------
# unit inversion, powers, truncation
# ---------------------------------------------------------------------------

def _lead_unit_split(A: Transseries) -> tuple[Coefficient, Monomial, Transseries]:
    """A = c*m*(1+u): returns (c, m, u) with u small."""
    m0, c0 = A.dominant()
    rest = Transseries(A.ctx, A.terms[1:], A.obound)
    im = inv_monomial(m0)
    ic = c0.inverse()
    u = Transseries.make(
        A.ctx, tuple((mul_monomial(m, im), c * ic) for m, c in rest.terms),
        mul_monomial(rest.obound, im) if rest.obound is not None else None)
    return c0, m0, u


def invert_unit(A: Transseries) -> Transseries:
    """1/A for A = c*m*(1+u) with invertible leading coefficient.

    Computed as c^-1 m^-1 sum (-u)^n, running the geometric series in final
    coordinates so the session cut truncates correctly.
    """
    if not A.terms:
        raise ZeroSeries("cannot invert the zero series")
    ctx = A.ctx
    c0, m0, u = _lead_unit_split(A)
    base = ctx.monomial_series(inv_monomial(m0), c0.inverse())
    if u.is_zero():
        if u.obound is not None:
            return base + ctx.zero(mul_monomial(inv_monomial(m0), u.obound))
        return base
    acc = base
    term = base
    for _ in range(ctx.max_rounds):
        term = term * (-u)
        if term.is_zero():
            # an empty term still carries the truncation bound it hit
            return acc + term
        acc = acc + term
    raise NoProgress("geometric expansion did not reach the cut; "
                     "is a session cut configured?")


def pow_real(A: Transseries, a) -> Transseries:
    """A**a for exact scalar a; needs a positive constant leading coefficient.

    Binomial series around the dominant term, with the running coefficient
    kept exact through the recurrence binom(a,n+1) = binom(a,n)(a-n)/(n+1).
    """
    ctx = A.ctx
    if not A.terms:
        raise ZeroSeries("0**a")
    aes = ExponentScalar.of(a)
    c0, m0, u = _lead_unit_split(A)
    if c0.has_params():
        raise NonConstantLeadingCoefficient(
            f"leading coefficient {c0!r} carries parameters")
    lead = coefficient_pow(c0, aes)   # NegativeBase when c0 <= 0
    pm, pc = monomial_power(ctx, m0, aes)
    base = ctx.monomial_series(pm, pc * lead)
    if u.is_zero():
        if u.obound is not None:
            return base + ctx.zero(mul_monomial(pm, u.obound))
        return base
    acc = base
    term = base
    n = 0
    for _ in range(ctx.max_rounds):
        step = Coefficient.from_exponent_scalar(
            (aes - ExponentScalar.of(n)).scale(Q(1, n + 1)))
        term = (term * u).scalar_mul(step)
        n += 1
        if term.is_zero():
            return acc + term
        acc = acc + term
    raise NoProgress("binomial expansion did not reach the cut")


def monomial_power(ctx: Context, m: Monomial, a) -> tuple[Monomial, Coefficient]:
    """m**a.  Rational a scales the exponent vector; an irrational exact
    scalar re-interns each exponent atom with the scaled coefficient."""
    aes = ExponentScalar.of(a)
    if aes.is_rational():
        return mon_pow_rational(m, aes.as_fraction()), Coefficient.one()
    logpart = tuple((d, es * aes) for d, es in m.logpart)
    expvec: dict[int, Q] = {}
    reg = ctx.registry
    for gid, q in m.exppart:
        gen = reg[gid]
        for coord, rat in aes.coords.items():
            if coord is None:
                expvec[gid] = expvec.get(gid, Q(0)) + q * rat
            else:
                scaled = gen.coeff * Coefficient.from_exponent_scalar(
                    ExponentScalar.of(coord))
                gid2, mult = reg.intern_atom(scaled, gen.monomial)
                expvec[gid2] = expvec.get(gid2, Q(0)) + q * rat * mult
    mon = Monomial(tuple(sorted((d, es) for d, es in logpart if not es.is_zero())),
                   tuple(sorted((g, q) for g, q in expvec.items() if q)))
    return mon, Coefficient.one()


def truncate_to(A: Transseries, cut_mon: Monomial) -> Transseries:
    """Drop terms at or below cut_mon and record the bound."""
    ctx = A.ctx
    keep = tuple((m, c) for m, c in A.terms if ctx.cmp(m, cut_mon) > 0)
    ob = _max_obound(ctx, A.obound, cut_mon)
    return Transseries(ctx, keep, ob)


# ---------------------------------------------------------------------------
# exponential interning
# ---------------------------------------------------------------------------

def intern_exponential(L: Transseries) -> tuple[Monomial, Coefficient]:
    """Intern e**(-L) for purely large L (constant terms allowed: they split
    into the returned coefficient factor).

    Terms  c * log^[d](x)  with d >= 1 and exact-scalar c become log-power
    exponents at depth d-1 (e**(-c log^[d] x) = (log^[d-1] x)**(-c)); every
    other term must be purely large and becomes a generator atom.
    """
    ctx = L.ctx
    coeff_factor = Coefficient.one()
    logpart: dict[int, ExponentScalar] = {}
    expvec: dict[int, Q] = {}
    for m, c in L.terms:
        s = ctx.cmp(m, UNIT_MON)
        if s < 0:
            raise NotPurelyLarge(
                f"exponent series has small term at {m!r}")
        if s == 0:
            coeff_factor = coeff_factor * (-c).exp()
            continue
        d = _single_log_atom(m)
        if d is not None:
            try:
                ces = c.as_exponent_scalar()
            except ConstantNotRepresentable:
                ces = None
            if ces is not None and d >= 1:
                tot = logpart.get(d - 1, ExponentScalar.of(0)) + (-ces)
                if tot.is_zero():
                    logpart.pop(d - 1, None)
                else:
                    logpart[d - 1] = tot
                continue
        if c.has_params():
            raise NonConstantLeadingCoefficient(
                f"parameter coefficient {c!r} inside an exponent")
        gid, mult = ctx.registry.intern_atom(c, m)
        q = expvec.get(gid, Q(0)) + mult
        if q:
            expvec[gid] = q
        else:
            expvec.pop(gid, None)
    if L.obound is not None and ctx.cmp(L.obound, UNIT_MON) >= 0:
        raise NotPurelyLarge("exponent series O-bound is not small; the "
                             "exponential part would be unresolved")
    mon = Monomial(tuple(sorted(logpart.items())),
                   tuple(sorted(expvec.items())))
    return mon, coeff_factor


def _single_log_atom(m: Monomial) -> Optional[int]:
    """Depth d when m is exactly log^[d](x) to the first power, else None."""
    if m.exppart or len(m.logpart) != 1:
        return None
    d, es = m.logpart[0]
    if es == ExponentScalar.of(1):
        return d
    return None


def exponent_series(ctx: Context, m: Monomial) -> Transseries:
    """The purely large L with exponential factor e**(-L) of m (log part
    excluded).  Inverse of the interning decomposition."""
    reg = ctx.registry
    terms = []
    for gid, q in m.exppart:
        gen = reg[gid]
        terms.append((gen.monomial, gen.coeff.scale(q)))
    return Transseries.make(ctx, terms)


def log_monomial(ctx: Context, m: Monomial) -> Transseries:
    """log of a monomial as a series: log-part atoms deepen by one level,
    the exponential part contributes -L."""
    terms = []
    for d, es in m.logpart:
        ctx.check_depth(d + 1)
        terms.append((mon_log(d + 1), Coefficient.from_exponent_scalar(es)))
    L = exponent_series(ctx, m)
    return Transseries.make(ctx, terms) - L
