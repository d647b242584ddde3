"""Rational interval arithmetic for exact constant comparison.

Everything here works over ``fractions.Fraction`` so enclosures are exact:
an ``Iv`` is a closed interval [lo, hi] guaranteed to contain the real value
it stands for.  Transcendental endpoints (exp, log, rational powers) are
computed from truncated series with explicit tail bounds, then rounded
*outward* to dyadics so denominators stay bounded by the working precision.

The ``prec`` argument is in bits: results are correct enclosures whose extra
width due to rounding is at most a few units of 2**-prec.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

Q = Fraction

_ZERO = Q(0)
_ONE = Q(1)


class Iv:
    """Closed rational interval [lo, hi]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Q, hi: Q):
        if lo > hi:
            raise ValueError("empty interval")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def point(v) -> "Iv":
        v = Q(v)
        return Iv(v, v)

    def __repr__(self):
        return f"Iv({self.lo}, {self.hi})"

    @property
    def width(self) -> Q:
        return self.hi - self.lo

    def __add__(self, other: "Iv") -> "Iv":
        return Iv(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Iv") -> "Iv":
        return Iv(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Iv":
        return Iv(-self.hi, -self.lo)

    def __mul__(self, other: "Iv") -> "Iv":
        ps = (self.lo * other.lo, self.lo * other.hi,
              self.hi * other.lo, self.hi * other.hi)
        return Iv(min(ps), max(ps))

    def scale(self, q: Q) -> "Iv":
        if q >= 0:
            return Iv(self.lo * q, self.hi * q)
        return Iv(self.hi * q, self.lo * q)

    def recip(self) -> "Iv":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return Iv(1 / self.hi, 1 / self.lo)

    def pow_int(self, n: int) -> "Iv":
        if n == 0:
            return Iv.point(1)
        if n < 0:
            return self.pow_int(-n).recip()
        if n % 2 == 0 and self.lo < 0:
            # even power of a sign-straddling interval
            m = max(-self.lo, self.hi)
            return Iv(_ZERO, m ** n)
        return Iv(min(self.lo ** n, self.hi ** n), max(self.lo ** n, self.hi ** n))

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def sign(self) -> int | None:
        """Definite sign, or None if the interval straddles zero."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def intersect(self, other: "Iv") -> "Iv":
        return Iv(max(self.lo, other.lo), min(self.hi, other.hi))


def round_out(iv: Iv, prec: int) -> Iv:
    """Round endpoints outward to denominator 2**prec."""
    scale = 1 << prec
    lo = Q((iv.lo * scale).__floor__(), scale)
    hi = Q(-((-iv.hi * scale).__floor__()), scale)
    return Iv(lo, hi)


# --- elementary point functions -------------------------------------------------
#
# Each returns an enclosure of f(r) for rational r, good to ~2**-prec.

def _exp_small(t: Q, prec: int) -> Iv:
    # Taylor at |t| <= 1/2; tail after N terms bounded by 2*|t|^(N+1)/(N+1)!
    assert abs(t) <= Q(1, 2)
    tol = Q(1, 1 << (prec + 2))
    total = _ONE
    term = _ONE
    n = 0
    while True:
        n += 1
        term *= t / n
        total += term
        tail = 2 * abs(term) * abs(t) / (n + 1)
        if tail < tol:
            break
    return Iv(total - tail, total + tail)


def exp_point(r: Q, prec: int) -> Iv:
    """Enclosure of e**r."""
    # halve the argument until it is small, then square back up
    m = 0
    t = r
    while abs(t) > Q(1, 2):
        t /= 2
        m += 1
    iv = _exp_small(t, prec + 2 * m + 4)
    for _ in range(m):
        iv = iv * iv
    return round_out(iv, prec)


def _atanh_small(z: Q, prec: int) -> Iv:
    # atanh series for |z| <= 1/2; tail geometric
    assert abs(z) < _ONE
    tol = Q(1, 1 << (prec + 2))
    z2 = z * z
    total = z
    term = z
    k = 0
    while True:
        k += 1
        term *= z2
        piece = term / (2 * k + 1)
        total += piece
        tail = abs(term) * z2 / ((2 * k + 3) * (1 - z2))
        if tail < tol:
            break
    return Iv(total - tail, total + tail)


def _log2(prec: int) -> Iv:
    return _atanh_small(Q(1, 3), prec).scale(Q(2))


def log_point(y: Q, prec: int) -> Iv:
    """Enclosure of log(y) for rational y > 0."""
    if y <= 0:
        raise ValueError("log of a non-positive rational")
    # scale into [2/3, 4/3] by powers of two
    k = 0
    while y > Q(4, 3):
        y /= 2
        k += 1
    while y < Q(2, 3):
        y *= 2
        k -= 1
    z = (y - 1) / (y + 1)           # |z| <= 1/5
    iv = _atanh_small(z, prec + 4).scale(Q(2))
    if k:
        iv = iv + _log2(prec + 4).scale(Q(k))
    return round_out(iv, prec)


def exp_iv(x: Iv, prec: int) -> Iv:
    lo = exp_point(x.lo, prec)
    hi = exp_point(x.hi, prec)
    return Iv(lo.lo, hi.hi)


def log_iv(x: Iv, prec: int) -> Iv:
    if x.lo <= 0:
        raise ValueError("log of interval reaching 0")
    lo = log_point(x.lo, prec)
    hi = log_point(x.hi, prec)
    return Iv(lo.lo, hi.hi)


def pow_iv(base: Iv, expo: Iv, prec: int) -> Iv:
    """base**expo for base > 0, via exp(expo * log base)."""
    if expo.lo == expo.hi and expo.lo.denominator == 1:
        return round_out(base.pow_int(int(expo.lo)), prec)
    return round_out(exp_iv(expo * log_iv(base, prec + 8), prec + 4), prec)


def refine(make: Callable[[int], Iv], start: int, cap: int):
    """Yield enclosures at doubling precision until ``cap`` bits."""
    p = start
    while True:
        yield make(p)
        if p >= cap:
            return
        p = min(2 * p, cap)
