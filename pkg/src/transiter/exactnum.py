"""Exact scalar tower: comparable real exponents and the coefficient ring.

Three layers live here.

* **Atoms** are the named positive real constants a session computes with:
  ``EULER`` (e), ``Root(p, f)`` (the fractional prime power p**f, 0 < f < 1)
  and ``LogP(p)`` (log p).  Each knows how to enclose its value in a rational
  interval at any precision.  Rational bases and integral exponents always
  fold away, so atoms are canonical: equal structure iff equal construction.

* **ExponentScalar** is a finite Q-linear combination of 1 and atoms.  These
  are the exponents of x and of iterated logs.  They add freely; products
  are defined only when the atom pair has a declared image (prime roots with
  a common base fold, e.g. Root(2,1/2)**2 = 2).  Comparison is exact:
  structural equality decides ties, interval refinement decides strict order.

* **Coefficient** is the ring the iteration-group recursions need: finite
  sums of  rational * (constant product) * (parameter powers) * s**n *
  exp(q*s),  divided by a product of *constant* denominators (the shapes
  (e**(ab) - 1) arising in the moderate recursion).  The ring is closed
  under +, *, negation, d/ds and the definite integrals int_0^s and
  int_0^1, which is exactly what the coefficient recursions consume.

The declared atoms are assumed multiplicatively (and Q-linearly)
independent; the engine never tries to prove identities such as
e**(log 2) = 2 across distinct atoms.  That is a documented user contract.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Iterator, Optional, Union

from .errors import (
    ConstantNotRepresentable,
    ExponentProductUndefined,
    LogConstantNotDeclared,
    NegativeBase,
    NonInvertibleCoefficient,
    OrderUndecidable,
    SignUndecidable,
    UnboundParameter,
)
from .intervals import Iv, exp_iv, exp_point, log_point, pow_iv, round_out

Q = Fraction

QLike = Union[int, Fraction]

DEFAULT_PREC = 256
_START_PREC = 32


# ---------------------------------------------------------------------------
# constant atoms
# ---------------------------------------------------------------------------

def _factor_positive_int(n: int) -> dict[int, int]:
    """Prime factorization by trial division (engine constants are small)."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def factor_rational(x: Q) -> dict[int, int]:
    """Factor a positive rational into primes with signed exponents."""
    if x <= 0:
        raise NegativeBase(f"cannot factor non-positive rational {x}")
    out = _factor_positive_int(x.numerator)
    for p, e in _factor_positive_int(x.denominator).items():
        out[p] = out.get(p, 0) - e
    return {p: e for p, e in out.items() if e}


class _Atom:
    """Base for constant atoms.  Subclasses are frozen and hashable."""

    __slots__ = ()

    def skey(self) -> tuple:
        raise NotImplementedError

    def enclosure(self, prec: int) -> Iv:
        raise NotImplementedError

    def __lt__(self, other: "_Atom"):
        return self.skey() < other.skey()


class _Euler(_Atom):
    __slots__ = ()

    def skey(self):
        return (0, 0, 0, 1)

    def enclosure(self, prec):
        return _cached_enclosure(self, prec, lambda p: exp_point(Q(1), p))

    def __repr__(self):
        return "e"


EULER = _Euler()


@dataclass(frozen=True)
class Root(_Atom):
    """The constant p**f for prime p and a fraction 0 < f < 1."""

    p: int
    f: Q

    def __post_init__(self):
        if not (0 < self.f < 1):
            raise ValueError("Root exponent must lie in (0,1)")

    def skey(self):
        return (1, self.p, self.f.numerator, self.f.denominator)

    def enclosure(self, prec):
        return _cached_enclosure(
            self, prec,
            lambda pr: round_out(
                exp_iv(log_point(Q(self.p), pr + 8).scale(self.f), pr + 4), pr))

    def __repr__(self):
        return f"{self.p}^({self.f})"


@dataclass(frozen=True)
class LogP(_Atom):
    """The constant log p for prime p."""

    p: int

    def skey(self):
        return (2, self.p, 0, 1)

    def enclosure(self, prec):
        return _cached_enclosure(self, prec, lambda pr: log_point(Q(self.p), pr))

    def __repr__(self):
        return f"log{self.p}"


# Per-atom enclosure cache.  Refinements are intersected with coarser results
# so the nesting invariant (enclosure at p+1 inside enclosure at p) holds even
# if the underlying series bounds wobble.  Concurrent readers are fine; the
# lock only guards insertion.
_ENCLOSURE_CACHE: dict[tuple, Iv] = {}
_ENCLOSURE_LOCK = threading.Lock()


def _cached_enclosure(atom: _Atom, prec: int, compute) -> Iv:
    key = (atom.skey(), prec)
    hit = _ENCLOSURE_CACHE.get(key)
    if hit is not None:
        return hit
    iv = compute(prec)
    with _ENCLOSURE_LOCK:
        for (sk, p2), old in list(_ENCLOSURE_CACHE.items()):
            if sk == key[0] and p2 <= prec:
                iv = iv.intersect(old)
        _ENCLOSURE_CACHE[key] = iv
    return iv


# ---------------------------------------------------------------------------
# ExponentScalar
# ---------------------------------------------------------------------------

# coordinate key None stands for the rational unit 1
_CoordKey = Optional[_Atom]


def _coord_skey(k: _CoordKey):
    return (-1, 0, 0, 0) if k is None else k.skey()


class ExponentScalar:
    """Exact real scalar: a Q-linear combination of 1 and constant atoms."""

    __slots__ = ("coords",)

    def __init__(self, coords: dict[_CoordKey, Q]):
        self.coords = {k: q for k, q in coords.items() if q != 0}

    # -- constructors

    @staticmethod
    def of(v: "ESLike") -> "ExponentScalar":
        if isinstance(v, ExponentScalar):
            return v
        if isinstance(v, _Atom):
            return ExponentScalar({v: Q(1)})
        return ExponentScalar({None: Q(v)})

    # -- structure

    def key(self) -> tuple:
        return tuple(sorted(((_coord_skey(k), q) for k, q in self.coords.items())))

    def __eq__(self, other):
        if not isinstance(other, ExponentScalar):
            other = ExponentScalar.of(other)
        return self.coords == other.coords

    def __hash__(self):
        return hash(self.key())

    def is_zero(self) -> bool:
        return not self.coords

    def is_rational(self) -> bool:
        return all(k is None for k in self.coords)

    def as_fraction(self) -> Q:
        if not self.is_rational():
            raise ConstantNotRepresentable(f"{self} is not rational")
        return self.coords.get(None, Q(0))

    # -- arithmetic

    def __add__(self, other) -> "ExponentScalar":
        other = ExponentScalar.of(other)
        out = dict(self.coords)
        for k, q in other.coords.items():
            out[k] = out.get(k, Q(0)) + q
        return ExponentScalar(out)

    def __neg__(self) -> "ExponentScalar":
        return ExponentScalar({k: -q for k, q in self.coords.items()})

    def __sub__(self, other) -> "ExponentScalar":
        return self + (-ExponentScalar.of(other))

    def scale(self, q: QLike) -> "ExponentScalar":
        q = Q(q)
        return ExponentScalar({k: c * q for k, c in self.coords.items()})

    def __mul__(self, other) -> "ExponentScalar":
        """Product, defined when every atom pair folds (same-prime roots)."""
        other = ExponentScalar.of(other)
        out = ExponentScalar({})
        for k1, q1 in self.coords.items():
            for k2, q2 in other.coords.items():
                out = out + _coord_product(k1, k2).scale(q1 * q2)
        return out

    # -- numerics

    def value_iv(self, prec: int) -> Iv:
        total = Iv.point(self.coords.get(None, Q(0)))
        for k, q in self.coords.items():
            if k is None:
                continue
            total = total + k.enclosure(prec).scale(q)
        return total

    def sign(self, max_prec: int = DEFAULT_PREC) -> int:
        """Exact sign; structural zero short-circuits the refinement loop."""
        if self.is_zero():
            return 0
        if self.is_rational():
            v = self.as_fraction()
            return (v > 0) - (v < 0)
        prec = _START_PREC
        while True:
            s = self.value_iv(prec).sign()
            if s is not None:
                return s
            if prec >= max_prec:
                raise OrderUndecidable(
                    f"sign of {self} undecided at {max_prec} bits")
            prec = min(2 * prec, max_prec)

    def __repr__(self):
        if not self.coords:
            return "0"
        bits = []
        for k in sorted(self.coords, key=_coord_skey):
            q = self.coords[k]
            bits.append(str(q) if k is None else f"{q}*{k!r}")
        return " + ".join(bits)


ESLike = Union[ExponentScalar, _Atom, int, Fraction]

ES_ZERO = ExponentScalar({})
ES_ONE = ExponentScalar({None: Q(1)})


def _root_pieces(p: int, t: Q) -> "ExponentScalar":
    """p**t as an ExponentScalar: rational part times a fractional root."""
    n = t.__floor__()
    f = t - n
    rat = Q(p) ** int(n)
    if f == 0:
        return ExponentScalar({None: rat})
    # rat * p^f is not Q-linear unless expressed through the root atom
    return ExponentScalar({Root(p, f): rat})


def _coord_product(k1: _CoordKey, k2: _CoordKey) -> ExponentScalar:
    if k1 is None:
        return ExponentScalar.of(k2) if k2 is not None else ES_ONE
    if k2 is None:
        return ExponentScalar.of(k1)
    if isinstance(k1, Root) and isinstance(k2, Root) and k1.p == k2.p:
        return _root_pieces(k1.p, k1.f + k2.f)
    raise ExponentProductUndefined(f"no product image for {k1!r} * {k2!r}")


def cmp_scalar(a: ESLike, b: ESLike, max_prec: int = DEFAULT_PREC) -> int:
    """Exact three-way comparison of exponent scalars: -1, 0 or +1.

    Equality is structural (the basis is declared Q-linearly independent);
    strict order comes from interval refinement of the difference.
    """
    d = ExponentScalar.of(a) - ExponentScalar.of(b)
    return d.sign(max_prec)


# ---------------------------------------------------------------------------
# ConstantProduct
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantProduct:
    """Canonical product  e**u * prod p**f_p * prod (log p)**w_p.

    ``euler`` is an ExponentScalar u (so e**(q*sqrt2) is representable),
    ``roots`` maps primes to fractional exponents in (0,1) (integral parts
    always fold into the rational coefficient of the enclosing term), and
    ``logs`` maps primes to nonzero ExponentScalar exponents of log p.
    """

    euler: tuple = ()      # sorted ((atom-or-None, Q), ...) coordinate items
    roots: tuple = ()      # sorted ((p, Q f), ...)
    logs: tuple = ()       # sorted ((p, coordinate items), ...)

    # The dataclass holds hashable canonical tuples; accessors rebuild the
    # richer objects on demand.

    def euler_exp(self) -> ExponentScalar:
        return ExponentScalar(dict(self.euler))

    def root_map(self) -> dict[int, Q]:
        return dict(self.roots)

    def log_map(self) -> dict[int, ExponentScalar]:
        return {p: ExponentScalar(dict(es)) for p, es in self.logs}

    def is_one(self) -> bool:
        return not (self.euler or self.roots or self.logs)

    def skey(self):
        return (self.euler, self.roots, self.logs)

    def value_iv(self, prec: int) -> Iv:
        total = Iv.point(Q(1))
        eu = self.euler_exp()
        if not eu.is_zero():
            total = total * exp_iv(eu.value_iv(prec + 8), prec + 4)
        for p, f in self.roots:
            total = total * Root(p, f).enclosure(prec + 4)
        for p, es in self.log_map().items():
            total = total * pow_iv(LogP(p).enclosure(prec + 8),
                                   es.value_iv(prec + 8), prec + 4)
        return round_out(total, prec)

    def as_exponent_scalar(self) -> ExponentScalar:
        """Value as a Q-linear combination of atoms, when that is exact."""
        if self.is_one():
            return ES_ONE
        if not self.euler and not self.logs and len(self.roots) == 1:
            (p, f), = self.roots
            return ExponentScalar({Root(p, f): Q(1)})
        if not self.euler and not self.roots and len(self.logs) == 1:
            (p, es), = self.logs
            e = ExponentScalar(dict(es))
            if e == ES_ONE:
                return ExponentScalar({LogP(p): Q(1)})
        if self.euler and not self.roots and not self.logs:
            if self.euler_exp() == ES_ONE:
                return ExponentScalar({EULER: Q(1)})
        raise ConstantNotRepresentable(
            f"{self!r} is not an exponent-scalar value")

    def __repr__(self):
        if self.is_one():
            return "1"
        bits = []
        eu = self.euler_exp()
        if not eu.is_zero():
            bits.append(f"e^({eu!r})")
        for p, f in self.roots:
            bits.append(f"{p}^({f})")
        for p, es in self.log_map().items():
            bits.append(f"log{p}^({es!r})")
        return "*".join(bits)


CP_ONE = ConstantProduct()


def _mk_cp(euler: ExponentScalar, roots: dict[int, Q],
           logs: dict[int, ExponentScalar]) -> tuple[Q, ConstantProduct]:
    """Canonicalize: fold integral root parts into a rational factor."""
    rat = Q(1)
    rkeep: dict[int, Q] = {}
    for p, t in roots.items():
        n = t.__floor__()
        f = t - n
        if n:
            rat *= Q(p) ** int(n)
        if f:
            rkeep[p] = f
    def coord_items(es: ExponentScalar) -> tuple:
        return tuple(sorted(es.coords.items(),
                            key=lambda kv: _coord_skey(kv[0])))

    cp = ConstantProduct(
        euler=coord_items(euler),
        roots=tuple(sorted(rkeep.items())),
        logs=tuple(sorted((p, coord_items(es))
                          for p, es in logs.items() if not es.is_zero())),
    )
    return rat, cp


def cp_mul(a: ConstantProduct, b: ConstantProduct) -> tuple[Q, ConstantProduct]:
    roots = a.root_map()
    for p, f in b.root_map().items():
        roots[p] = roots.get(p, Q(0)) + f
    logs = a.log_map()
    for p, es in b.log_map().items():
        logs[p] = logs.get(p, ES_ZERO) + es
    return _mk_cp(a.euler_exp() + b.euler_exp(), roots, logs)


def cp_pow(a: ConstantProduct, q: ESLike) -> tuple[Q, ConstantProduct]:
    """a**q.  Rational q acts on everything; irrational q needs products."""
    qes = ExponentScalar.of(q)
    if qes.is_rational():
        qq = qes.as_fraction()
        if qq == 0:
            return Q(1), CP_ONE
        return _mk_cp(a.euler_exp().scale(qq),
                      {p: f * qq for p, f in a.root_map().items()},
                      {p: es.scale(qq) for p, es in a.log_map().items()})
    if a.roots or a.logs:
        raise ConstantNotRepresentable(
            f"irrational power of {a!r} is not representable")
    return _mk_cp(a.euler_exp() * qes, {}, {})


def cp_from_euler(q: ESLike) -> ConstantProduct:
    return _mk_cp(ExponentScalar.of(q), {}, {})[1]


def rational_power(x: Q, a: Q) -> tuple[Q, ConstantProduct]:
    """x**a for positive rational x, as rational * canonical root product."""
    x = Q(x)
    if x <= 0:
        raise NegativeBase(f"({x})**({a})")
    if x == 1 or a == 0:
        return Q(1), CP_ONE
    roots: dict[int, Q] = {}
    for p, e in factor_rational(x).items():
        roots[p] = roots.get(p, Q(0)) + e * a
    return _mk_cp(ES_ZERO, roots, {})


def es_from_cp_value(r: Q, cp: ConstantProduct) -> ExponentScalar:
    """The value r * cp as an ExponentScalar (exact or raises)."""
    return cp.as_exponent_scalar().scale(r)


# ---------------------------------------------------------------------------
# Coefficient
# ---------------------------------------------------------------------------

# term key: (ConstantProduct, params, s-power, exp-rate)
_TermKey = tuple[ConstantProduct, tuple, int, Q]

_UNIT_TERM: _TermKey = (CP_ONE, (), 0, Q(0))


def _tk_skey(tk: _TermKey):
    cp, params, spow, rate = tk
    return (spow, (rate.numerator, rate.denominator), params, cp.skey())


def _tk_mul(t1: _TermKey, t2: _TermKey) -> tuple[Q, _TermKey]:
    cp1, par1, n1, q1 = t1
    cp2, par2, n2, q2 = t2
    rat, cp = cp_mul(cp1, cp2)
    pd = dict(par1)
    for name, k in par2:
        pd[name] = pd.get(name, 0) + k
    return rat, (cp, tuple(sorted(pd.items())), n1 + n2, q1 + q2)


def _num_mul(a: dict[_TermKey, Q], b: dict[_TermKey, Q]) -> dict[_TermKey, Q]:
    out: dict[_TermKey, Q] = {}
    for t1, r1 in a.items():
        for t2, r2 in b.items():
            rat, tk = _tk_mul(t1, t2)
            v = out.get(tk, Q(0)) + r1 * r2 * rat
            if v:
                out[tk] = v
            elif tk in out:
                del out[tk]
    return out


def _num_add(a: dict[_TermKey, Q], b: dict[_TermKey, Q]) -> dict[_TermKey, Q]:
    out = dict(a)
    for tk, r in b.items():
        v = out.get(tk, Q(0)) + r
        if v:
            out[tk] = v
        elif tk in out:
            del out[tk]
    return out


# A denominator factor is a canonical constant sum: sorted term tuple whose
# first term has coefficient exactly 1.
_DenKey = tuple[tuple[_TermKey, Q], ...]


def _normalize_den(num: dict[_TermKey, Q]) -> tuple[Q, _DenKey]:
    items = sorted(num.items(), key=lambda kv: _tk_skey(kv[0]))
    scale = items[0][1]
    return scale, tuple((tk, r / scale) for tk, r in items)


def _den_as_num(d: _DenKey) -> dict[_TermKey, Q]:
    return dict(d)


class Coefficient:
    """Element of the exact coefficient ring (see module docstring)."""

    __slots__ = ("num", "den")
    __hash__ = None  # fractions are compared by cross-multiplication

    def __init__(self, num: dict[_TermKey, Q], den: dict[_DenKey, int] | None = None):
        self.num = {tk: r for tk, r in num.items() if r}
        self.den = dict(den) if (den and self.num) else {}

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "Coefficient":
        return Coefficient({})

    @staticmethod
    def one() -> "Coefficient":
        return Coefficient({_UNIT_TERM: Q(1)})

    @staticmethod
    def rational(q: QLike) -> "Coefficient":
        return Coefficient({_UNIT_TERM: Q(q)})

    @staticmethod
    def param(name: str, power: int = 1) -> "Coefficient":
        return Coefficient({(CP_ONE, ((name, power),), 0, Q(0)): Q(1)})

    @staticmethod
    def s_var(power: int = 1) -> "Coefficient":
        return Coefficient({(CP_ONE, (), power, Q(0)): Q(1)})

    @staticmethod
    def exp_s(rate: QLike) -> "Coefficient":
        """exp(rate * s)."""
        rate = Q(rate)
        if rate == 0:
            return Coefficient.one()
        return Coefficient({(CP_ONE, (), 0, rate): Q(1)})

    @staticmethod
    def constant(r: QLike, cp: ConstantProduct = CP_ONE) -> "Coefficient":
        return Coefficient({(cp, (), 0, Q(0)): Q(r)})

    @staticmethod
    def euler_pow(q: ESLike) -> "Coefficient":
        return Coefficient.constant(1, cp_from_euler(q))

    @staticmethod
    def from_exponent_scalar(es: ESLike) -> "Coefficient":
        es = ExponentScalar.of(es)
        num: dict[_TermKey, Q] = {}
        for k, q in es.coords.items():
            if k is None:
                tk = _UNIT_TERM
            elif isinstance(k, _Euler):
                tk = (cp_from_euler(1), (), 0, Q(0))
            elif isinstance(k, Root):
                tk = (_mk_cp(ES_ZERO, {k.p: k.f}, {})[1], (), 0, Q(0))
            else:
                assert isinstance(k, LogP)
                tk = (_mk_cp(ES_ZERO, {}, {k.p: ES_ONE})[1], (), 0, Q(0))
            num = _num_add(num, {tk: q})
        return Coefficient(num)

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def is_constant(self) -> bool:
        """No parameters and no s-dependence (denominators are constant)."""
        return all(not params and spow == 0 and rate == 0
                   for (_, params, spow, rate) in self.num)

    def has_params(self) -> bool:
        return any(params for (_, params, _, _) in self.num)

    def is_rational(self) -> bool:
        return not self.den and all(tk == _UNIT_TERM for tk in self.num)

    def as_fraction(self) -> Q:
        if not self.num:
            return Q(0)
        if not self.is_rational():
            raise ConstantNotRepresentable(f"{self!r} is not rational")
        return self.num[_UNIT_TERM]

    def is_single_term(self) -> bool:
        return not self.den and len(self.num) == 1

    def single_term(self) -> tuple[Q, ConstantProduct]:
        """(rational, constant product) for a single constant term."""
        if self.den or len(self.num) != 1:
            raise NonInvertibleCoefficient(f"{self!r} is not a single term")
        (cp, params, spow, rate), r = next(iter(self.num.items()))
        if params or spow or rate:
            raise NonInvertibleCoefficient(f"{self!r} is not constant")
        return r, cp

    # -- ring operations -----------------------------------------------------

    def _with_common_den(self, other: "Coefficient"):
        if self.den == other.den:
            return self.num, other.num, self.den
        den: dict[_DenKey, int] = dict(self.den)
        for f, k in other.den.items():
            den[f] = max(den.get(f, 0), k)
        a = self.num
        for f, k in den.items():
            for _ in range(k - self.den.get(f, 0)):
                a = _num_mul(a, _den_as_num(f))
        b = other.num
        for f, k in den.items():
            for _ in range(k - other.den.get(f, 0)):
                b = _num_mul(b, _den_as_num(f))
        return a, b, den

    def __add__(self, other: "Coefficient") -> "Coefficient":
        if not isinstance(other, Coefficient):
            return NotImplemented
        a, b, den = self._with_common_den(other)
        return Coefficient(_num_add(a, b), den)

    def __neg__(self) -> "Coefficient":
        return Coefficient({tk: -r for tk, r in self.num.items()}, self.den)

    def __sub__(self, other: "Coefficient") -> "Coefficient":
        return self + (-other)

    def __mul__(self, other: "Coefficient") -> "Coefficient":
        if not isinstance(other, Coefficient):
            return NotImplemented
        if not self.num or not other.num:
            return Coefficient.zero()
        den = dict(self.den)
        for f, k in other.den.items():
            den[f] = den.get(f, 0) + k
        return Coefficient(_num_mul(self.num, other.num), den)

    def scale(self, q: QLike) -> "Coefficient":
        q = Q(q)
        return Coefficient({tk: r * q for tk, r in self.num.items()}, self.den)

    def __eq__(self, other):
        if not isinstance(other, Coefficient):
            if isinstance(other, (int, Fraction)):
                other = Coefficient.rational(other)
            else:
                return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        a = self.num
        for f, k in other.den.items():
            for _ in range(k):
                a = _num_mul(a, _den_as_num(f))
        b = other.num
        for f, k in self.den.items():
            for _ in range(k):
                b = _num_mul(b, _den_as_num(f))
        return a == b

    def inverse(self) -> "Coefficient":
        """Ring inverse.  Exists exactly for nonzero constant coefficients."""
        if not self.num:
            raise ZeroDivisionError("inverse of zero coefficient")
        if not self.is_constant():
            raise NonInvertibleCoefficient(
                "coefficient involves parameters or s")
        new_num: dict[_TermKey, Q] = {_UNIT_TERM: Q(1)}
        for f, k in self.den.items():
            for _ in range(k):
                new_num = _num_mul(new_num, _den_as_num(f))
        if len(self.num) == 1:
            (cp, _, _, _), r = next(iter(self.num.items()))
            rat, icp = cp_pow(cp, Q(-1))
            piece = {(icp, (), 0, Q(0)): rat / r}
            return Coefficient(_num_mul(new_num, piece))
        scale, denkey = _normalize_den(self.num)
        return Coefficient({tk: r / scale for tk, r in new_num.items()},
                           {denkey: 1})

    def __truediv__(self, other: "Coefficient") -> "Coefficient":
        return self * other.inverse()

    # -- s-calculus -----------------------------------------------------------

    def d_ds(self) -> "Coefficient":
        """Formal derivative with respect to s."""
        out: dict[_TermKey, Q] = {}
        for (cp, params, n, q), r in self.num.items():
            if n:
                out = _num_add(out, {(cp, params, n - 1, q): r * n})
            if q:
                out = _num_add(out, {(cp, params, n, q): r * q})
        return Coefficient(out, self.den)

    def at_s0(self) -> "Coefficient":
        """Evaluate at s = 0 (terms with a positive s-power vanish)."""
        out: dict[_TermKey, Q] = {}
        for (cp, params, n, q), r in self.num.items():
            if n:
                continue
            out = _num_add(out, {(cp, params, 0, Q(0)): r})
        return Coefficient(out, self.den)

    def subst_s(self, value) -> "Coefficient":
        """Bind s to a rational or a constant atom.

        s**n and exp(q*s) both stay inside the ring: for rational s0 the
        exponential becomes the constant e**(q*s0); for an atom a it becomes
        e**(q*a), and a**n is the atom power.
        """
        out: dict[_TermKey, Q] = {}
        for (cp, params, n, q), r in self.num.items():
            pieces: dict[_TermKey, Q] = {(cp, params, 0, Q(0)): r}
            if isinstance(value, (int, Fraction)):
                v = Q(value)
                if n:
                    pieces = {tk: rr * v ** n for tk, rr in pieces.items()}
                    if v == 0 and n:
                        pieces = {}
                rate_es = ExponentScalar.of(q * v)
            else:
                atom = value
                if n:
                    if not isinstance(atom, Root):
                        raise ConstantNotRepresentable(
                            f"s**{n} at s = {atom!r}")
                    powr = _root_pieces(atom.p, atom.f * n)
                    pieces = _num_mul(
                        pieces,
                        dict(Coefficient.from_exponent_scalar(powr).num))
                rate_es = ExponentScalar.of(atom).scale(q)
            if q:
                ecp = cp_from_euler(rate_es)
                pieces = _num_mul(pieces, {(ecp, (), 0, Q(0)): Q(1)})
            out = _num_add(out, pieces)
        return Coefficient(out, self.den)

    def integrate_s(self, upper: str = "s") -> "Coefficient":
        """Definite integral int_0^upper, with upper in {"s", "1"}.

        For each term s**n * exp(q*s) the antiderivative is closed-form in
        the ring: polynomial * exponential when q != 0, a pure power shift
        when q == 0.
        """
        assert upper in ("s", "1")
        out: dict[_TermKey, Q] = {}
        for (cp, params, n, q), r in self.num.items():
            if q == 0:
                if upper == "s":
                    out = _num_add(out, {(cp, params, n + 1, Q(0)): r / (n + 1)})
                else:
                    out = _num_add(out, {(cp, params, 0, Q(0)): r / (n + 1)})
                continue
            # antiderivative e^{qu} * sum_i (-1)^i (n)_i u^{n-i} / q^{i+1}
            falling = Q(1)
            coeffs = []
            for i in range(n + 1):
                if i:
                    falling *= (n - i + 1)
                coeffs.append((i, ((-1) ** i) * falling / q ** (i + 1)))
            f0 = ((-1) ** n) * falling / q ** (n + 1)   # value at u = 0
            if upper == "s":
                for i, c in coeffs:
                    out = _num_add(out, {(cp, params, n - i, q): r * c})
                out = _num_add(out, {(cp, params, 0, Q(0)): -r * f0})
            else:
                p1 = sum(c for _, c in coeffs)
                rat, ecp = cp_mul(cp, cp_from_euler(q))
                out = _num_add(out, {(ecp, params, 0, Q(0)): r * p1 * rat})
                out = _num_add(out, {(cp, params, 0, Q(0)): -r * f0})
        return Coefficient(out, self.den)

    # -- extraction ------------------------------------------------------------

    def coefficient_of_param(self, name: str, power: int = 1) -> "Coefficient":
        """Sub-coefficient multiplying name**power exactly."""
        out: dict[_TermKey, Q] = {}
        for (cp, params, n, q), r in self.num.items():
            pd = dict(params)
            if pd.get(name, 0) != power:
                continue
            del pd[name]
            out = _num_add(out, {(cp, tuple(sorted(pd.items())), n, q): r})
        return Coefficient(out, self.den)

    def s_degree(self) -> int:
        """Highest s-power; -1 for zero.  Only meaningful for polynomials."""
        if any(q != 0 for (_, _, _, q) in self.num):
            raise ConstantNotRepresentable("not a polynomial in s")
        return max((n for (_, _, n, _) in self.num), default=-1)

    def den_factors(self) -> list["Coefficient"]:
        """The denominator factors, as constant coefficients (multiplicity-expanded)."""
        out = []
        for f, k in self.den.items():
            for _ in range(k):
                out.append(Coefficient(_den_as_num(f)))
        return out

    # -- numerics ----------------------------------------------------------------

    def eval_iv(self, bindings: dict[str, Q] | None = None,
                s: Q | None = None, prec: int = DEFAULT_PREC // 4) -> Iv:
        """Guaranteed enclosure of the value under the given bindings."""
        bindings = bindings or {}
        total = Iv.point(Q(0))
        for (cp, params, n, q), r in self.num.items():
            piece = Iv.point(r)
            if not cp.is_one():
                piece = piece * cp.value_iv(prec)
            for name, k in params:
                if name not in bindings:
                    raise UnboundParameter(name)
                piece = piece * Iv.point(bindings[name]).pow_int(k)
            if n or q:
                if s is None:
                    raise UnboundParameter("s")
                if n:
                    piece = piece * Iv.point(s).pow_int(n)
                if q:
                    piece = piece * exp_point(q * s, prec)
            total = total + piece
        for f, k in self.den.items():
            fv = Coefficient(_den_as_num(f)).eval_iv(bindings, s, prec + 8)
            total = total * fv.recip().pow_int(k)
        return total

    def sign(self, max_prec: int = DEFAULT_PREC) -> int:
        """Exact sign of a constant coefficient."""
        if not self.num:
            return 0
        if self.has_params() or not self.is_constant():
            raise SignUndecidable(f"{self!r} has parameters or s")
        prec = _START_PREC
        while True:
            try:
                s = self.eval_iv({}, None, prec).sign()
            except ZeroDivisionError:
                s = None
            if s is not None:
                return s
            if prec >= max_prec:
                raise SignUndecidable(
                    f"sign of {self!r} undecided at {max_prec} bits")
            prec = min(2 * prec, max_prec)

    def as_exponent_scalar(self) -> ExponentScalar:
        """Constant value as an ExponentScalar (for exponent positions)."""
        if self.den:
            raise ConstantNotRepresentable("denominators are not exponent values")
        total = ES_ZERO
        for (cp, params, n, q), r in self.num.items():
            if params or n or q:
                raise ConstantNotRepresentable("parameters or s in exponent")
            total = total + es_from_cp_value(r, cp)
        return total

    # -- exp / log bridges ----------------------------------------------------------

    def exp(self) -> "Coefficient":
        """e**self for constants (plus an s-linear part, giving exp(q*s)).

        Term shapes with an image: r (rational) -> e**r; r*log p -> p**r;
        r * a for an exponent atom a -> e**(r*a); r*s -> exp(r*s).
        Everything else raises ConstantNotRepresentable.
        """
        if self.den:
            raise ConstantNotRepresentable("exp of a quotient coefficient")
        factors = Coefficient.one()
        for (cp, params, n, q), r in self.num.items():
            if params or q or n > 1:
                raise ConstantNotRepresentable(
                    f"exp of term with shape {params}, s^{n}, rate {q}")
            if n == 1:
                if not cp.is_one():
                    raise ConstantNotRepresentable(
                        "exp of s times a non-rational constant")
                factors = factors * Coefficient.exp_s(r)
                continue
            if cp.is_one():
                factors = factors * Coefficient.euler_pow(r)
                continue
            lm = cp.log_map()
            if not cp.euler and not cp.roots and len(lm) == 1:
                (p, es), = lm.items()
                if es.is_rational():
                    # e^(r * w * log p) = p^(r w)
                    rat, rcp = rational_power(Q(p), r * es.as_fraction())
                    factors = factors * Coefficient.constant(rat, rcp)
                    continue
            try:
                es = cp.as_exponent_scalar().scale(r)
            except ConstantNotRepresentable:
                raise ConstantNotRepresentable(
                    f"exp({r}*{cp!r}) has no closed form") from None
            factors = factors * Coefficient.euler_pow(es)
        return factors

    def log(self) -> "Coefficient":
        """log(self) for a positive single-term constant."""
        r, cp = self.single_term()
        if r <= 0:
            raise NegativeBase(f"log of {self!r}")
        out = Coefficient.zero()
        for p, e in factor_rational(r).items():
            out = out + Coefficient.constant(
                e, _mk_cp(ES_ZERO, {}, {p: ES_ONE})[1])
        eu = cp.euler_exp()
        if not eu.is_zero():
            out = out + Coefficient.from_exponent_scalar(eu)
        for p, f in cp.root_map().items():
            out = out + Coefficient.constant(
                f, _mk_cp(ES_ZERO, {}, {p: ES_ONE})[1])
        if cp.logs:
            raise LogConstantNotDeclared(
                f"log of {cp!r} needs an undeclared log-log constant")
        return out

    # -- misc -------------------------------------------------------------------

    def terms(self) -> Iterator[tuple[_TermKey, Q]]:
        return iter(sorted(self.num.items(), key=lambda kv: _tk_skey(kv[0])))

    def __repr__(self):
        from .printer import format_coefficient
        return format_coefficient(self)


C_ZERO = Coefficient.zero()
C_ONE = Coefficient.one()


def coefficient_pow(c: Coefficient, a: ExponentScalar) -> Coefficient:
    """c**a for a positive constant c and exact scalar a."""
    r, cp = c.single_term()
    if r <= 0:
        raise NegativeBase(f"({c!r})**({a!r})")
    if a.is_rational():
        q = a.as_fraction()
        rat1, cp1 = rational_power(r, q)
        rat2, cp2 = cp_pow(cp, q)
        rat3, cp3 = cp_mul(cp1, cp2)
        return Coefficient.constant(rat1 * rat2 * rat3, cp3)
    if r != 1 or not cp.is_one():
        raise ConstantNotRepresentable(
            f"irrational power of non-unit constant {c!r}")
    return Coefficient.one()


def binomial_series_coeff(a: ExponentScalar, n: int) -> Coefficient:
    """Generalized binomial coefficient binom(a, n) as a Coefficient."""
    if n == 0:
        return Coefficient.one()
    term = a
    fact = 1
    for i in range(1, n):
        term = term * (a - ExponentScalar.of(i))
        fact *= i + 1
    return Coefficient.from_exponent_scalar(term.scale(Q(1, fact)))
