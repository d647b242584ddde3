"""Canonical text rendering.

Series print in paper style: strictly descending terms, exact rational and
constant-product coefficients, a trailing ``+ O(...)`` when a bound is
present.  The output of ``format_series`` parses back to the same series
(the round-trip is part of the test suite), so exponential parts print as
``exp(-(...))`` with the interned exponent series expanded.

Coefficients may additionally carry the iteration parameter ``s`` (powers
and ``exp(q*s)`` factors) and quotient denominators; those forms appear in
iteration-group reports and are not part of the parseable series grammar.
"""

from __future__ import annotations

from fractions import Fraction

from .exactnum import (
    Coefficient,
    ConstantProduct,
    EULER,
    ExponentScalar,
    LogP,
    Root,
    _coord_skey,
)

Q = Fraction


def _frac(q: Q) -> str:
    return str(q)


def _paren(s: str, needed: bool) -> str:
    return f"({s})" if needed else s


def _atom_name(atom) -> str:
    if atom is EULER or isinstance(atom, type(EULER)):
        return "e"
    if isinstance(atom, Root):
        return f"{atom.p}^({atom.f})"
    if isinstance(atom, LogP):
        return f"log({atom.p})"
    return repr(atom)


def format_exponent_scalar(es: ExponentScalar) -> str:
    if es.is_zero():
        return "0"
    bits = []
    for k in sorted(es.coords, key=_coord_skey, reverse=True):
        q = es.coords[k]
        if k is None:
            piece = _frac(q)
        elif q == 1:
            piece = _atom_name(k)
        elif q == -1:
            piece = f"-{_atom_name(k)}"
        else:
            piece = f"{_paren(_frac(q), q.denominator != 1 or q < 0)}*{_atom_name(k)}"
        bits.append(piece)
    out = bits[0]
    for piece in bits[1:]:
        out += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
    return out


def _format_cp(cp: ConstantProduct) -> list[str]:
    factors = []
    eu = cp.euler_exp()
    if not eu.is_zero():
        if eu == ExponentScalar.of(1):
            factors.append("e")
        elif eu.is_rational():
            q = eu.as_fraction()
            factors.append(f"e^{q}" if q.denominator == 1 and q > 0
                           else f"e^({q})")
        else:
            factors.append(f"e^({format_exponent_scalar(eu)})")
    for p, f in cp.roots:
        factors.append(f"{p}^({f})")
    for p, es in cp.log_map().items():
        base = f"log({p})"
        if es == ExponentScalar.of(1):
            factors.append(base)
        elif es.is_rational():
            factors.append(f"{base}^({es.as_fraction()})")
        else:
            factors.append(f"{base}^({format_exponent_scalar(es)})")
    return factors


def _format_term_key(tk) -> tuple[Q, list[str]]:
    cp, params, spow, rate = tk
    factors = _format_cp(cp)
    for name, k in params:
        factors.append(name if k == 1 else f"{name}^{k}")
    if spow:
        factors.append("s" if spow == 1 else f"s^{spow}")
    if rate:
        factors.append(f"exp({_paren(_frac(rate), rate < 0 or rate.denominator != 1)}*s)")
    return factors


def format_coefficient(c: Coefficient, wrap_sums: bool = False) -> str:
    if c.is_zero():
        return "0"
    bits = []
    for tk, r in c.terms():
        factors = _format_term_key(tk)
        mag = abs(r)
        if mag != 1 or not factors:
            factors = [_paren(_frac(mag), mag.denominator != 1)] + factors
        piece = "*".join(factors)
        bits.append(("-" if r < 0 else "+", piece))
    sign0, piece0 = bits[0]
    text = piece0 if sign0 == "+" else f"-{piece0}"
    for sign, piece in bits[1:]:
        text += f" {sign} {piece}"
    if c.den:
        dbits = []
        for f, k in c.den.items():
            ftext = format_coefficient(Coefficient(dict(f)))
            dbits.append(f"({ftext})" + (f"^{k}" if k > 1 else ""))
        text = f"({text})/" + "*".join(dbits)
    elif wrap_sums and len(bits) > 1:
        text = f"({text})"
    return text


def format_monomial(ctx, m) -> str:
    from .series import exponent_series
    if m.is_unit():
        return "1"
    factors = []
    for d, es in m.logpart:
        base = "x"
        for _ in range(d):
            base = f"log({base})"
        if es == ExponentScalar.of(1):
            factors.append(base)
        elif es.is_rational() and es.as_fraction().denominator == 1 \
                and es.as_fraction() > 0:
            factors.append(f"{base}^{es.as_fraction()}")
        else:
            factors.append(f"{base}^({format_exponent_scalar(es)})")
    if m.exppart:
        L = exponent_series(ctx, m)
        factors.append(f"exp(-({format_series(L)}))")
    return "*".join(factors)


def format_series(A) -> str:
    if not A.terms and A.obound is None:
        return "0"
    bits = []
    for m, c in A.terms:
        mtext = format_monomial(A.ctx, m)
        neg = False
        if len(c.num) == 1 and not c.den:
            (tk, r), = c.num.items()
            if r < 0:
                neg = True
                c = -c
        ctext = format_coefficient(c, wrap_sums=True)
        if m.is_unit():
            piece = ctext
        elif ctext == "1":
            piece = mtext
        else:
            piece = f"{ctext}*{mtext}"
        bits.append(("-" if neg else "+", piece))
    if not bits:
        text = "0"
    else:
        sign0, piece0 = bits[0]
        text = piece0 if sign0 == "+" else f"-{piece0}"
        for sign, piece in bits[1:]:
            text += f" {sign} {piece}"
    if A.obound is not None:
        text += f" + O({format_monomial(A.ctx, A.obound)})"
    return text
