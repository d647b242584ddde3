"""Differentiation, antidifferentiation, exp and log of transseries.

Derivatives are term-wise exact: (c*m)' = c*m*(m ``dagger``), with the
logarithmic derivative of a monomial assembled from the log-power ladder
and the interned exponent series.  Integration uses exact closed forms on
pure log-power monomials and an asymptotic integration-by-parts fixed point
on exponential monomials; by construction derive(integrate(A)) returns A up
to the recorded bound.

exp splits its argument into purely large + constant + small: the large
part interns as an exponential monomial, the constant maps through the
declared constant images, the small part expands as a Taylor series to the
session cut.  log is the inverse decomposition.
"""

from __future__ import annotations

from fractions import Fraction

from .context import Context
from .errors import (
    ConstantNotRepresentable,
    NonIntegrableAtCut,
    NonInvertibleCoefficient,
    NonConstantLeadingCoefficient,
    NotPurelyLarge,
    ZeroSeries,
)
from .exactnum import Coefficient, ExponentScalar, ES_ONE
from .monomial import Monomial, UNIT_MON, mon_log, mul_monomial, mon_x
from .series import (
    Transseries,
    exponent_series,
    intern_exponential,
    invert_unit,
    log_monomial,
)

Q = Fraction

_BYPARTS_ROUNDS = 64


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def logderiv_monomial(ctx: Context, m: Monomial) -> Transseries:
    """m'/m as a series:  sum_d a_d prod_{j<=d} (log^[j] x)^-1  -  L'."""
    terms = []
    for d, es in m.logpart:
        ladder = Monomial(tuple((j, -ES_ONE) for j in range(d + 1)))
        terms.append((ladder, Coefficient.from_exponent_scalar(es)))
    out = Transseries.make(ctx, terms)
    for gid, q in m.exppart:
        gen = ctx.registry[gid]
        atom = ctx.monomial_series(gen.monomial, gen.coeff.scale(q))
        out = out - derive(atom)
    return out


def derive(A: Transseries) -> Transseries:
    """Term-wise derivative; the O-bound maps to the dominant monomial of
    its own derivative support."""
    ctx = A.ctx
    out = ctx.zero()
    for m, c in A.terms:
        dag = logderiv_monomial(ctx, m)
        out = out + ctx.monomial_series(m, c) * dag
    ob = None
    if A.obound is not None:
        dag = logderiv_monomial(ctx, A.obound)
        if dag.terms:
            ob = mul_monomial(A.obound, dag.mag())
    if ob is not None:
        out = out + ctx.zero(ob)
    return out


def logderiv(A: Transseries) -> Transseries:
    """A'/A."""
    if not A.terms:
        raise ZeroSeries("logarithmic derivative of zero")
    return derive(A) * invert_unit(A)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def integrate(A: Transseries) -> Transseries:
    """Antiderivative with no constant term; derive(integrate(A)) = A up to
    the recorded bound."""
    ctx = A.ctx
    out = ctx.zero()
    for m, c in A.terms:
        out = out + _integrate_term(ctx, m, c)
    if A.obound is not None:
        # |int O(b)| <= O(x*b) for every small-side bound this engine emits
        out = out + ctx.zero(mul_monomial(A.obound, mon_x(1)))
    return out


def _integrate_term(ctx: Context, m: Monomial, c: Coefficient) -> Transseries:
    if m.exppart:
        return _integrate_byparts(ctx, ctx.monomial_series(m, c))
    return _integrate_logpower(ctx, m, c)


def _integrate_logpower(ctx: Context, m: Monomial, c: Coefficient,
                        _guard: int = 0) -> Transseries:
    """Exact integration of  prod_d (log^[d] x)^{a_d}.

    x**a with a != -1 integrates in closed form, with a by-parts reduction
    peeling off any log factors; an x-exponent of exactly -1 substitutes
    u = log x and recurses one level deeper.
    """
    if _guard > _BYPARTS_ROUNDS:
        raise NonIntegrableAtCut(
            f"log-power reduction exceeded {_BYPARTS_ROUNDS} steps at {m!r}")
    lm = m.log_map()
    a0 = lm.pop(0, None)
    if a0 is None and not lm:
        return ctx.monomial_series(mon_x(1), c)
    if a0 is not None and a0 == -ES_ONE:
        # d(log x) substitution: every remaining depth shifts down one,
        # the result shifts back up
        inner = Monomial(tuple(sorted((d - 1, es) for d, es in lm.items())))
        ctx.check_depth(max((d for d in lm), default=0) + 1)
        res = _integrate_logpower(ctx, inner, c, _guard + 1)
        out = []
        for mm, cc in res.terms:
            if mm.logpart:
                ctx.check_depth(max(d for d, _ in mm.logpart) + 1)
            out.append((Monomial(tuple(
                (d + 1, es) for d, es in mm.logpart)), cc))
        return Transseries.make(ctx, out)
    # x^a with a != -1 (a may be absent = 0 when log factors are present):
    #   int x^a P = x^(a+1) P/(a+1) - (1/(a+1)) sum_d b_d int x^a P l_1..l_d^-1
    aa = a0 if a0 is not None else ExponentScalar.of(0)
    shift = aa + ES_ONE
    inv = _es_inverse(shift)
    head_mon = Monomial(tuple(sorted(
        [(0, shift)] + [(d, es) for d, es in lm.items()])))
    total = ctx.monomial_series(head_mon, c * inv)
    truncated = False
    for d, bd in lm.items():
        reduced = dict(lm)
        for j in range(1, d + 1):
            red = reduced.get(j, ExponentScalar.of(0)) - ES_ONE
            if red.is_zero():
                reduced.pop(j, None)
            else:
                reduced[j] = red
        items = [(0, aa)] if not aa.is_zero() else []
        items += list(reduced.items())
        piece_mon = Monomial(tuple(sorted(
            (dd, es) for dd, es in items if not es.is_zero())))
        piece_c = c * inv * Coefficient.from_exponent_scalar(bd)
        if ctx.cut is not None and ctx.cut.drops(piece_mon):
            truncated = True
            continue
        total = total - _integrate_term_guarded(ctx, piece_mon, piece_c,
                                                _guard + 1)
    if truncated and ctx.cut is not None and ctx.cut.obound() is not None:
        total = total + ctx.zero(ctx.cut.obound())
    return total


def _integrate_term_guarded(ctx, m, c, guard):
    if m.exppart:
        return _integrate_byparts(ctx, ctx.monomial_series(m, c))
    return _integrate_logpower(ctx, m, c, guard)


def _es_inverse(es: ExponentScalar) -> Coefficient:
    """1/es for rational es, or for q0 + q1*r with r*r rational (conjugate
    trick); raises otherwise."""
    if es.is_rational():
        v = es.as_fraction()
        if v == 0:
            raise ZeroDivisionError("1/0 exponent scalar")
        return Coefficient.rational(1 / v)
    coords = dict(es.coords)
    q0 = coords.pop(None, Q(0))
    if len(coords) == 1:
        (atom, q1), = coords.items()
        try:
            sq = (ExponentScalar.of(atom) * ExponentScalar.of(atom))
        except Exception:
            sq = None
        if sq is not None and sq.is_rational():
            denom = q0 * q0 - q1 * q1 * sq.as_fraction()
            if denom != 0:
                conj = ExponentScalar({None: q0, atom: -q1})
                return Coefficient.from_exponent_scalar(
                    conj.scale(1 / denom))
    raise ConstantNotRepresentable(f"no ring inverse for scalar {es!r}")


def _integrate_byparts(ctx: Context, f: Transseries) -> Transseries:
    """Asymptotic by-parts fixed point for exponential monomials:
    repeatedly integrate the dominant term as f/(dominant of f-dagger) and
    push the derivative mismatch back onto the queue."""
    total = ctx.zero()
    rest = f
    for _ in range(_BYPARTS_ROUNDS):
        if rest.is_zero():
            if rest.obound is not None:
                total = total + ctx.zero(
                    mul_monomial(rest.obound, mon_x(1)))
            return total
        m, c = rest.dominant()
        if not m.exppart:
            total = total + _integrate_logpower(ctx, m, c)
            rest = Transseries(ctx, rest.terms[1:], rest.obound)
            continue
        dag = logderiv_monomial(ctx, m)
        if not dag.terms:
            raise NonIntegrableAtCut(f"flat exponential monomial {m!r}")
        nmon, lam = dag.dominant()
        try:
            ilam = lam.inverse()
        except NonInvertibleCoefficient as ex:
            raise NonIntegrableAtCut(str(ex)) from ex
        from .monomial import inv_monomial
        guess = ctx.monomial_series(mul_monomial(m, inv_monomial(nmon)),
                                    c * ilam)
        total = total + guess
        rest = rest - derive(guess)
    raise NonIntegrableAtCut(
        f"by-parts loop exceeded {_BYPARTS_ROUNDS} rounds")


# ---------------------------------------------------------------------------
# exp / log
# ---------------------------------------------------------------------------

def exp_series(A: Transseries) -> Transseries:
    """e**A, truncated to the session cut.

    A splits as (purely large) + (constant) + (small): the large part must
    intern (its monomials become generator atoms, log atoms fold into
    log-power exponents), the constant needs a closed form in the constant
    group, and the small part contributes the Taylor factor sum u^n/n!.
    """
    ctx = A.ctx
    if A.obound is not None and ctx.cmp(A.obound, UNIT_MON) >= 0:
        raise NotPurelyLarge("exp of a series with an unresolved large bound")
    large, k, u = A.split()
    mon, cfac = intern_exponential(-large)
    coeff = cfac * k.exp()
    base = ctx.monomial_series(mon, coeff)
    if u.is_zero():
        if u.obound is not None:
            return base + ctx.zero(mul_monomial(mon, u.obound))
        return base
    acc = base
    term = base
    n = 0
    for _ in range(ctx.max_rounds):
        n += 1
        term = (term * u).scalar_mul(Q(1, n))
        if term.is_zero():
            return acc + term
        acc = acc + term
    from .errors import NoProgress
    raise NoProgress("exp Taylor series did not reach the cut")


def log_series(A: Transseries) -> Transseries:
    """log A for A = kappa*m*(1+u) with a positive constant leading
    coefficient: log kappa + log m + sum (-1)^(n+1) u^n / n."""
    ctx = A.ctx
    if not A.terms:
        raise ZeroSeries("log of zero series")
    m0, c0 = A.dominant()
    try:
        kappa_log = c0.log()
    except NonInvertibleCoefficient as ex:
        raise NonConstantLeadingCoefficient(
            f"log needs a single-term constant leading coefficient, "
            f"got {c0!r}") from ex
    out = ctx.constant(kappa_log) + log_monomial(ctx, m0)
    _, _, u = _unit_split(A)
    if u.is_zero():
        if u.obound is not None:
            out = out + ctx.zero(u.obound)
        return out
    term = ctx.one()
    acc = out
    n = 0
    for _ in range(ctx.max_rounds):
        n += 1
        term = term * u
        piece = term.scalar_mul(Q((-1) ** (n + 1), n))
        if piece.is_zero():
            return acc + piece
        acc = acc + piece
    from .errors import NoProgress
    raise NoProgress("log Taylor series did not reach the cut")


def _unit_split(A: Transseries):
    from .series import _lead_unit_split
    return _lead_unit_split(A)
