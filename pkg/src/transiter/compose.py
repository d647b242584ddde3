"""Right composition, shifts, conjugation, compositional inversion and
numeric evaluation.

Composition recurses structurally on the monomial tree: log-power atoms map
through the log tower of the argument, powers go through the exact binomial
expansion, exponential parts recurse through exp(-(L o S)).  The argument
need not be near-identity (conjugation composes with exp and log), which is
why no Taylor expansion in (S - x) is used at this level.

Inversion is iterative refinement with a residual-descent guard: supports
are dynamic (composition can intern new exponential generators), so formal
coefficient reversion over a fixed grid would not be sound here.
"""

from __future__ import annotations

from fractions import Fraction

from .context import Context
from .errors import NoProgress, NotLargePositive, UnboundParameter, ZeroSeries
from .exactnum import Coefficient, ExponentScalar
from .intervals import Iv, exp_iv, log_iv, pow_iv, round_out
from .monomial import Monomial, UNIT_MON, mon_x
from .series import Transseries, exponent_series, invert_unit, pow_real
from .calculus import derive, exp_series, log_series

Q = Fraction


def _is_identity(S: Transseries) -> bool:
    return (len(S.terms) == 1 and S.obound is None
            and S.terms[0][0] == mon_x(1)
            and S.terms[0][1] == Coefficient.one())


def compose(T: Transseries, S: Transseries) -> Transseries:
    """T o S for large positive S."""
    ctx = T.ctx
    if ctx is not S.ctx:
        raise ValueError("composition across contexts")
    if not S.is_large_positive():
        raise NotLargePositive(f"composition argument {S!r}")
    if _is_identity(S):
        return T
    tower: dict[int, Transseries] = {0: S}

    def log_tower(d: int) -> Transseries:
        while d not in tower:
            k = max(tower)
            tower[k + 1] = log_series(tower[k])
        return tower[d]

    exp_cache: dict[tuple, Transseries] = {}
    total = ctx.zero()
    for m, c in T.terms:
        piece = ctx.constant(c)
        for d, a in m.logpart:
            piece = piece * pow_real(log_tower(d), a)
        if m.exppart:
            hit = exp_cache.get(m.exppart)
            if hit is None:
                L = exponent_series(ctx, m)
                hit = exp_series(-compose(L, S))
                exp_cache[m.exppart] = hit
            piece = piece * hit
        total = total + piece
    if T.obound is not None:
        img = _compose_bound(ctx, T.obound, S, log_tower, exp_cache)
        if img is not None:
            total = total + ctx.zero(img)
    return total


def _compose_bound(ctx, ob: Monomial, S, log_tower, exp_cache):
    """Monomial bound for (O(ob)) o S: the magnitude of ob o S."""
    try:
        piece = ctx.one()
        for d, a in ob.logpart:
            piece = piece * pow_real(log_tower(d), a)
        if ob.exppart:
            hit = exp_cache.get(ob.exppart)
            if hit is None:
                L = exponent_series(ctx, ob)
                hit = exp_series(-compose(L, S))
                exp_cache[ob.exppart] = hit
            piece = piece * hit
        if piece.terms:
            return piece.mag()
        return piece.obound
    except ZeroSeries:
        return None


def shift(T: Transseries, k) -> Transseries:
    """T(x + k): composition with a translate."""
    ctx = T.ctx
    return compose(T, ctx.x() + ctx.constant(k))


def conj_up(T: Transseries) -> Transseries:
    """log o T o exp."""
    ctx = T.ctx
    return log_series(compose(T, exp_series(ctx.x())))


def conj_down(T: Transseries) -> Transseries:
    """exp o T o log; may deepen log atoms (depth cap enforced)."""
    ctx = T.ctx
    return exp_series(compose(T, ctx.log_atom(1)))


def conj_power(T: Transseries, k) -> Transseries:
    """x^(1/k) o T o x^k for positive rational k."""
    k = Q(k)
    if k <= 0:
        raise ValueError("conjugation power must be positive")
    ctx = T.ctx
    return pow_real(compose(T, ctx.x(k)), Q(1) / k)


# ---------------------------------------------------------------------------
# compositional inverse
# ---------------------------------------------------------------------------

def inverse(T: Transseries) -> Transseries:
    """Compositional inverse: S with T o S = x + O(cut) = S o T.

    Starts from the exact inverse of the dominant term and refines with
    first-order corrections  S <- S - (T(S) - x)/T'(S), requiring the
    residual magnitude to strictly decrease each round.
    """
    ctx = T.ctx
    if not T.is_large_positive():
        raise NotLargePositive("inverse needs a large positive series")
    S = _dominant_inverse(ctx, T)
    dT = derive(T)
    prev_mag = None
    for _ in range(ctx.max_rounds):
        R = compose(T, S) - ctx.x()
        if R.is_zero():
            return S
        mag = R.mag()
        if prev_mag is not None and ctx.cmp(mag, prev_mag) >= 0:
            raise NoProgress(
                f"inversion residual stopped descending at {mag!r}")
        prev_mag = mag
        S = S - R * invert_unit(compose(dT, S))
    raise NoProgress("inversion did not converge within the round budget")


def _dominant_inverse(ctx: Context, T: Transseries) -> Transseries:
    """Exact inverse of the dominant term c*m of T."""
    m, c = T.dominant()
    if not m.exppart and list(m.log_map()) == [0]:
        # c * x^a  ->  (x/c)^(1/a)
        a = m.log_exp(0)
        from .calculus import _es_inverse
        inv_a = _es_inverse(a).as_exponent_scalar()
        return pow_real(ctx.x() * ctx.constant(c.inverse()), inv_a)
    if m.exppart and not m.logpart:
        # c * e^M with M = -L purely large positive:
        # solve c e^(M(S)) = x: S = M^[-1] o (log x - log c)
        M = -exponent_series(ctx, m)
        arg = ctx.log_atom(1) - ctx.constant(c.log())
        return compose(inverse(M), arg)
    raise NoProgress(f"unsupported dominant term {c!r}*{m!r} for inversion")


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------

def eval_monomial(ctx: Context, m: Monomial, x0: Q,
                  prec: int = 64) -> Iv:
    """Guaranteed enclosure of the monomial value at x = x0 (x0 large enough
    that all iterated logs are positive)."""
    total = Iv.point(Q(1))
    val: Iv = Iv.point(Q(x0))
    depth_vals = {0: val}
    maxd = m.max_log_depth()
    for d in range(1, maxd + 1):
        depth_vals[d] = log_iv(depth_vals[d - 1], prec + 8)
    for d, es in m.logpart:
        total = total * pow_iv(depth_vals[d], es.value_iv(prec + 8), prec + 4)
    if m.exppart:
        expo = Iv.point(Q(0))
        for gid, q in m.exppart:
            gen = ctx.registry[gid]
            gv = gen.coeff.eval_iv({}, None, prec + 8) * \
                eval_monomial(ctx, gen.monomial, x0, prec + 8)
            expo = expo + gv.scale(q)
        total = total * exp_iv(-expo, prec + 4)
    return round_out(total, prec)


def eval_double(T: Transseries, x0, bindings: dict[str, Q] | None = None,
                s: Q | None = None, prec: int = 64) -> tuple[Iv, Iv | None]:
    """Sum of term values as an enclosure, plus the |O-bound(x0)| estimate.

    The bound term is a smoke heuristic only: nothing is claimed about the
    actual truncation error beyond the magnitude of the bound monomial.
    """
    ctx = T.ctx
    x0 = Q(x0)
    total = Iv.point(Q(0))
    for m, c in T.terms:
        cv = c.eval_iv(bindings, s, prec + 8)
        total = total + cv * eval_monomial(ctx, m, x0, prec + 8)
    err = None
    if T.obound is not None:
        err = eval_monomial(ctx, T.obound, x0, prec)
    return round_out(total, prec), err
