"""Abel's equation  V o T = V + tau  and canonical fractional iterates.

Three solvers cover the classification:

* moderate (and shallow): V = int dx / Phi_s(0,x) over the common-support
  group, an exact integral of grid monomials.
* purely deep normal form x + tau + A with A'/A > 1: the fixed point of
  Y -> Y o T - tau starting from Y = x; each round contributes A o T^[n],
  which strictly descends (that is the contraction), so successive iterates
  agree above the cut after finitely many rounds.
* general: conjugate upward until the series is near-identity, split off the
  moderate part, hand the purely deep remainder to the fixed point, and
  transport back.

The translation tau is a positive constant, not forced to 1: a series
already in the shape x + tau + (purely deep) is solved against its own tau,
which avoids an artificial rescaling conjugation.  Iterates then shift by
s*tau.  Solutions are normalized with no constant term (V starts at x);
uniqueness is up to an additive constant anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import exp_series, integrate, logderiv_monomial
from .classify import DEEP, classify, near_identity_part
from .compose import compose, conj_down, conj_up, inverse
from .context import Context
from .cuts import CutSpec, MonomialCut
from .errors import (
    NoContraction,
    NotCommuting,
    NotPurelyDeepNormalForm,
    ReductionNotPurelyDeep,
    SignUndecidable,
    Unstabilized,
    VerificationFailed,
    WrongClass,
)
from .exactnum import Coefficient, ExponentScalar
from .monomial import Monomial, UNIT_MON, mon_x, mul_monomial
from .series import Transseries, invert_unit

Q = Fraction


def _sign_of(c: Coefficient, prec: int) -> int:
    return c.sign(prec)


def _as_coeff(s0) -> Coefficient:
    if isinstance(s0, Coefficient):
        return s0
    if isinstance(s0, (int, Fraction)):
        return Coefficient.rational(s0)
    return Coefficient.from_exponent_scalar(ExponentScalar.of(s0))


# ---------------------------------------------------------------------------
# moderate solver
# ---------------------------------------------------------------------------

def abel_moderate(T: Transseries, cut=None) -> Transseries:
    """V with V o T = V + 1 for moderate/shallow T > x (V o T = V - 1 for
    T < x); V is large positive with no constant term."""
    ctx = T.ctx
    from .itergroup import group_moderate
    saved = ctx.cut
    try:
        if cut is not None:
            ctx.set_cut(cut)
        cls = classify(T)
        if cls.kind == DEEP:
            raise WrongClass("abel_moderate on a deep series")
        G = group_moderate(T, ctx.cut)
        phi1_terms = []
        for g in G.support:
            phi1_terms.append((mul_monomial(mon_x(1), g),
                               G.alphas[g].d_ds().at_s0()))
        phi1_0 = Transseries.make(ctx, phi1_terms)
        V = integrate(invert_unit(phi1_0))
        a, _ = cls.first_ratio
        if a.sign(ctx.precision) < 0:
            V = -V
        return V
    finally:
        ctx.cut = saved


# ---------------------------------------------------------------------------
# purely deep solver
# ---------------------------------------------------------------------------

def _normal_form_parts(T: Transseries):
    """T = x + dir*tau + A: returns (direction, tau, A) or raises."""
    ctx = T.ctx
    C = T - ctx.x()
    tau = C.constant_term()
    if tau.is_zero():
        raise NotPurelyDeepNormalForm("no constant translation term")
    try:
        direction = tau.sign(ctx.precision)
    except SignUndecidable as ex:
        raise NotPurelyDeepNormalForm(str(ex)) from ex
    A = C - ctx.constant(tau)
    if not A.is_small():
        raise NotPurelyDeepNormalForm(
            f"residue {A!r} is not small")
    for g, _ in A.terms:
        dag = logderiv_monomial(ctx, g)
        if not dag.terms or ctx.cmp(dag.mag(), UNIT_MON) <= 0:
            raise NotPurelyDeepNormalForm(
                f"support monomial {g!r} is not purely deep")
    if direction < 0:
        tau = -tau
    return direction, tau, A


def abel_purely_deep(T: Transseries, cut=None,
                     max_rounds: int | None = None) -> Transseries:
    """Fixed point of Y -> Y o T - dir*tau from Y = x, for T = x + dir*tau + A
    in purely deep normal form.  Stops when successive iterates agree above
    the cut; every round checks the contraction A o T < A."""
    ctx = T.ctx
    saved = ctx.cut
    try:
        if cut is not None:
            ctx.set_cut(cut)
        ctx.require_cut()
        direction, tau, A = _normal_form_parts(T)
        budget = max_rounds if max_rounds is not None else ctx.max_rounds
        V = ctx.x()
        shift_c = ctx.constant(tau.scale(direction))
        prev_delta_mag = None
        for _ in range(budget):
            nxt = compose(V, T) - shift_c
            delta = nxt - V
            if delta.is_zero():
                return nxt
            mag = delta.mag()
            if prev_delta_mag is not None \
                    and ctx.cmp(mag, prev_delta_mag) >= 0:
                raise NoContraction(
                    f"iterate increment stopped descending at {mag!r}")
            prev_delta_mag = mag
            V = nxt
        raise NoContraction(
            f"purely deep iteration did not settle in {budget} rounds")
    finally:
        ctx.cut = saved


# ---------------------------------------------------------------------------
# reduction of a general deep series
# ---------------------------------------------------------------------------

def reduce_deep(T: Transseries, cut=None):
    """Split T ~ x into moderate part T1 and deep remainder; returns
    (V, R, tau, direction) with  R = V o T o V^[-1] = x + dir*tau + B  and
    B purely deep.  When T is already x + tau + (deep), V = x and tau is
    T's own translation constant."""
    ctx = T.ctx
    saved = ctx.cut
    try:
        if cut is not None:
            ctx.set_cut(cut)
        U = near_identity_part(T)
        cls = classify(T)
        a, e = cls.first_ratio
        direction = a.sign(ctx.precision)
        threshold = mul_monomial(mon_x(1), e)
        x = ctx.x()
        mod_terms, deep_terms = [], []
        for g, c in U.terms:
            dag = logderiv_monomial(ctx, g)
            side = -1 if not dag.terms else ctx.cmp(
                dag.mag(), _inv(threshold))
            (mod_terms if side <= 0 else deep_terms).append((g, c))
        T1 = x + Transseries.make(ctx, mod_terms) * x
        if _is_translation(T1):
            tau = (T1 - x).constant_term()
            if direction < 0:
                tau = -tau
            R = T
            V = x
        else:
            V = abel_moderate(T1)
            tau = Coefficient.one()
            R = compose(compose(V, T), inverse(V))
        # verify the remainder is purely deep
        try:
            _normal_form_parts(R)
        except NotPurelyDeepNormalForm as ex:
            raise ReductionNotPurelyDeep(str(ex)) from ex
        return V, R, tau, direction
    finally:
        ctx.cut = saved


def _inv(m: Monomial) -> Monomial:
    from .monomial import inv_monomial
    return inv_monomial(m)


def _is_translation(T1: Transseries) -> bool:
    x_mon = mon_x(1)
    return (len(T1.terms) == 2
            and T1.terms[0][0] == x_mon
            and T1.terms[1][0] == UNIT_MON)


# ---------------------------------------------------------------------------
# the general pipeline
# ---------------------------------------------------------------------------

@dataclass
class AbelSolution:
    """V o T_k = V + direction*tau in coordinates lifted k times."""

    V: Transseries
    tau: Coefficient
    direction: int
    k: int
    T_conj: Transseries
    cuts: list[CutSpec]


def _lift_cut(ctx: Context, cut: CutSpec) -> CutSpec:
    """Image of a monomial cut one conjugation level up (x -> exp)."""
    if not isinstance(cut, MonomialCut):
        raise Unstabilized(
            "automatic conjugation needs monomial cuts; stage the "
            "computation manually for degree cuts")
    img = compose(ctx.monomial_series(cut.monomial), exp_series(ctx.x()))
    return ctx.monomial_cut(img.mag())


def _is_near_identity_series(T: Transseries) -> bool:
    if not T.terms:
        return False
    m0, c0 = T.dominant()
    return m0 == mon_x(1) and c0 == Coefficient.one()


def abel_general(T: Transseries) -> AbelSolution:
    """Solve V o T o V^[-1] = x + dir*tau for large positive T of
    exponentiality zero (T != x)."""
    ctx = T.ctx
    base_cut = ctx.require_cut()
    saved = ctx.cut
    try:
        cur = T
        cuts = [base_cut]
        k = 0
        budget = ctx.depth_cap + 3
        while not _is_near_identity_series(cur):
            if k >= budget:
                raise Unstabilized(
                    f"series not near-identity after {budget} lifts")
            lifted = _lift_cut(ctx, cuts[-1])
            ctx.set_cut(lifted)
            cur = conj_up(cur)
            cuts.append(lifted)
            k += 1
        ctx.set_cut(cuts[-1])
        diff = cur - ctx.x()
        if not diff.terms:
            raise WrongClass("T is the identity; Abel's equation is trivial")
        direction = diff.dominant()[1].sign(ctx.precision)
        work = cur if direction > 0 else inverse(cur)
        V, tau = _solve_positive(work)
        return AbelSolution(V=V, tau=tau, direction=direction, k=k,
                            T_conj=cur, cuts=cuts)
    finally:
        ctx.cut = saved


def _solve_positive(S: Transseries) -> tuple[Transseries, Coefficient]:
    """V, tau with V o S = V + tau for S ~ x, S > x."""
    cls = classify(S)
    if cls.kind != DEEP:
        return abel_moderate(S), Coefficient.one()
    V2, R, tau, _ = reduce_deep(S)
    V3 = abel_purely_deep(R)
    if _is_identity_series(V2):
        return V3, tau
    return compose(V3, V2), tau


def _is_identity_series(S: Transseries) -> bool:
    return (len(S.terms) == 1 and S.terms[0][0] == mon_x(1)
            and S.terms[0][1] == Coefficient.one())


def frac_iterate(T: Transseries, s0, cut=None) -> Transseries:
    """T^[s0] = V^[-1] o (x + s0*dir*tau) o V, transported back through the
    conjugation tower."""
    ctx = T.ctx
    saved = ctx.cut
    try:
        if cut is not None:
            ctx.set_cut(cut)
        sol = abel_general(T)
        ctx.set_cut(sol.cuts[-1])
        sc = _as_coeff(s0) * sol.tau.scale(sol.direction)
        target = sol.V + ctx.constant(sc)
        out = compose(inverse(sol.V), target)
        for j in range(sol.k - 1, -1, -1):
            ctx.set_cut(sol.cuts[j])
            out = conj_down(out)
        return out
    finally:
        ctx.cut = saved


def verify_abel(V: Transseries, T: Transseries, direction: int = 1,
                tau: Coefficient | int = 1) -> Transseries:
    """compose(V, T) - V - dir*tau: the residual of Abel's equation."""
    ctx = T.ctx
    tau_c = _as_coeff(tau)
    return compose(V, T) - V - ctx.constant(tau_c.scale(direction))


def find_exponent(A: Transseries, B: Transseries):
    """The real s with B^[s] = A for commuting A, B (B != x).

    s is read off as the translation constant of V o A o V^[-1] where V
    solves Abel's equation for B; verified by recomputing B^[s]."""
    ctx = A.ctx
    comm = compose(A, B) - compose(B, A)
    if not comm.is_zero():
        raise NotCommuting(f"series do not commute: residual {comm!r}")
    sol = abel_general(B)
    saved = ctx.cut
    try:
        ctx.set_cut(sol.cuts[-1])
        A_k = A
        for _ in range(sol.k):
            A_k = conj_up(A_k)
        W = compose(compose(sol.V, A_k), inverse(sol.V))
        diff = W - ctx.x()
        const = diff.constant_term()
        rest = diff - ctx.constant(const)
        if not rest.is_zero():
            raise VerificationFailed(
                f"conjugated series is not a pure translation: {rest!r}")
        s_coeff = const * sol.tau.inverse()
        if sol.direction < 0:
            s_coeff = -s_coeff
    finally:
        ctx.cut = saved
    try:
        s_val = s_coeff.as_fraction()
    except Exception:
        s_val = s_coeff
    check = frac_iterate(B, s_val if isinstance(s_val, Fraction) else s_coeff)
    if not (check - A).is_zero():
        raise VerificationFailed(
            f"B^[{s_val}] does not reproduce A at this cut")
    return s_val
