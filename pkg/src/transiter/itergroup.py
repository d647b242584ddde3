"""Common-support real iteration groups.

Writing T = x(1+U) and seeking Phi(s,x) = x(1 + sum alpha_g(s) g) over a
fixed support, the chain-rule identity  Phi_s(s,x) = Phi_x(s,x) Phi_s(0,x)
turns into one linear ODE per support monomial, driven by the convolution

    f_g(s) = sum w * alpha_g1(s) * alpha_g2'(0)
             over pairs with g in supp((x g1)' g2), weight w the coefficient.

Every contributing pair satisfies g1, g2 > g, except the moderate self-pair
(g, e) whose weight is the dominant constant b of g'/g ~ b/(x e); that term
moves to the left-hand side and contributes the integrating factor e^(abs).
The shallow slots integrate to polynomials in s, the moderate slots to
combinations of exp(q s) over the constant denominators (e^(ab) - 1); both
recursions close inside the exact coefficient ring.

The support is the closure of supp U under (g1, g2) -> supp((x g1)' g2)
intersected with the monomials above the cut; the closure of a shallow or
moderate support is again such a support, which keeps the worklist finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import derive
from .classify import Classification, DEEP, MODERATE, SHALLOW, classify
from .context import Context
from .cuts import CutSpec
from .errors import (
    ConstantNotRepresentable,
    DeepNoCommonSupport,
    DegenerateDenominator,
    WrongClass,
)
from .exactnum import Coefficient
from .monomial import Monomial, mon_x, mul_monomial
from .series import Transseries

Q = Fraction

_CLOSURE_LIMIT = 20000


@dataclass
class IterationGroup:
    """Phi(s,x) = x(1 + sum alpha_g(s) g) with common support."""

    eratio: tuple[Coefficient, Monomial]
    support: list[Monomial]                  # descending, max is e
    alphas: dict[Monomial, Coefficient]      # functions of s
    classification: Classification
    cut: CutSpec
    series_T: Transseries

    def alpha(self, g: Monomial) -> Coefficient:
        return self.alphas.get(g, Coefficient.zero())

    def evaluate(self, s0) -> Transseries:
        """Phi(s0, x), truncated to the group's cut."""
        ctx = self.series_T.ctx
        x = ctx.x()
        terms = [(mon_x(1), Coefficient.one())]
        for g in self.support:
            a = self.alphas[g].subst_s(s0)
            terms.append((mul_monomial(mon_x(1), g), a))
        ob = self.cut.obound()
        if ob is not None:
            ob = mul_monomial(mon_x(1), ob)
        return Transseries.make(ctx, terms, ob)

    def phi_symbolic(self) -> Transseries:
        """Phi(s, x) with s left symbolic in the coefficients."""
        ctx = self.series_T.ctx
        terms = [(mon_x(1), Coefficient.one())]
        for g in self.support:
            terms.append((mul_monomial(mon_x(1), g), self.alphas[g]))
        return Transseries.make(ctx, terms)


# ---------------------------------------------------------------------------
# support machinery
# ---------------------------------------------------------------------------

def _xg_derivative_support(ctx: Context, g1: Monomial) -> Transseries:
    """(x*g1)' as a series."""
    xg = ctx.monomial_series(mul_monomial(mon_x(1), g1))
    return derive(xg)


def closure_support(ctx: Context, suppU: list[Monomial],
                    cut: CutSpec) -> list[Monomial]:
    """Least superset of suppU closed under (g1,g2) -> supp((x g1)' g2),
    intersected with the monomials above the cut.  Descending order."""
    members: set[Monomial] = set()
    frontier = [g for g in suppU if not cut.drops(g)]
    deriv_cache: dict[Monomial, Transseries] = {}
    while frontier:
        fresh = {g for g in frontier if g not in members}
        if not fresh:
            break
        members.update(fresh)
        if len(members) > _CLOSURE_LIMIT:
            raise MemoryError(
                f"support closure exceeded {_CLOSURE_LIMIT} monomials; "
                "is the input really shallow/moderate at this cut?")
        frontier = []
        snapshot = list(members)
        for g1 in fresh:
            if g1 not in deriv_cache:
                deriv_cache[g1] = _xg_derivative_support(ctx, g1)
        for g1 in snapshot:
            for g2 in (snapshot if g1 in fresh else fresh):
                dsup = deriv_cache.get(g1)
                if dsup is None:
                    dsup = deriv_cache[g1] = _xg_derivative_support(ctx, g1)
                for mm, _ in dsup.terms:
                    cand = mul_monomial(mm, g2)
                    if cand not in members and not cut.drops(cand):
                        frontier.append(cand)
    out = sorted(members, key=_desc_key(ctx), reverse=True)
    return out


def _desc_key(ctx):
    class K:
        __slots__ = ("m",)

        def __init__(self, m):
            self.m = m

        def __lt__(self, other):
            return ctx.cmp(self.m, other.m) < 0
    return K


def pairs_for(ctx: Context, g: Monomial,
              support: list[Monomial]) -> list[tuple[Monomial, Monomial, Coefficient]]:
    """All (g1, g2, weight) with g in supp((x g1)' g2); the weight is the
    exact coefficient of g there.  Matches a brute-force double loop."""
    out = []
    deriv_cache: dict[Monomial, Transseries] = {}
    for g1 in support:
        d = deriv_cache.get(g1)
        if d is None:
            d = deriv_cache[g1] = _xg_derivative_support(ctx, g1)
        for g2 in support:
            # supp((x g1)' g2) = supp((x g1)') * g2 termwise
            for mm, w in d.terms:
                if mul_monomial(mm, g2) == g:
                    out.append((g1, g2, w))
    merged: dict[tuple[Monomial, Monomial], Coefficient] = {}
    for g1, g2, w in out:
        key = (g1, g2)
        merged[key] = merged.get(key, Coefficient.zero()) + w
    return [(g1, g2, w) for (g1, g2), w in merged.items() if not w.is_zero()]


# ---------------------------------------------------------------------------
# the coefficient recursions
# ---------------------------------------------------------------------------

def _recursion(ctx: Context, T: Transseries, cut: CutSpec,
               cls: Classification) -> IterationGroup:
    from .calculus import logderiv_monomial
    from .classify import near_identity_part
    from .monomial import inv_monomial
    U = near_identity_part(T)
    a_coeff, e_mon = cls.first_ratio
    support = closure_support(ctx, [m for m, _ in U.terms], cut)
    threshold = inv_monomial(mul_monomial(mon_x(1), e_mon))
    a_val = None
    if cls.kind == MODERATE:
        try:
            a_val = a_coeff.as_fraction()
        except ConstantNotRepresentable:
            raise ConstantNotRepresentable(
                "the moderate recursion needs a rational first-ratio "
                f"coefficient, got {a_coeff!r}") from None

    def witness_b(g: Monomial):
        """b with g'/g ~ b/(x e) when g sits on the moderate boundary."""
        dag = logderiv_monomial(ctx, g)
        if not dag.terms:
            return None
        side = ctx.cmp(dag.mag(), threshold)
        assert side <= 0, f"deep monomial {g!r} inside a common support"
        if side < 0:
            return None
        return dag.dominant()[1].as_fraction()

    alphas: dict[Monomial, Coefficient] = {}
    dalphas0: dict[Monomial, Coefficient] = {}
    for g in support:
        pairs = pairs_for(ctx, g, support)
        b = witness_b(g)
        f = Coefficient.zero()
        for g1, g2, w in pairs:
            if b is not None and g1 == g and g2 == e_mon:
                # the moderate self-term: folded into the integrating factor
                assert w == Coefficient.rational(b), \
                    f"self-pair weight {w!r} != witness constant {b}"
                continue
            assert ctx.cmp(g1, g) > 0 and ctx.cmp(g2, g) > 0, \
                f"recursion pair ({g1!r},{g2!r}) not above {g!r}"
            f = f + w * alphas[g1] * dalphas0[g2]
        c_g = U.coefficient(g)
        if b is None:
            # alpha(s) = s (c_g - int_0^1 f) + int_0^s f
            int_s = f.integrate_s("s")
            int_1 = f.integrate_s("1")
            alpha = Coefficient.s_var() * (c_g - int_1) + int_s
        else:
            ab = a_val * b
            if ab == 0:
                raise DegenerateDenominator("moderate witness with ab = 0")
            # alpha(s) = (e^{ab s}-1)/(e^{ab}-1) (c_g - int_0^1 e^{ab(1-u)} f)
            #            + int_0^s e^{ab(s-u)} f(u) du
            fm = f * Coefficient.exp_s(-ab)
            int_s = fm.integrate_s("s") * Coefficient.exp_s(ab)
            int_1 = fm.integrate_s("1") * Coefficient.euler_pow(ab)
            den = Coefficient.euler_pow(ab) - Coefficient.one()
            pref = (Coefficient.exp_s(ab) - Coefficient.one()) * den.inverse()
            alpha = pref * (c_g - int_1) + int_s
        alphas[g] = alpha
        dalphas0[g] = alpha.d_ds().at_s0()
    return IterationGroup(
        eratio=(a_coeff, e_mon),
        support=support,
        alphas=alphas,
        classification=cls,
        cut=cut,
        series_T=T,
    )


def group_shallow(T: Transseries, cut: CutSpec | Monomial | None = None) -> IterationGroup:
    """Common-support group for shallow T; every alpha is a polynomial in s."""
    ctx = T.ctx
    cut = _resolve_cut(ctx, cut)
    cls = classify(T)
    if cls.kind != SHALLOW:
        raise WrongClass(f"group_shallow on a {cls.kind} series")
    return _recursion(ctx, T, cut, cls)


def group_moderate(T: Transseries, cut: CutSpec | Monomial | None = None) -> IterationGroup:
    """Common-support group for moderate (or shallow) T."""
    ctx = T.ctx
    cut = _resolve_cut(ctx, cut)
    cls = classify(T)
    if cls.kind == DEEP:
        raise WrongClass("group_moderate on a deep series")
    return _recursion(ctx, T, cut, cls)


def build_group(T: Transseries, cut: CutSpec | Monomial | None = None) -> IterationGroup:
    """Classify and dispatch; deep input raises with the proof witnesses."""
    ctx = T.ctx
    cut = _resolve_cut(ctx, cut)
    from .classify import near_identity_part
    U = near_identity_part(T)
    if not U.terms:
        # T = x: the trivial group
        return IterationGroup(
            eratio=(Coefficient.zero(), mon_x(-1)),
            support=[],
            alphas={},
            classification=Classification(
                kind=SHALLOW, purely_deep=False,
                first_ratio=(Coefficient.zero(), mon_x(-1))),
            cut=cut,
            series_T=T,
        )
    cls = classify(T)
    if cls.kind == DEEP:
        witness = cls.deep_witnesses[0]
        obstruction = _deep_obstruction(ctx, witness, cls.first_ratio[1])
        raise DeepNoCommonSupport(
            f"deep: no common-support iteration group; witness {witness!r}",
            witness=witness, obstruction=obstruction)
    return _recursion(ctx, T, cut, cls)


def _deep_obstruction(ctx: Context, witness: Monomial, e_mon: Monomial):
    """x * mag((x m)' e), the monomial whose coefficient equation forces
    alpha_m = 0 in the impossibility argument."""
    d = derive(ctx.monomial_series(mul_monomial(mon_x(1), witness)))
    prod = d * ctx.monomial_series(e_mon)
    if not prod.terms:
        return None
    return mul_monomial(mon_x(1), prod.mag())


def _resolve_cut(ctx: Context, cut) -> CutSpec:
    if cut is None:
        return ctx.require_cut()
    if isinstance(cut, Monomial):
        return ctx.monomial_cut(cut)
    return cut


def evaluate_group(G: IterationGroup, s0) -> Transseries:
    return G.evaluate(s0)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def pde_residual(G: IterationGroup) -> Transseries:
    """x sum alpha_g'(s) g  -  Phi_x(s,x) Phi_s(0,x), as an s-symbolic
    series; zero above the cut when the recursion is consistent."""
    ctx = G.series_T.ctx
    lhs_terms = []
    phi2 = ctx.one()
    phi1_terms = []
    for g in G.support:
        alpha = G.alphas[g]
        dalpha = alpha.d_ds()
        lhs_terms.append((mul_monomial(mon_x(1), g), dalpha))
        phi1_terms.append((mul_monomial(mon_x(1), g), dalpha.at_s0()))
        xg = ctx.monomial_series(mul_monomial(mon_x(1), g))
        phi2 = phi2 + derive(xg).scalar_mul(alpha)
    lhs = Transseries.make(ctx, lhs_terms)
    phi1 = Transseries.make(ctx, phi1_terms)
    return lhs - phi2 * phi1
