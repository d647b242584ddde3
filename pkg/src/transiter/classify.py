"""First-ratio extraction and the shallow/moderate/deep classifier.

For T = x(1+U) with U small and U ~ a*e, each support monomial g of U is
placed by comparing the magnitude of g'/g against 1/(x*e):

* strictly below for every g        -> shallow
* never above, somewhere equal      -> moderate (witnesses carry the
                                       dominant constants b of g'/g ~ b/(x e))
* above for some g                  -> deep (purely deep when every support
                                       monomial other than e lands above)

The classifier reads the *visible* truncated support.  A series bound can
always hide deeper monomials (smallness pushes logarithmic derivatives up,
never down), so the classification of a bounded series is a statement about
the written window; ``obound_caveat`` records when a bound was present.
Only a bound at or above the first ratio is refused outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .calculus import logderiv_monomial
from .compose import conj_up
from .context import Context
from .errors import (
    IdentitySeries,
    NotNearIdentity,
    SignUndecidable,
    TruncationTooCoarse,
    Unstabilized,
)
from .exactnum import Coefficient
from .monomial import Monomial, UNIT_MON, inv_monomial, mon_x, mul_monomial
from .series import Transseries, invert_unit

Q = Fraction

SHALLOW = "shallow"
MODERATE = "moderate"
DEEP = "deep"


@dataclass
class Classification:
    kind: str
    purely_deep: bool
    first_ratio: tuple[Coefficient, Monomial]
    moderate_witnesses: list[tuple[Monomial, Q]] = field(default_factory=list)
    deep_witnesses: list[Monomial] = field(default_factory=list)
    obound_caveat: bool = False

    def describe(self) -> str:
        a, e = self.first_ratio
        bits = [f"{self.kind}; first ratio ({a!r}, {e!r})"]
        if self.moderate_witnesses:
            ws = ", ".join(f"{g!r} (b={b})"
                           for g, b in self.moderate_witnesses)
            bits.append(f"witnesses: {ws}")
        if self.deep_witnesses:
            ws = ", ".join(repr(g) for g in self.deep_witnesses)
            bits.append(f"deep witnesses: {ws}")
        if self.purely_deep:
            bits.append("purely deep")
        if self.obound_caveat:
            bits.append("classified on the truncated window")
        return "; ".join(bits)


def near_identity_part(T: Transseries) -> Transseries:
    """U with T = x(1+U); checks the dominant term is exactly x."""
    if not T.terms:
        raise NotNearIdentity("zero series")
    m0, c0 = T.dominant()
    if m0 != mon_x(1) or not (c0 == Coefficient.one()):
        raise NotNearIdentity(
            f"dominant term is {c0!r}*{m0!r}, need exactly x")
    return (T - T.ctx.x()) * T.ctx.x(-1)


def first_ratio(T: Transseries) -> tuple[Coefficient, Monomial]:
    """(a, e) with U ~ a*e for T = x(1+U)."""
    U = near_identity_part(T)
    if not U.terms:
        raise IdentitySeries("T = x has no first ratio")
    e, a = U.dominant()
    return a, e


def classify(T: Transseries) -> Classification:
    ctx = T.ctx
    U = near_identity_part(T)
    if not U.terms:
        raise IdentitySeries("T = x is the identity")
    e, a = U.dominant()
    if U.obound is not None and ctx.cmp(U.obound, e) >= 0:
        raise TruncationTooCoarse(
            "O-bound at or above the first ratio; nothing to classify")
    threshold = inv_monomial(mul_monomial(mon_x(1), e))   # 1/(x e)
    moderate: list[tuple[Monomial, Q]] = []
    deep: list[Monomial] = []
    shallow_count = 0
    non_e_deep = 0
    non_e_total = 0
    for g, _ in U.terms:
        dag = logderiv_monomial(ctx, g)
        side = -1 if not dag.terms else ctx.cmp(dag.mag(), threshold)
        if g != e:
            non_e_total += 1
            if side > 0:
                non_e_deep += 1
        if side < 0:
            shallow_count += 1
        elif side == 0:
            nmon, lam = dag.dominant()
            try:
                b = lam.as_fraction()
            except Exception as ex:
                raise SignUndecidable(
                    f"moderate witness constant for {g!r} is not numeric: "
                    f"{lam!r}") from ex
            moderate.append((g, b))
        else:
            deep.append(g)
    if deep:
        kind = DEEP
    elif moderate:
        kind = MODERATE
    else:
        kind = SHALLOW
    return Classification(
        kind=kind,
        purely_deep=(non_e_deep == non_e_total),
        first_ratio=(a, e),
        moderate_witnesses=moderate,
        deep_witnesses=deep,
        obound_caveat=U.obound is not None,
    )


# ---------------------------------------------------------------------------
# exponentiality and the conjugation-extended classifier
# ---------------------------------------------------------------------------

def _is_near_identity(T: Transseries) -> bool:
    if not T.terms:
        return False
    m0, c0 = T.dominant()
    return m0 == mon_x(1) and c0 == Coefficient.one()


def exponentiality(T: Transseries, budget: int | None = None) -> int:
    """The integer p with log^[k] o T o exp^[k] ~ exp_p for large k.

    Probes by repeated upward conjugation: a pure-power or scaled-x dominant
    keeps descending toward ~x (p = 0); a stabilized exponential dominant
    reports its height; a stabilized log-atom dominant reports negative
    depth."""
    ctx = T.ctx
    budget = budget if budget is not None else ctx.depth_cap + 3
    cur = T
    prev_sig = None
    for _ in range(budget + 1):
        if _is_near_identity(cur):
            return 0
        m0, _ = cur.dominant()
        h = ctx.height(m0)
        if h > 0:
            sig = ("exp", h, m0)
            if sig == prev_sig:
                return h
        elif not m0.exppart and m0.logpart and m0.max_log_depth() > 0 \
                and 0 not in m0.log_map():
            sig = ("log", m0.max_log_depth(), m0)
            if sig == prev_sig:
                return -m0.max_log_depth()
        else:
            sig = ("power", 0, m0)
        prev_sig = sig
        cur = conj_up(cur)
    raise Unstabilized(
        f"exponentiality probe exhausted {budget} conjugations")


def classify_extended(T: Transseries,
                      budget: int | None = None) -> tuple[int, Classification]:
    """Conjugate upward until ~x, then classify; returns (k, classification).

    Defined for exponentiality-zero series."""
    ctx = T.ctx
    budget = budget if budget is not None else ctx.depth_cap + 3
    cur = T
    for k in range(budget + 1):
        if _is_near_identity(cur):
            return k, classify(cur)
        cur = conj_up(cur)
    raise Unstabilized(
        f"series did not normalize to ~x within {budget} conjugations")
