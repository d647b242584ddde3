"""Session context: registry, budgets and series construction helpers.

A ``Context`` owns everything a computation shares: the generator registry,
the comparison cache, the active truncation cut and the configured budgets
(comparison precision, log-depth cap, iteration rounds).  Values built in
one context must not be mixed with another context's registry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cuts import CutSpec, DegreeCut, MonomialCut
from .exactnum import Coefficient, ExponentScalar
from .monomial import (
    GeneratorRegistry,
    Monomial,
    UNIT_MON,
    cmp_monomial,
    mon_height,
    mon_log,
    mon_x,
)

Q = Fraction


@dataclass
class Context:
    precision: int = 256
    depth_cap: int = 3
    max_rounds: int = 128
    registry: GeneratorRegistry = field(default_factory=GeneratorRegistry)
    cut: Optional[CutSpec] = None
    _cmp_cache: dict = field(default_factory=dict)

    # -- monomial helpers ------------------------------------------------------

    def cmp(self, m1: Monomial, m2: Monomial) -> int:
        return cmp_monomial(self.registry, m1, m2, self.precision,
                            self._cmp_cache)

    def height(self, m: Monomial) -> int:
        return mon_height(self.registry, m)

    def monomial_cut(self, m: Monomial) -> MonomialCut:
        return MonomialCut(self.registry, m, self.precision, self._cmp_cache)

    def set_cut(self, cut: CutSpec | Monomial | None):
        if isinstance(cut, Monomial):
            cut = self.monomial_cut(cut)
        self.cut = cut
        return cut

    def require_cut(self) -> CutSpec:
        if self.cut is None:
            raise ValueError("this operation needs a truncation cut; "
                             "call ctx.set_cut(...) first")
        return self.cut

    def check_depth(self, depth: int):
        from .errors import DepthCapExceeded
        if depth > self.depth_cap:
            raise DepthCapExceeded(
                f"log depth {depth} exceeds cap {self.depth_cap}")

    # -- series constructors (series imported lazily to avoid a cycle) ---------

    def series(self, terms, obound: Monomial | None = None):
        from .series import Transseries
        return Transseries.make(self, terms, obound)

    def zero(self, obound: Monomial | None = None):
        return self.series((), obound)

    def one(self):
        return self.constant(1)

    def x(self, power=1):
        return self.series(((mon_x(power), Coefficient.one()),))

    def log_atom(self, depth: int = 1):
        self.check_depth(depth)
        return self.series(((mon_log(depth), Coefficient.one()),))

    def constant(self, c):
        if isinstance(c, (int, Fraction)):
            c = Coefficient.rational(c)
        if c.is_zero():
            return self.zero()
        return self.series(((UNIT_MON, c),))

    def param(self, name: str):
        return self.constant(Coefficient.param(name))

    def monomial_series(self, m: Monomial, coeff=None):
        coeff = Coefficient.one() if coeff is None else coeff
        return self.series(((m, coeff),))

    def parse(self, text: str):
        from .parser import parse
        return parse(self, text)
