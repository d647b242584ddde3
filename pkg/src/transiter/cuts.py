"""Truncation policies.

A cut decides which monomials a computation keeps.  Two kinds are supported,
matching the two ways the worked examples truncate:

* ``MonomialCut(m)`` keeps exactly the monomials asymptotically above m.
  This is the O(m) style and works whenever the support is linearly
  truncatable (every finitely generated grid of order type omega).

* ``DegreeCut(bound)`` keeps monomials whose weighted grid degree is at
  most ``bound`` (generator exponents weighted 1 by default, log-power
  directions weighted 0).  Supports of order type omega^2 and beyond have
  no finite upward-closed slices, so a degree window is the honest finite
  realization there; the trade-off is documented in the README.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Protocol

from .monomial import GeneratorRegistry, Monomial, cmp_monomial

Q = Fraction


class CutSpec(Protocol):
    def drops(self, m: Monomial) -> bool:
        """True when the term at m is below the cut and must be absorbed."""

    def obound(self) -> Optional[Monomial]:
        """Representative O(.) monomial for display, when one exists."""

    def describe(self) -> dict:
        """JSON-ready description (serialized with every output)."""


class MonomialCut:
    def __init__(self, reg: GeneratorRegistry, monomial: Monomial,
                 max_prec: int = 256, cache: dict | None = None):
        self.reg = reg
        self.monomial = monomial
        self.max_prec = max_prec
        self.cache = cache

    def drops(self, m: Monomial) -> bool:
        return cmp_monomial(self.reg, m, self.monomial,
                            self.max_prec, self.cache) <= 0

    def obound(self) -> Optional[Monomial]:
        return self.monomial

    def describe(self) -> dict:
        return {"kind": "monomial", "monomial": repr(self.monomial)}

    def __repr__(self):
        return f"MonomialCut({self.monomial!r})"


class DegreeCut:
    def __init__(self, bound, weights: dict[int, Q] | None = None,
                 default_weight=1, log_weights: dict[int, Q] | None = None):
        self.bound = Q(bound)
        self.weights = dict(weights or {})
        self.default_weight = Q(default_weight)
        self.log_weights = dict(log_weights or {})

    def degree(self, m: Monomial) -> Q:
        deg = Q(0)
        for g, q in m.exppart:
            deg += q * self.weights.get(g, self.default_weight)
        for d, es in m.logpart:
            w = self.log_weights.get(d)
            if w and es.is_rational():
                deg += -es.as_fraction() * w
        return deg

    def drops(self, m: Monomial) -> bool:
        return self.degree(m) > self.bound

    def obound(self) -> Optional[Monomial]:
        return None

    def describe(self) -> dict:
        return {"kind": "degree", "bound": str(self.bound),
                "weights": {str(k): str(v) for k, v in self.weights.items()},
                "default_weight": str(self.default_weight)}

    def __repr__(self):
        return f"DegreeCut({self.bound})"
