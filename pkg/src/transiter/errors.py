"""Exception taxonomy for the transiter engine.

Every failure mode that callers are expected to branch on gets its own
class.  ``TransiterError`` is the common base; the CLI maps subclasses to
exit codes (classification rejection, undecidable comparison, exhausted
budget).
"""

from __future__ import annotations


class TransiterError(Exception):
    """Base class for all engine errors."""


# --- undecidability / numeric ------------------------------------------------

class OrderUndecidable(TransiterError):
    """Interval refinement hit the precision cap without separating values.

    Signals an ill-conditioned constant-basis declaration, not a bug.
    """


class SignUndecidable(TransiterError):
    """Sign of a coefficient could not be determined (parameters unbound,
    or refinement exhausted)."""


class UnboundParameter(TransiterError):
    """Numeric evaluation encountered a parameter without a binding."""


# --- representability ---------------------------------------------------------

class ConstantNotRepresentable(TransiterError):
    """A constant (e.g. exp of a coefficient) has no closed form in the
    declared constant group."""


class LogConstantNotDeclared(ConstantNotRepresentable):
    """log of a constant requires a log-symbol that is not available."""


class ExponentProductUndefined(TransiterError):
    """Product of two exponent-basis constants has no declared image."""


class NonInvertibleCoefficient(TransiterError):
    """Coefficient has no inverse in the ring (it involves parameters or s)."""


class NonConstantLeadingCoefficient(TransiterError):
    """Operation requires a numeric (parameter-free) leading coefficient."""


class NegativeBase(TransiterError):
    """pow/log of a series whose leading coefficient is not positive."""


class NotPurelyLarge(TransiterError):
    """Exponent series handed to the monomial group has a small part."""


# --- structural preconditions --------------------------------------------------

class ZeroSeries(TransiterError):
    """Operation undefined on the zero series."""


class NotLargePositive(TransiterError):
    """Composition argument must be a large positive series."""


class NotNearIdentity(TransiterError):
    """Classifier input must have dominant term exactly x."""


class IdentitySeries(TransiterError):
    """Classifier input is exactly x; there is no first ratio."""


class WrongClass(TransiterError):
    """Solver invoked on a series of the wrong shallow/moderate/deep class."""


class DegenerateDenominator(TransiterError):
    """e^(ab) = 1 with ab != 0 inside the moderate recursion (guarded)."""


class DeepNoCommonSupport(TransiterError):
    """No common-support iteration group exists; carries the witness."""

    def __init__(self, message, witness=None, obstruction=None):
        super().__init__(message)
        self.witness = witness
        self.obstruction = obstruction


class NotPurelyDeepNormalForm(TransiterError):
    """Input to the purely-deep solver is not x +- tau + (purely deep part)."""


class ReductionNotPurelyDeep(TransiterError):
    """Conjugated remainder failed the purely-deep verification at this cut."""


class NotCommuting(TransiterError):
    """Exponent recovery requires commuting series."""


class VerificationFailed(TransiterError):
    """A round-trip verification did not hold at the working cut."""


# --- budgets -------------------------------------------------------------------

class BudgetExhausted(TransiterError):
    """Base for all budget-related failures."""


class DepthCapExceeded(BudgetExhausted):
    """Logarithmic depth would exceed the configured cap."""


class NonIntegrableAtCut(BudgetExhausted):
    """Asymptotic by-parts integration failed to descend below the cut."""


class NoProgress(BudgetExhausted):
    """Iterative refinement stopped reducing the residual."""


class NoContraction(BudgetExhausted):
    """Fixed-point round failed the contraction check (A o T < A)."""


class Unstabilized(BudgetExhausted):
    """Exponentiality probe exhausted its conjugation budget."""


class TruncationTooCoarse(TransiterError):
    """The series O-bound swallows the region the operation must inspect."""
