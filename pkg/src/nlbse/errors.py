"""Exception hierarchy shared by all modules."""


class NLBSEError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NLBSEError, ValueError):
    """An elementary function or map was evaluated outside its domain."""


class BranchPoint(DomainError):
    """Evaluation hit a branch point (e.g. sqrt at 0) where derivatives blow up."""


class DenominatorVanishes(DomainError):
    """A volatility-model denominator is numerically zero (formula pole)."""


class ConstraintViolation(NLBSEError, ValueError):
    """Family constants or model parameters break a row constraint."""


class DomainViolation(DomainError):
    """A catalog family was evaluated outside its validity domain."""


class EmptyDomain(NLBSEError):
    """Every node of a scan grid lies outside the validity domain."""


class NotInSpan(NLBSEError):
    """A sampled Lie bracket is not a combination of the basis fields."""


class NegativeRadicand(NLBSEError, ValueError):
    """A reduced ODE left its real-solution region."""

    def __init__(self, value, message=None):
        self.value = value
        super().__init__(message or f"negative radicand {value!r}")


class StepSizeUnderflow(NLBSEError):
    """Adaptive integration could not make progress."""


class RangeExceeded(NLBSEError, ValueError):
    """A lift grid maps outside the trajectory's similarity-variable range."""


class SingularTau(NLBSEError, ValueError):
    """A parametric tau range touches a singular parameter value."""


class SubstitutionDomain(NLBSEError, ValueError):
    """Sign/radicand conditions of a substitution fail along a trajectory."""


class Blowup(NLBSEError):
    """The finite-difference solution diverged."""


class CornerMismatch(NLBSEError, ValueError):
    """Initial and boundary data disagree at a space-time corner."""


class IllPosed(NLBSEError, ValueError):
    """The linearised diffusion changes sign on the box, so no time direction is stable."""
