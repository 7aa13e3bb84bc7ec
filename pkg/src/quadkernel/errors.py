"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class;
plain programming errors stay as built-in exceptions.
"""


class QuadkernelError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QuadkernelError, ValueError):
    """An argument violates a mathematical precondition (wrong sign, wrong
    range, point on a branch slit, dimension mismatch, ...)."""


class BudgetExceededError(QuadkernelError):
    """An adaptive routine hit its evaluation or iteration budget before
    reaching the requested tolerance."""


class NonFiniteIntegrandError(QuadkernelError):
    """The integrand returned NaN or +-inf at an interior quadrature node."""


class TailBoundError(QuadkernelError):
    """The sampled decay of a semi-infinite integrand is inconsistent with
    the declared decay hint, so no certified tail bound is available."""


class FormDisagreementError(QuadkernelError):
    """Two closed-form or integral representations of the same quantity
    disagree beyond their combined error estimates."""


class RepresentationDisagreementError(FormDisagreementError):
    """Kernel cross-check failure: two admissible kernel representations
    disagree beyond 10x the sum of their error estimates."""


class WitnessNotFoundError(QuadkernelError):
    """The supercritical sign-change search exhausted its range without a
    certified negative value."""


class SolverError(QuadkernelError):
    """A linear or projected-gradient solve failed to converge."""
