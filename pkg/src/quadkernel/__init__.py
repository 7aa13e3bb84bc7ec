"""quadkernel: cosine-transform kernels for corner-constrained quadratic
minimization on the positive quadrant.

The library evaluates the minimizer kernel of the energy

    integral (u_xy^2 + a u_x^2 + c u_y^2 + d u^2) dx dy,   u(0,0) = 1,

by several independent representations, classifies the sharp positivity
threshold d <= a*c (and its n-dimensional product analogue), locates
supercritical sign-change witnesses through the branch-cut / boundary-layer
machinery, and cross-checks everything against a finite-difference
minimization oracle, corner-capacity estimates, and the decaying evolution
semigroup.
"""

from .errors import (
    BudgetExceededError,
    DomainError,
    FormDisagreementError,
    NonFiniteIntegrandError,
    QuadkernelError,
    RepresentationDisagreementError,
    SolverError,
    TailBoundError,
    WitnessNotFoundError,
)
from .numerics import QuadResult, Tolerance

__version__ = "0.1.0"
