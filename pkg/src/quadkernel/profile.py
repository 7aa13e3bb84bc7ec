"""The universal boundary-layer profile H and the layer comparison.

On the curve y = rho/sqrt(x) the supercritical normalized kernel satisfies

    e^x sqrt(x) K_m(x, rho/sqrt(x))  ->  (2/(pi sqrt(2(m-1)))) H(A_m rho),

with A_m = sqrt((m-1)/2) and the profile

    H(alpha) = int_0^inf e^{-u} u^{-1/2} cos(alpha/sqrt(u)) du.

H(0) = sqrt(pi) > 0 while H(pi) < -3/200, so the layer forces a sign change
for every m > 1.  This module evaluates H by two integral forms, provides
the steepest-descent asymptotic, scans for sign changes, and measures the
finite-x distance to the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, DomainError, FormDisagreementError
from .kernel2d import _branchcut_scaled
from .numerics import QuadResult, Tolerance, integrate_adaptive, integrate_oscillatory

__all__ = [
    "LayerScale",
    "h_value",
    "h_value_result",
    "h_asymptotic",
    "h_zero_scan",
    "ZeroBracket",
    "layer_limit",
    "layer_error",
]

_DEFAULT_TOL = Tolerance()

# Stretched-exponential constants of the large-alpha saddle expansion
# H(alpha) ~ (2 sqrt(pi)/sqrt(3)) e^{-SIGMA alpha^(2/3)} cos(TAU alpha^(2/3)).
SIGMA = 3.0 / 2.0 ** (5.0 / 3.0)
TAU = 3.0 * math.sqrt(3.0) / 2.0 ** (5.0 / 3.0)

_FORM_AGREEMENT = 1e-8

# Above this point the real-axis forms of H lose relative accuracy to
# cancellation (|H| ~ e^{-SIGMA alpha^(2/3)} under an O(1/alpha) envelope),
# so both forms switch to exact rotated-contour parametrizations.
_ROTATE_ALPHA = 8.0


@dataclass(frozen=True)
class LayerScale:
    """Derived layer constants of one supercritical normalized parameter m."""

    m: float
    A_m: float = field(init=False)
    L_m: float = field(init=False)
    limit_prefactor: float = field(init=False)

    def __post_init__(self):
        if not self.m > 1:
            raise DomainError(f"layer scale needs m > 1, got {self.m}")
        object.__setattr__(self, "A_m", math.sqrt((self.m - 1.0) / 2.0))
        object.__setattr__(self, "L_m", math.pi * math.sqrt(2.0 / (self.m - 1.0)))
        object.__setattr__(self, "limit_prefactor",
                           2.0 / (math.pi * math.sqrt(2.0 * (self.m - 1.0))))
        # A_m * L_m = pi exactly: the first negative point of H sits at the
        # end of one layer period.
        assert abs(self.A_m * self.L_m - math.pi) < 1e-13


def _h_first_form(alpha: float, tol: Tolerance) -> QuadResult:
    """H via the defining integral, split at u = alpha^2.

    Outside the split the phase alpha/sqrt(u) is below one radian and u = s^2
    removes the endpoint weight; inside, u = alpha^2/w^2 turns the compressed
    oscillation into unit-frequency blocks.
    """
    s_hi = math.sqrt(45.0) + 1.0

    def outer(s):
        s = np.asarray(s, dtype=float)
        return 2.0 * np.exp(-s * s) * np.cos(alpha / s)

    if alpha == 0.0:
        out = integrate_adaptive(lambda s: 2.0 * np.exp(-s * s), 0.0, s_hi,
                                 tol.scaled(0.5))
        return out

    out = integrate_adaptive(outer, alpha, max(s_hi, alpha + 1.0), tol.scaled(0.5))

    def inner_g(w):
        w = np.asarray(w, dtype=float)
        return 2.0 * alpha * np.exp(-(alpha / w) ** 2) / (w * w)

    inner = integrate_oscillatory(inner_g, 1.0, tol.scaled(0.5), start=1.0)
    return QuadResult(out.value + inner.value,
                      out.abs_error_estimate + inner.abs_error_estimate,
                      out.evaluations + inner.evaluations)


def _h_second_form(alpha: float, tol: Tolerance) -> QuadResult:
    """H via the substituted form 2 alpha int t^-2 e^{-alpha^2/t^2} cos t dt."""
    if alpha == 0.0:
        raise DomainError("the substituted form needs alpha > 0")

    def g(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = 2.0 * alpha * np.exp(-(alpha / tp) ** 2) / (tp * tp)
        return out

    return integrate_oscillatory(g, 1.0, tol)


def _h_rotated(alpha: float, tol: Tolerance, swap: bool = False) -> QuadResult:
    """H through the steepest-descent rotation of the defining integral.

    With u = w^2 the integral is Re[ 2 int_0^inf e^{-w^2 + i alpha/w} dw ];
    the integrand decays both toward 0 and infinity on the ray arg w = -pi/6
    through the saddle, so rotating gives the cancellation-free exact form

        H(alpha) = int_0^inf e^{-r^2/2 - alpha/(2r)}
                   (sqrt(3) cos(phi) + sin(phi)) dr,
        phi(r) = (sqrt(3)/2) (r^2 + alpha/r).

    The envelope peaks at r = (alpha/2)^(1/3) with value e^{-SIGMA alpha^(2/3)},
    which is factored out so the quadrature sees an O(1) integrand.  ``swap``
    selects the r -> alpha/r parametrization (the rotation of the substituted
    form), numerically a distinct integrand for the agreement check.
    """
    if not alpha > 0:
        raise DomainError("rotated form needs alpha > 0")
    e0 = SIGMA * alpha ** (2.0 / 3.0)
    depth = e0 + 42.0
    sqrt3 = math.sqrt(3.0)

    if not swap:
        r_lo = alpha / (2.0 * depth)
        r_hi = math.sqrt(2.0 * depth)

        def g(r):
            r = np.asarray(r, dtype=float)
            expo = e0 - 0.5 * r * r - 0.5 * alpha / r
            phi = 0.5 * sqrt3 * (r * r + alpha / r)
            return np.exp(expo) * (sqrt3 * np.cos(phi) + np.sin(phi))
    else:
        r_lo = alpha / math.sqrt(2.0 * depth)
        r_hi = 2.0 * depth

        def g(r):
            r = np.asarray(r, dtype=float)
            expo = e0 - 0.5 * (alpha / r) ** 2 - 0.5 * r
            phi = 0.5 * sqrt3 * ((alpha / r) ** 2 + r)
            return alpha * np.exp(expo) * (sqrt3 * np.cos(phi) + np.sin(phi)) / (r * r)

    res = integrate_adaptive(g, r_lo, r_hi, tol, initial_panels=32)
    scale = math.exp(-e0)
    return QuadResult(res.value * scale, res.abs_error_estimate * scale,
                      res.evaluations)


def h_value_result(alpha: float, tol: Tolerance | None = None) -> QuadResult:
    """H(alpha) with error estimate; both integral forms must agree to 1e-8."""
    tol = tol or _DEFAULT_TOL
    if not (math.isfinite(alpha) and alpha >= 0):
        raise DomainError(f"h_value needs alpha >= 0, got {alpha}")
    if alpha >= _ROTATE_ALPHA:
        first = _h_rotated(alpha, tol)
    else:
        first = _h_first_form(alpha, tol)
    if alpha == 0.0:
        second_value = math.sqrt(math.pi)  # Gamma(1/2), the exact limit
        second_err = 0.0
        evals = first.evaluations
    else:
        if alpha >= _ROTATE_ALPHA:
            second = _h_rotated(alpha, tol, swap=True)
        else:
            second = _h_second_form(alpha, tol)
        second_value = second.value
        second_err = second.abs_error_estimate
        evals = first.evaluations + second.evaluations
    gap = abs(first.value - second_value)
    if gap > _FORM_AGREEMENT + first.abs_error_estimate + second_err:
        raise FormDisagreementError(
            f"H({alpha}): integral forms disagree by {gap:.3e}")
    return QuadResult(first.value,
                      max(first.abs_error_estimate, gap), evals)


def h_value(alpha: float, tol: Tolerance | None = None) -> float:
    return h_value_result(alpha, tol).value


def h_asymptotic(alpha: float) -> float:
    """Leading saddle-point term of H for large alpha (diagnostic only)."""
    if not alpha > 0:
        raise DomainError(f"h_asymptotic needs alpha > 0, got {alpha}")
    a23 = alpha ** (2.0 / 3.0)
    return (2.0 * math.sqrt(math.pi) / math.sqrt(3.0)
            * math.exp(-SIGMA * a23) * math.cos(TAU * a23))


@dataclass(frozen=True)
class ZeroBracket:
    """A bisection-refined sign change of H; ``uncertain`` flags brackets
    where |H| at an endpoint is inside its quadrature error."""

    lo: float
    hi: float
    uncertain: bool = False


def h_zero_scan(alpha_max: float, step: float,
                tol: Tolerance | None = None) -> list:
    """Brackets of sign changes of H on (0, alpha_max], refined to width 1e-6."""
    tol = tol or _DEFAULT_TOL
    if not alpha_max > 0:
        raise DomainError("alpha_max must be positive")
    if not 0 < step <= 0.1:
        raise DomainError(f"step must lie in (0, 0.1], got {step}")
    grid = np.arange(0.0, alpha_max + 0.5 * step, step)
    vals = [h_value_result(float(a), tol) for a in grid]
    out = []
    for (a0, r0), (a1, r1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if r0.value == 0.0 or r0.value * r1.value >= 0.0:
            continue
        uncertain = (abs(r0.value) <= r0.abs_error_estimate
                     or abs(r1.value) <= r1.abs_error_estimate)
        lo, hi = float(a0), float(a1)
        flo = r0.value
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            rm = h_value_result(mid, tol)
            if abs(rm.value) <= rm.abs_error_estimate:
                uncertain = True
            if flo * rm.value <= 0.0:
                hi = mid
            else:
                lo, flo = mid, rm.value
        out.append(ZeroBracket(lo, hi, uncertain))
    return out


def layer_limit(scale: LayerScale, rho: float,
                tol: Tolerance | None = None) -> float:
    """Limit of e^x sqrt(x) K_m(x, rho/sqrt(x)) as x -> infinity."""
    if not rho >= 0:
        raise DomainError(f"rho must be >= 0, got {rho}")
    return scale.limit_prefactor * h_value(scale.A_m * rho, tol)


def layer_error(scale: LayerScale, rho: float, x: float,
                tol: Tolerance | None = None) -> float:
    """|e^x sqrt(x) K_m(x, rho/sqrt(x)) - layer_limit| at one finite x.

    The e^x factor is folded into the cut integrand (which decays like
    e^{-x(t-1)}), so no extreme floats appear for x up to ~1e4.
    """
    if not x > 0:
        raise DomainError(f"layer_error needs x > 0, got {x}")
    if not rho >= 0:
        raise DomainError(f"rho must be >= 0, got {rho}")
    tol = tol or _DEFAULT_TOL
    scaled = _branchcut_scaled(scale.m, x, rho / math.sqrt(x), tol)
    finite = math.sqrt(x) * scaled.value
    return abs(finite - layer_limit(scale, rho, tol))
