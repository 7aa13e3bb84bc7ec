"""Closed-form symbols and diagnostics for the quadratic energy family.

Everything here is exact algebra: the transform symbol W, the reciprocal
symbol M and its mixed derivatives (the complete-monotonicity detector), the
one-dimensional multiplier, the branch-cut profile function, and the slit
upper-half-plane map.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "DiagParams",
    "NonDiagParams",
    "ProductParams",
    "w2",
    "m_reciprocal",
    "lambda_real",
    "beta_cut",
    "q_upper_half",
    "cm_mixed_derivative",
    "cm_violation_order",
    "w_nd",
]

# Relative slack used to decide whether a triple sits on the critical surface
# d = a*c; callers may pass their own.
CRITICAL_REL_TOL = 1e-12


def _require_positive(name: str, value: float):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive real, got {value!r}")


@dataclass(frozen=True)
class DiagParams:
    """Coefficient triple (a, c, d) of the diagonal quadratic energy."""

    a: float
    c: float
    d: float

    def __post_init__(self):
        _require_positive("a", self.a)
        _require_positive("c", self.c)
        _require_positive("d", self.d)

    def m(self) -> float:
        """Normalized parameter d/(a*c); the sign problem depends only on it."""
        return self.d / (self.a * self.c)

    def margin(self) -> float:
        """Threshold margin a*c - d (nonnegative means positive kernel)."""
        return self.a * self.c - self.d

    def critical(self, rel_tol: float = CRITICAL_REL_TOL) -> bool:
        ac = self.a * self.c
        return abs(self.d - ac) <= rel_tol * max(ac, self.d)

    def subcritical(self) -> bool:
        return self.d <= self.a * self.c

    def supercritical(self) -> bool:
        return self.d > self.a * self.c


@dataclass(frozen=True)
class NonDiagParams:
    """Coefficients (a, b, c, d) with the positive-definite lower-order form
    a p^2 + 2 b p q + c q^2 (+ d), i.e. ac - b^2 > 0."""

    a: float
    c: float
    d: float
    b: float

    def __post_init__(self):
        _require_positive("a", self.a)
        _require_positive("c", self.c)
        _require_positive("d", self.d)
        if not math.isfinite(self.b):
            raise DomainError("b must be finite")
        if not self.a * self.c - self.b * self.b > 0:
            raise DomainError(
                f"need ac - b^2 > 0, got ac={self.a * self.c}, b={self.b}")

    def beta(self) -> float:
        return self.b / math.sqrt(self.a * self.c)

    def r(self) -> float:
        return math.sqrt(1.0 + self.beta())


@dataclass(frozen=True)
class ProductParams:
    """Product-type n-dimensional diagonal family: weights alpha_j > 0 and
    the zeroth-order coefficient d."""

    alphas: tuple
    d: float

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if len(alphas) < 2:
            raise DomainError("need n >= 2 weights")
        for j, a in enumerate(alphas):
            _require_positive(f"alpha[{j}]", a)
        _require_positive("d", self.d)

    @property
    def n(self) -> int:
        return len(self.alphas)

    def A(self) -> float:
        return float(np.prod(self.alphas))

    def mu(self) -> float:
        """d - A; positive exactly in the sign-changing regime."""
        return self.d - self.A()

    def subcritical(self) -> bool:
        return self.d <= self.A()


def w2(p: DiagParams, xi, eta):
    """Two-dimensional symbol W(xi, eta) = xi^2 eta^2 + a xi^2 + c eta^2 + d."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    out = xi * xi * eta * eta + p.a * xi * xi + p.c * eta * eta + p.d
    return float(out) if out.ndim == 0 else out


def m_reciprocal(p: DiagParams, s, t):
    """Reciprocal symbol M(s, t) = 1/((s+c)(t+a) + (d - ac)).

    The expanded form 1/(st + as + ct + d) is identical algebra; both are
    exposed for the consistency test via ``m_reciprocal_expanded``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 1.0 / ((s + p.c) * (t + p.a) + (p.d - p.a * p.c))
    return float(out) if out.ndim == 0 else out


def m_reciprocal_expanded(p: DiagParams, s, t):
    """The same reciprocal symbol through the expanded denominator."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 1.0 / (s * t + p.a * s + p.c * t + p.d)
    return float(out) if out.ndim == 0 else out


def lambda_real(p: DiagParams, xi):
    """One-dimensional multiplier lambda(xi) = sqrt((a xi^2 + d)/(xi^2 + c)).

    Monotone in xi between sqrt(d/c) at 0 and sqrt(a) at infinity.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.sqrt((p.a * xi * xi + p.d) / (xi * xi + p.c))
    return float(out) if out.ndim == 0 else out


def beta_cut(m: float, t):
    """Cut profile beta(t) = sqrt((m - t^2)/(t^2 - 1)) on 1 < t < sqrt(m)."""
    if not m > 1:
        raise DomainError(f"beta_cut needs m > 1, got {m}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 1.0) or np.any(t * t >= m):
        raise DomainError(f"beta_cut needs 1 < t < sqrt(m), got t={t!r}")
    out = np.sqrt((m - t * t) / (t * t - 1.0))
    return float(out) if out.ndim == 0 else out


def q_upper_half(m: float, z: complex) -> complex:
    """q(z) = (z^2 + m)/(z^2 + 1) on the upper half-plane minus the slit
    [i, i*sqrt(m)].

    For m > 1 its imaginary part has the sign of -Re z, so q never meets the
    negative real axis off the slit and the principal square root of q is
    single-valued there.
    """
    if not m > 1:
        raise DomainError(f"q_upper_half needs m > 1, got {m}")
    z = complex(z)
    if z.imag <= 0:
        raise DomainError(f"need Im z > 0, got {z}")
    if z.real == 0.0 and 1.0 <= z.imag <= math.sqrt(m):
        raise DomainError(f"z={z} lies on the closed slit [i, i*sqrt(m)]")
    z2 = z * z
    return (z2 + m) / (z2 + 1.0)


def cm_mixed_derivative(p: DiagParams, order: int, s: float, t: float) -> float:
    """Signed mixed derivative of the reciprocal symbol above the threshold.

    For mu = d - ac > 0 and integer order k >= 1,

        (-1)^(k+1) d_s^k d_t M(s, t)
            = k! (t+a)^(k-1) ((s+c)(t+a) - k mu) / ((s+c)(t+a) + mu)^(k+2),

    which is what this returns.  Joint complete monotonicity would force it
    to stay nonnegative; a negative value is the violation certificate.
    """
    mu = p.d - p.a * p.c
    if not mu > 0:
        raise DomainError("cm_mixed_derivative requires d > ac")
    if order < 1 or int(order) != order:
        raise DomainError(f"order must be an integer >= 1, got {order}")
    if s < 0 or t < 0:
        raise DomainError("s, t must be nonnegative")
    sc = s + p.c
    ta = t + p.a
    return (math.factorial(order) * ta ** (order - 1) * (sc * ta - order * mu)
            / (sc * ta + mu) ** (order + 2))


def cm_violation_order(p: DiagParams):
    """Smallest derivative order certifying loss of complete monotonicity.

    Returns None when d <= ac (the reciprocal symbol is jointly completely
    monotone there); otherwise the smallest integer k > ac/mu, at which the
    mixed derivative at the origin is negative.
    """
    mu = p.d - p.a * p.c
    if mu <= 0:
        return None
    order = int(math.floor(p.a * p.c / mu)) + 1
    # Guard against floating roundoff placing us exactly on the boundary,
    # where the closed form vanishes instead of going negative.
    while cm_mixed_derivative(p, order, 0.0, 0.0) >= 0:
        order += 1
    return order


def w_nd(p: ProductParams, xi):
    """n-dimensional product symbol W(xi) = prod(xi_j^2 + alpha_j) + d - A.

    Satisfies W >= min(1, d/A) * prod(xi_j^2 + alpha_j) > 0.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != p.n:
        raise DomainError(
            f"xi has dimension {xi.shape[-1]}, parameters have n={p.n}")
    prod = np.prod(xi * xi + np.asarray(p.alphas), axis=-1)
    out = prod + (p.d - p.A())
    return float(out) if out.ndim == 0 else out
