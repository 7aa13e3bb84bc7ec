"""The product-type n-dimensional diagonal family.

The symbol is W(xi) = prod_j (xi_j^2 + alpha_j) + d - A with A = prod alpha_j,
and the same dichotomy as in two dimensions holds: for d <= A the reciprocal
symbol has a positive n-parameter Laplace representation built on
Phi_n(z) = sum z^k/(k!)^n, giving a manifestly positive kernel formula; for
d > A every two-dimensional frequency face reduces to a supercritical 2-D
problem, whose certified negative witness pushes back through a half-line
Abel average to contradict positivity of the full kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from . import classify as _classify
from .errors import DomainError
from .numerics import (
    Tolerance,
    integrate_adaptive,
    integrate_oscillatory,
    integrate_semiinfinite,
    phi_n_log,
)
from .symbols import DiagParams, ProductParams

__all__ = [
    "FaceReduction",
    "classify_nd",
    "kernel_nd_laplace",
    "face_reduce",
    "face_negative_witness",
    "abel_face_check",
]

_DEFAULT_TOL = Tolerance()
_LOG_TAIL = 42.0
_MAX_DIM = 4


@dataclass(frozen=True)
class FaceReduction:
    """Restriction of a supercritical product problem to the (i, j) face.

    The face kernel equals prefactor * K2(reduced_params), and the reduced
    triple is supercritical whenever the full problem is (its excess over
    alpha_i*alpha_j is mu / prod_{k not in {i,j}} alpha_k > 0).
    """

    indices: tuple
    reduced_params: DiagParams
    prefactor: float


def classify_nd(p: ProductParams) -> str:
    """'Positive' iff d <= prod(alpha_j), else 'SignChanging'."""
    return "Positive" if p.subcritical() else "SignChanging"


def _phi_log_array(n: int, z: np.ndarray) -> np.ndarray:
    """log Phi_n on an array of nonnegative arguments.

    n = 1 and n = 2 have closed forms (e^z and I0(2 sqrt(z))); for n >= 3 the
    series is summed directly up to z = 600 and by a log-sum-exp window
    around the maximal term k* ~ z^(1/n) beyond that.
    """
    z = np.asarray(z, dtype=float)
    if n == 1:
        return z.copy()
    if n == 2:
        s = 2.0 * np.sqrt(z)
        return s + np.log(_sp.i0e(s))
    out = np.empty_like(z)
    small = z <= 600.0
    if small.any():
        zs = z[small]
        total = np.ones_like(zs)
        term = np.ones_like(zs)
        for k in range(1, 200):
            term = term * zs / float(k) ** n
            total += term
            if (term < 1e-17 * total).all():
                break
        out[small] = np.log(total)
    if (~small).any():
        for idx in np.nonzero(~small.ravel())[0]:
            out.ravel()[idx] = phi_n_log(n, float(z.ravel()[idx]))
    return out


def kernel_nd_laplace(p: ProductParams, x, tol: Tolerance | None = None) -> float:
    """Positive kernel formula below the product threshold (nu = A - d >= 0):

        K(x) = pi^(-n/2) int exp(-sum alpha_j t_j - sum x_j^2/(4 t_j))
               / sqrt(prod t_j) * Phi_n(nu prod t_j) dt.

    Iterated adaptive quadrature after t_j = s_j^2 (which absorbs the
    1/sqrt(t_j) weights), with Phi_n in the log domain and the exponent
    assembled before a single exp so nothing overflows.  Capped at n = 4.
    """
    tol = tol or _DEFAULT_TOL
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise DomainError(f"x must have shape ({p.n},), got {x.shape}")
    if np.any(x < 0):
        raise DomainError("x must be componentwise nonnegative")
    if p.n > _MAX_DIM:
        raise DomainError(f"direct evaluation capped at n={_MAX_DIM}, got n={p.n}")
    nu = p.A() - p.d
    if nu < -1e-12 * max(p.A(), p.d):
        raise DomainError(f"laplace form needs d <= A = {p.A()}, got d={p.d}")
    nu = max(nu, 0.0)
    n = p.n
    alphas = np.asarray(p.alphas)

    # AM-GM gives n (nu prod t)^(1/n) <= (nu/A)^(1/n) sum alpha_j t_j, so each
    # variable keeps at least the fraction (1 - (nu/A)^(1/n)) of its decay.
    shrink = 1.0 - (nu / p.A()) ** (1.0 / n) if nu > 0 else 1.0
    s_max = np.sqrt(_LOG_TAIL / (alphas * max(shrink, 1e-3)))

    def level(k: int, s_prefix: tuple):
        level_tol = tol.scaled(0.3 ** (n - 1 - k), 0.5)

        def f(s):
            s = np.asarray(s, dtype=float)
            if k == n - 1:
                cols = [np.full_like(s, v) for v in s_prefix] + [s]
                tmat = np.stack(cols, axis=-1) ** 2
                expo = -(alphas * tmat).sum(axis=-1)
                mask = x > 0
                if mask.any():
                    expo = expo - (x[mask] ** 2 / (4.0 * tmat[..., mask])).sum(axis=-1)
                zprod = nu * tmat.prod(axis=-1)
                return 2.0 ** n * np.exp(expo + _phi_log_array(n, zprod))
            return np.array([level(k + 1, s_prefix + (float(v),)).value for v in s])

        return integrate_adaptive(f, 0.0, float(s_max[k]), level_tol,
                                  initial_panels=8)

    res = level(0, ())
    return math.pi ** (-n / 2.0) * res.value


def face_reduce(p: ProductParams, i: int, j: int) -> FaceReduction:
    """Reduce a supercritical product problem to the (i, j) frequency face.

    Returns the 2-D triple (a = alpha_j, c = alpha_i,
    d = alpha_i alpha_j + mu/Abar) and the prefactor 1/Abar, where Abar is
    the product of the remaining weights.
    """
    if p.subcritical():
        raise DomainError("face reduction applies to the supercritical case d > A")
    n = p.n
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise DomainError(f"face indices must be distinct and in range, got {(i, j)}")
    others = [p.alphas[k] for k in range(n) if k not in (i, j)]
    abar = float(np.prod(others)) if others else 1.0
    mu = p.mu()
    reduced = DiagParams(
        a=p.alphas[j],
        c=p.alphas[i],
        d=p.alphas[i] * p.alphas[j] + mu / abar,
    )
    return FaceReduction((i, j), reduced, 1.0 / abar)


def face_negative_witness(p: ProductParams, i: int, j: int,
                          tol: Tolerance | None = None):
    """Certified negative value of the (i, j) face kernel.

    Delegates to the 2-D witness search on the reduced triple and scales the
    value by the face prefactor.  Returns (x_i, x_j, face_value, error).
    """
    red = face_reduce(p, i, j)
    wit = _classify.negative_witness(red.reduced_params, tol)
    return (wit.x, wit.y, red.prefactor * wit.value,
            red.prefactor * wit.abs_error_estimate)


def abel_face_check(p: ProductParams, x_i: float, x_j: float, eps_list,
                    tol: Tolerance | None = None) -> list:
    """Half-line Abel averages L_eps(x_i, x_j) of the n=3 kernel over its
    third coordinate.

    Averaging with weight e^{-eps z} is, on the transform side, one factor
    eps/(eps^2 + zeta^2), and its integral against the reciprocal symbol
    collapses in closed form:

        int_0^inf (eps/(eps^2+zeta^2)) / (B zeta^2 + D) dzeta
            = (pi/2) / (sqrt(D) (sqrt(D) + eps sqrt(B))),

    with B = (xi^2+alpha_1)(eta^2+alpha_2) and D = B alpha_3 + (d - A) the
    face symbol.  What remains is a 2-D cosine integral evaluated iteratively.
    As eps drops to 0 the average converges to the face kernel value; a
    certified negative face witness therefore forces L_eps < 0 for small eps,
    which is incompatible with a nonnegative full kernel.
    """
    tol = tol or _DEFAULT_TOL
    if p.n != 3:
        raise DomainError(f"abel_face_check is desk-scale n=3 only, got n={p.n}")
    if p.subcritical():
        raise DomainError("abel_face_check applies to the supercritical case")
    if not (x_i >= 0 and x_j >= 0):
        raise DomainError("face coordinates must be nonnegative")
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise DomainError("eps values must be positive")
    a1, a2, a3 = p.alphas
    mu = p.mu()

    def l_eps(eps: float) -> float:
        def inner(xi_val: float) -> float:
            b1 = xi_val * xi_val + a1

            def g(eta):
                eta = np.asarray(eta, dtype=float)
                B = b1 * (eta * eta + a2)
                D = B * a3 + mu
                sqD = np.sqrt(D)
                return 1.0 / (sqD * (sqD + eps * np.sqrt(B)))

            if x_j > 0:
                return integrate_oscillatory(g, x_j, tol.scaled(0.05)).value
            return integrate_semiinfinite(g, ("algebraic", 2.0),
                                          tol.scaled(0.05)).value

        def outer_g(xi):
            xi = np.asarray(xi, dtype=float)
            return np.array([inner(float(v)) for v in xi])

        if x_i > 0:
            res = integrate_oscillatory(outer_g, x_i, tol.scaled(0.2))
        else:
            res = integrate_semiinfinite(outer_g, ("algebraic", 2.0),
                                         tol.scaled(0.2))
        return (2.0 / math.pi) ** 2 * res.value

    return [(eps, l_eps(eps)) for eps in eps_list]
