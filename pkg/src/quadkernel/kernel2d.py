"""The two-dimensional minimizer kernel by four independent representations.

The kernel

    K(x, y) = (4/pi^2) int int cos(x xi) cos(y eta) / W(xi, eta) dxi deta

is evaluated through

* ``eval_double``   - the defining double integral, inner integral removed by
                      the half-line Poisson cosine closed form;
* ``eval_onedim``   - the single-integral formula with the multiplier
                      lambda(xi) in the exponent;
* ``eval_branchcut``- the finite cut integral over t in (1, sqrt(m)) for the
                      normalized supercritical kernel, rewritten through the
                      monotone substitution sigma = sqrt((m-t^2)/(t^2-1)) as a
                      smooth half-line integral (the substitution removes both
                      square-root endpoints and turns the y-oscillation into a
                      constant frequency);
* ``eval_laplace``  - the positive double Laplace-Gaussian formula, valid for
                      d <= ac;
* ``eval_axis``     - the always-positive axis formulas.

``eval`` dispatches to the cheapest admissible representation and can
cross-check a second one.  The normalized minimizer is K/K(0,0) and the
minimal constrained energy is 1/K(0,0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RepresentationDisagreementError
from .numerics import (
    QuadResult,
    Tolerance,
    bessel_i0_scaled,
    integrate_adaptive,
    integrate_oscillatory,
    integrate_semiinfinite,
    poisson_cosine,
)
from .symbols import DiagParams, lambda_real

__all__ = [
    "REPRESENTATIONS",
    "KernelEval",
    "Rescaling",
    "rescale",
    "eval_double",
    "eval_onedim",
    "eval_branchcut",
    "eval_laplace",
    "eval_axis",
    "eval",
    "corner_value",
    "minimizer_value",
    "min_energy",
]

REPRESENTATIONS = ("double", "onedim", "branchcut", "laplace", "axis", "closed")

_DEFAULT_TOL = Tolerance()

# Exponent depth at which truncated Gaussian/exponential tails drop below
# double roundoff relative to the peak.
_LOG_TAIL = 45.0


@dataclass(frozen=True)
class KernelEval:
    """A kernel value together with the representation that produced it."""

    value: float
    representation: str
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")


@dataclass(frozen=True)
class Rescaling:
    """Reduction to the normalized family: K_{a,c,d}(x, y) equals
    prefactor * K_m(sqrt(c) x, sqrt(a) y) with m = d/(ac)."""

    m: float
    prefactor: float
    sqrt_c: float
    sqrt_a: float

    def map(self, x: float, y: float) -> tuple:
        return (self.sqrt_c * x, self.sqrt_a * y)

    def unmap(self, xm: float, ym: float) -> tuple:
        return (xm / self.sqrt_c, ym / self.sqrt_a)


def rescale(p: DiagParams) -> Rescaling:
    return Rescaling(
        m=p.m(),
        prefactor=1.0 / math.sqrt(p.a * p.c),
        sqrt_c=math.sqrt(p.c),
        sqrt_a=math.sqrt(p.a),
    )


def _check_point(x: float, y: float):
    if not (math.isfinite(x) and math.isfinite(y) and x >= 0 and y >= 0):
        raise DomainError(f"kernel arguments must be finite and >= 0, got {(x, y)}")


def _cosine_profile_integral(g, freq: float, tol: Tolerance,
                             algebraic_order: float = 2.0) -> QuadResult:
    """int_0^inf g(s) cos(freq*s) ds for smooth g with algebraic decay."""
    if freq > 0:
        return integrate_oscillatory(g, freq, tol)
    return integrate_semiinfinite(g, ("algebraic", algebraic_order), tol)


def eval_double(p: DiagParams, x: float, y: float,
                tol: Tolerance | None = None) -> KernelEval:
    """The defining double integral, with the inner eta-integral replaced by
    the Poisson cosine closed form (pi/(2 Lambda)) e^{-Lambda y}."""
    tol = tol or _DEFAULT_TOL
    _check_point(x, y)
    a, c, d = p.a, p.c, p.d

    def g(xi):
        xi = np.asarray(xi, dtype=float)
        lam = np.sqrt((a * xi * xi + d) / (xi * xi + c))
        inner = np.pi / (2.0 * lam) * np.exp(-lam * y)
        return (4.0 / math.pi ** 2) * inner / (xi * xi + c)

    r = _cosine_profile_integral(g, x, tol)
    return KernelEval(r.value, "double", r.abs_error_estimate, r.evaluations)


def eval_onedim(p: DiagParams, x: float, y: float,
                tol: Tolerance | None = None) -> KernelEval:
    """Single-integral formula
    K = (2/pi) int cos(x xi) e^{-y lambda(xi)} / (sqrt(xi^2+c) sqrt(a xi^2+d)) dxi.
    """
    tol = tol or _DEFAULT_TOL
    _check_point(x, y)
    a, c, d = p.a, p.c, p.d

    def g(xi):
        xi = np.asarray(xi, dtype=float)
        lam = np.sqrt((a * xi * xi + d) / (xi * xi + c))
        return (2.0 / math.pi) * np.exp(-y * lam) / (
            np.sqrt(xi * xi + c) * np.sqrt(a * xi * xi + d))

    r = _cosine_profile_integral(g, x, tol)
    return KernelEval(r.value, "onedim", r.abs_error_estimate, r.evaluations)


def _branchcut_scaled(m: float, x: float, y: float,
                      tol: Tolerance | None = None) -> QuadResult:
    """e^x * K_m(x, y) through the substituted cut integral.

    With t(sigma) = sqrt((m + sigma^2)/(1 + sigma^2)) the cut integral
    becomes (2/pi) int_0^inf e^{-x t} cos(y sigma) / (t (1+sigma^2)) dsigma,
    and t - 1 = (m-1)/((1+sigma^2)(t+1)) folds the e^x factor in without ever
    forming an extreme float, so x up to ~1e4 is safe.
    """
    tol = tol or _DEFAULT_TOL
    if not m > 1:
        raise DomainError(f"branch-cut representation needs m > 1, got {m}")
    if not x > 0:
        raise DomainError(f"branch-cut representation needs x > 0, got x={x}")

    def g(sigma):
        sigma = np.asarray(sigma, dtype=float)
        s2 = sigma * sigma
        t = np.sqrt((m + s2) / (1.0 + s2))
        t_minus_1 = (m - 1.0) / ((1.0 + s2) * (t + 1.0))
        return (2.0 / math.pi) * np.exp(-x * t_minus_1) / (t * (1.0 + s2))

    return _cosine_profile_integral(g, y, tol)


def eval_branchcut(m: float, x: float, y: float,
                   tol: Tolerance | None = None) -> KernelEval:
    """Normalized supercritical kernel K_m(x, y) from the cut integral."""
    _check_point(x, y)
    r = _branchcut_scaled(m, x, y, tol)
    scale = math.exp(-x)
    return KernelEval(r.value * scale, "branchcut",
                      r.abs_error_estimate * scale, r.evaluations)


def _gauss_factor(coord: float, tsq):
    """exp(-coord^2 / (4 t)) with the t=0 limit handled (0 for coord > 0)."""
    out = np.zeros_like(tsq)
    pos = tsq > 0
    if coord == 0.0:
        out[...] = 1.0
        return out
    out[pos] = np.exp(-coord * coord / (4.0 * tsq[pos]))
    return out


def _inner_grid_integral(f2, s_max, n_panels: int):
    """Vectorized composite G7/K15 over [0, s_max(r)] for a batch of outer
    nodes.  ``f2(r_idx_grid, s_grid)`` consumes matching-shape arrays.
    Returns (values, error estimates, evaluation count)."""
    from .numerics import _WG, _WK, _XK, _GAUSS_IDX  # shared panel rule

    s_max = np.asarray(s_max, dtype=float)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    unit_nodes = (mid[:, None] + half[:, None] * _XK[None, :]).ravel()
    s_nodes = s_max[:, None] * unit_nodes[None, :]
    fv = f2(s_nodes)
    fv = fv.reshape(len(s_max), n_panels, len(_XK))
    k15 = (fv * _WK).sum(axis=2)
    g7 = (fv[:, :, _GAUSS_IDX] * _WG).sum(axis=2)
    scale = s_max[:, None] * half[None, :]
    vals = (k15 * scale).sum(axis=1)
    errs = (np.abs(k15 - g7) * scale).sum(axis=1)
    return vals, errs, s_nodes.size


def _fixed_profile_integral(f, lo: float, hi: float, n_panels: int = 16):
    """One composite G7/K15 pass without adaptivity; returns (value, evals).

    Used to integrate error profiles, where a rough positive estimate is all
    that is needed.
    """
    from .numerics import _WK, _XK

    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _XK[None, :]).ravel()
    fv = np.asarray(f(nodes), dtype=float).reshape(n_panels, len(_XK))
    return float(((fv * _WK).sum(axis=1) * half).sum()), nodes.size


def eval_laplace(p: DiagParams, x: float, y: float,
                 tol: Tolerance | None = None) -> KernelEval:
    """Positive representation below the threshold (nu = ac - d >= 0):

        K = (1/pi) int int e^{-cu-av-x^2/(4u)-y^2/(4v)} / sqrt(uv)
                    I0(2 sqrt(nu u v)) du dv.

    Computed as an iterated integral after u = r^2, v = s^2, with the scaled
    Bessel factor e^{-z} I0(z) so the integrand never overflows; the combined
    exponent is <= 0 because 2 sqrt(nu) r s <= c r^2 + a s^2 whenever nu <= ac.
    """
    tol = tol or _DEFAULT_TOL
    _check_point(x, y)
    a, c, d = p.a, p.c, p.d
    nu = a * c - d
    if nu < -1e-12 * max(a * c, d):
        raise DomainError(f"laplace representation needs d <= ac, got {p}")
    nu = max(nu, 0.0)
    sqrt_nu = math.sqrt(nu)

    r_max = math.sqrt(_LOG_TAIL * a / d)  # outer decay rate is d/a after the
    # inner integral is bounded by its own exponential envelope.
    eval_box = [0]

    def pair(r):
        """Outer integrand and its inner-quadrature error, per node."""
        r = np.asarray(r, dtype=float)
        b = sqrt_nu * r  # inner exponent: -a s^2 + 2 b s - y^2/(4 s^2)
        s_max = b / a + np.sqrt((_LOG_TAIL + b * b / a) / a)

        def inner_f(s_nodes):
            bb = b[:, None]
            expo = -a * s_nodes ** 2 + 2.0 * bb * s_nodes
            gy = _gauss_factor(y, s_nodes ** 2)
            return np.exp(expo) * gy * bessel_i0_scaled(
                np.maximum(2.0 * bb * s_nodes, 0.0))

        n_panels = 12
        while True:
            vals, errs, n = _inner_grid_integral(inner_f, s_max, n_panels)
            eval_box[0] += n
            if errs.max() <= 1e-13 * max(1.0, np.abs(vals).max()) or n_panels >= 96:
                break
            n_panels *= 2
        gx = _gauss_factor(x, r * r)
        weight = (4.0 / math.pi) * np.exp(-c * r * r) * gx
        return weight * vals, weight * errs

    res = integrate_adaptive(lambda r: pair(r)[0], 0.0, r_max, tol.scaled(0.5))
    inner_err, n_err = _fixed_profile_integral(lambda r: pair(r)[1], 0.0, r_max)
    err = res.abs_error_estimate + inner_err
    return KernelEval(res.value, "laplace", err,
                      res.evaluations + eval_box[0] + n_err)


def eval_axis(p: DiagParams, axis: str, coordinate: float,
              tol: Tolerance | None = None) -> KernelEval:
    """Axis formulas, positive for every parameter triple:

        K(x, 0) = (1/(pi^(3/2) sqrt(a))) int int
                  e^{-cu-(d/a)v-x^2/(4(u+v))} / sqrt(uv(u+v)) du dv

    and the symmetric formula for K(0, y) with a and c swapped.  The inner
    integral collapses exactly: substituting u = w*s, v = w*(1-s) and using
    int_0^1 e^{alpha s} / sqrt(s(1-s)) ds = pi e^{alpha/2} I0(alpha/2) leaves

        K(x, 0) = (2/sqrt(pi a)) int_0^inf e^{-q^2/(4 tau^2)}
                  e^{-tau^2 (c+rho)/2} I0(tau^2 (c-rho)/2) dtau,  rho = d/a,

    a smooth one-dimensional integral with decay rate min(c, rho).
    """
    tol = tol or _DEFAULT_TOL
    if axis not in ("x", "y"):
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    if not (math.isfinite(coordinate) and coordinate >= 0):
        raise DomainError(f"axis coordinate must be >= 0, got {coordinate}")
    if axis == "x":
        c_eff, rho, pref = p.c, p.d / p.a, 1.0 / math.sqrt(p.a)
    else:
        c_eff, rho, pref = p.a, p.d / p.c, 1.0 / math.sqrt(p.c)
    q = coordinate
    rate = min(c_eff, rho)  # -(c+rho)/2 + |c-rho|/2 = -min(c, rho)
    gap = abs(c_eff - rho) / 2.0

    def g(tau):
        tau = np.asarray(tau, dtype=float)
        w = tau * tau
        gq = _gauss_factor(q, w)
        return gq * np.exp(-rate * w) * bessel_i0_scaled(gap * w)

    tau_max = math.sqrt(_LOG_TAIL / rate)
    res = integrate_adaptive(g, 0.0, tau_max, tol.scaled(0.5))
    # Tail beyond tau_max: envelope e^{-rate tau^2} / sqrt(2 pi gap tau^2).
    tail = math.exp(-_LOG_TAIL) / (2.0 * rate * tau_max)
    val = 2.0 * pref / math.sqrt(math.pi) * res.value
    err = 2.0 * pref / math.sqrt(math.pi) * (res.abs_error_estimate + tail)
    return KernelEval(val, "axis", err, res.evaluations)


def _closed_critical(p: DiagParams, x: float, y: float) -> KernelEval:
    val = (1.0 / math.sqrt(p.a * p.c)
           * math.exp(-math.sqrt(p.c) * x - math.sqrt(p.a) * y))
    return KernelEval(val, "closed", 4.0 * np.finfo(float).eps * abs(val), 1)


def _admissible(p: DiagParams, x: float, y: float) -> list:
    reps = ["double", "onedim"]
    if p.subcritical() or p.critical():
        reps.append("laplace")
    if p.m() > 1 and math.sqrt(p.c) * x > 0 and not p.critical():
        reps.append("branchcut")
    if x == 0.0 or y == 0.0:
        reps.append("axis")
    if p.critical():
        reps.append("closed")
    return reps


def _eval_by(rep: str, p: DiagParams, x: float, y: float,
             tol: Tolerance | None) -> KernelEval:
    if rep == "double":
        return eval_double(p, x, y, tol)
    if rep == "onedim":
        return eval_onedim(p, x, y, tol)
    if rep == "laplace":
        return eval_laplace(p, x, y, tol)
    if rep == "branchcut":
        sc = rescale(p)
        xm, ym = sc.map(x, y)
        inner = eval_branchcut(sc.m, xm, ym, tol)
        return KernelEval(sc.prefactor * inner.value, "branchcut",
                          sc.prefactor * inner.abs_error_estimate,
                          inner.evaluations)
    if rep == "axis":
        if y == 0.0:
            return eval_axis(p, "x", x, tol)
        if x == 0.0:
            return eval_axis(p, "y", y, tol)
        raise DomainError("axis representation needs x == 0 or y == 0")
    if rep == "closed":
        if not p.critical():
            raise DomainError("closed form is only valid on d = ac")
        return _closed_critical(p, x, y)
    raise DomainError(f"unknown representation {rep!r}")


def eval(p: DiagParams, x: float, y: float, tol: Tolerance | None = None,
         crosscheck: bool = False, representation: str | None = None) -> KernelEval:
    """Evaluate K(x, y), dispatching on the parameter regime.

    Critical triples use the exact separable exponential; subcritical ones
    use the positive Laplace form near the origin and the single integral
    elsewhere; supercritical ones switch to the branch-cut form once
    sqrt(c)*x > 5, where the oscillatory single integral loses all relative
    accuracy against the e^{-x} size of the answer.

    With ``crosscheck`` a second admissible representation is evaluated and a
    disagreement beyond 10x the summed error estimates raises.
    """
    tol = tol or _DEFAULT_TOL
    _check_point(x, y)
    if representation is not None:
        primary = _eval_by(representation, p, x, y, tol)
    else:
        primary = _eval_by(_dispatch(p, x, y), p, x, y, tol)
    if not crosscheck:
        return primary
    second_rep = _second_choice(p, x, y, primary.representation)
    second = _eval_by(second_rep, p, x, y, tol)
    gap = abs(primary.value - second.value)
    allowed = 10.0 * (primary.abs_error_estimate + second.abs_error_estimate)
    if gap > allowed:
        raise RepresentationDisagreementError(
            f"{primary.representation} and {second.representation} disagree: "
            f"{primary.value!r} vs {second.value!r} (gap {gap:.3e} > {allowed:.3e})")
    return primary


def _dispatch(p: DiagParams, x: float, y: float) -> str:
    if p.critical():
        return "closed"
    sc = rescale(p)
    xm, ym = sc.map(x, y)
    if p.subcritical():
        return "laplace" if math.hypot(xm, ym) <= 2.0 else "onedim"
    if xm > 5.0:
        return "branchcut"
    return "onedim"


def _second_choice(p: DiagParams, x: float, y: float, primary: str) -> str:
    xm = math.sqrt(p.c) * x
    if primary != "branchcut" and p.m() > 1 and not p.critical() and xm > 0:
        return "branchcut"
    if primary != "onedim":
        return "onedim"
    return "double"


def corner_value(p: DiagParams, tol: Tolerance | None = None) -> float:
    """K(0, 0) > 0."""
    return eval(p, 0.0, 0.0, tol).value


def minimizer_value(p: DiagParams, x: float, y: float,
                    tol: Tolerance | None = None) -> float:
    """Normalized minimizer u(x, y) = K(x, y)/K(0, 0); exactly 1 at the corner."""
    _check_point(x, y)
    if x == 0.0 and y == 0.0:
        return 1.0
    return eval(p, x, y, tol).value / corner_value(p, tol)


def min_energy(p: DiagParams, tol: Tolerance | None = None) -> float:
    """Minimal constrained energy, the reciprocal of the corner value.

    The transform identity: the optimal transform profile is proportional to
    1/W, so the energy integral of the normalized minimizer collapses to
    1/K(0,0).  The discrete module provides the independent check.
    """
    return 1.0 / corner_value(p, tol)
