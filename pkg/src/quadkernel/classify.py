"""Threshold classification, supercritical sign-change witnesses, sign maps,
and the non-diagonal calibration identities.

The verdict itself is algebra (positive iff d <= ac); what this module adds
is the certified numerical witness: a point on the boundary-layer curve
y = L_m/sqrt(x) where the kernel value is below minus its own quadrature
error estimate, so roundoff can never fabricate a counterexample.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WitnessNotFoundError
from .kernel2d import Rescaling, _branchcut_scaled, rescale
from .numerics import Tolerance
from .profile import LayerScale
from .symbols import DiagParams

__all__ = [
    "Witness",
    "SignClassification",
    "SignMap",
    "classify_diag",
    "negative_witness",
    "sign_map",
    "nondiag_critical",
    "nondiag_residual",
]

_DEFAULT_TOL = Tolerance()

_WITNESS_X_START = 10.0
_WITNESS_X_CAP = 1e4


@dataclass(frozen=True)
class Witness:
    """A certified negative kernel point: value < -abs_error_estimate."""

    x: float
    y: float
    value: float
    abs_error_estimate: float


@dataclass(frozen=True)
class SignClassification:
    verdict: str  # "Positive" | "SignChanging"
    threshold_margin: float  # ac - d
    witness: Witness | None = None


@dataclass(frozen=True)
class SignMap:
    """Pointwise signs of the normalized kernel K_m over a window.

    signs[i, j] is '+', '-', or '0?' (undecidable within quadrature error)
    at (xs[i], ys[j]); values/errors hold the kernel data for export.
    """

    m: float
    window: tuple
    resolution: tuple
    xs: np.ndarray
    ys: np.ndarray
    signs: np.ndarray
    values: np.ndarray
    errors: np.ndarray


def classify_diag(p: DiagParams, tol: Tolerance | None = None,
                  find_witness: bool = True) -> SignClassification:
    """Sharp threshold verdict for a diagonal triple, with witness.

    Positive exactly when d <= ac (equality included); otherwise the kernel
    changes sign and, when requested, a certified negative point is attached.
    """
    margin = p.margin()
    if margin >= 0:
        return SignClassification("Positive", margin, None)
    wit = negative_witness(p, tol) if find_witness else None
    return SignClassification("SignChanging", margin, wit)


def negative_witness(p: DiagParams, tol: Tolerance | None = None) -> Witness:
    """Search y = L_m/sqrt(x) with doubling x until the sign is certified.

    Works on e^x K_m (the exponential folded into the cut integrand), so the
    certificate value < -error survives arbitrarily deep decay; the point is
    mapped back through the scaling identity.
    """
    tol = tol or _DEFAULT_TOL
    if not p.supercritical():
        raise DomainError(f"negative_witness needs d > ac, got {p}")
    sc = rescale(p)
    layer = LayerScale(sc.m)
    x_m = _WITNESS_X_START
    while x_m <= _WITNESS_X_CAP:
        y_m = layer.L_m / math.sqrt(x_m)
        scaled = _branchcut_scaled(sc.m, x_m, y_m, tol)
        if scaled.value < -scaled.abs_error_estimate:
            damp = math.exp(-x_m)
            x, y = sc.unmap(x_m, y_m)
            return Witness(
                x=x, y=y,
                value=sc.prefactor * damp * scaled.value,
                abs_error_estimate=sc.prefactor * damp * scaled.abs_error_estimate,
            )
        x_m *= 2.0
    raise WitnessNotFoundError(
        f"no certified negative value on the layer curve up to x={_WITNESS_X_CAP}")


def _thread_count() -> int:
    raw = os.environ.get("EN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sign_map(m: float, window: tuple, resolution: tuple,
             tol: Tolerance | None = None) -> SignMap:
    """Sign of K_m on a grid over window = (x0, x1, y0, y1).

    Evaluation uses the scaled cut integral (sign of e^x K_m equals the sign
    of K_m), so windows deep in the exponential tail stay decidable.  Rows
    evaluate independently; EN_THREADS > 1 maps them over a thread pool with
    the output order fixed by index.
    """
    tol = tol or _DEFAULT_TOL
    if not m > 1:
        raise DomainError(f"sign_map needs m > 1, got {m}")
    x0, x1, y0, y1 = (float(v) for v in window)
    nx, ny = (int(v) for v in resolution)
    if not (0 < x0 < x1 and 0 <= y0 < y1 and nx > 0 and ny > 0):
        raise DomainError("window must satisfy 0 < x0 < x1, 0 <= y0 < y1 "
                          "and positive resolution")
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    if y0 == 0.0:
        ys[0] = 0.0  # keep the axis row exactly on the axis
    values = np.empty((nx, ny))
    errors = np.empty((nx, ny))

    def row(i: int):
        x = float(xs[i])
        damp = math.exp(-x)
        for j, y in enumerate(ys):
            r = _branchcut_scaled(m, x, float(y), tol)
            values[i, j] = damp * r.value
            errors[i, j] = damp * r.abs_error_estimate

    n_threads = _thread_count()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(row, range(nx)))
    else:
        for i in range(nx):
            row(i)

    signs = np.where(np.abs(values) <= errors, "0?",
                     np.where(values > 0, "+", "-"))
    return SignMap(m, (x0, x1, y0, y1), (nx, ny), xs, ys, signs, values, errors)


def nondiag_critical(a: float, b: float, c: float) -> tuple:
    """Calibrated critical surface of the non-diagonal form.

    For |b| < sqrt(ac), the exponential exp(-r(sqrt(c)x + sqrt(a)y)) with
    r = sqrt(1 + b/sqrt(ac)) solves the interior equation exactly at
    d_c = (sqrt(ac) + b)^2.  Returns (d_c, r).
    """
    if not (a > 0 and c > 0):
        raise DomainError("need a > 0 and c > 0")
    s = math.sqrt(a * c)
    if not abs(b) < s:
        raise DomainError(f"need |b| < sqrt(ac) = {s}, got b={b}")
    return (s + b) ** 2, math.sqrt(1.0 + b / s)


def nondiag_residual(a: float, b: float, c: float, d: float,
                     x: float, y: float) -> float:
    """Interior residual u_xxyy - a u_xx - 2b u_xy - c u_yy + d u of the
    calibrated exponential u = exp(-r(sqrt(c)x + sqrt(a)y)).

    The derivatives of the exponential are exact algebra, so the residual is
    (ac r^4 - 2 r^2 (ac + b sqrt(ac)) + d) * u, which vanishes identically at
    d = d_c.
    """
    if not (a > 0 and c > 0):
        raise DomainError("need a > 0 and c > 0")
    s = math.sqrt(a * c)
    if not abs(b) < s:
        raise DomainError(f"need |b| < sqrt(ac) = {s}, got b={b}")
    r2 = 1.0 + b / s
    u = math.exp(-math.sqrt(r2) * (math.sqrt(c) * x + math.sqrt(a) * y))
    # u_xxyy = ac r^4 u; u_xx = c r^2 u; u_yy = a r^2 u; u_xy = s r^2 u.
    factor = a * c * r2 * r2 - a * c * r2 - 2.0 * b * s * r2 - c * a * r2 + d
    return factor * u
