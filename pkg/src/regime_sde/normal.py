"""Standard normal distribution function and its inverse."""

import math

import numpy as np
from scipy import special

from .errors import RangeError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation (relative error ~1e-9), used as the Newton seed
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def std_normal_cdf(x):
    """Phi(x) through erfc, so both tails keep full relative precision."""
    if isinstance(x, np.ndarray):
        return 0.5 * special.erfc(-x / _SQRT2)
    return 0.5 * math.erfc(-float(x) / _SQRT2)


def std_normal_pdf(x):
    if isinstance(x, np.ndarray):
        return np.exp(-0.5 * x * x) / _SQRT2PI
    return math.exp(-0.5 * x * x) / _SQRT2PI


def std_normal_sf(x):
    """1 - Phi(x) without cancellation."""
    return std_normal_cdf(-x)


def _acklam(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def _refine(x, p, upper):
    # Halley steps on the cdf; in the upper tail work with the survival
    # function so that p close to 1 keeps its precision.
    for _ in range(4):
        if upper:
            err = std_normal_sf(x) - (1.0 - p)
            err = -err
        else:
            err = std_normal_cdf(x) - p
        pdf = std_normal_pdf(x)
        if pdf == 0.0:
            break
        u = err / pdf
        step = u / (1.0 + 0.5 * x * u)
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def std_normal_quantile(p):
    """Phi^{-1}(p) for p in (0, 1): rational seed plus Halley refinement."""
    if isinstance(p, np.ndarray):
        return np.array([std_normal_quantile(float(v)) for v in p.ravel()]).reshape(p.shape)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise RangeError(f"quantile needs p in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    return _refine(_acklam(p), p, upper=p > 0.5)


def std_normal_isf(q):
    """Phi^{-1}(1 - q), accurate when q is tiny (levels very close to one)."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise RangeError(f"isf needs q in (0, 1), got {q!r}")
    x = -_acklam(q)
    for _ in range(4):
        err = std_normal_sf(x) - q
        pdf = std_normal_pdf(x)
        if pdf == 0.0:
            break
        u = -err / pdf
        step = u / (1.0 + 0.5 * x * u)
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x
