"""Exact law of the transformed process inside one regime.

From a restart time ``t0`` the transformed state is Gaussian with

    m(t) = mu0_bar + mu_off + int_{t0}^t beta
    v(t) = var0 + var_off + int_{t0}^t alpha^2

so ``phi(t) = Phi(f(t))`` with the normal score ``f = (rho - m) / sqrt(v)``.
The sign of ``phi'`` is the sign of

    g(t) = alpha^2 [B(t) + mu_off + mu0_bar - rho] + 2 (rho' - beta) v(t).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import quadrature
from . import timefunc as tf
from .errors import RangeError
from .normal import std_normal_cdf


@dataclass(frozen=True)
class LawCurve:
    mu0_bar: float
    var0: float
    alpha: tf.TimeFunction
    beta: tf.TimeFunction
    rho: tf.TimeFunction
    t0: float = 0.0
    mu_off: float = 0.0
    var_off: float = 0.0
    regime: int = 1

    def __post_init__(self):
        if not self.var0 > 0.0:
            raise ValueError(f"base variance must be positive, got {self.var0!r}")
        if self.var_off < 0.0:
            raise ValueError(f"offset variance must be >= 0, got {self.var_off!r}")

    @cached_property
    def alpha2(self):
        return self.alpha * self.alpha

    @cached_property
    def drho(self):
        return self.rho.deriv()

    @cached_property
    def _prims(self):
        pb = self.beta.antiderivative
        pa = self.alpha2.antiderivative
        base_b = None if pb is None else pb.eval(self.t0)
        base_a = None if pa is None else pa.eval(self.t0)
        return pb, base_b, pa, base_a

    @property
    def restart_ok(self):
        """|mu_off| <= var_off / 2, the condition that keeps the monotonicity bands valid."""
        return abs(self.mu_off) <= 0.5 * self.var_off * (1 + 1e-12) + 1e-15

    def _check_t(self, t):
        if np.any(np.asarray(t) < self.t0 - 1e-12 * max(1.0, abs(self.t0))):
            raise RangeError(f"law curve starts at t0={self.t0!r}; got t={t!r}")

    def _integral(self, prim, base, f, t):
        if prim is not None:
            val = prim.eval(t) - base
            if np.all(np.isfinite(val)):
                return val
        if isinstance(t, np.ndarray):
            return np.array([self._integral(None, None, f, float(s)) for s in t.ravel()]).reshape(t.shape)
        return quadrature.integrate(f.eval, self.t0, t) if t != self.t0 else 0.0

    def integrals(self, t):
        """(int_{t0}^t beta, int_{t0}^t alpha^2)."""
        self._check_t(t)
        pb, bb, pa, ba = self._prims
        return self._integral(pb, bb, self.beta, t), self._integral(pa, ba, self.alpha2, t)

    def mean_var(self, t):
        b, a = self.integrals(t)
        return self.mu0_bar + self.mu_off + b, self.var0 + self.var_off + a

    def score(self, t):
        """Normal score f(t) = (rho(t) - m(t)) / sqrt(v(t))."""
        m, v = self.mean_var(t)
        return (self.rho.eval(t) - m) / np.sqrt(v)

    def phi(self, t):
        return std_normal_cdf(self.score(t))

    def slope_g(self, t):
        b, a = self.integrals(t)
        a2 = self.alpha2.eval(t)
        v = self.var0 + self.var_off + a
        return a2 * (b + self.mu_off + self.mu0_bar - self.rho.eval(t)) + 2.0 * (self.drho.eval(t) - self.beta.eval(t)) * v

    def restarted(self, t, alpha, beta, regime):
        """Law continuing from time t under a new regime (offsets carry the accumulated integrals)."""
        b, a = self.integrals(t)
        return LawCurve(self.mu0_bar, self.var0, alpha, beta, self.rho, float(t),
                        self.mu_off + b, self.var_off + a, regime)


def mean_var(curve, t):
    return curve.mean_var(t)


def phi(curve, t):
    return curve.phi(t)


def phi_slope_sign(curve, t):
    """(sign in {-1, 0, 1}, g(t)); sign(phi'(t)) = sign(g(t))."""
    g = float(curve.slope_g(t))
    return (g > 0) - (g < 0), g

