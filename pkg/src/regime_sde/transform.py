"""State map F(t, .): U_t -> R, its inverse G, and the transformed reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import timefunc as tf
from .errors import DomainError


def lower_bound(coeffs, t):
    """Left end of U_t = (lower, inf)."""
    return coeffs.lower_bound(t)


def in_domain(coeffs, t, x):
    return coeffs.sigma1.eval(t) * np.asarray(x, dtype=float) + coeffs.sigma2.eval(t) > 0.0


def forward(coeffs, t, x):
    """F(t, x): x / sigma2 (additive) or log(sigma1 x + sigma2) / sigma1."""
    x_arr = np.asarray(x, dtype=float)
    if coeffs.additive_mode:
        out = x_arr / coeffs.sigma2.eval(t)
    else:
        s1 = coeffs.sigma1.eval(t)
        arg = s1 * x_arr + coeffs.sigma2.eval(t)
        if np.any(~(arg > 0.0)):
            bad = x_arr if x_arr.ndim == 0 else x_arr[np.argmax(~(arg > 0.0))]
            raise DomainError(f"state {float(bad)!r} is outside U_t at t={t!r}", t=t, x=float(bad))
        out = np.log(arg) / s1
    return float(out) if out.ndim == 0 else out


def inverse(coeffs, t, y):
    """G(t, y): sigma2 y (additive) or (exp(sigma1 y) - sigma2) / sigma1; lands in U_t."""
    y_arr = np.asarray(y, dtype=float)
    if coeffs.additive_mode:
        out = coeffs.sigma2.eval(t) * y_arr
    else:
        s1 = coeffs.sigma1.eval(t)
        out = (np.exp(s1 * y_arr) - coeffs.sigma2.eval(t)) / s1
    return float(out) if out.ndim == 0 else out


def forward_expr(coeffs, r):
    """rho = F(t, r(t)) as an expression tree, so rho' comes from the chain rule."""
    r = tf.as_function(r)
    if coeffs.additive_mode:
        return r / coeffs.sigma2
    return tf.log(coeffs.sigma1 * r + coeffs.sigma2) / coeffs.sigma1


@dataclass(frozen=True)
class ReferenceReport:
    """Grid checks of the transformed reference over a window."""

    window: tuple
    points: int
    non_decreasing: bool
    min_slope: float
    min_slope_t: float
    sup_rho: float
    sup_rho_t: float
    mu0_bar: float | None
    tol: float = 1e-12

    @property
    def below_mean(self):
        """sup rho <= mu0_bar (True when no mean was supplied)."""
        if self.mu0_bar is None:
            return True
        return self.sup_rho <= self.mu0_bar + max(self.tol, 1e-12 * abs(self.mu0_bar))

    @property
    def ok(self):
        return self.non_decreasing and self.below_mean

    def violations(self):
        out = []
        if not self.non_decreasing:
            out.append(f"rho decreasing: rho'({self.min_slope_t:.6g}) = {self.min_slope:.6g} < 0")
        if not self.below_mean:
            out.append(f"sup rho = {self.sup_rho:.6g} at t={self.sup_rho_t:.6g} exceeds mu0_bar = {self.mu0_bar:.6g}")
        return out


@dataclass(frozen=True)
class TransformedReference:
    rho: tf.TimeFunction
    drho: tf.TimeFunction
    report: ReferenceReport

    def __call__(self, t):
        return self.rho.eval(t)


def reference_grid(window, per_unit=2048, max_points=200_001):
    t0, t1 = map(float, window)
    count = min(max_points, max(2, int(np.ceil((t1 - t0) * per_unit)) + 1))
    return np.linspace(t0, t1, count)


def transform_reference(coeffs, r, window=(0.0, 10.0), mu0_bar=None, grid=None):
    """rho(t) = F(t, r(t)) with domain, monotonicity and sup-bound checks on a grid.

    Raises DomainError naming the first grid time where r(t) leaves U_t.
    """
    r = tf.as_function(r)
    ts = reference_grid(window) if grid is None else np.asarray(grid, dtype=float)
    ok = in_domain(coeffs, ts, r.eval(ts))
    if not np.all(ok):
        t_bad = float(ts[np.argmin(ok)])
        raise DomainError(f"reference r(t) leaves U_t at t={t_bad!r}", t=t_bad, x=r.eval(t_bad))
    rho = forward_expr(coeffs, r)
    drho = rho.deriv()
    slopes = drho.eval(ts)
    values = rho.eval(ts)
    i_slope = int(np.argmin(slopes))
    i_sup = int(np.argmax(values))
    # F divides by sigma1 (or sigma2), which amplifies rounding in log(sigma1 r + sigma2)
    amp = np.abs(coeffs.sigma2.eval(ts) if coeffs.additive_mode else coeffs.sigma1.eval(ts))
    scale = max(1.0, float(np.max(np.abs(values))), float(np.max(1.0 / np.maximum(amp, 1e-300))))
    tol = 1e-12 * max(scale, float(np.max(np.abs(slopes))))
    report = ReferenceReport(
        window=(float(ts[0]), float(ts[-1])),
        points=int(ts.size),
        non_decreasing=bool(slopes[i_slope] >= -tol),
        min_slope=float(slopes[i_slope]),
        min_slope_t=float(ts[i_slope]),
        sup_rho=float(values[i_sup]),
        sup_rho_t=float(ts[i_sup]),
        mu0_bar=None if mu0_bar is None else float(mu0_bar),
        tol=tol,
    )
    return TransformedReference(rho, drho, report)
