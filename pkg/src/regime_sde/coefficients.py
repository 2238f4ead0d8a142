"""Coefficient sets of the regime-switching SDE and their derived drifts.

The diffusion is ``alpha_n(t) * (sigma1(t) x + sigma2(t))``. In additive mode
(``sigma1 == 0``) the drift is ``(sigma2'/sigma2) x + k(t)``; in
multiplicative mode it is the logarithmic form parametrised by ``ell(t)``.
Either drift makes the state map ``F`` turn the equation into one with
deterministic coefficients ``alpha_n`` and ``beta_n``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import timefunc as tf
from .errors import DomainError, ModeError, RegimeExhausted

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"

DEFAULT_STRICT_MARGIN = 1e-9
GRID_PER_UNIT = 2048


@dataclass(frozen=True)
class AlphaFamily:
    """Regime volatilities: a closed form in ``n`` or an explicit finite list."""

    expr: tf.TimeFunction | None = None
    items: tuple | None = None
    offset: int = 0

    def __post_init__(self):
        if (self.expr is None) == (self.items is None):
            raise ValueError("give exactly one of expr= or items=")
        if self.items is not None and not self.items:
            raise ValueError("alpha list must not be empty")

    @classmethod
    def parametric(cls, expr):
        return cls(expr=tf.as_function(expr))

    @classmethod
    def of(cls, *items):
        return cls(items=tuple(tf.as_function(a) for a in items))

    @property
    def size(self):
        """Number of regimes, or None for an infinite family."""
        return None if self.items is None else len(self.items)

    def __call__(self, n):
        n = int(n)
        if n < 1:
            raise ValueError(f"regime index must be >= 1, got {n}")
        if self.items is not None:
            if n > len(self.items):
                raise RegimeExhausted(f"alpha list has {len(self.items)} regimes; regime {n} requested")
            return self.items[n - 1]
        return self.expr.bind(n + self.offset)

    def shifted(self, m):
        """Family n -> alpha_{n+m}, used when the levels are re-indexed."""
        if self.items is not None:
            return AlphaFamily(items=self.items[m:])
        return AlphaFamily(expr=self.expr, offset=self.offset + m)

    def to_json(self):
        if self.items is not None:
            return {"list": [a.to_json() for a in self.items]}
        out = {"expr": self.expr.to_json()}
        if self.offset:
            out["offset"] = self.offset
        return out


@dataclass(frozen=True)
class CoefficientSet:
    mode: str
    sigma1: tf.TimeFunction
    sigma2: tf.TimeFunction
    drift_param: tf.TimeFunction
    alpha_family: AlphaFamily
    _beta_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.mode not in (ADDITIVE, MULTIPLICATIVE):
            raise ModeError(f"mode must be {ADDITIVE!r} or {MULTIPLICATIVE!r}, got {self.mode!r}")
        if self.mode == ADDITIVE and self.sigma1.constant != 0.0:
            raise ModeError("additive mode requires sigma1 == 0 identically")

    @classmethod
    def additive(cls, sigma2, k, alpha):
        return cls(ADDITIVE, tf.ZERO, tf.as_function(sigma2), tf.as_function(k), _family(alpha))

    @classmethod
    def multiplicative(cls, sigma1, sigma2, ell, alpha):
        return cls(MULTIPLICATIVE, tf.as_function(sigma1), tf.as_function(sigma2), tf.as_function(ell),
                   _family(alpha))

    @property
    def additive_mode(self):
        return self.mode == ADDITIVE

    @cached_property
    def dsigma1(self):
        return self.sigma1.deriv()

    @cached_property
    def dsigma2(self):
        return self.sigma2.deriv()

    def alpha(self, n):
        return self.alpha_family(n)

    def sigma(self, t, x):
        return self.sigma1.eval(t) * x + self.sigma2.eval(t)

    def lower_bound(self, t):
        """Left end of U_t (-inf in additive mode)."""
        if self.additive_mode:
            return -np.inf if np.isscalar(t) else np.full(np.shape(t), -np.inf)
        return -self.sigma2.eval(t) / self.sigma1.eval(t)

    def check_mode_at(self, t):
        """Raise ModeError if the mode invariant fails at time(s) t."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.additive_mode:
            bad = ~(self.sigma2.eval(t_arr) > 0.0)
            what = "sigma2(t) > 0"
        else:
            bad = ~(self.sigma1.eval(t_arr) > 0.0)
            what = "sigma1(t) > 0"
        if bad.any():
            t_bad = float(t_arr[np.argmax(bad)])
            raise ModeError(f"{self.mode} mode needs {what}; fails at t={t_bad!r}")

    # -- drift as an expression in t for a fixed state --------------------
    def drift_expr(self, x):
        x = float(x)
        s1, s2 = self.sigma1, self.sigma2
        if self.additive_mode:
            return self.dsigma2 / s2 * x + self.drift_param
        arg = s1 * x + s2
        head = (self.dsigma1 * arg * tf.log(arg) - s1 * self.dsigma2 + self.dsigma1 * s2) / (s1 * s1)
        return head + self.drift_param * arg

    def beta_expr(self, n):
        """beta_n as a folded expression in t (constant coefficients fold to constants)."""
        n = int(n)
        cached = self._beta_cache.get(n)
        if cached is not None:
            return cached
        s1, s2 = self.sigma1, self.sigma2
        b1 = self.drift_expr(1.0)
        if self.additive_mode:
            expr = b1 / s2 - self.dsigma2 / (s2 * s2)
        else:
            alpha = self.alpha(n)
            ssum = s1 + s2
            expr = (b1 / ssum
                    - 0.5 * alpha * alpha * s1
                    + (1.0 / s1) * ((self.dsigma1 + self.dsigma2) / ssum - self.dsigma1 / s1 * tf.log(ssum)))
        self._beta_cache[n] = expr
        return expr


def _family(alpha):
    if isinstance(alpha, AlphaFamily):
        return alpha
    if isinstance(alpha, (list, tuple)):
        return AlphaFamily.of(*alpha)
    return AlphaFamily.parametric(alpha)


# ---------------------------------------------------------------------------
# numeric evaluation straight from the closed formulas

def eval_b(coeffs, t, x):
    """Drift b(t, x); raises DomainError outside U_t."""
    coeffs.check_mode_at(t)
    s1 = coeffs.sigma1.eval(t)
    s2 = coeffs.sigma2.eval(t)
    ds2 = coeffs.dsigma2.eval(t)
    x_arr = np.asarray(x, dtype=float)
    if coeffs.additive_mode:
        out = ds2 / s2 * x_arr + coeffs.drift_param.eval(t)
    else:
        arg = s1 * x_arr + s2
        if np.any(~(arg > 0.0)):
            raise DomainError(f"x outside U_t at t={t!r}: sigma1 x + sigma2 must be > 0", t=t, x=x)
        ds1 = coeffs.dsigma1.eval(t)
        out = (ds1 * arg * np.log(arg) - s1 * ds2 + ds1 * s2) / (s1 * s1) + coeffs.drift_param.eval(t) * arg
    return float(out) if np.ndim(out) == 0 else out


def beta_n(coeffs, n, t):
    """beta_n(t) evaluated numerically from the drift at x = 1."""
    t_arr = np.asarray(t, dtype=float)
    b1 = np.asarray(eval_b(coeffs, t_arr, 1.0), dtype=float)
    s1 = coeffs.sigma1.eval(t_arr)
    s2 = coeffs.sigma2.eval(t_arr)
    ds1 = coeffs.dsigma1.eval(t_arr)
    ds2 = coeffs.dsigma2.eval(t_arr)
    if coeffs.additive_mode:
        out = b1 / s2 - ds2 / s2 ** 2
    else:
        alpha = coeffs.alpha(n).eval(t_arr)
        ssum = s1 + s2
        out = b1 / ssum - 0.5 * alpha ** 2 * s1 + ((ds1 + ds2) / ssum - ds1 / s1 * np.log(ssum)) / s1
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DriftOdeReport:
    max_residual: float
    worst_t: float
    worst_x: float
    points: int

    def passed(self, tol=1e-6):
        return self.max_residual <= tol


def default_state_grid(coeffs, t, size=33):
    """States inside U_t: offsets 0.1..10 above the boundary, or [-10, 10] in additive mode."""
    if coeffs.additive_mode:
        return np.linspace(-10.0, 10.0, size)
    return coeffs.lower_bound(t) + np.geomspace(0.1, 10.0, size)


def check_drift_ode(coeffs, t_grid=None, x_grid=None, drift=None):
    """Max residual of sigma1 b - [b_x (sigma1 x + sigma2) - sigma1' x - sigma2'] over a grid.

    ``b_x`` is a central difference with step ``1e-5 * max(1, |x|)``.
    ``drift`` overrides ``b`` (used to show that perturbed drifts are caught).
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 2.0, 65)
    if drift is None:
        drift = lambda t, x: eval_b(coeffs, t, x)  # noqa: E731
    worst = (0.0, float("nan"), float("nan"))
    count = 0
    for t in np.asarray(t_grid, dtype=float):
        t = float(t)
        xs = default_state_grid(coeffs, t) if x_grid is None else np.asarray(x_grid, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(xs))
        bx = (drift(t, xs + h) - drift(t, xs - h)) / (2.0 * h)
        s1 = coeffs.sigma1.eval(t)
        s2 = coeffs.sigma2.eval(t)
        res = np.abs(s1 * drift(t, xs) - (bx * (s1 * xs + s2) - coeffs.dsigma1.eval(t) * xs - coeffs.dsigma2.eval(t)))
        count += xs.size
        i = int(np.argmax(res))
        if res[i] > worst[0] or not np.isfinite(res[i]):
            worst = (float(res[i]), t, float(xs[i]))
    return DriftOdeReport(worst[0], worst[1], worst[2], count)


# ---------------------------------------------------------------------------
# inequality bands

class Band(enum.Enum):
    UP = "Up"
    UP_STRICT = "UpStrict"
    DOWN = "Down"
    DOWN_STRICT = "DownStrict"
    FROZEN = "Frozen"
    UNCLASSIFIED = "Unclassified"

    @property
    def is_up(self):
        return self in (Band.UP, Band.UP_STRICT)

    @property
    def is_down(self):
        return self in (Band.DOWN, Band.DOWN_STRICT)


@dataclass(frozen=True)
class BandClass:
    band: Band
    margin: float
    up_slack: tuple
    down_slack: tuple

    @property
    def name(self):
        return self.band.value

    def describe(self):
        lo, hi = self.up_slack
        dlo, dhi = self.down_slack
        return (f"{self.band.value}: up-band slacks (beta + a^2/2, -a^2/4 - beta) = ({lo:.3e}, {hi:.3e}); "
                f"down-band slacks (beta - a^2/4, a^2/2 - beta) = ({dlo:.3e}, {dhi:.3e})")


def classify_pair(alpha, beta, interval, grid_size=None, strict_margin=DEFAULT_STRICT_MARGIN):
    """Classify an (alpha, beta) pair of TimeFunctions against the up/down bands on a grid."""
    t0, t1 = map(float, interval)
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got {interval!r}")
    if grid_size is None:
        grid_size = max(2, int(np.ceil((t1 - t0) * GRID_PER_UNIT)) + 1)
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    ts = np.linspace(t0, t1, int(grid_size))
    a2 = tf.as_function(alpha).eval(ts) ** 2
    b = tf.as_function(beta).eval(ts)
    scale = max(1.0, float(np.max(np.abs(a2))), float(np.max(np.abs(b))))
    tol = 64 * np.finfo(float).eps * scale
    sup_a2 = float(np.max(a2))

    up = (float(np.min(b + 0.5 * a2)), float(np.min(-0.25 * a2 - b)))
    down = (float(np.min(b - 0.25 * a2)), float(np.min(0.5 * a2 - b)))

    if np.all(np.abs(a2) <= tol) and np.all(np.abs(b) <= tol):
        return BandClass(Band.FROZEN, 0.0, up, down)

    def strict(slacks):
        best = max(slacks)
        return best > tol and best >= strict_margin * sup_a2

    if min(up) >= -tol:
        band = Band.UP_STRICT if strict(up) else Band.UP
        return BandClass(band, max(up), up, down)
    if min(down) >= -tol:
        band = Band.DOWN_STRICT if strict(down) else Band.DOWN
        return BandClass(band, max(down), up, down)
    return BandClass(Band.UNCLASSIFIED, max(min(up), min(down)), up, down)


def classify_band(coeffs, n, interval, grid_size=None, strict_margin=DEFAULT_STRICT_MARGIN):
    """Band of regime ``n`` of a coefficient set on ``interval``."""
    return classify_pair(coeffs.alpha(n), coeffs.beta_expr(n), interval, grid_size, strict_margin)
