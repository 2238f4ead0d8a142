"""Exact sampling along a schedule and self-consistent particle simulation."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace

import numpy as np

from . import transform
from .errors import DomainExit, RangeError, RegimeExhausted
from .kernels import get_backend

TRANSFORMED = "transformed"
ORIGINAL = "original"
PATH_DUMP_CAP = 100


@dataclass(frozen=True)
class PathBatch:
    """States of N paths at recorded times (rows) in one coordinate system."""

    times: np.ndarray
    states: np.ndarray           # shape (len(times), N)
    coords: str
    seed: int
    stream_ids: np.ndarray       # path i draws from the counter stream (seed, i, step)
    valid: bool = True

    @property
    def count(self):
        return self.states.shape[1]

    def index_of(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise RangeError(f"t={t!r} is not a recorded time of this batch")
        return i

    def at(self, t):
        return self.states[self.index_of(t)]

    def dump_rows(self, cap=PATH_DUMP_CAP):
        """(t, path, state) for at most ``cap`` paths."""
        k = min(cap, self.count)
        return [(float(t), int(p), float(self.states[i, p]))
                for i, t in enumerate(self.times) for p in range(k)]


@dataclass(frozen=True)
class EmpiricalCurve:
    t: np.ndarray
    phi_hat: np.ndarray
    regime: np.ndarray
    mean_hat: np.ndarray
    var_hat: np.ndarray

    def rows(self):
        return [(float(a), float(b), int(c), float(d), float(e))
                for a, b, c, d, e in zip(self.t, self.phi_hat, self.regime, self.mean_hat, self.var_hat)]


@dataclass(frozen=True)
class SimulationResult:
    curve: EmpiricalCurve
    batch: PathBatch
    exits: int = 0
    notes: tuple = ()


def empirical_phi(batch, t, threshold):
    """Fraction of paths with state <= threshold at recorded time t (ties count as <=)."""
    states = batch.at(t)
    return np.count_nonzero(states <= threshold) / states.size


def transform_batch(coeffs, batch, to):
    """Map a batch between coordinate systems with F or G applied at each recorded time."""
    if to not in (TRANSFORMED, ORIGINAL):
        raise ValueError(f"unknown coordinates {to!r}")
    if batch.coords == to:
        return batch
    fn = transform.inverse if to == ORIGINAL else transform.forward
    states = np.vstack([np.asarray(fn(coeffs, float(t), row), dtype=float)
                        for t, row in zip(batch.times, batch.states)])
    return replace(batch, states=states, coords=to)


def _moments(x):
    m = float(np.mean(x))
    v = float(np.var(x, ddof=1)) if x.size > 1 else 0.0
    return m, v


# ---------------------------------------------------------------------------
# exact sampling

def simulate_exact(schedule, n, times, seed, backend=None):
    """Transformed paths sampled exactly at ``times`` along a schedule.

    Increments between output times are Normal(Delta B, Delta A) with B, A the
    schedule's cumulative drift and variance integrals: no discretisation error.
    """
    kern = get_backend(backend)
    problem = schedule.problem
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    if np.any(np.diff(ts) < 0):
        raise ValueError("times must be non-decreasing")
    if ts[0] < 0.0 or ts[-1] > schedule.end:
        raise RangeError(f"times must lie in the schedule span [0, {schedule.end!r}]")
    mv = schedule.mean_var(ts)
    y = problem.mu0_bar + problem.sd0 * kern.normals(seed, 0, n)
    states = np.empty((ts.size, n))
    rho = problem.rho
    phi_hat, regime, means, variances = [], [], [], []
    prev_m, prev_v, prev_t = problem.mu0_bar, problem.var0, 0.0
    for k, t in enumerate(ts):
        m, v = mv[k]
        if t > prev_t:
            kern.advance_gaussian(y, m - prev_m, math.sqrt(max(v - prev_v, 0.0)), seed, k + 1)
        prev_m, prev_v, prev_t = m, v, t
        states[k] = y
        phi_hat.append(kern.count_le(y, rho.eval(t)) / n)
        regime.append(schedule.regime_at(t))
        mm, vv = _moments(y)
        means.append(mm)
        variances.append(vv)
    curve = EmpiricalCurve(ts.copy(), np.array(phi_hat), np.array(regime), np.array(means), np.array(variances))
    batch = PathBatch(ts.copy(), states, TRANSFORMED, int(seed), np.arange(n))
    return SimulationResult(curve, batch)


# ---------------------------------------------------------------------------
# particle system

class _RegimeSelector:
    """Regime n with phi_hat in [y_{n-1}, y_n), with cached level probabilities.

    For infinitely many levels the search stops at the first level that rounds
    to 1.0 in double precision (phi_hat = 1 saturates there) or at ``cap``.
    """

    def __init__(self, levels, cap):
        self.levels = levels
        self.cap = cap
        self.probs = []

    def _extend(self, upto):
        while len(self.probs) < upto:
            self.probs.append(self.levels.prob(len(self.probs) + 1))

    def __call__(self, p):
        lv = self.levels
        if lv.count is not None:
            self._extend(lv.count)
            i = bisect.bisect_right(self.probs, p)
            if i < lv.count:
                return i + 1
            if not lv.truncated:
                return lv.count + 1
            raise RegimeExhausted(f"phi_hat = {p!r} is above all {lv.count} listed levels")
        while True:
            if self.probs and self.probs[-1] > p:
                return bisect.bisect_right(self.probs, p) + 1
            if self.probs and (self.probs[-1] >= 1.0 or len(self.probs) >= self.cap):
                return len(self.probs)
            self._extend(len(self.probs) + 1)


class _RegimeIntegrals:
    """Per-step integrals of beta_n and alpha_n^2 for the transformed step."""

    def __init__(self, coeffs):
        self.coeffs = coeffs
        self._cache = {}

    def get(self, n):
        item = self._cache.get(n)
        if item is None:
            alpha = self.coeffs.alpha(n)
            item = (alpha, self.coeffs.beta_expr(n), alpha * alpha)
            self._cache[n] = item
        return item

    def step(self, n, t0, t1):
        _, beta, a2 = self.get(n)
        return beta.integral(t0, t1), max(a2.integral(t0, t1), 0.0)


def _snapshot_steps(steps, snapshots):
    k = max(2, int(snapshots))
    return sorted(set(np.linspace(0, steps, min(k, steps + 1)).round().astype(int).tolist()))


def simulate_particles(problem, n, dt, horizon, seed, coords=TRANSFORMED, scheme=None,
                       implicit=False, snapshots=11, backend=None, max_implicit_iter=5):
    """Self-consistent N-particle system with the regime chosen from phi_hat each step.

    ``coords`` picks the coordinate system of the returned batch. ``scheme`` is
    "exact" (Gaussian steps for Y = F(t, X), mapped back with G when original
    coordinates are requested) or "euler" (raw Euler-Maruyama on X, which can
    leave U_t). The default is "exact".

    With ``implicit=True`` the regime of each step is re-chosen from the
    post-step phi_hat until it is self-consistent (at most
    ``max_implicit_iter`` tries, then the explicit choice is kept).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if coords not in (TRANSFORMED, ORIGINAL):
        raise ValueError(f"unknown coordinates {coords!r}")
    scheme = scheme or "exact"
    if scheme not in ("exact", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}")
    kern = get_backend(backend)
    coeffs = problem.coeffs
    steps = max(1, int(round(horizon / dt)))
    grid = np.arange(steps + 1) * dt
    snap = set(_snapshot_steps(steps, snapshots))
    select = _RegimeSelector(problem.levels, problem.max_regimes)
    integ = _RegimeIntegrals(coeffs)
    rho = problem.rho
    r = problem.reference
    euler = scheme == "euler"

    state = problem.mu0_bar + problem.sd0 * kern.normals(seed, 0, n)
    if euler:
        state = np.asarray(transform.inverse(coeffs, 0.0, state), dtype=float).reshape(-1)

    def threshold(t):
        return r.eval(t) if euler else rho.eval(t)

    def record_state(t):
        if coords == ORIGINAL and not euler:
            return np.asarray(transform.inverse(coeffs, t, state), dtype=float).reshape(-1)
        if coords == TRANSFORMED and euler:
            return np.asarray(transform.forward(coeffs, t, state), dtype=float).reshape(-1)
        return state.copy()

    def advance(x, regime, k):
        t0, t1 = grid[k], grid[k + 1]
        if euler:
            s1, s2 = coeffs.sigma1.eval(t0), coeffs.sigma2.eval(t0)
            t_state = (s1, s2, coeffs.dsigma1.eval(t0), coeffs.dsigma2.eval(t0), coeffs.drift_param.eval(t0))
            t_next = (coeffs.sigma1.eval(t1), coeffs.sigma2.eval(t1))
            alpha = integ.get(regime)[0].eval(t0)
            return kern.advance_euler(x, t_state, t_next, t1 - t0, alpha, coeffs.additive_mode, seed, k + 1)
        mb, va = integ.step(regime, t0, t1)
        kern.advance_gaussian(x, mb, math.sqrt(va), seed, k + 1)
        return 0

    ts, phis, regimes, means, variances = [], [], [], [], []
    snap_t, snap_states = [], []
    exits = 0
    notes = []
    for k in range(steps + 1):
        t = grid[k]
        p = kern.count_le(state, threshold(t)) / n
        regime = select(p)
        m, v = _moments(state)
        ts.append(t)
        phis.append(p)
        regimes.append(regime)
        means.append(m)
        variances.append(v)
        if k in snap:
            snap_t.append(t)
            snap_states.append(record_state(t))
        if k == steps:
            break
        if implicit:
            regime = _implicit_regime(state, regime, k, advance, select, threshold, grid, n, kern,
                                      max_implicit_iter)
            regimes[-1] = regime
        exits = advance(state, regime, k)
        if exits:
            t_exit = grid[k + 1]
            curve = EmpiricalCurve(np.array(ts), np.array(phis), np.array(regimes),
                                   np.array(means), np.array(variances))
            batch = PathBatch(np.array(snap_t), np.array(snap_states), coords, int(seed), np.arange(n),
                              valid=False)
            raise DomainExit(f"{exits} particle(s) left U_t in the step ending at t={t_exit:.6g}",
                             t=float(t_exit), count=exits,
                             result=SimulationResult(curve, batch, exits, tuple(notes)))

    curve = EmpiricalCurve(np.array(ts), np.array(phis), np.array(regimes), np.array(means), np.array(variances))
    batch = PathBatch(np.array(snap_t), np.array(snap_states), coords, int(seed), np.arange(n))
    return SimulationResult(curve, batch, exits, tuple(notes))


def _implicit_regime(state, regime, k, advance, select, threshold, grid, n, kern, max_iter):
    seen = [regime]
    for _ in range(max_iter):
        trial = state.copy()
        advance(trial, regime, k)
        nxt = select(kern.count_le(trial, threshold(grid[k + 1])) / n)
        if nxt == regime:
            return regime
        if nxt in seen:
            break
        seen.append(nxt)
        regime = nxt
    return seen[0]


def regime_switch_times(curve):
    """Times at which the regime trace changes value."""
    reg = np.asarray(curve.regime)
    idx = np.nonzero(np.diff(reg))[0] + 1
    return np.asarray(curve.t)[idx], reg[idx]
