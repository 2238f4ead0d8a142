"""Sequential construction of the regime schedule T_0 < T_1 < ... and its diagnostics."""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .coefficients import Band, classify_pair
from .errors import MonotonicityError, RangeError, RegimeExhausted
from .gaussian_law import LawCurve
from .normal import std_normal_cdf, std_normal_quantile
from .problem import Levels, ProblemSpec, grid_for

NOT_REACHED = math.inf

# accumulation rule: this many consecutive gaps below T_ATOM_REL * max(1, T)
K_ATOM = 8
T_ATOM_REL = 1e-10
# tail fit when the level list (or the regime cap) runs out
TAIL_WINDOW = 32
TAIL_MIN_BREAKPOINTS = 12
TAIL_MIN_EXPONENT = 1.05

PROBES_PER_SEGMENT = 64
VALIDATION_TOL = 1e-10


class ScheduleStatus(enum.Enum):
    GLOBAL_PROVEN = "GlobalProven"
    FINITE_TMAX = "FiniteTmax"
    HORIZON_TRUNCATED = "HorizonTruncated"


# ---------------------------------------------------------------------------
# root finding

def _brent(h, a, b, ha, hb, ftol, maxiter=200):
    """Brent's method for h(t) = 0 on [a, b] with ha < 0 <= hb.

    Stops when |h| <= ftol or the bracket is at float resolution; returns the
    end point with the smaller residual.
    """
    if abs(ha) < abs(hb):
        a, b, ha, hb = b, a, hb, ha
    c, hc = a, ha
    d = e = b - a
    for _ in range(maxiter):
        if abs(hb) <= ftol:
            return b
        if (hb > 0) == (hc > 0):
            c, hc = a, ha
            d = e = b - a
        if abs(hc) < abs(hb):
            a, b, c = b, c, b
            ha, hb, hc = hb, hc, hb
        xtol = 2.0 * np.finfo(float).eps * abs(b)
        m = 0.5 * (c - b)
        if abs(m) <= xtol:
            return b
        if abs(e) >= xtol and abs(ha) > abs(hb):
            s = hb / ha
            if a == c:
                p, q = 2.0 * m * s, 1.0 - s
            else:
                q0, r = ha / hc, hb / hc
                p = s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0))
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * m * q - abs(xtol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, ha = b, hb
        b += d if abs(d) > xtol else math.copysign(xtol, m)
        hb = h(b)
    return b


def _require_increasing(curve, t, where):
    g = float(curve.slope_g(t))
    if not g > 0.0:
        raise MonotonicityError(
            f"regime {curve.regime}: g({t:.6g}) = {g:.3e} <= 0 while {where}; phi is not increasing",
            t=t, g=g)


def find_crossing(curve, level=None, start=0.0, horizon=1e6, *, score=None, tol=1e-12, step=None):
    """First t >= start with phi(t) = level, or NOT_REACHED (math.inf).

    The level can be given as a probability or, for levels too close to one
    for doubles, directly as a normal score. The root is accurate to ``tol``
    in score space: |f(t*) - Phi^{-1}(level)| <= tol.
    """
    z = std_normal_quantile(level) if score is None else float(score)
    start, horizon = float(start), float(horizon)
    f_start = float(curve.score(start))
    if f_start >= z - tol:
        return start
    f_end = float(curve.score(horizon))
    if math.isfinite(f_end) and f_end < z:
        return NOT_REACHED

    # geometric bracket expansion from start
    h = step if step and step > 0 else 1e-3 * max(1.0, abs(start))
    lo, f_lo = start, f_start
    while True:
        hi = min(start + h, horizon)
        f_hi = float(curve.score(hi))
        _require_increasing(curve, hi, f"expanding the bracket towards score {z:.6g}")
        if f_hi >= z:
            break
        if hi >= horizon:
            return NOT_REACHED
        lo, f_lo = hi, f_hi
        h *= 2.0
    if f_hi - z <= tol:
        return hi
    mid = 0.5 * (lo + hi)
    if mid > start:
        _require_increasing(curve, mid, "refining the crossing")
    return _brent(lambda t: float(curve.score(t)) - z, lo, hi, f_lo - z, f_hi - z, tol)


# ---------------------------------------------------------------------------
# schedule

@dataclass(frozen=True)
class Segment:
    regime: int
    law: LawCurve
    t_start: float
    t_end: float                 # next breakpoint, or the end of an open final regime
    band: Band = Band.UNCLASSIFIED

    @property
    def B_start(self):
        return self.law.mu_off

    @property
    def A_start(self):
        return self.law.var_off


@dataclass(frozen=True)
class Schedule:
    problem: ProblemSpec
    segments: tuple
    breakpoints: tuple           # T_0 = 0 < T_1 < ... (times where a level was hit)
    levels_hit: tuple            # level index reached at breakpoints[1:]
    status: ScheduleStatus
    stop_reason: str
    start_index: int
    open_end: bool               # last segment runs on past the last breakpoint
    tmax_estimate: float | None = None
    notes: tuple = ()

    @property
    def regimes(self):
        return tuple(s.regime for s in self.segments)

    @property
    def end(self):
        return self.segments[-1].t_end

    def _segment_index(self, t):
        if t < 0.0 or t > self.end:
            raise RangeError(f"t={t!r} outside the schedule span [0, {self.end!r}]")
        starts = [s.t_start for s in self.segments]
        return max(0, bisect.bisect_right(starts, t) - 1)

    def law_at(self, t):
        return self.segments[self._segment_index(float(t))].law

    def regime_at(self, t):
        return self.segments[self._segment_index(float(t))].regime

    def _map(self, fn, t):
        if np.ndim(t) == 0:
            return fn(self.law_at(t), float(t))
        ts = np.asarray(t, dtype=float)
        out = np.empty(ts.shape + (2,)) if fn is _mv else np.empty(ts.shape)
        idx = np.array([self._segment_index(float(s)) for s in ts.ravel()]).reshape(ts.shape)
        for k in np.unique(idx):
            mask = idx == k
            out[mask] = np.asarray(fn(self.segments[k].law, ts[mask])).T if fn is _mv else fn(self.segments[k].law, ts[mask])
        return out

    def score(self, t):
        return self._map(lambda law, s: law.score(s), t)

    def phi(self, t):
        return std_normal_cdf(self.score(t))

    def mean_var(self, t):
        """(m, v) for scalar t; an array of shape t.shape + (2,) for arrays."""
        return self._map(_mv, t)

    def cumulative(self):
        """(T, B(T), A(T)) at every breakpoint: int_0^T beta and int_0^T alpha^2 along the schedule."""
        out = [(0.0, 0.0, 0.0)]
        for k, seg in enumerate(self.segments):
            if k + 1 < len(self.breakpoints):
                b, a = seg.law.integrals(seg.t_end)
                out.append((seg.t_end, seg.law.mu_off + b, seg.law.var_off + a))
        return out

    def variances(self):
        """v(T_n) at every breakpoint T_1, T_2, ..."""
        return [self.problem.var0 + a for _, _, a in self.cumulative()[1:]]

    def to_json(self):
        return {
            "status": self.status.value,
            "stop_reason": self.stop_reason,
            "tmax_estimate": self.tmax_estimate,
            "start_index": self.start_index,
            "breakpoints": list(self.breakpoints),
            "levels_hit": list(self.levels_hit),
            "segments": [
                {"regime": s.regime, "t_start": s.t_start, "t_end": s.t_end,
                 "B_start": s.B_start, "A_start": s.A_start}
                for s in self.segments
            ],
            "cumulative": [{"t": t, "B": b, "A": a} for t, b, a in self.cumulative()],
            "notes": list(self.notes),
        }

    def curve_rows(self, points=256):
        """Rows (t, phi, mean, var, regime) sampled at ``points`` per segment."""
        rows = []
        for k, seg in enumerate(self.segments):
            ts = np.linspace(seg.t_start, seg.t_end, points, endpoint=k == len(self.segments) - 1)
            m, v = seg.law.mean_var(ts)
            ph = std_normal_cdf((seg.law.rho.eval(ts) - m) / np.sqrt(v))
            for row in zip(ts, ph, m, v):
                rows.append((*map(float, row), seg.regime))
        return rows


def _mv(law, t):
    return law.mean_var(t)


# ---------------------------------------------------------------------------
# globality / bijectivity

@dataclass(frozen=True)
class Certificate:
    holds: bool
    value: float
    note: str

    def __bool__(self):
        return self.holds


_N_SMALL = 64
_N_DOUBLINGS = 60


def _family_indices(problem):
    size = problem.coeffs.alpha_family.size
    if size is not None:
        return list(range(1, size + 1)), False
    return list(range(1, _N_SMALL + 1)) + [2 ** k for k in range(7, _N_DOUBLINGS + 1)], True


def _alpha_sq_extremes(problem, reducer):
    ts = grid_for(problem)
    window = problem.check_window
    ns, parametric = _family_indices(problem)
    values, where = [], []
    for n in ns:
        a2 = problem.coeffs.alpha(n).eval(ts) ** 2
        a2 = np.where(np.isfinite(a2), a2, np.inf)
        i = int(np.argmax(a2) if reducer is max else np.argmin(a2))
        values.append(float(a2[i]))
        where.append(float(ts[i]))
    return ns, values, where, parametric, window


def check_globality(problem):
    """sup_n sup_t alpha_n(t)^2 <= C for a finite C, checked on the grid."""
    ns, vals, where, parametric, window = _alpha_sq_extremes(problem, max)
    k = int(np.argmax(vals))
    c = vals[k]
    if not math.isfinite(c):
        at = "fails at horizon" if where[k] > window else f"unbounded at t={where[k]:.6g}"
        return Certificate(False, math.inf, f"alpha_{ns[k]}^2 not finite ({at})")
    if where[k] > window and c > max(vals_in_window(problem, ns)) * (1 + 1e-9):
        return Certificate(False, c, f"alpha_{ns[k]}^2 still growing at t={where[k]:.6g}: fails at horizon")
    if parametric and _trend(vals) > 0:
        return Certificate(False, c, f"sup_t alpha_n^2 grows with n (reaches {vals[-1]:.3e} at n = {ns[-1]:.3g})")
    return Certificate(True, c, f"C = {c:.6g} (checked on grid{', n by doubling' if parametric else ''})")


def check_bijectivity(problem):
    """inf_n inf_t alpha_n(t)^2 > 0, checked on the grid."""
    ns, vals, where, parametric, window = _alpha_sq_extremes(problem, min)
    k = int(np.argmin(vals))
    floor = vals[k]
    if not floor > 0.0:
        at = "fails at horizon" if where[k] > window else f"at t={where[k]:.6g}"
        return Certificate(False, floor, f"alpha_{ns[k]}^2 reaches 0 ({at})")
    if where[k] > window and floor < min(vals_in_window(problem, ns, reducer=min)) * (1 - 1e-9):
        return Certificate(False, floor, f"alpha_{ns[k]}^2 decays to {floor:.3e} at t={where[k]:.6g}: fails at horizon")
    if parametric and _trend(vals) < 0:
        return Certificate(False, floor, f"inf_t alpha_n^2 decays with n (down to {vals[-1]:.3e} at n = {ns[-1]:.3g})")
    return Certificate(True, floor, f"floor = {floor:.6g} (checked on grid{', n by doubling' if parametric else ''})")


def vals_in_window(problem, ns, reducer=max):
    ts = np.linspace(0.0, problem.check_window, 2049)
    out = []
    for n in ns:
        a2 = problem.coeffs.alpha(n).eval(ts) ** 2
        out.append(float(np.max(a2) if reducer is max else np.min(a2)))
    return out


def _trend(vals):
    """+1 if the tail over doubling n keeps increasing, -1 if it keeps shrinking, 0 if it settles."""
    tail = np.asarray(vals[-12:])
    scale = max(1e-300, float(np.max(np.abs(tail))))
    diffs = np.diff(tail)
    if np.all(np.abs(diffs) <= 1e-9 * scale):
        return 0
    if np.all(diffs > 0):
        return 1
    if np.all(diffs < 0) and tail[-1] < 1e-6 * tail[0]:
        return -1
    return 0


def globality_lower_bound(problem, c, score):
    """Time that level score z cannot be reached before when sup alpha^2 <= C: (2 sd0 / C) z."""
    return 2.0 * problem.sd0 / c * score


# ---------------------------------------------------------------------------
# building

def _regime_curve(problem, n, prev=None, t=0.0):
    coeffs = problem.coeffs
    alpha, beta = coeffs.alpha(n), coeffs.beta_expr(n)
    if prev is None:
        return LawCurve(problem.mu0_bar, problem.var0, alpha, beta, problem.rho, 0.0, 0.0, 0.0, n)
    return prev.restarted(t, alpha, beta, n)


def _validate_segment(curve, z_lo, z_hi, a, b, probes):
    """Indicator constraint on (a, b): f stays in [z_lo, z_hi]."""
    ts = np.linspace(a, b, probes + 2)[1:-1]
    f = np.asarray(curve.score(ts))
    low = f < z_lo - VALIDATION_TOL
    high = f > z_hi + VALIDATION_TOL
    if low.any() or high.any():
        i = int(np.argmax(low | high))
        g = float(curve.slope_g(ts[i]))
        side = "below" if low[i] else "above"
        raise MonotonicityError(
            f"regime {curve.regime}: phi leaves its interval ({side}) at t={ts[i]:.6g}; "
            f"the indicator constraint fails", t=float(ts[i]), g=g)


def _segment_band(curve, a, b, window):
    """Band of the active regime on [a, min(b, a + window)]."""
    hi = min(b, a + window)
    if not hi > a:
        return Band.UP_STRICT
    bc = classify_pair(curve.alpha, curve.beta, (a, hi), grid_size=min(4097, max(65, int((hi - a) * 2048))))
    return bc.band


def hypotheses_hold(problem, segments):
    """Checked-on-grid version of the standing hypotheses along a schedule.

    Initial mean bound, admissible transformed reference and strictly
    up-band regimes on every segment that was used.
    """
    return (problem.initial_mean_ok and problem.transformed_reference.report.ok
            and all(s.band is Band.UP_STRICT for s in segments))


def start_regime(problem):
    """Regime active at t = 0: m + 1 with m = max{k : phi(0) >= y_k}."""
    f0 = problem.initial_score()
    n = problem.levels.regime_for_score(f0, cap=problem.max_regimes)
    if n is None:
        raise RegimeExhausted(f"phi(0) = {std_normal_cdf(f0):.6g} is above every listed level")
    return n


def build_schedule(problem, *, max_regimes=None, horizon=None):
    """Sequentially construct T_1 < T_2 < ... for the problem."""
    levels = problem.levels
    horizon = problem.horizon if horizon is None else float(horizon)
    max_regimes = problem.max_regimes if max_regimes is None else int(max_regimes)
    n0 = start_regime(problem)
    globality = check_globality(problem)
    notes = []

    segments, breakpoints, hit = [], [0.0], []
    curve = _regime_curve(problem, n0)
    t = 0.0
    n = n0
    small_gaps = 0
    status = stop = None
    tmax = None

    while True:
        z_lo = levels.score(n - 1) if n > 1 else -math.inf
        last_open = levels.count is not None and not levels.truncated and n == levels.count + 1
        if last_open:
            z_hi = math.inf
            t_next = NOT_REACHED
        else:
            z_hi = levels.score(n)
            gap = breakpoints[-1] - breakpoints[-2] if len(breakpoints) > 1 else None
            t_next = find_crossing(curve, start=t, horizon=horizon, score=z_hi, tol=problem.root_tol, step=gap)

        t_end = horizon if t_next == NOT_REACHED else t_next
        probe_end = min(t_end, t + problem.check_window) if t_next == NOT_REACHED else t_end
        if probe_end > t:
            _validate_segment(curve, z_lo, z_hi, t, probe_end, PROBES_PER_SEGMENT)
        band = _segment_band(curve, t, t_end, problem.check_window)
        if band is not Band.UP_STRICT and len(notes) < 20:
            notes.append(f"regime {n} from t={t:.6g} is {band.value}, not strictly in the up band")
        segments.append(Segment(n, curve, t, t_end, band))

        if t_next == NOT_REACHED:
            proven = bool(globality) and hypotheses_hold(problem, segments)
            status = ScheduleStatus.GLOBAL_PROVEN if proven else ScheduleStatus.HORIZON_TRUNCATED
            stop = "last_regime" if last_open else "not_reached"
            break

        if t_next <= t:
            raise MonotonicityError(f"level {n} is already reached when regime {n} starts at t={t:.6g}", t=t, g=0.0)
        breakpoints.append(t_next)
        hit.append(n)
        small_gaps = small_gaps + 1 if t_next - t < T_ATOM_REL * max(1.0, t_next) else 0
        if small_gaps >= K_ATOM:
            stop = "accumulation"
            tmax = _aitken(breakpoints)
            break
        complete = levels.count is not None and not levels.truncated
        if not (levels.has(n + 1) or complete) or len(hit) >= max_regimes:
            stop = "max_regimes" if levels.has(n + 1) or complete else "levels_exhausted"
            break
        if problem.coeffs.alpha_family.size is not None and n + 1 > problem.coeffs.alpha_family.size:
            raise RegimeExhausted(f"regime {n + 1} needed at t={t_next:.6g} but only "
                                  f"{problem.coeffs.alpha_family.size} alphas are given")
        curve = _regime_curve(problem, n + 1, curve, t_next)
        t = t_next
        n += 1

    if stop in ("levels_exhausted", "max_regimes"):
        tmax, fit_note = _tail_estimate(breakpoints, hit)
        notes.append(fit_note)
    if status is None:
        if tmax is not None and not globality:
            status = ScheduleStatus.FINITE_TMAX
        else:
            status = ScheduleStatus.HORIZON_TRUNCATED
            if tmax is not None:
                notes.append("breakpoints look convergent but alpha is bounded; treated as truncation")
                tmax = None

    return Schedule(problem, tuple(segments), tuple(breakpoints), tuple(hit), status, stop, n0,
                    open_end=stop in ("not_reached", "last_regime"), tmax_estimate=tmax, notes=tuple(notes))


def _aitken(ts):
    t0, t1, t2 = ts[-3], ts[-2], ts[-1]
    d1, d2 = t1 - t0, t2 - t1
    denom = d2 - d1
    if denom == 0.0:
        return t2
    return t2 - d2 * d2 / denom


def _tail_estimate(breakpoints, hit):
    """Extrapolate lim T_n from the last gaps; (estimate or None, note)."""
    gaps = np.diff(breakpoints)
    if len(gaps) < TAIL_MIN_BREAKPOINTS:
        return None, f"only {len(gaps)} breakpoints; no extrapolation of T_max"
    w = min(TAIL_WINDOW, len(gaps) // 2)
    k = np.asarray(hit[-w:], dtype=float)
    d = gaps[-w:]
    if np.any(d <= 0):
        return None, "non-positive gaps; no extrapolation"
    logd = np.log(d)
    # power law d_k ~ C k^-p
    A = np.vstack([np.ones_like(k), -np.log(k)]).T
    (logc, p), *_ = np.linalg.lstsq(A, logd, rcond=None)
    res_pow = float(np.sqrt(np.mean((A @ np.array([logc, p]) - logd) ** 2)))
    # geometric d_k ~ C q^k
    G = np.vstack([np.ones_like(k), k]).T
    (logc_g, logq), *_ = np.linalg.lstsq(G, logd, rcond=None)
    res_geo = float(np.sqrt(np.mean((G @ np.array([logc_g, logq]) - logd) ** 2)))

    last_k = k[-1]
    t_last = breakpoints[-1]
    if res_geo < res_pow and logq < 0:
        q = math.exp(logq)
        tail = d[-1] * q / (1.0 - q)
        return t_last + tail, f"geometric gap fit q={q:.6g} (rms {res_geo:.2e}); tail {tail:.6g}"
    if p > TAIL_MIN_EXPONENT:
        tail = math.exp(logc) * float(special.zeta(p, last_k + 1.0))
        return t_last + tail, f"power-law gap fit p={p:.6g} (rms {res_pow:.2e}); tail {tail:.6g}"
    return None, f"gaps decay too slowly (power-law p={p:.6g}); sum looks divergent"


# ---------------------------------------------------------------------------
# generated levels, re-indexing, verification

def levels_from_times(problem, times):
    """Levels y_n := phi_hat(t_n) of the law that switches to regime n+1 exactly at t_n.

    With these levels the solver must return T_n = t_n.
    """
    ts = [float(x) for x in times]
    if not ts:
        raise ValueError("need at least one time")
    if ts[0] <= 0.0 or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be positive and strictly increasing")
    curve = _regime_curve(problem, 1)
    scores = []
    prev = 0.0
    for n, t in enumerate(ts, start=1):
        if n > 1:
            curve = _regime_curve(problem, n, curve, prev)
        scores.append(float(curve.score(t)))
        prev = t
    f0 = problem.initial_score()
    chain = [f0] + scores
    if any(b <= a for a, b in zip(chain, chain[1:])):
        raise ValueError("generated levels are not strictly increasing (phi_hat is not increasing)")
    return Levels.from_scores(scores, truncated=True)


def reindexed(problem, m):
    """Equivalent problem with levels y~_n = y_{n+m} and alpha~_n = alpha_{n+m}."""
    if m == 0:
        return problem
    lv = problem.levels
    if lv.scores is None:
        raise ValueError("re-indexing is only supported for listed levels")
    levels = Levels(scores=lv.scores[m:], truncated=lv.truncated)
    c = problem.coeffs
    coeffs = replace(c, alpha_family=c.alpha_family.shifted(m))
    return replace(problem, coeffs=coeffs, levels=levels)


def verify_schedule(schedule, probes=PROBES_PER_SEGMENT, tol=1e-8):
    """Schedule invariants as a list of failures (empty when all hold).

    phi(T_n) = y_n in score space, phi inside [y_{n-1}, y_n) at interior probes,
    breakpoints strictly increasing and phi increasing between probes.
    """
    issues = []
    lv = schedule.problem.levels
    bps = schedule.breakpoints
    if any(b <= a for a, b in zip(bps, bps[1:])):
        issues.append("breakpoints not strictly increasing")
    for seg in schedule.segments:
        n = seg.regime
        z_lo = lv.score(n - 1) if n > 1 else -math.inf
        z_hi = lv.score(n) if lv.has(n) else math.inf
        end = seg.t_end if math.isfinite(seg.t_end) else seg.t_start + 1.0
        if seg is schedule.segments[-1] and schedule.open_end:
            end = min(end, seg.t_start + schedule.problem.check_window)
        ts = np.linspace(seg.t_start, end, probes + 2)[1:-1]
        f = np.asarray(seg.law.score(ts))
        if np.any(f < z_lo - VALIDATION_TOL) or np.any(f >= z_hi + VALIDATION_TOL):
            issues.append(f"regime {n}: phi leaves [y_{n - 1}, y_{n}) on ({seg.t_start:.6g}, {end:.6g})")
        if np.any(np.diff(f) < 0):
            issues.append(f"regime {n}: phi not increasing on ({seg.t_start:.6g}, {end:.6g})")
    for t_n, n in zip(bps[1:], schedule.levels_hit):
        err = abs(float(_law_before(schedule, t_n).score(t_n)) - lv.score(n))
        if err > tol:
            issues.append(f"f(T_{n}) misses level {n} by {err:.3e}")
    return issues


def _law_before(schedule, t):
    """Law of the segment that ends at breakpoint t."""
    for seg in schedule.segments:
        if seg.t_end == t:
            return seg.law
    return schedule.law_at(t)


# ---------------------------------------------------------------------------
# maximality diagnostic

@dataclass(frozen=True)
class VarianceReport:
    variances: tuple
    increasing: bool
    increment_exponent: float | None
    unbounded: bool
    bound_holds: bool
    notes: tuple = field(default=())


def variance_divergence_diagnostic(schedule):
    """v(T_n) along the breakpoints and whether it grows without bound.

    Unbounded means increasing with increments decaying no faster than 1/n
    (fitted exponent <= 1.05), so the partial sums diverge like the harmonic
    series. The lower bound v(T_n) >= sd0^2 + 2 sd0 Phi^{-1}(y_n) is checked
    at every breakpoint with y_n >= 1/2.
    """
    problem = schedule.problem
    v = schedule.variances()
    notes = []
    if len(v) < 2:
        return VarianceReport(tuple(v), True, None, False, True, ("fewer than two breakpoints",))
    inc = np.diff([problem.var0] + v)
    increasing = bool(np.all(inc > 0))
    exponent = None
    unbounded = False
    if len(inc) >= 8 and np.all(inc > 0):
        w = min(TAIL_WINDOW, len(inc) // 2)
        k = np.asarray(schedule.levels_hit[-w:], dtype=float)
        A = np.vstack([np.ones_like(k), -np.log(k)]).T
        (_, p), *_ = np.linalg.lstsq(A, np.log(inc[-w:]), rcond=None)
        exponent = float(p)
        unbounded = exponent <= TAIL_MIN_EXPONENT
    sd0 = problem.sd0
    bound_holds = True
    for vn, n in zip(v, schedule.levels_hit):
        z = problem.levels.score(n)
        if z >= 0 and vn < problem.var0 + 2.0 * sd0 * z - 1e-9 * max(1.0, vn):
            bound_holds = False
            notes.append(f"v(T_{n}) = {vn:.6g} below the bound {problem.var0 + 2 * sd0 * z:.6g}")
    return VarianceReport(tuple(v), increasing, exponent, unbounded, bound_holds, tuple(notes))
