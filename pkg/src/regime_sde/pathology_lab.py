"""Single-level problems: verdicts, explicit solution branches and the oscillation probe.

The transformed process restarts at ``t0`` from a Gaussian law with
P(xi <= mu0_bar) = y; the low regime drives it while phi < y and the high
regime once phi >= y. The reference is the constant mu0_bar.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import timefunc as tf
from .coefficients import DEFAULT_STRICT_MARGIN, Band, BandClass, classify_pair
from .errors import VerdictMismatch
from .gaussian_law import LawCurve
from .kernels import get_backend
from .normal import std_normal_cdf, std_normal_quantile

LOW, HIGH = 1, 2
PROBES = 128


class VerdictKind(enum.Enum):
    UNIQUE_UP = "UniqueUp"
    UNIQUE_DOWN = "UniqueDown"
    TWO_SOLUTIONS = "TwoSolutions"
    INFINITELY_MANY = "InfinitelyMany"
    NO_LOCAL_SOLUTION = "NoLocalSolution"
    NOT_COVERED = "NotCoveredByPaper"


_TABLE = {
    (Band.DOWN_STRICT, Band.UP_STRICT): VerdictKind.TWO_SOLUTIONS,
    (Band.UP_STRICT, Band.DOWN_STRICT): VerdictKind.NO_LOCAL_SOLUTION,
    (Band.DOWN_STRICT, Band.FROZEN): VerdictKind.INFINITELY_MANY,
    (Band.UP_STRICT, Band.UP_STRICT): VerdictKind.UNIQUE_UP,
    (Band.DOWN_STRICT, Band.DOWN_STRICT): VerdictKind.UNIQUE_DOWN,
}


def verdict_for(low_band, high_band):
    """The verdict table: a pure function of the two bands."""
    return _TABLE.get((low_band, high_band), VerdictKind.NOT_COVERED)


@dataclass(frozen=True)
class LevelProblem:
    y: float
    alpha_low: tf.TimeFunction
    beta_low: tf.TimeFunction
    alpha_high: tf.TimeFunction
    beta_high: tf.TimeFunction
    t0: float = 0.0
    mu0_bar: float = 0.0
    var0: float = 1.0
    mu_off: float = 0.0
    var_off: float = 0.0
    window: float = 1.0

    @classmethod
    def build(cls, y, low, high, *, t0=0.0, mu0_bar=0.0, var0=1.0, var_off=0.0, window=1.0):
        """Choose the restart mean offset so that P(xi <= mu0_bar) = y."""
        sd = math.sqrt(var0 + var_off)
        mu_off = -sd * std_normal_quantile(y)
        a1, b1 = (tf.as_function(v) for v in low)
        a2, b2 = (tf.as_function(v) for v in high)
        return cls(float(y), a1, b1, a2, b2, float(t0), float(mu0_bar), float(var0),
                   float(mu_off), float(var_off), float(window))

    @property
    def mean(self):
        return self.mu0_bar + self.mu_off

    @property
    def var(self):
        return self.var0 + self.var_off

    @property
    def restart_ok(self):
        """|mu_off| <= var_off / 2."""
        return abs(self.mu_off) <= 0.5 * self.var_off + 1e-12

    def level_error(self):
        """|Phi((mu0_bar - mean) / sd) - y|."""
        return abs(std_normal_cdf((self.mu0_bar - self.mean) / math.sqrt(self.var)) - self.y)

    @property
    def interval(self):
        return (self.t0, self.t0 + self.window)

    def law(self, regime, t_start=None, mu_off=None, var_off=None):
        """Law curve that runs ``regime`` from t_start with the given offsets."""
        a, b = (self.alpha_low, self.beta_low) if regime == LOW else (self.alpha_high, self.beta_high)
        return LawCurve(self.mu0_bar, self.var0, a, b, tf.const(self.mu0_bar),
                        self.t0 if t_start is None else t_start,
                        self.mu_off if mu_off is None else mu_off,
                        self.var_off if var_off is None else var_off, regime)

    def to_json(self):
        return {
            "y": self.y, "t0": self.t0, "mu0_bar": self.mu0_bar, "var0": self.var0,
            "mu_off": self.mu_off, "var_off": self.var_off, "window": self.window,
            "low": {"alpha": self.alpha_low.to_json(), "beta": self.beta_low.to_json()},
            "high": {"alpha": self.alpha_high.to_json(), "beta": self.beta_high.to_json()},
        }


def level_problem_from_coefficients(coeffs, y, **kw):
    """Level problem whose regimes are alpha_1/beta_1 (low) and alpha_2/beta_2 (high)."""
    low = (coeffs.alpha(1), coeffs.beta_expr(1))
    high = (coeffs.alpha(2), coeffs.beta_expr(2))
    return LevelProblem.build(y, low, high, **kw)


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    low: BandClass
    high: BandClass
    reasons: tuple = ()

    @property
    def name(self):
        return self.kind.value

    def to_json(self):
        return {"verdict": self.kind.value, "low_band": self.low.name, "high_band": self.high.name,
                "low_margin": self.low.margin, "high_margin": self.high.margin,
                "reasons": list(self.reasons)}


def classify_level(problem, grid_size=None, strict_margin=DEFAULT_STRICT_MARGIN):
    low = classify_pair(problem.alpha_low, problem.beta_low, problem.interval, grid_size, strict_margin)
    high = classify_pair(problem.alpha_high, problem.beta_high, problem.interval, grid_size, strict_margin)
    kind = verdict_for(low.band, high.band)
    reasons = ()
    if kind is VerdictKind.NOT_COVERED:
        reasons = (f"low regime {low.describe()}", f"high regime {high.describe()}")
    return Verdict(kind, low, high, reasons)


# ---------------------------------------------------------------------------
# explicit solutions

@dataclass(frozen=True)
class Branch:
    """Piecewise law: tuple of (regime, law, t_start, t_end) with t_end possibly inf."""

    name: str
    pieces: tuple
    checks: tuple = ()

    def _law(self, t):
        for regime, law, a, b in self.pieces:
            if a <= t <= b:
                return law
        raise ValueError(f"t={t!r} before the branch starts")

    def score(self, t):
        if np.ndim(t) == 0:
            return float(self._law(float(t)).score(float(t)))
        return np.array([self.score(float(s)) for s in np.asarray(t).ravel()]).reshape(np.shape(t))

    def phi(self, t):
        return std_normal_cdf(self.score(t))

    def slope_sign(self, t):
        g = float(self._law(float(t)).slope_g(float(t)))
        return (g > 0) - (g < 0), g

    def regime_at(self, t):
        for regime, _, a, b in self.pieces:
            if a <= t < b:
                return regime
        return self.pieces[-1][0]

    def trace(self, ts):
        return [(float(t), float(self.phi(float(t))), self.regime_at(float(t))) for t in ts]

    def to_json(self, ts=None):
        out = {"name": self.name,
               "pieces": [{"regime": r, "t_start": a, "t_end": b if math.isfinite(b) else None}
                          for r, _, a, b in self.pieces],
               "checks": list(self.checks)}
        if ts is not None:
            out["trace"] = [{"t": t, "phi": p, "regime": r} for t, p, r in self.trace(ts)]
        return out


def _probe_times(problem, start=None, probes=PROBES):
    a = problem.t0 if start is None else start
    return np.linspace(a, a + problem.window, probes + 1)[1:]


def _indicator_failures(problem, branch, ts):
    """Probe times where the active regime is not the one phi selects (low iff phi < y).

    phi = y is decided in score space with a 1e-12 tolerance, so a frozen
    stretch that sits exactly on the level counts as phi >= y. Switch instants
    between pieces are skipped: a single time point carries no weight.
    """
    z_y = std_normal_quantile(problem.y)
    cuts = {float(b) for _, _, _, b in branch.pieces[:-1]}
    bad = []
    for t in ts:
        if float(t) in cuts:
            continue
        f = branch.score(float(t))
        want = LOW if f < z_y - 1e-12 else HIGH
        if branch.regime_at(float(t)) != want:
            bad.append(float(t))
    return bad


def construct_branches(problem, probes=PROBES):
    """The two solutions: low regime forever (phi falls) and high regime forever (phi rises)."""
    verdict = classify_level(problem)
    if verdict.kind is not VerdictKind.TWO_SOLUTIONS:
        raise VerdictMismatch(f"two branches need verdict TwoSolutions, got {verdict.name}")
    ts = _probe_times(problem, probes=probes)
    out = []
    for name, regime, want in (("low", LOW, -1), ("high", HIGH, 1)):
        law = problem.law(regime)
        branch = Branch(name, ((regime, law, problem.t0, math.inf),))
        signs = [branch.slope_sign(float(t))[0] for t in ts]
        bad = _indicator_failures(problem, branch, ts)
        if any(s != want for s in signs) or bad:
            raise VerdictMismatch(f"{name} branch fails its checks (slope signs or indicator at {bad[:3]})")
        checks = (f"phi {'decreasing' if want < 0 else 'increasing'} at {probes} probes",
                  f"indicator constraint holds at {probes} probes")
        out.append(Branch(name, branch.pieces, checks))
    return tuple(out)


def construct_delay_family(problem, w, probes=PROBES):
    """Frozen on [t0, t0 + w] (phi = y), then the low regime with phi decreasing."""
    if w < 0:
        raise ValueError("delay must be >= 0")
    verdict = classify_level(problem)
    if verdict.kind is not VerdictKind.INFINITELY_MANY:
        raise VerdictMismatch(f"delay family needs verdict InfinitelyMany, got {verdict.name}")
    t0 = problem.t0
    pieces = []
    if w > 0:
        frozen = problem.law(HIGH)
        pieces.append((HIGH, frozen, t0, t0 + w))
        b, a = frozen.integrals(t0 + w)
        low = problem.law(LOW, t0 + w, problem.mu_off + b, problem.var_off + a)
    else:
        low = problem.law(LOW)
    pieces.append((LOW, low, t0 + w, math.inf))
    branch = Branch(f"delay w={w:g}", tuple(pieces))
    after = _probe_times(problem, t0 + w, probes)
    if any(branch.slope_sign(float(t))[0] >= 0 for t in after):
        raise VerdictMismatch("phi does not decrease after the delay")
    checks = [f"phi decreasing at {probes} probes after t0 + w"]
    if w > 0:
        during = np.linspace(t0, t0 + w, probes)
        err = float(np.max(np.abs(branch.phi(during) - problem.y)))
        checks.append(f"max |phi - y| on the frozen part = {err:.3e}")
    return Branch(branch.name, branch.pieces, tuple(checks))


def candidate_solutions(problem, delays=(0.25, 0.5), probes=PROBES):
    """Constant-regime candidates that satisfy the indicator constraint on the window.

    Candidates: low regime forever, high regime forever and, when the high
    regime is frozen, a few delayed switches to the low regime.
    """
    ts = _probe_times(problem, probes=probes)
    cands = [Branch("low", ((LOW, problem.law(LOW), problem.t0, math.inf),)),
             Branch("high", ((HIGH, problem.law(HIGH), problem.t0, math.inf),))]
    if classify_level(problem).high.band is Band.FROZEN:
        for w in delays:
            frozen = problem.law(HIGH)
            b, a = frozen.integrals(problem.t0 + w)
            low = problem.law(LOW, problem.t0 + w, problem.mu_off + b, problem.var_off + a)
            cands.append(Branch(f"delay w={w:g}", ((HIGH, frozen, problem.t0, problem.t0 + w),
                                                   (LOW, low, problem.t0 + w, math.inf))))
    return [c for c in cands if not _indicator_failures(problem, c, ts)]


# ---------------------------------------------------------------------------
# oscillation

@dataclass(frozen=True)
class ProbeReport:
    steps: int
    dt: float
    flips: int
    max_excursion: float
    mean_excursion: float
    flips_half: int | None = None
    mean_excursion_half: float | None = None
    rows: tuple = field(default=(), repr=False)

    @property
    def flips_ok(self):
        return self.flips >= self.steps / 10

    @property
    def excursion_shrinks(self):
        """Mean excursion at dt/2 does not exceed the one at dt."""
        if self.mean_excursion_half is None:
            return None
        return self.mean_excursion_half <= self.mean_excursion

    def to_json(self):
        return {"steps": self.steps, "dt": self.dt, "flips": self.flips,
                "max_excursion": self.max_excursion, "mean_excursion": self.mean_excursion,
                "flips_half": self.flips_half, "mean_excursion_half": self.mean_excursion_half,
                "flips_ok": self.flips_ok, "excursion_shrinks": self.excursion_shrinks}


def _run_level_particles(problem, dt, steps, n, seed, backend):
    kern = get_backend(backend)
    y = problem.mean + math.sqrt(problem.var) * kern.normals(seed, 0, n)
    a_low, a_high = problem.alpha_low * problem.alpha_low, problem.alpha_high * problem.alpha_high
    rows = []
    flips = 0
    prev_sign = None
    excursions = []
    for k in range(steps + 1):
        t = problem.t0 + k * dt
        p = kern.count_le(y, problem.mu0_bar) / n
        regime = LOW if p < problem.y else HIGH
        sign = 1 if p >= problem.y else -1
        if prev_sign is not None and sign != prev_sign:
            flips += 1
        prev_sign = sign
        excursions.append(abs(p - problem.y))
        rows.append((k, p, regime, flips))
        if k == steps:
            break
        beta, a2 = (problem.beta_low, a_low) if regime == LOW else (problem.beta_high, a_high)
        mb = beta.integral(t, t + dt)
        va = max(a2.integral(t, t + dt), 0.0)
        kern.advance_gaussian(y, mb, math.sqrt(va), seed, k + 1)
    ex = np.asarray(excursions[1:])
    return flips, float(ex.max()), float(ex.mean()), tuple(rows)


def oscillation_probe(problem, dt, steps, n, seed, compare=True, backend=None):
    """Self-consistent particles at the level; counts sign changes of phi_hat - y.

    With ``compare`` a second run at dt/2 over the same time span reports
    whether the mean excursion |phi_hat - y| shrinks.
    """
    verdict = classify_level(problem)
    if verdict.kind is not VerdictKind.NO_LOCAL_SOLUTION:
        raise VerdictMismatch(f"oscillation probe needs verdict NoLocalSolution, got {verdict.name}")
    flips, mx, mean, rows = _run_level_particles(problem, dt, steps, n, seed, backend)
    flips_h = mean_h = None
    if compare:
        flips_h, _, mean_h, _ = _run_level_particles(problem, dt / 2, 2 * steps, n, seed, backend)
    return ProbeReport(steps, dt, flips, mx, mean, flips_h, mean_h, rows)


def level_problem_from_file(problem):
    """Level problem described by a problem file's ``pathology`` section.

    The level is y_k (``level_index``, default 1); the low and high regimes are
    alpha_k/beta_k and alpha_{k+1}/beta_{k+1} unless given explicitly as
    ``low``/``high`` {alpha, beta} expression pairs.
    """
    cfg = dict(problem.pathology or {})
    k = int(cfg.get("level_index", 1))
    y = problem.levels.prob(k)
    coeffs = problem.coeffs

    def pair(key, n):
        if key in cfg:
            return tf.from_json(cfg[key]["alpha"]), tf.from_json(cfg[key]["beta"])
        return coeffs.alpha(n), coeffs.beta_expr(n)

    return LevelProblem.build(y, pair("low", k), pair("high", k + 1), t0=float(cfg.get("t0", 0.0)),
                              mu0_bar=problem.mu0_bar, var0=problem.var0,
                              var_off=float(cfg.get("var_off", 0.0)), window=float(cfg.get("window", 1.0)))
