"""Built-in problems and the named demos that run them.

The problem documents here are the single source for the CLI demos, the
``problems/*.json`` files and the test fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import timefunc as tf
from . import transform
from .coefficients import CoefficientSet, check_drift_ode
from .monte_carlo import ORIGINAL, simulate_exact, simulate_particles
from .normal import std_normal_cdf
from .pathology_lab import (
    LevelProblem,
    candidate_solutions,
    classify_level,
    construct_branches,
    construct_delay_family,
    level_problem_from_file,
    oscillation_probe,
)
from .problem import problem_from_dict
from .regime_solver import (
    build_schedule,
    check_bijectivity,
    check_globality,
    variance_divergence_diagnostic,
    verify_schedule,
)

DEMO_SEED = 20240101

SQRT_2N = {"op": "pow", "args": [{"op": "mul", "args": [2.0, "n"]}, 0.5]}
N_OVER_N1 = {"op": "mul", "args": ["n", {"op": "pow", "args": [{"op": "add", "args": ["n", 1.0]}, -1.0]}]}
EXP_MINUS_T = {"op": "exp", "args": [{"op": "mul", "args": [-1.0, "t"]}]}


def _doc(name, coefficients, levels, reference=1.0, mu0_bar=0.0, var0=1.0, **extra):
    doc = {"name": name, "coefficients": coefficients,
           "initial_law": {"mu0_bar": mu0_bar, "sigma0_sq": var0},
           "reference": reference, "levels": levels}
    doc.update(extra)
    return doc


def explosion_coefficients():
    """GBM-type family: sigma = x, no drift, alpha_n = sqrt(2n) (so beta_n = -n)."""
    return {"mode": "multiplicative", "sigma1": 1.0, "sigma2": 0.0, "drift_param": 0.0,
            "alpha_family": {"expr": SQRT_2N}}


PROBLEM_DOCS = {
    "gaussian": lambda: _doc(
        "gaussian",
        {"mode": "additive", "sigma2": {"op": "add", "args": [1.0, "t"]},
         "drift_param": {"op": "affine", "args": ["t", -0.3, -0.3]},
         "alpha_family": {"list": [1.0, 0.95, 0.9, 0.85]}},
        {"list": [0.6, 0.75, 0.9]}, reference=0.0,
        simulation={"N": 100_000, "dt": 1e-3, "T": 2.0, "seed": DEMO_SEED}),
    "linear": lambda: _doc(
        "linear",
        {"mode": "multiplicative", "sigma1": 1.0, "sigma2": 0.0, "drift_param": 0.1,
         "alpha_family": {"list": [1.0, 1.2, 1.5, 2.0]}},
        {"list": [0.6, 0.75, 0.9]},
        simulation={"N": 10_000, "dt": 1e-3, "T": 1.0, "seed": DEMO_SEED}),
    "logdrift": lambda: _doc(
        "logdrift",
        {"mode": "multiplicative", "sigma1": EXP_MINUS_T, "sigma2": 0.0, "drift_param": 0.0,
         "alpha_family": {"list": [1.0, 0.5]}},
        {"list": [0.6]}, reference={"op": "exp", "args": ["t"]},
        solver={"horizon": 50.0, "check_window": 10.0}),
    "explosion-finite": lambda: _doc(
        "explosion-finite", explosion_coefficients(),
        {"from_times": {"times": N_OVER_N1, "count": 200}},
        simulation={"N": 10_000, "dt": 1e-3, "T": 0.5, "seed": DEMO_SEED}),
    "explosion-global": lambda: _doc(
        "explosion-global", explosion_coefficients(),
        {"from_times": {"times": [float(n) for n in range(1, 21)], "count": 20}}),
    "two-solutions": lambda: _doc(
        "two-solutions",
        {"mode": "multiplicative", "sigma1": 1.0, "sigma2": 0.0, "drift_param": 0.9,
         "alpha_family": {"list": [1.0, 2.0]}},
        {"list": [0.5]}, pathology={"level_index": 1, "window": 1.0}),
    "infinite": lambda: _doc(
        "infinite",
        {"mode": "multiplicative", "sigma1": 1.0, "sigma2": 0.0, "drift_param": 0.9,
         "alpha_family": {"list": [1.0, 2.0]}},
        {"list": [0.5]},
        pathology={"level_index": 1, "window": 1.0,
                   "low": {"alpha": 1.0, "beta": 0.375}, "high": {"alpha": 0.0, "beta": 0.0}}),
    "oscillation": lambda: _doc(
        "oscillation",
        {"mode": "multiplicative", "sigma1": 1.0, "sigma2": 0.0, "drift_param": 0.9,
         "alpha_family": {"list": [2.0, 1.0]}},
        {"list": [0.5]}, pathology={"level_index": 1, "window": 1.0},
        simulation={"N": 10_000, "dt": 1e-3, "T": 1.0, "seed": DEMO_SEED}),
}


def problem_doc(name):
    try:
        return PROBLEM_DOCS[name]()
    except KeyError:
        raise KeyError(f"unknown built-in problem {name!r}; known: {', '.join(PROBLEM_DOCS)}") from None


def builtin_problem(name):
    return problem_from_dict(problem_doc(name))


# ---------------------------------------------------------------------------
# canonical single-level problems (y = 1/2, Normal(0, 1) at t0 = 0)

def two_solution_level():
    """Low regime in the down band, high regime in the up band."""
    return LevelProblem.build(0.5, (1.0, 0.375), (1.0, -0.375))


def infinite_level():
    """Low regime in the down band, high regime frozen (alpha = beta = 0)."""
    return LevelProblem.build(0.5, (1.0, 0.375), (0.0, 0.0))


def no_solution_level():
    """Both regimes push phi back towards the level."""
    return level_problem_from_file(builtin_problem("oscillation"))


# ---------------------------------------------------------------------------
# demos

@dataclass
class DemoResult:
    name: str
    title: str
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def say(self, text):
        self.lines.append(text)

    def text(self):
        return "\n".join([f"== {self.name}: {self.title}", *self.lines]) + "\n"

    def to_json(self):
        return {"name": self.name, "title": self.title, "lines": self.lines, "data": self.data}


def _grid(a, b, k):
    return np.linspace(a, b, k)


def demo_gaussian():
    out = DemoResult("gaussian-3.3", "additive noise c(t) = 1 + t: x/c(t) turns it into a Gaussian regime chain")
    p = builtin_problem("gaussian")
    c = p.coeffs
    ts = _grid(0.0, 5.0, 101)
    beta = np.array([[c.beta_expr(n).eval(t) for t in ts] for n in range(1, 5)])
    out.say(f"beta_n(t) = k(t)/c(t) = -0.3 for all n: max deviation {np.max(np.abs(beta + 0.3)):.3e}")
    s = build_schedule(p)
    out.say(f"switch times T_1..T_3 = {', '.join(f'{t:.12g}' for t in s.breakpoints[1:])}")
    out.say(f"status {s.status.value} ({s.stop_reason}); verify_schedule issues: {len(verify_schedule(s))}")
    grid = np.linspace(0.05, 2.0, 20)
    sim = simulate_exact(s, p.simulation.particles, grid, p.simulation.seed)
    phi = np.asarray(s.phi(grid))
    err = np.abs(sim.curve.phi_hat - phi)
    band = 4.0 * np.sqrt(phi * (1.0 - phi) / p.simulation.particles)
    out.say(f"exact sampler, N={p.simulation.particles}: max |phi_hat - phi| = {err.max():.3e}, "
            f"max ratio to 4 sd = {np.max(err / band):.3f}")
    out.data = {"breakpoints": list(s.breakpoints), "status": s.status.value,
                "max_phi_error": float(err.max())}
    return out


def demo_linear():
    out = DemoResult("linear-3.4", "geometric Brownian motion with constant drift b = 0.1 and switching volatility")
    p = builtin_problem("linear")
    ts = _grid(0.0, 5.0, 101)
    dev = max(abs(p.coeffs.beta_expr(n).eval(t) - (0.1 - 0.5 * p.coeffs.alpha(n).eval(t) ** 2))
              for n in range(1, 5) for t in ts)
    out.say(f"beta_n = b - alpha_n^2/2: max deviation {dev:.3e}")
    s = build_schedule(p)
    out.say(f"switch times T_1..T_3 = {', '.join(f'{t:.12g}' for t in s.breakpoints[1:])}")
    horizon = 3.0
    sim = simulate_particles(p, p.simulation.particles, p.simulation.dt, horizon,
                             p.simulation.seed, coords=ORIGINAL)
    entries = _first_entries(sim.curve)
    out.say(f"particle system in original coordinates (N={p.simulation.particles}, dt={p.simulation.dt:g}, "
            f"T={horizon:g}): regime n first entered at "
            + ", ".join(f"n={r}: {t:.4g} (T_{r - 1} = {s.breakpoints[r - 1]:.4g})" for r, t in entries))
    out.data = {"breakpoints": list(s.breakpoints), "particle_entries": entries}
    return out


def _first_entries(curve):
    """(regime, first time phi_hat selects it) for every regime above the starting one."""
    reg = np.asarray(curve.regime)
    out = []
    for r in range(int(reg[0]) + 1, int(reg.max()) + 1):
        idx = np.nonzero(reg >= r)[0]
        out.append((r, float(curve.t[idx[0]])))
    return out


def demo_logdrift():
    out = DemoResult("logdrift-3.5", "sigma = c(t) x with c(t) = exp(-t): log-drift model and its transform")
    p = builtin_problem("logdrift")
    c = p.coeffs
    ts = _grid(0.0, 2.0, 41)
    xs = np.geomspace(0.1, 10.0, 41)
    worst = 0.0
    for t in ts:
        ct = math.exp(-t)
        f = transform.forward(c, t, xs)
        worst = max(worst, float(np.max(np.abs(f - np.log(ct * xs) / ct))))
    out.say(f"F(t, x) = log(c x)/c: max deviation {worst:.3e}")
    dev = 0.0
    for n in (1, 2):
        a2 = c.alpha(n).eval(0.0) ** 2
        for t in ts:
            closed = -math.exp(t) - 0.5 * a2 * math.exp(-t)
            dev = max(dev, abs(c.beta_expr(n).eval(t) - closed) / abs(closed))
    out.say(f"beta_n = c'/c^2 - alpha_n^2 c/2: max relative deviation {dev:.3e}")
    rep = check_drift_ode(c)
    out.say(f"drift ODE residual {rep.max_residual:.3e}")
    rt = max(float(np.max(np.abs(transform.inverse(c, t, transform.forward(c, t, xs)) - xs) / np.maximum(1, xs)))
             for t in ts)
    out.say(f"round trip G(F(x)) - x: max {rt:.3e}")
    out.data = {"transform_error": worst, "beta_rel_error": dev, "ode_residual": rep.max_residual,
                "round_trip": rt}
    return out


def demo_explosion_finite():
    out = DemoResult("explosion-4.6-finite", "alpha_n = sqrt(2n) with switches at n/(n+1): blow-up at T_max = 1")
    p = builtin_problem("explosion-finite")
    s = build_schedule(p)
    bps = np.asarray(s.breakpoints[1:])
    n = np.arange(1, bps.size + 1)
    out.say(f"{bps.size} switch times, max |T_n - n/(n+1)| = {np.max(np.abs(bps - n / (n + 1))):.3e}")
    out.say(f"status {s.status.value}; T_max estimate {s.tmax_estimate:.8f}")
    v = np.asarray(s.variances())
    harmonic = 1.0 + 2.0 * np.cumsum(1.0 / (n + 1))
    out.say(f"v(T_n) against 1 + 2 sum 1/(k+1): max deviation {np.max(np.abs(v - harmonic)):.3e}; "
            f"v(T_{bps.size}) = {v[-1]:.6g}")
    rep = variance_divergence_diagnostic(s)
    out.say(f"variance increments decay with exponent {rep.increment_exponent:.4f}: "
            f"{'unbounded' if rep.unbounded else 'bounded'}")
    out.say(f"globality: {check_globality(p).note}; bijectivity: {check_bijectivity(p).note}")
    out.data = {"tmax_estimate": s.tmax_estimate, "status": s.status.value, "breakpoints": list(s.breakpoints)}
    return out


def demo_explosion_global():
    out = DemoResult("explosion-4.6-global", "alpha_n = sqrt(2n) with switches at t_n = n: global solution")
    p = builtin_problem("explosion-global")
    s = build_schedule(p)
    bps = np.asarray(s.breakpoints[1:])
    n = np.arange(1, bps.size + 1)
    out.say(f"{bps.size} switch times, max |T_n - n| = {np.max(np.abs(bps - n)):.3e}")
    out.say(f"status {s.status.value} ({s.stop_reason})")
    v = np.asarray(s.variances())
    out.say(f"v(T_n) against 1 + n(n+1): max deviation {np.max(np.abs(v - (1 + n * (n + 1)))):.3e}")
    out.say(f"phi(1) = {float(s.phi(1.0)):.12f}; Phi(1/sqrt(3)) = {std_normal_cdf(1 / math.sqrt(3)):.12f}")
    out.data = {"status": s.status.value, "breakpoints": list(s.breakpoints)}
    return out


def demo_two_solutions():
    out = DemoResult("two-solutions-5.1", "down band below the level, up band above: two solutions")
    lp = two_solution_level()
    v = classify_level(lp)
    out.say(f"verdict {v.name}: low {v.low.band.value}, high {v.high.band.value}")
    low, high = construct_branches(lp)
    p1, p2 = float(low.phi(1.0)), float(high.phi(1.0))
    out.say(f"phi_1(1) = {p1:.12f} (Phi(-3/8/sqrt 2) = {std_normal_cdf(-0.375 / math.sqrt(2)):.12f})")
    out.say(f"phi_2(1) = {p2:.12f} (Phi(3/8/sqrt 2) = {std_normal_cdf(0.375 / math.sqrt(2)):.12f})")
    out.say(f"phi_1(1) + phi_2(1) - 1 = {p1 + p2 - 1:.3e}")
    fv = classify_level(level_problem_from_file(builtin_problem("two-solutions")))
    out.say(f"problem file (b = 0.9, alpha = 1, 2): verdict {fv.name}")
    out.data = {"verdict": v.name, "phi1": p1, "phi2": p2, "file_verdict": fv.name}
    return out


def demo_infinite():
    out = DemoResult("infinite-5.2", "frozen regime above the level: a solution for every switching delay")
    lp = infinite_level()
    v = classify_level(lp)
    out.say(f"verdict {v.name}: low {v.low.band.value}, high {v.high.band.value}")
    rows = []
    for w in (0.0, 0.5, 1.0):
        b = construct_delay_family(lp, w)
        p = float(b.phi(w + 1.0))
        rows.append((w, p))
        out.say(f"delay w={w:g}: phi(w) = {float(b.phi(w)):.12f}, phi(w + 1) = {p:.12f}")
    out.say(f"Phi(-3/8/sqrt 2) = {std_normal_cdf(-0.375 / math.sqrt(2)):.12f}")
    names = [c.name for c in candidate_solutions(lp)]
    out.say(f"candidates passing the indicator check: {', '.join(names)}")
    out.data = {"verdict": v.name, "delays": rows, "candidates": names}
    return out


def demo_oscillation(dt=1e-3, steps=1000, particles=10_000, seed=DEMO_SEED, compare=True):
    out = DemoResult("oscillation-5.4", "both regimes push phi back to the level: no local solution")
    lp = no_solution_level()
    v = classify_level(lp)
    out.say(f"b = 0.9, alpha_1 = 2, alpha_2 = 1: beta_1 = {lp.beta_low.eval(0.0):.6g}, "
            f"beta_2 = {lp.beta_high.eval(0.0):.6g}")
    out.say(f"verdict {v.name}: low {v.low.band.value}, high {v.high.band.value}")
    rep = oscillation_probe(lp, dt, steps, particles, seed, compare=compare)
    out.say(f"particles N={particles}, dt={dt:g}, {steps} steps: {rep.flips} sign flips of phi_hat - y, "
            f"mean |phi_hat - y| = {rep.mean_excursion:.3e}")
    if compare:
        out.say(f"at dt/2: {rep.flips_half} flips, mean |phi_hat - y| = {rep.mean_excursion_half:.3e}")
    out.data = {"verdict": v.name, **rep.to_json()}
    return out


DEMOS = {
    "gaussian-3.3": demo_gaussian,
    "linear-3.4": demo_linear,
    "logdrift-3.5": demo_logdrift,
    "explosion-4.6-finite": demo_explosion_finite,
    "explosion-4.6-global": demo_explosion_global,
    "two-solutions-5.1": demo_two_solutions,
    "infinite-5.2": demo_infinite,
    "oscillation-5.4": demo_oscillation,
}


def run_demo(name):
    try:
        fn = DEMOS[name]
    except KeyError:
        raise KeyError(name) from None
    return fn()


def all_coefficient_sets():
    """Every built-in coefficient set, for sweeps over all examples."""
    out = {name: builtin_problem(name).coeffs for name in ("gaussian", "linear", "logdrift")}
    out["explosion"] = CoefficientSet.multiplicative(1.0, 0.0, 0.0, tf.from_json(SQRT_2N))
    return out
