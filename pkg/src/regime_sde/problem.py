"""Problem specification, level partitions and the JSON problem-file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import jsonschema
import numpy as np

from . import timefunc as tf
from .coefficients import ADDITIVE, MULTIPLICATIVE, AlphaFamily, CoefficientSet
from .errors import ProblemFileError
from .normal import std_normal_cdf, std_normal_isf, std_normal_quantile
from .transform import transform_reference

DEFAULT_MAX_REGIMES = 10_000


@dataclass(frozen=True)
class Levels:
    """Partition 0 = y_0 < y_1 < ... of [0, 1) into I_n = [y_{n-1}, y_n).

    Levels are kept as normal scores ``z_n = Phi^{-1}(y_n)``: levels such as
    ``Phi(10)`` are not representable as doubles below 1, but their scores are.

    A finite list is either a complete partition (the last regime owns
    ``[y_L, 1)``) or, with ``truncated=True``, the first ``L`` terms of an
    infinite sequence increasing to 1.
    """

    scores: tuple | None = None
    expr: tf.TimeFunction | None = None
    expr_scale: str = "prob"
    truncated: bool = False

    def __post_init__(self):
        if (self.scores is None) == (self.expr is None):
            raise ValueError("give exactly one of scores= or expr=")
        if self.expr_scale not in ("prob", "score"):
            raise ValueError("expr_scale must be 'prob' or 'score'")

    @classmethod
    def from_probs(cls, probs, truncated=False):
        probs = [float(p) for p in probs]
        for p in probs:
            if not 0.0 < p < 1.0:
                raise ValueError(f"levels must lie in (0, 1), got {p!r}")
        return cls(scores=tuple(std_normal_quantile(p) for p in probs), truncated=truncated)

    @classmethod
    def from_scores(cls, scores, truncated=False):
        return cls(scores=tuple(float(z) for z in scores), truncated=truncated)

    @classmethod
    def closed_form(cls, expr, scale="prob"):
        return cls(expr=tf.as_function(expr), expr_scale=scale)

    @property
    def count(self):
        """Number of listed levels, or None for a closed form (infinitely many)."""
        return None if self.scores is None else len(self.scores)

    @property
    def infinite(self):
        return self.scores is None

    def score(self, n):
        """z_n; z_0 = -inf. Raises IndexError past a finite list."""
        n = int(n)
        if n == 0:
            return -math.inf
        if n < 0:
            raise IndexError(n)
        if self.scores is not None:
            if n > len(self.scores):
                raise IndexError(f"only {len(self.scores)} levels given")
            return self.scores[n - 1]
        value = self.expr.bind(n).eval(0.0)
        if self.expr_scale == "score":
            return value
        if value >= 0.5:
            return std_normal_isf(1.0 - value) if value < 1.0 else math.inf
        return std_normal_quantile(value)

    def prob(self, n):
        z = self.score(n)
        return 0.0 if z == -math.inf else std_normal_cdf(z)

    def has(self, n):
        return self.scores is None or n <= len(self.scores)

    def regime_for_score(self, z, cap=DEFAULT_MAX_REGIMES):
        """Regime n with z in [z_{n-1}, z_n).

        Returns ``count + 1`` past the last level of a complete finite list
        and None past a truncated one.
        """
        n = 1
        limit = self.count if self.count is not None else cap
        while n <= limit:
            if z < self.score(n):
                return n
            n += 1
        if self.count is not None and not self.truncated:
            return self.count + 1
        return None

    def regime_for_prob(self, p, cap=DEFAULT_MAX_REGIMES):
        """Regime selected by an empirical fraction p in [0, 1]."""
        n = 1
        limit = self.count if self.count is not None else cap
        while n <= limit:
            if p < self.prob(n):
                return n
            n += 1
        if self.count is not None and not self.truncated:
            return self.count + 1
        return limit + 1 if self.count is None else None

    def validate(self, n_cap=64):
        """Problems with the partition as a list of strings (empty when fine)."""
        issues = []
        k = self.count if self.count is not None else n_cap
        prev = -math.inf
        for n in range(1, k + 1):
            z = self.score(n)
            if not math.isfinite(z):
                issues.append(f"level {n} is not strictly inside (0, 1) (score {z!r})")
                break
            if not z > prev:
                issues.append(f"levels not strictly increasing at n={n}")
                break
            prev = z
        return issues

    def to_json(self):
        if self.scores is not None:
            return {"scores": list(self.scores), "truncated": self.truncated}
        return {"expr": self.expr.to_json(), "scale": self.expr_scale}


@dataclass(frozen=True)
class SimulationConfig:
    particles: int = 10_000
    dt: float = 1e-3
    horizon: float = 1.0
    seed: int = 20240101


@dataclass(frozen=True)
class ProblemSpec:
    coeffs: CoefficientSet
    mu0_bar: float
    var0: float
    reference: tf.TimeFunction
    levels: Levels
    horizon: float = 1e6
    check_window: float = 10.0
    max_regimes: int = DEFAULT_MAX_REGIMES
    root_tol: float = 1e-12
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    pathology: dict | None = None
    name: str = ""

    def __post_init__(self):
        if not self.var0 > 0.0:
            raise ValueError(f"sigma0_sq must be positive, got {self.var0!r}")

    @property
    def sd0(self):
        return math.sqrt(self.var0)

    @property
    def initial_mean_ok(self):
        """|mu0_bar| <= sigma0_sq / 2."""
        return abs(self.mu0_bar) <= 0.5 * self.var0

    @cached_property
    def transformed_reference(self):
        return transform_reference(self.coeffs, self.reference, (0.0, self.check_window), self.mu0_bar)

    @property
    def rho(self):
        return self.transformed_reference.rho

    def initial_score(self):
        return (self.rho.eval(0.0) - self.mu0_bar) / self.sd0

    def with_levels(self, levels):
        return replace(self, levels=levels)

    def to_json(self):
        c = self.coeffs
        out = {
            "name": self.name,
            "coefficients": {
                "mode": c.mode,
                "sigma1": c.sigma1.to_json(),
                "sigma2": c.sigma2.to_json(),
                "drift_param": c.drift_param.to_json(),
                "alpha_family": c.alpha_family.to_json(),
            },
            "initial_law": {"mu0_bar": self.mu0_bar, "sigma0_sq": self.var0},
            "reference": self.reference.to_json(),
            "levels": self.levels.to_json(),
            "solver": {"horizon": self.horizon, "check_window": self.check_window,
                       "max_regimes": self.max_regimes, "root_tol": self.root_tol},
            "simulation": {"N": self.simulation.particles, "dt": self.simulation.dt,
                           "T": self.simulation.horizon, "seed": self.simulation.seed},
        }
        if self.pathology is not None:
            out["pathology"] = dict(self.pathology)
        return out


# ---------------------------------------------------------------------------
# problem files

_EXPR = {"oneOf": [{"type": "number"}, {"type": "string", "enum": ["t", "n"]},
                   {"type": "object", "required": ["op"]}]}

_PAIR = {"type": "object", "required": ["alpha", "beta"],
         "properties": {"alpha": _EXPR, "beta": _EXPR}}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["coefficients", "initial_law", "reference", "levels"],
    "properties": {
        "name": {"type": "string"},
        "coefficients": {
            "type": "object",
            "required": ["mode", "alpha_family"],
            "properties": {
                "mode": {"enum": [ADDITIVE, MULTIPLICATIVE]},
                "sigma1": _EXPR,
                "sigma2": _EXPR,
                "drift_param": _EXPR,
                "alpha_family": {
                    "type": "object",
                    "oneOf": [
                        {"required": ["expr"]},
                        {"required": ["list"], "properties": {"list": {"type": "array", "minItems": 1}}},
                    ],
                },
            },
        },
        "initial_law": {
            "type": "object",
            "required": ["mu0_bar", "sigma0_sq"],
            "properties": {"mu0_bar": {"type": "number"},
                           "sigma0_sq": {"type": "number", "exclusiveMinimum": 0}},
        },
        "reference": _EXPR,
        "levels": {
            "type": "object",
            "oneOf": [
                {"required": ["list"]},
                {"required": ["scores"]},
                {"required": ["expr"]},
                {"required": ["from_times"]},
            ],
            "properties": {
                "list": {"type": "array", "minItems": 1,
                         "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                "scores": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "truncated": {"type": "boolean"},
                "scale": {"enum": ["prob", "score"]},
                "from_times": {
                    "type": "object",
                    "required": ["times", "count"],
                    "properties": {"count": {"type": "integer", "minimum": 1}},
                },
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "check_window": {"type": "number", "exclusiveMinimum": 0},
                "max_regimes": {"type": "integer", "minimum": 1},
                "root_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "simulation": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "pathology": {
            "type": "object",
            "properties": {
                "level_index": {"type": "integer", "minimum": 1},
                "t0": {"type": "number", "minimum": 0},
                "window": {"type": "number", "exclusiveMinimum": 0},
                "var_off": {"type": "number", "minimum": 0},
                "low": _PAIR,
                "high": _PAIR,
            },
        },
    },
}


def problem_from_dict(doc):
    """Build a ProblemSpec from a parsed problem document (raises ProblemFileError)."""
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProblemFileError(f"schema error at {where}: {exc.message}") from exc

    c = doc["coefficients"]
    mode = c["mode"]
    fam = c["alpha_family"]
    if "expr" in fam:
        alpha = AlphaFamily(expr=tf.from_json(fam["expr"]), offset=int(fam.get("offset", 0)))
    else:
        alpha = AlphaFamily.of(*(tf.from_json(a) for a in fam["list"]))
    sigma1 = tf.from_json(c.get("sigma1", 0.0 if mode == ADDITIVE else 1.0))
    sigma2 = tf.from_json(c.get("sigma2", 1.0 if mode == ADDITIVE else 0.0))
    drift = tf.from_json(c.get("drift_param", 0.0))
    try:
        coeffs = CoefficientSet(mode, sigma1, sigma2, drift, alpha)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc

    law = doc["initial_law"]
    solver = doc.get("solver", {})
    sim = doc.get("simulation", {})
    defaults = SimulationConfig()
    simulation = SimulationConfig(
        particles=int(sim.get("N", defaults.particles)),
        dt=float(sim.get("dt", defaults.dt)),
        horizon=float(sim.get("T", defaults.horizon)),
        seed=int(sim.get("seed", defaults.seed)),
    )
    placeholder = Levels.from_scores([0.0])
    problem = ProblemSpec(
        coeffs=coeffs,
        mu0_bar=float(law["mu0_bar"]),
        var0=float(law["sigma0_sq"]),
        reference=tf.from_json(doc["reference"]),
        levels=placeholder,
        horizon=float(solver.get("horizon", 1e6)),
        check_window=float(solver.get("check_window", 10.0)),
        max_regimes=int(solver.get("max_regimes", DEFAULT_MAX_REGIMES)),
        root_tol=float(solver.get("root_tol", 1e-12)),
        simulation=simulation,
        pathology=doc.get("pathology"),
        name=doc.get("name", ""),
    )
    try:
        levels = _levels_from_doc(doc["levels"], problem)
    except ValueError as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(f"bad levels: {exc}") from exc
    return problem.with_levels(levels)


def _levels_from_doc(lv, problem):
    truncated = bool(lv.get("truncated", False))
    if "list" in lv:
        return Levels.from_probs(lv["list"], truncated=truncated)
    if "scores" in lv:
        return Levels.from_scores(lv["scores"], truncated=truncated)
    if "expr" in lv:
        return Levels.closed_form(tf.from_json(lv["expr"]), lv.get("scale", "prob"))
    ft = lv["from_times"]
    count = int(ft["count"])
    times = ft["times"]
    if isinstance(times, list):
        ts = [float(x) for x in times]
    else:
        expr = tf.from_json(times)
        ts = [expr.bind(n).eval(0.0) for n in range(1, count + 1)]
    if len(ts) < count:
        raise ProblemFileError(f"from_times lists {len(ts)} times but count={count}")
    from .regime_solver import levels_from_times

    try:
        return levels_from_times(problem, ts[:count])
    except ValueError as exc:
        raise ProblemFileError(f"cannot generate levels from times: {exc}") from exc


def load_problem(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path} is not valid JSON: {exc}") from exc
    return problem_from_dict(doc)


def grid_for(problem, per_unit=2048, max_points=200_001):
    """Uniform assumption-check grid on [0, check_window] plus geometric points out to the horizon."""
    w = problem.check_window
    count = min(max_points, int(np.ceil(w * per_unit)) + 1)
    uniform = np.linspace(0.0, w, count)
    if problem.horizon > w:
        tail = np.geomspace(w, problem.horizon, 64)
        return np.unique(np.concatenate([uniform, tail]))
    return uniform
