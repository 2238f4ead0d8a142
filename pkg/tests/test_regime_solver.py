import copy
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ncdf
from regime_sde import timefunc as tf
from regime_sde.demos import N_OVER_N1, SQRT_2N, builtin_problem, explosion_coefficients, problem_doc
from regime_sde.errors import MonotonicityError, RegimeExhausted
from regime_sde.gaussian_law import LawCurve
from regime_sde.normal import std_normal_quantile
from regime_sde.problem import Levels, problem_from_dict
from regime_sde.regime_solver import (
    NOT_REACHED,
    ScheduleStatus,
    build_schedule,
    check_bijectivity,
    check_globality,
    find_crossing,
    globality_lower_bound,
    levels_from_times,
    reindexed,
    start_regime,
    variance_divergence_diagnostic,
    verify_schedule,
)

T = tf.T


def additive_doc(alphas, k=None, levels=(0.6, 0.75, 0.9), truncated=False, mu0=0.0, reference=0.0):
    """sigma2 = 1, beta = k; alpha list given as JSON expressions."""
    return {"name": "t", "coefficients": {"mode": "additive", "sigma2": 1.0,
                                          "drift_param": -0.3 if k is None else k,
                                          "alpha_family": {"list": list(alphas)}},
            "initial_law": {"mu0_bar": mu0, "sigma0_sq": 1.0}, "reference": reference,
            "levels": {"list": list(levels), "truncated": truncated}}


def explosion_with_times(times):
    d = {"name": "x", "coefficients": explosion_coefficients(),
         "initial_law": {"mu0_bar": 0.0, "sigma0_sq": 1.0}, "reference": 1.0,
         "levels": {"from_times": {"times": list(times), "count": len(times)}}}
    return problem_from_dict(d)


# -- find_crossing -----------------------------------------------------------

def regime1_curve():
    return LawCurve(0.0, 1.0, tf.const(math.sqrt(2)), tf.const(-1.0), tf.ZERO)


def test_find_crossing_generated_level():
    y1 = ncdf(mpmath.mpf(0.5) / mpmath.sqrt(2))
    t = find_crossing(regime1_curve(), y1, 0.0)
    assert t == pytest.approx(0.5, abs=1e-8)
    z = std_normal_quantile(y1)
    assert abs(regime1_curve().score(t) - z) <= 1e-12


def test_find_crossing_at_start():
    c = regime1_curve()
    assert find_crossing(c, float(c.phi(0.3)), 0.3) == 0.3


def test_find_crossing_down_band_not_reached():
    down = LawCurve(0.0, 1.0, tf.ONE, tf.const(0.375), tf.ZERO)
    assert find_crossing(down, 0.6, 0.0) == NOT_REACHED
    assert find_crossing(down, 0.6, 0.0, horizon=10.0) is NOT_REACHED


def test_find_crossing_monotonicity_error():
    # phi falls first (beta > 0 early), then rises: bracket probes see g <= 0
    c = LawCurve(0.0, 1.0, tf.ONE, 0.375 - T, tf.ZERO)
    with pytest.raises(MonotonicityError):
        find_crossing(c, 0.6, 0.0)


# -- build_schedule ----------------------------------------------------------

def test_global_case(explosion_global):
    s = build_schedule(explosion_global)
    bps = np.array(s.breakpoints[1:])
    assert bps.size == 20
    assert np.max(np.abs(bps - np.arange(1, 21))) <= 1e-8
    assert s.status is not ScheduleStatus.FINITE_TMAX
    assert verify_schedule(s) == []


def test_finite_case(explosion_finite_schedule):
    s = explosion_finite_schedule
    bps = np.array(s.breakpoints[1:])
    n = np.arange(1, 201)
    assert np.max(np.abs(bps - n / (n + 1))) <= 1e-8
    assert s.status is ScheduleStatus.FINITE_TMAX
    assert abs(s.tmax_estimate - 1.0) <= 1e-3
    assert verify_schedule(s) == []


def test_bounded_alpha_far_level_truncated():
    # alpha = e^{-t}, beta = -3/8 e^{-2t}: v stays bounded so phi never gets near 1 - 1e-9
    d = additive_doc([{"op": "exp", "args": [{"op": "mul", "args": [-1.0, "t"]}]}],
                     k={"op": "mul", "args": [-0.375, {"op": "exp", "args": [{"op": "mul", "args": [-2.0, "t"]}]}]},
                     levels=[1 - 1e-9], truncated=True)
    p = problem_from_dict(d)
    s = build_schedule(p)
    assert s.breakpoints == (0.0,)
    assert s.status is ScheduleStatus.HORIZON_TRUNCATED
    assert s.stop_reason == "not_reached"


def test_gaussian_builtin_global_proven():
    s = build_schedule(builtin_problem("gaussian"))
    assert s.status is ScheduleStatus.GLOBAL_PROVEN
    assert s.regimes == (1, 2, 3, 4)
    assert verify_schedule(s) == []
    # beta = -0.3 and alpha_1 = 1 on [0, T_1]: f(T_1) = 0.3 T_1 / sqrt(1 + T_1)
    t1 = s.breakpoints[1]
    assert 0.3 * t1 / math.sqrt(1 + t1) == pytest.approx(std_normal_quantile(0.6), abs=1e-12)


def test_alpha_list_too_short():
    p = problem_from_dict(additive_doc([1.0, 0.95]))
    with pytest.raises(RegimeExhausted):
        build_schedule(p)


def test_determinism():
    for name in ("gaussian", "linear", "explosion-finite"):
        p = builtin_problem(name)
        a, b = build_schedule(p), build_schedule(p)
        assert a.breakpoints == b.breakpoints


# -- re-indexing -------------------------------------------------------------

def test_start_index_and_reindexing():
    # mu0 = 0, reference 0.5 -> phi(0) = Phi(0.5) = 0.69 >= y_1 = 0.6
    d = additive_doc([1.0, 0.95, 0.9, 0.85], mu0=0.0, reference=0.0)
    d["initial_law"]["mu0_bar"] = -0.5
    d["reference"] = -0.5
    d["levels"]["list"] = [0.3, 0.45, 0.6, 0.75]
    d["coefficients"]["alpha_family"]["list"] = [1.0, 1.0, 0.95, 0.9, 0.85]
    p = problem_from_dict(d)
    assert start_regime(p) == 3
    s = build_schedule(p)
    assert s.start_index == 3 and s.regimes[0] == 3
    r = build_schedule(reindexed(p, 2))
    assert r.start_index == 1
    assert r.breakpoints == s.breakpoints
    assert verify_schedule(s) == [] and verify_schedule(r) == []


def test_reindexed_parametric_family():
    p = builtin_problem("explosion-global")
    q = reindexed(p, 3)
    assert q.coeffs.alpha(1).eval(0.0) == pytest.approx(math.sqrt(8))
    assert q.levels.score(1) == p.levels.score(4)


# -- certificates ------------------------------------------------------------

def _with_alpha(family):
    d = additive_doc([1.0])
    d["coefficients"]["alpha_family"] = family
    return problem_from_dict(d)


def test_globality_examples():
    assert not check_globality(builtin_problem("explosion-finite"))
    g = check_globality(_with_alpha({"expr": 1.0}))
    assert g and g.value == pytest.approx(1.0)
    g = check_globality(_with_alpha({"list": [1.0, 2.0, 0.5]}))
    assert g and g.value == pytest.approx(4.0)


def test_bijectivity_examples():
    b = check_bijectivity(builtin_problem("explosion-finite"))
    assert b and b.value == pytest.approx(2.0)
    assert not check_bijectivity(_with_alpha({"list": [1.0, 0.0]}))
    decay = check_bijectivity(_with_alpha({"expr": {"op": "exp", "args": [{"op": "mul", "args": [-1.0, "t"]}]}}))
    assert not decay and "fails at horizon" in decay.note


def test_globality_lower_bound_holds():
    for name in ("gaussian", "linear"):
        p = builtin_problem(name)
        g = check_globality(p)
        s = build_schedule(p)
        assert g
        for t, n in zip(s.breakpoints[1:], s.levels_hit):
            assert t >= globality_lower_bound(p, g.value, p.levels.score(n)) - 1e-12


# -- maximality diagnostic ---------------------------------------------------

def test_variance_harmonic(explosion_finite_schedule):
    rep = variance_divergence_diagnostic(explosion_finite_schedule)
    n = np.arange(1, 201)
    assert np.max(np.abs(np.array(rep.variances) - (1 + 2 * np.cumsum(1 / (n + 1))))) <= 1e-10
    assert rep.increasing and rep.unbounded and rep.bound_holds


def test_variance_truncated_at_thirty():
    p = explosion_with_times([k / (k + 1) for k in range(1, 31)])
    s = build_schedule(p)
    hand = 1 + 2 * sum(1.0 / (k + 1) for k in range(1, 31))
    assert s.variances()[-1] == pytest.approx(hand, abs=1e-10)


def test_variance_single_regime():
    p = problem_from_dict(additive_doc([1.0, 1.0], levels=[0.6]))
    s = build_schedule(p)
    t1 = s.breakpoints[1]
    assert s.variances()[0] == pytest.approx(1.0 + t1, rel=1e-14)


# -- properties --------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=8))
def test_round_trip_generated_levels(gaps):
    times = np.cumsum(gaps).tolist()
    p = explosion_with_times(times)
    s = build_schedule(p)
    assert np.max(np.abs(np.array(s.breakpoints[1:]) - times)) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(alphas=st.lists(st.floats(0.5, 2.0), min_size=4, max_size=4),
       levels=st.lists(st.floats(0.52, 0.98), min_size=3, max_size=3, unique=True))
def test_bounded_alpha_never_finite_tmax(alphas, levels):
    levels = sorted(levels)
    if min(np.diff(levels)) < 1e-3:
        return
    # beta = -3/8 alpha^2 sits inside the up band for every regime
    d = additive_doc(alphas, levels=levels)
    d["coefficients"]["mode"] = "multiplicative"
    d["coefficients"]["sigma1"] = 1.0
    d["coefficients"]["sigma2"] = 0.0
    d["coefficients"]["drift_param"] = 0.0
    d["coefficients"]["alpha_family"] = {"list": alphas}
    d["reference"] = 1.0
    p = problem_from_dict(d)
    s = build_schedule(p)
    assert s.status is not ScheduleStatus.FINITE_TMAX
    assert verify_schedule(s) == []
    c = check_globality(p).value
    for t, n in zip(s.breakpoints[1:], s.levels_hit):
        assert t >= globality_lower_bound(p, c, p.levels.score(n)) - 1e-12


def test_levels_from_times_requires_increasing():
    p = builtin_problem("explosion-global")
    with pytest.raises(ValueError):
        levels_from_times(p, [1.0, 0.5])


def test_schedule_serialisation(explosion_finite_schedule):
    s = explosion_finite_schedule
    doc = s.to_json()
    assert doc["status"] == "FiniteTmax" and len(doc["breakpoints"]) == 201
    rows = s.curve_rows(8)
    assert len(rows) == 8 * len(s.segments)
    assert all(0 < r[1] < 1 for r in rows)
    mv = s.mean_var(np.array([0.1, 0.7]))
    assert mv.shape == (2, 2)
