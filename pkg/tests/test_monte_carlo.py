import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regime_sde import transform
from regime_sde.demos import builtin_problem
from regime_sde.errors import RangeError
from regime_sde.monte_carlo import (
    ORIGINAL,
    TRANSFORMED,
    PathBatch,
    empirical_phi,
    regime_switch_times,
    simulate_exact,
    simulate_particles,
    transform_batch,
)
from regime_sde.problem import problem_from_dict
from regime_sde.regime_solver import build_schedule


def single_regime_schedule():
    d = {"name": "sq2", "coefficients": {"mode": "additive", "sigma2": 1.0, "drift_param": -1.0,
                                         "alpha_family": {"list": [math.sqrt(2)]}},
         "initial_law": {"mu0_bar": 0.0, "sigma0_sq": 1.0}, "reference": 0.0,
         "levels": {"list": [1 - 1e-12], "truncated": True}}
    return build_schedule(problem_from_dict(d))


@pytest.fixture(scope="module")
def linear():
    p = builtin_problem("linear")
    return p, build_schedule(p)


def test_exact_moments_single_regime():
    n = 100_000
    res = simulate_exact(single_regime_schedule(), n, [0.0, 1.0], seed=7)
    y = res.batch.at(1.0)
    assert abs(y.mean() + 1.0) <= 4 * math.sqrt(3 / n)
    assert abs(y.var(ddof=1) - 3.0) <= 4 * 3 * math.sqrt(2 / n)


def test_exact_t0_is_initial_draw(linear):
    p, s = linear
    res = simulate_exact(s, 20_000, [0.0, 0.5], seed=3)
    again = simulate_exact(s, 20_000, [0.0], seed=3)
    assert np.array_equal(res.batch.at(0.0), again.batch.at(0.0))
    assert abs(res.curve.mean_hat[0] - p.mu0_bar) <= 4 * p.sd0 / math.sqrt(20_000)


def test_exact_phi_within_binomial_band(linear):
    _, s = linear
    n = 100_000
    ts = np.linspace(0.0, 6.0, 61)
    res = simulate_exact(s, n, ts, seed=11)
    phi = np.asarray(s.phi(ts))
    band = 4 * np.sqrt(phi * (1 - phi) / n)
    assert np.all(np.abs(res.curve.phi_hat - phi) <= band)
    mv = s.mean_var(ts)
    se_m = np.sqrt(mv[:, 1] / n)
    se_v = mv[:, 1] * math.sqrt(2 / n)
    assert np.all(np.abs(res.curve.mean_hat - mv[:, 0]) <= 4 * se_m)
    assert np.all(np.abs(res.curve.var_hat - mv[:, 1]) <= 4 * se_v)


def test_exact_range_error(linear):
    _, s = linear
    with pytest.raises(RangeError):
        simulate_exact(single_regime_schedule(), 10, [0.0, 1e9], seed=1)
    with pytest.raises(ValueError):
        simulate_exact(s, 10, [1.0, 0.5], seed=1)


def test_particle_switch_times_match_schedule(linear):
    p, s = linear
    n, dt = 20_000, 1e-3
    res = simulate_particles(p, n, dt, 3.0, seed=5)
    c = res.curve
    # phi_hat non-decreasing up to sampling wiggle
    wiggle = 4 * np.sqrt(0.25 / n)
    assert np.all(np.diff(c.phi_hat) >= -wiggle)
    # first entry of each regime is close to the analytic switch time
    for k, t_sw in enumerate(s.breakpoints[1:3], start=2):
        first = c.t[np.argmax(c.regime >= k)]
        assert abs(first - t_sw) <= 0.1, (k, first, t_sw)
    times, regs = regime_switch_times(c)
    assert times.size >= 2 and set(regs) >= {2, 3}


def test_particles_original_euler_vs_exact_quantiles(linear):
    p, s = linear
    n, dt, horizon = 10_000, 1e-3, 0.5
    part = simulate_particles(p, n, dt, horizon, seed=9, coords=ORIGINAL, scheme="euler")
    y_part = transform_batch(p.coeffs, part.batch, TRANSFORMED).at(horizon)
    y_exact = simulate_exact(s, n, [0.0, horizon], seed=10).batch.at(horizon)
    qs = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
    rng = np.random.default_rng(0)
    boots = np.array([np.quantile(rng.choice(y_exact, n), qs) for _ in range(200)])
    ci = np.quantile(boots, 0.975, axis=0) - np.quantile(boots, 0.025, axis=0)
    diff = np.abs(np.quantile(y_part, qs) - np.quantile(y_exact, qs))
    assert np.all(diff <= 3 * ci), (diff, ci)


def test_particles_single_path():
    p = builtin_problem("linear")
    res = simulate_particles(p, 1, 1e-2, 0.5, seed=1)
    assert set(np.unique(res.curve.phi_hat)) <= {0.0, 1.0}
    assert np.all(res.curve.var_hat == 0.0)


def test_particles_determinism_and_backends():
    p = builtin_problem("gaussian")
    a = simulate_particles(p, 2000, 1e-2, 1.0, seed=4, backend="numpy")
    b = simulate_particles(p, 2000, 1e-2, 1.0, seed=4, backend="numpy")
    assert np.array_equal(a.curve.phi_hat, b.curve.phi_hat)
    assert np.array_equal(a.batch.states, b.batch.states)


def test_implicit_flag_runs():
    p = builtin_problem("linear")
    res = simulate_particles(p, 2000, 1e-2, 2.0, seed=4, implicit=True)
    assert res.curve.regime[-1] >= 2


def test_particles_rejects_bad_args():
    p = builtin_problem("linear")
    with pytest.raises(ValueError):
        simulate_particles(p, 10, 0.0, 1.0, seed=1)
    with pytest.raises(ValueError):
        simulate_particles(p, 10, 0.1, 1.0, seed=1, coords="polar")
    with pytest.raises(ValueError):
        simulate_particles(p, 10, 0.1, 1.0, seed=1, scheme="milstein")


def _batch(states, coords=TRANSFORMED, times=(0.0,)):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    return PathBatch(np.asarray(times, dtype=float), states, coords, 0, np.arange(states.shape[1]))


def test_empirical_phi_examples():
    b = _batch([-1.0, 0.0, 0.5])
    assert empirical_phi(b, 0.0, 1.0) == 1.0
    assert empirical_phi(b, 0.0, 0.0) == pytest.approx(2 / 3)     # tie counts as <=
    assert empirical_phi(b, 0.0, -math.inf) == 0.0
    with pytest.raises(RangeError):
        empirical_phi(b, 0.5, 0.0)
    rng = np.random.default_rng(1)
    cloud = rng.standard_normal(40_000)
    assert abs(empirical_phi(_batch(cloud), 0.0, 0.0) - 0.5) <= 4 * math.sqrt(0.25 / 40_000)


def test_transform_batch_examples():
    p = builtin_problem("linear")      # sigma1 = 1, sigma2 = 0
    x = transform_batch(p.coeffs, _batch([0.0]), ORIGINAL)
    assert x.states[0, 0] == pytest.approx(1.0, abs=1e-15)
    rng = np.random.default_rng(2)
    y = rng.normal(0.0, 2.0, 1_000_000)
    xb = transform_batch(p.coeffs, _batch(y, times=(0.3,)), ORIGINAL)
    back = transform_batch(p.coeffs, xb, TRANSFORMED)
    assert np.max(np.abs(back.states - y)) <= 1e-10
    assert transform_batch(p.coeffs, xb, ORIGINAL) is xb
    with pytest.raises(ValueError):
        transform_batch(p.coeffs, xb, "polar")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50), st.floats(0.0, 3.0))
def test_quantile_transport_exact(ys, t):
    p = builtin_problem("logdrift")
    yb = _batch(ys, times=(t,))
    xb = transform_batch(p.coeffs, yb, ORIGINAL)
    r = float(p.reference.eval(t))
    rho = float(transform.forward(p.coeffs, t, r))
    yb2 = transform_batch(p.coeffs, xb, TRANSFORMED)
    assert empirical_phi(xb, t, r) == empirical_phi(yb2, t, rho)


def test_euler_converges_in_mean():
    # error of the mean of Y_T (forward-mapped Euler) vs the exact law, dt in {1e-2, 1e-3}
    p = builtin_problem("logdrift")
    s = build_schedule(p)
    horizon, n = 0.5, 40_000
    m_exact = s.mean_var([horizon])[0, 0]
    errs = []
    for dt in (1e-2, 1e-3):
        res = simulate_particles(p, n, dt, horizon, seed=21, scheme="euler")
        y = transform_batch(p.coeffs, res.batch, TRANSFORMED).at(horizon)
        errs.append(abs(y.mean() - m_exact))
    assert errs[1] < errs[0]
    assert errs[1] <= errs[0] * 10 ** -0.5 + 4 * math.sqrt(s.mean_var([horizon])[0, 1] / n)


def test_paths_dump_cap():
    p = builtin_problem("gaussian")
    res = simulate_particles(p, 300, 0.1, 0.5, seed=2)
    rows = res.batch.dump_rows()
    assert {r[1] for r in rows} == set(range(100))
