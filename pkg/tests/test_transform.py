import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regime_sde import timefunc as tf
from regime_sde.coefficients import CoefficientSet
from regime_sde.demos import all_coefficient_sets
from regime_sde.errors import DomainError
from regime_sde.transform import forward, in_domain, inverse, lower_bound, transform_reference

T = tf.T
GBM = CoefficientSet.multiplicative(1.0, 0.0, 0.0, [1.0])


def test_forward_examples():
    assert forward(GBM, 0.3, 1.0) == 0.0
    add = CoefficientSet.additive(1.0 + T, 0.0, [1.0])
    assert forward(add, 2.0, 6.0) == pytest.approx(2.0)
    c = CoefficientSet.multiplicative(tf.exp(-1.0 * T), 0.0, 0.0, [1.0])
    t, x = 0.7, 3.0
    ct = math.exp(-t)
    assert forward(c, t, x) == pytest.approx(math.log(ct * x) / ct, rel=1e-14)


def test_inverse_examples():
    assert inverse(GBM, 1.0, 0.0) == 1.0
    assert inverse(CoefficientSet.additive(2.0, 0.0, [1.0]), 0.0, 3.0) == 6.0
    c = CoefficientSet.multiplicative(2.0, 1.0, 0.0, [1.0])
    assert inverse(c, 0.0, 0.0) == 0.0
    assert forward(c, 0.0, 0.0) == 0.0


def test_domain():
    c = CoefficientSet.multiplicative(2.0, 1.0, 0.0, [1.0])
    assert lower_bound(c, 0.0) == -0.5
    assert not in_domain(c, 0.0, -0.5)
    with pytest.raises(DomainError):
        forward(c, 0.0, -0.5)
    assert lower_bound(CoefficientSet.additive(1.0, 0.0, [1.0]), 0.0) == -math.inf


def _states(c, t, k=10_000):
    if c.additive_mode:
        return np.linspace(-50, 50, k)
    return lower_bound(c, t) + np.geomspace(1e-6, 100, k)


def test_round_trip_all_builtins():
    for name, c in all_coefficient_sets().items():
        for t in (0.0, 0.5, 3.0):
            xs = _states(c, t)
            err = np.abs(inverse(c, t, forward(c, t, xs)) - xs) / np.maximum(1.0, np.abs(xs))
            assert err.max() <= 1e-12, name


@settings(max_examples=100, deadline=None)
@given(s1=st.floats(0.1, 3.0), s2=st.floats(0.0, 3.0), t=st.floats(0, 5),
       x1=st.floats(0, 50), x2=st.floats(0, 50), r=st.floats(0, 50))
def test_monotone_and_quantile_transport(s1, s2, t, x1, x2, r):
    c = CoefficientSet.multiplicative(s1 * (1.0 + 0.1 * T), s2, 0.0, [1.0])
    lo = lower_bound(c, t)
    a, b, th = lo + 1e-3 + x1, lo + 1e-3 + x2, lo + 1e-3 + r
    fa, fb, fth = forward(c, t, a), forward(c, t, b), forward(c, t, th)
    if a < b:
        assert fa < fb or b - a < 1e-12 * max(1, abs(b))
    if abs(a - th) > 1e-9 * max(1.0, abs(th)):
        assert (a <= th) == (fa <= fth)


def test_initial_law_moment_check():
    rng = np.random.default_rng(5)
    n = 100_000
    xi = rng.normal(0.2, 1.0, n)
    x0 = inverse(GBM, 0.0, xi)
    back = forward(GBM, 0.0, x0)
    assert abs(back.mean() - 0.2) <= 4.0 / math.sqrt(n)


def test_reference_examples():
    ref = transform_reference(GBM, 1.0, mu0_bar=0.0)
    assert ref(2.0) == 0.0 and ref.report.ok
    add = CoefficientSet.additive(1.0, 0.0, [1.0])
    ref = transform_reference(add, 0.25, mu0_bar=0.25)
    assert ref(3.0) == 0.25 and ref.report.ok
    ref = transform_reference(GBM, tf.exp(T), mu0_bar=0.0)
    assert ref(1.5) == pytest.approx(1.5)
    assert not ref.report.below_mean and ref.report.non_decreasing
    assert any("exceeds mu0_bar" in v for v in ref.report.violations())


def test_reference_decreasing_flagged():
    ref = transform_reference(CoefficientSet.additive(1.0, 0.0, [1.0]), -1.0 * T, mu0_bar=0.0)
    assert not ref.report.non_decreasing


def test_reference_outside_domain():
    c = CoefficientSet.multiplicative(1.0, 0.0, 0.0, [1.0])
    with pytest.raises(DomainError) as info:
        transform_reference(c, 1.0 - T, window=(0.0, 2.0))
    assert info.value.t == pytest.approx(1.0, abs=1e-3)
