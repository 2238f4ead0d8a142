import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regime_sde import timefunc as tf
from regime_sde.errors import ProblemFileError

T = tf.T


def fd(f, t, h=None):
    h = 1e-5 * max(1.0, abs(t)) if h is None else h
    return (f.eval(t + h) - f.eval(t - h)) / (2 * h)


def test_constant_folding():
    assert tf.add(1.0, 2.0) == tf.Const(3.0)
    assert tf.mul(2.0, tf.ZERO, T) == tf.ZERO
    assert tf.power(tf.Const(4.0), 0.5) == tf.Const(2.0)
    assert tf.affine(T, 1.0, 0.0) == T
    assert tf.exp(0.0).constant == 1.0


def test_eval_scalar_and_array():
    f = tf.exp(-1.0 * T) * (T + 1.0)
    assert f.eval(0.0) == 1.0
    ts = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(f.eval(ts), np.exp(-ts) * (ts + 1.0), rtol=1e-15)
    assert isinstance(f.eval(1.0), float)


def test_affine_is_composition():
    f = tf.Affine(tf.exp(T), 2.0, 1.0)
    assert f.eval(0.5) == pytest.approx(math.exp(2.0))
    assert f.deriv().eval(0.5) == pytest.approx(2.0 * math.exp(2.0))


def test_bind_regime_index():
    fam = tf.power(tf.mul(2.0, tf.N), 0.5)
    assert fam.depends_on("n") and not fam.bind(3).depends_on("n")
    assert fam.bind(8).eval(0.0) == pytest.approx(4.0)
    assert fam.eval(0.0, n=2) == pytest.approx(2.0)


EXPRS = [
    tf.exp(-1.0 * T),
    tf.log(T + 2.0),
    tf.power(T + 1.0, 2.5),
    tf.power(T + 1.0, -1.0),
    (1.0 + T) * tf.exp(T),
    tf.Affine(tf.log(T + 1.0), 3.0, 0.5),
    tf.exp(T) / (tf.exp(T) + 1.0),
]


@pytest.mark.parametrize("f", EXPRS, ids=str)
@pytest.mark.parametrize("t", [0.0, 0.3, 1.7, 5.0])
def test_deriv_matches_finite_difference(f, t):
    # central differences of eval are the oracle
    d = f.deriv().eval(t)
    assert d == pytest.approx(fd(f, t), rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("f", [e for e in EXPRS if e.antiderivative is not None], ids=str)
@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_antiderivative_differentiates_back(f, t):
    prim = f.antiderivative
    assert prim.deriv().eval(t) == pytest.approx(f.eval(t), rel=1e-12)


def test_quadrature_fallback_for_integral():
    f = tf.exp(T) / (tf.exp(T) + 1.0)
    assert f.needs_quadrature
    # int_0^2 e^t/(e^t+1) = log((e^2+1)/2)
    assert f.integral(0.0, 2.0) == pytest.approx(math.log((math.e ** 2 + 1) / 2), abs=1e-10)


def test_exact_integrals():
    assert (2.0 * T + 1.0).integral(0.0, 3.0) == pytest.approx(12.0, rel=1e-15)
    assert tf.exp(-2.0 * T).integral(0.0, 1.0) == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-14)
    assert tf.power(T + 1.0, -1.0).integral(0.0, 1.0) == pytest.approx(math.log(2), rel=1e-14)


@pytest.mark.parametrize("f", EXPRS + [tf.power(tf.mul(2.0, tf.N), 0.5)], ids=str)
def test_json_round_trip(f):
    g = tf.from_json(f.to_json())
    for t in (0.0, 0.7, 2.0):
        assert g.eval(t, n=3) == pytest.approx(f.eval(t, n=3), rel=1e-15)


@pytest.mark.parametrize("node", [
    {"op": "nope"}, {"args": []}, {"op": "pow", "args": ["t"]}, True, [1, 2],
    {"op": "pow", "args": ["t", "t"]}, {"op": "add", "args": []},
])
def test_from_json_rejects(node):
    with pytest.raises(ProblemFileError):
        tf.from_json(node)


_leaf = st.one_of(st.floats(-3, 3, allow_nan=False).map(tf.const), st.just(T))


def _grow(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: tf.add(*p)),
        st.tuples(children, children).map(lambda p: tf.mul(*p)),
        children.map(lambda c: tf.exp(tf.mul(0.3, c))),
        st.tuples(children, st.floats(0.5, 2.0)).map(lambda p: tf.power(tf.add(tf.mul(p[0], p[0]), 1.0), p[1])),
    )


@settings(max_examples=80, deadline=None)
@given(f=st.recursive(_leaf, _grow, max_leaves=6), t=st.floats(0.0, 3.0))
def test_random_trees_deriv_property(f, t):
    d = f.deriv().eval(t)
    ref = fd(f, t)
    if not (math.isfinite(d) and math.isfinite(ref)) or abs(ref) > 1e8:
        return
    assert d == pytest.approx(ref, rel=1e-6, abs=1e-6)
