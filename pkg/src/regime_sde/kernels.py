"""Per-particle kernels: counter-based normals, exact Gaussian steps, Euler steps, counts.

Two backends with the same signatures: numba (``@njit(parallel=True)``) and
plain numpy. ``REGIME_SDE_BACKEND=numpy`` forces the fallback; by default
numba is used when it imports. ``REGIME_SDE_THREADS`` caps numba's threads.

Random numbers are a pure function of (seed, path, step): a splitmix64 hash
gives two uniforms and Box-Muller turns them into one normal. Results do not
depend on thread count or evaluation order. The two backends produce the same
uniforms bit for bit; normals agree to a few ulps (libm vs numba math).
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_STEP_SALT = 0xD1B54A32D192ED03
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# numpy backend

def _mix_np(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _base_np(seed, paths, step):
    with np.errstate(over="ignore"):
        s = _mix_np(np.asarray([seed], dtype=np.uint64) + np.uint64(_GOLDEN))
        h = _mix_np(s + paths.astype(np.uint64) * np.uint64(_GOLDEN))
        return _mix_np(h ^ (np.uint64(step) * np.uint64(_STEP_SALT) + np.uint64(_GOLDEN)))


def uniforms_np(seed, step, n, offset=0):
    paths = np.arange(offset, offset + n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h1 = _base_np(seed, paths, step)
        h2 = _mix_np(h1 + np.uint64(_GOLDEN))
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    u2 = ((h2 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return u1, u2


def normals_np(seed, step, n, offset=0):
    u1, u2 = uniforms_np(seed, step, n, offset)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def advance_gaussian_np(y, mean_inc, sd_inc, seed, step):
    y += mean_inc + sd_inc * normals_np(seed, step, y.size)


def advance_euler_np(x, t_state, t_next, dt, alpha, additive, seed, step):
    """One Euler-Maruyama step of dX = b dt + alpha (s1 X + s2) dW; returns the exit count.

    ``t_state = (s1, s2, ds1, ds2, drift_param)`` at the current time,
    ``t_next = (s1, s2)`` at the next time (for the domain check).
    """
    s1, s2, ds1, ds2, q = t_state
    z = normals_np(seed, step, x.size)
    u = s1 * x + s2
    if additive:
        b = ds2 / s2 * x + q
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            b = (ds1 * u * np.log(u) - s1 * ds2 + ds1 * s2) / (s1 * s1) + q * u
    x += b * dt + alpha * u * math.sqrt(dt) * z
    if additive:
        return 0
    return int(np.count_nonzero(~(t_next[0] * x + t_next[1] > 0.0)))


def count_le_np(x, thr):
    return int(np.count_nonzero(x <= thr))


_numpy = SimpleNamespace(name="numpy", normals=normals_np, uniforms=uniforms_np,
                         advance_gaussian=advance_gaussian_np, advance_euler=advance_euler_np,
                         count_le=count_le_np)


# ---------------------------------------------------------------------------
# numba backend

def _build_numba():
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the TBB layer shipped with some installs is too old and only warns
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    threads = os.environ.get("REGIME_SDE_THREADS")
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))

    golden = np.uint64(_GOLDEN)
    m1 = np.uint64(_M1)
    m2 = np.uint64(_M2)
    salt = np.uint64(_STEP_SALT)
    s30, s27, s31, s11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)

    @njit(inline="always")
    def mix(z):
        z = z ^ (z >> s30)
        z = z * m1
        z = z ^ (z >> s27)
        z = z * m2
        return z ^ (z >> s31)

    @njit(inline="always")
    def normal_at(seed_mix, path, step_key):
        h1 = mix(mix(seed_mix + np.uint64(path) * golden) ^ step_key)
        h2 = mix(h1 + golden)
        u1 = (np.float64(h1 >> s11) + 0.5) * _INV_2_53
        u2 = (np.float64(h2 >> s11) + 0.5) * _INV_2_53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)

    @njit(cache=True)
    def keys(seed, step):
        return mix(np.uint64(seed) + golden), np.uint64(step) * salt + golden

    @njit(parallel=True, cache=True)
    def normals(seed, step, n, offset=0):
        sm, sk = keys(seed, step)
        out = np.empty(n)
        for i in prange(n):
            out[i] = normal_at(sm, offset + i, sk)
        return out

    @njit(parallel=True, cache=True)
    def advance_gaussian(y, mean_inc, sd_inc, seed, step):
        sm, sk = keys(seed, step)
        for i in prange(y.size):
            y[i] += mean_inc + sd_inc * normal_at(sm, i, sk)

    @njit(parallel=True, cache=True)
    def _euler(x, s1, s2, ds1, ds2, q, n1, n2, dt, alpha, additive, seed, step):
        sm, sk = keys(seed, step)
        root = math.sqrt(dt)
        exits = 0
        for i in prange(x.size):
            xi = x[i]
            u = s1 * xi + s2
            if additive:
                b = ds2 / s2 * xi + q
            elif u > 0.0:
                b = (ds1 * u * math.log(u) - s1 * ds2 + ds1 * s2) / (s1 * s1) + q * u
            else:
                b = math.nan
            xi = xi + b * dt + alpha * u * root * normal_at(sm, i, sk)
            x[i] = xi
            if not additive and not (n1 * xi + n2 > 0.0):
                exits += 1
        return exits

    def advance_euler(x, t_state, t_next, dt, alpha, additive, seed, step):
        s1, s2, ds1, ds2, q = (float(v) for v in t_state)
        return int(_euler(x, s1, s2, ds1, ds2, q, float(t_next[0]), float(t_next[1]),
                          float(dt), float(alpha), bool(additive), int(seed), int(step)))

    @njit(parallel=True, cache=True)
    def count_le(x, thr):
        c = 0
        for i in prange(x.size):
            if x[i] <= thr:
                c += 1
        return c

    def _normals(seed, step, n, offset=0):
        return normals(int(seed), int(step), int(n), int(offset))

    def _advance_gaussian(y, mean_inc, sd_inc, seed, step):
        advance_gaussian(y, float(mean_inc), float(sd_inc), int(seed), int(step))

    def _count_le(x, thr):
        return int(count_le(x, float(thr)))

    return SimpleNamespace(name="numba", normals=_normals, uniforms=uniforms_np,
                           advance_gaussian=_advance_gaussian, advance_euler=advance_euler,
                           count_le=_count_le)


_cache = {}


def available_backends():
    names = ["numpy"]
    try:
        import numba  # noqa: F401
        names.insert(0, "numba")
    except ImportError:
        pass
    return names


def get_backend(name=None):
    """Kernel namespace; ``name`` overrides the REGIME_SDE_BACKEND env var."""
    if name is None:
        name = os.environ.get("REGIME_SDE_BACKEND", "").strip().lower() or available_backends()[0]
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; use 'numba' or 'numpy'")
    if name not in _cache:
        _cache[name] = _build_numba() if name == "numba" else _numpy
    return _cache[name]
