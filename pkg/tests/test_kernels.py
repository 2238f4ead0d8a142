import math
import subprocess
import sys

import numpy as np
import pytest

from regime_sde.kernels import available_backends, get_backend

BACKENDS = available_backends()


def test_numpy_always_available():
    assert "numpy" in BACKENDS
    with pytest.raises(ValueError):
        get_backend("fortran")


@pytest.mark.parametrize("name", BACKENDS)
def test_normals_stream_properties(name):
    k = get_backend(name)
    z = k.normals(3, 0, 200_000)
    assert abs(z.mean()) <= 4 / math.sqrt(z.size)
    assert abs(z.var() - 1) <= 4 * math.sqrt(2 / z.size)
    # a path's draw does not depend on how many paths are drawn alongside it
    assert np.array_equal(k.normals(3, 0, 10), z[:10])
    assert np.array_equal(k.normals(3, 0, 5, offset=5), z[5:10])
    assert not np.array_equal(k.normals(3, 1, 10), z[:10])
    assert not np.array_equal(k.normals(4, 0, 10), z[:10])


@pytest.mark.skipif("numba" not in BACKENDS, reason="numba missing")
def test_backend_parity():
    a, b = get_backend("numba"), get_backend("numpy")
    assert np.max(np.abs(a.normals(11, 5, 100_000) - b.normals(11, 5, 100_000))) <= 1e-14
    ya, yb = np.zeros(1000), np.zeros(1000)
    a.advance_gaussian(ya, 0.1, 0.5, 2, 3)
    b.advance_gaussian(yb, 0.1, 0.5, 2, 3)
    assert np.max(np.abs(ya - yb)) <= 1e-14
    assert a.count_le(ya, 0.1) == b.count_le(yb, 0.1)
    xa, xb = np.ones(1000), np.ones(1000)
    args = ((1.0, 0.0, 0.0, 0.0, 0.1), (1.0, 0.0), 1e-3, 1.0, False, 7, 3)
    assert a.advance_euler(xa, *args) == b.advance_euler(xb, *args)
    assert np.max(np.abs(xa - xb)) <= 1e-13


@pytest.mark.parametrize("name", BACKENDS)
def test_count_le_ties(name):
    k = get_backend(name)
    assert k.count_le(np.array([0.0, 1.0, -1.0, 1.0]), 1.0) == 4
    assert k.count_le(np.array([0.0, 1.0]), -math.inf) == 0


def test_env_flag_selects_numpy():
    code = "from regime_sde.kernels import get_backend, _numpy; print(get_backend() is _numpy)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"REGIME_SDE_BACKEND": "numpy", "PATH": ""}, check=True)
    assert out.stdout.strip() == "True"
