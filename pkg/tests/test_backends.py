"""The numba kernels and their numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from mirrorcp import _kernels
from mirrorcp._accel import NUMBA_AVAILABLE

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed or disabled")


@needs_numba
def test_sici_aux():
    x = np.concatenate([np.geomspace(1e-8, 4.0, 300), np.geomspace(4.0, 1e7, 300), [5e-324, 4.0]])
    a = _kernels.sici_aux_numba(x)
    b = _kernels.sici_aux_numpy(x)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-300)


@needs_numba
@pytest.mark.parametrize("beta,kmax", [(1.0, 64), (3.5, 16), (0.2, 256)])
def test_image_sum(beta, kmax):
    rng = np.random.default_rng(0)
    dt = rng.uniform(-2, 2, 200)
    r = rng.uniform(0.1, 3, 200)
    np.testing.assert_allclose(_kernels.image_sum_numba(dt, r, beta, kmax), _kernels.image_sum_numpy(dt, r, beta, kmax),
                               rtol=1e-13)


@needs_numba
@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_propagate_single(gamma):
    n = 3000
    rng = np.random.default_rng(1)
    force = rng.standard_normal(n)
    coef = np.array(_kernels.propagator_coefficients(2.0, gamma, 0.03))
    a = _kernels.propagate_single_numba(0.1, -0.2, force, coef, 4.0, gamma, 0.5, 0.03)
    b = _kernels.propagate_single_numpy(0.1, -0.2, force, coef, 4.0, gamma, 0.5, 0.03)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-14)


@needs_numba
def test_propagate_ensemble():
    n, r, count = 2000, 3, 17
    rng = np.random.default_rng(2)
    factor = rng.standard_normal((3, n, r))
    weights = rng.standard_normal((count, 3, r))
    om = np.array([1.7, 2.0, 2.3])
    coef = np.array([_kernels.propagator_coefficients(w, 0.1, 0.04) for w in om])
    args = (factor, weights, coef, om**2, 0.1, 1.0, 0.04, 400, 1200)
    np.testing.assert_allclose(_kernels.propagate_ensemble_numba(*args), _kernels.propagate_ensemble_numpy(*args),
                               rtol=1e-11)


def test_env_flag_selects_numpy():
    env = dict(os.environ, MIRRORCP_DISABLE_NUMBA="1")
    code = ("from mirrorcp import _kernels, _accel; "
            "print(_accel.BACKEND, _kernels.sici_aux is _kernels.sici_aux_numpy)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_numpy_backend_force_scan_matches(tmp_path):
    """The CLI output does not depend on the backend beyond the last digits."""
    outs = []
    for flag in ("0", "1"):
        path = tmp_path / f"f{flag}.csv"
        env = dict(os.environ, MIRRORCP_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-m", "mirrorcp.cli", "force-scan", "--zsteps", "9", "--out", str(path)],
                       env=env, check=True)
        rows = [ln.split(",") for ln in path.read_text().splitlines() if not ln.startswith("#")][1:]
        outs.append(np.array([[float(v) for v in row[:-1]] for row in rows]))
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-13)
