"""Kernel backend selection and numba/numpy agreement."""

import os
import subprocess
import sys

import numpy as np
import pytest

from freespec import backend_name
from freespec import _kernels_numpy

try:
    from freespec import _kernels_numba
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _random_case(seed, n=48, d=12):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, d))
    k = rng.standard_normal((n, d))
    v = rng.standard_normal((n, d))
    idx = np.arange(n)
    mask = np.abs(idx[:, None] - idx[None, :]) <= 5
    return q, k, v, 1.0 / np.sqrt(d), mask


def test_backend_name_is_valid():
    assert backend_name() in ("numba", "numpy")


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_kernels_agree_across_backends():
    for seed in range(5):
        q, k, v, scale, mask = _random_case(seed)
        a = _kernels_numpy.attend_masked(q, k, v, scale, mask)
        b = _kernels_numba.attend_masked(q, k, v, scale, mask)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_numba_kernel_deterministic_across_calls():
    q, k, v, scale, mask = _random_case(99)
    first = _kernels_numba.attend_masked(q, k, v, scale, mask)
    for _ in range(3):
        again = _kernels_numba.attend_masked(q, k, v, scale, mask)
        assert np.array_equal(first, again)


def _run(env_backend=None, env_threads=None):
    env = dict(os.environ)
    env.pop("FREESPEC_BACKEND", None)
    env.pop("FREESPEC_THREADS", None)
    if env_backend is not None:
        env["FREESPEC_BACKEND"] = env_backend
    if env_threads is not None:
        env["FREESPEC_THREADS"] = env_threads
    return subprocess.run(
        [sys.executable, "-c", "import freespec; print(freespec.backend_name())"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_env_forces_numpy_backend():
    r = _run("numpy")
    assert r.returncode == 0
    assert r.stdout.strip() == "numpy"


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_env_forces_numba_backend():
    r = _run("numba")
    assert r.returncode == 0
    assert r.stdout.strip() == "numba"


def test_env_rejects_unknown_backend():
    r = _run("bogus")
    assert r.returncode != 0
    assert "FREESPEC_BACKEND" in r.stderr


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_thread_cap_env_is_accepted():
    r = _run("numba", "1")
    assert r.returncode == 0
    assert r.stdout.strip() == "numba"


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_thread_cap_rejects_nonpositive():
    r = _run("numba", "0")
    assert r.returncode != 0
    assert "FREESPEC_THREADS" in r.stderr
