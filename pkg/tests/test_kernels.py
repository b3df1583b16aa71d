"""Both kernel backends must agree; the env flag picks one at import."""

import os
import subprocess
import sys

import numpy as np

from caster import _kernels


def _random_clip_inputs(seed=0, t=64):
    rng = np.random.default_rng(seed)
    pos = rng.normal(0, 0.08, (t, 21, 3)) + [0, 0, 0.6]
    order = np.arange(21, dtype=np.int64)
    edge_i, edge_j = order, np.roll(order, 1)
    gains = np.ones((t, 21))
    return (pos, edge_i, edge_j, np.array([0.0, -0.1, -1.5]),
            np.array([0.2, -0.1, 0.1]), 0.004957, 60.48e9, 299792458.0, 0.5,
            gains, gains)


def test_clip_rays_backends_agree():
    args = _random_clip_inputs()
    a1, d1, s1 = _kernels.clip_rays(*args)
    a2, d2, s2 = _kernels.clip_rays_numpy(*args)
    assert np.array_equal(d1, d2)
    assert np.array_equal(s1, s2)
    assert np.allclose(a1, a2, rtol=1e-12, atol=1e-24)


def test_one_euro_backends_agree():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 0.1, (80, 63))
    a = _kernels.one_euro(x, 1 / 30, 1.0, 0.5, 0.3)
    b = _kernels.one_euro_numpy(x, 1 / 30, 1.0, 0.5, 0.3)
    assert np.array_equal(a, b)


def test_spline_backends_agree():
    rng = np.random.default_rng(2)
    knots = np.arange(40) / 30.0
    y = rng.normal(0, 0.1, (40, 63))
    m1 = _kernels.spline_coeffs(knots, y)
    m2 = _kernels.spline_coeffs_numpy(knots, y)
    assert np.allclose(m1, m2, rtol=1e-13, atol=1e-18)
    tq = np.linspace(0.0, knots[-1], 913)
    idx = np.clip(np.searchsorted(knots, tq, side="right") - 1, 0, 38).astype(np.int64)
    e1 = _kernels.spline_eval(knots, y, m1, idx, tq)
    e2 = _kernels.spline_eval_numpy(knots, y, m2, idx, tq)
    assert np.allclose(e1, e2, rtol=1e-13, atol=1e-18)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CASTER_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c",
         "from caster import _kernels; "
         "print(_kernels.USING_NUMBA, _kernels.clip_rays is _kernels.clip_rays_numpy)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]


def test_numpy_fallback_runs_degenerate_slots_like_kernel():
    # coincident keypoints zero out that slot in both backends
    args = list(_random_clip_inputs(seed=3, t=4))
    args[0][2, 5] = args[0][2, 6]  # edge joining 6 and 5 degenerates
    a1, d1, s1 = _kernels.clip_rays_numpy(*args)
    assert np.isfinite(a1).all()
    bad = s1 <= 1e-9
    assert bad.any()
    assert np.all(a1[bad] == 0.0) and np.all(d1[bad] == 0.0)
