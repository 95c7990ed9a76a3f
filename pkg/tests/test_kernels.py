"""Pairwise kernel backends: semantics and cross-backend agreement."""
import os
import subprocess
import sys

import numpy as np
import pytest

from loopclone import _kernels
from loopclone._kernels import _numpy_impl

try:
    from loopclone._kernels import _fast
except ImportError:  # pragma: no cover - build without the extension
    _fast = None

IMPLS = [pytest.param(_numpy_impl, id="py")]
if _fast is not None:
    IMPLS.append(pytest.param(_fast, id="c"))


@pytest.fixture(params=IMPLS)
def impl(request):
    return request.param


def test_backend_label_matches_loaded_impl():
    assert _kernels.BACKEND in ("c", "py")
    expected = _fast if _kernels.BACKEND == "c" else _numpy_impl
    assert _kernels.min_pairwise_dist is expected.min_pairwise_dist


def test_neighborhood_spreads_hand_case(impl):
    W = np.array([[0.0], [0.5], [2.0]])
    z = np.array([1.0, 3.0, 10.0])
    spread, has = impl.neighborhood_spreads(W, z, 1.0)
    assert np.asarray(spread).tolist() == [2.0, 2.0, 0.0]
    assert np.asarray(has, dtype=bool).tolist() == [True, True, False]


def test_neighborhood_spreads_isolated_point_spread_is_zero(impl):
    W = np.array([[0.0], [100.0]])
    z = np.array([5.0, -5.0])
    spread, has = impl.neighborhood_spreads(W, z, 1.0)
    assert np.asarray(spread).tolist() == [0.0, 0.0]
    assert not np.asarray(has, dtype=bool).any()


def test_neighborhood_spreads_ball_is_closed(impl):
    # dist exactly rho is inside
    W = np.array([[0.0], [1.0]])
    z = np.array([0.0, 4.0])
    spread, has = impl.neighborhood_spreads(W, z, 1.0)
    assert np.asarray(spread).tolist() == [4.0, 4.0]
    assert np.asarray(has, dtype=bool).all()


def test_secant_excess_deadzone_and_slope(impl):
    W = np.array([[0.0], [1.0]])
    z = np.array([0.0, 5.0])
    best, found = impl.secant_excess_max(W, z, 1.0)
    assert found
    assert best == 4.0
    best, found = impl.secant_excess_max(W, z, 10.0)
    assert found
    assert best == 0.0


def test_secant_excess_coincident_points_not_distinct(impl):
    W = np.array([[1.0], [1.0]])
    z = np.array([0.0, 9.0])
    best, found = impl.secant_excess_max(W, z, 0.0)
    assert not found
    assert best == 0.0


def test_secant_excess_uses_infinity_norm(impl):
    W = np.array([[0.0, 0.0], [1.0, 5.0]])
    z = np.array([0.0, 10.0])
    best, found = impl.secant_excess_max(W, z, 0.0)
    assert found
    assert best == 2.0


def test_min_pairwise_dist_basic(impl):
    assert impl.min_pairwise_dist(np.array([[0.0], [3.0], [10.0]])) == 3.0
    assert impl.min_pairwise_dist(np.array([[7.0]])) == np.inf
    assert impl.min_pairwise_dist(np.array([[2.0], [2.0]])) == 0.0
    assert impl.min_pairwise_dist(np.array([[0.0, 0.0], [1.0, 5.0]])) == 5.0


@pytest.mark.skipif(_fast is None, reason="compiled extension not built")
@pytest.mark.parametrize("n,d", [(3, 1), (50, 2), (513, 1), (600, 3)])
def test_backends_agree_exactly(n, d):
    # 513/600 cross the 512-row chunk boundary of the fallback
    rng = np.random.default_rng(0)
    W = rng.normal(size=(n, d))
    z = rng.normal(size=n)
    s_py, h_py = _numpy_impl.neighborhood_spreads(W, z, 0.7)
    s_c, h_c = _fast.neighborhood_spreads(W, z, 0.7)
    assert np.array_equal(np.asarray(s_py), np.asarray(s_c))
    assert np.array_equal(
        np.asarray(h_py, dtype=bool), np.asarray(h_c, dtype=bool)
    )
    assert _numpy_impl.secant_excess_max(W, z, 0.3) == tuple(
        _fast.secant_excess_max(W, z, 0.3)
    )
    assert _numpy_impl.min_pairwise_dist(W) == _fast.min_pairwise_dist(W)


def _backend_of(env_value):
    env = dict(os.environ)
    env.pop("LOOPCLONE_KERNELS", None)
    if env_value is not None:
        env["LOOPCLONE_KERNELS"] = env_value
    return subprocess.run(
        [sys.executable, "-c",
         "from loopclone._kernels import BACKEND; print(BACKEND)"],
        capture_output=True, text=True, env=env,
    )


def test_env_var_forces_fallback():
    out = _backend_of("py")
    assert out.returncode == 0
    assert out.stdout.strip() == "py"


@pytest.mark.skipif(_fast is None, reason="compiled extension not built")
def test_env_var_requires_extension():
    out = _backend_of("c")
    assert out.returncode == 0
    assert out.stdout.strip() == "c"


def test_env_var_rejects_unknown_value():
    out = _backend_of("fortran")
    assert out.returncode != 0
    assert "LOOPCLONE_KERNELS" in out.stderr
