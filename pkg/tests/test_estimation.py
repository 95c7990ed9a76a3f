"""Noise-bound and Lipschitz estimators: hand cases plus properties."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopclone import (
    Dataset,
    NoInformativePairsError,
    RhoTooSmallError,
    ScatterData,
    controller_scatter,
    estimate_gamma_f,
    estimate_gamma_gy,
    estimate_lipschitz,
    estimate_noise_bound,
)


def scatter(w, z):
    return ScatterData.from_arrays(np.asarray(w, float), np.asarray(z, float))


class TestScatterData:
    def test_arrays_round_trip(self):
        s = scatter([[0.0, 1.0], [2.0, 3.0]], [5.0, 6.0])
        assert np.array_equal(s.w_array(), [[0.0, 1.0], [2.0, 3.0]])
        assert np.array_equal(s.z_array(), [5.0, 6.0])
        assert len(s) == 2

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="at least 2 points"):
            scatter([[0.0]], [1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            scatter([[0.0], [np.nan]], [0.0, 1.0])

    def test_rejects_ragged_regressors(self):
        with pytest.raises(ValueError, match="inconsistent regressor"):
            ScatterData(w=((0.0,), (0.0, 1.0)), z=(0.0, 1.0))


class TestNoiseBound:
    def test_hand_computed_spread_average(self):
        # neighborhoods at rho=0.5: {0,1}, {0,1}, isolated
        eps, rho_used, covered = estimate_noise_bound(
            scatter([[0.0], [0.4], [1.0]], [1.0, 3.0, 10.0]), rho=0.5
        )
        assert eps == 1.0
        assert rho_used == 0.5
        assert covered == 2

    def test_explicit_rho_too_small_reports_min_distance(self):
        with pytest.raises(RhoTooSmallError) as err:
            estimate_noise_bound(scatter([[0.0], [1.0]], [0.0, 0.0]), rho=0.5)
        assert err.value.min_distance == 1.0
        assert "0.5" in str(err.value)

    def test_auto_doubles_until_covered(self):
        s = scatter([[0.0], [1.0], [2.0]], [7.0, 7.0, 7.0])
        eps, rho_used, covered = estimate_noise_bound(s, rho="auto")
        # diameter 2 starts the radius at 0.02; six doublings reach 1.28
        assert eps == 0.0
        assert rho_used == pytest.approx(1.28)
        assert covered == 3

    def test_coincident_points_recover_half_spread(self):
        s = scatter([[0.0]] * 4, [-0.3, 0.5, 0.1, -0.1])
        eps, rho_used, covered = estimate_noise_bound(s)
        assert eps == pytest.approx(0.4)
        assert rho_used == 0.0
        assert covered == 4

    def test_rho_validation(self):
        s = scatter([[0.0], [1.0]], [0.0, 0.0])
        with pytest.raises(ValueError, match="rho must be > 0"):
            estimate_noise_bound(s, rho=0.0)
        with pytest.raises(ValueError, match="positive number or 'auto'"):
            estimate_noise_bound(s, rho="tiny")

    def test_uniform_noise_estimate_lands_near_amplitude(self):
        # flat trend so the ball spread is noise-dominated; measured
        # value 0.0490 at this seed, amplitude 0.05
        rng = np.random.default_rng(0)
        w = rng.uniform(-1, 1, size=(2000, 1))
        z = np.sin(0.3 * w[:, 0]) + rng.uniform(-0.05, 0.05, size=2000)
        eps, _, covered = estimate_noise_bound(scatter(w, z))
        assert covered == 2000
        assert 0.040 <= eps <= 0.060

    def test_power_of_two_regressor_scaling_is_neutral(self):
        rng = np.random.default_rng(1)
        w = rng.uniform(-1, 1, size=(200, 2))
        z = rng.normal(size=200)
        base = estimate_noise_bound(scatter(w, z))
        scaled = estimate_noise_bound(scatter(4.0 * w, z))
        assert scaled[0] == base[0]
        assert scaled[1] == 4.0 * base[1]
        assert scaled[2] == base[2]


class TestLipschitzEstimate:
    def test_deadzoned_secant(self):
        s = scatter([[0.0], [1.0]], [0.0, 5.0])
        assert estimate_lipschitz(s, 0.5) == 4.0
        assert estimate_lipschitz(s, 2.5) == 0.0

    def test_coincident_regressors_are_uninformative(self):
        s = scatter([[1.0], [1.0]], [0.0, 9.0])
        with pytest.raises(NoInformativePairsError, match="informative"):
            estimate_lipschitz(s, 0.0)

    def test_negative_epsilon_rejected(self):
        s = scatter([[0.0], [1.0]], [0.0, 1.0])
        with pytest.raises(ValueError, match="epsilon_hat must be >= 0"):
            estimate_lipschitz(s, -1e-9)

    def test_never_overestimates_on_noise_free_lipschitz_data(self):
        # z = sin(w) has Lipschitz constant 1
        rng = np.random.default_rng(2)
        w = rng.uniform(-3, 3, size=(500, 1))
        s = scatter(w, np.sin(w[:, 0]))
        assert estimate_lipschitz(s, 0.0) <= 1.0 + 1e-12

    def test_noise_discount_keeps_estimate_below_truth(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(-3, 3, size=(800, 1))
        noise = rng.uniform(-0.05, 0.05, size=800)
        s = scatter(w, np.sin(w[:, 0]) + noise)
        assert estimate_lipschitz(s, 0.05) <= 1.0 + 1e-12

    @given(
        z=st.lists(
            st.floats(-100, 100, allow_nan=False), min_size=3, max_size=12
        ),
        eps_pair=st.tuples(st.floats(0, 5), st.floats(0, 5)),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_nonincreasing_in_epsilon(self, z, eps_pair):
        w = np.arange(len(z), dtype=float)[:, None]
        s = scatter(w, z)
        lo, hi = sorted(eps_pair)
        assert estimate_lipschitz(s, hi) <= estimate_lipschitz(s, lo) + 1e-12

    @given(
        seed=st.integers(0, 1000),
        n=st.integers(3, 30),
        extra=st.integers(1, 20),
    )
    @settings(max_examples=60, deadline=None)
    def test_nondecreasing_as_samples_accumulate(self, seed, n, extra):
        rng = np.random.default_rng(seed)
        w = rng.uniform(-1, 1, size=(n + extra, 1))
        z = rng.normal(size=n + extra)
        small = estimate_lipschitz(scatter(w[:n], z[:n]), 0.1)
        big = estimate_lipschitz(scatter(w, z), 0.1)
        assert big >= small

    @given(seed=st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_sample_order_is_irrelevant(self, seed):
        rng = np.random.default_rng(seed)
        w = rng.uniform(-1, 1, size=(20, 2))
        z = rng.normal(size=20)
        perm = rng.permutation(20)
        assert estimate_lipschitz(scatter(w, z), 0.05) == estimate_lipschitz(
            scatter(w[perm], z[perm]), 0.05
        )


def make_trajectory(y, u):
    return Dataset.from_arrays(np.asarray(y, float), np.asarray(u, float))


class TestTransitionEstimates:
    def test_gamma_f_on_input_driven_plant(self):
        # y(t+1) = 0.25 u(t): input sensitivity exactly 0.25
        u = np.array([0.0, 1.0, -2.0, 3.0, 0.5])
        y = np.zeros(6)
        for t in range(5):
            y[t + 1] = 0.25 * u[t]
        d = make_trajectory(y, np.append(u, 0.0))
        assert estimate_gamma_f(d, epsilon_hat=0.0) == 0.25

    def test_gamma_gy_on_contracting_plant(self):
        # y(t+1) = 0.5 y(t) under constant input
        y = [1.0, 0.5, 0.25, 0.125]
        d = make_trajectory(y, [0.0, 0.0, 0.0, 0.0])
        assert estimate_gamma_gy(d, epsilon_hat=0.0) == 0.5

    def test_componentwise_maximum_with_shared_distance(self):
        # second component both dominates the distances and has the
        # steeper map, so its slope 0.8 is recovered exactly
        y = np.zeros((5, 2))
        y[0] = [0.1, 1.0]
        for t in range(4):
            y[t + 1] = [0.5 * y[t, 0], 0.8 * y[t, 1]]
        d = make_trajectory(y, np.zeros(5))
        assert estimate_gamma_gy(d, epsilon_hat=0.0) == pytest.approx(
            0.8, abs=1e-12
        )

    def test_internal_noise_bound_keeps_estimate_conservative(self):
        y = [1.0, 0.5, 0.25, 0.125]
        d = make_trajectory(y, [0.0] * 4)
        assert estimate_gamma_gy(d) <= 0.5 + 1e-12

    def test_scatter_data_rejected(self):
        d = Dataset.from_arrays(
            np.array([0.0, 1.0]), np.array([0.0, 1.0]), is_trajectory=False
        )
        with pytest.raises(ValueError, match="needs trajectory data"):
            estimate_gamma_f(d)

    def test_short_trajectory_rejected(self):
        d = make_trajectory([1.0], [0.0])
        with pytest.raises(ValueError, match="at least 2 samples"):
            estimate_gamma_gy(d)

    def test_constant_input_is_uninformative_for_gamma_f(self):
        d = make_trajectory([0.0, 1.0, 0.5], [0.3, 0.3, 0.3])
        with pytest.raises(NoInformativePairsError):
            estimate_gamma_f(d)


class TestControllerScatter:
    def test_view_pairs_outputs_with_inputs(self):
        d = make_trajectory([1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
        s = controller_scatter(d)
        assert np.array_equal(s.w_array(), [[1.0], [2.0], [3.0]])
        assert np.array_equal(s.z_array(), [0.1, 0.2, 0.3])
