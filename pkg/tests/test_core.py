"""Shared data types: dataset validation, interfaces, seeded noise."""
import numpy as np
import pytest

from loopclone import (
    Dataset,
    FunctionController,
    NoiseModel,
    PlantInterface,
    validate_dataset,
)


def make_dataset(**over):
    base = dict(
        k=(0, 1, 2),
        y=((0.0,), (1.0,), (2.0,)),
        u=(0.5, 0.6, 0.7),
        n_y=1,
        is_trajectory=True,
    )
    base.update(over)
    return Dataset(**base)


class TestDataset:
    def test_from_arrays_1d_outputs_become_columns(self):
        d = Dataset.from_arrays(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert d.n_y == 1
        assert d.y == ((1.0,), (2.0,))
        assert d.u == (3.0, 4.0)
        assert d.k == (0, 1)
        assert d.is_trajectory

    def test_from_arrays_2d_and_explicit_indices(self):
        d = Dataset.from_arrays(
            np.array([[1.0, 2.0], [3.0, 4.0]]),
            [0.1, 0.2],
            is_trajectory=False,
            k=[5, 9],
        )
        assert d.n_y == 2
        assert d.k == (5, 9)
        assert not d.is_trajectory

    def test_array_accessors_round_trip(self):
        d = make_dataset()
        assert np.array_equal(d.y_array(), [[0.0], [1.0], [2.0]])
        assert np.array_equal(d.u_array(), [0.5, 0.6, 0.7])

    def test_subset_keeps_prefix_and_flag(self):
        d = make_dataset(is_trajectory=False)
        s = d.subset(2)
        assert len(s) == 2
        assert s.y == d.y[:2]
        assert not s.is_trajectory
        with pytest.raises(ValueError, match="subset size"):
            d.subset(0)
        with pytest.raises(ValueError, match="subset size"):
            d.subset(4)

    def test_accessors_refuse_invalid_data(self):
        d = make_dataset(y=((0.0,), (1.0, 2.0), (2.0,)))
        with pytest.raises(ValueError, match="rectangular"):
            d.y_array()


class TestValidateDataset:
    def test_valid_dataset_has_no_problems(self):
        assert validate_dataset(make_dataset()) == []

    def test_empty_dataset(self):
        d = Dataset(k=(), y=(), u=(), n_y=1)
        assert any("at least one sample" in p for p in validate_dataset(d))

    def test_parallel_field_lengths(self):
        d = make_dataset(u=(0.5, 0.6))
        assert any("parallel fields" in p for p in validate_dataset(d))

    def test_duplicate_indices_named_with_sample(self):
        d = make_dataset(k=(0, 1, 1))
        problems = validate_dataset(d)
        assert any("duplicate index k=1" in p for p in problems)
        assert any("sample 2" in p for p in problems)

    def test_ragged_rows_flagged(self):
        d = make_dataset(y=((0.0,), (1.0, 2.0), (2.0,)))
        assert any(
            "rectangular outputs" in p for p in validate_dataset(d)
        )

    def test_nonfinite_values_flagged(self):
        d = make_dataset(y=((0.0,), (float("nan"),), (2.0,)))
        assert any("finite values" in p for p in validate_dataset(d))
        d = make_dataset(u=(0.5, float("inf"), 0.7))
        assert any("finite values" in p for p in validate_dataset(d))

    def test_trajectory_requires_consecutive_indices(self):
        d = make_dataset(k=(0, 2, 3))
        assert any(
            "consecutive k on trajectories" in p for p in validate_dataset(d)
        )
        scatter = make_dataset(k=(0, 2, 3), is_trajectory=False)
        assert validate_dataset(scatter) == []


class _Affine(PlantInterface):
    def _transition(self, y, u, e_s):
        return 2.0 * y + u + e_s


def make_plant(**over):
    kw = dict(
        y_box=[(-1.0, 1.0)], u_bounds=(-2.0, 2.0), es_box=[(-0.1, 0.1)]
    )
    kw.update(over)
    return _Affine(**kw)


class TestPlantInterface:
    def test_step_clamps_into_box_and_reports(self):
        p = make_plant()
        y_next, clamped = p.step([0.9], 0.0, [0.0])
        assert clamped
        assert y_next.tolist() == [1.0]
        y_next, clamped = p.step([0.2], 0.1, [0.0])
        assert not clamped
        assert y_next.tolist() == [0.5]

    def test_box_validation(self):
        with pytest.raises(ValueError, match="y_box"):
            make_plant(y_box=[(1.0, -1.0)])
        with pytest.raises(ValueError, match="u_bounds"):
            make_plant(u_bounds=(2.0, 2.0))
        with pytest.raises(ValueError, match="es_box"):
            make_plant(es_box=[(0.0, float("inf"))])

    def test_declared_gains_default_to_none(self):
        p = make_plant()
        assert p.gamma_f is None and p.gamma_gy is None and p.gamma_ge is None
        q = make_plant(gamma_f=0.5)
        assert q.gamma_f == 0.5


class TestFunctionController:
    def test_eval_clamps_into_input_range(self):
        c = FunctionController(lambda y: 10.0 * y[0], (-1.0, 1.0))
        assert c.eval([0.05]) == 0.5
        assert c.eval([5.0]) == 1.0
        assert c.eval([-5.0]) == -1.0

    def test_lipschitz_passthrough(self):
        c = FunctionController(lambda y: 0.0, (-1.0, 1.0), lipschitz=3.5)
        assert c.lipschitz == 3.5

    def test_scalar_outputs_accepted(self):
        c = FunctionController(lambda y: y[0], (-1.0, 1.0))
        assert c.eval(0.25) == 0.25


class TestNoiseModel:
    def test_shapes_and_bounds(self):
        nm = NoiseModel(
            "uniform_box", eps_u=0.5, eps_y=(0.1, 0.2), eps_s=(0.3,), seed=4
        )
        seq = nm.sequences(50)
        assert seq.e_u.shape == (50,)
        assert seq.e_y.shape == (50, 2)
        assert seq.e_s.shape == (50, 1)
        assert np.all(np.abs(seq.e_u) <= 0.5)
        assert np.all(np.abs(seq.e_y[:, 0]) <= 0.1)
        assert np.all(np.abs(seq.e_y[:, 1]) <= 0.2)
        assert np.all(np.abs(seq.e_s) <= 0.3)

    def test_same_seed_same_draws(self):
        a = NoiseModel("uniform_box", eps_y=(0.1,), seed=7).sequences(20)
        b = NoiseModel("uniform_box", eps_y=(0.1,), seed=7).sequences(20)
        assert np.array_equal(a.e_y, b.e_y)
        c = NoiseModel("uniform_box", eps_y=(0.1,), seed=8).sequences(20)
        assert not np.array_equal(a.e_y, c.e_y)

    def test_draw_order_is_block_then_channelwise(self):
        # e_u consumes T draws first, then each e_y channel, then each e_s
        nm = NoiseModel(
            "uniform_box", eps_u=1.0, eps_y=(1.0,), eps_s=(1.0,), seed=3
        )
        seq = nm.sequences(4)
        rng = np.random.default_rng(3)
        assert np.array_equal(seq.e_u, rng.uniform(-1, 1, 4))
        assert np.array_equal(seq.e_y[:, 0], rng.uniform(-1, 1, 4))
        assert np.array_equal(seq.e_s[:, 0], rng.uniform(-1, 1, 4))

    def test_zero_kind_ignores_seed(self):
        nm = NoiseModel("zero", eps_u=9.0, eps_y=(9.0,), eps_s=(), seed=1)
        seq = nm.sequences(5)
        assert not seq.e_u.any()
        assert not seq.e_y.any()
        assert seq.e_s.shape == (5, 0)

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown noise kind"):
            NoiseModel("gaussian")
        with pytest.raises(ValueError, match="nonnegative"):
            NoiseModel("zero", eps_u=-0.1)
        with pytest.raises(ValueError, match="T must be nonnegative"):
            NoiseModel("zero").sequences(-1)
