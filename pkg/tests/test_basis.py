"""Basis dictionaries: values, recorded slopes, serialization, diagnosis."""
import math
from types import SimpleNamespace

import numpy as np
import pytest

from loopclone import (
    BasisDictionary,
    Dataset,
    diagnose_basis,
    evaluate_row,
    gaussian_from_data,
    polynomial_dictionary,
)


def one_d(family, params, box=(-2.0, 2.0)):
    return BasisDictionary(
        family=family, params=tuple(params), y_box=(tuple(box),)
    )


class TestClosedFormValues:
    def test_gaussian_unit_distance_gives_inverse_e(self):
        d = one_d("gaussian", [(1.0, 0.0)])
        assert math.isclose(
            float(evaluate_row(d, [1.0])[0]), math.exp(-1.0), rel_tol=1e-15
        )
        assert float(evaluate_row(d, [0.0])[0]) == 1.0

    def test_gaussian_uses_squared_euclidean_distance(self):
        d = BasisDictionary(
            family="gaussian",
            params=((0.5, 1.0, -1.0),),
            y_box=((-2.0, 2.0), (-2.0, 2.0)),
        )
        val = float(d.evaluate_matrix(np.array([[2.0, 1.0]]))[0, 0])
        assert math.isclose(val, math.exp(-0.5 * 5.0), rel_tol=1e-15)

    def test_polynomial_monomial_values(self):
        d = one_d("polynomial", [(0.0,), (1.0,), (2.0,)])
        row = evaluate_row(d, [-1.5])
        assert row.tolist() == [1.0, -1.5, 2.25]

    def test_sigmoid_midpoint_and_shift(self):
        d = one_d("sigmoid", [(0.0, 1.0), (2.0, 1.0)])
        row = evaluate_row(d, [0.0])
        assert row[0] == 0.5
        assert math.isclose(row[1], 1 / (1 + math.exp(-2.0)), rel_tol=1e-15)

    def test_trigonometric_phase_and_weight(self):
        d = one_d("trigonometric", [(math.pi / 2, 1.0), (0.0, 2.0)])
        row = evaluate_row(d, [0.0])
        assert math.isclose(row[0], 1.0, rel_tol=1e-15)
        assert row[1] == 0.0
        assert math.isclose(
            float(evaluate_row(d, [1.0])[1]), math.sin(2.0), rel_tol=1e-15
        )


class TestRecordedLipschitz:
    CASES = [
        ("gaussian", (1.3, 0.2)),
        ("polynomial", (3.0,)),
        ("sigmoid", (0.5, 2.0)),
        ("trigonometric", (0.7, 3.0)),
    ]

    @pytest.mark.parametrize("family,params", CASES)
    def test_grid_slope_never_exceeds_recorded(self, family, params):
        d = one_d(family, [params])
        L = float(d.lipschitz_constants()[0])
        grid = np.linspace(-2.0, 2.0, 10001)
        vals = d.evaluate_matrix(grid[:, None])[:, 0]
        slopes = np.abs(np.diff(vals)) / np.diff(grid)
        assert float(slopes.max()) <= L + 1e-9

    @pytest.mark.parametrize(
        "family,params,expected",
        [
            ("gaussian", (1.0, 0.0), math.sqrt(2.0 / math.e)),
            ("polynomial", (2.0,), 4.0),
            ("sigmoid", (0.0, 2.0), 0.5),
            ("trigonometric", (0.0, 3.0), 3.0),
        ],
    )
    def test_closed_form_constants(self, family, params, expected):
        d = one_d(family, [params])
        assert math.isclose(
            float(d.lipschitz_constants()[0]), expected, rel_tol=1e-12
        )

    def test_polynomial_constant_function_has_zero_slope(self):
        d = one_d("polynomial", [(0.0,)])
        assert float(d.lipschitz_constants()[0]) == 0.0

    def test_max_norm_constant_holds_on_random_pairs(self):
        # |phi(x) - phi(y)| <= L * max-abs distance, multi-d
        d = BasisDictionary(
            family="gaussian",
            params=((2.0, 0.3, -0.4),),
            y_box=((-1.0, 1.0), (-1.0, 1.0)),
        )
        L = float(d.lipschitz_constants()[0])
        rng = np.random.default_rng(5)
        P = rng.uniform(-1, 1, size=(200, 2))
        Q = rng.uniform(-1, 1, size=(200, 2))
        gap = np.abs(
            d.evaluate_matrix(P)[:, 0] - d.evaluate_matrix(Q)[:, 0]
        )
        dist = np.abs(P - Q).max(axis=1)
        assert np.all(gap <= L * dist + 1e-12)


class TestValidation:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            one_d("wavelet", [(0.0, 1.0)])

    def test_gaussian_width_positive(self):
        with pytest.raises(ValueError, match="width must be positive"):
            one_d("gaussian", [(0.0, 0.0)])

    def test_polynomial_exponents_integer_nonnegative(self):
        with pytest.raises(ValueError, match="nonnegative integers"):
            one_d("polynomial", [(1.5,)])
        with pytest.raises(ValueError, match="nonnegative integers"):
            one_d("polynomial", [(-1.0,)])

    def test_parameter_count_checked(self):
        with pytest.raises(ValueError, match="expected 2"):
            one_d("gaussian", [(1.0,)])

    def test_empty_dictionary_rejected(self):
        with pytest.raises(ValueError, match="at least one function"):
            one_d("gaussian", [])

    def test_domain_check_names_point_and_component(self):
        d = one_d("gaussian", [(1.0, 0.0)])
        with pytest.raises(
            ValueError, match=r"point 1: component 0 = 2.5 outside domain"
        ):
            d.evaluate_matrix(np.array([[0.0], [2.5]]))

    def test_domain_edge_tolerance(self):
        d = one_d("gaussian", [(1.0, 0.0)])
        d.evaluate_matrix(np.array([[2.0 + 5e-10]]))
        with pytest.raises(ValueError, match="outside domain"):
            d.evaluate_matrix(np.array([[2.0 + 5e-9]]))

    def test_dimension_mismatch(self):
        d = one_d("gaussian", [(1.0, 0.0)])
        with pytest.raises(ValueError, match="expected 1"):
            d.evaluate_matrix(np.zeros((3, 2)))


class TestSerialization:
    def roundtrip(self, d):
        back = BasisDictionary.from_text(d.to_text())
        assert back == d
        return back

    def test_round_trip_is_exact(self):
        rng = np.random.default_rng(2)
        d = BasisDictionary(
            family="gaussian",
            params=tuple(
                (float(w), float(c1), float(c2))
                for w, c1, c2 in rng.uniform(0.1, 3.0, size=(7, 3))
            ),
            y_box=((-1.234567890123456, 2.0), (0.1, 0.30000000000000004)),
        )
        self.roundtrip(d)

    @pytest.mark.parametrize(
        "family,params",
        [
            ("polynomial", ((0.0,), (3.0,))),
            ("sigmoid", ((0.5, -2.0),)),
            ("trigonometric", ((0.0, 1.0),)),
        ],
    )
    def test_all_families_round_trip(self, family, params):
        self.roundtrip(one_d(family, params))

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError, match="expected header"):
            BasisDictionary.from_text("family gaussian\n")

    def test_missing_field_named(self):
        text = "# loopclone-basis v1\nfamily gaussian\nM 0\n"
        with pytest.raises(ValueError, match="missing field 'n_y'"):
            BasisDictionary.from_text(text)

    def test_count_mismatches_rejected(self):
        d = one_d("gaussian", [(1.0, 0.0)])
        text = d.to_text().replace("M 1", "M 2")
        with pytest.raises(ValueError, match="expected M=2"):
            BasisDictionary.from_text(text)


class TestBuilders:
    def test_gaussian_from_data_centers_and_default_box(self):
        d = Dataset.from_arrays(
            np.array([-1.0, 0.5, 2.0]), np.zeros(3), is_trajectory=False
        )
        dic = gaussian_from_data(d, 3.0)
        assert dic.family == "gaussian"
        assert dic.params == ((3.0, -1.0), (3.0, 0.5), (3.0, 2.0))
        assert dic.y_box == ((-1.0, 2.0),)

    def test_gaussian_from_data_explicit_box(self):
        d = Dataset.from_arrays(np.array([0.0, 1.0]), np.zeros(2))
        dic = gaussian_from_data(d, 1.0, y_box=[(-5.0, 5.0)])
        assert dic.y_box == ((-5.0, 5.0),)

    def test_gaussian_from_data_rejects_bad_width(self):
        d = Dataset.from_arrays(np.array([0.0, 1.0]), np.zeros(2))
        with pytest.raises(ValueError, match="width must be positive"):
            gaussian_from_data(d, 0.0)

    def test_polynomial_dictionary_1d_ordering(self):
        dic = polynomial_dictionary([(-1.0, 1.0)], 3)
        assert dic.params == ((0.0,), (1.0,), (2.0,), (3.0,))

    def test_polynomial_dictionary_2d_counts_by_degree(self):
        dic = polynomial_dictionary([(-1.0, 1.0), (-1.0, 1.0)], 2)
        assert dic.M == 6
        totals = [sum(p) for p in dic.params]
        assert totals == sorted(totals)


class TestDiagnosis:
    def fake(self, alpha, support, M):
        result = SimpleNamespace(
            support=tuple(range(support)),
            dictionary=SimpleNamespace(M=M),
        )
        report = SimpleNamespace(alpha=alpha)
        return result, report

    def test_accept(self):
        d = diagnose_basis(*self.fake(1.05, 3, 20))
        assert d.verdict == "accept"
        assert d.alpha == 1.05
        assert d.sparsity_ratio == 3 / 20

    def test_large_alpha_dominates_density(self):
        d = diagnose_basis(*self.fake(5.0, 20, 20))
        assert d.verdict == "reject_large_alpha"

    def test_dense_support_rejected(self):
        d = diagnose_basis(*self.fake(1.0, 20, 20))
        assert d.verdict == "reject_not_sparse"

    def test_thresholds_are_inclusive(self):
        assert diagnose_basis(*self.fake(1.2, 6, 20)).verdict == "accept"
        assert (
            diagnose_basis(*self.fake(1.0, 6, 20), sparsity_max=0.3).verdict
            == "accept"
        )
