import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from absgrad.core import (
    build_partitions,
    channel_reduce,
    focus_noise_split,
    is_normalized,
    normalize_map,
    percentile_value,
    threshold_mask,
)
from oracles import focus_count_oracle, percentile_oracle

finite_values = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=64
)


class TestPercentileValue:
    def test_median_of_four(self):
        assert percentile_value([1, 2, 3, 4], 50) == 2

    def test_q100_is_max(self):
        assert percentile_value([1, 2, 3, 4], 100) == 4

    def test_q0_single_element(self):
        assert percentile_value([7], 0) == 7

    def test_empty_input(self):
        with pytest.raises(ValueError, match="empty value set"):
            percentile_value([], 50)

    def test_out_of_range_q(self):
        with pytest.raises(ValueError):
            percentile_value([1.0], 101)

    @given(finite_values, st.integers(0, 100))
    def test_matches_sort_oracle(self, values, q):
        assert percentile_value(values, q) == percentile_oracle(values, q)

    @given(finite_values, st.integers(0, 100), st.integers(0, 100))
    def test_monotone_in_q(self, values, q1, q2):
        lo, hi = sorted((q1, q2))
        assert percentile_value(values, lo) <= percentile_value(values, hi)


class TestNormalizeMap:
    def test_affine_rescale(self):
        np.testing.assert_allclose(normalize_map([0.0, 5.0, 10.0]), [0.0, 0.5, 1.0])

    def test_negative_inputs_shift(self):
        np.testing.assert_allclose(normalize_map([-1.0, 0.0, 1.0]), [0.0, 0.5, 1.0])

    def test_constant_map_rejected(self):
        with pytest.raises(ValueError, match="degenerate constant map"):
            normalize_map([3.0, 3.0, 3.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            normalize_map([0.0, np.nan])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=32).filter(lambda v: max(v) > min(v)))
    def test_idempotent(self, values):
        once = normalize_map(values)
        np.testing.assert_array_equal(normalize_map(once), once)
        assert is_normalized(once)


class TestThresholdMask:
    def test_ties_included(self):
        m = np.array([[0.1, 0.9], [0.5, 0.5]])
        np.testing.assert_array_equal(
            threshold_mask(m, 0.5), np.array([[False, True], [True, True]])
        )

    def test_zero_threshold_all_ones(self):
        m = np.array([[0.0, 0.3], [0.6, 1.0]])
        assert threshold_mask(m, 0.0).all()

    def test_above_max_all_zeros(self):
        m = np.array([[0.0, 0.3], [0.6, 1.0]])
        assert not threshold_mask(m, 1.0 + 1e-9).any()


class TestBuildPartitions:
    def test_two_partitions(self):
        scheme = build_partitions(np.linspace(0, 1, 50), 60, 20)
        assert scheme.j == 2
        assert scheme.percentile_ranks() == (80.0, 60.0)

    def test_five_partitions(self):
        assert build_partitions(np.linspace(0, 1, 50), 0, 20).j == 5

    def test_indivisible_grid_rejected(self):
        with pytest.raises(ValueError, match="invalid partition grid"):
            build_partitions(np.linspace(0, 1, 50), 60, 7)

    def test_thresholds_non_increasing(self):
        rng = np.random.default_rng(0)
        scheme = build_partitions(rng.uniform(size=200), 50, 10)
        assert all(a >= b for a, b in zip(scheme.thresholds, scheme.thresholds[1:]))

    def test_thresholds_are_nearest_rank_percentiles(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(size=37)
        scheme = build_partitions(values, 60, 10)
        for q, t in zip(scheme.percentile_ranks(), scheme.thresholds):
            assert t == percentile_oracle(values, q)

    def test_masks_nested(self):
        rng = np.random.default_rng(2)
        m = rng.uniform(size=(9, 9))
        scheme = build_partitions(m, 60, 10)
        prev = None
        for t in scheme.thresholds:
            mask = threshold_mask(m, t)
            if prev is not None:
                assert (mask | prev == mask).all(), "later partitions must be supersets"
            prev = mask


class TestFocusNoiseSplit:
    def test_ten_distinct_values_matches_oracle(self):
        # Inclusive >= membership at the nearest-rank threshold admits the
        # 60th-percentile value itself: 5 of 10 pixels, values 0.5..0.9.
        m = (np.arange(10) / 10.0).reshape(2, 5)
        areas = focus_noise_split(m, 60)
        assert int(areas.focus.sum()) == focus_count_oracle(m, 60) == 5
        assert m[areas.focus].min() == 0.5

    def test_lower_bound_zero_everything_in_focus(self):
        m = np.array([[0.2, 0.4], [0.6, 0.8]])
        areas = focus_noise_split(m, 0)
        assert areas.focus.all() and not areas.noise.any()

    def test_binary_map_ties_saturate(self):
        # 40% ones: the 60th-percentile value is 0, so >= keeps every pixel.
        m = np.array([0.0] * 6 + [1.0] * 4).reshape(2, 5)
        areas = focus_noise_split(m, 60)
        assert int(areas.focus.sum()) == focus_count_oracle(m, 60) == 10

    def test_partition_of_pixels(self):
        rng = np.random.default_rng(3)
        m = rng.uniform(size=(7, 5))
        areas = focus_noise_split(m, 60)
        assert (areas.focus ^ areas.noise).all()
        assert m[areas.focus].sum() + m[areas.noise].sum() == pytest.approx(m.sum(), abs=1e-12)

    def test_ground_truth_split(self):
        m = np.eye(4)
        gt = np.zeros((4, 4), dtype=bool)
        gt[:2] = True
        areas = focus_noise_split(m, 50, ground_truth=gt)
        assert (areas.ground_truth ^ areas.background).all()

    @given(st.integers(5, 400))
    @settings(max_examples=40)
    def test_focus_fraction_bracket_for_distinct_values(self, n):
        rng = np.random.default_rng(n)
        values = rng.permutation(n).astype(float)
        frac = focus_noise_split(values.reshape(1, -1), 60).focus.sum() / n
        assert 0.40 - 1.0 / n <= frac <= 0.40 + 1.0 / n


class TestChannelReduce:
    def test_mean(self):
        grad = np.array([2.0, 4.0, 6.0]).reshape(3, 1, 1)
        assert channel_reduce(grad, "mean")[0, 0] == 4.0

    def test_single_channel_identity(self):
        grad = np.arange(4.0).reshape(1, 2, 2)
        np.testing.assert_array_equal(channel_reduce(grad), grad[0])

    def test_two_dim_passthrough(self):
        m = np.arange(4.0).reshape(2, 2)
        np.testing.assert_array_equal(channel_reduce(m), m)

    def test_abs_then_mean(self):
        grad = np.array([-1.0, 5.0]).reshape(2, 1, 1)
        assert channel_reduce(np.abs(grad), "mean")[0, 0] == 3.0

    def test_max_mode(self):
        grad = np.array([-1.0, 5.0]).reshape(2, 1, 1)
        assert channel_reduce(grad, "max")[0, 0] == 5.0

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown channel reduction"):
            channel_reduce(np.zeros((2, 2, 2)), "median")
