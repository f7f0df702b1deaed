"""Greedy nearest/farthest construction tests."""

import numpy as np
import pytest
from hypothesis import given, settings

from treeprobe import (
    DepthSequence,
    PredictedDepths,
    assign_in_order,
    assign_reversed,
    distance,
    greedy_farthest,
    greedy_nearest,
    greedy_profile,
    greedy_trace,
    max_oracle,
    min_oracle,
    sorted_gaps_within_one,
    validate,
)
from treeprobe.errors import InvalidInputError

from strategies import bounded_gap_depths, predicted_depths


class TestGreedyProfile:
    def test_wide_gap_trace(self):
        # the sorted gap 4.5 - 2.4 exceeds 1, so this differs from the
        # exact nearest member [1, 2, 2, 3, 4]
        assert greedy_profile([0.8, 1.5, 1.8, 2.4, 4.5]).values == (1, 2, 2, 2, 3)

    def test_small_gap_trace(self):
        assert greedy_profile([0.9, 1.6, 2.2]).values == (1, 2, 2)

    def test_exact_integer_input(self):
        assert greedy_profile([1.0, 2.0, 3.0]).values == (1, 2, 3)

    def test_unsorted_rejected(self):
        with pytest.raises(InvalidInputError):
            greedy_profile([2.0, 1.0])

    def test_singleton(self):
        assert greedy_profile([7.3]).values == (1,)


class TestAssignment:
    def test_in_order_example(self):
        pesu = assign_in_order(DepthSequence([1, 2, 3]), [5.0, 0.2, 2.0])
        assert pesu.values == (3, 1, 2)

    def test_in_order_already_ascending(self):
        assert assign_in_order(DepthSequence([1, 2]), [0.5, 1.5]).values == (1, 2)

    def test_in_order_trace(self):
        pesu = assign_in_order(DepthSequence([1, 2, 2]), [2.2, 0.9, 1.6])
        assert pesu.values == (2, 1, 2)

    def test_reversed_ascending_input(self):
        xp = assign_reversed(DepthSequence([1, 2, 2, 2, 3]), [0.8, 1.5, 1.8, 2.4, 4.5])
        assert xp.values == (3, 2, 2, 2, 1)

    def test_reversed_pair(self):
        assert assign_reversed(DepthSequence([1, 2]), [0.5, 1.5]).values == (2, 1)

    def test_reversed_trace(self):
        xp = assign_reversed(DepthSequence([1, 2, 3]), [5.0, 0.2, 2.0])
        assert xp.values == (1, 3, 2)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            assign_in_order(DepthSequence([1, 2]), [1.0, 2.0, 3.0])
        with pytest.raises(InvalidInputError):
            assign_reversed(DepthSequence([1, 2]), [1.0, 2.0, 3.0])


class TestGapCondition:
    def test_wide_gap(self):
        assert not sorted_gaps_within_one([0.8, 1.5, 1.8, 2.4, 4.5])

    def test_small_gaps(self):
        assert sorted_gaps_within_one([0.9, 1.6, 2.2])

    def test_singleton_vacuous(self):
        assert sorted_gaps_within_one([42.0])


class TestGreedyProperties:
    @settings(max_examples=200, deadline=None)
    @given(predicted_depths(max_length=12, max_value=15.0))
    def test_outputs_validate(self, pdep):
        assert validate(greedy_nearest(pdep).values)
        assert validate(greedy_farthest(pdep).values)

    @settings(max_examples=200, deadline=None)
    @given(predicted_depths(max_length=12, max_value=15.0))
    def test_reversed_dominates_in_order(self, pdep):
        near = greedy_nearest(pdep)
        far = greedy_farthest(pdep)
        assert distance(pdep, far.values) >= distance(pdep, near.values)

    @settings(max_examples=200, deadline=None)
    @given(predicted_depths(max_length=7))
    def test_bracketed_by_oracles(self, pdep):
        _, lo = min_oracle(pdep)
        _, hi = max_oracle(pdep)
        assert distance(pdep, greedy_nearest(pdep).values) >= lo
        assert distance(pdep, greedy_farthest(pdep).values) <= hi

    @settings(max_examples=300, deadline=None)
    @given(bounded_gap_depths())
    def test_exact_when_gaps_small(self, pdep):
        assert sorted_gaps_within_one(pdep)
        _, lo = min_oracle(pdep)
        assert distance(pdep, greedy_nearest(pdep).values) == pytest.approx(
            lo, abs=1e-9
        )

    @settings(max_examples=200, deadline=None)
    @given(predicted_depths(max_length=10))
    def test_sorting_nearest_recovers_profile(self, pdep):
        trace = greedy_trace(pdep)
        assert tuple(sorted(trace.nearest.values)) == trace.profile.values
        assert tuple(sorted(trace.farthest.values)) == trace.profile.values


class TestGreedyTrace:
    def test_bias_flags(self):
        trace = greedy_trace([0.8, 1.5, 1.8, 2.4, 4.5])
        assert trace.profile.values == (1, 2, 2, 2, 3)
        assert trace.bias_flags == (0, 0, 1)
        assert not trace.gaps_within_one

    def test_stable_ties(self):
        # equal predicted depths keep their original relative order
        pd = PredictedDepths([2.0, 2.0, 1.0])
        assert list(pd.order) == [2, 0, 1]
        assert greedy_nearest(pd).values == (2, 2, 1)


class TestPredictedDepths:
    def test_rejects_negative(self):
        with pytest.raises(InvalidInputError):
            PredictedDepths([-0.1, 1.0])

    def test_rejects_nan(self):
        with pytest.raises(InvalidInputError):
            PredictedDepths([np.nan])

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            PredictedDepths([])

    def test_ascending_view(self):
        pd = PredictedDepths([3.0, 1.0, 2.0])
        assert list(pd.ascending) == [1.0, 2.0, 3.0]
