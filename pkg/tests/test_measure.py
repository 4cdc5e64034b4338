"""
Tests for the nUV measure: decomposition, bin assignment, conditional means
"""

import numpy as np
import pytest
from hypothesis import given, settings, assume, strategies as st
from hypothesis.extra.numpy import arrays

from nuv_binning.models import Template, BinPartition, BinAssignment
from nuv_binning.errors import DomainError, DegenerateVarianceError, InvariantViolationError
from nuv_binning.measure import (
    population_variance,
    full_rank_decompose,
    assign_bins,
    bin_means,
    conditional_means,
    nuv,
    explained_variance,
    representation_error,
    hat_matrix,
)


class TestPopulationVariance:
    def test_hand_computed(self):
        assert population_variance([8, 2, 2]) == pytest.approx(8.0)

    def test_constant_is_zero(self):
        assert population_variance([3.7] * 11) == 0.0

    def test_standard_normal(self, rng):
        assert population_variance(rng.standard_normal(100_000)) == pytest.approx(1.0, abs=0.05)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            population_variance([])


class TestFullRankDecompose:
    def test_unique_values(self):
        fr = full_rank_decompose([2, 0, 5])
        assert fr.tau.tolist() == [0, 2, 5]
        assert fr.n_tau.tolist() == [1, 1, 1]
        assert fr.index_map.tolist() == [1, 0, 2]
        assert fr.is_unique

    def test_duplicates_collapse(self):
        fr = full_rank_decompose([0.3, 0.3, 0.7])
        assert fr.tau.tolist() == [0.3, 0.7]
        assert fr.n_tau.tolist() == [2, 1]
        assert not fr.is_unique

    def test_rounding_merges_values(self):
        fr = full_rank_decompose([0.1231, 0.1234], round_digits=3)
        assert fr.tau.tolist() == [0.123]
        assert fr.n_tau.tolist() == [2]

    def test_reconstruction_is_exact(self, rng):
        t = np.round(rng.random(200), 2)
        fr = full_rank_decompose(Template(t))
        assert np.array_equal(fr.reconstruct(), t)
        assert int(fr.n_tau.sum()) == 200

    def test_template_needs_two_values(self):
        with pytest.raises(DomainError):
            full_rank_decompose([1.0])

    def test_template_must_be_finite(self):
        with pytest.raises(DomainError):
            full_rank_decompose([1.0, np.nan, 2.0])


class TestAssignBins:
    def test_worked_example(self, worked_example):
        t, _, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        assert a.bin_of.tolist() == [0, 0, 1]
        assert a.bin_counts.tolist() == [2, 1]

    def test_single_bin(self):
        fr = full_rank_decompose([4, 1, 3, 1])
        a = assign_bins(fr, BinPartition([0, fr.d_tau]))
        assert a.bin_of.tolist() == [0, 0, 0, 0]

    def test_full_rank_gives_value_rank(self):
        fr = full_rank_decompose([4, 1, 3, 1])
        a = assign_bins(fr, BinPartition(np.arange(fr.d_tau + 1)))
        assert a.bin_of.tolist() == [2, 0, 1, 0]

    def test_partition_size_mismatch(self):
        fr = full_rank_decompose([4, 1, 3])
        with pytest.raises(InvariantViolationError):
            assign_bins(fr, BinPartition([0, 1, 2]))

    def test_empty_bin_rejected(self):
        with pytest.raises(InvariantViolationError):
            BinPartition([0, 2, 2, 3])

    def test_bins_follow_value_order(self, rng):
        t = rng.random(50)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition([0, 10, 30, 50]))
        assert np.all(np.diff(a.bin_of[np.argsort(t)]) >= 0)


class TestConditionalMeans:
    def test_worked_example(self, worked_example):
        t, w, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        assert conditional_means(a, w).tolist() == [5.0, 5.0, 2.0]
        assert bin_means(a, w).tolist() == [5.0, 2.0]

    def test_one_bin_gives_mean(self, rng):
        t, w = rng.random(20), rng.random(20)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition([0, fr.d_tau]))
        np.testing.assert_allclose(conditional_means(a, w), np.full(20, w.mean()))

    def test_full_rank_is_identity(self, rng):
        t, w = rng.random(20), rng.random(20)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition(np.arange(fr.d_tau + 1)))
        assert np.array_equal(conditional_means(a, w), w)

    def test_idempotent_and_mean_preserving(self, rng):
        t, w = rng.random(60), rng.standard_normal(60)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition([0, 7, 25, 41, 60]))
        once = conditional_means(a, w)
        np.testing.assert_allclose(conditional_means(a, once), once, atol=1e-12)
        assert once.mean() == pytest.approx(w.mean(), abs=1e-12)

    def test_matches_dense_hat_matrix(self, rng):
        t, w = rng.random(15), rng.standard_normal(15)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition([0, 4, 9, 15]))
        np.testing.assert_allclose(hat_matrix(a) @ w, conditional_means(a, w), atol=1e-12)

    def test_length_mismatch(self, worked_example):
        t, _, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        with pytest.raises(DomainError):
            conditional_means(a, [1.0, 2.0])


class TestNuv:
    def test_worked_example(self, worked_example):
        t, w, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        assert nuv(a, w) == pytest.approx(0.75, abs=1e-12)
        assert explained_variance(a, w) == pytest.approx(0.25, abs=1e-12)

    def test_single_bin_is_exactly_one(self, rng):
        t, w = rng.random(101), rng.standard_normal(101)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition([0, fr.d_tau]))
        assert nuv(a, w) == 1.0

    def test_full_rank_bins_give_zero(self, rng):
        t, w = rng.random(30), rng.standard_normal(30)
        fr = full_rank_decompose(t)
        a = assign_bins(fr, BinPartition(np.arange(fr.d_tau + 1)))
        assert nuv(a, w) == 0.0

    def test_function_of_template_gives_zero(self):
        t = np.array([0.1, 0.4, 0.1, 0.9, 0.4, 0.4])
        fr = full_rank_decompose(t)
        w = np.sin(3 * t) + t ** 2
        a = assign_bins(fr, BinPartition(np.arange(fr.d_tau + 1)))
        assert nuv(a, w) == pytest.approx(0.0, abs=1e-12)

    def test_constant_window_is_degenerate(self, worked_example):
        t, _, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        with pytest.raises(DegenerateVarianceError):
            nuv(a, [3.0, 3.0, 3.0])

    def test_degenerate_variance_is_a_domain_error(self):
        assert issubclass(DegenerateVarianceError, DomainError)
        assert issubclass(DomainError, ValueError)

    def test_length_mismatch(self, worked_example):
        t, _, cuts = worked_example
        a = assign_bins(full_rank_decompose(t), BinPartition(cuts))
        with pytest.raises(DomainError):
            nuv(a, [1.0, 2.0, 3.0, 4.0])


class TestRepresentationError:
    def test_full_rank_is_zero(self):
        fr = full_rank_decompose([0, 2, 5])
        assert representation_error(fr, BinPartition([0, 1, 2, 3])) == 0.0

    def test_single_bin_is_total_variance(self):
        fr = full_rank_decompose([0, 2, 5])
        assert representation_error(fr, BinPartition([0, 3])) == pytest.approx(38.0 / 3.0)

    def test_matches_residual_of_conditional_means(self, rng):
        for _ in range(50):
            t = np.round(rng.random(int(rng.integers(5, 80))), 2)
            fr = full_rank_decompose(t)
            n_bins = min(fr.d_tau, 4)
            inner = np.sort(rng.choice(np.arange(1, fr.d_tau), size=n_bins - 1, replace=False))
            p = BinPartition(np.concatenate(([0], inner, [fr.d_tau])))
            a = assign_bins(fr, p)
            direct = float(np.sum((conditional_means(a, t) - t) ** 2))
            assert representation_error(fr, p, t) == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_template_length_checked(self):
        fr = full_rank_decompose([0, 2, 5])
        with pytest.raises(DomainError):
            representation_error(fr, BinPartition([0, 3]), [0, 2])

    def test_assignment_matches_partition(self, rng):
        for _ in range(30):
            fr = full_rank_decompose(np.round(rng.random(int(rng.integers(10, 60))), 1))
            p = BinPartition([0, fr.d_tau // 2, fr.d_tau])
            assert representation_error(fr, assign_bins(fr, p)) == pytest.approx(
                representation_error(fr, p), rel=1e-9, abs=1e-12
            )

    def test_assignment_splitting_ties(self):
        fr = full_rank_decompose([1.0, 1.0, 3.0, 3.0])
        # bins {1, 1, 3} and {3}: mean 5/3 leaves 8/3
        a = BinAssignment(bin_of=np.array([0, 0, 0, 1]), bin_counts=np.array([3, 1]))
        assert representation_error(fr, a) == pytest.approx(8.0 / 3.0)

    def test_assignment_length_checked(self):
        fr = full_rank_decompose([0, 2, 5])
        a = BinAssignment(bin_of=np.array([0, 1]), bin_counts=np.array([1, 1]))
        with pytest.raises(InvariantViolationError):
            representation_error(fr, a)


# Property-based checks

@st.composite
def binned_pair(draw):
    d = draw(st.integers(min_value=2, max_value=60))
    t = draw(arrays(np.float64, d, elements=st.integers(0, 15).map(float)))
    w = draw(arrays(np.float64, d, elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False)))
    assume(np.ptp(w) > 0.5)
    fr = full_rank_decompose(t)
    b = draw(st.integers(min_value=1, max_value=fr.d_tau))
    inner = draw(st.lists(st.integers(1, max(1, fr.d_tau - 1)), min_size=b - 1, max_size=b - 1, unique=True)) \
        if fr.d_tau > 1 else []
    cuts = [0] + sorted(inner) + [fr.d_tau]
    return t, w, fr, BinPartition(cuts)


@settings(max_examples=300, deadline=None)
@given(binned_pair())
def test_nuv_lies_in_unit_interval(case):
    _, w, fr, p = case
    assert 0.0 <= nuv(assign_bins(fr, p), w) <= 1.0


@settings(max_examples=200, deadline=None)
@given(
    binned_pair(),
    st.floats(0.1, 10).flatmap(lambda x: st.sampled_from([x, -x])),
    st.floats(-100, 100),
)
def test_nuv_affine_invariance(case, alpha, shift):
    _, w, fr, p = case
    a = assign_bins(fr, p)
    assert nuv(a, alpha * w + shift) == pytest.approx(nuv(a, w), rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(binned_pair(), st.randoms(use_true_random=False))
def test_nuv_joint_permutation_invariance(case, random):
    t, w, fr, p = case
    order = list(range(t.size))
    random.shuffle(order)
    fr_perm = full_rank_decompose(t[order])
    value = nuv(assign_bins(fr_perm, p), w[order])
    assert value == nuv(assign_bins(fr, p), w)


@settings(max_examples=200, deadline=None)
@given(binned_pair())
def test_representation_error_variance_decomposition(case):
    t, _, fr, p = case
    a = assign_bins(fr, p)
    means = bin_means(a, t)
    between = float(np.sum(a.bin_counts * (means - t.mean()) ** 2))
    total = t.size * float(np.var(t))
    assert representation_error(fr, p) == pytest.approx(total - between, rel=1e-9, abs=1e-9)
