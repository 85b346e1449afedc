import numpy as np
import pytest

from ablatereg.augment import (
    AugmentError,
    AugmentSpec,
    ablated_copy,
    apply_inverted_dropout,
    apply_mean_ablation,
    batch_masks,
    build_augmented,
    make_mask,
)
from ablatereg.dataset import synth_correlated


class TestMakeMask:
    def test_zero_rate_all_false(self):
        mask = make_mask(100, 5, 0.0, seed=1)
        assert not mask.bits.any()

    def test_empirical_rate_three_sigma(self):
        # binomial 3 sigma band around 0.5 for 10^6 draws: +-0.0015
        mask = make_mask(200_000, 5, 0.5, seed=2)
        assert 0.4985 <= mask.rate <= 0.5015

    def test_deterministic(self):
        a = make_mask(50, 4, 0.3, seed=3)
        b = make_mask(50, 4, 0.3, seed=3)
        np.testing.assert_array_equal(a.bits, b.bits)

    def test_rejects_lambda_one(self):
        with pytest.raises(AugmentError):
            make_mask(10, 2, 1.0, seed=0)


class TestApplyMeanAblation:
    def test_definition(self):
        out = apply_mean_ablation([3.0, 4.0], [True, False], [1.0, 2.0])
        np.testing.assert_allclose(out, [1.0, 4.0])

    def test_all_false_identity(self):
        x = np.array([3.0, 4.0, 5.0])
        out = apply_mean_ablation(x, [False, False, False], [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(out, x)

    def test_fixed_point_at_means(self):
        x = np.array([1.0, 2.0])
        out = apply_mean_ablation(x, [True, True], x)
        np.testing.assert_array_equal(out, x)

    def test_length_mismatch(self):
        with pytest.raises(AugmentError):
            apply_mean_ablation([1.0, 2.0], [True], [0.0, 0.0])


class TestApplyInvertedDropout:
    def test_definition(self):
        out = apply_inverted_dropout([3.0, 4.0], [True, False], 0.5)
        np.testing.assert_allclose(out, [0.0, 8.0])

    def test_lambda_zero_identity(self):
        x = np.array([3.0, 4.0])
        mask = make_mask(1, 2, 0.0, seed=0).bits[0]
        np.testing.assert_array_equal(apply_inverted_dropout(x, mask, 0.0), x)

    def test_expectation_preserved(self):
        # Monte-Carlo mean over many masks stays within 3 empirical SEs of x
        x = np.array([2.0, -3.0, 0.5, 7.0])
        lam = 0.35
        mask = make_mask(100_000, 4, lam, seed=11).bits
        outs = np.where(mask, 0.0, x / (1 - lam))
        se = outs.std(axis=0) / np.sqrt(outs.shape[0])
        assert np.all(np.abs(outs.mean(axis=0) - x) <= 3 * se)

    def test_rejects_lambda_one(self):
        with pytest.raises(AugmentError):
            apply_inverted_dropout([1.0], [False], 1.0)


class TestBuildAugmented:
    def test_lambda_zero_is_bootstrap(self):
        d = synth_correlated(30, 3, 0.2, (1, 2, 3), 1.0, seed=1)
        aug = build_augmented(d, AugmentSpec("mean", 0.0, 100, seed=2))
        assert aug.n == 100
        source_rows = {tuple(row) for row in d.features}
        assert all(tuple(row) in source_rows for row in aug.features)

    def test_mean_mode_preserves_column_means(self):
        # conditioning: E x~_j = mean_j even at extreme ablation rates
        d = synth_correlated(200, 3, 0.5, (1, -1, 2), 1.0, seed=3)
        aug = build_augmented(d, AugmentSpec("mean", 0.999, 100_000, seed=4))
        se = aug.features.std(axis=0) / np.sqrt(aug.n)
        boot_se = d.features.std(axis=0) / np.sqrt(aug.n)
        tol = 3 * np.sqrt(se**2 + boot_se**2)
        assert np.all(np.abs(aug.features.mean(axis=0) - d.features.mean(axis=0)) <= tol)

    def test_iid_mode_preserves_column_means(self):
        d = synth_correlated(200, 3, 0.5, (1, -1, 2), 1.0, seed=5)
        aug = build_augmented(d, AugmentSpec("iid", 0.5, 1_000_000, seed=6))
        se = aug.features.std(axis=0) / np.sqrt(aug.n)
        assert np.all(np.abs(aug.features.mean(axis=0) - d.features.mean(axis=0)) <= 3 * se)

    def test_responses_are_sub_multiset(self):
        d = synth_correlated(25, 2, 0.0, (1, 1), 1.0, seed=7)
        aug = build_augmented(d, AugmentSpec("mean", 0.4, 500, seed=8))
        assert set(aug.response.tolist()) <= set(d.response.tolist())

    def test_deterministic(self):
        d = synth_correlated(25, 2, 0.0, (1, 1), 1.0, seed=7)
        spec = AugmentSpec("iid", 0.3, 200, seed=9)
        a = build_augmented(d, spec)
        b = build_augmented(d, spec)
        np.testing.assert_array_equal(a.features, b.features)

    def test_spec_validation(self):
        with pytest.raises(AugmentError):
            AugmentSpec("mean", 1.0, 10, seed=0)
        with pytest.raises(AugmentError):
            AugmentSpec("mean", 0.5, 0, seed=0)
        with pytest.raises(AugmentError):
            AugmentSpec("cutout", 0.5, 10, seed=0)


class TestBatchMasks:
    def test_lambda_zero_unchanged(self):
        batch = np.arange(12.0).reshape(4, 3)
        spec = AugmentSpec("mean", 0.0, 1, seed=1)
        out = batch_masks(batch, spec, step=0, means=np.zeros(3))
        np.testing.assert_array_equal(out, batch)

    def test_fresh_masks_per_step(self):
        batch = np.ones((50, 20))
        spec = AugmentSpec("iid", 0.5, 1, seed=2)
        a = batch_masks(batch, spec, step=0)
        b = batch_masks(batch, spec, step=1)
        assert not np.array_equal(a, b)

    def test_same_seed_step_identical(self):
        batch = np.ones((10, 5))
        spec = AugmentSpec("iid", 0.5, 1, seed=3)
        np.testing.assert_array_equal(
            batch_masks(batch, spec, step=4), batch_masks(batch, spec, step=4)
        )

    def test_mean_mode_requires_means(self):
        spec = AugmentSpec("mean", 0.5, 1, seed=4)
        with pytest.raises(AugmentError, match="means"):
            batch_masks(np.ones((2, 2)), spec, step=0)


class TestAblatedCopy:
    def test_replicates_rows(self):
        d = synth_correlated(10, 2, 0.0, (1, 1), 1.0, seed=1)
        out = ablated_copy(d, AugmentSpec("iid", 0.5, 1, seed=2), replicas=3)
        assert out.n == 30
        np.testing.assert_array_equal(out.response, np.tile(d.response, 3))

    def test_stable_across_calls(self):
        d = synth_correlated(10, 2, 0.0, (1, 1), 1.0, seed=1)
        spec = AugmentSpec("mean", 0.5, 1, seed=3)
        a = ablated_copy(d, spec, replicas=2)
        b = ablated_copy(d, spec, replicas=2)
        np.testing.assert_array_equal(a.features, b.features)
