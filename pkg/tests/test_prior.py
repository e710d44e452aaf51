"""Ring-mixture prior math: means, factored covariances, sampling moments."""

import math

import numpy as np
import pytest

from latentroll.prior import GenreRingPrior, IsotropicGaussianPrior, prior_from_json

FULL = GenreRingPrior(latent_dim=512, num_components=32)


class TestComponentMean:
    def test_component_zero_points_along_first_axis(self):
        mean = FULL.component_mean(0)
        assert mean[0] == 1.0
        assert np.all(mean[1:] == 0.0)

    def test_quarter_turn(self):
        mean = FULL.component_mean(8)
        assert abs(mean[0]) < 1e-15
        assert abs(mean[1] - 1.0) < 1e-15

    def test_half_turn(self):
        mean = FULL.component_mean(16)
        assert abs(mean[0] + 1.0) < 1e-15
        assert abs(mean[1]) < 1e-12

    def test_all_means_unit_norm(self):
        for i in range(32):
            assert abs(np.linalg.norm(FULL.component_mean(i)) - 1.0) < 1e-12

    def test_adjacent_means_equidistant_chord(self):
        # chord of a unit circle between adjacent 32nds: 2*sin(pi/32)
        expected = 2.0 * math.sin(math.pi / 32)
        for i in range(32):
            gap = np.linalg.norm(FULL.component_mean(i) - FULL.component_mean((i + 1) % 32))
            assert abs(gap - expected) < 1e-12

    def test_out_of_range_component(self):
        with pytest.raises(ValueError):
            FULL.component_mean(32)
        with pytest.raises(ValueError):
            FULL.component_mean(-1)


class TestCovariance:
    def test_component_zero_is_diagonal(self):
        cov = FULL.dense_covariance(0)
        expected = np.diag([0.1] + [0.001] * 511)
        assert np.max(np.abs(cov - expected)) < 1e-15

    def test_quarter_turn_leading_block(self):
        # independent oracle: conjugate the 2x2 diagonal by the quarter-turn rotation
        angle = 2.0 * math.pi * 8 / 32
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        expected = rot @ np.diag([0.1, 0.001]) @ rot.T
        block = FULL.dense_covariance(8)[:2, :2]
        assert np.max(np.abs(block - expected)) < 1e-15
        assert np.max(np.abs(block - np.array([[0.001, 0.0], [0.0, 0.1]]))) < 1e-12

    def test_trace_invariant(self):
        expected = 0.1 + 0.001 * 511
        for i in (0, 3, 17, 31):
            assert abs(np.trace(FULL.dense_covariance(i)) - expected) < 1e-9

    def test_rotations_orthogonal(self):
        eye = np.eye(512)
        for i in range(32):
            rotation = FULL.dense_rotation(i)
            assert np.max(np.abs(rotation @ rotation.T - eye)) < 1e-9

    def test_eigenvalue_multiset_shared(self):
        expected = np.array([0.001] * 511 + [0.1])
        for i in (0, 5, 8, 21):
            eigs = np.sort(np.linalg.eigvalsh(FULL.dense_covariance(i)))
            assert np.max(np.abs(eigs - expected)) < 1e-9

    def test_covariance_symmetric_positive_definite(self):
        for i in (1, 9, 30):
            cov = FULL.dense_covariance(i)
            assert np.max(np.abs(cov - cov.T)) < 1e-15
            assert np.min(np.linalg.eigvalsh(cov)) > 0

    def test_bad_variances_rejected(self):
        with pytest.raises(ValueError):
            GenreRingPrior(latent_dim=8, num_components=4, radial_variance=0.0)
        with pytest.raises(ValueError):
            GenreRingPrior(latent_dim=8, num_components=4, tangential_variance=-1.0)


def _streamed_moments(prior, component, total, chunk, rng):
    count = 0
    total_sum = np.zeros(prior.latent_dim)
    total_sq = np.zeros(prior.latent_dim)
    while count < total:
        draw = prior.sample_component(component, min(chunk, total - count), rng)
        total_sum += draw.sum(axis=0)
        total_sq += (draw**2).sum(axis=0)
        count += draw.shape[0]
    mean = total_sum / count
    var = total_sq / count - mean**2
    return mean, var


class TestSampling:
    def test_component_moments_100k(self):
        rng = np.random.default_rng(42)
        mean, var = _streamed_moments(FULL, 0, 100_000, 20_000, rng)
        assert np.max(np.abs(mean - FULL.component_mean(0))) < 0.01
        assert abs(var[0] - 0.1) < 0.1 * 0.1
        assert abs(var[1] - 0.001) < 0.1 * 0.001

    def test_rotated_component_moments(self):
        rng = np.random.default_rng(7)
        prior = GenreRingPrior(latent_dim=16, num_components=32)
        mean, var = _streamed_moments(prior, 8, 100_000, 25_000, rng)
        assert np.max(np.abs(mean - prior.component_mean(8))) < 0.01
        # quarter turn swaps the leading variances
        assert abs(var[0] - 0.001) < 0.1 * 0.001
        assert abs(var[1] - 0.1) < 0.1 * 0.1

    def test_seeded_sampling_reproducible(self):
        a = FULL.sample_component(3, 50, np.random.default_rng(9))
        b = FULL.sample_component(3, 50, np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_single_draw_finite(self):
        z = FULL.sample_component(31, 1, np.random.default_rng(0))
        assert z.shape == (1, 512)
        assert np.all(np.isfinite(z))

    def test_mahalanobis_statistic(self):
        rng = np.random.default_rng(5)
        prior = GenreRingPrior(latent_dim=64, num_components=32)
        component = 5
        inverse = np.linalg.inv(prior.dense_covariance(component))
        mean = prior.component_mean(component)
        count = 20_000
        total = 0.0
        for _ in range(4):
            draws = prior.sample_component(component, count // 4, rng) - mean
            total += float(np.sum(np.einsum("ij,jk,ik->i", draws, inverse, draws)))
        statistic = total / count
        bound = 3.0 * math.sqrt(2.0 * 64 / count)
        assert abs(statistic - 64) < bound

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            FULL.sample_component(0, 0, np.random.default_rng(0))


class TestBatchSampling:
    def test_isotropic_moments(self):
        rng = np.random.default_rng(11)
        prior = IsotropicGaussianPrior(latent_dim=64)
        draws = prior.sample(100_000, rng)
        assert np.max(np.abs(draws.mean(axis=0))) < 0.02
        assert np.max(np.abs(draws.var(axis=0) - 1.0)) < 0.05

    def test_singleton_tag_always_uses_its_component(self):
        rng = np.random.default_rng(2)
        prior = GenreRingPrior(latent_dim=2, num_components=4, tangential_variance=1e-6, radial_variance=1e-6)
        draws = prior.sample_for([(2,)] * 200, rng)
        mean = prior.component_mean(2)[:2]
        assert np.max(np.linalg.norm(draws - mean, axis=1)) < 0.1

    def test_two_tags_chosen_uniformly(self):
        rng = np.random.default_rng(3)
        prior = GenreRingPrior(latent_dim=2, num_components=4, tangential_variance=1e-4, radial_variance=1e-4)
        draws = prior.sample_for([(0, 2)] * 10_000, rng)
        means = np.stack([prior.component_mean(i)[:2] for i in range(4)])
        nearest = np.argmin(((draws[:, None, :] - means[None]) ** 2).sum(-1), axis=1)
        share = float(np.mean(nearest == 0))
        assert abs(share - 0.5) < 0.02
        assert set(np.unique(nearest)) == {0, 2}

    def test_missing_genres_rejected(self):
        prior = GenreRingPrior(latent_dim=4, num_components=4)
        with pytest.raises(ValueError, match="no genre ids"):
            prior.sample_for([()], np.random.default_rng(0))

    def test_unknown_genre_rejected(self):
        prior = GenreRingPrior(latent_dim=4, num_components=4, component_of_genre=(0, 1, 2, 3))
        with pytest.raises(ValueError, match="unknown genre"):
            prior.sample_for([(7,)], np.random.default_rng(0))

    def test_component_map_applied(self):
        rng = np.random.default_rng(8)
        prior = GenreRingPrior(
            latent_dim=2, num_components=4, component_of_genre=(3, 2, 1, 0),
            radial_variance=1e-8, tangential_variance=1e-8,
        )
        draws = prior.sample_for([(0,)] * 10, rng)
        assert np.max(np.abs(draws - prior.component_mean(3)[:2])) < 1e-3

    def test_unconditioned_mixture_covers_components(self):
        rng = np.random.default_rng(4)
        prior = GenreRingPrior(latent_dim=2, num_components=4, radial_variance=1e-6, tangential_variance=1e-6)
        draws = prior.sample(400, rng)
        means = np.stack([prior.component_mean(i)[:2] for i in range(4)])
        nearest = np.argmin(((draws[:, None, :] - means[None]) ** 2).sum(-1), axis=1)
        counts = np.bincount(nearest, minlength=4)
        assert np.all(counts > 50)


class TestSerialization:
    def test_ring_round_trip(self):
        prior = GenreRingPrior(latent_dim=8, num_components=4, component_of_genre=(2, 0, 3, 1))
        again = prior_from_json(prior.to_json())
        assert again == prior

    def test_isotropic_round_trip(self):
        prior = IsotropicGaussianPrior(latent_dim=16)
        assert prior_from_json(prior.to_json()) == prior

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            prior_from_json({"kind": "swiss_roll"})
