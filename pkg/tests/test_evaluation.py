"""Evaluation oracles: hamming metric, interpolation identities, Bernoulli
baseline statistics, metric fixtures, profiles, and PCA."""

import math

import numpy as np
import pytest
import torch

from latentroll.evaluation import (
    AccuracyTable,
    bernoulli_baseline,
    compute_metrics,
    genre_metric_profile,
    interpolate_latent,
    interpolation_curve,
    normalized_hamming,
    pca_genre_projection,
    reconstruction_accuracy_table,
)
from latentroll.model import ModelConfig, build_model
from latentroll.pipeline import Dataset, DatasetSplit, GenreVocabulary
from latentroll.prior import GenreRingPrior
from latentroll.synthetic import random_segments
from latentroll.tokens import HOLD, SILENCE


class TestNormalizedHamming:
    def test_identical_is_zero(self, rng):
        a = random_segments(1, rng)[0]
        assert normalized_hamming(a, a) == 0.0

    def test_all_cells_differ(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        b = np.ones((4, 4), dtype=np.uint8)
        assert normalized_hamming(a, b) == 1.0

    def test_half_differ(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        b = a.copy()
        b[:2] = 7
        assert normalized_hamming(a, b) == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            normalized_hamming(np.zeros((4, 4)), np.zeros((8, 4)))

    def test_metric_properties(self, rng):
        # symmetry, identity of indiscernibles, triangle inequality
        for _ in range(100):
            a, b, c = (rng.integers(0, 3, size=(4, 2)) for _ in range(3))
            hab = normalized_hamming(a, b)
            hba = normalized_hamming(b, a)
            assert hab == hba
            assert (hab == 0.0) == bool(np.array_equal(a, b))
            assert hab <= normalized_hamming(a, c) + normalized_hamming(c, b) + 1e-12


class TestInterpolateLatent:
    def test_endpoints_and_midpoint(self):
        z1 = np.array([1.0, 0.0, 2.0])
        z2 = np.array([3.0, 4.0, -2.0])
        assert np.array_equal(interpolate_latent(z1, z2, 0.0), z1)
        assert np.array_equal(interpolate_latent(z1, z2, 1.0), z2)
        assert np.array_equal(interpolate_latent(z1, z2, 0.5), np.array([2.0, 2.0, 0.0]))

    def test_alpha_out_of_range(self):
        z = np.zeros(4)
        with pytest.raises(ValueError):
            interpolate_latent(z, z, -0.1)
        with pytest.raises(ValueError):
            interpolate_latent(z, z, 1.5)


class TestBernoulliBaseline:
    def test_alpha_zero_returns_first(self, rng):
        x1, x2 = random_segments(2, rng)
        assert np.array_equal(bernoulli_baseline(x1, x2, 0.0, rng), x1)

    def test_alpha_one_returns_second(self, rng):
        x1, x2 = random_segments(2, rng)
        assert np.array_equal(bernoulli_baseline(x1, x2, 1.0, rng), x2)

    def test_expected_hamming_linear(self, rng):
        # 40 cells differing in 16 -> h(x1,x2)=0.4; E[h(out,x1)] = alpha * 0.4
        x1 = np.zeros((10, 4), dtype=np.uint8)
        x2 = x1.copy()
        x2[:4] = 9
        assert normalized_hamming(x1, x2) == pytest.approx(0.4)
        trials = 256
        alpha = 0.5
        draws = [normalized_hamming(bernoulli_baseline(x1, x2, alpha, rng), x1) for _ in range(trials)]
        expected = alpha * 0.4
        stderr = math.sqrt(16 * alpha * (1 - alpha)) / 40 / math.sqrt(trials)
        assert abs(np.mean(draws) - expected) < 3 * stderr


class TestAccuracyTable:
    def test_perfect_copier_scores_one(self, rng, tiny_model, monkeypatch):
        tokens = random_segments(6, rng)
        monkeypatch.setattr(
            tiny_model.__class__, "reconstruct", lambda self, t: t.to(torch.uint8), raising=True
        )
        table = reconstruction_accuracy_table(tiny_model, tokens)
        assert table.per_track == {"drums": 1.0, "bass": 1.0, "guitar": 1.0, "strings": 1.0}
        assert table.mean_dbgs == 1.0
        assert table.mean_dbg == 1.0

    def test_untrained_model_scores_low(self, rng, tiny_model):
        tokens = random_segments(8, rng)
        table = reconstruction_accuracy_table(tiny_model, tokens)
        for value in table.per_track.values():
            assert 0.0 <= value <= 1.0
        assert table.mean_dbg == pytest.approx(
            np.mean([table.per_track[t] for t in ("drums", "bass", "guitar")])
        )

    def test_empty_split_rejected(self, tiny_model):
        with pytest.raises(ValueError):
            reconstruction_accuracy_table(tiny_model, np.zeros((0, 32, 4), dtype=np.uint8))


class TestInterpolationCurve:
    def test_endpoint_identities(self, rng, tiny_model):
        x1 = random_segments(4, rng)
        x2 = random_segments(4, rng)
        curve = interpolation_curve(tiny_model, x1, x2, n_steps=5)
        with torch.no_grad():
            recon1 = tiny_model.reconstruct(torch.from_numpy(x1).long()).numpy()
            recon2 = tiny_model.reconstruct(torch.from_numpy(x2).long()).numpy()
        assert curve["mean_hamming"][0] == pytest.approx(float(np.mean(recon1 != x1)), abs=1e-12)
        assert curve["mean_hamming"][-1] == pytest.approx(float(np.mean(recon2 != x1)), abs=1e-12)

    def test_bernoulli_channel_present_with_rng(self, rng, tiny_model):
        x1 = random_segments(3, rng)
        x2 = random_segments(3, rng)
        curve = interpolation_curve(tiny_model, x1, x2, n_steps=3, rng=rng)
        assert curve["bernoulli_mean_hamming"][0] == 0.0
        assert curve["bernoulli_mean_hamming"][-1] == pytest.approx(curve["mean_pair_hamming"])

    def test_pair_shape_mismatch(self, rng, tiny_model):
        with pytest.raises(ValueError):
            interpolation_curve(tiny_model, random_segments(2, rng), random_segments(3, rng))


def track_column(values, timesteps=16):
    column = np.full(timesteps, SILENCE, dtype=np.uint8)
    column[: len(values)] = values
    return column


class TestComputeMetrics:
    def _segment_with_track(self, values, timesteps=16):
        grid = np.full((timesteps, 4), SILENCE, dtype=np.uint8)
        grid[: len(values), 0] = values
        return grid

    def test_two_note_example(self):
        grid = self._segment_with_track([60, HOLD, HOLD, SILENCE, 62, HOLD])
        m = compute_metrics(grid).tracks["drums"]
        assert m.notes_count == 2
        assert m.avg_note_length == pytest.approx(2.5)
        assert m.avg_pitch == pytest.approx(61.0)
        assert m.avg_pitch_step == pytest.approx(2.0)
        assert m.pitch_range == 2
        assert m.unique_pitches == 2
        assert m.hold_ratio == pytest.approx(3 / 16)
        assert m.silence_ratio == pytest.approx(11 / 16)

    def test_all_silence_track(self):
        grid = np.full((16, 4), SILENCE, dtype=np.uint8)
        m = compute_metrics(grid).tracks["bass"]
        assert m.notes_count == 0
        assert m.silence_ratio == 1.0
        assert m.avg_pitch is None
        assert m.avg_note_length is None
        assert m.pitch_range is None
        assert m.avg_pitch_step is None

    def test_distinct_onset_wall(self):
        grid = np.full((32, 4), SILENCE, dtype=np.uint8)
        grid[:, 2] = np.arange(40, 72, dtype=np.uint8)
        m = compute_metrics(grid).tracks["guitar"]
        assert m.notes_count == 32
        assert m.hold_ratio == 0.0
        assert m.avg_note_length == 1.0
        assert m.unique_pitches == 32

    def test_single_note_has_no_pitch_step(self):
        grid = self._segment_with_track([60])
        m = compute_metrics(grid).tracks["drums"]
        assert m.avg_pitch_step is None
        assert m.pitch_range == 0

    def test_conservation_identity(self, rng):
        for _ in range(1000):
            grid = random_segments(1, rng)[0]
            metrics = compute_metrics(grid)
            for track in metrics.tracks.values():
                total = track.silence_ratio + track.hold_ratio + track.notes_count / 32
                assert total == pytest.approx(1.0, abs=1e-12)
            agg = metrics.aggregate
            assert agg.silence_ratio + agg.hold_ratio + agg.notes_count / 128 == pytest.approx(1.0, abs=1e-12)

    def test_aggregate_pools_tracks(self):
        grid = np.full((16, 4), SILENCE, dtype=np.uint8)
        grid[0, 0] = 40
        grid[0, 1] = 50
        agg = compute_metrics(grid).aggregate
        assert agg.notes_count == 2
        assert agg.avg_pitch == pytest.approx(45.0)
        assert agg.pitch_range == 10
        # pitch steps never cross track boundaries
        assert agg.avg_pitch_step is None


class TestGenreProfile:
    def test_constant_decoder_gives_zero_profile(self, rng, tiny_model, monkeypatch):
        fixed = torch.from_numpy(random_segments(1, rng)[0]).to(torch.uint8)
        monkeypatch.setattr(
            tiny_model.__class__,
            "decode_tokens",
            lambda self, z: fixed.unsqueeze(0).expand(z.shape[0], -1, -1),
            raising=True,
        )
        prior = GenreRingPrior(latent_dim=tiny_model.config.latent_dim, num_components=4)
        profile = genre_metric_profile(tiny_model, prior, samples_per_component=8, rng=rng)
        assert profile.relative_change.shape == (4, 8)
        finite = np.isfinite(profile.relative_change)
        assert np.all(np.abs(profile.relative_change[finite]) < 1e-12)

    def test_row_per_component(self, rng, tiny_model):
        prior = GenreRingPrior(latent_dim=tiny_model.config.latent_dim, num_components=3)
        profile = genre_metric_profile(tiny_model, prior, samples_per_component=4, rng=rng)
        assert profile.relative_change.shape[0] == 3
        assert profile.version == 1


def _pca_dataset(rng, per_genre=16, mirror=False):
    tokens_a = random_segments(per_genre, rng)
    tokens_b = tokens_a.copy() if mirror else random_segments(per_genre, rng)
    tokens = np.concatenate([tokens_a, tokens_b])
    genre_ids = [(0,)] * per_genre + [(1,)] * per_genre
    vocab = GenreVocabulary(tags=["rock", "punk"], component_of=[0, 1])
    split = DatasetSplit(
        tokens=tokens, song_ids=[f"s{i}" for i in range(2 * per_genre)], genre_ids=genre_ids
    )
    empty = DatasetSplit(
        tokens=np.zeros((0, 32, 4), dtype=np.uint8), song_ids=[], genre_ids=[]
    )
    return Dataset(train=split, validation=empty, vocab=vocab, bars=2, seed=0)


class TestPcaProjection:
    def test_variance_ordering(self, rng, tiny_model):
        dataset = _pca_dataset(rng)
        projection = pca_genre_projection(tiny_model, dataset, "rock", "punk", n_per_genre=8, rng=rng)
        assert projection.points.shape == (16, 2)
        assert projection.explained_variance[0] >= projection.explained_variance[1]
        assert np.var(projection.points[:, 0]) >= np.var(projection.points[:, 1]) - 1e-12

    def test_insufficient_segments_error_lists_counts(self, rng, tiny_model):
        dataset = _pca_dataset(rng, per_genre=4)
        with pytest.raises(ValueError, match="have 4"):
            pca_genre_projection(tiny_model, dataset, "rock", "punk", n_per_genre=128)

    def test_unknown_genre(self, rng, tiny_model):
        dataset = _pca_dataset(rng)
        with pytest.raises(ValueError, match="unknown genre"):
            pca_genre_projection(tiny_model, dataset, "rock", "zydeco", n_per_genre=4)

    def test_identical_clouds_have_coincident_means(self, rng, tiny_model):
        dataset = _pca_dataset(rng, mirror=True)
        projection = pca_genre_projection(tiny_model, dataset, "rock", "punk", n_per_genre=16, rng=rng)
        labels = np.array(projection.labels)
        mean_a = projection.points[labels == "rock"].mean(axis=0)
        mean_b = projection.points[labels == "punk"].mean(axis=0)
        assert np.allclose(mean_a, mean_b, atol=1e-8)

    def test_full_rank_projection_lossless(self, rng, tiny_model):
        # with all principal components kept, PCA is just a rotation
        codes = rng.standard_normal((12, 6))
        centered = codes - codes.mean(axis=0)
        _, _, rows = np.linalg.svd(centered, full_matrices=False)
        recovered = centered @ rows.T @ rows
        assert np.allclose(recovered, centered, atol=1e-10)
