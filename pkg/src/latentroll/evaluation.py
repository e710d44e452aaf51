"""Model analyses: reconstruction accuracy, latent interpolation with a
data-space Bernoulli baseline, low-level metric profiles per prior
component, and pairwise-genre PCA projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .model import AdversarialAutoencoder
from .pipeline import Dataset, GenreVocabulary
from .prior import GenreRingPrior
from .tokens import HOLD, NUM_TRACKS, SILENCE, TRACK_NAMES, track_notes

# Shipped metric list; bump when the definition changes so profile
# matrices stay comparable across runs.
METRICS_VERSION = 1
METRIC_NAMES = (
    "notes_count",
    "avg_note_length",
    "avg_pitch",
    "pitch_range",
    "avg_pitch_step",
    "silence_ratio",
    "hold_ratio",
    "unique_pitches",
)


# --- reconstruction accuracy -------------------------------------------------


@dataclass
class AccuracyTable:
    per_track: dict[str, float]
    mean_dbgs: float  # drums/bass/guitar/strings average
    mean_dbg: float  # drums/bass/guitar average

    def to_json(self) -> dict:
        return {"per_track": self.per_track, "mean_dbgs": self.mean_dbgs, "mean_dbg": self.mean_dbg}


def reconstruction_accuracy_table(
    model: AdversarialAutoencoder, tokens: np.ndarray, batch_size: int = 64
) -> AccuracyTable:
    """Per-track fraction of cells whose argmax reconstruction matches the
    input, under deterministic encoding."""
    if tokens.shape[0] == 0:
        raise ValueError("empty evaluation split")
    correct = np.zeros(NUM_TRACKS, dtype=np.int64)
    total = 0
    for start in range(0, tokens.shape[0], batch_size):
        batch = tokens[start : start + batch_size]
        decoded = model.reconstruct(torch.from_numpy(batch).long()).numpy()
        correct += (decoded == batch).sum(axis=(0, 1))
        total += batch.shape[0] * batch.shape[1]
    accuracy = correct / total
    per_track = {name: float(accuracy[i]) for i, name in enumerate(TRACK_NAMES)}
    return AccuracyTable(
        per_track=per_track,
        mean_dbgs=float(accuracy.mean()),
        mean_dbg=float(accuracy[:3].mean()),
    )


# --- interpolation -----------------------------------------------------------


def interpolate_latent(z1: np.ndarray, z2: np.ndarray, alpha: float) -> np.ndarray:
    """Convex combination (1-alpha)*z1 + alpha*z2; alpha is the progress
    away from the first endpoint."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    return (1.0 - alpha) * np.asarray(z1) + alpha * np.asarray(z2)


def normalized_hamming(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(a != b))


def bernoulli_baseline(
    x1: np.ndarray, x2: np.ndarray, alpha: float, rng: np.random.Generator
) -> np.ndarray:
    """Data-space interpolation: each cell flips to x2's token with
    probability alpha, independently."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    if x1.shape != x2.shape:
        raise ValueError(f"shape mismatch: {x1.shape} vs {x2.shape}")
    mask = rng.random(x1.shape) < alpha
    return np.where(mask, x2, x1)


def interpolation_curve(
    model: AdversarialAutoencoder,
    x1: np.ndarray,
    x2: np.ndarray,
    n_steps: int = 11,
    rng: np.random.Generator | None = None,
    batch_size: int = 64,
) -> dict:
    """Mean hamming distance to x1 of decoded interpolations on a uniform
    alpha grid, plus the Bernoulli data-space baseline when an rng is given.

    x1, x2: (pairs, timesteps, tracks) token grids of encoded sample pairs.
    """
    if x1.shape != x2.shape:
        raise ValueError(f"pair batches differ: {x1.shape} vs {x2.shape}")
    alphas = np.linspace(0.0, 1.0, n_steps)
    with torch.no_grad():
        z1 = _encode_array(model, x1, batch_size)
        z2 = _encode_array(model, x2, batch_size)
        latent_means = []
        for alpha in alphas:
            mixed = interpolate_latent(z1, z2, float(alpha))
            decoded = _decode_array(model, mixed, batch_size)
            latent_means.append(float(np.mean(decoded != x1)))
    curve = {
        "alphas": alphas.tolist(),
        "mean_hamming": latent_means,
        "pairs": int(x1.shape[0]),
        "mean_pair_hamming": float(np.mean(x1 != x2)),
    }
    if rng is not None:
        baseline = []
        for alpha in alphas:
            draws = [
                normalized_hamming(bernoulli_baseline(a, b, float(alpha), rng), a)
                for a, b in zip(x1, x2)
            ]
            baseline.append(float(np.mean(draws)))
        curve["bernoulli_mean_hamming"] = baseline
    return curve


def _encode_array(model: AdversarialAutoencoder, tokens: np.ndarray, batch_size: int) -> np.ndarray:
    outs = []
    for start in range(0, tokens.shape[0], batch_size):
        batch = torch.from_numpy(tokens[start : start + batch_size]).long()
        outs.append(model.encode(batch, stochastic=False).z.numpy())
    return np.concatenate(outs)


def _decode_array(model: AdversarialAutoencoder, z: np.ndarray, batch_size: int) -> np.ndarray:
    outs = []
    for start in range(0, z.shape[0], batch_size):
        batch = torch.from_numpy(z[start : start + batch_size]).to(model.dtype)
        outs.append(model.decode_tokens(batch).numpy())
    return np.concatenate(outs)


# --- low-level metrics -------------------------------------------------------


@dataclass
class TrackMetrics:
    notes_count: int
    avg_note_length: float | None
    avg_pitch: float | None
    pitch_range: int | None
    avg_pitch_step: float | None
    silence_ratio: float
    hold_ratio: float
    unique_pitches: int

    def as_array(self) -> np.ndarray:
        values = [getattr(self, name) for name in METRIC_NAMES]
        return np.array([np.nan if v is None else float(v) for v in values])


@dataclass
class SegmentMetrics:
    tracks: dict[str, TrackMetrics]
    aggregate: TrackMetrics


def _metrics_from_notes(
    notes: list[tuple[int, int, int]], steps_total: int, silence_cells: int, hold_cells: int
) -> TrackMetrics:
    pitches = [pitch for _, pitch, _ in notes]
    lengths = [length for _, _, length in notes]
    steps = [abs(b - a) for a, b in zip(pitches, pitches[1:])]
    return TrackMetrics(
        notes_count=len(notes),
        avg_note_length=float(np.mean(lengths)) if lengths else None,
        avg_pitch=float(np.mean(pitches)) if pitches else None,
        pitch_range=int(max(pitches) - min(pitches)) if pitches else None,
        avg_pitch_step=float(np.mean(steps)) if steps else None,
        silence_ratio=silence_cells / steps_total,
        hold_ratio=hold_cells / steps_total,
        unique_pitches=len(set(pitches)),
    )


def compute_metrics(tokens: np.ndarray) -> SegmentMetrics:
    """Low-level statistics per track plus a pooled aggregate.

    A note is an onset cell plus its trailing hold run; pitch steps are
    absolute differences between consecutive onsets within a track. Pitch
    statistics of an onset-free track are absent, not zero.
    """
    timesteps = tokens.shape[0]
    per_track: dict[str, TrackMetrics] = {}
    pooled_notes: list[tuple[int, int, int]] = []
    pooled_steps: list[float] = []
    pooled_silences = 0
    pooled_holds = 0
    for index, name in enumerate(TRACK_NAMES[: tokens.shape[1]]):
        column = tokens[:, index]
        notes = track_notes(column)
        silence_cells = int(np.sum(column == SILENCE))
        hold_cells = int(np.sum(column == HOLD))
        per_track[name] = _metrics_from_notes(notes, timesteps, silence_cells, hold_cells)
        pooled_notes.extend(notes)
        pitches = [p for _, p, _ in notes]
        pooled_steps.extend(abs(b - a) for a, b in zip(pitches, pitches[1:]))
        pooled_silences += silence_cells
        pooled_holds += hold_cells
    cells_total = timesteps * tokens.shape[1]
    pitches = [p for _, p, _ in pooled_notes]
    lengths = [length for _, _, length in pooled_notes]
    aggregate = TrackMetrics(
        notes_count=len(pooled_notes),
        avg_note_length=float(np.mean(lengths)) if lengths else None,
        avg_pitch=float(np.mean(pitches)) if pitches else None,
        pitch_range=int(max(pitches) - min(pitches)) if pitches else None,
        avg_pitch_step=float(np.mean(pooled_steps)) if pooled_steps else None,
        silence_ratio=pooled_silences / cells_total,
        hold_ratio=pooled_holds / cells_total,
        unique_pitches=len(set(pitches)),
    )
    return SegmentMetrics(tracks=per_track, aggregate=aggregate)


# --- per-component metric profile --------------------------------------------


@dataclass
class GenreProfile:
    relative_change: np.ndarray  # (components, metrics); nan where undefined
    metric_names: tuple[str, ...] = METRIC_NAMES
    version: int = METRICS_VERSION

    def to_json(self) -> dict:
        matrix = [[None if not math.isfinite(v) else v for v in row] for row in self.relative_change.tolist()]
        return {"relative_change": matrix, "metric_names": list(self.metric_names), "version": self.version}


def genre_metric_profile(
    model: AdversarialAutoencoder,
    prior: GenreRingPrior,
    samples_per_component: int = 256,
    rng: np.random.Generator | None = None,
    batch_size: int = 64,
) -> GenreProfile:
    """Relative change of each aggregate metric, per mixture component,
    against the global mean over all decoded draws."""
    rng = rng if rng is not None else np.random.default_rng(0)
    all_rows: list[np.ndarray] = []
    local_means = []
    with torch.no_grad():
        for component in range(prior.num_components):
            draws = prior.sample_component(component, samples_per_component, rng)
            decoded = _decode_array(model, draws, batch_size)
            rows = np.stack([compute_metrics(grid).aggregate.as_array() for grid in decoded])
            all_rows.append(rows)
            with np.errstate(invalid="ignore"):
                local_means.append(np.nanmean(rows, axis=0))
    with np.errstate(invalid="ignore"):
        global_mean = np.nanmean(np.concatenate(all_rows), axis=0)
    profile = np.full((prior.num_components, len(METRIC_NAMES)), np.nan)
    for i, local in enumerate(local_means):
        with np.errstate(invalid="ignore", divide="ignore"):
            profile[i] = np.where(global_mean != 0, (local - global_mean) / global_mean, np.nan)
    return GenreProfile(relative_change=profile)


# --- pairwise-genre PCA ------------------------------------------------------


@dataclass
class PcaProjection:
    points: np.ndarray  # (2n, 2)
    labels: list[str]  # genre tag per point
    explained_variance: np.ndarray  # top-2 singular values squared / (count-1)

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "labels": self.labels,
            "explained_variance": self.explained_variance.tolist(),
        }


def _resolve_genre(vocab: GenreVocabulary, genre: int | str) -> int:
    if isinstance(genre, str):
        if genre not in vocab.tags:
            raise ValueError(f"unknown genre tag {genre!r}")
        return vocab.tags.index(genre)
    if not 0 <= genre < len(vocab):
        raise ValueError(f"genre id {genre} outside [0, {len(vocab)})")
    return genre


def pca_genre_projection(
    model: AdversarialAutoencoder,
    dataset: Dataset,
    genre_a: int | str,
    genre_b: int | str,
    n_per_genre: int = 128,
    rng: np.random.Generator | None = None,
    split: str = "train",
    batch_size: int = 64,
) -> PcaProjection:
    """Project exclusively-tagged segments of two genres onto the top two
    principal directions of their combined latent codes."""
    rng = rng if rng is not None else np.random.default_rng(0)
    vocab = dataset.vocab
    id_a = _resolve_genre(vocab, genre_a)
    id_b = _resolve_genre(vocab, genre_b)
    data = dataset.split(split)
    only_a = [i for i, ids in enumerate(data.genre_ids) if id_a in ids and id_b not in ids]
    only_b = [i for i, ids in enumerate(data.genre_ids) if id_b in ids and id_a not in ids]
    if len(only_a) < n_per_genre or len(only_b) < n_per_genre:
        raise ValueError(
            f"need {n_per_genre} exclusive segments per genre, have "
            f"{len(only_a)} for {vocab.tags[id_a]!r} and {len(only_b)} for {vocab.tags[id_b]!r}"
        )
    pick_a = rng.choice(len(only_a), size=n_per_genre, replace=False)
    pick_b = rng.choice(len(only_b), size=n_per_genre, replace=False)
    chosen = [only_a[i] for i in sorted(pick_a)] + [only_b[i] for i in sorted(pick_b)]
    tokens = data.tokens[chosen]
    with torch.no_grad():
        codes = _encode_array(model, tokens, batch_size)
    centered = codes - codes.mean(axis=0, keepdims=True)
    _, singular, rows = np.linalg.svd(centered, full_matrices=False)
    points = centered @ rows[:2].T
    labels = [vocab.tags[id_a]] * n_per_genre + [vocab.tags[id_b]] * n_per_genre
    variance = (singular[:2] ** 2) / max(1, codes.shape[0] - 1)
    return PcaProjection(points=points, labels=labels, explained_variance=variance)
