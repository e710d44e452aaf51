"""Synthetic songs, corpora, and segments for demos and tests.

Generated songs follow the conventions the pipeline filters for (single
4/4 signature, drums on channel 10, bass/guitar/strings programs) with
enough per-track activity that most extracted windows survive the silence
filter.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .smf import Note, SongIR, TimeSignature, TrackIR, write_smf
from .tokens import DRUM_CHANNEL, HOLD, SILENCE, STEPS_PER_BAR, NUM_TRACKS, empty_grid

TAG_POOL = (
    "rock", "pop", "punk", "jazz", "blues", "metal", "folk", "country",
    "funk", "soul", "disco", "house", "techno", "ambient", "classical",
    "reggae", "ska", "latin", "salsa", "tango", "swing", "gospel",
    "grunge", "indie", "emo", "rnb", "rap", "trance", "dub", "bluegrass",
    "celtic", "chanson", "bossa", "opera", "march", "waltz",
)

_PITCH_RANGES = {
    "drums": (35, 59),
    "bass": (28, 52),
    "guitar": (40, 76),
    "strings": (48, 84),
}


def random_segment(rng: np.random.Generator, bars: int = 2) -> np.ndarray:
    """A valid token grid: every track alternates notes, holds, and gaps
    of at most half a bar, so the segment passes the silence filter."""
    steps = bars * STEPS_PER_BAR
    grid = empty_grid(steps)
    for track, name in enumerate(_PITCH_RANGES):
        low, high = _PITCH_RANGES[name]
        step = int(rng.integers(0, 4))
        while step < steps:
            pitch = int(rng.integers(low, high + 1))
            length = int(rng.integers(1, 5))
            grid[step, track] = pitch
            for k in range(1, length):
                if step + k >= steps:
                    break
                grid[step + k, track] = HOLD
            step += length + int(rng.integers(0, 8))
    return grid


def random_segments(count: int, rng: np.random.Generator, bars: int = 2) -> np.ndarray:
    """Stack of `count` distinct random segments."""
    seen: set[bytes] = set()
    out: list[np.ndarray] = []
    while len(out) < count:
        seg = random_segment(rng, bars)
        key = seg.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(seg)
    return np.stack(out)


def capacity_segment(rng: np.random.Generator, bars: int = 2) -> np.ndarray:
    """Minimal-entropy segment for capacity experiments: each track plays
    one pitch on every other cell. Reconstructing one requires routing the
    four pitch identities through the latent code; the rhythmic lattice
    alone caps accuracy near 0.5."""
    steps = bars * STEPS_PER_BAR
    grid = empty_grid(steps)
    for track, (low, high) in enumerate(_PITCH_RANGES.values()):
        pitch = int(rng.integers(low, high + 1))
        grid[range(0, steps, 2), track] = pitch
    return grid


def capacity_segments(count: int, rng: np.random.Generator, bars: int = 2) -> np.ndarray:
    seen: set[bytes] = set()
    out: list[np.ndarray] = []
    while len(out) < count:
        seg = capacity_segment(rng, bars)
        key = seg.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(seg)
    return np.stack(out)


def _pattern_notes(
    rng: np.random.Generator,
    n_bars: int,
    ticks_per_quarter: int,
    pitch_range: tuple[int, int],
    cells_between: tuple[int, int],
    length_cells: tuple[int, int],
) -> list[Note]:
    cell = ticks_per_quarter // 4
    total_cells = n_bars * STEPS_PER_BAR
    notes = []
    position = int(rng.integers(0, 3))
    while position < total_cells:
        pitch = int(rng.integers(pitch_range[0], pitch_range[1] + 1))
        length = int(rng.integers(length_cells[0], length_cells[1] + 1))
        length = min(length, total_cells - position)
        notes.append(Note(tick=position * cell, pitch=pitch, duration=length * cell))
        position += length + int(rng.integers(cells_between[0], cells_between[1] + 1))
    return notes


def make_song(rng: np.random.Generator, song_id: str, n_bars: int = 4, ticks_per_quarter: int = 480) -> SongIR:
    """One synthetic four-instrument song that passes every filter."""
    tracks = [
        TrackIR(
            channel=DRUM_CHANNEL,
            program=0,
            notes=_pattern_notes(rng, n_bars, ticks_per_quarter, _PITCH_RANGES["drums"], (0, 2), (1, 2)),
        ),
        TrackIR(
            channel=0,
            program=33,
            notes=_pattern_notes(rng, n_bars, ticks_per_quarter, _PITCH_RANGES["bass"], (0, 3), (1, 4)),
        ),
        TrackIR(
            channel=1,
            program=25,
            notes=_pattern_notes(rng, n_bars, ticks_per_quarter, _PITCH_RANGES["guitar"], (0, 3), (1, 3)),
        ),
        TrackIR(
            channel=2,
            program=48,
            notes=_pattern_notes(rng, n_bars, ticks_per_quarter, _PITCH_RANGES["strings"], (0, 2), (2, 6)),
        ),
    ]
    return SongIR(
        tracks=tracks,
        time_signatures=[TimeSignature(0, 4, 4)],
        ticks_per_quarter=ticks_per_quarter,
        song_id=song_id,
    )


def write_demo_corpus(
    out_dir: str | Path,
    n_songs: int = 60,
    seed: int = 0,
    n_bars: tuple[int, int] = (4, 8),
) -> Path:
    """Write a corpus of synthetic MIDI files plus genre metadata.

    Tags are drawn with a skewed distribution so a frequency-ranked
    vocabulary is well defined. Returns the metadata path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    weights = np.array([1.0 / (1 + i) for i in range(len(TAG_POOL))])
    weights /= weights.sum()
    metadata = {}
    for index in range(n_songs):
        song_id = f"song{index:04d}"
        bars = int(rng.integers(n_bars[0], n_bars[1] + 1))
        song = make_song(rng, song_id, n_bars=bars)
        (out_dir / f"{song_id}.mid").write_bytes(write_smf(song))
        n_tags = int(rng.integers(1, 4))
        tags = {TAG_POOL[t] for t in rng.choice(len(TAG_POOL), size=n_tags, replace=False, p=weights)}
        # guarantee the 32 head tags all occur so the default vocabulary exists
        tags.add(TAG_POOL[index % 32])
        metadata[song_id] = sorted(tags)
    metadata_path = out_dir / "metadata.json"
    metadata_path.write_text(json.dumps(metadata, indent=1, sort_keys=True))
    return metadata_path
