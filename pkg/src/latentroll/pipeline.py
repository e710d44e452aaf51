"""MIDI corpus preprocessing: filter, quantize, window, augment, persist.

Songs are parsed from SMF, reduced to a four-track monophonic token grid
(drums, bass, guitar, strings), cut into fixed-length bar windows, and
written out as dataset shards with genre metadata.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .smf import MidiParseError, Note, SongIR, TimeSignature, TrackIR, parse_midi, write_smf
from .tokens import (
    DRUM_CHANNEL,
    HOLD,
    MAX_PITCH,
    NUM_TRACKS,
    SILENCE,
    STEPS_PER_BAR,
    STEPS_PER_QUARTER,
    TRACK_NAMES,
    track_notes,
)

log = logging.getLogger(__name__)

BASS_PROGRAMS = range(32, 40)
GUITAR_PROGRAMS = range(0, 32)

TRANSPOSE_CHOICES = tuple(range(-5, 7))
MAX_TRANSPOSE_DRAWS = 12

DEFAULT_VOCAB_SIZE = 32
DEFAULT_PROGRAMS = {"drums": 0, "bass": 33, "guitar": 25, "strings": 48}
EXPORT_CHANNELS = {"drums": DRUM_CHANNEL, "bass": 0, "guitar": 1, "strings": 2}

SHARD_FORMAT_VERSION = 1


@dataclass
class Segment:
    """One fixed-length window of the token grid, with provenance."""

    tokens: np.ndarray  # (timesteps, NUM_TRACKS) uint8
    song_id: str
    genre_ids: tuple[int, ...] = ()


class TrackAssignment(NamedTuple):
    """Indices into SongIR.tracks per role; each role merges its listed tracks."""

    drums: tuple[int, ...]
    bass: tuple[int, ...]
    guitar: tuple[int, ...]
    strings: tuple[int, ...]


@dataclass
class GenreVocabulary:
    """The retained genre tags. Index in `tags` is the genre id;
    `component_of[id]` is the mixture component the genre maps to."""

    tags: list[str]
    component_of: list[int]

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("genre tags must be distinct")
        if sorted(self.component_of) != list(range(len(self.tags))):
            raise ValueError("component_of must be a permutation of genre ids")
        self._id_of = {tag: i for i, tag in enumerate(self.tags)}

    def __len__(self) -> int:
        return len(self.tags)

    def ids_for(self, tags: Iterable[str]) -> tuple[int, ...]:
        return tuple(sorted({self._id_of[t] for t in tags if t in self._id_of}))

    def to_json(self) -> dict:
        return {"tags": list(self.tags), "component_of": list(self.component_of)}

    @classmethod
    def from_json(cls, data: dict) -> "GenreVocabulary":
        return cls(tags=list(data["tags"]), component_of=list(data["component_of"]))


# --- song-level predicates and reductions -----------------------------------


def filter_song(song: SongIR) -> tuple[bool, str | None]:
    """Accept a song iff it has a single 4/4 time signature and at least
    one non-empty drums, bass, and guitar/piano track."""
    if len(song.time_signatures) == 0:
        return False, "no time signature"
    if len(song.time_signatures) > 1:
        return False, "multiple time signatures"
    ts = song.time_signatures[0]
    if (ts.numerator, ts.denominator) != (4, 4):
        return False, "time signature not 4/4"
    if not _role_candidates(song, "drums"):
        return False, "no drums"
    if not _role_candidates(song, "bass"):
        return False, "no bass"
    if not _role_candidates(song, "guitar"):
        return False, "no guitar"
    return True, None


def _role_candidates(song: SongIR, role: str) -> list[int]:
    out = []
    for i, track in enumerate(song.tracks):
        if not track.notes:
            continue
        if role == "drums":
            if track.channel == DRUM_CHANNEL:
                out.append(i)
        elif track.channel == DRUM_CHANNEL:
            continue
        elif role == "bass" and track.program in BASS_PROGRAMS:
            out.append(i)
        elif role == "guitar" and track.program in GUITAR_PROGRAMS:
            out.append(i)
    return out


def classify_tracks(song: SongIR) -> list[TrackAssignment]:
    """Every (drums, bass, guitar) combination; whatever fits none of the
    three roles is merged into a shared strings track (possibly empty)."""
    drums = _role_candidates(song, "drums")
    bass = _role_candidates(song, "bass")
    guitar = _role_candidates(song, "guitar")
    strings = tuple(
        i
        for i, track in enumerate(song.tracks)
        if track.notes and track.channel != DRUM_CHANNEL and track.program not in BASS_PROGRAMS and track.program not in GUITAR_PROGRAMS
    )
    return [
        TrackAssignment(drums=(d,), bass=(b,), guitar=(g,), strings=strings)
        for d, b, g in product(drums, bass, guitar)
    ]


def merged_role_assignment(song: SongIR) -> TrackAssignment:
    """Single assignment merging all candidates per role (used to re-grid
    exported files, where each role has exactly one track)."""
    return TrackAssignment(
        drums=tuple(_role_candidates(song, "drums")),
        bass=tuple(_role_candidates(song, "bass")),
        guitar=tuple(_role_candidates(song, "guitar")),
        strings=tuple(
            i
            for i, track in enumerate(song.tracks)
            if track.channel != DRUM_CHANNEL
            and track.program not in BASS_PROGRAMS
            and track.program not in GUITAR_PROGRAMS
        ),
    )


def song_bars(song: SongIR) -> int:
    """Number of 4/4 bars needed to cover every note, at least 1."""
    end = 0
    for track in song.tracks:
        for note in track.notes:
            end = max(end, note.tick + note.duration)
    ticks_per_bar = song.ticks_per_quarter * 4
    return max(1, -(-end // ticks_per_bar))


def quantize_track(notes: Sequence[Note], ticks_per_quarter: int, n_bars: int) -> np.ndarray:
    """Sample note events onto a monophonic grid of 16 cells per bar.

    A cell with one or more onsets emits the lowest onsetting pitch and
    the grid then follows that note: holds while it sustains, silence
    after it ends. Onsets always displace a sounding note.
    """
    steps = STEPS_PER_BAR * n_bars
    tokens = np.full(steps, SILENCE, dtype=np.uint8)
    # per cell: lowest onsetting pitch and, for equal pitches, the farthest end
    onsets: dict[int, tuple[int, int]] = {}
    for note in notes:
        start = note.tick * STEPS_PER_QUARTER // ticks_per_quarter
        if start >= steps:
            continue
        end_tick = note.tick + note.duration
        end = -(-end_tick * STEPS_PER_QUARTER // ticks_per_quarter)
        end = max(start + 1, end)
        current = onsets.get(start)
        if current is None or (note.pitch, -end) < (current[0], -current[1]):
            onsets[start] = (note.pitch, end)
    sounding_until = 0
    for step in range(steps):
        onset = onsets.get(step)
        if onset is not None:
            tokens[step] = onset[0]
            sounding_until = onset[1]
        elif step < sounding_until:
            tokens[step] = HOLD
    return tokens


def song_to_grid(song: SongIR, assignment: TrackAssignment, n_bars: int | None = None) -> np.ndarray:
    """Quantize one track assignment into a (16*n_bars, 4) token grid."""
    if n_bars is None:
        n_bars = song_bars(song)
    columns = []
    for role_indices in assignment:
        merged = sorted(
            note for i in role_indices for note in song.tracks[i].notes
        )
        columns.append(quantize_track(merged, song.ticks_per_quarter, n_bars))
    return np.stack(columns, axis=1)


def _promote_boundary_holds(chunk: np.ndarray, pianoroll: np.ndarray, offset: int) -> None:
    """A window cutting into a sustained note starts with hold tokens; turn
    the first one into an onset of the sounding pitch (found by scanning
    back), keeping the segment invariant intact without dropping the note."""
    for t in range(chunk.shape[1]):
        if chunk[0, t] != HOLD:
            continue
        pitch = SILENCE
        for step in range(offset - 1, -1, -1):
            token = pianoroll[step, t]
            if token != HOLD:
                pitch = token if token <= MAX_PITCH else SILENCE
                break
        chunk[0, t] = pitch


def extract_windows(pianoroll: np.ndarray, window_bars: int, stride_bars: int = 1, dedup: bool = True) -> list[np.ndarray]:
    """Slide a window_bars-long window over the grid; drop exact repeats."""
    window = window_bars * STEPS_PER_BAR
    stride = stride_bars * STEPS_PER_BAR
    total = pianoroll.shape[0]
    out: list[np.ndarray] = []
    seen: set[bytes] = set()
    for offset in range(0, total - window + 1, stride):
        chunk = np.ascontiguousarray(pianoroll[offset : offset + window])
        _promote_boundary_holds(chunk, pianoroll, offset)
        if dedup:
            key = chunk.tobytes()
            if key in seen:
                continue
            seen.add(key)
        out.append(chunk)
    return out


def longest_silence_run(track: np.ndarray) -> int:
    best = run = 0
    for token in track:
        run = run + 1 if token == SILENCE else 0
        best = max(best, run)
    return best


def silence_admissible(tokens: np.ndarray) -> bool:
    """True iff every track has at most one bar of consecutive silence."""
    return all(longest_silence_run(tokens[:, t]) <= STEPS_PER_BAR for t in range(tokens.shape[1]))


def transpose_valid(tokens: np.ndarray, semitones: int) -> bool:
    melodic = tokens[:, 1:]
    pitches = melodic[melodic <= MAX_PITCH].astype(np.int16)
    if pitches.size == 0:
        return True
    return bool(pitches.min() + semitones >= 0 and pitches.max() + semitones <= MAX_PITCH)


def transpose(tokens: np.ndarray, semitones: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Shift melodic pitches by `semitones`; drums, holds, silences stay put.

    A shift that would push a pitch outside [0, 127] is redrawn from
    [-5, 6] (up to 12 draws when an rng is supplied), falling back to 0.
    """
    if not transpose_valid(tokens, semitones):
        semitones = 0
        if rng is not None:
            for _ in range(MAX_TRANSPOSE_DRAWS):
                candidate = int(rng.choice(TRANSPOSE_CHOICES))
                if transpose_valid(tokens, candidate):
                    semitones = candidate
                    break
    out = tokens.astype(np.int16)
    melodic = out[:, 1:]
    mask = melodic <= MAX_PITCH
    melodic[mask] += semitones
    out[:, 1:] = melodic
    return out.astype(np.uint8)


# --- genre vocabulary --------------------------------------------------------


def build_genre_vocabulary(
    metadata: Mapping[str, Sequence[str]],
    size: int = DEFAULT_VOCAB_SIZE,
    circle_order: Sequence[str] | None = None,
) -> GenreVocabulary:
    """Keep the `size` most frequent tags (ties broken lexicographically).

    `circle_order`, when given, lists the kept tags in the order they
    should sit around the prior's ring; by default ring position follows
    frequency rank.
    """
    counts: Counter[str] = Counter()
    for tags in metadata.values():
        counts.update(set(tags))
    if len(counts) < size:
        raise ValueError(f"need at least {size} distinct genre tags, found {len(counts)}")
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    tags = [tag for tag, _ in ranked[:size]]
    if circle_order is None:
        component_of = list(range(size))
    else:
        if sorted(circle_order) != sorted(tags):
            raise ValueError("circle_order must be a permutation of the selected tags")
        position = {tag: i for i, tag in enumerate(circle_order)}
        component_of = [position[tag] for tag in tags]
    return GenreVocabulary(tags=tags, component_of=component_of)


# --- dataset build -----------------------------------------------------------


@dataclass
class PreprocessConfig:
    bars: int = 2
    stride_bars: int = 1
    augment: str = "sampled"  # "sampled" draws one transposition per segment; "none" keeps originals
    seed: int = 0
    validation_fraction: float = 0.2
    vocab_size: int = DEFAULT_VOCAB_SIZE
    circle_order: list[str] | None = None
    workers: int = 1


def _song_rng(seed: int, song_id: str) -> np.random.Generator:
    digest = hashlib.sha256(song_id.encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "big")])


def _process_song(args: tuple[str, bytes, tuple[int, ...], PreprocessConfig]) -> tuple[str, list[Segment], dict]:
    song_id, data, genre_ids, config = args
    report = {"rejected": None, "assignments": 0, "windows": 0, "silence_dropped": 0, "segments": 0}
    try:
        song = parse_midi(data, song_id=song_id)
    except MidiParseError as err:
        log.warning("skipping %s: %s", song_id, err)
        report["rejected"] = "parse error"
        return song_id, [], report
    accepted, reason = filter_song(song)
    if not accepted:
        report["rejected"] = reason
        return song_id, [], report

    assignments = classify_tracks(song)
    report["assignments"] = len(assignments)
    n_bars = song_bars(song)
    seen: set[bytes] = set()
    windows: list[np.ndarray] = []
    if n_bars >= config.bars:
        for assignment in assignments:
            grid = song_to_grid(song, assignment, n_bars)
            for window in extract_windows(grid, config.bars, config.stride_bars, dedup=False):
                key = window.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                windows.append(window)
    report["windows"] = len(windows)

    kept = [w for w in windows if silence_admissible(w)]
    report["silence_dropped"] = len(windows) - len(kept)

    if config.augment == "sampled":
        rng = _song_rng(config.seed, song_id)
        kept = [transpose(w, int(rng.choice(TRANSPOSE_CHOICES)), rng) for w in kept]
    report["segments"] = len(kept)
    segments = [Segment(tokens=w, song_id=song_id, genre_ids=genre_ids) for w in kept]
    return song_id, segments, report


def build_dataset(
    corpus_dir: str | Path,
    metadata: str | Path | Mapping[str, Sequence[str]],
    out_dir: str | Path,
    config: PreprocessConfig,
) -> dict:
    """Run the whole preprocessing pipeline and persist shards.

    Returns the stats report (also written to out_dir/stats.json).
    Deterministic for a fixed (corpus, metadata, config): songs are merged
    in song-id order and all randomness is derived from config.seed.
    """
    corpus_dir = Path(corpus_dir)
    if not isinstance(metadata, Mapping):
        with open(metadata, "r", encoding="utf-8") as fh:
            metadata = json.load(fh)
    paths = sorted(
        (p for p in corpus_dir.iterdir() if p.suffix.lower() in (".mid", ".midi")),
        key=lambda p: p.stem,
    )
    if not paths:
        raise ValueError(f"no MIDI files in {corpus_dir}")

    corpus_meta = {p.stem: list(metadata.get(p.stem, [])) for p in paths}
    vocab = build_genre_vocabulary(corpus_meta, size=config.vocab_size, circle_order=config.circle_order)

    tasks = []
    for path in paths:
        try:
            data = path.read_bytes()
        except OSError as err:
            log.warning("skipping unreadable file %s: %s", path, err)
            continue
        tasks.append((path.stem, data, vocab.ids_for(corpus_meta[path.stem]), config))

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_process_song, tasks))
    else:
        results = [_process_song(task) for task in tasks]
    results.sort(key=lambda item: item[0])

    segments: list[Segment] = []
    rejections: Counter[str] = Counter()
    totals = Counter()
    for _, song_segments, report in results:
        if report["rejected"]:
            rejections[report["rejected"]] += 1
        totals.update(
            assignments=report["assignments"],
            windows=report["windows"],
            silence_dropped=report["silence_dropped"],
        )
        segments.extend(song_segments)
    if not segments:
        raise ValueError("preprocessing produced zero segments")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(segments))
    n_validation = int(round(len(segments) * config.validation_fraction))
    validation_idx = sorted(order[:n_validation].tolist())
    train_idx = sorted(order[n_validation:].tolist())

    genre_counts: Counter[str] = Counter()
    onset_counts = {name: 0 for name in TRACK_NAMES}
    for seg in segments:
        for gid in seg.genre_ids:
            genre_counts[vocab.tags[gid]] += 1
        for t, name in enumerate(TRACK_NAMES):
            onset_counts[name] += int(np.sum(seg.tokens[:, t] <= MAX_PITCH))

    report = {
        "songs_total": len(paths),
        "songs_rejected": dict(sorted(rejections.items())),
        "songs_accepted": len(paths) - sum(rejections.values()),
        "assignments": totals["assignments"],
        "windows_unique": totals["windows"],
        "windows_dropped_by_silence": totals["silence_dropped"],
        "segments_total": len(segments),
        "segments_train": len(train_idx),
        "segments_validation": len(validation_idx),
        "segments_per_genre": dict(sorted(genre_counts.items())),
        "onsets_per_track": onset_counts,
    }
    _write_shards(Path(out_dir), segments, train_idx, validation_idx, vocab, config, report)
    return report


# --- shard persistence -------------------------------------------------------


@dataclass
class DatasetSplit:
    tokens: np.ndarray  # (count, timesteps, NUM_TRACKS) uint8
    song_ids: list[str]
    genre_ids: list[tuple[int, ...]]

    def __len__(self) -> int:
        return int(self.tokens.shape[0])


@dataclass
class Dataset:
    train: DatasetSplit
    validation: DatasetSplit
    vocab: GenreVocabulary
    bars: int
    seed: int

    def split(self, name: str) -> DatasetSplit:
        if name not in ("train", "validation"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


def _write_shards(
    out_dir: Path,
    segments: list[Segment],
    train_idx: list[int],
    validation_idx: list[int],
    vocab: GenreVocabulary,
    config: PreprocessConfig,
    report: dict,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    timesteps = config.bars * STEPS_PER_BAR
    manifest: dict = {
        "format_version": SHARD_FORMAT_VERSION,
        "seed": config.seed,
        "bars": config.bars,
        "timesteps": timesteps,
        "num_tracks": NUM_TRACKS,
        "track_names": list(TRACK_NAMES),
        "vocab": vocab.to_json(),
        "splits": {},
    }
    for name, idx in (("train", train_idx), ("validation", validation_idx)):
        filename = f"{name}_tokens.bin"
        stacked = (
            np.stack([segments[i].tokens for i in idx])
            if idx
            else np.zeros((0, timesteps, NUM_TRACKS), dtype=np.uint8)
        )
        (out_dir / filename).write_bytes(stacked.tobytes())
        manifest["splits"][name] = {
            "file": filename,
            "count": len(idx),
            "song_ids": [segments[i].song_id for i in idx],
            "genre_ids": [list(segments[i].genre_ids) for i in idx],
        }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    (out_dir / "stats.json").write_text(json.dumps(report, sort_keys=True, indent=1))


def load_dataset(shard_dir: str | Path) -> Dataset:
    shard_dir = Path(shard_dir)
    manifest = json.loads((shard_dir / "manifest.json").read_text())
    if manifest["format_version"] != SHARD_FORMAT_VERSION:
        raise ValueError(f"unsupported shard format version {manifest['format_version']}")
    timesteps = manifest["timesteps"]
    splits = {}
    for name, info in manifest["splits"].items():
        raw = np.frombuffer((shard_dir / info["file"]).read_bytes(), dtype=np.uint8)
        tokens = raw.reshape(info["count"], timesteps, manifest["num_tracks"]).copy()
        splits[name] = DatasetSplit(
            tokens=tokens,
            song_ids=list(info["song_ids"]),
            genre_ids=[tuple(g) for g in info["genre_ids"]],
        )
    return Dataset(
        train=splits["train"],
        validation=splits["validation"],
        vocab=GenreVocabulary.from_json(manifest["vocab"]),
        bars=manifest["bars"],
        seed=manifest["seed"],
    )


# --- MIDI export -------------------------------------------------------------


def segment_to_song(
    tokens: np.ndarray,
    ticks_per_quarter: int = 480,
    programs: Mapping[str, int] | None = None,
    song_id: str = "segment",
) -> SongIR:
    """Expand a token grid back into note events (holds merge into their note)."""
    if ticks_per_quarter % STEPS_PER_QUARTER != 0:
        raise ValueError("ticks_per_quarter must be divisible by 4")
    programs = {**DEFAULT_PROGRAMS, **(programs or {})}
    cell = ticks_per_quarter // STEPS_PER_QUARTER
    tracks = []
    for index, name in enumerate(TRACK_NAMES):
        notes = [
            Note(tick=start * cell, pitch=pitch, duration=length * cell)
            for start, pitch, length in track_notes(tokens[:, index])
        ]
        tracks.append(TrackIR(channel=EXPORT_CHANNELS[name], program=programs[name], notes=notes))
    return SongIR(
        tracks=tracks,
        time_signatures=[TimeSignature(0, 4, 4)],
        ticks_per_quarter=ticks_per_quarter,
        song_id=song_id,
    )


def export_midi(
    tokens: np.ndarray,
    tempo_bpm: float = 120.0,
    ticks_per_quarter: int = 480,
    programs: Mapping[str, int] | None = None,
) -> bytes:
    """Render a token grid as a format-1 SMF byte stream."""
    return write_smf(segment_to_song(tokens, ticks_per_quarter, programs), tempo_bpm=tempo_bpm)
