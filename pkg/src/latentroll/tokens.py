"""Token alphabet and helpers for the multitrack pianoroll grid.

A phrase is a (timesteps x 4 tracks) grid of categorical tokens. Each cell
holds one of 130 states: 0-127 a MIDI pitch onset, 128 "keep holding the
note begun earlier", 129 silence. Time is sampled at 4 cells per quarter
note, i.e. 16 cells per 4/4 bar.
"""

from __future__ import annotations

import numpy as np

NUM_TOKENS = 130
HOLD = 128
SILENCE = 129
MAX_PITCH = 127

STEPS_PER_QUARTER = 4
STEPS_PER_BAR = 16

TRACK_NAMES = ("drums", "bass", "guitar", "strings")
NUM_TRACKS = len(TRACK_NAMES)
DRUMS, BASS, GUITAR, STRINGS = range(NUM_TRACKS)

# MIDI channel reserved for percussion (0-based; "channel 10" in MIDI docs)
DRUM_CHANNEL = 9


def empty_grid(timesteps: int) -> np.ndarray:
    """All-silence grid of shape (timesteps, NUM_TRACKS), dtype uint8."""
    return np.full((timesteps, NUM_TRACKS), SILENCE, dtype=np.uint8)


def validate_grid(tokens: np.ndarray) -> None:
    """Raise ValueError unless `tokens` is a well-formed pianoroll grid.

    Checks shape (T, 4) with T a positive multiple of STEPS_PER_BAR, the
    token range, and that a hold never continues out of silence.
    """
    tokens = np.asarray(tokens)
    if tokens.ndim != 2 or tokens.shape[1] != NUM_TRACKS:
        raise ValueError(f"expected shape (T, {NUM_TRACKS}), got {tokens.shape}")
    timesteps = tokens.shape[0]
    if timesteps == 0 or timesteps % STEPS_PER_BAR != 0:
        raise ValueError(f"timestep count {timesteps} is not a positive multiple of {STEPS_PER_BAR}")
    if tokens.min() < 0 or tokens.max() >= NUM_TOKENS:
        raise ValueError("token values outside [0, 129]")
    if np.any(tokens[0] == HOLD):
        raise ValueError("hold token at timestep 0")
    bad = (tokens[1:] == HOLD) & (tokens[:-1] == SILENCE)
    if np.any(bad):
        step, track = np.argwhere(bad)[0]
        raise ValueError(f"hold continues out of silence at step {step + 1}, track {track}")


def is_valid_grid(tokens: np.ndarray) -> bool:
    try:
        validate_grid(tokens)
    except ValueError:
        return False
    return True


def track_notes(track: np.ndarray) -> list[tuple[int, int, int]]:
    """Decode one track's token row into (start_step, pitch, length_steps) notes.

    A note is an onset cell plus the run of hold cells that follows it.
    """
    notes = []
    column = np.asarray(track)
    step = 0
    n = len(column)
    while step < n:
        token = int(column[step])
        if token <= MAX_PITCH:
            length = 1
            while step + length < n and column[step + length] == HOLD:
                length += 1
            notes.append((step, token, length))
            step += length
        else:
            step += 1
    return notes
