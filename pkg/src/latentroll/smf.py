"""Standard MIDI File (format 0/1) reading and writing.

The reader resolves note-on/note-off pairs into (tick, pitch, duration)
events grouped per (file track, MIDI channel), which is the unit the rest
of the pipeline treats as a "track". Only the events the pipeline needs
are decoded: notes, program changes, and time-signature meta events;
everything else is skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

log = logging.getLogger(__name__)

HEADER_CHUNK = b"MThd"
TRACK_CHUNK = b"MTrk"

META_TIME_SIGNATURE = 0x58
META_END_OF_TRACK = 0x2F


class MidiParseError(ValueError):
    """Malformed SMF input. `offset` is the absolute byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class Note(NamedTuple):
    tick: int
    pitch: int
    duration: int  # ticks, > 0


class TimeSignature(NamedTuple):
    tick: int
    numerator: int
    denominator: int


@dataclass
class TrackIR:
    """Notes of one MIDI channel within one file track."""

    channel: int  # 0-15; 9 is percussion
    program: int  # 0-127, first program change seen (0 if none)
    notes: list[Note] = field(default_factory=list)


@dataclass
class SongIR:
    tracks: list[TrackIR]
    time_signatures: list[TimeSignature]
    ticks_per_quarter: int
    song_id: str = ""
    genre_tags: list[str] = field(default_factory=list)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def bytes(self, n: int) -> bytes:
        if self.remaining() < n:
            raise MidiParseError(f"unexpected end of file, wanted {n} bytes", self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.bytes(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.bytes(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.bytes(4), "big")

    def varlen(self) -> int:
        value = 0
        for i in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise MidiParseError("variable-length quantity longer than 4 bytes", self.pos)


# data-byte count per channel-message status nibble
_CHANNEL_MSG_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def parse_midi(data: bytes, song_id: str = "") -> SongIR:
    """Decode an SMF byte stream into per-channel note events.

    Note-on with velocity 0 counts as note-off. Overlapping same-pitch
    notes on one channel are closed first-opened-first. A note still open
    at end of track is closed there and a warning is logged.
    """
    reader = _Reader(data)
    header_offset = reader.pos
    if reader.bytes(4) != HEADER_CHUNK:
        raise MidiParseError("missing MThd header", header_offset)
    header_len = reader.u32()
    if header_len < 6:
        raise MidiParseError(f"bad MThd length {header_len}", header_offset + 4)
    fmt = reader.u16()
    n_tracks = reader.u16()
    division = reader.u16()
    reader.bytes(header_len - 6)
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}", header_offset + 8)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division not supported", header_offset + 12)
    if division == 0:
        raise MidiParseError("zero ticks per quarter note", header_offset + 12)

    tracks: list[TrackIR] = []
    time_signatures: list[TimeSignature] = []
    tracks_seen = 0
    while tracks_seen < n_tracks and reader.remaining() > 0:
        chunk_offset = reader.pos
        chunk_type = reader.bytes(4)
        chunk_len = reader.u32()
        if reader.remaining() < chunk_len:
            raise MidiParseError(f"chunk length {chunk_len} exceeds file size", chunk_offset + 4)
        if chunk_type != TRACK_CHUNK:
            # alien chunks are skipped per the SMF spec
            reader.bytes(chunk_len)
            continue
        tracks_seen += 1
        track_end = reader.pos + chunk_len
        tracks.extend(_parse_track(reader, track_end, time_signatures, song_id, tracks_seen - 1))
        reader.pos = track_end
    if tracks_seen < n_tracks:
        raise MidiParseError(f"header promised {n_tracks} tracks, found {tracks_seen}", reader.pos)

    time_signatures.sort(key=lambda ts: ts.tick)
    for track in tracks:
        track.notes.sort()
    return SongIR(
        tracks=tracks,
        time_signatures=time_signatures,
        ticks_per_quarter=division,
        song_id=song_id,
    )


def _parse_track(
    reader: _Reader,
    track_end: int,
    time_signatures: list[TimeSignature],
    song_id: str,
    track_index: int,
) -> list[TrackIR]:
    tick = 0
    running_status: int | None = None
    # (channel, pitch) -> FIFO of open note-on ticks
    open_notes: dict[tuple[int, int], list[int]] = {}
    notes_by_channel: dict[int, list[Note]] = {}
    program_by_channel: dict[int, int] = {}

    def close_note(channel: int, pitch: int, end_tick: int) -> None:
        starts = open_notes.get((channel, pitch))
        if not starts:
            return  # unmatched note-off, ignore
        start = starts.pop(0)
        duration = max(1, end_tick - start)
        notes_by_channel.setdefault(channel, []).append(Note(start, pitch, duration))

    while reader.pos < track_end:
        tick += reader.varlen()
        status_offset = reader.pos
        byte = reader.u8()
        if byte == 0xFF:
            meta_type = reader.u8()
            length = reader.varlen()
            payload = reader.bytes(length)
            if meta_type == META_TIME_SIGNATURE:
                if length < 2:
                    raise MidiParseError("truncated time-signature event", status_offset)
                time_signatures.append(TimeSignature(tick, payload[0], 1 << payload[1]))
            elif meta_type == META_END_OF_TRACK:
                break
            continue
        if byte in (0xF0, 0xF7):
            reader.bytes(reader.varlen())
            running_status = None
            continue
        if byte >= 0xF0:
            raise MidiParseError(f"unexpected system message 0x{byte:02x}", status_offset)
        if byte & 0x80:
            status = byte
            running_status = status
            first_data = reader.u8()
        else:
            if running_status is None:
                raise MidiParseError("data byte without running status", status_offset)
            status = running_status
            first_data = byte
        kind = status & 0xF0
        channel = status & 0x0F
        if _CHANNEL_MSG_LEN[kind] == 2:
            second_data = reader.u8()
        else:
            second_data = 0
        if kind == 0x90 and second_data > 0:
            open_notes.setdefault((channel, first_data), []).append(tick)
        elif kind == 0x80 or kind == 0x90:  # note-off, or note-on with velocity 0
            close_note(channel, first_data, tick)
        elif kind == 0xC0:
            program_by_channel.setdefault(channel, first_data)

    for (channel, pitch), starts in sorted(open_notes.items()):
        for start in starts:
            log.warning(
                "song %r track %d: note-on pitch %d at tick %d never closed, ending at track end",
                song_id, track_index, pitch, start,
            )
            duration = max(1, tick - start)
            notes_by_channel.setdefault(channel, []).append(Note(start, pitch, duration))

    channels = sorted(set(notes_by_channel) | set(program_by_channel))
    return [
        TrackIR(
            channel=channel,
            program=program_by_channel.get(channel, 0),
            notes=sorted(notes_by_channel.get(channel, [])),
        )
        for channel in channels
    ]


# --- writing ---------------------------------------------------------------


def _varlen(value: int) -> bytes:
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def _track_chunk(events: list[tuple[int, bytes]]) -> bytes:
    """Assemble an MTrk chunk from (tick, message-bytes) pairs, already ordered."""
    body = bytearray()
    previous = 0
    for tick, message in events:
        body += _varlen(tick - previous)
        body += message
        previous = tick
    body += _varlen(0) + b"\xff\x2f\x00"
    return TRACK_CHUNK + len(body).to_bytes(4, "big") + bytes(body)


def write_smf(song: SongIR, tempo_bpm: float = 120.0) -> bytes:
    """Serialize a SongIR as a format-1 SMF byte stream.

    Track 0 carries tempo and time signature (4/4 at tick 0 if the song
    has none); each TrackIR becomes one MTrk with a program change at
    tick 0. Note-offs sort before note-ons at equal ticks so back-to-back
    same-pitch notes survive a round trip.
    """
    meta_events: list[tuple[int, bytes]] = []
    microseconds_per_quarter = round(60_000_000 / tempo_bpm)
    meta_events.append((0, b"\xff\x51\x03" + microseconds_per_quarter.to_bytes(3, "big")))
    signatures = song.time_signatures or [TimeSignature(0, 4, 4)]
    for ts in signatures:
        power = max(0, ts.denominator.bit_length() - 1)
        meta_events.append((ts.tick, bytes([0xFF, META_TIME_SIGNATURE, 4, ts.numerator, power, 24, 8])))
    meta_events.sort(key=lambda pair: pair[0])
    chunks = [_track_chunk(meta_events)]

    for track in song.tracks:
        channel = track.channel & 0x0F
        events: list[tuple[int, int, int, bytes]] = [
            (0, -1, 0, bytes([0xC0 | channel, track.program & 0x7F]))
        ]
        for note in track.notes:
            events.append((note.tick, 1, note.pitch, bytes([0x90 | channel, note.pitch, 100])))
            events.append((note.tick + note.duration, 0, note.pitch, bytes([0x80 | channel, note.pitch, 64])))
        events.sort(key=lambda item: item[:3])
        chunks.append(_track_chunk([(tick, message) for tick, _, _, message in events]))

    header = HEADER_CHUNK + (6).to_bytes(4, "big")
    header += (1).to_bytes(2, "big") + len(chunks).to_bytes(2, "big")
    header += song.ticks_per_quarter.to_bytes(2, "big")
    return header + b"".join(chunks)
