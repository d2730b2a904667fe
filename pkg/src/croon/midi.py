"""Standard MIDI File reader producing monophonic melodies.

Reads SMF formats 0 and 1 at the byte level: running status, variable
length quantities, piecewise tempo maps, and SysEx skipping are all
handled here. Each track with pitched notes yields one Melody; the
percussion channel (10) is excluded and chords/overlaps are reduced to a
single voice by truncating the earlier note at the later onset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import ParseError, UnsupportedFormatError
from .score import Melody, MelodySource, Note, validate_melody

logger = logging.getLogger(__name__)

DEFAULT_TEMPO_US_PER_QUARTER = 500_000
PERCUSSION_CHANNEL = 9  # zero-based channel 10

META_TRACK_NAME = 0x03
META_END_OF_TRACK = 0x2F
META_SET_TEMPO = 0x51


@dataclass
class _RawNote:
    channel: int
    pitch: int
    start_tick: int
    end_tick: int


@dataclass
class _Track:
    index: int
    name: str
    notes: list[_RawNote]
    tempo_events: list[tuple[int, int]]  # (tick, us_per_quarter)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def need(self, n: int, what: str) -> None:
        if self.pos + n > len(self.data):
            raise ParseError(f"truncated while reading {what}", self.pos)

    def bytes(self, n: int, what: str) -> bytes:
        self.need(n, what)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        self.need(1, what)
        v = self.data[self.pos]
        self.pos += 1
        return v

    def u16(self, what: str) -> int:
        return int.from_bytes(self.bytes(2, what), "big")

    def u32(self, what: str) -> int:
        return int.from_bytes(self.bytes(4, what), "big")

    def varlen(self, what: str) -> int:
        value = 0
        for _ in range(4):
            b = self.u8(what)
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise ParseError(f"variable-length quantity too long in {what}", self.pos - 1)


def parse_midi(data: bytes) -> list[Melody]:
    """Parse SMF bytes into one Melody per track carrying notes.

    Raises ParseError (with byte offset) for malformed chunks and
    UnsupportedFormatError for SMF format 2.
    """
    r = _Reader(data)
    if r.bytes(4, "header tag") != b"MThd":
        raise ParseError("expected MThd chunk tag", 0)
    header_len = r.u32("header length")
    if header_len < 6:
        raise ParseError(f"MThd length {header_len} < 6", r.pos - 4)
    smf_format = r.u16("format")
    n_tracks = r.u16("track count")
    division = r.u16("division")
    r.bytes(header_len - 6, "header padding")
    if smf_format == 2:
        raise UnsupportedFormatError("SMF format 2 (independent patterns) is not supported")
    if smf_format not in (0, 1):
        raise ParseError(f"unknown SMF format {smf_format}", 8)

    tracks: list[_Track] = []
    for i in range(n_tracks):
        tracks.append(_parse_track(r, i))

    # Tempo events apply globally regardless of which track carries them.
    tempo_map = sorted((ev for t in tracks for ev in t.tempo_events), key=lambda e: e[0])
    to_seconds = _tick_converter(division, tempo_map)

    melodies = []
    for track in tracks:
        notes = _reduce_monophonic(track.notes)
        if not notes:
            continue
        melody = Melody(
            id=track.name or f"track-{track.index}",
            source=MelodySource.DATASET,
            notes=tuple(
                Note(n.pitch, to_seconds(n.start_tick), to_seconds(n.end_tick)) for n in notes
            ),
        )
        bad = validate_melody(melody)
        if bad:  # should not happen after reduction; guard anyway
            logger.warning("track %d produced invalid melody: %s", track.index, bad[0])
            continue
        melodies.append(melody)
    return melodies


def _parse_track(r: _Reader, index: int) -> _Track:
    tag_offset = r.pos
    if r.bytes(4, "track tag") != b"MTrk":
        raise ParseError("expected MTrk chunk tag", tag_offset)
    length = r.u32("track length")
    end = r.pos + length
    if end > len(r.data):
        raise ParseError(f"track length {length} runs past end of file", r.pos - 4)

    track = _Track(index=index, name="", notes=[], tempo_events=[])
    open_notes: dict[tuple[int, int], list[int]] = {}  # (channel, pitch) -> start ticks
    tick = 0
    running_status: int | None = None

    while r.pos < end:
        tick += r.varlen("delta time")
        status = r.u8("event status")
        if status < 0x80:
            if running_status is None:
                raise ParseError("data byte with no running status", r.pos - 1)
            r.pos -= 1
            status = running_status

        if status == 0xFF:
            running_status = None
            meta_type = r.u8("meta type")
            meta_len = r.varlen("meta length")
            payload = r.bytes(meta_len, "meta payload")
            if meta_type == META_SET_TEMPO and meta_len == 3:
                track.tempo_events.append((tick, int.from_bytes(payload, "big")))
            elif meta_type == META_TRACK_NAME and not track.name:
                track.name = payload.decode("latin-1").strip()
            elif meta_type == META_END_OF_TRACK:
                break
        elif status in (0xF0, 0xF7):
            running_status = None
            sysex_len = r.varlen("sysex length")
            r.bytes(sysex_len, "sysex payload")
        elif status >= 0xF0:
            raise ParseError(f"unexpected system message 0x{status:02X}", r.pos - 1)
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            if kind in (0xC0, 0xD0):  # program change / channel pressure: 1 data byte
                r.u8("channel message data")
                continue
            d1 = r.u8("channel message data 1")
            d2 = r.u8("channel message data 2")
            if kind == 0x90 and d2 > 0:
                open_notes.setdefault((channel, d1), []).append(tick)
            elif kind == 0x80 or (kind == 0x90 and d2 == 0):
                starts = open_notes.get((channel, d1))
                if starts:
                    start = starts.pop(0)
                    if tick > start and channel != PERCUSSION_CHANNEL:
                        track.notes.append(_RawNote(channel, d1, start, tick))
            # other channel messages (aftertouch, controller, pitch bend) carry
            # two data bytes and are ignored

    r.pos = end  # tolerate events after end-of-track meta
    return track


def _tick_converter(division: int, tempo_map: list[tuple[int, int]]):
    """Build a tick -> seconds function honoring tempo changes piecewise."""
    if division & 0x8000:
        # SMPTE division: fixed seconds per tick, tempo events irrelevant
        fps = 256 - ((division >> 8) & 0xFF)  # stored as negative two's complement
        ticks_per_frame = division & 0xFF
        if fps == 0 or ticks_per_frame == 0:
            raise ParseError(f"bad SMPTE division 0x{division:04X}", 12)
        sec_per_tick = 1.0 / (fps * ticks_per_frame)
        return lambda tick: tick * sec_per_tick

    ppq = division
    if ppq == 0:
        raise ParseError("division of zero ticks per quarter", 12)

    # Collapse to segment starts: (tick, seconds at tick, us per quarter)
    segments: list[tuple[int, float, int]] = [(0, 0.0, DEFAULT_TEMPO_US_PER_QUARTER)]
    for tick, tempo in tempo_map:
        last_tick, last_s, last_tempo = segments[-1]
        at_s = last_s + (tick - last_tick) * last_tempo / (ppq * 1e6)
        if tick == last_tick:
            segments[-1] = (tick, last_s, tempo)
        else:
            segments.append((tick, at_s, tempo))

    def to_seconds(tick: int) -> float:
        seg_tick, seg_s, seg_tempo = segments[0]
        for t, s, tempo in segments:
            if t > tick:
                break
            seg_tick, seg_s, seg_tempo = t, s, tempo
        return seg_s + (tick - seg_tick) * seg_tempo / (ppq * 1e6)

    return to_seconds


def _reduce_monophonic(raw: list[_RawNote]) -> list[_RawNote]:
    """Single-voice reduction: truncate the earlier note at the later onset.

    Simultaneous onsets keep the highest pitch (melody-on-top heuristic);
    notes truncated to zero length are dropped.
    """
    result: list[_RawNote] = []
    for note in sorted(raw, key=lambda n: (n.start_tick, n.pitch)):
        while result and result[-1].end_tick > note.start_tick:
            result[-1] = _RawNote(
                result[-1].channel, result[-1].pitch, result[-1].start_tick, note.start_tick
            )
            if result[-1].end_tick <= result[-1].start_tick:
                result.pop()
            else:
                break
        result.append(note)
    return result
