"""Standard MIDI File (SMF) parsing and writing.

Events are decoded into a small typed vocabulary (notes, program changes,
tempo, time signature, end-of-track); everything else is preserved as an
opaque byte blob so that parse -> write -> parse is the identity on event
content. Running status is accepted on input and never emitted on output.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path


class MidiError(Exception):
    """Base class for SMF decoding errors."""


class MalformedHeader(MidiError):
    pass


class TruncatedChunk(MidiError):
    pass


class BadVlq(MidiError):
    pass


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class NoteOn:
    delta: int
    channel: int
    pitch: int
    velocity: int

    def __post_init__(self) -> None:
        if self.velocity < 1:
            raise ValueError("note-on with velocity 0 is a note-off; use NoteOff")
        _check_channel_event(self.delta, self.channel, self.pitch, self.velocity)


@dataclass(frozen=True, slots=True)
class NoteOff:
    delta: int
    channel: int
    pitch: int
    velocity: int = 0

    def __post_init__(self) -> None:
        _check_channel_event(self.delta, self.channel, self.pitch, self.velocity)


@dataclass(frozen=True, slots=True)
class ProgramChange:
    delta: int
    channel: int
    program: int

    def __post_init__(self) -> None:
        _check_channel_event(self.delta, self.channel, self.program, 0)


@dataclass(frozen=True, slots=True)
class SetTempo:
    delta: int
    microseconds_per_quarter: int


@dataclass(frozen=True, slots=True)
class TimeSignature:
    delta: int
    numerator: int
    denominator_exp: int  # denominator = 2 ** denominator_exp
    clocks_per_click: int = 24
    notated_32nds: int = 8

    @property
    def denominator(self) -> int:
        return 1 << self.denominator_exp


@dataclass(frozen=True, slots=True)
class EndOfTrack:
    delta: int = 0


@dataclass(frozen=True, slots=True)
class OtherEvent:
    """Any event we do not interpret; raw holds the full encoded message
    (status byte onward, delta excluded)."""

    delta: int
    raw: bytes


Event = NoteOn | NoteOff | ProgramChange | SetTempo | TimeSignature | EndOfTrack | OtherEvent


def _check_channel_event(delta: int, channel: int, d1: int, d2: int) -> None:
    if delta < 0:
        raise ValueError(f"negative delta {delta}")
    if not 0 <= channel <= 15:
        raise ValueError(f"channel {channel} out of range")
    if not 0 <= d1 <= 127 or not 0 <= d2 <= 127:
        raise ValueError("data byte out of range")


@dataclass(frozen=True)
class MidiFile:
    format: int
    division: int  # ticks per quarter note
    tracks: list[list[Event]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# variable-length quantities
# ---------------------------------------------------------------------------

def vlq_encode(value: int) -> bytes:
    if value < 0 or value >= 1 << 28:
        raise ValueError(f"VLQ value {value} out of range")
    out = bytearray([value & 0x7F])
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def vlq_decode(data: bytes, pos: int) -> tuple[int, int]:
    """Decode a VLQ at data[pos:]; returns (value, next position)."""
    value = 0
    for i in range(4):
        if pos >= len(data):
            raise TruncatedChunk("VLQ runs past end of chunk")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise BadVlq("variable-length quantity longer than 4 bytes")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_CHANNEL_DATA_LEN = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}
_SYSTEM_DATA_LEN = {0xF1: 1, 0xF2: 2, 0xF3: 1, 0xF6: 0}  # others carry no data


def parse_smf(data: bytes) -> MidiFile:
    """Decode an SMF byte sequence (formats 0 and 1; format 2 headers are
    accepted but get no special treatment)."""
    if len(data) < 14 or data[0:4] != b"MThd":
        raise MalformedHeader("missing MThd header")
    (header_len,) = struct.unpack(">I", data[4:8])
    if header_len < 6 or len(data) < 8 + header_len:
        raise MalformedHeader("MThd chunk too short")
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if division & 0x8000:
        raise MalformedHeader("SMPTE division is not supported")
    if division == 0:
        raise MalformedHeader("division must be positive")

    tracks: list[list[Event]] = []
    pos = 8 + header_len
    while pos < len(data):
        if pos + 8 > len(data):
            raise TruncatedChunk("chunk header runs past end of file")
        tag = data[pos : pos + 4]
        (length,) = struct.unpack(">I", data[pos + 4 : pos + 8])
        pos += 8
        if pos + length > len(data):
            raise TruncatedChunk(f"{tag!r} chunk body truncated")
        if tag == b"MTrk":
            tracks.append(_parse_track(data[pos : pos + length]))
        pos += length

    if len(tracks) < ntracks:
        raise TruncatedChunk(f"header declares {ntracks} tracks, found {len(tracks)}")
    return MidiFile(format=fmt, division=division, tracks=tracks)


def _parse_track(chunk: bytes) -> list[Event]:
    events: list[Event] = []
    pos = 0
    running: int | None = None
    while pos < len(chunk):
        delta, pos = vlq_decode(chunk, pos)
        if pos >= len(chunk):
            raise TruncatedChunk("event status runs past end of chunk")
        status = chunk[pos]
        if status & 0x80:
            pos += 1
        elif running is None:
            raise TruncatedChunk("data byte with no running status")
        else:
            status = running

        if status == 0xFF:
            running = None
            if pos >= len(chunk):
                raise TruncatedChunk("meta event truncated")
            meta_type = chunk[pos]
            pos += 1
            length, pos = vlq_decode(chunk, pos)
            if pos + length > len(chunk):
                raise TruncatedChunk("meta event body truncated")
            body = chunk[pos : pos + length]
            pos += length
            if meta_type == 0x2F:
                events.append(EndOfTrack(delta))
                break
            if meta_type == 0x51 and length == 3:
                events.append(SetTempo(delta, int.from_bytes(body, "big")))
            elif meta_type == 0x58 and length == 4:
                events.append(TimeSignature(delta, body[0], body[1], body[2], body[3]))
            else:
                events.append(OtherEvent(delta, bytes([0xFF, meta_type]) + vlq_encode(length) + body))
        elif status in (0xF0, 0xF7):
            running = None
            length, pos = vlq_decode(chunk, pos)
            if pos + length > len(chunk):
                raise TruncatedChunk("sysex body truncated")
            events.append(OtherEvent(delta, bytes([status]) + vlq_encode(length) + chunk[pos : pos + length]))
            pos += length
        elif status >= 0xF0:
            running = None
            n = _SYSTEM_DATA_LEN.get(status, 0)
            if pos + n > len(chunk):
                raise TruncatedChunk("system event truncated")
            events.append(OtherEvent(delta, chunk[pos - 1 : pos + n]))
            pos += n
        else:
            running = status
            kind = status >> 4
            n = _CHANNEL_DATA_LEN[kind]
            if pos + n > len(chunk):
                raise TruncatedChunk("channel event truncated")
            d = chunk[pos : pos + n]
            pos += n
            channel = status & 0x0F
            if kind == 0x9 and d[1] > 0:
                events.append(NoteOn(delta, channel, d[0], d[1]))
            elif kind == 0x9:
                events.append(NoteOff(delta, channel, d[0], 0))
            elif kind == 0x8:
                events.append(NoteOff(delta, channel, d[0], d[1]))
            elif kind == 0xC:
                events.append(ProgramChange(delta, channel, d[0]))
            else:
                events.append(OtherEvent(delta, bytes([status]) + d))
    if not events or not isinstance(events[-1], EndOfTrack):
        events.append(EndOfTrack(0))
    return events


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def _encode_event(event: Event) -> bytes:
    if isinstance(event, NoteOn):
        return bytes([0x90 | event.channel, event.pitch, event.velocity])
    if isinstance(event, NoteOff):
        return bytes([0x80 | event.channel, event.pitch, event.velocity])
    if isinstance(event, ProgramChange):
        return bytes([0xC0 | event.channel, event.program])
    if isinstance(event, SetTempo):
        return b"\xff\x51\x03" + event.microseconds_per_quarter.to_bytes(3, "big")
    if isinstance(event, TimeSignature):
        return bytes(
            [0xFF, 0x58, 4, event.numerator, event.denominator_exp,
             event.clocks_per_click, event.notated_32nds]
        )
    if isinstance(event, EndOfTrack):
        return b"\xff\x2f\x00"
    if isinstance(event, OtherEvent):
        return event.raw
    raise TypeError(f"unknown event {event!r}")


def write_smf(file: MidiFile) -> bytes:
    out = bytearray(b"MThd")
    out += struct.pack(">IHHH", 6, file.format, len(file.tracks), file.division)
    for track in file.tracks:
        body = bytearray()
        for event in track:
            body += vlq_encode(event.delta)
            body += _encode_event(event)
        if not track or not isinstance(track[-1], EndOfTrack):
            body += b"\x00\xff\x2f\x00"
        out += b"MTrk" + struct.pack(">I", len(body)) + body
    return bytes(out)


def read_file(path: str | Path) -> MidiFile:
    return parse_smf(Path(path).read_bytes())


def write_file(path: str | Path, file: MidiFile) -> None:
    Path(path).write_bytes(write_smf(file))
