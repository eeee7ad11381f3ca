"""Fixed-grid multitrack pianorolls and MIDI conversion.

The grid is 32 timesteps per 4/4 bar over four tracks (drums, bass,
guitar/piano, strings). Conversion from MIDI quantizes note onsets to the
nearest timestep (ties round down), maps channels/programs onto the four
tracks and slices the song into fixed-length bar windows with stride one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .smf import (
    EndOfTrack,
    Event,
    MidiFile,
    NoteOff,
    NoteOn,
    ProgramChange,
    SetTempo,
    TimeSignature,
)

N_TRACKS = 4
STEPS_PER_BAR = 32
N_PITCHES = 128
MAX_DURATION = 96  # timesteps; three bars

TRACK_NAMES = ("drums", "bass", "guitar_piano", "strings")
DRUMS, BASS, GUITAR_PIANO, STRINGS = range(4)


class NoQuantizableContent(ValueError):
    """No notes survive filtering/quantization."""


@dataclass(frozen=True, slots=True, order=True)
class Onset:
    bar: int
    track: int
    step: int
    pitch: int
    duration: int

    def __post_init__(self) -> None:
        if self.bar < 0 or not 0 <= self.track < N_TRACKS:
            raise ValueError(f"onset indices out of range: {self}")
        if not 0 <= self.step < STEPS_PER_BAR or not 0 <= self.pitch < N_PITCHES:
            raise ValueError(f"onset indices out of range: {self}")
        if not 1 <= self.duration <= MAX_DURATION:
            raise ValueError(f"duration {self.duration} outside [1, {MAX_DURATION}]")


@dataclass(frozen=True)
class Pianoroll:
    """An immutable set of onsets on the (bar, track, step, pitch) grid."""

    n_bars: int
    onsets: tuple[Onset, ...]

    def __post_init__(self) -> None:
        cells = set()
        for o in self.onsets:
            if o.bar >= self.n_bars:
                raise ValueError(f"onset bar {o.bar} outside {self.n_bars} bars")
            key = (o.bar, o.track, o.step, o.pitch)
            if key in cells:
                raise ValueError(f"duplicate onset at {key}")
            cells.add(key)
        object.__setattr__(self, "onsets", tuple(sorted(self.onsets)))

    @property
    def is_empty(self) -> bool:
        return not self.onsets


class TrackMap:
    """Total rule from (MIDI channel, program) to one of the four tracks.

    Channel 10 (index 9) is drums regardless of program. Programs 32-39 are
    bass, 0-7 and 24-31 guitar/piano, 120-127 (unpitched effects) are
    discarded, everything else lands in strings.
    """

    #: (channel, program) used when writing each track back to MIDI
    export_channels = ((9, 0), (1, 33), (2, 0), (3, 48))

    def track_for(self, channel: int, program: int) -> int | None:
        if channel == 9:
            return DRUMS
        if 32 <= program <= 39:
            return BASS
        if 0 <= program <= 7 or 24 <= program <= 31:
            return GUITAR_PIANO
        if 120 <= program <= 127:
            return None
        return STRINGS


DEFAULT_TRACK_MAP = TrackMap()


def _round_half_down(num: int, den: int) -> int:
    """Nearest integer to num/den with exact halves rounding down."""
    return (2 * num + den - 1) // (2 * den)


def _absolute_events(file: MidiFile) -> list[tuple[int, int, Event]]:
    """Merge tracks into one (tick, track_order, event) stream."""
    merged: list[tuple[int, int, Event]] = []
    for t_idx, track in enumerate(file.tracks):
        tick = 0
        for event in track:
            tick += event.delta
            merged.append((tick, t_idx, event))
    merged.sort(key=lambda item: (item[0], item[1]))
    return merged


def to_pianoroll(
    file: MidiFile,
    track_map: TrackMap = DEFAULT_TRACK_MAP,
    bars_per_sequence: int = 2,
) -> list[Pianoroll]:
    """Quantize a MIDI file into bar windows of the 4x32 grid.

    Only 4/4 regions are converted; the song is segmented at time-signature
    changes and each 4/4 segment is windowed independently. Windows with no
    onsets are dropped. Raises NoQuantizableContent when nothing survives.
    """
    events = _absolute_events(file)
    bar_ticks = file.division * 4

    # (start_tick, is_4_4); default 4/4 until the first signature event
    signatures: list[tuple[int, bool]] = [(0, True)]
    for tick, _, event in events:
        if isinstance(event, TimeSignature):
            signatures.append((tick, event.numerator == 4 and event.denominator == 4))

    def in_4_4_segment(tick: int) -> int | None:
        """Return the segment start tick if `tick` falls in a 4/4 region."""
        start, ok = signatures[0]
        for sig_tick, sig_ok in signatures[1:]:
            if tick < sig_tick:
                break
            start, ok = sig_tick, sig_ok
        return start if ok else None

    program = [0] * 16
    open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}  # (ch,pitch) -> [(tick, program)]
    raw_notes: list[tuple[int, int, int, int, int]] = []  # (start, dur_ticks, channel, pitch, program)
    max_tick = events[-1][0] if events else 0

    for tick, _, event in events:
        if isinstance(event, ProgramChange):
            program[event.channel] = event.program
        elif isinstance(event, NoteOn):
            open_notes.setdefault((event.channel, event.pitch), []).append(
                (tick, program[event.channel])
            )
        elif isinstance(event, NoteOff):
            stack = open_notes.get((event.channel, event.pitch))
            if stack:
                start, prog = stack.pop(0)
                raw_notes.append((start, max(1, tick - start), event.channel, event.pitch, prog))
    # notes left open are closed at the end of the file
    for (channel, pitch), stack in open_notes.items():
        for start, prog in stack:
            if max_tick > start:
                raw_notes.append((start, max_tick - start, channel, pitch, prog))

    step_den = bar_ticks  # step = tick * STEPS_PER_BAR / bar_ticks
    quantized: dict[tuple[int, int, int, int], int] = {}
    for start, dur_ticks, channel, pitch, prog in raw_notes:
        seg_start = in_4_4_segment(start)
        if seg_start is None:
            continue
        track = track_map.track_for(channel, prog)
        if track is None:
            continue
        step_global = _round_half_down((start - seg_start) * STEPS_PER_BAR, step_den)
        dur = _round_half_down(dur_ticks * STEPS_PER_BAR, step_den)
        dur = min(max(dur, 1), MAX_DURATION)
        bar, step = divmod(step_global, STEPS_PER_BAR)
        key = (bar, track, step, pitch)
        quantized[key] = max(quantized.get(key, 0), dur)

    if not quantized:
        raise NoQuantizableContent("no notes survive filtering")

    last_bar = max(bar for bar, _, _, _ in quantized)
    n_windows = max(1, last_bar + 2 - bars_per_sequence)
    sequences: list[Pianoroll] = []
    for b0 in range(n_windows):
        window = [
            Onset(bar - b0, track, step, pitch, dur)
            for (bar, track, step, pitch), dur in quantized.items()
            if b0 <= bar < b0 + bars_per_sequence
        ]
        if window:
            sequences.append(Pianoroll(bars_per_sequence, tuple(window)))
    if not sequences:
        raise NoQuantizableContent("no nonempty windows")
    return sequences


def from_pianoroll(
    roll: Pianoroll,
    tempo: float = 120.0,
    track_map: TrackMap = DEFAULT_TRACK_MAP,
    division: int = 480,
) -> MidiFile:
    """Render a pianoroll as a format-1 file: a conductor track plus one
    track per instrument."""
    step_ticks = division * 4 // STEPS_PER_BAR
    conductor: list[Event] = [
        TimeSignature(0, 4, 2),
        SetTempo(0, round(60_000_000 / tempo)),
        EndOfTrack(0),
    ]
    tracks: list[list[Event]] = [conductor]
    for track_idx in range(N_TRACKS):
        channel, prog = track_map.export_channels[track_idx]
        # (tick, order, event factory) with note-offs before note-ons at a tick
        timed: list[tuple[int, int, object]] = []
        for o in roll.onsets:
            if o.track != track_idx:
                continue
            start = (o.bar * STEPS_PER_BAR + o.step) * step_ticks
            end = start + o.duration * step_ticks
            timed.append((start, 1, ("on", o.pitch)))
            timed.append((end, 0, ("off", o.pitch)))
        timed.sort(key=lambda item: (item[0], item[1]))
        events: list[Event] = [ProgramChange(0, channel, prog)]
        last = 0
        for tick, _, (kind, pitch) in timed:
            delta = tick - last
            last = tick
            if kind == "on":
                events.append(NoteOn(delta, channel, pitch, 100))
            else:
                events.append(NoteOff(delta, channel, pitch, 0))
        events.append(EndOfTrack(0))
        tracks.append(events)
    return MidiFile(format=1, division=division, tracks=tracks)


# ---------------------------------------------------------------------------
# JSON fixture format
# ---------------------------------------------------------------------------

def pianoroll_to_json(roll: Pianoroll) -> dict:
    return {
        "n_bars": roll.n_bars,
        "tracks": N_TRACKS,
        "steps": STEPS_PER_BAR,
        "onsets": [[o.bar, o.track, o.step, o.pitch, o.duration] for o in roll.onsets],
    }


def pianoroll_from_json(obj: dict) -> Pianoroll:
    if obj.get("tracks", N_TRACKS) != N_TRACKS or obj.get("steps", STEPS_PER_BAR) != STEPS_PER_BAR:
        raise ValueError("fixture grid does not match the 4x32 layout")
    onsets = tuple(Onset(*entry) for entry in obj["onsets"])
    return Pianoroll(int(obj["n_bars"]), onsets)


def save_pianoroll(path: str | Path, roll: Pianoroll) -> None:
    Path(path).write_text(json.dumps(pianoroll_to_json(roll)), encoding="utf-8")


def load_pianoroll(path: str | Path) -> Pianoroll:
    return pianoroll_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
