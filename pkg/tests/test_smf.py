"""SMF parsing/writing: encoding examples, round trips, error paths."""

import pytest
from hypothesis import given, strategies as st

from polyvae import smf
from polyvae.smf import (
    BadVlq,
    EndOfTrack,
    MalformedHeader,
    MidiFile,
    NoteOff,
    NoteOn,
    OtherEvent,
    ProgramChange,
    SetTempo,
    TimeSignature,
    TruncatedChunk,
    parse_smf,
    vlq_decode,
    vlq_encode,
    write_smf,
)


def header(fmt=1, ntracks=1, division=480) -> bytes:
    return b"MThd" + (6).to_bytes(4, "big") + fmt.to_bytes(2, "big") + \
        ntracks.to_bytes(2, "big") + division.to_bytes(2, "big")


def track_chunk(body: bytes) -> bytes:
    return b"MTrk" + len(body).to_bytes(4, "big") + body


EOT = b"\x00\xff\x2f\x00"


class TestHeader:
    def test_example_header_bytes(self):
        data = bytes.fromhex("4d546864000000060001000101e0") + track_chunk(EOT)
        f = parse_smf(data)
        assert f.format == 1
        assert len(f.tracks) == 1
        assert f.division == 480

    def test_missing_mthd(self):
        with pytest.raises(MalformedHeader):
            parse_smf(b"RIFF" + bytes(20))

    def test_smpte_division_rejected(self):
        with pytest.raises(MalformedHeader):
            parse_smf(header(division=0xE250) + track_chunk(EOT))

    def test_truncated_track_chunk(self):
        data = header() + b"MTrk" + (100).to_bytes(4, "big") + b"\x00"
        with pytest.raises(TruncatedChunk):
            parse_smf(data)

    def test_fewer_tracks_than_declared(self):
        with pytest.raises(TruncatedChunk):
            parse_smf(header(ntracks=2) + track_chunk(EOT))

    def test_alien_chunks_are_skipped(self):
        data = header() + b"XFIH" + (4).to_bytes(4, "big") + b"junk" + track_chunk(EOT)
        assert len(parse_smf(data).tracks) == 1


class TestVlq:
    def test_example_two_byte(self):
        assert vlq_decode(bytes([0x81, 0x00]), 0) == (128, 2)

    def test_single_byte(self):
        assert vlq_decode(b"\x7f", 0) == (127, 1)

    def test_encode_examples(self):
        assert vlq_encode(0) == b"\x00"
        assert vlq_encode(128) == b"\x81\x00"
        assert vlq_encode(0x0FFFFFFF) == b"\xff\xff\xff\x7f"

    def test_too_long(self):
        with pytest.raises(BadVlq):
            vlq_decode(b"\xff\xff\xff\xff\x7f", 0)

    @given(st.integers(min_value=0, max_value=(1 << 28) - 1))
    def test_round_trip(self, value):
        encoded = vlq_encode(value)
        assert vlq_decode(encoded, 0) == (value, len(encoded))
        assert len(encoded) <= 4


class TestEvents:
    def test_note_on_velocity_zero_is_note_off(self):
        body = b"\x00\x90\x3c\x00" + EOT
        events = parse_smf(header() + track_chunk(body)).tracks[0]
        assert events[0] == NoteOff(0, 0, 60, 0)

    def test_note_on_constructor_rejects_zero_velocity(self):
        with pytest.raises(ValueError):
            NoteOn(0, 0, 60, 0)

    def test_running_status(self):
        # second note-on omits the status byte
        body = b"\x00\x90\x3c\x40" + b"\x10\x3e\x40" + EOT
        events = parse_smf(header() + track_chunk(body)).tracks[0]
        assert events[0] == NoteOn(0, 0, 60, 64)
        assert events[1] == NoteOn(16, 0, 62, 64)

    def test_running_status_reemitted_plain(self):
        body = b"\x00\x90\x3c\x40" + b"\x10\x3e\x40" + b"\x10\x3c\x00" + b"\x00\x3e\x00" + EOT
        first = parse_smf(header() + track_chunk(body))
        reemitted = write_smf(first)
        assert parse_smf(reemitted) == first
        # no running status on output: every event starts with a status byte
        assert b"\x90\x3c\x40\x10\x3e" not in reemitted

    def test_data_byte_without_status(self):
        with pytest.raises(TruncatedChunk):
            parse_smf(header() + track_chunk(b"\x00\x3c\x40" + EOT))

    def test_meta_and_sysex_preserved(self):
        text_meta = b"\x00\xff\x01\x05hello"
        sysex = b"\x00\xf0\x03\x01\x02\xf7"
        control = b"\x00\xb0\x07\x64"
        pitchbend = b"\x00\xe1\x00\x40"
        body = text_meta + sysex + control + pitchbend + EOT
        f = parse_smf(header() + track_chunk(body))
        events = f.tracks[0]
        assert events[0] == OtherEvent(0, b"\xff\x01\x05hello")
        assert events[1] == OtherEvent(0, b"\xf0\x03\x01\x02\xf7")
        assert events[2] == OtherEvent(0, b"\xb0\x07\x64")
        assert events[3] == OtherEvent(0, b"\xe1\x00\x40")
        assert parse_smf(write_smf(f)) == f

    def test_tempo_and_time_signature(self):
        body = b"\x00\xff\x51\x03\x07\xa1\x20" + b"\x00\xff\x58\x04\x03\x02\x18\x08" + EOT
        events = parse_smf(header() + track_chunk(body)).tracks[0]
        assert events[0] == SetTempo(0, 500000)
        assert events[1] == TimeSignature(0, 3, 2, 24, 8)
        assert events[1].denominator == 4

    def test_events_after_end_of_track_ignored(self):
        body = EOT + b"\x00\x90\x3c\x40"
        events = parse_smf(header() + track_chunk(body)).tracks[0]
        assert events == [EndOfTrack(0)]

    def test_missing_end_of_track_is_synthesized(self):
        body = b"\x00\x90\x3c\x40"
        events = parse_smf(header() + track_chunk(body)).tracks[0]
        assert events[-1] == EndOfTrack(0)


class TestWrite:
    def test_empty_single_track_file(self):
        data = write_smf(MidiFile(format=0, division=480, tracks=[[EndOfTrack(0)]]))
        assert data.count(b"MTrk") == 1
        assert data.endswith(b"MTrk" + (4).to_bytes(4, "big") + EOT)

    def test_write_appends_missing_eot(self):
        data = write_smf(MidiFile(format=0, division=480, tracks=[[NoteOn(0, 0, 60, 100)]]))
        track = parse_smf(data).tracks[0]
        assert track[-1] == EndOfTrack(0)

    def test_round_trip_mixed_file(self):
        tracks = [
            [SetTempo(0, 600000), TimeSignature(0, 4, 2, 24, 8), EndOfTrack(0)],
            [
                ProgramChange(0, 1, 33),
                NoteOn(0, 1, 40, 90),
                NoteOff(240, 1, 40, 0),
                NoteOn(0, 1, 43, 90),
                NoteOff(480, 1, 43, 64),
                EndOfTrack(0),
            ],
        ]
        f = MidiFile(format=1, division=480, tracks=tracks)
        assert parse_smf(write_smf(f)) == f
