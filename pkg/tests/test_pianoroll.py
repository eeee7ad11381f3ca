"""Pianoroll grid conversion: quantization, track mapping, round trips."""

import numpy as np
import pytest

from polyvae import pianoroll as pr
from polyvae.smf import (
    EndOfTrack,
    MidiFile,
    NoteOff,
    NoteOn,
    ProgramChange,
    TimeSignature,
    parse_smf,
    write_smf,
)

from conftest import random_roll


def single_note_file(start_tick, dur_ticks, channel=0, program=0, pitch=60, division=480):
    track = [
        ProgramChange(0, channel, program),
        NoteOn(start_tick, channel, pitch, 100),
        NoteOff(dur_ticks, channel, pitch, 0),
        EndOfTrack(0),
    ]
    return MidiFile(format=0, division=division, tracks=[track])


class TestQuantization:
    def test_quarter_note_is_eight_steps(self):
        f = single_note_file(0, 480, program=33)  # bass
        (roll,) = pr.to_pianoroll(f, bars_per_sequence=1)
        assert roll.onsets == (pr.Onset(0, pr.BASS, 0, 60, 8),)

    def test_midway_snaps_to_nearest(self):
        # step is 60 ticks; 40 is closer to step 1 than step 0
        f = single_note_file(40, 480, program=33)
        (roll,) = pr.to_pianoroll(f, bars_per_sequence=1)
        assert roll.onsets[0].step == 1

    def test_exact_tie_rounds_down(self):
        f = single_note_file(30, 480, program=33)  # exactly between steps 0 and 1
        (roll,) = pr.to_pianoroll(f, bars_per_sequence=1)
        assert roll.onsets[0].step == 0

    def test_zero_length_duration_promoted_to_one(self):
        f = single_note_file(0, 10, program=33)  # 10 ticks ~ 0.17 steps
        (roll,) = pr.to_pianoroll(f, bars_per_sequence=1)
        assert roll.onsets[0].duration == 1

    def test_duration_clipped_to_three_bars(self):
        f = single_note_file(0, 480 * 4 * 5, program=33)  # five bars long
        rolls = pr.to_pianoroll(f, bars_per_sequence=2)
        assert rolls[0].onsets[0].duration == pr.MAX_DURATION

    def test_channel_and_program_mapping(self):
        drums = [NoteOn(0, 9, 36, 100), NoteOff(60, 9, 36, 0), EndOfTrack(0)]
        bass = [ProgramChange(0, 0, 33), NoteOn(0, 0, 40, 100), NoteOff(120, 0, 40, 0), EndOfTrack(0)]
        f = MidiFile(format=1, division=480, tracks=[drums, bass])
        (roll,) = pr.to_pianoroll(f, bars_per_sequence=1)
        by_track = {o.track: o for o in roll.onsets}
        assert by_track[pr.DRUMS].pitch == 36
        assert by_track[pr.BASS].pitch == 40

    def test_non_44_regions_skipped(self):
        track = [
            TimeSignature(0, 3, 2, 24, 8),  # 3/4 from the start
            NoteOn(0, 0, 60, 100),
            NoteOff(480, 0, 60, 0),
            EndOfTrack(0),
        ]
        with pytest.raises(pr.NoQuantizableContent):
            pr.to_pianoroll(MidiFile(format=0, division=480, tracks=[track]), bars_per_sequence=1)

    def test_44_region_after_signature_change_converts(self):
        track = [
            TimeSignature(0, 3, 2, 24, 8),
            NoteOn(0, 0, 55, 100),  # inside 3/4: dropped
            NoteOff(480, 0, 55, 0),
            TimeSignature(960, 4, 2, 24, 8),  # 4/4 from tick 1440
            NoteOn(0, 0, 60, 100),
            NoteOff(480, 0, 60, 0),
            EndOfTrack(0),
        ]
        (roll,) = pr.to_pianoroll(MidiFile(format=0, division=480, tracks=[track]), bars_per_sequence=1)
        assert [o.pitch for o in roll.onsets] == [60]
        assert roll.onsets[0].step == 0  # bar positions restart at the signature change

    def test_sliding_window_stride_one(self):
        bass = [
            ProgramChange(0, 0, 33),
            NoteOn(0, 0, 40, 100), NoteOff(60, 0, 40, 0),
            NoteOn(480 * 4 * 2 - 60, 0, 45, 100), NoteOff(60, 0, 45, 0),  # bar 2
            EndOfTrack(0),
        ]
        rolls = pr.to_pianoroll(MidiFile(format=0, division=480, tracks=[bass]), bars_per_sequence=2)
        assert len(rolls) == 2  # windows [0,1] and [1,2]; both nonempty
        assert {o.pitch for o in rolls[0].onsets} == {40}
        assert {o.pitch for o in rolls[1].onsets} == {45}

    def test_empty_file_raises(self):
        f = MidiFile(format=0, division=480, tracks=[[EndOfTrack(0)]])
        with pytest.raises(pr.NoQuantizableContent):
            pr.to_pianoroll(f)


class TestTrackMap:
    def test_totality(self):
        tm = pr.DEFAULT_TRACK_MAP
        for channel in range(17):
            for program in range(129):
                track = tm.track_for(channel, program)
                assert track is None or 0 <= track < pr.N_TRACKS

    def test_rules(self):
        tm = pr.DEFAULT_TRACK_MAP
        assert tm.track_for(9, 0) == pr.DRUMS
        assert tm.track_for(9, 77) == pr.DRUMS
        assert tm.track_for(0, 33) == pr.BASS
        assert tm.track_for(0, 0) == pr.GUITAR_PIANO
        assert tm.track_for(0, 25) == pr.GUITAR_PIANO
        assert tm.track_for(0, 48) == pr.STRINGS
        assert tm.track_for(0, 121) is None  # sound effects discarded


class TestExport:
    def test_empty_roll_exports_four_instrument_tracks(self):
        f = pr.from_pianoroll(pr.Pianoroll(2, ()))
        assert len(f.tracks) == 5  # conductor + 4 instruments
        for track in f.tracks[1:]:
            assert not any(isinstance(e, NoteOn) for e in track)

    def test_single_onset_spans_eight_steps_of_ticks(self):
        roll = pr.Pianoroll(1, (pr.Onset(0, pr.BASS, 0, 40, 8),))
        f = pr.from_pianoroll(roll)
        bass_track = f.tracks[1 + pr.BASS]
        ons = [e for e in bass_track if isinstance(e, NoteOn)]
        offs = [e for e in bass_track if isinstance(e, NoteOff)]
        assert len(ons) == len(offs) == 1
        assert offs[0].delta == 8 * (480 * 4 // 32)

    def test_round_trip_random_rolls(self, rng):
        for _ in range(60):
            roll = random_roll(rng, n_bars=2, density=0.05)
            back = pr.to_pianoroll(pr.from_pianoroll(roll), bars_per_sequence=roll.n_bars)
            assert back[0] == roll

    def test_quantization_idempotent(self, rng):
        roll = random_roll(rng, n_bars=2, density=0.05)
        f1 = pr.from_pianoroll(roll)
        (r1,) = pr.to_pianoroll(f1, bars_per_sequence=2)[:1]
        f2 = pr.from_pianoroll(r1)
        (r2,) = pr.to_pianoroll(f2, bars_per_sequence=2)[:1]
        assert r1 == r2

    def test_smf_bytes_round_trip(self, rng):
        roll = random_roll(rng, n_bars=2, density=0.05)
        f = pr.from_pianoroll(roll)
        assert parse_smf(write_smf(f)) == f


class TestJsonFixture:
    def test_round_trip(self, rng):
        roll = random_roll(rng)
        assert pr.pianoroll_from_json(pr.pianoroll_to_json(roll)) == roll

    def test_schema_fields(self, rng):
        obj = pr.pianoroll_to_json(random_roll(rng))
        assert set(obj) == {"n_bars", "tracks", "steps", "onsets"}
        assert obj["tracks"] == 4 and obj["steps"] == 32

    def test_wrong_grid_rejected(self):
        with pytest.raises(ValueError):
            pr.pianoroll_from_json({"n_bars": 1, "tracks": 3, "steps": 32, "onsets": []})

    def test_duplicate_onsets_rejected(self):
        with pytest.raises(ValueError):
            pr.Pianoroll(1, (pr.Onset(0, 0, 0, 60, 1), pr.Onset(0, 0, 0, 60, 2)))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            pr.Onset(0, 0, 0, 60, 97)
        with pytest.raises(ValueError):
            pr.Onset(0, 4, 0, 60, 1)
        with pytest.raises(ValueError):
            pr.Pianoroll(1, (pr.Onset(1, 0, 0, 60, 1),))
