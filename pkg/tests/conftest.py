"""Shared builders for random rolls, graphs and small models."""

from __future__ import annotations

import numpy as np
import pytest

from polyvae import graph as G
from polyvae import pianoroll as pr
from polyvae.model import Model, ModelConfig


def random_roll(
    rng: np.random.Generator,
    n_bars: int = 2,
    density: float = 0.08,
    max_notes_per_cell: int = 3,
    max_duration: int = pr.MAX_DURATION,
) -> pr.Pianoroll:
    """A random in-range pianoroll with at least one onset.

    Same-(track, pitch) notes never overlap in time: overlapping notes of
    one pitch on one MIDI channel are ambiguous in the wire format, so
    the MIDI round-trip identity is scoped to this domain.
    """
    onsets: dict[tuple, pr.Onset] = {}
    busy_until: dict[tuple[int, int], int] = {}
    for bar in range(n_bars):
        for track in range(pr.N_TRACKS):
            for step in range(pr.STEPS_PER_BAR):
                if rng.random() >= density:
                    continue
                for _ in range(int(rng.integers(1, max_notes_per_cell + 1))):
                    pitch = int(rng.integers(0, 128))
                    start = bar * pr.STEPS_PER_BAR + step
                    if busy_until.get((track, pitch), -1) > start:
                        continue
                    dur = int(rng.integers(1, max_duration + 1))
                    busy_until[(track, pitch)] = start + dur
                    onsets[(bar, track, step, pitch)] = pr.Onset(bar, track, step, pitch, dur)
    if not onsets:
        onsets[(0, 0, 0, 60)] = pr.Onset(0, 0, 0, 60, 4)
    return pr.Pianoroll(n_bars, tuple(onsets.values()))


def musical_roll(rng: np.random.Generator, n_bars: int = 2) -> pr.Pianoroll:
    """A sparser, song-like roll: drums on the beat grid, few chords."""
    onsets: dict[tuple, pr.Onset] = {}
    for bar in range(n_bars):
        for step in range(0, pr.STEPS_PER_BAR, 4):
            if rng.random() < 0.6:
                pitch = int(rng.choice((36, 38, 42, 46)))
                onsets[(bar, 0, step, pitch)] = pr.Onset(bar, 0, step, pitch, 1)
        for step in range(0, pr.STEPS_PER_BAR, 8):
            if rng.random() < 0.7:
                pitch = int(rng.integers(28, 52))
                onsets[(bar, 1, step, pitch)] = pr.Onset(bar, 1, step, pitch, int(rng.integers(4, 9)))
            if rng.random() < 0.6:
                root = int(rng.integers(48, 72))
                for offset in (0, 4, 7):
                    onsets[(bar, 2, step, root + offset)] = pr.Onset(
                        bar, 2, step, root + offset, int(rng.integers(4, 17))
                    )
        if rng.random() < 0.7:
            pitch = int(rng.integers(60, 84))
            onsets[(bar, 3, 0, pitch)] = pr.Onset(bar, 3, 0, pitch, int(rng.integers(8, 33)))
    if not onsets:
        onsets[(0, 0, 0, 36)] = pr.Onset(0, 0, 0, 36, 1)
    return pr.Pianoroll(n_bars, tuple(onsets.values()))


def synthetic_corpus(seed: int, n_sequences: int, n_bars: int = 2, sigma: int = 8) -> list[G.ChordGraph]:
    rng = np.random.default_rng(seed)
    return [G.build_graph(musical_roll(rng, n_bars), sigma=sigma) for _ in range(n_sequences)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model() -> Model:
    return Model(ModelConfig(n_bars=2, latent_dim=8, gcn_layers=2, sigma=4), seed=0)
