"""Generation metrics over corpora of pianoroll sequences.

- EB: percentage of empty bars, per track.
- UPC: mean number of distinct pitch classes per non-empty bar, for each
  non-drum track.
- DP: percentage of drum onsets that fall on the 16-position grid (every
  other timestep of the 32-step bar).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import graph as G
from .pianoroll import DRUMS, N_TRACKS, STEPS_PER_BAR, TRACK_NAMES, Pianoroll, load_pianoroll


class EmptyCorpus(ValueError):
    pass


class NoNonEmptyBars(ValueError):
    pass


class NoDrumNotes(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    eb: dict[str, float]  # per-track percentage
    upc: dict[str, float | None]  # per non-drum track; None when no non-empty bars
    dp: float | None  # None when the corpus has no drum onsets
    n_sequences: int
    n_bars: int

    def to_json(self) -> dict:
        return {
            "eb": self.eb,
            "upc": self.upc,
            "dp": self.dp,
            "n_sequences": self.n_sequences,
            "n_bars": self.n_bars,
        }

    def to_table(self) -> str:
        rows = [f"{'metric':<14}{'track':<14}{'value':>10}"]
        for name in TRACK_NAMES:
            rows.append(f"{'EB %':<14}{name:<14}{self.eb[name]:>10.2f}")
        for name in TRACK_NAMES[1:]:
            value = self.upc[name]
            shown = f"{value:.3f}" if value is not None else "n/a"
            rows.append(f"{'UPC':<14}{name:<14}{shown:>10}")
        shown = f"{self.dp:.2f}" if self.dp is not None else "n/a"
        rows.append(f"{'DP %':<14}{'drums':<14}{shown:>10}")
        rows.append(f"{'sequences':<14}{'':<14}{self.n_sequences:>10}")
        rows.append(f"{'bars':<14}{'':<14}{self.n_bars:>10}")
        return "\n".join(rows)


def _require(corpus: list[Pianoroll]) -> None:
    if not corpus:
        raise EmptyCorpus("metrics need at least one sequence")


def empty_bars(corpus: list[Pianoroll], track: int) -> float:
    """100 * (bars with no onset in `track`) / (total bars)."""
    _require(corpus)
    total = sum(roll.n_bars for roll in corpus)
    empty = 0
    for roll in corpus:
        active = {o.bar for o in roll.onsets if o.track == track}
        empty += roll.n_bars - len(active)
    return 100.0 * empty / total


def used_pitch_classes(corpus: list[Pianoroll], track: int) -> float:
    """Mean count of distinct pitch classes per non-empty bar of `track`."""
    _require(corpus)
    if track == DRUMS:
        raise ValueError("UPC is defined for non-drum tracks")
    counts: list[int] = []
    for roll in corpus:
        classes: dict[int, set[int]] = {}
        for o in roll.onsets:
            if o.track == track:
                classes.setdefault(o.bar, set()).add(o.pitch % 12)
        counts.extend(len(v) for v in classes.values())
    if not counts:
        raise NoNonEmptyBars(f"track {track} has no non-empty bars")
    return sum(counts) / len(counts)


def drum_patterns(corpus: list[Pianoroll]) -> float:
    """100 * (drum onsets on even timesteps) / (all drum onsets)."""
    _require(corpus)
    total = 0
    aligned = 0
    for roll in corpus:
        for o in roll.onsets:
            if o.track == DRUMS:
                total += 1
                aligned += 1 - (o.step % 2)
    if total == 0:
        raise NoDrumNotes("corpus has no drum onsets")
    return 100.0 * aligned / total


def report(corpus: list[Pianoroll]) -> MetricsReport:
    _require(corpus)
    eb = {TRACK_NAMES[t]: empty_bars(corpus, t) for t in range(N_TRACKS)}
    upc: dict[str, float | None] = {}
    for t in range(1, N_TRACKS):
        try:
            upc[TRACK_NAMES[t]] = used_pitch_classes(corpus, t)
        except NoNonEmptyBars:
            upc[TRACK_NAMES[t]] = None
    try:
        dp: float | None = drum_patterns(corpus)
    except NoDrumNotes:
        dp = None
    return MetricsReport(
        eb=eb,
        upc=upc,
        dp=dp,
        n_sequences=len(corpus),
        n_bars=sum(r.n_bars for r in corpus),
    )


def load_corpus(path: str | Path) -> list[Pianoroll]:
    """A directory of pianoroll JSON fixtures, or a binary graph corpus."""
    path = Path(path)
    if path.is_dir():
        rolls = [load_pianoroll(p) for p in sorted(path.glob("*.json"))]
        if not rolls:
            raise EmptyCorpus(f"no pianoroll JSON files in {path}")
        return rolls
    return [G.graph_to_pianoroll(g) for g in G.read_corpus(path)]


def save_report(path: str | Path, rep: MetricsReport) -> None:
    Path(path).write_text(json.dumps(rep.to_json(), indent=2), encoding="utf-8")
