"""Chord-level graphs over pianoroll sequences.

Nodes are per-track activations (bar, track, timestep) holding the chord
played there as tokenized (pitch, duration) pairs. Three edge families
connect them, each carrying the timestep distance between endpoints and
stored in both directions:

- track edges between consecutive activations of one track (one edge type
  per track),
- onset edges between co-occurring activations of different tracks,
- next edges from an activation to each other track's earliest strictly
  later activation.

Edges never cross bar boundaries, so each bar forms its own component.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pianoroll import (
    MAX_DURATION,
    N_TRACKS,
    STEPS_PER_BAR,
    Onset,
    Pianoroll,
)

PITCH_VOCAB = 131  # 128 MIDI pitches + SOS/EOS/PAD
SOS_P, EOS_P, PAD_P = 128, 129, 130
DUR_VOCAB = 99  # 96 durations + SOS/EOS/PAD
SOS_D, EOS_D, PAD_D = 96, 97, 98
NOTE_DIM = PITCH_VOCAB + DUR_VOCAB

EDGE_ONSET = N_TRACKS  # track edge types use the track index itself
EDGE_NEXT = N_TRACKS + 1
N_EDGE_TYPES = N_TRACKS + 2


class ChordOverflow(ValueError):
    """More simultaneous notes in one cell than the slot budget allows."""


@dataclass(frozen=True, slots=True)
class GraphNode:
    bar: int
    track: int
    step: int
    #: real notes only, pitch-ascending (pitch_token, duration_token)
    notes: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True, slots=True)
class GraphEdge:
    src: int
    dst: int
    type: int
    delta: int


@dataclass(frozen=True)
class ChordGraph:
    n_bars: int
    sigma: int
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]


def structure_of(roll: Pianoroll) -> np.ndarray:
    """Binary activation tensor of shape (n_bars, tracks, steps); an entry
    is 1 iff at least one note starts there (sustain does not count)."""
    s = np.zeros((roll.n_bars, N_TRACKS, STEPS_PER_BAR), dtype=np.uint8)
    for o in roll.onsets:
        s[o.bar, o.track, o.step] = 1
    return s


def nodes_from_structure(s: np.ndarray) -> list[tuple[int, int, int]]:
    """Active cells as (bar, track, step), sorted — the canonical node order."""
    bars, tracks, steps = np.nonzero(s)
    return sorted(zip(bars.tolist(), tracks.tolist(), steps.tolist()))


def edges_for_nodes(coords: list[tuple[int, int, int]]) -> list[GraphEdge]:
    """Apply the three edge rules to a sorted (bar, track, step) node list.

    Every edge is returned in both directions with the same type and
    distance.
    """
    index = {c: i for i, c in enumerate(coords)}
    half: list[tuple[int, int, int, int]] = []

    by_bar: dict[int, list[tuple[int, int, int]]] = {}
    for c in coords:
        by_bar.setdefault(c[0], []).append(c)

    for bar, cells in by_bar.items():
        by_track: dict[int, list[int]] = {}
        by_step: dict[int, list[int]] = {}
        for _, track, step in cells:
            by_track.setdefault(track, []).append(step)
            by_step.setdefault(step, []).append(track)

        # track edges: consecutive activations of one track
        for track, steps in by_track.items():
            steps.sort()
            for a, b in zip(steps, steps[1:]):
                half.append((index[(bar, track, a)], index[(bar, track, b)], track, b - a))

        # onset edges: all pairs of different tracks at one timestep
        for step, tracks in by_step.items():
            tracks.sort()
            for i, ta in enumerate(tracks):
                for tb in tracks[i + 1 :]:
                    half.append((index[(bar, ta, step)], index[(bar, tb, step)], EDGE_ONSET, 0))

        # next edges: each node to every other track's earliest later activation
        for _, track, step in cells:
            u = index[(bar, track, step)]
            for other, steps in by_track.items():
                if other == track:
                    continue
                later = [t for t in steps if t > step]
                if later:
                    nxt = min(later)
                    half.append((u, index[(bar, other, nxt)], EDGE_NEXT, nxt - step))

    edges = []
    for u, v, etype, delta in half:
        edges.append(GraphEdge(u, v, etype, delta))
        edges.append(GraphEdge(v, u, etype, delta))
    return edges


def topology_from_structure(s: np.ndarray, sigma: int = 16) -> ChordGraph:
    """Graph with nodes and edges derived from a structure tensor and no
    note content (used when decoding against a given structure)."""
    coords = nodes_from_structure(s)
    nodes = tuple(GraphNode(*c) for c in coords)
    return ChordGraph(s.shape[0], sigma, nodes, tuple(edges_for_nodes(coords)))


def build_graph(roll: Pianoroll, sigma: int = 16, on_overflow: str = "truncate") -> ChordGraph:
    """Build the chord-level graph of a pianoroll.

    Each cell may hold at most sigma - 1 notes (one slot is reserved for
    EOS). Overflowing cells keep the sigma - 1 highest pitches, or raise
    ChordOverflow when on_overflow="raise".
    """
    cells: dict[tuple[int, int, int], list[tuple[int, int]]] = {}
    for o in roll.onsets:
        cells.setdefault((o.bar, o.track, o.step), []).append((o.pitch, o.duration - 1))

    coords = sorted(cells)
    nodes = []
    for c in coords:
        notes = sorted(cells[c])
        if len(notes) > sigma - 1:
            if on_overflow == "raise":
                raise ChordOverflow(f"{len(notes)} notes at {c} with sigma={sigma}")
            notes = notes[-(sigma - 1):]
        nodes.append(GraphNode(c[0], c[1], c[2], tuple(notes)))
    return ChordGraph(roll.n_bars, sigma, tuple(nodes), tuple(edges_for_nodes(coords)))


def graph_to_pianoroll(graph: ChordGraph) -> Pianoroll:
    onsets = []
    for node in graph.nodes:
        for pitch_tok, dur_tok in node.notes:
            if pitch_tok <= 127 and dur_tok <= 95:
                onsets.append(Onset(node.bar, node.track, node.step, pitch_tok, dur_tok + 1))
    return Pianoroll(graph.n_bars, tuple(onsets))


def token_slots(graph: ChordGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-node slot token arrays of shape (|V|, sigma): the real notes,
    then the EOS pair, then PAD pairs."""
    n = len(graph.nodes)
    pitch = np.full((n, graph.sigma), PAD_P, dtype=np.int64)
    dur = np.full((n, graph.sigma), PAD_D, dtype=np.int64)
    for i, node in enumerate(graph.nodes):
        for j, (p, d) in enumerate(node.notes):
            pitch[i, j] = p
            dur[i, j] = d
        pitch[i, len(node.notes)] = EOS_P
        dur[i, len(node.notes)] = EOS_D
    return pitch, dur


def content_of(graph: ChordGraph) -> np.ndarray:
    """One-hot content tensor X of shape (|V|, sigma, 230): pitch one-hot
    (131) concatenated with duration one-hot (99) per slot."""
    pitch, dur = token_slots(graph)
    n = len(graph.nodes)
    x = np.zeros((n, graph.sigma, NOTE_DIM), dtype=np.float64)
    rows = np.arange(n)[:, None]
    cols = np.arange(graph.sigma)[None, :]
    x[rows, cols, pitch] = 1.0
    x[rows, cols, PITCH_VOCAB + dur] = 1.0
    return x


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def graph_to_json(graph: ChordGraph) -> dict:
    return {
        "n_bars": graph.n_bars,
        "sigma": graph.sigma,
        "nodes": [
            {"n": n.bar, "i": n.track, "t": n.step, "notes": [list(p) for p in n.notes]}
            for n in graph.nodes
        ],
        "edges": [[e.src, e.dst, e.type, e.delta] for e in graph.edges],
    }


def graph_from_json(obj: dict) -> ChordGraph:
    nodes = tuple(
        GraphNode(n["n"], n["i"], n["t"], tuple((p, d) for p, d in n["notes"]))
        for n in obj["nodes"]
    )
    edges = tuple(GraphEdge(*e) for e in obj["edges"])
    return ChordGraph(int(obj["n_bars"]), int(obj["sigma"]), nodes, edges)


_CORPUS_MAGIC = b"PVGC1\n"


def write_corpus(path: str | Path, graphs: list[ChordGraph]) -> None:
    """Compact binary corpus: magic then length-prefixed little-endian u32s."""
    if not graphs:
        raise ValueError("refusing to write an empty corpus")
    n_bars, sigma = graphs[0].n_bars, graphs[0].sigma
    if any(g.n_bars != n_bars or g.sigma != sigma for g in graphs):
        raise ValueError("corpus sequences must share n_bars and sigma")
    out = bytearray(_CORPUS_MAGIC)
    out += struct.pack("<III", len(graphs), n_bars, sigma)
    for g in graphs:
        out += struct.pack("<II", len(g.nodes), len(g.edges))
        for node in g.nodes:
            out += struct.pack("<IIII", node.bar, node.track, node.step, len(node.notes))
            for p, d in node.notes:
                out += struct.pack("<II", p, d)
        for e in g.edges:
            out += struct.pack("<IIII", e.src, e.dst, e.type, e.delta)
    Path(path).write_bytes(bytes(out))


def read_corpus(path: str | Path) -> list[ChordGraph]:
    data = Path(path).read_bytes()
    if data[: len(_CORPUS_MAGIC)] != _CORPUS_MAGIC:
        raise ValueError(f"{path}: not a polyvae corpus file")
    pos = len(_CORPUS_MAGIC)

    def read(n: int) -> tuple[int, ...]:
        nonlocal pos
        vals = struct.unpack_from(f"<{n}I", data, pos)
        pos += 4 * n
        return vals

    count, n_bars, sigma = read(3)
    graphs = []
    for _ in range(count):
        n_nodes, n_edges = read(2)
        nodes = []
        for _ in range(n_nodes):
            bar, track, step, n_notes = read(4)
            notes = tuple((read(2)) for _ in range(n_notes))
            nodes.append(GraphNode(bar, track, step, tuple((p, d) for p, d in notes)))
        edges = tuple(GraphEdge(*read(4)) for _ in range(n_edges))
        graphs.append(ChordGraph(n_bars, sigma, tuple(nodes), edges))
    return graphs


def delta_bin(delta: int, cap: int = STEPS_PER_BAR) -> int:
    """Distance-bin index used by the model's edge conditioning."""
    return min(delta, cap)
