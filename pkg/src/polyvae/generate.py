"""Generation-time behaviors: free sampling, latent interpolation,
structure-conditioned decoding and embedding PCA export.

Slot decoding is greedy: slots are read in order and the first slot whose
pitch or duration argmax is a special token (EOS/SOS/PAD) ends the chord;
duplicate pitches within a node keep the longest duration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as G
from .model import DecodeResult, GraphBatch, Model, binarize
from .nn import Tensor
from .nn.tensor import no_grad
from .pianoroll import Onset, Pianoroll


@dataclass(frozen=True)
class GeneratedSequence:
    roll: Pianoroll
    structure: np.ndarray  # (N, I, T) uint8
    empty: bool = False  # True when a conditioned structure had no nodes


def _decode_slots(result: DecodeResult, n_bars: int, rng: np.random.Generator | None = None) -> Pianoroll:
    """Turn per-slot distributions into a pianoroll (argmax by default,
    categorical sampling when an rng is passed)."""
    onsets: dict[tuple[int, int, int, int], int] = {}
    pitch_probs, dur_probs = result.pitch_probs, result.dur_probs
    for v, (bar, track, step) in enumerate(result.batch.node_coords):
        for slot in range(pitch_probs.shape[1]):
            if rng is None:
                p_tok = int(pitch_probs[v, slot].argmax())
                d_tok = int(dur_probs[v, slot].argmax())
            else:
                p_tok = int(rng.choice(G.PITCH_VOCAB, p=pitch_probs[v, slot]))
                d_tok = int(rng.choice(G.DUR_VOCAB, p=dur_probs[v, slot]))
            if p_tok > 127 or d_tok > 95:
                break
            key = (bar, track, step, p_tok)
            onsets[key] = max(onsets.get(key, 0), d_tok + 1)
    return Pianoroll(
        n_bars, tuple(Onset(*key, dur) for key, dur in onsets.items())
    )


def _decode_z(model: Model, z: np.ndarray, threshold: float) -> GeneratedSequence:
    result = model.decode(Tensor(z[None, :]), threshold=threshold)
    roll = _decode_slots(result, model.config.n_bars)
    return GeneratedSequence(roll=roll, structure=result.structure[0])


def sample(model: Model, n: int, seed: int, threshold: float = 0.5) -> list[GeneratedSequence]:
    """Decode n sequences from z ~ N(0, I)."""
    model.train_mode(False)
    rng = np.random.default_rng(seed)
    out = []
    with no_grad():
        for _ in range(n):
            z = rng.standard_normal(model.config.latent_dim)
            out.append(_decode_z(model, z, threshold))
    return out


def interpolate(
    model: Model, z_a: np.ndarray, z_b: np.ndarray, steps: int, threshold: float = 0.5
) -> list[GeneratedSequence]:
    """Decode the linear path from z_a to z_b inclusive; endpoints decode
    the exact input codes."""
    if steps < 2:
        raise ValueError("interpolation needs at least 2 steps")
    model.train_mode(False)
    out = []
    with no_grad():
        for k in range(steps):
            if k == 0:
                z = np.asarray(z_a, dtype=np.float64)
            elif k == steps - 1:
                z = np.asarray(z_b, dtype=np.float64)
            else:
                z = z_a + (k / (steps - 1)) * (np.asarray(z_b) - np.asarray(z_a))
            out.append(_decode_z(model, np.asarray(z, dtype=np.float64), threshold))
    return out


def conditioned_generate(model: Model, z: np.ndarray, edited_structure: np.ndarray) -> GeneratedSequence:
    """Decode content against a user-edited structure, ignoring the
    structure decoder entirely; the content latent is kept."""
    cfg = model.config
    s = np.asarray(edited_structure)
    if s.shape != (cfg.n_bars, cfg.n_tracks, cfg.steps_per_bar):
        raise ValueError(f"structure shape {s.shape} does not match the model")
    model.train_mode(False)
    with no_grad():
        _, z_c = model.split_latent(Tensor(np.asarray(z, dtype=np.float64)[None, :]))
        p_probs, d_probs, batch = model.decode_content(z_c, s[None].astype(np.float64))
    result = DecodeResult(
        structure_probs=s[None].astype(np.float64),
        structure=s[None].astype(np.uint8),
        pitch_probs=p_probs.data,
        dur_probs=d_probs.data,
        batch=batch,
    )
    roll = _decode_slots(result, cfg.n_bars)
    return GeneratedSequence(roll=roll, structure=s.astype(np.uint8), empty=batch.n_nodes == 0)


def generated_structure(model: Model, z: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """The binarized structure the model itself decodes for z."""
    model.train_mode(False)
    with no_grad():
        z_s, _ = model.split_latent(Tensor(np.asarray(z, dtype=np.float64)[None, :]))
        return binarize(model.decode_structure(z_s).data, threshold)[0]


# ---------------------------------------------------------------------------
# embedding PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingProjection:
    labels: list[str]
    coordinates: np.ndarray  # (n, k)
    explained_variance: np.ndarray  # (k,)
    degenerate: bool = False  # rank < requested components


class DegenerateRank(ValueError):
    pass


def embedding_pca(rows: np.ndarray, labels: list[str], k: int = 2) -> EmbeddingProjection:
    """Project rows onto their top-k principal components (via SVD of the
    centered matrix); explained-variance ratios are relative to the total
    variance."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] < k + 1:
        raise ValueError(f"need at least {k + 1} rows for k={k}")
    centered = rows - rows.mean(axis=0, keepdims=True)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    total = float((svals**2).sum())
    rank = int((svals > svals[0] * 1e-12).sum()) if svals.size and svals[0] > 0 else 0
    degenerate = rank < k
    k_eff = min(k, max(rank, 1))
    coords = centered @ vt[:k_eff].T
    ratios = (svals[:k_eff] ** 2) / total if total > 0 else np.zeros(k_eff)
    return EmbeddingProjection(
        labels=list(labels),
        coordinates=coords,
        explained_variance=ratios,
        degenerate=degenerate,
    )


_NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def _pitch_name(pitch: int) -> str:
    return f"{_NOTE_NAMES[pitch % 12]}{pitch // 12 - 1}"


def pitch_embedding_pca(model: Model, k: int = 3, drums: bool = False) -> EmbeddingProjection:
    table = model.params["enc.pitch_emb_drum" if drums else "enc.pitch_emb"].data
    return embedding_pca(table[:128], [_pitch_name(p) for p in range(128)], k)


def duration_embedding_pca(model: Model, k: int = 2, max_duration: int = 96) -> EmbeddingProjection:
    table = model.params["enc.dur_emb"].data[:max_duration]
    return embedding_pca(table, [str(d + 1) for d in range(max_duration)], k)


def chord_embedding_pca(model: Model, k: int = 3) -> EmbeddingProjection:
    """Chord-encoder outputs for every major triad with roots from C1 to
    B8, one-beat durations."""
    cfg = model.config
    model.train_mode(False)
    roots = list(range(24, 120))  # C1..B8
    labels = [_pitch_name(r) for r in roots]
    rows = []
    one_beat = cfg.steps_per_bar // 4
    with no_grad():
        for root in roots:
            pitches = [root, root + 4, root + 7]
            roll = Pianoroll(
                cfg.n_bars,
                tuple(Onset(0, 1, 0, min(p, 127), one_beat) for p in pitches),
            )
            graph = G.build_graph(roll, sigma=cfg.sigma)
            batch = GraphBatch.from_graphs([graph], cfg)
            h0 = model._apply_linear("enc.chord", model._note_embeddings(batch))
            rows.append(h0.data[0])
    return embedding_pca(np.stack(rows), labels, k)


def save_projection_csv(path: str | Path, proj: EmbeddingProjection) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        k = proj.coordinates.shape[1]
        writer.writerow(["label"] + [f"c{i + 1}" for i in range(k)])
        for label, row in zip(proj.labels, proj.coordinates):
            writer.writerow([label] + [f"{v:.10g}" for v in row])
