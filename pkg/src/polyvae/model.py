"""The hierarchical structure/content VAE over chord-level graphs.

Four submodules around a shared latent space:

- content encoder: note embeddings -> chord embeddings -> L graph
  convolutions -> per-bar attention readout -> bar compressor,
- structure encoder: per-bar CNN over the activation grid -> dense layers
  -> bar concatenation,
- structure decoder: mirror of the structure encoder with nearest
  upsampling, ending in per-cell probabilities,
- content decoder: per-bar seeds on the nodes of a given structure -> L
  graph convolutions -> per-slot pitch/duration distributions.

Encoding combines the two codes into mu/log-variance heads; decoding
splits the latent with a linear layer and generates structure first, then
content conditioned on it. Drum and non-drum pitches use separate
embedding tables and output layers throughout.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graph as G
from .nn import BatchNormState, Parameter, Tensor, ops
from .nn.optim import load_checkpoint, save_checkpoint
from .pianoroll import N_TRACKS, STEPS_PER_BAR

DRUM_TRACK = 0


class ConfigMismatch(ValueError):
    """Input was built under a different model configuration."""


@dataclass(frozen=True)
class ModelConfig:
    n_bars: int
    latent_dim: int = 512
    gcn_layers: int = 8
    sigma: int = 16
    conv_channels: tuple[int, int] = (16, 32)
    n_tracks: int = N_TRACKS
    steps_per_bar: int = STEPS_PER_BAR

    def __post_init__(self) -> None:
        if self.latent_dim % 2:
            raise ValueError("latent_dim must be even (representations split in halves)")
        if self.gcn_layers < 1 or self.n_bars < 1 or self.sigma < 2:
            raise ValueError("invalid model configuration")

    @property
    def dist_bins(self) -> int:
        return self.steps_per_bar + 1

    @property
    def conv_flat(self) -> int:
        return self.conv_channels[1] * (self.n_tracks // 4) * (self.steps_per_bar // 4)

    def to_json(self) -> dict:
        return {
            "n_bars": self.n_bars,
            "latent_dim": self.latent_dim,
            "gcn_layers": self.gcn_layers,
            "sigma": self.sigma,
            "conv_channels": list(self.conv_channels),
            "n_tracks": self.n_tracks,
            "steps_per_bar": self.steps_per_bar,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        obj["conv_channels"] = tuple(obj.get("conv_channels", (16, 32)))
        return cls(**obj)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class LatentCode:
    mu: Tensor
    logvar: Tensor
    z: Tensor


@dataclass
class DecodeResult:
    """Everything the decoder produces for a latent batch."""

    structure_probs: np.ndarray  # (B, N, I, T)
    structure: np.ndarray  # binarized (B, N, I, T)
    pitch_probs: np.ndarray  # (V, sigma, 131)
    dur_probs: np.ndarray  # (V, sigma, 99)
    batch: "GraphBatch"  # topology the content was decoded on


# ---------------------------------------------------------------------------
# batching
# ---------------------------------------------------------------------------

def _one_hot(tokens: np.ndarray, vocab: int) -> np.ndarray:
    out = np.zeros(tokens.shape + (vocab,), dtype=np.float64)
    np.put_along_axis(out, tokens[..., None], 1.0, axis=-1)
    return out


@dataclass
class GraphBatch:
    """A batch of graphs tensorized for the network.

    Nodes of all items are concatenated item-major, each item's nodes in
    the canonical (bar, track, step) order. ``edges`` holds, per edge
    type, (src, dst, distance-bin) index arrays.
    """

    n_items: int
    n_bars: int
    node_item: np.ndarray
    node_bar_slot: np.ndarray  # item * n_bars + bar
    node_track: np.ndarray
    edges: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    inv_degree: np.ndarray  # (V, 1), 1 / max(in-degree, 1)
    structure: np.ndarray  # (B, N, I, T) float64
    pitch_tokens: np.ndarray | None = None  # (V, sigma)
    dur_tokens: np.ndarray | None = None
    node_coords: list[tuple[int, int, int]] = field(default_factory=list)
    _pitch_onehot: np.ndarray | None = None
    _dur_onehot: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_item)

    @property
    def pitch_onehot(self) -> np.ndarray:
        if self._pitch_onehot is None:
            self._pitch_onehot = _one_hot(self.pitch_tokens, G.PITCH_VOCAB)
        return self._pitch_onehot

    @property
    def dur_onehot(self) -> np.ndarray:
        if self._dur_onehot is None:
            self._dur_onehot = _one_hot(self.dur_tokens, G.DUR_VOCAB)
        return self._dur_onehot

    @classmethod
    def from_graphs(cls, graphs: list[G.ChordGraph], config: ModelConfig) -> "GraphBatch":
        for g in graphs:
            if g.sigma != config.sigma or g.n_bars != config.n_bars:
                raise ConfigMismatch(
                    f"graph built with sigma={g.sigma}, n_bars={g.n_bars}; "
                    f"model expects sigma={config.sigma}, n_bars={config.n_bars}"
                )
        batch = cls._assemble(
            [[(n.bar, n.track, n.step) for n in g.nodes] for g in graphs],
            [g.edges for g in graphs],
            config,
        )
        pitch = [G.token_slots(g) for g in graphs]
        if batch.n_nodes:
            batch.pitch_tokens = np.concatenate([p for p, _ in pitch], axis=0)
            batch.dur_tokens = np.concatenate([d for _, d in pitch], axis=0)
        else:
            batch.pitch_tokens = np.zeros((0, config.sigma), dtype=np.int64)
            batch.dur_tokens = np.zeros((0, config.sigma), dtype=np.int64)
        return batch

    @classmethod
    def from_structures(cls, structures: np.ndarray, config: ModelConfig) -> "GraphBatch":
        coords = [G.nodes_from_structure(s) for s in structures]
        edges = [G.edges_for_nodes(c) for c in coords]
        return cls._assemble(coords, edges, config, structures)

    @classmethod
    def _assemble(cls, coords, edge_lists, config, structures=None) -> "GraphBatch":
        n_items = len(coords)
        n_bars = config.n_bars
        node_item, node_bar_slot, node_track = [], [], []
        all_coords: list[tuple[int, int, int]] = []
        type_src: list[list[int]] = [[] for _ in range(G.N_EDGE_TYPES)]
        type_dst: list[list[int]] = [[] for _ in range(G.N_EDGE_TYPES)]
        type_bin: list[list[int]] = [[] for _ in range(G.N_EDGE_TYPES)]
        offset = 0
        for item, (item_coords, item_edges) in enumerate(zip(coords, edge_lists)):
            for bar, track, step in item_coords:
                node_item.append(item)
                node_bar_slot.append(item * n_bars + bar)
                node_track.append(track)
                all_coords.append((bar, track, step))
            for e in item_edges:
                type_src[e.type].append(offset + e.src)
                type_dst[e.type].append(offset + e.dst)
                type_bin[e.type].append(G.delta_bin(e.delta, config.steps_per_bar))
            offset += len(item_coords)

        edges = [
            (
                np.asarray(type_src[k], dtype=np.int64),
                np.asarray(type_dst[k], dtype=np.int64),
                np.asarray(type_bin[k], dtype=np.int64),
            )
            for k in range(G.N_EDGE_TYPES)
        ]
        degree = np.zeros(offset, dtype=np.float64)
        for _, dst, _ in edges:
            np.add.at(degree, dst, 1.0)
        if structures is None:
            structures = np.zeros(
                (n_items, n_bars, config.n_tracks, config.steps_per_bar), dtype=np.float64
            )
            for slot, (bar, track, step) in zip(node_bar_slot, all_coords):
                structures[slot // n_bars, bar, track, step] = 1.0
        return cls(
            n_items=n_items,
            n_bars=n_bars,
            node_item=np.asarray(node_item, dtype=np.int64),
            node_bar_slot=np.asarray(node_bar_slot, dtype=np.int64),
            node_track=np.asarray(node_track, dtype=np.int64),
            edges=edges,
            inv_degree=(1.0 / np.maximum(degree, 1.0))[:, None],
            structure=np.asarray(structures, dtype=np.float64),
            node_coords=all_coords,
        )


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------

class Model:
    def __init__(self, config: ModelConfig, seed: int = 0) -> None:
        self.config = config
        self.params: dict[str, Parameter] = {}
        self.bn_states: dict[str, BatchNormState] = {}
        self.training = False
        self.bn_enabled = True  # test hook: residual-identity checks bypass BN
        self._update_stats = True
        # single-entry topology memo; rebuilding edges for an identical
        # structure is pure, so a stale overwrite under races is harmless
        self._topology_memo: tuple[bytes, GraphBatch] | None = None
        self._init_params(np.random.default_rng(seed))

    # -- parameter management -------------------------------------------------

    def _param(self, name: str, data: np.ndarray) -> Parameter:
        p = Parameter(name, data)
        self.params[name] = p
        return p

    def _linear(self, rng, name: str, out_dim: int, in_dim: int) -> None:
        scale = 1.0 / np.sqrt(in_dim)
        self._param(f"{name}.w", rng.normal(0.0, scale, (out_dim, in_dim)))
        self._param(f"{name}.b", np.zeros(out_dim))

    def _conv(self, rng, name: str, out_c: int, in_c: int, k: int = 3) -> None:
        scale = 1.0 / np.sqrt(in_c * k * k)
        self._param(f"{name}.k", rng.normal(0.0, scale, (out_c, in_c, k, k)))
        # nonzero bias init: with zero biases and binary grids, whole
        # activation planes sit exactly on the relu kink, a singular point
        self._param(f"{name}.b", rng.uniform(-scale, scale, out_c))

    def _bn_site(self, name: str, channels: int) -> None:
        self._param(f"{name}.gamma", np.ones(channels))
        self._param(f"{name}.beta", np.zeros(channels))
        self.bn_states[name] = BatchNormState(channels)

    def _init_params(self, rng) -> None:
        cfg = self.config
        d, half = cfg.latent_dim, cfg.latent_dim // 2
        c1, c2 = cfg.conv_channels

        emb_scale = 1.0 / np.sqrt(half)
        self._param("enc.pitch_emb_drum", rng.normal(0.0, emb_scale, (G.PITCH_VOCAB, half)))
        self._param("enc.pitch_emb", rng.normal(0.0, emb_scale, (G.PITCH_VOCAB, half)))
        self._param("enc.dur_emb", rng.normal(0.0, emb_scale, (G.DUR_VOCAB, half)))
        self._linear(rng, "enc.chord", d, cfg.sigma * d)
        for side in ("enc", "dec"):
            for layer in range(cfg.gcn_layers):
                base = f"{side}.gcn.{layer}"
                self._linear(rng, f"{base}.self", d, d)
                for k in range(G.N_EDGE_TYPES):
                    self._param(
                        f"{base}.type.{k}.w", rng.normal(0.0, 1.0 / np.sqrt(d), (d, d))
                    )
                self._param(f"{base}.dist", rng.normal(0.0, emb_scale, (cfg.dist_bins, d)))
                self._bn_site(f"{base}.bn", d)
        self._linear(rng, "enc.readout.gate", d, d)
        self._linear(rng, "enc.readout.value", d, d)
        self._linear(rng, "enc.compress", d, cfg.n_bars * d)

        self._conv(rng, "enc.struct.conv1", c1, 1)
        self._bn_site("enc.struct.bn1", c1)
        self._conv(rng, "enc.struct.conv2", c2, c1)
        self._bn_site("enc.struct.bn2", c2)
        self._linear(rng, "enc.struct.fc1", d, cfg.conv_flat)
        self._linear(rng, "enc.struct.fc2", d, d)
        self._linear(rng, "enc.struct.compress", d, cfg.n_bars * d)

        self._linear(rng, "enc.combine", d, 2 * d)
        self._linear(rng, "enc.mu", d, d)
        self._linear(rng, "enc.logvar", d, d)

        self._linear(rng, "dec.split", 2 * d, d)
        self._linear(rng, "dec.struct.decompress", cfg.n_bars * d, d)
        self._linear(rng, "dec.struct.fc1", d, d)
        self._linear(rng, "dec.struct.fc2", cfg.conv_flat, d)
        self._conv(rng, "dec.struct.conv1", c1, c2)
        self._bn_site("dec.struct.bn1", c1)
        self._conv(rng, "dec.struct.conv2", 1, c1)
        self._linear(rng, "dec.content.decompress", cfg.n_bars * d, d)
        self._linear(rng, "dec.chord", cfg.sigma * d, d)
        self._linear(rng, "dec.pitch_drum", G.PITCH_VOCAB, half)
        self._linear(rng, "dec.pitch", G.PITCH_VOCAB, half)
        self._linear(rng, "dec.dur", G.DUR_VOCAB, half)

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def train_mode(self, flag: bool = True) -> None:
        self.training = flag

    # -- small layer helpers ---------------------------------------------------

    def _apply_linear(self, name: str, x: Tensor) -> Tensor:
        return ops.linear(x, self.params[f"{name}.w"], self.params[f"{name}.b"])

    def _apply_conv(self, name: str, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.params[f"{name}.k"], self.params[f"{name}.b"], pad=1)

    def _apply_bn(self, name: str, x: Tensor) -> Tensor:
        if not self.bn_enabled:
            return x
        return ops.batchnorm(
            x,
            self.params[f"{name}.gamma"],
            self.params[f"{name}.beta"],
            self.bn_states[name],
            training=self.training,
            update_stats=self._update_stats and self.training,
        )

    def _split_by_drums(
        self, rows: Tensor, track_of_row: np.ndarray, drum_name: str, other_name: str,
        apply,
    ) -> Tensor:
        """Apply drum/non-drum specific transforms row-wise and reassemble."""
        drum_rows = np.nonzero(track_of_row == DRUM_TRACK)[0]
        other_rows = np.nonzero(track_of_row != DRUM_TRACK)[0]
        n = rows.shape[0]
        parts = []
        if len(drum_rows):
            parts.append(ops.scatter_rows(apply(drum_name, rows, drum_rows), drum_rows, n))
        if len(other_rows):
            parts.append(ops.scatter_rows(apply(other_name, rows, other_rows), other_rows, n))
        if not parts:
            raise ValueError("empty row set")
        out = parts[0]
        for p in parts[1:]:
            out = ops.add(out, p)
        return out

    # -- content encoder --------------------------------------------------------

    def _note_embeddings(self, batch: GraphBatch) -> Tensor:
        """(V, sigma * d) note vectors: pitch half (table chosen by track)
        concatenated with the duration half."""
        def embed_pitch(name: str, _rows: Tensor, idx: np.ndarray) -> Tensor:
            return ops.embed(self.params[name], batch.pitch_tokens[idx])

        v = batch.n_nodes
        dummy = Tensor(np.zeros((v, 1)))
        pitch = self._split_by_drums(
            dummy, batch.node_track, "enc.pitch_emb_drum", "enc.pitch_emb", embed_pitch
        )
        dur = ops.embed(self.params["enc.dur_emb"], batch.dur_tokens)
        notes = ops.concat([pitch, dur], axis=2)
        return ops.reshape(notes, (v, self.config.sigma * self.config.latent_dim))

    def _gcn(self, side: str, h: Tensor, batch: GraphBatch) -> Tensor:
        inv_deg = Tensor(batch.inv_degree)
        for layer in range(self.config.gcn_layers):
            base = f"{side}.gcn.{layer}"
            agg = None
            dist_table = self.params[f"{base}.dist"]
            for etype in range(G.N_EDGE_TYPES):
                src, dst, dbin = batch.edges[etype]
                if not len(src):
                    continue
                payload = ops.add(ops.take_rows(h, src), ops.embed(dist_table, dbin))
                msg = ops.linear(payload, self.params[f"{base}.type.{etype}.w"])
                contrib = ops.scatter_rows(msg, dst, batch.n_nodes)
                agg = contrib if agg is None else ops.add(agg, contrib)
            pre = self._apply_linear(f"{base}.self", h)
            if agg is not None:
                pre = ops.add(pre, ops.mul(agg, inv_deg))
            h = ops.add(self._apply_bn(f"{base}.bn", ops.relu(pre)), h)
        return h

    def _readout(self, h: Tensor, batch: GraphBatch) -> Tensor:
        """Soft-attention gated sum per bar -> (B * n_bars, d); empty bars
        stay zero."""
        gate = ops.sigmoid(self._apply_linear("enc.readout.gate", h))
        value = self._apply_linear("enc.readout.value", h)
        gated = ops.mul(gate, value)
        return ops.scatter_rows(gated, batch.node_bar_slot, batch.n_items * batch.n_bars)

    def _compress_bars(self, bars: Tensor, n_items: int) -> Tensor:
        flat = ops.reshape(bars, (n_items, self.config.n_bars * self.config.latent_dim))
        return self._apply_linear("enc.compress", flat)

    def encode_content(self, batch: GraphBatch) -> Tensor:
        if batch.pitch_tokens is None:
            raise ConfigMismatch("batch has no content tokens")
        if batch.n_nodes == 0:
            bars = Tensor(np.zeros((batch.n_items * batch.n_bars, self.config.latent_dim)))
        else:
            h0 = self._apply_linear("enc.chord", self._note_embeddings(batch))
            h = self._gcn("enc", h0, batch)
            bars = self._readout(h, batch)
        return self._compress_bars(bars, batch.n_items)

    # -- structure encoder -------------------------------------------------------

    def encode_structure_bars(self, structures: np.ndarray) -> Tensor:
        """Per-bar embeddings (B * n_bars, d) from (B, N, I, T) tensors."""
        cfg = self.config
        b = structures.shape[0]
        x = Tensor(
            np.asarray(structures, dtype=np.float64).reshape(
                b * cfg.n_bars, 1, cfg.n_tracks, cfg.steps_per_bar
            )
        )
        x = ops.maxpool2d(self._apply_bn("enc.struct.bn1", ops.relu(self._apply_conv("enc.struct.conv1", x))), 2)
        x = ops.maxpool2d(self._apply_bn("enc.struct.bn2", ops.relu(self._apply_conv("enc.struct.conv2", x))), 2)
        x = ops.reshape(x, (b * cfg.n_bars, cfg.conv_flat))
        x = ops.relu(self._apply_linear("enc.struct.fc1", x))
        return self._apply_linear("enc.struct.fc2", x)

    def encode_structure(self, structures: np.ndarray) -> Tensor:
        if structures.shape[1:] != (self.config.n_bars, self.config.n_tracks, self.config.steps_per_bar):
            raise ops.ShapeMismatch("encode_structure", structures.shape)
        bars = self.encode_structure_bars(structures)
        flat = ops.reshape(bars, (structures.shape[0], self.config.n_bars * self.config.latent_dim))
        return self._apply_linear("enc.struct.compress", flat)

    # -- latent heads --------------------------------------------------------------

    def encode(self, batch: GraphBatch, eps: np.ndarray | None = None) -> LatentCode:
        """q(z | g): eval mode returns z = mu; training mode reparameterizes
        with the provided (or freshly sampled) standard-normal eps."""
        z_c = self.encode_content(batch)
        z_s = self.encode_structure(batch.structure)
        z_g = self._apply_linear("enc.combine", ops.concat([z_s, z_c], axis=1))
        mu = self._apply_linear("enc.mu", z_g)
        logvar = ops.clamp(self._apply_linear("enc.logvar", z_g), -10.0, 10.0)
        if self.training:
            if eps is None:
                eps = np.random.default_rng().standard_normal(mu.shape)
            std = ops.exp(ops.scale(logvar, 0.5))
            z = ops.add(mu, ops.mul(std, Tensor(eps)))
        else:
            z = mu
        return LatentCode(mu=mu, logvar=logvar, z=z)

    def split_latent(self, z: Tensor) -> tuple[Tensor, Tensor]:
        d = self.config.latent_dim
        both = self._apply_linear("dec.split", z)
        return ops.narrow(both, 1, 0, d), ops.narrow(both, 1, d, d)

    # -- structure decoder -----------------------------------------------------------

    def decode_structure(self, z_s: Tensor) -> Tensor:
        cfg = self.config
        b = z_s.shape[0]
        c1, c2 = cfg.conv_channels
        seeds = self._apply_linear("dec.struct.decompress", z_s)
        x = ops.reshape(seeds, (b * cfg.n_bars, cfg.latent_dim))
        x = ops.relu(self._apply_linear("dec.struct.fc1", x))
        x = self._apply_linear("dec.struct.fc2", x)
        x = ops.reshape(x, (b * cfg.n_bars, c2, cfg.n_tracks // 4, cfg.steps_per_bar // 4))
        x = ops.upsample_nearest(x, 2)
        x = self._apply_bn("dec.struct.bn1", ops.relu(self._apply_conv("dec.struct.conv1", x)))
        x = ops.upsample_nearest(x, 2)
        x = ops.sigmoid(self._apply_conv("dec.struct.conv2", x))
        return ops.reshape(x, (b, cfg.n_bars, cfg.n_tracks, cfg.steps_per_bar))

    # -- content decoder ----------------------------------------------------------------

    def decode_content(self, z_c: Tensor, structures: np.ndarray) -> tuple[Tensor, Tensor, GraphBatch]:
        """p(content | z_C, S): per-slot pitch/duration probabilities for the
        nodes of the given structures. Zero nodes yield empty tensors."""
        cfg = self.config
        s = np.asarray(structures, dtype=np.float64)
        key = s.tobytes()
        if self._topology_memo is not None and self._topology_memo[0] == key:
            batch = self._topology_memo[1]
        else:
            batch = GraphBatch.from_structures(s, cfg)
            self._topology_memo = (key, batch)
        if batch.n_nodes == 0:
            empty_p = Tensor(np.zeros((0, cfg.sigma, G.PITCH_VOCAB)))
            empty_d = Tensor(np.zeros((0, cfg.sigma, G.DUR_VOCAB)))
            return empty_p, empty_d, batch
        seeds = self._apply_linear("dec.content.decompress", z_c)
        seeds = ops.reshape(seeds, (batch.n_items * cfg.n_bars, cfg.latent_dim))
        h0 = ops.take_rows(seeds, batch.node_bar_slot)
        h = self._gcn("dec", h0, batch)
        notes = ops.reshape(self._apply_linear("dec.chord", h), (batch.n_nodes, cfg.sigma, cfg.latent_dim))
        half = cfg.latent_dim // 2
        pitch_half = ops.narrow(notes, 2, 0, half)
        dur_half = ops.narrow(notes, 2, half, half)

        def project(name: str, rows: Tensor, idx: np.ndarray) -> Tensor:
            return self._apply_linear(name, ops.take_rows(rows, idx))

        flat_pitch = ops.reshape(pitch_half, (batch.n_nodes * cfg.sigma, half))
        slot_track = np.repeat(batch.node_track, cfg.sigma)
        pitch_logits = self._split_by_drums(
            flat_pitch, slot_track, "dec.pitch_drum", "dec.pitch", project
        )
        pitch_probs = ops.softmax(
            ops.reshape(pitch_logits, (batch.n_nodes, cfg.sigma, G.PITCH_VOCAB)), axis=-1
        )
        flat_dur = ops.reshape(dur_half, (batch.n_nodes * cfg.sigma, half))
        dur_probs = ops.softmax(
            ops.reshape(self._apply_linear("dec.dur", flat_dur), (batch.n_nodes, cfg.sigma, G.DUR_VOCAB)),
            axis=-1,
        )
        return pitch_probs, dur_probs, batch

    def decode(self, z: Tensor, threshold: float = 0.5) -> DecodeResult:
        z_s, z_c = self.split_latent(z)
        s_probs = self.decode_structure(z_s)
        s_bin = binarize(s_probs.data, threshold)
        p_probs, d_probs, batch = self.decode_content(z_c, s_bin.astype(np.float64))
        return DecodeResult(
            structure_probs=s_probs.data,
            structure=s_bin,
            pitch_probs=p_probs.data,
            dur_probs=d_probs.data,
            batch=batch,
        )

    # -- persistence ------------------------------------------------------------------------

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {f"param/{name}": p.data for name, p in self.params.items()}
        for name, st in self.bn_states.items():
            out[f"buffer/{name}.mean"] = st.mean
            out[f"buffer/{name}.var"] = st.var
        return out

    def load_state_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            data = tensors[f"param/{name}"]
            if data.shape != p.shape:
                raise ConfigMismatch(f"checkpoint tensor {name} has shape {data.shape}")
            p.data = data.astype(np.float64).copy()
        for name, st in self.bn_states.items():
            st.mean = tensors[f"buffer/{name}.mean"].copy()
            st.var = tensors[f"buffer/{name}.var"].copy()

    def save(self, path: str | Path, extra_meta: dict | None = None) -> None:
        meta = {
            "config": self.config.to_json(),
            "fingerprint": self.config.fingerprint(),
            **(extra_meta or {}),
        }
        save_checkpoint(path, self.state_tensors(), meta)


def binarize(probs: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold a probability tensor into a binary structure (>= wins)."""
    return (np.asarray(probs) >= threshold).astype(np.uint8)


def load_model(path: str | Path) -> tuple[Model, dict]:
    """Load a checkpoint; validates the embedded config fingerprint."""
    tensors, meta = load_checkpoint(path)
    config = ModelConfig.from_json(meta["config"])
    if meta.get("fingerprint") != config.fingerprint():
        raise ConfigMismatch("checkpoint fingerprint does not match its config")
    model = Model(config)
    model.load_state_tensors(tensors)
    return model, meta
