"""Training: the beta-VAE objective, schedules, optimizer loop.

The reconstruction term decomposes into a Bernoulli log-likelihood over
the structure tensor and per-slot categorical cross-entropies over pitch
and duration tokens, computed with teacher forcing: the content decoder
always runs on the real structure during training, never on the
binarized decoder output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graph as G
from .model import GraphBatch, Model, ModelConfig, binarize
from .nn import Adam, Tensor, ops, zero_grads
from .nn.optim import load_checkpoint, save_checkpoint

PROB_FLOOR = 1e-7


class EmptyDataset(ValueError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    max_updates: int
    lr0: float = 1e-4
    batch_size: int = 256
    beta_max: float = 0.01
    beta_increment: float = 0.001
    beta_every: int = 40_000
    lr_decay_start: int = 8_000
    lr_decay_factor: float = 1.0 - 5e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    split: tuple[float, float, float] = (0.7, 0.1, 0.2)
    checkpoint_every: int = 0  # 0: only the final checkpoint
    val_every: int = 0  # 0: never
    mask_pad_slots: bool = False

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["split"] = list(self.split)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TrainingConfig":
        obj = dict(obj)
        obj["split"] = tuple(obj.get("split", (0.7, 0.1, 0.2)))
        return cls(**obj)


@dataclass
class LossBreakdown:
    total: float
    structure_nll: float
    content_nll_pitch: float
    content_nll_duration: float
    kl: float


def beta_schedule(step: int, config: TrainingConfig) -> float:
    """0 through the warmup, then +increment every `beta_every` updates,
    capped at beta_max."""
    return min(config.beta_max, config.beta_increment * (step // config.beta_every))


def lr_schedule(step: int, config: TrainingConfig) -> float:
    """Constant until decay starts, then per-update exponential decay."""
    if step <= config.lr_decay_start:
        return config.lr0
    return config.lr0 * config.lr_decay_factor ** (step - config.lr_decay_start)


# ---------------------------------------------------------------------------
# loss terms
# ---------------------------------------------------------------------------

def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def kl_divergence(mu, logvar) -> Tensor:
    """KL(N(mu, exp(logvar)) || N(0, I)) summed over components."""
    mu = _as_tensor(mu)
    logvar = _as_tensor(logvar)
    inner = ops.sub(ops.add(ops.mul(mu, mu), ops.exp(logvar)), logvar)
    return ops.scale(ops.sub(ops.sum(inner), Tensor(float(mu.size))), 0.5)


def structure_nll(s, s_probs) -> Tensor:
    """Negative Bernoulli log-likelihood, summed over all cells."""
    s = _as_tensor(s)
    s_probs = _as_tensor(s_probs)
    if s.shape != s_probs.shape:
        raise ops.ShapeMismatch("structure_nll", s.shape, s_probs.shape)
    p = ops.clamp(s_probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    ones = Tensor(np.ones(s.shape))
    ll = ops.add(ops.mul(s, ops.log(p)), ops.mul(ops.sub(ones, s), ops.log(ops.sub(ones, p))))
    return ops.neg(ops.sum(ll))


def categorical_nll(targets, probs, slot_mask: np.ndarray | None = None) -> Tensor:
    """-sum(log(probs) . one-hot targets) over all slots; an optional
    per-slot mask (matching targets.shape[:-1]) excludes slots."""
    targets = _as_tensor(targets)
    probs = _as_tensor(probs)
    if targets.shape != probs.shape:
        raise ops.ShapeMismatch("categorical_nll", targets.shape, probs.shape)
    logp = ops.log(ops.clamp(probs, PROB_FLOOR, 1.0 - PROB_FLOOR))
    per = ops.mul(logp, targets)
    if slot_mask is not None:
        per = ops.mul(per, Tensor(np.asarray(slot_mask, dtype=np.float64)[..., None]))
    return ops.neg(ops.sum(per))


def content_nll(pitch_targets, dur_targets, pitch_probs, dur_probs, slot_mask=None) -> Tensor:
    return ops.add(
        categorical_nll(pitch_targets, pitch_probs, slot_mask),
        categorical_nll(dur_targets, dur_probs, slot_mask),
    )


def one_hot(tokens: np.ndarray, vocab: int) -> np.ndarray:
    out = np.zeros(tokens.shape + (vocab,), dtype=np.float64)
    np.put_along_axis(out, tokens[..., None], 1.0, axis=-1)
    return out


def loss(
    model: Model, batch: GraphBatch, step: int, config: TrainingConfig,
    eps: np.ndarray | None = None,
) -> tuple[Tensor, LossBreakdown]:
    """Single-sample beta-VAE objective, averaged over the batch."""
    code = model.encode(batch, eps=eps)
    z_s, z_c = model.split_latent(code.z)
    s_probs = model.decode_structure(z_s)
    # teacher forcing: content is decoded on the real structure
    pitch_probs, dur_probs, _ = model.decode_content(z_c, batch.structure)

    b = float(batch.n_items)
    slot_mask = None
    if config.mask_pad_slots and batch.n_nodes:
        slot_mask = (batch.pitch_tokens != G.PAD_P).astype(np.float64)
    s_term = ops.scale(structure_nll(batch.structure, s_probs), 1.0 / b)
    if batch.n_nodes:
        p_term = ops.scale(categorical_nll(batch.pitch_onehot, pitch_probs, slot_mask), 1.0 / b)
        d_term = ops.scale(categorical_nll(batch.dur_onehot, dur_probs, slot_mask), 1.0 / b)
    else:
        p_term = Tensor(0.0)
        d_term = Tensor(0.0)
    kl_term = ops.scale(kl_divergence(code.mu, code.logvar), 1.0 / b)

    beta = beta_schedule(step, config)
    total = ops.add(ops.add(s_term, ops.add(p_term, d_term)), ops.scale(kl_term, beta))
    breakdown = LossBreakdown(
        total=total.item(),
        structure_nll=s_term.item(),
        content_nll_pitch=p_term.item(),
        content_nll_duration=d_term.item(),
        kl=kl_term.item(),
    )
    return total, breakdown


# ---------------------------------------------------------------------------
# dataset handling and the fit loop
# ---------------------------------------------------------------------------

def split_dataset(
    n: int, config: TrainingConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded 70/10/20 (by default) index split."""
    order = np.random.default_rng(config.seed).permutation(n)
    n_train = max(1, int(round(n * config.split[0])))
    n_val = int(round(n * config.split[1]))
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def _train_eps(seed: int, step: int, shape: tuple[int, ...]) -> np.ndarray:
    # stream tag 0: reparameterization noise; pure function of (seed, step)
    return np.random.default_rng((seed, 0, step)).standard_normal(shape)


def _batch_indices(train_idx: np.ndarray, config: TrainingConfig, step: int) -> np.ndarray:
    """Deterministic batch composition: epoch-shuffled, cycled by step."""
    n = len(train_idx)
    per_epoch = max(1, n // config.batch_size) if n >= config.batch_size else 1
    epoch, slot = divmod(step, per_epoch)
    order = np.random.default_rng((config.seed, 1, epoch)).permutation(n)
    if n < config.batch_size:
        return train_idx[order]
    start = slot * config.batch_size
    return train_idx[order[start : start + config.batch_size]]


HISTORY_COLUMNS = ("step", "lr", "beta", "total", "structure_nll", "pitch_nll", "duration_nll", "kl")


def fit(
    dataset: list[G.ChordGraph],
    model: Model,
    config: TrainingConfig,
    out_dir: str | Path | None = None,
    start_step: int = 0,
    optimizer: Adam | None = None,
    log=None,
) -> list[LossBreakdown]:
    """Run gradient updates from start_step to config.max_updates.

    Writes history.csv and final.ckpt (plus periodic checkpoints) when
    out_dir is given. Fully deterministic for a given config.
    """
    if not dataset:
        raise EmptyDataset("cannot train on an empty dataset")
    train_idx, val_idx, _ = split_dataset(len(dataset), config)
    optimizer = optimizer or Adam(
        model.parameters(), config.adam_beta1, config.adam_beta2, config.adam_eps
    )
    out_path = Path(out_dir) if out_dir is not None else None
    history: list[LossBreakdown] = []
    csv_file = None
    writer = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        fresh = start_step == 0 or not (out_path / "history.csv").exists()
        csv_file = open(out_path / "history.csv", "w" if fresh else "a", newline="")
        writer = csv.writer(csv_file)
        if fresh:
            writer.writerow(HISTORY_COLUMNS)

    model.train_mode(True)
    try:
        for step in range(start_step, config.max_updates):
            batch = GraphBatch.from_graphs(
                [dataset[i] for i in _batch_indices(train_idx, config, step)], model.config
            )
            eps = _train_eps(config.seed, step, (batch.n_items, model.config.latent_dim))
            total, breakdown = loss(model, batch, step, config, eps=eps)
            zero_grads(model.parameters())
            total.backward()
            lr = lr_schedule(step, config)
            optimizer.step(lr)
            history.append(breakdown)
            if writer is not None:
                writer.writerow(
                    (step, f"{lr:.10g}", beta_schedule(step, config),
                     breakdown.total, breakdown.structure_nll,
                     breakdown.content_nll_pitch, breakdown.content_nll_duration,
                     breakdown.kl)
                )
            if log is not None and (step % 100 == 0 or step == config.max_updates - 1):
                log(step, breakdown, "train")
            if config.val_every and len(val_idx) and (step + 1) % config.val_every == 0:
                val = evaluate(model, [dataset[i] for i in val_idx], step, config)
                if log is not None:
                    log(step, val, "val")
                model.train_mode(True)
            if (
                out_path is not None
                and config.checkpoint_every
                and (step + 1) % config.checkpoint_every == 0
            ):
                save_training_checkpoint(out_path / f"step{step + 1}.ckpt", model, optimizer, step + 1, config)
    finally:
        if csv_file is not None:
            csv_file.close()
    if out_path is not None:
        save_training_checkpoint(out_path / "final.ckpt", model, optimizer, config.max_updates, config)
    model.train_mode(False)
    return history


def evaluate(
    model: Model, graphs: list[G.ChordGraph], step: int, config: TrainingConfig
) -> LossBreakdown:
    """Loss over a held-out set in eval mode (z = mu, running BN stats)."""
    model.train_mode(False)
    batch = GraphBatch.from_graphs(graphs, model.config)
    _, breakdown = loss(model, batch, step, config)
    return breakdown


# ---------------------------------------------------------------------------
# train-state checkpoints (model + optimizer + position)
# ---------------------------------------------------------------------------

def save_training_checkpoint(
    path: str | Path, model: Model, optimizer: Adam, step: int, config: TrainingConfig
) -> None:
    tensors = model.state_tensors()
    for p in model.parameters():
        if p.m is not None:
            tensors[f"adam_m/{p.name}"] = p.m
            tensors[f"adam_v/{p.name}"] = p.v
    meta = {
        "config": model.config.to_json(),
        "fingerprint": model.config.fingerprint(),
        "step": step,
        "adam_t": optimizer.t,
        "training_config": config.to_json(),
    }
    save_checkpoint(path, tensors, meta)


def load_training_checkpoint(path: str | Path) -> tuple[Model, Adam, int, TrainingConfig]:
    tensors, meta = load_checkpoint(path)
    config = ModelConfig.from_json(meta["config"])
    model = Model(config)
    model.load_state_tensors(tensors)
    optimizer = Adam(model.parameters())
    optimizer.t = int(meta.get("adam_t", 0))
    for p in model.parameters():
        if f"adam_m/{p.name}" in tensors:
            p.m = tensors[f"adam_m/{p.name}"].copy()
            p.v = tensors[f"adam_v/{p.name}"].copy()
    t_cfg = TrainingConfig.from_json(meta["training_config"])
    return model, optimizer, int(meta["step"]), t_cfg


# ---------------------------------------------------------------------------
# reconstruction scoring (used by the overfit acceptance check)
# ---------------------------------------------------------------------------

def reconstruction_scores(model: Model, graphs: list[G.ChordGraph]) -> dict[str, float]:
    """Eval-mode structure F1 (threshold 0.5) and teacher-forced token
    accuracy over non-PAD slots."""
    model.train_mode(False)
    batch = GraphBatch.from_graphs(graphs, model.config)
    code = model.encode(batch)
    z_s, z_c = model.split_latent(code.z)
    s_hat = binarize(model.decode_structure(z_s).data, 0.5)
    truth = batch.structure.astype(np.uint8)
    tp = float(np.sum((s_hat == 1) & (truth == 1)))
    fp = float(np.sum((s_hat == 1) & (truth == 0)))
    fn = float(np.sum((s_hat == 0) & (truth == 1)))
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 1.0

    pitch_probs, dur_probs, _ = model.decode_content(z_c, batch.structure)
    keep = batch.pitch_tokens != G.PAD_P
    pitch_acc = float(np.mean(pitch_probs.data.argmax(-1)[keep] == batch.pitch_tokens[keep]))
    dur_acc = float(np.mean(dur_probs.data.argmax(-1)[keep] == batch.dur_tokens[keep]))
    return {"structure_f1": f1, "pitch_accuracy": pitch_acc, "duration_accuracy": dur_acc}
