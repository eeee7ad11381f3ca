"""Command-line entry point.

Every subcommand is a thin shell over the library: preprocess MIDI
directories into a graph corpus, train, generate/interpolate/condition
from a checkpoint, compute corpus metrics, export embedding PCA
projections and serve the HTTP API. Flags override values from an
optional JSON config file. Exit codes: 0 success, 1 usage error, 2 data
error; errors print one ERROR:<code>: line to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import generate, graph as G, metrics, pianoroll as pr, smf, training
from .model import Model, ModelConfig, load_model
from .service import App, serve

log = logging.getLogger("polyvae")


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 2) -> None:
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("POLY_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError("config_missing", f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise CliError("config_invalid", f"config file is not valid JSON: {err}") from None


def _merged(args: argparse.Namespace, file_cfg: dict, key: str, default):
    """Flag > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return file_cfg.get(key, default)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_preprocess(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_path)
    if not in_dir.is_dir():
        raise CliError("bad_input", f"{in_dir} is not a directory")
    midi_paths = sorted(p for p in in_dir.rglob("*") if p.suffix.lower() in (".mid", ".midi"))
    if not midi_paths:
        raise CliError("no_midi", f"no .mid files under {in_dir}")
    graphs: list[G.ChordGraph] = []
    skipped = 0
    for path in midi_paths:
        try:
            file = smf.parse_smf(path.read_bytes())
            rolls = pr.to_pianoroll(file, bars_per_sequence=args.bars)
        except (smf.MidiError, pr.NoQuantizableContent) as err:
            log.debug("skipping %s: %s", path, err)
            skipped += 1
            continue
        graphs.extend(G.build_graph(roll, sigma=args.sigma) for roll in rolls)
    if not graphs:
        raise CliError("no_sequences", "no sequences survived preprocessing")
    G.write_corpus(args.out, graphs)
    print(f"wrote {len(graphs)} sequences ({args.bars} bars, sigma={args.sigma}) "
          f"from {len(midi_paths) - skipped}/{len(midi_paths)} files to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    graphs = G.read_corpus(args.corpus)
    n_bars, sigma = graphs[0].n_bars, graphs[0].sigma
    model_cfg = ModelConfig(
        n_bars=n_bars,
        latent_dim=int(_merged(args, file_cfg, "latent_dim", 512)),
        gcn_layers=int(_merged(args, file_cfg, "gcn_layers", 8)),
        sigma=sigma,
    )
    default_lr = 1e-4 if n_bars <= 2 else 5e-5
    default_batch = 256 if n_bars <= 2 else 32
    train_cfg = training.TrainingConfig(
        max_updates=int(_merged(args, file_cfg, "updates", 10_000)),
        lr0=float(_merged(args, file_cfg, "lr", default_lr)),
        batch_size=int(_merged(args, file_cfg, "batch", default_batch)),
        seed=int(_merged(args, file_cfg, "seed", 0)),
        checkpoint_every=int(_merged(args, file_cfg, "checkpoint_every", 0)),
        val_every=int(_merged(args, file_cfg, "val_every", 0)),
    )
    out_dir = Path(args.out)
    if args.resume:
        model, optimizer, start_step, train_cfg = training.load_training_checkpoint(args.resume)
        if args.updates is not None:  # flags still win when resuming
            cfg_json = train_cfg.to_json()
            cfg_json["max_updates"] = int(args.updates)
            train_cfg = training.TrainingConfig.from_json(cfg_json)
        log.info("resuming from %s at step %d", args.resume, start_step)
    else:
        model = Model(model_cfg, seed=train_cfg.seed)
        optimizer = None
        start_step = 0

    def progress(step, breakdown, kind="train"):
        log.info("%s step %d total %.4f (s %.4f p %.4f d %.4f kl %.4f)",
                 kind, step, breakdown.total, breakdown.structure_nll,
                 breakdown.content_nll_pitch, breakdown.content_nll_duration, breakdown.kl)

    training.fit(graphs, model, train_cfg, out_dir, start_step=start_step,
                 optimizer=optimizer, log=progress)
    print(f"trained {train_cfg.max_updates - start_step} updates on {len(graphs)} sequences; "
          f"checkpoint at {out_dir / 'final.ckpt'}")
    return 0


def _load_ckpt(path: str) -> Model:
    try:
        model, _ = load_model(path)
    except FileNotFoundError:
        raise CliError("ckpt_missing", f"checkpoint not found: {path}") from None
    return model


def _write_sequences(seqs, out_dir: Path, fmt: str, stem: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, seq in enumerate(seqs):
        if fmt in ("midi", "both"):
            path = out_dir / f"{stem}{i:03d}.mid"
            smf.write_file(path, pr.from_pianoroll(seq.roll))
            written.append(path)
        if fmt in ("json", "both"):
            path = out_dir / f"{stem}{i:03d}.json"
            pr.save_pianoroll(path, seq.roll)
            written.append(path)
    return written


def cmd_generate(args: argparse.Namespace) -> int:
    model = _load_ckpt(args.ckpt)
    seqs = generate.sample(model, args.n, args.seed, threshold=args.threshold)
    written = _write_sequences(seqs, Path(args.out), args.format, "sample")
    print(f"wrote {len(written)} files to {args.out} (seed {args.seed})")
    return 0


def cmd_interpolate(args: argparse.Namespace) -> int:
    model = _load_ckpt(args.ckpt)
    d = model.config.latent_dim
    z_a = np.random.default_rng(args.seed_a).standard_normal(d)
    z_b = np.random.default_rng(args.seed_b).standard_normal(d)
    seqs = generate.interpolate(model, z_a, z_b, args.steps, threshold=args.threshold)
    written = _write_sequences(seqs, Path(args.out), args.format, "interp")
    print(f"wrote {len(written)} files to {args.out} (seeds {args.seed_a}->{args.seed_b})")
    return 0


def _load_structure(path: str, n_bars: int) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError("structure_missing", f"structure file not found: {path}") from None
    grid = obj["grid"] if isinstance(obj, dict) else obj
    s = np.asarray(grid, dtype=np.uint8)
    if s.shape != (n_bars, pr.N_TRACKS, pr.STEPS_PER_BAR):
        raise CliError("bad_structure",
                       f"structure shape {list(s.shape)} does not match model "
                       f"({n_bars}, {pr.N_TRACKS}, {pr.STEPS_PER_BAR})")
    return s


def cmd_condition(args: argparse.Namespace) -> int:
    model = _load_ckpt(args.ckpt)
    z = np.random.default_rng(args.seed).standard_normal(model.config.latent_dim)
    structure = _load_structure(args.structure, model.config.n_bars)
    seq = generate.conditioned_generate(model, z, structure)
    written = _write_sequences([seq], Path(args.out), args.format, "conditioned")
    if seq.empty:
        log.warning("edited structure has no activations; output is silence")
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        corpus = metrics.load_corpus(args.corpus)
        rep = metrics.report(corpus)
    except (metrics.EmptyCorpus, ValueError) as err:
        raise CliError("bad_corpus", str(err)) from None
    print(rep.to_table())
    if args.out:
        metrics.save_report(args.out, rep)
        print(f"report written to {args.out}")
    return 0


def cmd_pca(args: argparse.Namespace) -> int:
    model = _load_ckpt(args.ckpt)
    if args.what == "pitch":
        proj = generate.pitch_embedding_pca(model, k=args.k)
    elif args.what == "duration":
        proj = generate.duration_embedding_pca(model, k=args.k, max_duration=args.max_duration)
    else:
        proj = generate.chord_embedding_pca(model, k=args.k)
    generate.save_projection_csv(args.out, proj)
    ratios = ", ".join(f"{r:.4f}" for r in proj.explained_variance)
    print(f"wrote {len(proj.labels)} projections to {args.out} (explained variance: {ratios})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    model = _load_ckpt(args.ckpt) if args.ckpt else None
    static = args.static or _default_static_dir()
    app = App(model, checkpoint_path=args.ckpt, static_dir=static)
    if args.sessions and Path(args.sessions).exists():
        app.load_sessions(args.sessions)
    server = serve(app, port=args.port, host=args.host)
    print(f"serving on http://{args.host}:{args.port}/ "
          f"({'model loaded' if model else 'NO MODEL'}; static: {static or 'none'})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if args.sessions:
            app.save_sessions(args.sessions)
        server.server_close()
    return 0


def _default_static_dir() -> str | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyvae",
        description="Graph-based multitrack music VAE: preprocessing, training, generation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="convert a directory of MIDI files into a corpus")
    p.add_argument("--in", dest="in_path", required=True, help="directory of .mid files")
    p.add_argument("--out", required=True, help="output corpus file")
    p.add_argument("--bars", type=int, default=2, choices=(2, 16), help="bars per sequence (default 2)")
    p.add_argument("--sigma", type=int, default=16, help="note slots per chord (default 16)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True, help="corpus file from preprocess")
    p.add_argument("--out", required=True, help="output directory for checkpoints and history")
    p.add_argument("--config", help="JSON config file (flags win over it)")
    p.add_argument("--resume", help="resume from a training checkpoint")
    p.add_argument("--latent-dim", dest="latent_dim", type=int, help="latent width d (default 512)")
    p.add_argument("--layers", dest="gcn_layers", type=int, help="GCN layers L (default 8)")
    p.add_argument("--updates", type=int, help="gradient updates to run (default 10000)")
    p.add_argument("--batch", type=int, help="batch size (default 256 for 2 bars, 32 for 16)")
    p.add_argument("--lr", type=float, help="initial learning rate (default 1e-4 / 5e-5)")
    p.add_argument("--seed", type=int, help="seed (default 0)")
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, help="steps between checkpoints")
    p.add_argument("--val-every", dest="val_every", type=int, help="steps between validation passes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample sequences from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, default=1, help="number of sequences (default 1)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    p.add_argument("--threshold", type=float, default=0.5, help="structure binarization threshold (default 0.5)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("midi", "json", "both"), default="midi", help="output format (default midi)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("interpolate", help="decode a linear latent path")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--seed-a", dest="seed_a", type=int, default=0, help="seed of the first endpoint (default 0)")
    p.add_argument("--seed-b", dest="seed_b", type=int, default=1, help="seed of the second endpoint (default 1)")
    p.add_argument("--steps", type=int, default=5, help="number of interpolation points (default 5)")
    p.add_argument("--threshold", type=float, default=0.5, help="structure binarization threshold (default 0.5)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("midi", "json", "both"), default="midi", help="output format (default midi)")
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("condition", help="regenerate content against an edited structure")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--seed", type=int, default=0, help="latent seed (default 0)")
    p.add_argument("--structure", required=True, help="JSON file with the edited activation grid")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("midi", "json", "both"), default="midi", help="output format (default midi)")
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("metrics", help="compute EB/UPC/DP over a corpus")
    p.add_argument("--corpus", required=True, help="corpus file or directory of pianoroll JSON")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pca", help="export embedding PCA projections as CSV")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--what", choices=("pitch", "duration", "chord"), default="pitch")
    p.add_argument("--k", type=int, default=3, help="components (default 3)")
    p.add_argument("--max-duration", dest="max_duration", type=int, default=96,
                   help="duration rows to project (default 96)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--ckpt", help="model checkpoint to load")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory with the built browser UI")
    p.add_argument("--sessions", help="JSON snapshot file for session persistence")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 1
    try:
        return args.func(args)
    except CliError as err:
        print(f"ERROR:{err.code}: {err}", file=sys.stderr)
        return err.exit_code
    except (smf.MidiError, pr.NoQuantizableContent, training.EmptyDataset, ValueError) as err:
        print(f"ERROR:{type(err).__name__}: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"ERROR:file_not_found: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
