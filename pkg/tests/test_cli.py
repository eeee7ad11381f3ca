"""CLI subcommands as thin shells over the library."""

import json

import numpy as np
import pytest

from polyvae import graph as G
from polyvae import metrics as M
from polyvae import pianoroll as pr
from polyvae import smf
from polyvae.cli import build_parser, main
from polyvae.model import load_model

from conftest import musical_roll


@pytest.fixture
def songs_dir(tmp_path):
    rng = np.random.default_rng(5)
    d = tmp_path / "songs"
    d.mkdir()
    for i in range(3):
        smf.write_file(d / f"song{i}.mid", pr.from_pianoroll(musical_roll(rng, n_bars=4)))
    return d


@pytest.fixture
def corpus_path(songs_dir, tmp_path):
    path = tmp_path / "corpus.bin"
    assert main(["preprocess", "--in", str(songs_dir), "--out", str(path),
                 "--bars", "2", "--sigma", "8"]) == 0
    return path


@pytest.fixture
def checkpoint(corpus_path, tmp_path):
    out = tmp_path / "run"
    code = main(["train", "--corpus", str(corpus_path), "--out", str(out),
                 "--latent-dim", "16", "--layers", "1", "--updates", "8",
                 "--batch", "4", "--seed", "3"])
    assert code == 0
    return out / "final.ckpt"


class TestPreprocess:
    def test_writes_corpus_and_summary(self, songs_dir, tmp_path, capsys):
        out = tmp_path / "c.bin"
        assert main(["preprocess", "--in", str(songs_dir), "--out", str(out), "--bars", "2"]) == 0
        printed = capsys.readouterr().out
        graphs = G.read_corpus(out)
        assert f"wrote {len(graphs)} sequences" in printed
        assert graphs and all(g.n_bars == 2 for g in graphs)

    def test_missing_directory_is_data_error(self, tmp_path, capsys):
        code = main(["preprocess", "--in", str(tmp_path / "nope"), "--out", str(tmp_path / "c.bin")])
        assert code == 2
        assert capsys.readouterr().err.startswith("ERROR:")

    def test_usage_error_exit_code(self):
        assert main(["preprocess", "--bars", "2"]) == 1  # missing required flags


class TestTrainAndGenerate:
    def test_train_writes_history_and_checkpoint(self, checkpoint):
        assert checkpoint.exists()
        history = checkpoint.parent / "history.csv"
        assert history.exists()
        assert len(history.read_text().strip().splitlines()) == 9  # header + 8 updates

    def test_generate_reproducible(self, checkpoint, tmp_path):
        out_a = tmp_path / "gen_a"
        out_b = tmp_path / "gen_b"
        for out in (out_a, out_b):
            assert main(["generate", "--ckpt", str(checkpoint), "--n", "2", "--seed", "7",
                         "--out", str(out), "--format", "both"]) == 0
        for name in ("sample000.mid", "sample001.mid", "sample000.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_generated_midi_parses(self, checkpoint, tmp_path):
        out = tmp_path / "gen"
        assert main(["generate", "--ckpt", str(checkpoint), "--n", "1", "--seed", "1",
                     "--out", str(out)]) == 0
        parsed = smf.read_file(out / "sample000.mid")
        assert len(parsed.tracks) == 5

    def test_missing_checkpoint_is_data_error(self, tmp_path, capsys):
        code = main(["generate", "--ckpt", str(tmp_path / "nope.ckpt"), "--out", str(tmp_path)])
        assert code == 2
        assert "ERROR:ckpt_missing:" in capsys.readouterr().err

    def test_train_config_file_with_flag_override(self, corpus_path, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"updates": 3, "latent_dim": 16, "gcn_layers": 1, "batch": 4}))
        out = tmp_path / "run2"
        assert main(["train", "--corpus", str(corpus_path), "--out", str(out),
                     "--config", str(cfg_path), "--updates", "4"]) == 0
        lines = (out / "history.csv").read_text().strip().splitlines()
        assert len(lines) == 5  # flag (4 updates) wins over config file (3)
        model, _ = load_model(out / "final.ckpt")
        assert model.config.latent_dim == 16  # config file value survives

    def test_resume(self, corpus_path, tmp_path):
        out = tmp_path / "run3"
        assert main(["train", "--corpus", str(corpus_path), "--out", str(out),
                     "--latent-dim", "16", "--layers", "1", "--updates", "4",
                     "--batch", "4", "--seed", "3"]) == 0
        assert main(["train", "--corpus", str(corpus_path), "--out", str(out),
                     "--resume", str(out / "final.ckpt"), "--updates", "6"]) == 0
        lines = (out / "history.csv").read_text().strip().splitlines()
        assert [row.split(",")[0] for row in lines[1:]] == ["0", "1", "2", "3", "4", "5"]


class TestInterpolateCondition:
    def test_interpolate_outputs(self, checkpoint, tmp_path):
        out = tmp_path / "interp"
        assert main(["interpolate", "--ckpt", str(checkpoint), "--seed-a", "1", "--seed-b", "2",
                     "--steps", "3", "--out", str(out), "--format", "json"]) == 0
        files = sorted(out.glob("interp*.json"))
        assert len(files) == 3

    def test_condition_with_structure_file(self, checkpoint, tmp_path):
        grid = np.zeros((2, 4, 32), dtype=int)
        grid[0, 0, 0] = grid[0, 1, 8] = grid[1, 2, 16] = 1
        struct_path = tmp_path / "edit.json"
        struct_path.write_text(json.dumps({"grid": grid.tolist()}))
        out = tmp_path / "cond"
        assert main(["condition", "--ckpt", str(checkpoint), "--seed", "4",
                     "--structure", str(struct_path), "--out", str(out), "--format", "json"]) == 0
        roll = pr.load_pianoroll(out / "conditioned000.json")
        cells = {(o.bar, o.track, o.step) for o in roll.onsets}
        assert cells <= {(0, 0, 0), (0, 1, 8), (1, 2, 16)}

    def test_condition_rejects_bad_shape(self, checkpoint, tmp_path, capsys):
        struct_path = tmp_path / "bad.json"
        struct_path.write_text(json.dumps({"grid": [[0] * 32] * 4}))
        code = main(["condition", "--ckpt", str(checkpoint), "--structure", str(struct_path),
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "ERROR:bad_structure:" in capsys.readouterr().err


class TestMetricsCli:
    def test_matches_library_report(self, corpus_path, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["metrics", "--corpus", str(corpus_path), "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        report = json.loads(out.read_text())
        expected = M.report(M.load_corpus(corpus_path)).to_json()
        assert report == expected
        assert "EB %" in printed

    def test_empty_corpus_dir_is_data_error(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["metrics", "--corpus", str(empty)]) == 2
        assert "ERROR:bad_corpus:" in capsys.readouterr().err


class TestPcaCli:
    def test_pitch_csv(self, checkpoint, tmp_path):
        out = tmp_path / "pitch.csv"
        assert main(["pca", "--ckpt", str(checkpoint), "--what", "pitch", "--k", "2",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "label,c1,c2"
        assert len(lines) == 129


class TestHelp:
    @pytest.mark.parametrize("command,flags", [
        ("preprocess", ["--in", "--out", "--bars", "--sigma"]),
        ("train", ["--corpus", "--out", "--config", "--updates", "--batch", "--lr", "--seed"]),
        ("generate", ["--ckpt", "--n", "--seed", "--threshold", "--out", "--format"]),
        ("interpolate", ["--ckpt", "--seed-a", "--seed-b", "--steps", "--out"]),
        ("condition", ["--ckpt", "--seed", "--structure", "--out"]),
        ("metrics", ["--corpus", "--out"]),
        ("pca", ["--ckpt", "--what", "--k", "--out"]),
        ("serve", ["--ckpt", "--port", "--host", "--static"]),
    ])
    def test_help_lists_flags_with_defaults(self, command, flags, capsys):
        parser = build_parser()
        with pytest.raises(SystemExit):
            parser.parse_args([command, "--help"])
        text = capsys.readouterr().out
        for flag in flags:
            assert flag in text
        if command in ("generate", "interpolate"):
            assert "default" in text
