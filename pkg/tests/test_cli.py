import hashlib
import subprocess
import sys

import numpy as np
import pytest

from polarface.cli import build_parser, main
from polarface.imageio import GrayImage, load_pgm, save_pgm
from polarface.pipeline import parse_curves

FAST = ["--hidden", "8,6,4", "--max-epochs", "300", "--target-mse", "0.01"]


def digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out", str(out), "--subjects", "3", "--images", "6", "--size", "32"]) == 0
    return out


class TestTransform:
    def test_writes_side_s(self, tmp_path, capsys):
        src, dst = tmp_path / "in.pgm", tmp_path / "out.pgm"
        save_pgm(src, GrayImage(np.random.default_rng(0).random((50, 70))))
        assert main(["transform", "--input", str(src), "--output", str(dst)]) == 0
        assert load_pgm(dst).shape == (32, 32)
        assert "q=5 S=32" in capsys.readouterr().out

    def test_base_three(self, tmp_path, capsys):
        src, dst = tmp_path / "in.pgm", tmp_path / "out.pgm"
        save_pgm(src, GrayImage(np.zeros((240, 320))))
        assert main(["transform", "--input", str(src), "--output", str(dst), "--base", "3"]) == 0
        assert "m=120 n=160 R=119 q=5 S=243" in capsys.readouterr().out
        assert load_pgm(dst).shape == (243, 243)

    def test_missing_input(self, tmp_path, capsys):
        missing = tmp_path / "missing.pgm"
        assert main(["transform", "--input", str(missing), "--output", str(tmp_path / "o.pgm")]) != 0
        assert str(missing) in capsys.readouterr().err


class TestSynth:
    def test_counts(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path)]) == 0
        dirs = sorted(p for p in tmp_path.iterdir() if p.is_dir())
        assert [d.name for d in dirs] == [f"s{s:02d}" for s in range(8)]
        assert len(list(tmp_path.rglob("*.pgm"))) == 160
        assert (tmp_path / "s07" / "i019.pgm").exists()

    def test_same_seed_bit_identical(self, tmp_path):
        args = ["synth", "--subjects", "2", "--images", "3", "--size", "24", "--seed", "5"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        assert digest(tmp_path / "a") == digest(tmp_path / "b")

    def test_subject_templates_differ(self, tmp_path):
        main(["synth", "--out", str(tmp_path), "--subjects", "4", "--images", "1",
              "--rotation", "0", "--scale", "0", "--noise", "0"])
        templates = [load_pgm(tmp_path / f"s{s:02d}" / "i000.pgm").pixels for s in range(4)]
        for a in range(4):
            for b in range(a + 1, 4):
                assert np.mean(np.abs(templates[a] - templates[b])) > 0.01


class TestTrainEval:
    def test_train_then_eval(self, corpus, tmp_path, capsys):
        run = tmp_path / "run"
        assert main(["train", "--data", str(corpus), "--out", str(run)] + FAST) == 0
        for name in ("eigenspace.json", "mlp.json", "split.csv", "config.json"):
            assert (run / name).exists()
        assert main(["eval", "--run", str(run)]) == 0
        out = capsys.readouterr().out
        assert "recognition_rate=" in out and "false_rejection_rate=" in out
        rows = parse_curves((run / "report.csv").read_text())
        assert len(rows) == 1 and rows[0]["arm"] == "polar"
        assert rows[0]["recognition_rate"] + rows[0]["false_rejection_rate"] == pytest.approx(1.0, abs=2e-6)

    def test_eval_on_other_data_and_classify(self, corpus, tmp_path, capsys):
        run = tmp_path / "run"
        main(["train", "--data", str(corpus), "--out", str(run), "--no-polar"] + FAST)
        assert main(["eval", "--run", str(run), "--data", str(corpus),
                     "--report", str(tmp_path / "r.csv")]) == 0
        assert parse_curves((tmp_path / "r.csv").read_text())[0]["arm"] == "plain"
        capsys.readouterr()
        assert main(["classify", "--run", str(run), "--input", str(corpus / "s01" / "i000.pgm")]) == 0
        assert capsys.readouterr().out.strip() in {"s00", "s01", "s02", "REJECT"}
        assert main(["classify", "--run", str(run), "--threshold", "1",
                     "--input", str(corpus / "s01" / "i000.pgm")]) == 0
        assert capsys.readouterr().out.strip() == "REJECT"

    def test_mismatched_dimensions(self, corpus, tmp_path, capsys):
        big = tmp_path / "big"
        main(["synth", "--out", str(big), "--subjects", "3", "--images", "6", "--size", "64"])
        run = tmp_path / "run"
        main(["train", "--data", str(corpus), "--out", str(run)] + FAST)
        capsys.readouterr()
        assert main(["eval", "--run", str(run), "--data", str(big)]) == 1
        err = capsys.readouterr().err
        assert err.count("\n") == 1
        assert "1024" in err and "256" in err

    def test_train_is_idempotent(self, corpus, tmp_path):
        for name in ("a", "b"):
            main(["train", "--data", str(corpus), "--out", str(tmp_path / name)] + FAST)
            main(["eval", "--run", str(tmp_path / name)])
        for f in ("eigenspace.json", "mlp.json", "split.csv", "report.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_missing_run_directory(self, tmp_path, capsys):
        assert main(["eval", "--run", str(tmp_path / "nope")]) == 1
        assert "nope" in capsys.readouterr().err


def test_curves_six_rows(corpus, tmp_path, capsys):
    out = tmp_path / "curves.csv"
    args = ["curves", "--data", str(corpus), "--out", str(out), "--subset-sizes", "2,4,6"] + FAST
    assert main(args) == 0
    rows = parse_curves(out.read_text())
    assert len(rows) == 6
    assert {r["arm"] for r in rows} == {"polar", "plain"}
    assert capsys.readouterr().out == out.read_text()


class TestFlags:
    @pytest.mark.parametrize("argv, flag", [
        (["synth", "--out", "x", "--subjects", "0"], "--subjects"),
        (["train", "--data", "d", "--out", "o", "--split", "1.5"], "--split"),
        (["train", "--data", "d", "--out", "o", "--base", "1"], "--base"),
        (["curves", "--data", "d", "--out", "o", "--subset-sizes", "a,b"], "--subset-sizes"),
        (["eval", "--run", "r", "--threshold", "2"], "--threshold"),
    ])
    def test_invalid_values_exit_nonzero_naming_flag(self, argv, flag, capsys):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code != 0
        assert flag in capsys.readouterr().err

    def test_hidden_needs_three_layers(self, corpus, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["train", "--data", str(corpus), "--out", str(tmp_path), "--hidden", "4,4"])
        assert info.value.code == 2
        assert "--hidden" in capsys.readouterr().err
        assert not (tmp_path / "mlp.json").exists()

    @pytest.mark.parametrize("command", ["transform", "synth", "train", "eval", "classify", "curves"])
    def test_help_lists_defaults(self, command):
        sub = build_parser()._subparsers._group_actions[0].choices[command]
        text = sub.format_help()
        for action in sub._actions:
            if action.option_strings and action.dest != "help":
                assert action.option_strings[-1] in text
                if action.default is not None and not action.required:
                    assert "default:" in text
        assert text.count("(default:") >= sum(
            1 for a in sub._actions if a.option_strings and a.dest != "help" and not a.required)


def test_console_entry_point_runs():
    result = subprocess.run([sys.executable, "-m", "polarface.cli", "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "transform" in result.stdout
