"""Command line wiring for the extractor."""

import importlib

import pytest

import semprobe_extractor.cli as cli
from semprobe_extractor import ExtractionReport, SplitReport

extract_module = importlib.import_module("semprobe_extractor.extract")


def test_labels_command_writes_files(stsb_dir, tmp_path, capsys):
    out = tmp_path / "labels"
    code = cli.main(
        ["labels", "--dataset", "stsb", "--data-dir", str(stsb_dir), "--out", str(out)]
    )
    assert code == 0
    for split in ("train", "dev", "test"):
        assert (out / split / "sentences.txt").is_file()
        assert (out / split / "labels.tsv").is_file()
    assert "train: 8 sentences, 6 label rows" in capsys.readouterr().out


def test_labels_command_split_subset(snli_dir, tmp_path):
    out = tmp_path / "labels"
    code = cli.main(
        [
            "labels",
            "--dataset",
            "snli",
            "--task",
            "te_triplet",
            "--data-dir",
            str(snli_dir),
            "--out",
            str(out),
            "--splits",
            "train",
        ]
    )
    assert code == 0
    assert (out / "train" / "labels.tsv").is_file()
    assert not (out / "dev").exists()


def test_missing_data_dir_fails_cleanly(tmp_path, capsys):
    code = cli.main(
        [
            "labels",
            "--dataset",
            "stsb",
            "--data-dir",
            str(tmp_path / "nowhere"),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_architecture_choice_rejected(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(
            [
                "extract",
                "--model",
                "toy/x",
                "--arch",
                "recurrent",
                "--dataset",
                "stsb",
                "--data-dir",
                str(tmp_path),
                "--out",
                str(tmp_path / "out"),
            ]
        )
    assert excinfo.value.code == 2


def test_extract_command_wires_plan(tmp_path, monkeypatch, capsys):
    captured = {}

    def fake_extract(plan, data_dir):
        captured["plan"] = plan
        captured["data_dir"] = data_dir
        return ExtractionReport(
            model_id=plan.model_id,
            task=plan.task,
            pooling=plan.pooling,
            layer_count=3,
            dim=32,
            splits=(
                SplitReport(
                    split="train",
                    sentence_count=8,
                    label_rows=6,
                    truncated=0,
                    skipped_unlabeled=0,
                    skipped_degenerate=0,
                ),
            ),
        )

    monkeypatch.setattr(extract_module, "extract", fake_extract)
    code = cli.main(
        [
            "extract",
            "--model",
            "toy/causal",
            "--arch",
            "causal",
            "--dataset",
            "snli",
            "--task",
            "te_triplet",
            "--data-dir",
            str(tmp_path / "raw"),
            "--out",
            str(tmp_path / "store"),
            "--splits",
            "train,dev",
            "--batch-size",
            "16",
            "--max-length",
            "64",
        ]
    )
    assert code == 0
    plan = captured["plan"]
    assert plan.model_id == "toy/causal"
    assert plan.task == "te_triplet"
    assert plan.splits == ("train", "dev")
    assert plan.batch_size == 16
    assert plan.max_length == 64
    assert plan.pooling == "last_token"
    out = capsys.readouterr().out
    assert "3 layers, dim 32, pooling last_token" in out
    assert "train: 8 sentences" in out
