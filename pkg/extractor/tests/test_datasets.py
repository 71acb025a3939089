"""Dataset adapters: interning, label retention, triple building, errors."""

import json

import pytest
from semprobe import load_labels

from semprobe_extractor import (
    DatasetError,
    build_labels,
    prepare_nli_pairs,
    prepare_nli_triplets,
    prepare_split,
    prepare_stsb,
    write_label_files,
)


def test_stsb_interns_sentences_and_keeps_raw_scores(stsb_dir):
    prepared = prepare_stsb(stsb_dir, "train")
    assert prepared.task == "sts"
    assert len(prepared.sentences) == 8
    assert len(prepared.label_rows) == 6
    left, right, raw = prepared.label_rows[0]
    assert prepared.sentences[left] == "a plane is taking off"
    assert prepared.sentences[right] == "an air plane is taking off"
    assert raw == "5.000"
    reused = [row for row in prepared.label_rows if row[0] == left]
    assert len(reused) == 2


def test_stsb_accepts_extra_trailing_columns(stsb_dir):
    prepared = prepare_stsb(stsb_dir, "train")
    assert any(row[2] == "2.600" for row in prepared.label_rows)


@pytest.mark.parametrize(
    "line",
    [
        "a\tb\tc\td\t3.0\tonly six",
        "a\tb\tc\td\tnot-a-number\tleft sentence\tright sentence",
        "a\tb\tc\td\t6.5\tleft sentence\tright sentence",
    ],
)
def test_stsb_malformed_rows_rejected(tmp_path, line):
    (tmp_path / "sts-train.csv").write_text(line + "\n", "utf-8")
    with pytest.raises(DatasetError, match="line 1"):
        prepare_stsb(tmp_path, "train")


def test_stsb_empty_file_rejected(tmp_path):
    (tmp_path / "sts-train.csv").write_text("\n", "utf-8")
    with pytest.raises(DatasetError, match="no rows"):
        prepare_stsb(tmp_path, "train")


def test_missing_split_lists_candidates(tmp_path):
    with pytest.raises(DatasetError, match="sts-dev.csv"):
        prepare_stsb(tmp_path, "dev")


def test_nli_pairs_keep_neutral_and_skip_unlabeled(snli_dir):
    prepared = prepare_nli_pairs(snli_dir, "snli", "train")
    assert prepared.task == "te_pair"
    assert len(prepared.label_rows) == 8
    assert prepared.skipped_unlabeled == 1
    classes = [row[2] for row in prepared.label_rows]
    assert classes.count("neutral") == 1
    assert len(prepared.sentences) == 10


def test_nli_triplets_cross_product_and_dedup(snli_dir):
    prepared = prepare_nli_triplets(snli_dir, "snli", "train")
    assert prepared.task == "te_triplet"
    assert len(prepared.label_rows) == 3
    assert prepared.skipped_unlabeled == 1
    assert prepared.skipped_degenerate == 0
    by_premise = {}
    for premise, entail, contra in prepared.label_rows:
        by_premise.setdefault(prepared.sentences[premise], []).append(
            (prepared.sentences[entail], prepared.sentences[contra])
        )
    assert sorted(by_premise["a dog runs in the park"]) == [
        ("a dog is moving", "the dog is asleep"),
        ("an animal is outside", "the dog is asleep"),
    ]
    assert by_premise["two women cook pasta"] == [
        ("people prepare food", "nobody is cooking")
    ]
    assert "a child reads a book" not in by_premise


def test_one_entailment_two_contradictions_gives_two_triples(tmp_path):
    rows = [
        {"gold_label": "entailment", "sentence1": "p", "sentence2": "e1"},
        {"gold_label": "contradiction", "sentence1": "p", "sentence2": "c1"},
        {"gold_label": "contradiction", "sentence1": "p", "sentence2": "c2"},
    ]
    (tmp_path / "train.jsonl").write_text(
        "\n".join(json.dumps(row) for row in rows) + "\n", "utf-8"
    )
    prepared = prepare_nli_triplets(tmp_path, "snli", "train")
    assert len(prepared.label_rows) == 2


def test_conflicting_hypothesis_yields_degenerate_triple(tmp_path):
    rows = [
        {"gold_label": "entailment", "sentence1": "p", "sentence2": "same words"},
        {"gold_label": "contradiction", "sentence1": "p", "sentence2": "same words"},
        {"gold_label": "entailment", "sentence1": "p", "sentence2": "other"},
    ]
    (tmp_path / "train.jsonl").write_text(
        "\n".join(json.dumps(row) for row in rows) + "\n", "utf-8"
    )
    prepared = prepare_nli_triplets(tmp_path, "snli", "train")
    assert prepared.skipped_degenerate == 1
    assert len(prepared.label_rows) == 1


def test_no_premise_with_both_classes_rejected(tmp_path):
    rows = [{"gold_label": "entailment", "sentence1": "p", "sentence2": "h"}]
    (tmp_path / "train.jsonl").write_text(json.dumps(rows[0]) + "\n", "utf-8")
    with pytest.raises(DatasetError, match="both classes"):
        prepare_nli_triplets(tmp_path, "snli", "train")


def test_short_label_and_key_variants(anli_dir):
    prepared = prepare_nli_pairs(anli_dir, "anli", "train")
    assert [row[2] for row in prepared.label_rows] == [
        "entailment",
        "contradiction",
        "neutral",
    ]
    triples = prepare_nli_triplets(anli_dir, "anli", "train")
    assert len(triples.label_rows) == 1


@pytest.mark.parametrize(
    "line,message",
    [
        ("{broken", "bad JSON"),
        (json.dumps({"sentence1": "p", "sentence2": "h"}), "missing label"),
        (
            json.dumps({"gold_label": "maybe", "sentence1": "p", "sentence2": "h"}),
            "unknown label",
        ),
    ],
)
def test_nli_malformed_rows_rejected(tmp_path, line, message):
    (tmp_path / "train.jsonl").write_text(line + "\n", "utf-8")
    with pytest.raises(DatasetError, match=message):
        prepare_nli_pairs(tmp_path, "snli", "train")


def test_mnli_dev_sets_stand_in_for_dev_and_test(tmp_path):
    row = json.dumps(
        {"gold_label": "entailment", "sentence1": "p", "sentence2": "h"}
    )
    for name in (
        "multinli_1.0_train.jsonl",
        "multinli_1.0_dev_matched.jsonl",
        "multinli_1.0_dev_mismatched.jsonl",
    ):
        (tmp_path / name).write_text(row + "\n", "utf-8")
    prepared = build_labels(tmp_path, "mnli", "te_pair", ("train", "dev", "test"))
    assert set(prepared) == {"train", "dev", "test"}


def test_dispatch_rejects_impossible_combination(tmp_path):
    with pytest.raises(DatasetError, match="produces task 'sts'"):
        prepare_split(tmp_path, "stsb", "te_pair", "train")
    with pytest.raises(DatasetError, match="cannot produce"):
        prepare_split(tmp_path, "snli", "sts", "train")


def test_label_files_load_through_the_store_reader(tmp_path, stsb_dir, snli_dir):
    sts = prepare_stsb(stsb_dir, "train")
    write_label_files(sts, tmp_path / "sts")
    pairs = load_labels(tmp_path / "sts" / "labels.tsv", "sts", len(sts.sentences))
    assert len(pairs.labels) == 6
    assert pairs.labels[0] == 0.0
    assert pairs.labels[1] == pytest.approx((5.0 - 3.8) / 5.0)

    te = prepare_nli_pairs(snli_dir, "snli", "train")
    write_label_files(te, tmp_path / "te")
    loaded = load_labels(tmp_path / "te" / "labels.tsv", "te_pair", len(te.sentences))
    assert loaded.dropped_neutral == 1
    assert len(loaded.labels) == 7

    triples = prepare_nli_triplets(snli_dir, "snli", "train")
    write_label_files(triples, tmp_path / "tri")
    loaded_triples = load_labels(
        tmp_path / "tri" / "labels.tsv", "te_triplet", len(triples.sentences)
    )
    assert len(loaded_triples.premise) == 3
