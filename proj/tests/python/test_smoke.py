import json
import math
import os
import shutil
import subprocess

import pytest

import radlabel


SAMPLE = (
    "Protocol: CT Chest Abdomen and Pelvis without contrast\n"
    "Findings: Central airways are patent. Basilar atelectasis. Gallbladder is unremarkable. "
    "Nonobstructive right renal stone in the inferior pole.\n"
    "Impression: Stable."
)


def test_tokenizers():
    assert radlabel.rba_tokenize("Non-obstructing 5-mm stone") == ["non-obstructing", "mm", "stone"]
    assert radlabel.rnn_tokenize("Nodule measuring 1.8 x 2.1 cm.") == ["nodule", "measuring", "x", "cm"]
    assert radlabel.segment_sentences("Basilar atelectasis. No focal pulmonary consolidation.") == [
        ["basilar", "atelectasis"],
        ["no", "focal", "pulmonary", "consolidation"],
    ]


def test_label_report():
    labels = radlabel.label_report(SAMPLE)
    assert labels["lungs"]["atelectasis"] and not labels["lungs"]["normal"]
    assert labels["liver"]["normal"]
    assert labels["kidneys"]["stone"]


def test_sentence_verdicts():
    assert radlabel.classify_sentence("Basilar atelectasis.", "lungs")["votes"] == ["atelectasis"]
    assert radlabel.classify_sentence("no pleural effusion or pneumothorax", "lungs")["votes"] == []
    assert radlabel.classify_sentence("Limited view of the lung bases appear clear.", "lungs")["normal"]
    with pytest.raises(ValueError):
        radlabel.classify_sentence("clear", "spleen")


def test_metrics():
    auc, var, lo, hi = radlabel.delong_ci([0.9, 0.4, 0.1, 0.6], [1, 1, 0, 0])
    assert auc == pytest.approx(0.75)
    assert var == pytest.approx(0.125)
    assert lo == pytest.approx(0.75 - 1.959963984540054 * math.sqrt(0.125))
    assert hi == 1.0
    assert radlabel.roc_auc([0.3, 0.3], [1, 0]) == 0.5
    assert radlabel.binary_metrics(8, 2, 8, 2)["f1"] == pytest.approx(0.8)
    with pytest.raises(radlabel.RadlabelError):
        radlabel.roc_auc([0.1, 0.2], [1, 1])


def test_tfidf():
    ranked = radlabel.tfidf_rank(["atelectasis and atelectasis", "clear", "effusion"], 3)
    assert ranked[0][0] == "atelectasis"
    assert ranked[0][1] == pytest.approx(2 * math.log(3))


def test_generated_corpus_round_trips():
    corpus = radlabel.generate_corpus(count=50, seed=4)
    assert len(corpus) == 50
    for row in corpus:
        labels = radlabel.label_report(row["raw_text"])
        assert labels == row["truth"]


def _cli():
    here = os.path.dirname(__file__)
    for candidate in (os.environ.get("RADLABEL_CLI"), os.path.join(here, "..", "..", "build", "radlabel")):
        if candidate and os.path.exists(candidate):
            return candidate
    return shutil.which("radlabel")


@pytest.mark.skipif(_cli() is None, reason="radlabel command-line binary not built")
def test_classifier_from_trained_checkpoint(tmp_path):
    reports = tmp_path / "reports.jsonl"
    with open(reports, "w") as f:
        for row in radlabel.generate_corpus(count=300, seed=2):
            f.write(json.dumps({k: row[k] for k in ("report_id", "subject_id", "raw_text")}) + "\n")
    ckpt = tmp_path / "model.ckpt"
    subprocess.run(
        [_cli(), "train", "--in", str(reports), "--out", str(ckpt), "--epochs", "1", "--embed-dim", "8",
         "--units", "8", "--dense-units", "8", "--max-len", "32", "--batch-size", "32", "--quiet"],
        check=True,
    )
    model = radlabel.Classifier(str(ckpt))
    assert model.organ == "lungs"
    assert model.labels[-1] == "normal"
    probs = model.predict(["Basilar atelectasis.", "The lungs are clear."])
    assert len(probs) == 2 and all(0.0 < p < 1.0 for row in probs for p in row)
    weights = model.attention("Basilar atelectasis.")
    assert [t for t, _ in weights] == ["basilar", "atelectasis"]
