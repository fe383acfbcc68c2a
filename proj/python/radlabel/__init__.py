"""Organ-level labels for CT report findings.

The rule engine, metrics and synthetic corpus run without a model; a trained
checkpoint from the ``radlabel train`` command can be loaded with
:class:`Classifier`.
"""

from ._core import (
    Classifier,
    RadlabelError,
    binary_metrics,
    classify_sentence,
    delong_ci,
    findings,
    generate_corpus,
    label_report,
    rba_tokenize,
    rnn_tokenize,
    roc_auc,
    segment_sentences,
    tfidf_rank,
)

__all__ = [
    "Classifier",
    "RadlabelError",
    "binary_metrics",
    "classify_sentence",
    "delong_ci",
    "findings",
    "generate_corpus",
    "label_report",
    "rba_tokenize",
    "rnn_tokenize",
    "roc_auc",
    "segment_sentences",
    "tfidf_rank",
]
