"""Emotion-cause pair extraction: data preparation, training and evaluation.

Thin wrappers over the compiled core. Structured results come back as plain
dicts and lists.
"""

import json
import os

from . import _core
from ._core import ConfigError, Error, ParseError, ValidationError, relative_bucket

REFERENCE_PARAMETER_COUNT = _core.REFERENCE_PARAMETER_COUNT

__all__ = [
    "ConfigError",
    "Error",
    "ParseError",
    "ValidationError",
    "REFERENCE_PARAMETER_COUNT",
    "ablate_positional",
    "clause_prf",
    "evaluate",
    "make_splits",
    "pair_prf",
    "parameter_report",
    "parse_corpus",
    "predict",
    "prepare",
    "relative_bucket",
    "resolve_config",
    "sweep_loss_weight",
    "synthetic_fixture",
    "train",
]


def _overrides(values):
    out = {}
    for key, value in values.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        out[key] = str(value)
    return out


def _path(p):
    return os.fspath(p) if p is not None else ""


def pair_prf(predicted, gold):
    """Exact-match P/R/F1 over (doc_id, emotion_index, cause_index) triples."""
    return json.loads(_core.pair_prf(list(predicted), list(gold)))


def clause_prf(predicted, gold):
    return json.loads(_core.clause_prf(list(predicted), list(gold)))


def parse_corpus(path):
    return json.loads(_core.parse_corpus(_path(path)))


def make_splits(corpus, seed, split_count=10):
    return json.loads(_core.make_splits(_path(corpus), seed, split_count))


def synthetic_fixture(directory, documents=50, seed=1, dim=200):
    """Writes corpus.jsonl and embeddings.txt; returns their paths."""
    return _core.synthetic_fixture(_path(directory), documents, seed, dim)


def prepare(corpus, embeddings, seed, out, min_count=1, dim=200):
    """Validates inputs and writes splits, vocabularies and manifest.json."""
    return json.loads(_core.prepare(_path(corpus), _path(embeddings), seed, _path(out), min_count, dim))


def resolve_config(config=None, **overrides):
    """The effective key = value configuration text."""
    return _core.resolve_config(_path(config), _overrides(overrides))


def train(out, config=None, **overrides):
    """Trains one split into `out`. Keyword arguments override config keys."""
    return json.loads(_core.train(_path(config), _overrides(overrides), _path(out)))


def evaluate(checkpoint, mode="ecpe", set="test", data_dir=None, predictions=None):
    return json.loads(_core.evaluate(_path(checkpoint), mode, set, _path(data_dir), _path(predictions)))


def predict(checkpoint, clauses):
    """Pairs, emotion and cause probabilities for one unlabelled document."""
    return json.loads(_core.predict(_path(checkpoint), list(clauses)))


def ablate_positional(out, config=None, **overrides):
    return json.loads(_core.ablate_positional(_path(config), _overrides(overrides), _path(out)))


def sweep_loss_weight(out, weights, seeds=(), config=None, workers=0, **overrides):
    return json.loads(
        _core.sweep_loss_weight(_path(config), _overrides(overrides), list(weights), list(seeds), _path(out), workers)
    )


def parameter_report(checkpoint):
    return json.loads(_core.parameter_report(_path(checkpoint)))
