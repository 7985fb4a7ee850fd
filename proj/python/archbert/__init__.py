"""Python bindings for the archbert toolkit.

Graphs cross the boundary as ``Graph`` objects; dataset records and loss
logs come back as plain dicts.
"""

import json

from ._core import (
    DataError,
    Graph,
    GraphValidationError,
    Index,
    Model,
    ParseError,
    __version__,
    accuracy_f1,
    build_index,
    catalog_ops,
    default_op_vocab,
    jaccard_similarity,
    mine_negatives,
    normalize_words,
    rouge_scores,
    run_cli,
    token_overlap_similarity,
)
from . import _core

__all__ = [
    "DataError",
    "Graph",
    "GraphValidationError",
    "Index",
    "Model",
    "ParseError",
    "accuracy_f1",
    "build_index",
    "catalog_ops",
    "default_op_vocab",
    "generate",
    "graph",
    "jaccard_similarity",
    "mine_negatives",
    "normalize_words",
    "rouge_scores",
    "run_cli",
    "token_overlap_similarity",
    "train",
]


def graph(obj):
    """Graph from a dict or a JSON string with nodes, edges and shapes."""
    if isinstance(obj, Graph):
        return obj
    if not isinstance(obj, str):
        obj = json.dumps(obj)
    return Graph.from_json(obj)


def generate(task, seed=0, count=0, config=None):
    """Synthetic records for ``task`` as dicts.

    ``config`` is the text of a config file or a mapping of
    ``{"gen": {key: value}}``; count 0 falls back to the configured size.
    """
    return [json.loads(r) for r in _core._generate(task, seed, count, _config_text(config))]


def train(model, task, records, epochs=1, lr=2e-5, batch_size=8, seed=0):
    """Trains ``model`` in place on dict records; returns the epoch log."""
    lines = [r if isinstance(r, str) else json.dumps(r) for r in records]
    return [json.loads(e) for e in _core._train(model, task, lines, epochs, lr, batch_size, seed)]


def _config_text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    out = []
    for section, values in config.items():
        out.append(f"[{section}]")
        for key, value in values.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"
