"""Data depth quantile functions for anomaly detection.

Bundles and reports come back as plain dicts with the same layout as the
JSON files written by the `dqf` command-line tool.
"""

import json

import numpy as np

from . import _core
from ._core import DqfError, UndefinedAucError, auc, dqf_1d, gram_from_coordinates, scenarios

__all__ = [
    "DqfError",
    "UndefinedAucError",
    "auc",
    "compute",
    "compute_gram",
    "dqf_1d",
    "gram_from_coordinates",
    "rank",
    "report",
    "scenarios",
    "simulate",
]


def _config_text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def compute(x, config=None, *, z_scale=True, ids=None, threads=0, raw=False):
    """Bundle for an (n, d) array. `raw=True` returns the exact JSON text."""
    text = _core.compute_bundle(np.asarray(x, dtype=float), _config_text(config), z_scale, ids, threads)
    return text if raw else json.loads(text)


def compute_gram(k, config=None, *, ids=None, check_psd=True, threads=0, raw=False):
    """Bundle for an (n, n) Gram matrix of inner products."""
    text = _core.compute_bundle_gram(np.asarray(k, dtype=float), _config_text(config), ids, check_psd, threads)
    return text if raw else json.loads(text)


def report(bundle, labels=None, *, delta=None, view="q_bar", angle=None):
    """Anomaly report for a bundle (dict or JSON text)."""
    text = bundle if isinstance(bundle, str) else json.dumps(bundle)
    if labels is not None:
        labels = [int(v) for v in labels]
    return json.loads(_core.report(text, labels, delta, view, angle))


def rank(values, delta_grid):
    """First-unique-argmin ranking of the rows of `values`."""
    ranks, scores, delta_star, fallback = _core.rank_first_unique_argmin(
        np.asarray(values, dtype=float), list(delta_grid)
    )
    return {"ranks": ranks, "scores": scores, "delta_star": delta_star, "fallback": fallback}


def simulate(name, seed=1, n=None):
    """(coords, labels, ids) for a named scenario; labels use 1 for anomalies."""
    coords, labels, ids = _core.simulate(name, seed, n)
    return np.asarray(coords), np.asarray(labels, dtype=int), ids
