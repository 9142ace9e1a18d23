"""Per-user recommender algorithm selection (C++ core)."""

import json

from ._core import (
    GBTEnsemble,
    GBTParams,
    RecselError,
    code_metrics,
    dataset_stats,
    fit_gbt,
    gap_closed,
    ndcg_at_k,
    relative_gain,
    report_columns,
    sparsity,
    source_dir,
)
from . import _core


def run(path, **kwargs):
    """Full pipeline on an interaction file; returns the report as a dict."""
    return json.loads(_core.run(str(path), **kwargs))


def report_csv(report):
    return _core.report_csv(json.dumps(report))


def report_table(report):
    return _core.report_table(json.dumps(report))


__all__ = [
    "GBTEnsemble",
    "GBTParams",
    "RecselError",
    "code_metrics",
    "dataset_stats",
    "fit_gbt",
    "gap_closed",
    "ndcg_at_k",
    "relative_gain",
    "report_columns",
    "report_csv",
    "report_table",
    "run",
    "sparsity",
    "source_dir",
]
