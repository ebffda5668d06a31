"""Distributional clause programs over relational tables."""

from ._core import (
    DcmlError,
    auc_total,
    format_program,
    learn,
    learn_em,
    nrmse,
    predict,
    query,
    validate,
)

__all__ = [
    "DcmlError",
    "auc_total",
    "format_program",
    "learn",
    "learn_em",
    "nrmse",
    "predict",
    "query",
    "validate",
]
