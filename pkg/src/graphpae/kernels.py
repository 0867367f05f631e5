"""Scatter/gather kernels used by the autodiff engine.

A compiled Cython implementation is preferred when available; a pure-NumPy
fallback (``np.add.at`` / ``np.maximum.at``) is selected otherwise, or when
the ``GRAPHPAE_PURE_PY`` environment variable is set. Both give bit-identical
results because accumulation order is the edge order in either case.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["BACKEND", "segment_sum", "index_add_rows", "segment_max"]


def _py_segment_sum(values, segments, num_segments):
    out = np.zeros((num_segments, values.shape[1]), dtype=np.float64)
    np.add.at(out, segments, values)
    return out


def _py_index_add_rows(out, index, values):
    np.add.at(out, index, values)


def _py_segment_max(values, segments, num_segments):
    out = np.full((num_segments, values.shape[1]), -np.inf, dtype=np.float64)
    np.maximum.at(out, segments, values)
    return out


if os.environ.get("GRAPHPAE_PURE_PY"):
    _impl = None
else:
    try:
        from graphpae import _speedups as _impl
    except ImportError:
        _impl = None

if _impl is not None:
    BACKEND = "cython"

    def segment_sum(values, segments, num_segments):
        return _impl.segment_sum(
            np.ascontiguousarray(values, dtype=np.float64),
            np.ascontiguousarray(segments, dtype=np.int64),
            num_segments,
        )

    def index_add_rows(out, index, values):
        _impl.index_add_rows(
            out,
            np.ascontiguousarray(index, dtype=np.int64),
            np.ascontiguousarray(values, dtype=np.float64),
        )

    def segment_max(values, segments, num_segments):
        return _impl.segment_max(
            np.ascontiguousarray(values, dtype=np.float64),
            np.ascontiguousarray(segments, dtype=np.int64),
            num_segments,
        )

else:
    BACKEND = "numpy"
    segment_sum = _py_segment_sum
    index_add_rows = _py_index_add_rows
    segment_max = _py_segment_max
