"""Scatter/gather kernels: compiled and pure-NumPy backends must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpae import kernels


def _random_case(seed, e=200, d=7, s=23):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((e, d))
    segments = rng.integers(0, s, size=e)
    return values, segments, s


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")


def test_segment_sum_matches_numpy():
    values, segments, s = _random_case(0)
    expect = np.zeros((s, values.shape[1]))
    np.add.at(expect, segments, values)
    got = kernels.segment_sum(values, segments, s)
    np.testing.assert_array_equal(got, expect)


def test_segment_sum_empty():
    out = kernels.segment_sum(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), 4)
    np.testing.assert_array_equal(out, np.zeros((4, 3)))


def test_index_add_rows_matches_numpy():
    values, segments, s = _random_case(1)
    out_a = np.random.default_rng(9).standard_normal((s, values.shape[1]))
    out_b = out_a.copy()
    kernels.index_add_rows(out_a, segments, values)
    np.add.at(out_b, segments, values)
    np.testing.assert_array_equal(out_a, out_b)


def test_index_add_rows_readonly_values():
    # backward passes hand broadcast (read-only) gradient arrays to the kernel
    values, segments, s = _random_case(2)
    values.setflags(write=False)
    out = np.zeros((s, values.shape[1]))
    kernels.index_add_rows(out, segments, values)
    expect = np.zeros_like(out)
    np.add.at(expect, segments, values)
    np.testing.assert_array_equal(out, expect)


def test_segment_max_matches_numpy():
    values, segments, s = _random_case(3)
    expect = np.full((s, values.shape[1]), -np.inf)
    np.maximum.at(expect, segments, values)
    got = kernels.segment_max(values, segments, s)
    np.testing.assert_array_equal(got, expect)


def test_segment_max_empty_segment_is_minus_inf():
    values = np.array([[1.0], [2.0]])
    segments = np.array([0, 0])
    out = kernels.segment_max(values, segments, 3)
    assert out[0, 0] == 2.0
    assert np.isneginf(out[1, 0]) and np.isneginf(out[2, 0])


def test_backends_bit_identical():
    values, segments, s = _random_case(4, e=500, d=11)
    np.testing.assert_array_equal(kernels.segment_sum(values, segments, s),
                                  kernels._py_segment_sum(values, segments, s))
    np.testing.assert_array_equal(kernels.segment_max(values, segments, s),
                                  kernels._py_segment_max(values, segments, s))
    out_a = np.zeros((s, values.shape[1]))
    out_b = np.zeros((s, values.shape[1]))
    kernels.index_add_rows(out_a, segments, values)
    kernels._py_index_add_rows(out_b, segments, values)
    np.testing.assert_array_equal(out_a, out_b)


def test_pure_python_env_override_selects_numpy_backend():
    env = dict(os.environ, GRAPHPAE_PURE_PY="1")
    out = subprocess.run(
        [sys.executable, "-c", "from graphpae import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_segment_sum_preserves_column_totals(seed):
    values, segments, s = _random_case(seed, e=50, d=3, s=7)
    out = kernels.segment_sum(values, segments, s)
    np.testing.assert_allclose(out.sum(axis=0), values.sum(axis=0), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_segment_max_is_upper_bound(seed):
    values, segments, s = _random_case(seed, e=50, d=3, s=7)
    out = kernels.segment_max(values, segments, s)
    assert np.all(values <= out[segments] + 1e-15)
