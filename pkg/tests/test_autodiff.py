"""Reverse-mode autodiff engine: per-op finite-difference oracles and
structural properties of the tape."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpae import autodiff as ad
from graphpae.errors import ContractError, ShapeError


def _p(rng, *shape, name=None):
    return ad.parameter(rng.standard_normal(shape), name=name)


def check(fn, params, tol=1e-6, h=1e-5):
    err = ad.finite_diff_check(fn, params, h=h)
    assert err <= tol, f"finite-difference mismatch: {err}"


# ---------------------------------------------------------------------------
# per-op oracles (evaluated at generic points, away from kinks)


def test_add_mul_div_sub_grads():
    rng = np.random.default_rng(0)
    a, b = _p(rng, 4, 3), _p(rng, 4, 3)
    b.data = b.data + 3.0  # keep the divisor away from zero
    check(lambda: ad.sum_(ad.add(a, b)), {"a": a, "b": b})
    check(lambda: ad.sum_(ad.sub(a, b)), {"a": a, "b": b})
    check(lambda: ad.sum_(ad.mul(a, b)), {"a": a, "b": b})
    check(lambda: ad.sum_(ad.div(a, b)), {"a": a, "b": b})


def test_broadcast_bias_grad():
    rng = np.random.default_rng(1)
    x, b = _p(rng, 5, 3), _p(rng, 3)
    check(lambda: ad.sum_(ad.square(ad.add(x, b))), {"x": x, "b": b})


def test_matmul_grad_and_shape_errors():
    rng = np.random.default_rng(2)
    a, b = _p(rng, 4, 3), _p(rng, 3, 2)
    check(lambda: ad.sum_(ad.matmul(a, b)), {"a": a, "b": b})
    with pytest.raises(ShapeError):
        ad.matmul(a, _p(rng, 4, 2))
    with pytest.raises(ShapeError):
        ad.matmul(a, _p(rng, 3))


def test_reshape_concat_gather_grads():
    rng = np.random.default_rng(3)
    a, b = _p(rng, 4, 3), _p(rng, 4, 2)
    idx = np.array([0, 2, 2, 3, 1])
    check(lambda: ad.sum_(ad.square(ad.reshape(a, (2, 6)))), {"a": a})
    check(lambda: ad.sum_(ad.square(ad.concat([a, b], axis=1))), {"a": a, "b": b})
    check(lambda: ad.sum_(ad.square(ad.gather_rows(a, idx))), {"a": a})


def test_segment_ops_grads():
    rng = np.random.default_rng(4)
    a = _p(rng, 8, 3)
    seg = np.array([0, 0, 1, 1, 1, 2, 3, 3])
    check(lambda: ad.sum_(ad.square(ad.segment_sum(a, seg, 4))), {"a": a})
    check(lambda: ad.sum_(ad.square(ad.segment_softmax(a, seg, 4))), {"a": a})


def test_elementwise_grads():
    rng = np.random.default_rng(5)
    a = _p(rng, 4, 3)
    a.data = a.data + np.where(a.data >= 0, 0.5, -0.5)  # push away from 0 kinks
    pos = ad.parameter(np.abs(rng.standard_normal((4, 3))) + 0.5)
    check(lambda: ad.sum_(ad.relu(a)), {"a": a})
    check(lambda: ad.sum_(ad.leaky_relu(a)), {"a": a})
    check(lambda: ad.sum_(ad.sigmoid(a)), {"a": a})
    check(lambda: ad.sum_(ad.exp(a)), {"a": a})
    check(lambda: ad.sum_(ad.softplus(a)), {"a": a})
    check(lambda: ad.sum_(ad.absval(a)), {"a": a})
    check(lambda: ad.sum_(ad.sqrt(pos)), {"p": pos})
    check(lambda: ad.sum_(ad.square(a)), {"a": a})
    check(lambda: ad.sum_(ad.powc(pos, 2.5)), {"p": pos})


def test_huber_grad_away_from_threshold():
    vals = np.array([-2.0, -0.5, 0.3, 0.7, 1.5, 3.0])
    a = ad.parameter(vals)
    check(lambda: ad.sum_(ad.huber(a)), {"a": a})


def test_reduction_grads():
    rng = np.random.default_rng(6)
    a = _p(rng, 4, 3)
    check(lambda: ad.sum_(ad.square(ad.sum_(a, axis=0))), {"a": a})
    check(lambda: ad.sum_(ad.square(ad.mean(a, axis=1))), {"a": a})
    check(lambda: ad.sum_(ad.norm_rows(a)), {"a": a})


# ---------------------------------------------------------------------------
# structural properties


def test_segment_softmax_rows_sum_to_one():
    rng = np.random.default_rng(7)
    a = ad.Tensor(rng.standard_normal((10, 4)))
    seg = np.array([0, 0, 0, 1, 1, 2, 2, 2, 2, 3])
    soft = ad.segment_softmax(a, seg, 4).data
    sums = np.zeros((4, 4))
    np.add.at(sums, seg, soft)
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)


def test_segment_softmax_shift_invariant():
    rng = np.random.default_rng(8)
    vals = rng.standard_normal((6, 2))
    seg = np.array([0, 0, 1, 1, 1, 2])
    shift = np.array([5.0, -3.0, 100.0])[seg][:, None]
    a = ad.segment_softmax(ad.Tensor(vals), seg, 3).data
    b = ad.segment_softmax(ad.Tensor(vals + shift), seg, 3).data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_backward_requires_scalar():
    a = ad.parameter(np.ones((2, 2)))
    with pytest.raises(ContractError):
        ad.backward(ad.square(a))


def test_gradient_accumulates_over_reuse():
    a = ad.parameter(np.array([2.0]))
    loss = ad.sum_(ad.add(ad.mul(a, a), ad.mul(3.0, a)))  # a^2 + 3a
    ad.backward(loss)
    np.testing.assert_allclose(a.grad, [2 * 2.0 + 3.0])


def test_constant_subgraphs_are_pruned():
    a = ad.Tensor(np.ones((2, 2)))  # not a parameter
    out = ad.mul(ad.add(a, a), 2.0)
    assert out._parents == ()


def test_dropout_identity_at_rate_zero():
    a = ad.parameter(np.ones((3, 3)))
    out = ad.dropout(a, 0.0, np.random.default_rng(0))
    assert out is a


def test_dropout_inverted_scaling():
    rng = np.random.default_rng(0)
    a = ad.Tensor(np.ones((2000, 4)))
    out = ad.dropout(a, 0.25, rng).data
    kept = out != 0.0
    np.testing.assert_allclose(out[kept], 1.0 / 0.75)
    assert abs(kept.mean() - 0.75) < 0.03


def test_zero_grad_and_grad_or_zero():
    a = ad.parameter(np.ones(3))
    ad.backward(ad.sum_(ad.square(a)))
    assert a.grad is not None
    ad.zero_grad({"a": a})
    assert a.grad is None
    np.testing.assert_array_equal(ad.grad_or_zero(a), np.zeros(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_mul_grad_formula(seed):
    rng = np.random.default_rng(seed)
    a, b = _p(rng, 3, 2), _p(rng, 3, 2)
    ad.backward(ad.sum_(ad.mul(a, b)))
    np.testing.assert_allclose(a.grad, b.data, atol=1e-15)
    np.testing.assert_allclose(b.grad, a.data, atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_composite_expression_grad(seed):
    rng = np.random.default_rng(seed)
    w = _p(rng, 4, 3)
    x = rng.standard_normal((5, 4))
    y = rng.standard_normal((5, 3))
    check(lambda: ad.mean(ad.square(ad.sub(ad.matmul(ad.Tensor(x), w), y))), {"w": w})
