"""Tests for matta_sdk/diffcore/: tensors, ops, gradients and random streams."""

import numpy as np
import pytest

from matta_sdk.diffcore import (
    Graph,
    ParameterScope,
    Rng,
    Tensor,
    activation,
    add,
    backward,
    concat_cols,
    log_softmax_rows,
    matmul,
    mul,
    scale,
    set_debug,
    softmax_rows,
    split_cols,
    stop_gradient,
    sum_all,
)
from matta_sdk.utils.errors import BoundsError, ContractError, DimensionError, NumericalError

H = 1e-5


def _numeric_grad(fn, value, h=H):
    """Central differences of a scalar numpy function."""
    grad = np.zeros_like(value)
    for idx in np.ndindex(value.shape):
        plus = value.copy()
        minus = value.copy()
        plus[idx] += h
        minus[idx] -= h
        grad[idx] = (fn(plus) - fn(minus)) / (2 * h)
    return grad


def _check_unary(op, value, weights):
    """Compare d/dx sum(weights * op(x)) against finite differences."""
    graph = Graph()
    x = graph.leaf(value)
    loss = sum_all(mul(op(x), Tensor(weights)))
    backward(graph, loss)
    analytic = graph.grad(x)

    def fn(v):
        return float((op(Tensor(v)).data * weights).sum())

    numeric = _numeric_grad(fn, value)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)


# ---------------------------------------------------------------------------
# Tensor basics
# ---------------------------------------------------------------------------

def test_tensor_rejects_non_2d():
    with pytest.raises(DimensionError):
        Tensor(np.zeros(3))


def test_tensor_rejects_nan():
    with pytest.raises(NumericalError):
        Tensor([[1.0, float("nan")]])


def test_leaves_and_scope_constants_reject_non_finite_values():
    with pytest.raises(NumericalError):
        Graph().leaf(np.array([[0.0, np.inf]]))
    with pytest.raises(NumericalError):
        ParameterScope(Graph()).get("w", np.array([[np.nan]]))
    with pytest.raises(NumericalError):
        ParameterScope().get("w", np.array([[-np.inf]]))


def test_tensor_data_is_read_only():
    t = Tensor(np.ones((2, 2)))
    with pytest.raises(ValueError):
        t.data[0, 0] = 5.0
    copy = t.numpy()
    copy[0, 0] = 5.0
    assert t.data[0, 0] == 1.0


def test_item_requires_scalar():
    assert Tensor([[2.5]]).item() == 2.5
    with pytest.raises(ContractError):
        Tensor(np.ones((1, 2))).item()


# ---------------------------------------------------------------------------
# Shape errors
# ---------------------------------------------------------------------------

def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match="2x3 @ 2x3"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_add_and_mul_require_same_shape():
    with pytest.raises(DimensionError):
        add(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3))))
    with pytest.raises(DimensionError):
        mul(Tensor(np.ones((2, 2))), Tensor(np.ones((3, 2))))


def test_split_cols_out_of_range():
    with pytest.raises(BoundsError):
        split_cols(Tensor(np.ones((2, 3))), 4)


def test_split_cols_edges_give_empty_halves():
    left, right = split_cols(Tensor(np.ones((2, 3))), 0)
    assert left.shape == (2, 0) and right.shape == (2, 3)
    left, right = split_cols(Tensor(np.ones((2, 3))), 3)
    assert left.shape == (2, 3) and right.shape == (2, 0)


def test_unknown_activation():
    with pytest.raises(ContractError):
        activation(Tensor(np.ones((1, 1))), "swish")


# ---------------------------------------------------------------------------
# log_softmax_rows
# ---------------------------------------------------------------------------

def test_log_softmax_rows_exponentiate_to_one():
    x = np.random.default_rng(8).normal(scale=20.0, size=(50, 7))
    out = log_softmax_rows(Tensor(x)).numpy()
    np.testing.assert_allclose(np.exp(out).sum(axis=1), 1.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("shift", [-250.0, 3.7, 1e3])
def test_log_softmax_rows_ignore_row_constants(shift):
    gen = np.random.default_rng(9)
    x = gen.normal(size=(6, 4))
    per_row = shift * gen.random(size=(6, 1))
    base = log_softmax_rows(Tensor(x)).numpy()
    np.testing.assert_allclose(log_softmax_rows(Tensor(x + per_row)).numpy(), base, rtol=0, atol=1e-12)


# ---------------------------------------------------------------------------
# Gradients against central differences
# ---------------------------------------------------------------------------

@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.mark.parametrize("kind", ["tanh", "gelu_tanh"])
def test_activation_gradients(rng, kind):
    _check_unary(lambda t: activation(t, kind), rng.normal(size=(3, 4)), rng.normal(size=(3, 4)))


def test_relu_gradient_away_from_kink(rng):
    value = rng.normal(size=(3, 4))
    value[np.abs(value) < 0.1] = 0.5
    _check_unary(lambda t: activation(t, "relu"), value, rng.normal(size=(3, 4)))


def test_log_softmax_gradient(rng):
    _check_unary(log_softmax_rows, rng.normal(size=(4, 3)), rng.normal(size=(4, 3)))


def test_softmax_gradient(rng):
    _check_unary(softmax_rows, rng.normal(size=(4, 3)), rng.normal(size=(4, 3)))


def test_scale_gradient(rng):
    _check_unary(lambda t: scale(t, -2.5), rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))


def test_matmul_gradients(rng):
    a_val, b_val = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    weights = rng.normal(size=(3, 2))
    graph = Graph()
    a, b = graph.leaf(a_val), graph.leaf(b_val)
    backward(graph, sum_all(mul(matmul(a, b), Tensor(weights))))

    num_a = _numeric_grad(lambda v: float(((v @ b_val) * weights).sum()), a_val)
    num_b = _numeric_grad(lambda v: float(((a_val @ v) * weights).sum()), b_val)
    np.testing.assert_allclose(graph.grad(a), num_a, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(graph.grad(b), num_b, rtol=1e-6, atol=1e-8)


def test_split_concat_round_trip_gradient(rng):
    value = rng.normal(size=(2, 5))
    weights = rng.normal(size=(2, 5))
    graph = Graph()
    x = graph.leaf(value)
    left, right = split_cols(x, 2)
    backward(graph, sum_all(mul(concat_cols(left, right), Tensor(weights))))
    np.testing.assert_array_equal(graph.grad(x), weights)


def test_fan_out_gradients_accumulate(rng):
    value = rng.normal(size=(2, 2))
    graph = Graph()
    x = graph.leaf(value)
    backward(graph, sum_all(add(x, x)))
    np.testing.assert_array_equal(graph.grad(x), np.full((2, 2), 2.0))


# ---------------------------------------------------------------------------
# stop_gradient
# ---------------------------------------------------------------------------

def test_stop_gradient_is_identity_forward(rng):
    value = rng.normal(size=(2, 3))
    np.testing.assert_array_equal(stop_gradient(Tensor(value)).data, value)


def test_stop_gradient_blocks_backward(rng):
    graph = Graph()
    x = graph.leaf(rng.normal(size=(2, 3)))
    backward(graph, sum_all(mul(stop_gradient(x), x)))
    # Only the direct factor contributes: d/dx sum(sg(x) * x) = x
    np.testing.assert_array_equal(graph.grad(x), x.data)


def test_unreachable_leaf_has_zero_gradient():
    graph = Graph()
    used = graph.leaf(np.ones((1, 1)))
    unused = graph.leaf(np.ones((2, 2)))
    backward(graph, scale(used, 3.0))
    assert graph.grad(used)[0, 0] == 3.0
    np.testing.assert_array_equal(graph.grad(unused), np.zeros((2, 2)))


def test_backward_requires_scalar_seed():
    graph = Graph()
    x = graph.leaf(np.ones((2, 2)))
    with pytest.raises(ContractError):
        backward(graph, scale(x, 1.0))


# ---------------------------------------------------------------------------
# ParameterScope
# ---------------------------------------------------------------------------

def test_scope_binds_one_leaf_per_name():
    graph = Graph()
    scope = ParameterScope(graph)
    w = np.ones((2, 2))
    first = scope.get("w", w)
    second = scope.get("w", w)
    assert first is second
    backward(graph, sum_all(add(first, second)))
    np.testing.assert_array_equal(scope.gradients()["w"], np.full((2, 2), 2.0))


def test_scope_without_graph_gives_constants():
    scope = ParameterScope()
    t = scope.get("w", np.ones((1, 1)))
    assert not t.is_recorded
    with pytest.raises(ContractError):
        scope.gradients()


# ---------------------------------------------------------------------------
# Debug mode
# ---------------------------------------------------------------------------

def test_debug_mode_flags_non_finite_results():
    set_debug(True)
    try:
        with pytest.raises(NumericalError):
            scale(Tensor([[1e308]]), 10.0)
    finally:
        set_debug(False)


# ---------------------------------------------------------------------------
# Rng
# ---------------------------------------------------------------------------

def test_rng_is_deterministic():
    a = Rng(42).split(3).normal(2, 3)
    b = Rng(42).split(3).normal(2, 3)
    np.testing.assert_array_equal(a, b)


def test_rng_streams_are_independent():
    root = Rng(42)
    assert not np.array_equal(root.split(0).normal(2, 3), root.split(1).normal(2, 3))


def test_split_does_not_advance_parent():
    parent = Rng(5)
    expected = Rng(5).normal(1, 4)
    parent.split(7).normal(10, 10)
    np.testing.assert_array_equal(parent.normal(1, 4), expected)


@pytest.mark.parametrize("seed", [-1, 1.5, True, 2 ** 64])
def test_rng_rejects_bad_seeds(seed):
    with pytest.raises(ContractError):
        Rng(seed)


def test_categorical_follows_one_hot_rows():
    probs = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    np.testing.assert_array_equal(Rng(0).categorical(probs), [0, 2, 1])
