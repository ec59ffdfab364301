"""Tests for matta_sdk/optimizers/: first-order baselines, Shampoo and the model optimizer."""

import numpy as np
import pytest

from matta_sdk.diffcore import Rng
from matta_sdk.matlayers import ModelDims, model_new
from matta_sdk.optimizers import (
    FirstOrderState,
    OptimizerConfig,
    ShampooState,
    block_stats,
    build_optimizer,
    correlation_matrix,
    first_order_step,
    inv_pth_root,
    jacobi_eigh,
    make_bowl,
    preconditioner_report,
    quadratic_bowl_steps,
    roots_due,
    shampoo_accumulate,
    shampoo_step,
    steps_to_tolerance,
    symmetric_eigh,
    warmup_steps,
)
from matta_sdk.utils.errors import BoundsError, ContractError, DimensionError


def _random_spd(seed, k, low_exp=0.0, high_exp=6.0):
    gen = np.random.default_rng(seed)
    q, _ = np.linalg.qr(gen.normal(size=(k, k)))
    return (q * np.logspace(low_exp, high_exp, k)) @ q.T


def _tiny_model(sharing="shared"):
    dims = ModelDims(d_in=3, d=2, h_s=2, h_ta=3, n_shared=1, n_extra=1, n_classes=2)
    return model_new(dims, sharing, Rng(0))


# ---------------------------------------------------------------------------
# First-order methods
# ---------------------------------------------------------------------------

def test_sgd_step():
    state = FirstOrderState(method="sgd", lr=0.5)
    out = first_order_step(state, np.ones((2, 2)), np.full((2, 2), 2.0))
    np.testing.assert_array_equal(out, np.zeros((2, 2)))


def test_adagrad_first_step_is_sign_with_zero_epsilon():
    state = FirstOrderState(method="adagrad", lr=0.1, epsilon=0.0)
    grad = np.array([[3.0, -0.25, 0.0]])
    out = first_order_step(state, np.zeros((1, 3)), grad)
    np.testing.assert_array_equal(out, np.array([[-0.1, 0.1, 0.0]]))


def test_adam_first_step_is_lr_sized():
    state = FirstOrderState(method="adam", lr=0.01, epsilon=0.0)
    out = first_order_step(state, np.zeros((1, 2)), np.array([[5.0, -2.0]]))
    np.testing.assert_allclose(out, [[-0.01, 0.01]], rtol=1e-12)


def test_lr_override():
    state = FirstOrderState(method="sgd", lr=1.0)
    out = first_order_step(state, np.zeros((1, 1)), np.ones((1, 1)), lr=0.25)
    assert out[0, 0] == -0.25


def test_first_order_rejects_shape_change():
    state = FirstOrderState(method="adam")
    first_order_step(state, np.zeros((1, 2)), np.ones((1, 2)))
    with pytest.raises(DimensionError):
        first_order_step(state, np.zeros((2, 1)), np.ones((2, 1)))


def test_unknown_first_order_method():
    with pytest.raises(ContractError):
        FirstOrderState(method="rmsprop")


# ---------------------------------------------------------------------------
# Eigensolver and inverse roots
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("k", [5, 20, 50])
def test_inv_fourth_root_residual(k):
    a = _random_spd(k, k)
    x = inv_pth_root(a, p=4, epsilon=0.0)
    residual = np.linalg.matrix_power(x, 4) @ a - np.eye(k)
    assert np.linalg.norm(residual) <= 1e-8 * k
    np.testing.assert_array_equal(x, x.T)


def test_inv_square_root_with_epsilon():
    a = _random_spd(1, 6, high_exp=3.0)
    eps = 1e-3
    x = inv_pth_root(a, p=2, epsilon=eps)
    residual = x @ x @ (a + eps * np.eye(6)) - np.eye(6)
    assert np.linalg.norm(residual) <= 1e-8 * 6


def test_inv_root_of_identity_is_identity():
    np.testing.assert_allclose(inv_pth_root(np.eye(4), epsilon=0.0), np.eye(4), atol=1e-15)


def test_inv_root_of_zero_matrix_is_zero():
    np.testing.assert_array_equal(inv_pth_root(np.zeros((3, 3)), epsilon=0.0), np.zeros((3, 3)))


def test_inv_root_keeps_epsilon_floor_for_null_directions():
    x = inv_pth_root(np.diag([1e10, 0.0]), p=4, epsilon=1e-6)
    assert x[1, 1] == pytest.approx(1e-6 ** -0.25, rel=1e-12)
    assert x[0, 0] == pytest.approx((1e10 + 1e-6) ** -0.25, rel=1e-12)


def test_inv_root_rejects_asymmetric_and_bad_p():
    with pytest.raises(ContractError):
        inv_pth_root(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        inv_pth_root(np.eye(2), p=3)
    with pytest.raises(DimensionError):
        inv_pth_root(np.ones((2, 3)))


@pytest.mark.parametrize("k", [1, 2, 7, 12])
def test_jacobi_matches_lapack(k):
    a = _random_spd(100 + k, k, high_exp=4.0)
    values, vectors = jacobi_eigh(a)
    np.testing.assert_allclose(np.sort(values), np.linalg.eigvalsh(a), rtol=1e-10)
    np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.T, a, rtol=1e-10, atol=1e-8)


def test_jacobi_warm_start_from_previous_basis():
    a = _random_spd(3, 8, high_exp=3.0)
    _, basis = jacobi_eigh(a)
    b = a + 1e-3 * _random_spd(4, 8, high_exp=1.0)
    values, vectors = jacobi_eigh(b, basis=basis)
    np.testing.assert_allclose(np.sort(values), np.linalg.eigvalsh(b), rtol=1e-10)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(8), atol=1e-12)


def test_unknown_root_method():
    with pytest.raises(ContractError):
        symmetric_eigh(np.eye(2), "svd")


# ---------------------------------------------------------------------------
# Shampoo step
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("g", [4.0, -4.0, 0.0625])
def test_scalar_shampoo_step_is_sign(g):
    state = ShampooState(shape=(1, 1), update_interval=1, epsilon=0.0)
    grad = np.array([[g]])
    shampoo_accumulate(state, grad)
    out = shampoo_step(state, np.array([[1.0]]), grad, lr=0.5)
    assert out[0, 0] == 1.0 - 0.5 * np.sign(g)


def test_shampoo_step_equals_kronecker_update():
    gen = np.random.default_rng(0)
    for m, n in [(2, 3), (4, 4), (3, 1)]:
        state = ShampooState(shape=(m, n), update_interval=1, epsilon=1e-4)
        for _ in range(3):
            shampoo_accumulate(state, gen.normal(size=(m, n)))
        grad = gen.normal(size=(m, n))
        shampoo_accumulate(state, grad)
        param = gen.normal(size=(m, n))
        out = shampoo_step(state, param, grad, lr=0.1)

        left_root = inv_pth_root(state.left, 4, 1e-4, method="eigh")
        right_root = inv_pth_root(state.right, 4, 1e-4, method="eigh")
        expected = param.ravel() - 0.1 * np.kron(left_root, right_root) @ grad.ravel()
        np.testing.assert_allclose(out.ravel(), expected, atol=1e-8)


def _advance(state, gen):
    grad = gen.normal(size=state.shape)
    shampoo_accumulate(state, grad)
    shampoo_step(state, np.zeros(state.shape), grad, 0.1)


def test_shampoo_roots_refresh_every_step_until_interval_accumulations():
    state = ShampooState(shape=(2, 2), update_interval=3, epsilon=1e-6)
    gen = np.random.default_rng(1)
    seen = []
    for _ in range(3):
        _advance(state, gen)
        seen.append(state.left_root.copy())
    assert not np.array_equal(seen[0], seen[1])
    assert not np.array_equal(seen[1], seen[2])


def test_shampoo_roots_refresh_on_schedule_after_warmup():
    state = ShampooState(shape=(2, 2), update_interval=3, epsilon=1e-6)
    gen = np.random.default_rng(1)
    for _ in range(3):
        _advance(state, gen)
    cached = state.left_root.copy()
    for _ in range(2):
        _advance(state, gen)
        np.testing.assert_array_equal(state.left_root, cached)
    _advance(state, gen)
    assert state.step == 6
    assert not np.array_equal(state.left_root, cached)


def test_roots_due_schedule():
    state = ShampooState(shape=(1, 1), update_interval=4)
    due = []
    for step in range(1, 13):
        state.step = step
        state.left_root = np.ones((1, 1))
        due.append(roots_due(state))
    assert due == [True, True, True, True, False, False, False, True, False, False, False, True]


def test_warmup_covers_the_larger_accumulator():
    assert warmup_steps(ShampooState(shape=(16, 2), update_interval=10)) == 16
    assert warmup_steps(ShampooState(shape=(3, 4), update_interval=10)) == 10


def test_new_gradient_direction_is_not_amplified_after_rank_deficient_start():
    # The first gradient spans one row only; the next one lives in the other row.
    state = ShampooState(shape=(2, 2), update_interval=10, epsilon=1e-6)
    first = np.array([[1.0, 0.5], [0.0, 0.0]])
    shampoo_accumulate(state, first)
    shampoo_step(state, np.zeros((2, 2)), first, 1.0)
    second = np.array([[0.0, 0.0], [1.0, -0.5]])
    shampoo_accumulate(state, second)
    out = shampoo_step(state, np.zeros((2, 2)), second, 1.0)
    assert np.abs(out).max() < 10.0


def test_shampoo_accumulators_stay_exactly_symmetric():
    state = ShampooState(shape=(5, 3))
    gen = np.random.default_rng(7)
    for _ in range(1000):
        shampoo_accumulate(state, gen.normal(size=(5, 3)))
    np.testing.assert_array_equal(state.left, state.left.T)
    np.testing.assert_array_equal(state.right, state.right.T)


def test_shampoo_step_approaches_scaled_gradient_for_large_epsilon():
    eps = 1e10
    state = ShampooState(shape=(3, 4), update_interval=1, epsilon=eps)
    gen = np.random.default_rng(3)
    for _ in range(3):
        shampoo_accumulate(state, gen.normal(size=(3, 4)))
    grad = gen.normal(size=(3, 4))
    shampoo_accumulate(state, grad)
    param = gen.normal(size=(3, 4))
    out = shampoo_step(state, param, grad, lr=0.5)
    np.testing.assert_allclose((param - out) * np.sqrt(eps) / 0.5, grad, rtol=0, atol=1e-6)


def test_shampoo_rejects_wrong_gradient_shape():
    state = ShampooState(shape=(2, 3))
    with pytest.raises(DimensionError):
        shampoo_accumulate(state, np.ones((3, 2)))


# ---------------------------------------------------------------------------
# Block statistics
# ---------------------------------------------------------------------------

def test_block_diagonal_accumulator_has_no_cross_correlation():
    acc = np.zeros((4, 4))
    acc[:2, :2] = [[2.0, 1.0], [1.0, 2.0]]
    acc[2:, 2:] = [[3.0, -1.5], [-1.5, 3.0]]
    _, stats = block_stats(acc, 2)
    assert stats.cross_mean == 0.0
    assert stats.student_mean == pytest.approx(0.5)
    assert stats.ta_extra_mean == pytest.approx(0.5)
    assert stats.ratio == float("inf")


def test_zero_diagonal_rows_are_zeroed():
    acc = np.diag([1.0, 0.0, 4.0])
    corr, zero = correlation_matrix(acc)
    assert zero
    np.testing.assert_array_equal(corr, np.diag([1.0, 0.0, 1.0]))


def test_block_stats_split_bounds():
    with pytest.raises(BoundsError):
        block_stats(np.eye(3), 4)


def test_preconditioner_report_side():
    state = ShampooState(shape=(2, 3))
    shampoo_accumulate(state, np.ones((2, 3)))
    corr, stats = preconditioner_report(state, 1, "right")
    assert corr.shape == (3, 3) and stats.size == 3
    with pytest.raises(ContractError):
        preconditioner_report(state, 1, "top")


# ---------------------------------------------------------------------------
# ModelOptimizer
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("method,granularity", [("shampoo", "joint"), ("shampoo", "per-tensor"), ("adam", "joint")])
@pytest.mark.parametrize("sharing", ["shared", "unshared-blocks", "fully-unshared"])
def test_groups_cover_every_tensor_once(method, granularity, sharing):
    model = _tiny_model(sharing)
    optimizer = build_optimizer(OptimizerConfig(method=method, granularity=granularity), model)
    members = [m for g in optimizer.groups for m in g.members]
    assert sorted(members) == sorted(model.named_tensors())
    joint = method == "shampoo" and granularity == "joint"
    assert any(g.layout is not None for g in optimizer.groups) == joint


def test_joint_group_preconditions_assembled_weight():
    model = _tiny_model()
    optimizer = build_optimizer(OptimizerConfig(method="shampoo", lr=0.1, update_interval=1), model)
    layer = model.blocks[0].up
    before = layer.assembled_ta_weight().copy()
    gen = np.random.default_rng(0)
    grads = {name: gen.normal(size=value.shape) for name, value in model.named_tensors().items()}

    reference = ShampooState(shape=before.shape, update_interval=1, epsilon=1e-6)
    full_grad = np.concatenate(
        [np.concatenate([grads["blocks.0.up.w_s"], grads["blocks.0.up.w_ta1"]], axis=0), grads["blocks.0.up.w_ta2"]],
        axis=1,
    )
    shampoo_accumulate(reference, full_grad)
    expected = shampoo_step(reference, before, full_grad, 0.1)

    optimizer.step(model, grads)
    np.testing.assert_allclose(model.blocks[0].up.assembled_ta_weight(), expected, rtol=1e-12, atol=1e-14)


def test_missing_gradients_count_as_zero():
    model = _tiny_model()
    before = model.copy()
    build_optimizer(OptimizerConfig(method="sgd", lr=0.1), model).step(model, {})
    for name, value in before.named_tensors().items():
        np.testing.assert_array_equal(model.get_tensor(name), value)


def test_ta_lr_applies_outside_student_params():
    model = _tiny_model()
    before = model.copy()
    optimizer = build_optimizer(OptimizerConfig(method="sgd", lr=0.1, ta_lr=0.5), model)
    grads = {name: np.ones_like(value) for name, value in model.named_tensors().items()}
    optimizer.step(model, grads)
    np.testing.assert_allclose(model.encoder, before.encoder - 0.1)
    np.testing.assert_allclose(model.blocks[0].up.w_ta2, before.blocks[0].up.w_ta2 - 0.5)
    np.testing.assert_allclose(model.blocks[1].up.w_s, before.blocks[1].up.w_s - 0.5)


def test_state_tensors_name_joint_groups():
    model = _tiny_model()
    optimizer = build_optimizer(OptimizerConfig(method="shampoo"), model)
    names = optimizer.state_tensors()
    assert "optim.blocks.0.up.left" in names
    assert names["optim.blocks.0.up.right"].shape == (3, 3)
    assert build_optimizer(OptimizerConfig(method="adam"), model).state_tensors() == {}


@pytest.mark.parametrize(
    "kwargs",
    [{"method": "lbfgs"}, {"granularity": "layer"}, {"lr": 0.0}, {"ta_lr": -1.0}, {"update_interval": 0}],
)
def test_optimizer_config_rejected(kwargs):
    with pytest.raises(ContractError):
        OptimizerConfig(**kwargs)


# ---------------------------------------------------------------------------
# Quadratic bowl
# ---------------------------------------------------------------------------

def test_bowl_gradient_matches_finite_differences():
    bowl = make_bowl(0, (3, 2), cond=10.0)
    w = np.random.default_rng(0).normal(size=(3, 2))
    h = 1e-6
    numeric = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        plus, minus = w.copy(), w.copy()
        plus[idx] += h
        minus[idx] -= h
        numeric[idx] = (bowl.loss(plus) - bowl.loss(minus)) / (2 * h)
    np.testing.assert_allclose(bowl.gradient(w), numeric, rtol=1e-6, atol=1e-6)


def test_bowl_condition_number():
    bowl = make_bowl(1, (4, 4), cond=1e3)
    operator = np.kron(bowl.left, bowl.right.T)
    assert np.linalg.cond(operator) == pytest.approx(1e3, rel=1e-6)


def test_steps_to_tolerance_reports_divergence():
    bowl = make_bowl(0, (2, 2), cond=10.0)
    assert steps_to_tolerance(bowl, "adagrad", lr=1e6, max_steps=50) is None
    with pytest.raises(ContractError):
        steps_to_tolerance(bowl, "adam", lr=0.1)


def test_bowl_result_structure():
    result = quadratic_bowl_steps(0, lr_grid=(0.1,), shape=(2, 2), cond=10.0, max_steps=200)
    assert set(result) == {"shampoo", "adagrad"}
    for entry in result.values():
        assert set(entry) == {"steps", "lr"}


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_shampoo_beats_adagrad_on_ill_conditioned_bowl(seed):
    result = quadratic_bowl_steps(seed)
    shampoo = result["shampoo"]["steps"]
    adagrad = result["adagrad"]["steps"]
    assert shampoo is not None
    assert adagrad is None or shampoo < adagrad
