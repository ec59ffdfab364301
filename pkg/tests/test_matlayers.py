"""Tests for matta_sdk/matlayers/: M-nested Dense layers and the MatTA model."""

import numpy as np
import pytest

from matta_sdk.diffcore import ParameterScope, Rng, Tensor
from matta_sdk.matlayers import (
    MatTAModel,
    ModelDims,
    model_forward,
    model_like,
    model_new,
    nested_block_forward,
    nested_dense_forward,
    nested_dense_new,
    param_count,
    path_forward,
)
from matta_sdk.utils.errors import ContractError, DimensionError


def _dims(**overrides):
    values = dict(d_in=5, d=4, h_s=3, h_ta=6, n_shared=2, n_extra=1, n_classes=3)
    values.update(overrides)
    return ModelDims(**values)


# ---------------------------------------------------------------------------
# NestedDense
# ---------------------------------------------------------------------------

def test_student_output_is_embedded_in_ta_output():
    """O_TA equals I_TA @ W_TA, and its first n_s columns equal I_S @ W_S bit for bit when the extra inputs are zero."""
    rng = Rng(11)
    sizes = np.random.default_rng(11)
    empty_ta1 = empty_ta2 = 0
    for _ in range(200):
        m_s = int(sizes.integers(1, 33))
        m_ta = int(sizes.integers(m_s, 33))
        n_s = int(sizes.integers(1, 33))
        n_ta = int(sizes.integers(n_s, 33))
        batch = int(sizes.integers(1, 9))
        layer = nested_dense_new(m_s, m_ta, n_s, n_ta, True, rng)
        empty_ta1 += layer.w_ta1.size == 0
        empty_ta2 += layer.w_ta2.size == 0
        i_ta = Tensor(sizes.normal(size=(batch, m_ta)))
        i_s = Tensor(np.ascontiguousarray(i_ta.data[:, :m_s]))

        o_s, o_ta = nested_dense_forward(layer, i_s, i_ta)

        assert o_s.shape == (batch, n_s)
        assert o_ta.shape == (batch, n_ta)
        np.testing.assert_allclose(o_ta.data, i_ta.data @ layer.assembled_ta_weight(), rtol=1e-12, atol=1e-12)

        standalone = np.ascontiguousarray(i_s.data) @ np.ascontiguousarray(layer.w_s)
        np.testing.assert_array_equal(o_s.data, standalone)
        padded = np.concatenate([i_s.data, np.zeros((batch, m_ta - m_s))], axis=1)
        _, o_pad = nested_dense_forward(layer, i_s, Tensor(padded))
        np.testing.assert_array_equal(o_pad.data[:, :n_s], standalone)
    assert empty_ta1 > 0
    assert empty_ta2 > 0


def test_degenerate_layer_has_empty_extra_blocks():
    layer = nested_dense_new(3, 3, 2, 2, True, Rng(0))
    assert layer.w_ta1.shape == (0, 2)
    assert layer.w_ta2.shape == (3, 0)
    x = Tensor(np.random.default_rng(0).normal(size=(4, 3)))
    o_s, o_ta = nested_dense_forward(layer, x, x)
    np.testing.assert_array_equal(o_s.data, o_ta.data)


def test_unshared_layer_reads_its_own_copy():
    layer = nested_dense_new(2, 3, 2, 4, False, Rng(1))
    np.testing.assert_array_equal(layer.w_s, layer.w_s_ta_copy)
    layer.w_s_ta_copy = layer.w_s_ta_copy + 1.0
    x = Tensor(np.ones((1, 3)))
    _, o_ta = nested_dense_forward(layer, Tensor(np.ones((1, 2))), x)
    np.testing.assert_allclose(o_ta.data, x.data @ layer.assembled_ta_weight())


def test_nested_dense_rejects_bad_dims():
    with pytest.raises(ContractError):
        nested_dense_new(4, 3, 1, 1, True, Rng(0))
    with pytest.raises(ContractError):
        nested_dense_new(1, 1, 0, 1, True, Rng(0))


def test_nested_dense_rejects_wrong_input_width():
    layer = nested_dense_new(2, 3, 2, 3, True, Rng(0))
    with pytest.raises(DimensionError):
        nested_dense_forward(layer, Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))))


# ---------------------------------------------------------------------------
# ModelDims
# ---------------------------------------------------------------------------

def test_dims_reject_student_wider_than_ta():
    with pytest.raises(ContractError):
        _dims(h_s=7, h_ta=6)


def test_dims_reject_negative_block_counts():
    with pytest.raises(ContractError):
        _dims(n_extra=-1)


# ---------------------------------------------------------------------------
# Model construction and names
# ---------------------------------------------------------------------------

def test_shared_model_names():
    model = model_new(_dims(), "shared", Rng(0))
    names = model.named_tensors()
    assert list(names)[0] == "encoder" and list(names)[-1] == "readout"
    assert "blocks.0.up.w_s" in names
    assert not any("w_s_ta_copy" in n for n in names)
    assert model.student_names() == [
        "encoder",
        "blocks.0.up.w_s",
        "blocks.0.down.w_s",
        "blocks.1.up.w_s",
        "blocks.1.down.w_s",
        "readout",
    ]
    assert set(model.ta_path_names()) == set(names)


def test_unshared_blocks_copy_only_non_exclusive_blocks():
    model = model_new(_dims(), "unshared-blocks", Rng(0))
    names = model.named_tensors()
    assert "blocks.0.up.w_s_ta_copy" in names
    assert "blocks.1.down.w_s_ta_copy" in names
    assert "blocks.2.up.w_s_ta_copy" not in names
    assert "blocks.0.up.w_s" not in model.ta_path_names()


def test_fully_unshared_has_ta_io_copies():
    model = model_new(_dims(), "fully-unshared", Rng(0))
    np.testing.assert_array_equal(model.encoder, model.encoder_ta)
    path = model.ta_path_names()
    assert path[0] == "encoder_ta" and path[-1] == "readout_ta"
    assert "encoder" not in path


def test_unknown_sharing_mode():
    with pytest.raises(ContractError):
        model_new(_dims(), "partial", Rng(0))


def test_io_copies_require_fully_unshared():
    model = model_new(_dims(), "shared", Rng(0))
    with pytest.raises(ContractError):
        MatTAModel(
            dims=model.dims,
            sharing="shared",
            encoder=model.encoder,
            readout=model.readout,
            blocks=model.blocks,
            encoder_ta=model.encoder.copy(),
            readout_ta=model.readout.copy(),
        )


def test_model_new_is_deterministic():
    a = model_new(_dims(), "shared", Rng(3).split(0))
    b = model_new(_dims(), "shared", Rng(3).split(0))
    for name, value in a.named_tensors().items():
        np.testing.assert_array_equal(value, b.get_tensor(name))


def test_set_tensor_checks_shape_and_name():
    model = model_new(_dims(), "shared", Rng(0))
    model.set_tensor("blocks.1.down.w_ta2", np.ones((6, 0)))
    model.set_tensor("readout", np.ones((4, 3)))
    np.testing.assert_array_equal(model.readout, np.ones((4, 3)))
    with pytest.raises(DimensionError):
        model.set_tensor("readout", np.ones((3, 4)))
    with pytest.raises(KeyError):
        model.set_tensor("blocks.9.up.w_s", np.ones((4, 3)))


def test_copy_is_independent():
    model = model_new(_dims(), "shared", Rng(0))
    clone = model.copy()
    clone.set_tensor("encoder", np.zeros_like(model.encoder))
    assert np.any(model.encoder != 0)


def test_model_like_is_zero():
    clone = model_like(model_new(_dims(), "unshared-blocks", Rng(0), "tanh"))
    assert clone.sharing == "unshared-blocks"
    assert clone.blocks[0].activation == "tanh"
    assert all(not np.any(v) for v in clone.named_tensors().values())


def test_param_counts():
    dims = _dims()
    model = model_new(dims, "shared", Rng(0))
    io = dims.d_in * dims.d + dims.d * dims.n_classes
    assert param_count(model, "student") == io + dims.n_shared * 2 * dims.d * dims.h_s
    assert param_count(model, "ta") == io + dims.n_total * 2 * dims.d * dims.h_ta
    with pytest.raises(ContractError):
        param_count(model, "both")


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------

def test_exclusive_block_leaves_student_untouched():
    model = model_new(_dims(), "shared", Rng(0))
    x = Tensor(np.random.default_rng(0).normal(size=(2, 4)))
    y_s, _ = nested_block_forward(model.blocks[2], x, x)
    assert y_s is x


def test_path_forward_matches_model_forward():
    x = np.random.default_rng(2).normal(size=(6, 5))
    for sharing in ("shared", "unshared-blocks", "fully-unshared"):
        model = model_new(_dims(), sharing, Rng(4))
        logits_s, logits_ta = model_forward(model, x)
        np.testing.assert_array_equal(path_forward(model, x, "student").data, logits_s.data)
        np.testing.assert_array_equal(path_forward(model, x, "ta").data, logits_ta.data)


def test_equal_widths_without_extras_make_paths_agree():
    model = model_new(_dims(h_s=6, h_ta=6, n_extra=0), "shared", Rng(0))
    x = np.random.default_rng(1).normal(size=(3, 5))
    logits_s, logits_ta = model_forward(model, x)
    np.testing.assert_allclose(logits_s.data, logits_ta.data, rtol=1e-12, atol=1e-12)


def test_forward_rejects_wrong_input_width():
    model = model_new(_dims(), "shared", Rng(0))
    with pytest.raises(DimensionError):
        model_forward(model, np.ones((2, 4)))
    with pytest.raises(ContractError):
        path_forward(model, np.ones((2, 5)), "teacher")


def test_forward_binds_every_ta_tensor_in_scope():
    model = model_new(_dims(), "unshared-blocks", Rng(0))
    scope = ParameterScope()
    model_forward(model, np.ones((1, 5)), scope)
    assert set(scope.names()) == set(model.named_tensors())
