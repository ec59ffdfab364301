"""Tests for matta_sdk/extraction/: Mix'n'Match configs and standalone sub-models."""

import numpy as np
import pytest

from matta_sdk.diffcore import Rng, Tensor
from matta_sdk.extraction import (
    INCLUDE_NARROW,
    INCLUDE_WIDE,
    NARROW,
    SKIP,
    WIDE,
    ExtractConfig,
    PlainDense,
    config_for_label,
    enumerate_grid,
    extracted_param_count,
    materialize,
    standalone_from_tensors,
    student_config,
    ta_config,
    wide_narrow_wide_config,
)
from matta_sdk.matlayers import ModelDims, model_new, param_count, path_forward
from matta_sdk.utils.errors import BoundsError, ContractError, DimensionError

DIMS = ModelDims(d_in=5, d=4, h_s=3, h_ta=7, n_shared=3, n_extra=2, n_classes=3)


def _batches(count=100, rows=4, seed=0):
    gen = np.random.default_rng(seed)
    return [gen.normal(size=(rows, DIMS.d_in)) for _ in range(count)]


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

def test_wide_narrow_wide_layout():
    cfg = wide_narrow_wide_config(3, 6)
    assert cfg.width_choice == (WIDE, WIDE, NARROW, NARROW, NARROW, WIDE)
    assert cfg.label == "wnw-k3" and cfg.k == 3
    assert wide_narrow_wide_config(0, 4).width_choice == (NARROW,) * 4
    assert wide_narrow_wide_config(4, 4).width_choice == (WIDE,) * 4


def test_wide_narrow_wide_keeps_exclusive_blocks():
    cfg = wide_narrow_wide_config(1, 5, n_extra=2)
    assert cfg.include_exclusive == (INCLUDE_NARROW, INCLUDE_NARROW)
    assert cfg.block_plan() == [WIDE, NARROW, NARROW, NARROW, NARROW]
    cfg = wide_narrow_wide_config(2, 5, n_extra=2)
    assert cfg.include_exclusive == (INCLUDE_NARROW, INCLUDE_WIDE)


def test_reserved_configs():
    student = student_config(5, 2)
    assert student.block_plan() == [NARROW, NARROW, NARROW, None, None]
    assert student.include_exclusive == (SKIP, SKIP)
    ta = ta_config(5, 2)
    assert ta.block_plan() == [WIDE] * 5
    assert ta.io_source == "ta"


def test_enumerate_grid_order_and_labels():
    labels = [cfg.label for cfg in enumerate_grid(5, [0, 2, 4], 2)]
    assert labels == ["student", "wnw-k0", "wnw-k2", "wnw-k4", "ta"]


@pytest.mark.parametrize("ks,error", [([6], BoundsError), ([-1], BoundsError), ([2, 2], ContractError), ([3, 1], ContractError)])
def test_enumerate_grid_rejects_bad_ks(ks, error):
    with pytest.raises(error):
        enumerate_grid(5, ks)


def test_config_for_label():
    assert config_for_label("wnw-k2", 5, 2) == wide_narrow_wide_config(2, 5, 2)
    assert config_for_label("ta", 5, 2).label == "ta"
    with pytest.raises(ContractError):
        config_for_label("medium", 5, 2)


def test_exclusive_choice_must_agree_with_width():
    with pytest.raises(ContractError):
        ExtractConfig(width_choice=(NARROW, NARROW), include_exclusive=(INCLUDE_WIDE,))
    with pytest.raises(ContractError):
        ExtractConfig(width_choice=(NARROW,), include_exclusive=(SKIP, SKIP))
    with pytest.raises(ContractError):
        ExtractConfig(width_choice=("medium",))


# ---------------------------------------------------------------------------
# Materialized sub-models
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("sharing", ["shared", "unshared-blocks", "fully-unshared"])
def test_student_and_ta_extraction_reproduce_paths(sharing):
    model = model_new(DIMS, sharing, Rng(8))
    student = materialize(model, student_config(DIMS.n_total, DIMS.n_extra))
    ta = materialize(model, ta_config(DIMS.n_total, DIMS.n_extra))
    for x in _batches():
        np.testing.assert_array_equal(student.forward(x).data, path_forward(model, x, "student").data)
        np.testing.assert_array_equal(ta.forward(x).data, path_forward(model, x, "ta").data)


def test_equal_widths_extract_without_nesting():
    dims = ModelDims(d_in=5, d=4, h_s=6, h_ta=6, n_shared=2, n_extra=0, n_classes=3)
    model = model_new(dims, "shared", Rng(1))
    ta = materialize(model, ta_config(2))
    assert not ta.blocks[0].up.is_nested
    x = _batches(count=1)[0]
    np.testing.assert_array_equal(ta.forward(x).data, path_forward(model, x, "ta").data)


def test_extraction_copies_weights():
    model = model_new(DIMS, "shared", Rng(0))
    sub = materialize(model, student_config(DIMS.n_total, DIMS.n_extra))
    model.set_tensor("encoder", np.zeros_like(model.encoder))
    assert np.any(sub.encoder != 0)


def test_materialize_rejects_mismatched_config():
    model = model_new(DIMS, "shared", Rng(0))
    with pytest.raises(ContractError):
        materialize(model, student_config(DIMS.n_total, 0))


def test_param_counts_grow_along_the_grid():
    model = model_new(DIMS, "shared", Rng(0))
    configs = enumerate_grid(DIMS.n_total, range(DIMS.n_total + 1), DIMS.n_extra)
    counts = [materialize(model, cfg).param_count() for cfg in configs]
    assert counts == sorted(counts)
    assert counts[0] == param_count(model, "student")
    assert counts[-1] == param_count(model, "ta") == counts[-2]
    for cfg, count in zip(configs, counts):
        assert extracted_param_count(cfg, DIMS) == count


def test_nonembedding_count_excludes_io():
    model = model_new(DIMS, "shared", Rng(0))
    sub = materialize(model, student_config(DIMS.n_total, DIMS.n_extra))
    io = DIMS.d_in * DIMS.d + DIMS.d * DIMS.n_classes
    assert sub.param_count() - sub.param_count(include_embedding=False) == io


def test_standalone_rebuilds_from_header_and_tensors():
    model = model_new(DIMS, "unshared-blocks", Rng(2))
    sub = materialize(model, wide_narrow_wide_config(2, DIMS.n_total, DIMS.n_extra))
    rebuilt = standalone_from_tensors(sub.header(), sub.named_tensors())
    assert rebuilt.label == "wnw-k2"
    x = _batches(count=1)[0]
    np.testing.assert_array_equal(rebuilt.forward(x).data, sub.forward(x).data)


def test_standalone_rejects_unknown_activation():
    with pytest.raises(ContractError):
        standalone_from_tensors({"activation": "swish", "splits": []}, {})


def test_plain_dense_bounds_and_width():
    with pytest.raises(BoundsError):
        PlainDense(np.ones((2, 3)), row_split=3)
    dense = PlainDense(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        dense.forward(Tensor(np.ones((1, 3))))
