"""The gradient-check harness itself: coverage, tolerances, negative controls."""

import numpy as np

from opunet.gradcheck import (
    LAYER_TOLERANCE,
    MODEL_TOLERANCE,
    check_layers,
    check_model,
)


def test_single_cell_passes():
    results = check_layers(seed=0, q_orders=(2,), kernels=(3,), strides=(2,))
    # two layer kinds x one grid cell x (weights, bias, input)
    assert len(results) == 6
    assert all(r.passed for r in results)
    assert all(r.tolerance == LAYER_TOLERANCE for r in results)


def test_group_names_carry_the_grid_cell():
    results = check_layers(seed=0, q_orders=(1,), kernels=(1,), strides=(1,))
    names = {r.name for r in results}
    assert "op_conv[q=1,k=1,s=1].weights" in names
    assert "op_conv_t[q=1,k=1,s=1].input" in names


def test_layer_corrupt_hook_fails_exactly_one_group():
    target = "op_conv[q=2,k=3,s=1].bias"
    results = check_layers(seed=0, q_orders=(2,), kernels=(3,), strides=(1,),
                           corrupt=target)
    failed = [r.name for r in results if not r.passed]
    assert failed == [target]


def test_model_scope_passes_and_covers_all_tensors():
    results = check_model(seed=0)
    assert all(r.passed for r in results)
    assert all(r.tolerance == MODEL_TOLERANCE for r in results)
    names = {r.name for r in results}
    # 5 encoder + 5 decoder layers, weights and bias each, plus the input
    assert len(names) == 21
    assert "model.enc1.w" in names and "model.dec5.b" in names and "model.input" in names


def test_model_corrupt_hook_detected():
    results = check_model(seed=0, corrupt="model.dec3.w")
    failed = [r.name for r in results if not r.passed]
    assert failed == ["model.dec3.w"]


def test_errors_are_reported_not_just_booleans():
    results = check_layers(seed=1, q_orders=(3,), kernels=(5,), strides=(2,))
    for r in results:
        assert np.isfinite(r.max_err) and 0.0 <= r.max_err < LAYER_TOLERANCE
