"""Shapley attribution: additivity, linear exactness, sampling behaviour."""

import numpy as np
import pytest

from riskdecode.explain import (MAX_EXACT_DIM, Baseline, ShapResult,
                                explain_frames, global_importance,
                                local_heatmap, mean_head, shap_exact,
                                shap_sampled, value_function)
from riskdecode.mlp import MlpConfig, mlp_init

LIN_W = np.array([0.5, -1.0, 2.0, 0.0, 0.25, -0.75, 1.5, -0.1])


def linear_model(x):
    return np.asarray(x) @ LIN_W + 3.0


@pytest.fixture(scope="module")
def net_model():
    return mean_head(mlp_init(MlpConfig(input_dim=8, hidden=32, seed=6)))


@pytest.fixture(scope="module")
def frame_and_baseline():
    rng = np.random.default_rng(42)
    return rng.normal(size=8), Baseline(rng.normal(size=8) * 0.1)


def test_baseline_validation():
    with pytest.raises(ValueError):
        Baseline(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        Baseline(np.array([]))
    with pytest.raises(ValueError):
        Baseline(np.array([1.0, np.nan]))
    base = Baseline.from_training(np.array([[1.0, 3.0], [3.0, 5.0]]))
    assert np.allclose(base.values, [2.0, 4.0])
    assert base.dim == 2


def test_value_function_composites(frame_and_baseline):
    x, base = frame_and_baseline
    assert value_function(linear_model, x, [], base) == pytest.approx(
        linear_model(base.values))
    assert value_function(linear_model, x, range(8), base) == pytest.approx(
        linear_model(x))
    # revealing one coordinate moves the value by exactly its linear term
    v1 = value_function(linear_model, x, [2], base)
    assert v1 - linear_model(base.values) == pytest.approx(
        LIN_W[2] * (x[2] - base.values[2]))
    # duplicates collapse
    assert value_function(linear_model, x, [2, 2], base) == v1
    with pytest.raises(ValueError):
        value_function(linear_model, x, [8], base)
    with pytest.raises(ValueError):
        value_function(linear_model, np.zeros(5), [0], base)


def test_exact_additivity(net_model, frame_and_baseline):
    x, base = frame_and_baseline
    phi = shap_exact(net_model, x, base)
    base_value = float(net_model(base.values[None, :])[0])
    predicted = float(net_model(x[None, :])[0])
    assert abs(base_value + phi.sum() - predicted) <= 1e-9


def test_exact_matches_linear_coefficients(frame_and_baseline):
    x, base = frame_and_baseline
    phi = shap_exact(linear_model, x, base)
    assert np.allclose(phi, LIN_W * (x - base.values), atol=1e-12)
    # the zero-coefficient feature gets exactly zero credit
    assert phi[3] == pytest.approx(0.0, abs=1e-12)


def test_exact_dimension_cap():
    base = Baseline(np.zeros(MAX_EXACT_DIM + 1))
    with pytest.raises(ValueError, match="shap_sampled"):
        shap_exact(linear_model, np.zeros(MAX_EXACT_DIM + 1), base)


def test_sampled_tracks_exact(net_model, frame_and_baseline):
    x, base = frame_and_baseline
    phi = shap_exact(net_model, x, base)
    sampled, std_err = shap_sampled(net_model, x, base, 2000, 0)
    scale = np.max(np.abs(phi))
    assert np.max(np.abs(sampled - phi)) < 0.05 * scale
    assert np.all(std_err > 0.0)


def test_sampled_is_unbiased_over_seeds(net_model, frame_and_baseline):
    x, base = frame_and_baseline
    phi = shap_exact(net_model, x, base)
    acc = np.zeros_like(phi)
    for seed in range(50):
        estimate, _ = shap_sampled(net_model, x, base, 8, seed)
        acc += estimate
    acc /= 50
    assert np.max(np.abs(acc - phi)) < 0.03 * np.max(np.abs(phi))


def test_sampled_collapses_on_linear_models(frame_and_baseline):
    # marginal contributions are position-independent for a linear model,
    # so even a tiny sample is exact and the pair spread vanishes
    x, base = frame_and_baseline
    sampled, std_err = shap_sampled(linear_model, x, base, 4, 123)
    assert np.allclose(sampled, LIN_W * (x - base.values), atol=1e-12)
    assert np.max(std_err) <= 1e-12
    _, single = shap_sampled(linear_model, x, base, 1, 0)
    assert np.all(single == 0.0)
    with pytest.raises(ValueError):
        shap_sampled(linear_model, x, base, 0, 0)


def test_explain_frames_exact_mode(net_model, frame_and_baseline):
    _, base = frame_and_baseline
    rng = np.random.default_rng(7)
    features = rng.normal(size=(6, 8))
    result = explain_frames(net_model, features, base, mode="exact")
    assert isinstance(result, ShapResult)
    assert result.attributions.shape == (6, 8)
    assert result.std_errors is None
    totals = result.base_value + result.attributions.sum(axis=1)
    assert np.max(np.abs(totals - result.predicted)) <= 1e-9


def test_explain_frames_sampled_mode(net_model, frame_and_baseline):
    _, base = frame_and_baseline
    rng = np.random.default_rng(7)
    features = rng.normal(size=(3, 8))
    result = explain_frames(net_model, features, base, mode="sampled",
                            n_permutations=50, seed=1)
    assert result.std_errors is not None
    assert result.std_errors.shape == (3, 8)
    rerun = explain_frames(net_model, features, base, mode="sampled",
                           n_permutations=50, seed=1)
    assert np.array_equal(result.attributions, rerun.attributions)
    with pytest.raises(ValueError):
        explain_frames(net_model, features, base, mode="kernel")
    with pytest.raises(ValueError):
        explain_frames(net_model, features[:, :5], base)


def test_global_importance_ranking():
    attributions = np.array([
        [0.1, -2.0, 0.0, 0.5],
        [-0.3, 1.0, 0.0, 0.5],
    ])
    ranked = global_importance(attributions, ["a", "b", "c", "d"])
    assert [name for name, _ in ranked] == ["b", "d", "a", "c"]
    assert ranked[0][1] == pytest.approx(1.5)
    # ties keep manifest order
    tied = global_importance(np.array([[1.0, 1.0]]), ["x", "y"])
    assert [name for name, _ in tied] == ["x", "y"]
    with pytest.raises(ValueError):
        global_importance(np.empty((0, 2)), ["x", "y"])
    with pytest.raises(ValueError):
        global_importance(attributions, ["a", "b"])


def test_local_heatmap_passthrough(net_model, frame_and_baseline):
    _, base = frame_and_baseline
    features = np.random.default_rng(3).normal(size=(4, 8))
    result = explain_frames(net_model, features, base)
    heat, curve = local_heatmap(result)
    assert heat.shape == (4, 8) and curve.shape == (4,)
    assert heat is result.attributions
