"""Shapley attribution of network risk predictions.

Feature independence is assumed, so the value of a feature subset is the
mean head evaluated on a composite input: subset features from the frame,
the rest from a single baseline of training-set means.  Small manifests
are attributed by full subset enumeration; larger ones by seeded
permutation sampling with antithetic pairing.

Attribution targets the raw mean head (before the [0, 10] clamp) so the
additivity identity phi0 + sum(phi) = f(x) holds exactly per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .mlp import MlpWeights, mlp_forward

MAX_EXACT_DIM = 15

ModelFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Baseline:
    """Single reference input; by convention the training-set feature means."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("baseline must be a nonempty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("baseline values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_training(cls, features) -> "Baseline":
        features = np.asarray(features, dtype=float)
        if features.ndim != 2:
            raise ValueError("training features must be a 2-D matrix")
        return cls(features.mean(axis=0))

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ShapResult:
    """Per-frame attribution rows plus the curve they decompose."""

    base_value: float
    attributions: np.ndarray
    predicted: np.ndarray
    std_errors: np.ndarray | None = None


def mean_head(weights: MlpWeights) -> ModelFn:
    """Batch callable (N, D) -> (N,) for the raw mean output."""

    def model(x: np.ndarray) -> np.ndarray:
        mean, _ = mlp_forward(weights, np.asarray(x, dtype=float))
        return mean

    return model


def _check_frame(x, baseline: Baseline) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (baseline.dim,):
        raise ValueError(f"frame shape {x.shape} does not match baseline ({baseline.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("frame features must be finite")
    return x


def value_function(model: ModelFn, x, subset, baseline: Baseline) -> float:
    """Model mean on the composite input: subset from x, rest from baseline."""
    x = _check_frame(x, baseline)
    subset = np.asarray(sorted(set(int(i) for i in subset)), dtype=int)
    if subset.size and (subset.min() < 0 or subset.max() >= baseline.dim):
        raise ValueError("subset indices outside the feature range")
    composite = baseline.values.copy()
    composite[subset] = x[subset]
    return float(model(composite[None, :])[0])


def _subset_weights(d: int) -> np.ndarray:
    """w[s] = s! (d - s - 1)! / d! for subset sizes s = 0 .. d-1."""
    total = math.factorial(d)
    return np.array(
        [math.factorial(s) * math.factorial(d - s - 1) / total for s in range(d)]
    )


def shap_exact(model: ModelFn, x, baseline: Baseline) -> np.ndarray:
    """Attribution row by full subset enumeration; needs D <= 15."""
    x = _check_frame(x, baseline)
    d = baseline.dim
    if d > MAX_EXACT_DIM:
        raise ValueError(f"exact enumeration supports D <= {MAX_EXACT_DIM}; use shap_sampled")

    masks = np.arange(2 ** d, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(d)) & 1
    composites = np.where(bits.astype(bool), x, baseline.values)
    values = np.asarray(model(composites), dtype=float)
    sizes = bits.sum(axis=1)
    weights = _subset_weights(d)

    phi = np.empty(d)
    for i in range(d):
        without = masks[bits[:, i] == 0]
        gain = values[without + (1 << i)] - values[without]
        phi[i] = np.sum(weights[sizes[without]] * gain)
    return phi


def shap_sampled(model: ModelFn, x, baseline: Baseline, n_permutations: int, seed):
    """Permutation-sampling attribution with antithetic pairing.

    Each drawn permutation is walked together with its reverse; the
    estimate is the mean over pair means and the standard error is taken
    across pairs (zero when only one pair is drawn).
    """
    x = _check_frame(x, baseline)
    if n_permutations < 1:
        raise ValueError("need at least one permutation")
    d = baseline.dim
    rng = np.random.default_rng(seed)
    perms = np.stack([rng.permutation(d) for _ in range(n_permutations)])
    walks = np.concatenate([perms, perms[:, ::-1]])

    # mask[j, k, f] marks feature f as revealed after k steps of walk j
    positions = np.argsort(walks, axis=1)
    revealed = positions[:, None, :] < np.arange(d + 1)[None, :, None]
    composites = np.where(revealed, x, baseline.values)
    values = np.asarray(model(composites.reshape(-1, d)), dtype=float)
    values = values.reshape(walks.shape[0], d + 1)

    contrib = np.empty((walks.shape[0], d))
    np.put_along_axis(contrib, walks, np.diff(values, axis=1), axis=1)
    pair_means = 0.5 * (contrib[:n_permutations] + contrib[n_permutations:])
    phi = pair_means.mean(axis=0)
    if n_permutations > 1:
        std_err = pair_means.std(axis=0, ddof=1) / math.sqrt(n_permutations)
    else:
        std_err = np.zeros(d)
    return phi, std_err


def explain_frames(model: ModelFn, features, baseline: Baseline, mode: str = "exact",
                   n_permutations: int = 200, seed: int = 0) -> ShapResult:
    """Attribute every row of a (T, D) feature matrix independently."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != baseline.dim:
        raise ValueError(f"feature matrix must be (T, {baseline.dim})")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown attribution mode {mode!r}")

    n_frames = features.shape[0]
    base_value = float(model(baseline.values[None, :])[0])
    predicted = np.asarray(model(features), dtype=float)

    attributions = np.empty((n_frames, baseline.dim))
    std_errors = None
    if mode == "exact":
        for k in range(n_frames):
            attributions[k] = shap_exact(model, features[k], baseline)
    else:
        std_errors = np.empty_like(attributions)
        children = np.random.SeedSequence(seed).spawn(n_frames)
        for k in range(n_frames):
            attributions[k], std_errors[k] = shap_sampled(
                model, features[k], baseline, n_permutations, children[k]
            )
    return ShapResult(base_value, attributions, predicted, std_errors)


def global_importance(attributions, names: Sequence[str]):
    """Features ranked by mean |phi| over all attributed frames, descending.

    Ties keep manifest order, so a feature with phi identically zero
    always lands at the bottom.
    """
    attributions = np.asarray(attributions, dtype=float)
    if attributions.ndim != 2 or attributions.shape[0] == 0:
        raise ValueError("need a nonempty (N, D) attribution matrix")
    if attributions.shape[1] != len(names):
        raise ValueError("attribution width does not match feature names")
    scores = np.abs(attributions).mean(axis=0)
    order = np.argsort(-scores, kind="stable")
    return [(names[i], float(scores[i])) for i in order]


def local_heatmap(result: ShapResult):
    """Signed T x D attribution matrix paired with the predicted curve."""
    return result.attributions, result.predicted
