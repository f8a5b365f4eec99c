"""Model calibration and comparison on the event catalog.

Raw PCAD and DRF outputs live on arbitrary scales, so every evaluation
first applies a joint min-max rescale to [0, 10] across all events before
scoring against the target risk curves.  Calibration is a seeded random
search: parameter records are drawn uniformly within bounds (log-uniform
for strictly positive scale parameters), the default record is always
evaluated as draw 0, and the best record by RMSE wins with ties broken
by the lowest draw index.

``c_sev`` is deliberately absent from the default DRF bounds: the joint
rescale cancels any pure output scale, so the parameter is unidentifiable
here and drawing it would only waste search budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np

from .risk_models import DrfParams, PcadParams, drf_risk_series, pcad_risk_series
from .scenarios import DT, enumerate_events, event_by_id, simulate_event

RISK_MIN = 0.0
RISK_MAX = 10.0
HISTOGRAM_BIN_WIDTH = 0.25

# Scale parameters are sampled log-uniformly, so their lower bounds must
# stay strictly positive.
LOG_UNIFORM_PARAMS = frozenset(
    {"sigma_n_x", "sigma_n_y", "sigma_s_x", "sigma_s_y", "s_steepness", "c_sev"}
)

PCAD_BOUNDS = {
    "sigma_n_x": (0.02, 3.0),
    "sigma_n_y": (0.02, 3.0),
    "sigma_s_x": (0.02, 3.0),
    "sigma_s_y": (0.02, 3.0),
    "t_s_a": (0.0, 2.0),
    "t_n_a": (0.0, 2.0),
    "alpha": (0.5, 4.0),
}

DRF_BOUNDS = {
    "s_steepness": (1e-5, 1e-2),
    "t_la": (0.5, 5.0),
    "m_widening": (0.0, 0.5),
    "c_width": (0.1, 1.5),
}

_MODEL_DEFAULTS = {"PCAD": PcadParams, "DRF": DrfParams}
_MODEL_BOUNDS = {"PCAD": PCAD_BOUNDS, "DRF": DRF_BOUNDS}
_MODEL_SERIES = {"PCAD": pcad_risk_series, "DRF": drf_risk_series}


def rmse(pred, obs) -> float:
    """Root mean square error between two equal-length series."""
    pred = np.asarray(pred, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if pred.shape != obs.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {obs.shape}")
    if pred.size == 0:
        raise ValueError("rmse needs at least one sample")
    return float(np.sqrt(np.mean((pred - obs) ** 2)))


def minmax_rescale(values) -> np.ndarray:
    """Affine map of the whole collection onto [0, 10].

    The minimum and maximum are taken jointly over everything passed in,
    so relative ordering between scenarios and events is preserved.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot rescale an empty collection")
    if not np.all(np.isfinite(values)):
        raise ValueError("model outputs must be finite")
    lo = values.min()
    hi = values.max()
    if hi <= lo:
        raise ValueError("constant model output cannot be min-max rescaled")
    return (values - lo) / (hi - lo) * RISK_MAX


def _validate_bounds(bounds: Mapping[str, tuple], params_cls) -> None:
    valid = {f.name for f in fields(params_cls)}
    for name, (lo, hi) in bounds.items():
        if name not in valid:
            raise ValueError(f"unknown {params_cls.__name__} field {name!r}")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"bounds for {name!r} must be finite")
        if lo >= hi:
            raise ValueError(f"bounds for {name!r} must satisfy lower < upper")
        if name in LOG_UNIFORM_PARAMS and lo <= 0:
            raise ValueError(f"log-uniform parameter {name!r} needs a positive lower bound")


@dataclass(frozen=True)
class CalibrationJob:
    """Random-search specification for one model family.

    ``targets`` maps event id to the ground-truth risk curve on that
    event's 10 Hz grid.  Every catalog event of each scenario family
    present in the targets must be covered.
    """

    model: str
    targets: Mapping[int, np.ndarray]
    draws: int
    seed: int
    bounds: Mapping[str, tuple] | None = None

    def __post_init__(self):
        if self.model not in _MODEL_DEFAULTS:
            raise ValueError(f"unknown model kind {self.model!r}")
        if self.draws < 1:
            raise ValueError("calibration needs at least one draw")
        if not self.targets:
            raise ValueError("calibration needs target curves")
        _validate_bounds(self.resolved_bounds(), _MODEL_DEFAULTS[self.model])

    def resolved_bounds(self) -> Mapping[str, tuple]:
        return dict(self.bounds) if self.bounds is not None else dict(_MODEL_BOUNDS[self.model])


@dataclass(frozen=True)
class CalibrationResult:
    best_params: object
    best_rmse: float
    best_draw: int
    trace: tuple


def _check_catalog_coverage(targets: Mapping[int, np.ndarray]) -> list:
    """Ensure full family coverage and exact frame counts; return sorted ids."""
    event_ids = sorted(targets)
    families = {event_by_id(eid).family for eid in event_ids}
    for family in sorted(families):
        catalog = [e for e in enumerate_events() if e.family == family]
        missing = [e.event_id for e in catalog if e.event_id not in targets]
        if missing:
            raise ValueError(f"targets missing {family} events: {missing}")
        count = 0
        for spec in catalog:
            n_frames = int(round(spec.duration / DT)) + 1
            curve = np.asarray(targets[spec.event_id], dtype=float)
            if curve.shape != (n_frames,):
                raise ValueError(
                    f"target for event {spec.event_id} has shape {curve.shape}, "
                    f"expected ({n_frames},)"
                )
            count += n_frames
        expected = 8664 if family == "LC" else 8127
        if count != expected:
            raise ValueError(f"{family} sample count {count} != {expected}")
    return event_ids


def _draw_record(rng: np.random.Generator, bounds: Mapping[str, tuple]) -> dict:
    record = {}
    for name, (lo, hi) in bounds.items():
        if name in LOG_UNIFORM_PARAMS:
            record[name] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        else:
            record[name] = float(rng.uniform(lo, hi))
    return record


def calibrate(job: CalibrationJob, trajectories: Mapping[int, object] | None = None) -> CalibrationResult:
    """Randomized search over the job bounds; returns the best record.

    Degenerate draws (constant raw output, which cannot be rescaled) are
    recorded with infinite error and never win.  The returned trace holds
    one row per draw with the drawn values and the scored RMSE.
    """
    event_ids = _check_catalog_coverage(job.targets)
    if trajectories is None:
        trajectories = {eid: simulate_event(event_by_id(eid)) for eid in event_ids}
    target_vec = np.concatenate([np.asarray(job.targets[eid], dtype=float) for eid in event_ids])

    bounds = job.resolved_bounds()
    defaults = _MODEL_DEFAULTS[job.model]()
    series_fn = _MODEL_SERIES[job.model]
    rng = np.random.default_rng(job.seed)

    best_rmse = math.inf
    best_draw = 0
    best_params = defaults
    trace = []
    for draw in range(job.draws):
        if draw == 0:
            record = {name: getattr(defaults, name) for name in bounds}
        else:
            record = _draw_record(rng, bounds)
        params = replace(defaults, **record)
        raw = np.concatenate([series_fn(trajectories[eid], params) for eid in event_ids])
        if raw.max() > raw.min():
            score = rmse(minmax_rescale(raw), target_vec)
        else:
            score = math.inf
        trace.append({"draw": draw, **record, "rmse": score})
        if score < best_rmse:
            best_rmse = score
            best_draw = draw
            best_params = params
    return CalibrationResult(best_params, best_rmse, best_draw, tuple(trace))


@dataclass(frozen=True)
class ComparisonReport:
    """Per-frame absolute errors plus scenario-level summaries.

    ``scenario_stats`` maps (family, model) to (median, q1, q3) of the
    pooled absolute error.  ``histograms`` maps model to (bin_lo, counts)
    with a fixed 0.25 bin width spanning [0, 10].
    """

    abs_errors: dict
    scenario_stats: dict
    histograms: dict
    bin_width: float = HISTOGRAM_BIN_WIDTH


def _check_series(name: str, eid: int, series: np.ndarray, n_expected: int) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    if series.shape != (n_expected,):
        raise ValueError(
            f"{name} series for event {eid} has shape {series.shape}, "
            f"expected ({n_expected},)"
        )
    if not np.all(np.isfinite(series)):
        raise ValueError(f"{name} series for event {eid} must be finite")
    if series.min() < RISK_MIN - 1e-9 or series.max() > RISK_MAX + 1e-9:
        raise ValueError(f"{name} series for event {eid} leaves [0, 10]")
    return series


def compare_models(truth: Mapping[int, np.ndarray],
                   outputs: Mapping[str, Mapping[int, np.ndarray]]) -> ComparisonReport:
    """Absolute-error comparison of rescaled model outputs against truth.

    All series must share the event's 10 Hz grid and already live in
    [0, 10]; a length mismatch anywhere is rejected.
    """
    if not truth:
        raise ValueError("comparison needs truth curves")
    if not outputs:
        raise ValueError("comparison needs at least one model")
    event_ids = sorted(truth)

    truth_checked = {}
    for eid in event_ids:
        spec = event_by_id(eid)
        n_frames = int(round(spec.duration / DT)) + 1
        truth_checked[eid] = _check_series("truth", eid, truth[eid], n_frames)

    abs_errors: dict = {}
    for model in sorted(outputs):
        per_event = {}
        for eid in event_ids:
            if eid not in outputs[model]:
                raise ValueError(f"{model} output missing event {eid}")
            series = _check_series(model, eid, outputs[model][eid], truth_checked[eid].size)
            per_event[eid] = np.abs(series - truth_checked[eid])
        abs_errors[model] = per_event

    scenario_stats = {}
    families = sorted({event_by_id(eid).family for eid in event_ids})
    for family in families:
        family_ids = [eid for eid in event_ids if event_by_id(eid).family == family]
        for model in sorted(outputs):
            pooled = np.concatenate([abs_errors[model][eid] for eid in family_ids])
            q1, q3 = np.percentile(pooled, [25.0, 75.0])
            scenario_stats[(family, model)] = (float(np.median(pooled)), float(q1), float(q3))

    edges = np.arange(RISK_MIN, RISK_MAX + HISTOGRAM_BIN_WIDTH, HISTOGRAM_BIN_WIDTH)
    histograms = {}
    for model in sorted(outputs):
        pooled = np.concatenate([abs_errors[model][eid] for eid in event_ids])
        counts, _ = np.histogram(pooled, bins=edges)
        histograms[model] = (edges[:-1].copy(), counts)

    return ComparisonReport(abs_errors, scenario_stats, histograms)
