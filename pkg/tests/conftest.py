"""Shared fixtures.

The full synthetic-rehearsal pipeline run is expensive (a few minutes), so
it is session-scoped and shared by every test that inspects its artifacts.
Unit tests prefer the small per-family trajectory cache.
"""

import time
from types import SimpleNamespace

import pytest

from riskdecode.reconstruction import load_alignment_table
from riskdecode.scenarios import enumerate_events, simulate_event


@pytest.fixture(scope="session")
def catalog():
    return enumerate_events()


@pytest.fixture(scope="session")
def table():
    return load_alignment_table()


@pytest.fixture(scope="session")
def sample_trajs():
    """One simulated event per scenario, keyed by scenario name."""
    specs = enumerate_events()
    picked = {}
    for spec in specs:
        picked.setdefault(spec.scenario, spec)
    return {name: simulate_event(spec) for name, spec in picked.items()}


@pytest.fixture(scope="session")
def rehearsal(tmp_path_factory):
    """One full pipeline run on synthetic ratings, with stage timings."""
    from riskdecode import pipeline
    from riskdecode.synthetic import REHEARSAL_EPOCHS, REHEARSAL_LEARNING_RATE

    out = tmp_path_factory.mktemp("rehearsal")
    seed = 7
    timings = {}

    def staged(name, fn, *args, **kw):
        start = time.perf_counter()
        result = fn(*args, **kw)
        timings[name] = time.perf_counter() - start
        return result

    staged("generate", pipeline.run_generate, out, seed)
    ratings = staged("synthesize", pipeline.write_synthetic_ratings, out, seed)
    index = staged("ingest", pipeline.run_ingest, out, ratings, seed)
    staged("reconstruct", pipeline.run_reconstruct, out, seed)
    staged("features", pipeline.run_features, out, seed)
    train = staged("train", pipeline.run_train, out, seed,
                   epochs=REHEARSAL_EPOCHS, learning_rate=REHEARSAL_LEARNING_RATE)
    staged("predict", pipeline.run_predict, out, seed)
    calib = staged("calibrate", pipeline.run_calibrate, out, seed, 150)
    staged("explain", pipeline.run_explain, out, seed)
    report = staged("report", pipeline.run_report, out, seed)
    return SimpleNamespace(out=out, seed=seed, timings=timings, index=index,
                           train=train, calibration=calib, report=report)
