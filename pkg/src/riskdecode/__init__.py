"""Perceived-risk decoding for automated-vehicle interaction events.

The package covers the full chain: a 105-event scenario catalog with
kinematics, continuous risk reconstruction from in-event ratings, two
physics-based risk models (probabilistic collision-avoidance difficulty and
a driver risk field), a small Gaussian-output surrogate network, calibration
against reconstructed curves, and Shapley-value attribution.
"""

__version__ = "0.1.0"

from .scenarios import (  # noqa: F401
    DT,
    EventSpec,
    EventTrajectory,
    enumerate_events,
    event_by_id,
    simulate_event,
)
