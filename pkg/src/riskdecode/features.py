"""Per-frame interaction features for the surrogate network.

Everything here is a pure function of one trajectory frame. Relative
quantities follow one sign convention: positive means the vehicles are
approaching on that axis. Uncertain velocities attach a fixed-magnitude
velocity along the line between the two vehicles (the distance-reducing
direction), which feeds the DRAC_u family.

Scenario manifests pick an ordered subset of the vocabulary; the follower
block (``_b`` suffix) only exists for the three-vehicle merges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import EventTrajectory, FrameState, scenario_family

SCENARIO_FAMILIES = ("MB", "HB", "LC", "SVM")

GAP_FLOOR = 0.1  # m, avoids division blow-ups in DRAC


@dataclass(frozen=True)
class UncertaintySigmas:
    """Velocity-uncertainty magnitudes (m/s), shared with the PCAD model."""

    s_x: float = 0.5
    s_y: float = 0.3
    n_x: float = 1.0
    n_y: float = 0.5

    def __post_init__(self):
        if min(self.s_x, self.s_y, self.n_x, self.n_y) < 0:
            raise ValueError("sigmas must be nonnegative")


# ego and neighbour kinematics, centre offsets, approach rates, uncertain
# velocities and the four collision-avoidance acceleration variants
_NON_FOLLOWER = (
    "v_s_x", "v_s_y", "a_s_x", "a_s_y",
    "v_n_x", "v_n_y", "a_n_x", "a_n_y",
    "dx", "dy", "dv_x", "dv_y", "da_x", "da_y",
    "dv_s_u_x", "dv_s_u_y", "dv_n_u_x", "dv_n_u_y",
    "drac_u_x", "drac_u_y", "drac_r_x", "drac_r_y",
)

# same quantities against the follower (second neighbour)
FOLLOWER_FEATURES = (
    "v_nb_x", "v_nb_y", "a_nb_x", "a_nb_y",
    "dx_b", "dy_b", "dv_x_b", "dv_y_b", "da_x_b", "da_y_b",
    "dv_nb_u_x", "dv_nb_u_y",
    "drac_u_b_x", "drac_u_b_y", "drac_r_b_x", "drac_r_b_y",
)

FEATURE_VOCABULARY = _NON_FOLLOWER + FOLLOWER_FEATURES


@dataclass(frozen=True)
class FeatureManifest:
    scenario: str
    names: tuple

    def __post_init__(self):
        if self.scenario not in SCENARIO_FAMILIES:
            raise ValueError(f"unknown scenario family {self.scenario!r}")
        unknown = [n for n in self.names if n not in FEATURE_VOCABULARY]
        if unknown:
            raise ValueError(f"names outside the feature vocabulary: {unknown}")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names")
        if self.scenario != "SVM":
            bad = [n for n in self.names if n in FOLLOWER_FEATURES]
            if bad:
                raise ValueError(
                    f"follower features need a follower vehicle: {bad}")

    @property
    def dimension(self) -> int:
        return len(self.names)


def _drop(names, *excluded):
    return tuple(n for n in names if n not in excluded)


DEFAULT_MANIFESTS = {
    "HB": FeatureManifest("HB", (
        "v_s_x", "a_s_x", "v_n_x", "a_n_x", "dx", "dv_x", "da_x",
        "dv_s_u_x", "dv_n_u_x", "drac_u_x", "drac_r_x")),
    "MB": FeatureManifest("MB", _drop(_NON_FOLLOWER, "da_y")),
    "LC": FeatureManifest("LC", _drop(_NON_FOLLOWER, "da_x", "da_y")),
    "SVM": FeatureManifest("SVM", _drop(_NON_FOLLOWER, "da_y") + (
        "v_nb_x", "v_nb_y", "a_nb_x", "a_nb_y",
        "dx_b", "dy_b", "dv_x_b", "dv_y_b",
        "dv_nb_u_x", "dv_nb_u_y", "drac_u_b_x")),
}

DEFAULT_SIGMAS = UncertaintySigmas()


def _neighbour(frame: FrameState, neighbour_index: int):
    try:
        return frame.neighbours[neighbour_index]
    except IndexError:
        raise IndexError(
            f"frame has {len(frame.neighbours)} neighbours, "
            f"index {neighbour_index} requested") from None


def relative_kinematics(frame: FrameState, neighbour_index: int = 0):
    """Centre offsets and signed approach rates for one neighbour.

    Returns (dx, dy, dv_x, dv_y, da_x, da_y); offsets are magnitudes and
    rates are positive exactly when the centre gap on that axis shrinks.
    """
    s = frame.subject
    n = _neighbour(frame, neighbour_index)
    off_x = n.x - s.x
    off_y = n.y - s.y
    sx = np.sign(off_x)
    sy = np.sign(off_y)
    return (abs(off_x), abs(off_y),
            sx * (s.vx - n.vx), sy * (s.vy - n.vy),
            sx * (s.ax - n.ax), sy * (s.ay - n.ay))


def uncertain_velocity(vehicle_role: str, frame: FrameState,
                       sigma_x: float, sigma_y: float,
                       neighbour_index: int = 0):
    """Velocity-uncertainty vector pointed at the other vehicle.

    ``vehicle_role`` is "subject" or "neighbour"; the vector sits on this
    vehicle and points along the centre line toward the other one, with
    per-axis magnitudes sigma_x, sigma_y (world frame, signed components).
    """
    if sigma_x < 0 or sigma_y < 0:
        raise ValueError("sigmas must be nonnegative")
    s = frame.subject
    n = _neighbour(frame, neighbour_index)
    if vehicle_role == "subject":
        here, there = s, n
    elif vehicle_role == "neighbour":
        here, there = n, s
    else:
        raise ValueError(f"vehicle_role must be subject or neighbour, got {vehicle_role!r}")
    dx = there.x - here.x
    dy = there.y - here.y
    norm = np.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("coincident centres leave the direction undefined")
    return sigma_x * dx / norm, sigma_y * dy / norm


def drac(v_s: float, v_n: float, gap: float, gap_rate: float) -> float:
    """Deceleration needed to avoid the collision a closing gap implies."""
    if gap_rate >= 0.0:
        return 0.0
    d = v_s - v_n
    return d * d / max(gap, GAP_FLOOR)


def _axis_gaps(frame: FrameState, neighbour_index: int):
    """Per-axis bumper-to-bumper gaps (clamped at zero)."""
    s = frame.subject
    n = _neighbour(frame, neighbour_index)
    gap_x = abs(n.x - s.x) - 0.5 * (s.length + n.length)
    gap_y = abs(n.y - s.y) - 0.5 * (s.width + n.width)
    return max(gap_x, 0.0), max(gap_y, 0.0)


def drac_components(frame: FrameState, neighbour_index: int = 0,
                    sigmas: UncertaintySigmas = DEFAULT_SIGMAS):
    """(DRAC_r_x, DRAC_r_y, DRAC_u_x, DRAC_u_y) for one neighbour.

    The r-variants use real per-axis velocities against bumper gaps; the
    u-variants replace the relative velocity with the combined uncertain
    component on that axis, which always closes the gap, so they are
    nonzero whenever there is any centre offset on the axis.
    """
    s = frame.subject
    n = _neighbour(frame, neighbour_index)
    gap_x, gap_y = _axis_gaps(frame, neighbour_index)
    _, _, dv_x, dv_y, _, _ = relative_kinematics(frame, neighbour_index)
    # dv > 0 means closing, so the gap rate is its negation
    r_x = drac(s.vx, n.vx, gap_x, -dv_x)
    r_y = drac(s.vy, n.vy, gap_y, -dv_y)

    su = uncertain_velocity("subject", frame, sigmas.s_x, sigmas.s_y,
                            neighbour_index)
    nu = uncertain_velocity("neighbour", frame, sigmas.n_x, sigmas.n_y,
                            neighbour_index)
    rel_u_x = su[0] - nu[0]  # opposite directions add up
    rel_u_y = su[1] - nu[1]
    u_x = drac(rel_u_x, 0.0, gap_x, -abs(rel_u_x))
    u_y = drac(rel_u_y, 0.0, gap_y, -abs(rel_u_y))
    return r_x, r_y, u_x, u_y


def frame_features(frame: FrameState, sigmas: UncertaintySigmas = DEFAULT_SIGMAS) -> dict:
    """Every vocabulary feature available for this frame, by name."""
    s = frame.subject
    n = _neighbour(frame, 0)
    dx, dy, dv_x, dv_y, da_x, da_y = relative_kinematics(frame, 0)
    su = uncertain_velocity("subject", frame, sigmas.s_x, sigmas.s_y, 0)
    nu = uncertain_velocity("neighbour", frame, sigmas.n_x, sigmas.n_y, 0)
    r_x, r_y, u_x, u_y = drac_components(frame, 0, sigmas)
    out = {
        "v_s_x": s.vx, "v_s_y": s.vy, "a_s_x": s.ax, "a_s_y": s.ay,
        "v_n_x": n.vx, "v_n_y": n.vy, "a_n_x": n.ax, "a_n_y": n.ay,
        "dx": dx, "dy": dy, "dv_x": dv_x, "dv_y": dv_y,
        "da_x": da_x, "da_y": da_y,
        "dv_s_u_x": su[0], "dv_s_u_y": su[1],
        "dv_n_u_x": nu[0], "dv_n_u_y": nu[1],
        "drac_u_x": u_x, "drac_u_y": u_y,
        "drac_r_x": r_x, "drac_r_y": r_y,
    }
    if len(frame.neighbours) > 1:
        b = _neighbour(frame, 1)
        dx_b, dy_b, dv_x_b, dv_y_b, da_x_b, da_y_b = relative_kinematics(frame, 1)
        bu = uncertain_velocity("neighbour", frame, sigmas.n_x, sigmas.n_y, 1)
        rb_x, rb_y, ub_x, ub_y = drac_components(frame, 1, sigmas)
        out.update({
            "v_nb_x": b.vx, "v_nb_y": b.vy, "a_nb_x": b.ax, "a_nb_y": b.ay,
            "dx_b": dx_b, "dy_b": dy_b,
            "dv_x_b": dv_x_b, "dv_y_b": dv_y_b,
            "da_x_b": da_x_b, "da_y_b": da_y_b,
            "dv_nb_u_x": bu[0], "dv_nb_u_y": bu[1],
            "drac_u_b_x": ub_x, "drac_u_b_y": ub_y,
            "drac_r_b_x": rb_x, "drac_r_b_y": rb_y,
        })
    return out


def build_features(trajectory: EventTrajectory, manifest: FeatureManifest,
                   sigmas: UncertaintySigmas = DEFAULT_SIGMAS) -> np.ndarray:
    """Assemble the (n_frames, D) feature matrix in manifest order."""
    if scenario_family(trajectory.scenario) != manifest.scenario:
        raise ValueError(
            f"manifest is for {manifest.scenario}, trajectory is "
            f"{trajectory.scenario}")
    rows = np.empty((trajectory.n_frames, manifest.dimension))
    for k in range(trajectory.n_frames):
        feats = frame_features(trajectory.frame(k), sigmas)
        rows[k] = [feats[name] for name in manifest.names]
    if not np.all(np.isfinite(rows)):
        raise ValueError("non-finite feature values")
    return rows


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormStats:
    names: tuple
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if not (len(self.names) == self.mean.size == self.std.size):
            raise ValueError("names, mean and std must agree in length")
        if np.any(self.std <= 0):
            raise ValueError("std must be positive for every feature")


def zscore_fit(matrix: np.ndarray, names) -> NormStats:
    """Column means and stds of the training matrix; constant columns fail."""
    matrix = np.asarray(matrix, dtype=float)
    names = tuple(names)
    if matrix.ndim != 2 or matrix.shape[1] != len(names):
        raise ValueError("matrix columns must match names")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    flat = [names[j] for j in np.nonzero(std == 0.0)[0]]
    if flat:
        raise ValueError(f"zero-variance features cannot be normalized: {flat}")
    return NormStats(names, mean, std)


def zscore_apply(matrix: np.ndarray, stats: NormStats) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] != len(stats.names):
        raise ValueError("matrix columns must match the fitted stats")
    return (matrix - stats.mean) / stats.std
