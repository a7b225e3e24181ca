"""Outer-loop driving task reasoning for the driver model and the ADS.

Longitudinal: a car-following pedal law on headway and speed errors; when no
preceding vehicle exists (the overtaking study) the headway term drops and the
pedal tracks the reference speed. Lateral: a forward-gaze steering law, with
the commanded wheel angle proportional to the previewed lateral deflection
between the desired path point and the kinematically projected vehicle
position. Both commands are clamped and then transported through a pure time
delay by the caller.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .vehicle import MIN_SPEED, VehicleState

__all__ = [
    "ReasoningParams",
    "ReferenceTrajectory",
    "ConflictKind",
    "ConflictSpec",
    "pedal_reference",
    "steering_reference",
    "ads_steering_reference",
    "load_reference_csv",
    "STEER_REF_LIMIT",
    "PEDAL_LIMIT",
]

PEDAL_LIMIT = 100.0           # %, both pedals folded into one signed channel
STEER_REF_LIMIT = math.pi / 2  # rad, bound on commanded wheel angle


@dataclass(frozen=True)
class ReasoningParams:
    """Task reasoning gains and delays (driver defaults, shared by the ADS)."""

    headway_time: float = 0.5    # s, desired time headway behind a preceding vehicle
    gain_distance: float = 20.0  # %/m
    gain_velocity: float = 20.0  # %/(m/s)
    pedal_delay: float = 0.4     # s
    steer_gain: float = 1.0      # rad/m, corrective steering per meter of deflection
    preview_time: float = 0.5    # s, forward-gaze duration
    steer_delay: float = 0.1     # s

    def __post_init__(self) -> None:
        if self.preview_time <= 0.0:
            raise ValueError("preview_time must be positive")
        if self.pedal_delay < 0.0 or self.steer_delay < 0.0:
            raise ValueError("delays must be nonnegative")
        if self.steer_gain <= 0.0:
            raise ValueError("steer_gain must be positive")


class ReferenceTrajectory:
    """Sampled (t, v_ref, y_ref) input path, piecewise linear, clamped at the ends."""

    def __init__(self, t: np.ndarray, v_ref: np.ndarray, y_ref: np.ndarray):
        t = np.asarray(t, dtype=float)
        v_ref = np.asarray(v_ref, dtype=float)
        y_ref = np.asarray(y_ref, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("reference needs at least two samples")
        if not (t.size == v_ref.size == y_ref.size):
            raise ValueError("reference columns must have equal length")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("reference times must be strictly increasing")
        self.t = t
        self.v_ref = v_ref
        self.y_ref = y_ref

    def speed_at(self, t: float) -> float:
        return float(np.interp(t, self.t, self.v_ref))

    def lateral_at(self, t: float) -> float:
        return float(np.interp(t, self.t, self.y_ref))

    def with_constant_lateral(self, y_const: float) -> "ReferenceTrajectory":
        return ReferenceTrajectory(self.t, self.v_ref, np.full_like(self.y_ref, y_const))


class ConflictKind(Enum):
    NONE = "none"
    TYPE_I = "type_i"
    TYPE_II = "type_ii"


@dataclass(frozen=True)
class ConflictSpec:
    """How the ADS task reasoning diverges from the driver's.

    TYPE_I: different planned maneuver; the ADS steers toward a constant
    lane-keeping lateral reference. TYPE_II: same maneuver, tighter tracking
    (steer gain 1.5, steering delay 0.05 s).
    """

    kind: ConflictKind
    ads_params: ReasoningParams
    ads_y_ref_override: float | None = None

    def __post_init__(self) -> None:
        if self.kind is ConflictKind.TYPE_I and self.ads_y_ref_override is None:
            raise ValueError("TYPE_I conflict requires a lane-keeping lateral override")

    @staticmethod
    def for_kind(
        kind: ConflictKind,
        driver_params: ReasoningParams,
        y_ref_override: float = 0.0,
    ) -> "ConflictSpec":
        if kind is ConflictKind.NONE:
            return ConflictSpec(kind, driver_params)
        if kind is ConflictKind.TYPE_I:
            return ConflictSpec(kind, driver_params, ads_y_ref_override=y_ref_override)
        ads = replace(driver_params, steer_gain=1.5, steer_delay=0.05)
        return ConflictSpec(kind, ads)


def pedal_reference(
    speed: float,
    v_ref: float,
    headway: tuple[float, float] | None,
    params: ReasoningParams,
) -> float:
    """Reference pedal position in percent, clamped to [-100, 100].

    With a preceding vehicle, ``headway`` is (actual headway distance m,
    preceding-vehicle speed m/s) and the command combines the headway-distance
    error against ``headway_time * speed`` with the speed error of the
    preceding vehicle against the reference. Without one, the command tracks
    the reference speed alone.
    """
    if headway is not None:
        d_hw, v_prec = headway
        desired = params.headway_time * speed
        cmd = params.gain_distance * (d_hw - desired) + params.gain_velocity * (v_prec - v_ref)
    else:
        cmd = params.gain_velocity * (v_ref - speed)
    return min(max(cmd, -PEDAL_LIMIT), PEDAL_LIMIT)


def steering_reference(
    state: VehicleState,
    ref: ReferenceTrajectory,
    t: float,
    params: ReasoningParams,
) -> float:
    """Forward-gaze reference wheel angle, clamped to +-pi/2.

    The vehicle position is projected ahead by the preview time, the path is
    sampled at the previewed instant, and the command is the steering gain
    times the deflection between the two.
    """
    if state.speed <= MIN_SPEED:
        raise ValueError("steering reference undefined near standstill")
    y_pred = state.y + state.speed * math.sin(state.psi) * params.preview_time
    y_target = ref.lateral_at(t + params.preview_time)
    cmd = params.steer_gain * (y_target - y_pred)
    return min(max(cmd, -STEER_REF_LIMIT), STEER_REF_LIMIT)


def ads_steering_reference(
    state: VehicleState,
    ref: ReferenceTrajectory,
    t: float,
    spec: ConflictSpec,
) -> float:
    """ADS reference wheel angle under the configured conflict."""
    if spec.kind is ConflictKind.TYPE_I:
        ref = ref.with_constant_lateral(spec.ads_y_ref_override)
    return steering_reference(state, ref, t, spec.ads_params)


def load_reference_csv(path) -> ReferenceTrajectory:
    """Read a ``t,v_ref,y_ref`` CSV (SI units, strictly increasing t)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "v_ref", "y_ref"]:
            raise ValueError(f"expected header 't,v_ref,y_ref' in {path}")
        rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    if len(rows) < 2:
        raise ValueError(f"reference file {path} needs at least two rows")
    t, v, y = (np.array(col) for col in zip(*rows))
    return ReferenceTrajectory(t, v, y)
