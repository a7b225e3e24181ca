"""Evaluation measures over a completed run: driving performance, interface
force-torque peaks, and the per-joint control workload indicators.

All measures evaluate on the analysis window [t_stabilize, t_end]; samples
before the stabilization boundary never enter the result. Integrals use the
trapezoidal rule on the logged inner-step grid.

Workload indicators per joint:

- actuation effort: integral of |torque| (absolute by default so opposing
  efforts cannot cancel; switchable to the signed integral),
- control stress: peak |torque - nominal torque|,
- control load quantity: integral of |torque - nominal torque|,

with the nominal torque defaulting to the static gravity-hold value at the
initial posture, a condition-independent baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm import ArmParams, gravity_torque
from .engine import SimLog
from .reasoning import ReferenceTrajectory

__all__ = [
    "JointWorkload",
    "WorkloadReport",
    "PerformanceReport",
    "JOINT_NAMES",
    "window_mask",
    "peak_lateral_error",
    "actuation_effort",
    "control_stress",
    "control_load_quantity",
    "nominal_torque",
    "build_performance_report",
    "build_workload_report",
]

JOINT_NAMES = ("left_shoulder", "left_elbow", "right_shoulder", "right_elbow")

# Saturation detection slack against the exact clamp value.
_SAT_EPS = 1e-9


@dataclass(frozen=True)
class JointWorkload:
    actuation_effort: float       # N m s
    control_stress: float         # N m
    control_load_quantity: float  # N m s
    nominal_torque: float         # N m

    def __post_init__(self) -> None:
        if self.actuation_effort < 0 or self.control_stress < 0 or self.control_load_quantity < 0:
            raise ValueError("workload measures must be nonnegative")


@dataclass(frozen=True)
class WorkloadReport:
    condition: str
    mode: str
    joints: dict[str, JointWorkload] = field(default_factory=dict)


@dataclass(frozen=True)
class PerformanceReport:
    peak_lateral_error: float   # m
    peak_ads_torque: float      # N m
    peak_driver_torque: float   # N m, column-sensor reading
    peak_hand_force: float      # N, right-hand coupling force magnitude
    ads_saturated: bool


def window_mask(t: np.ndarray, t_start: float, t_end: float | None = None) -> np.ndarray:
    """Boolean mask selecting the analysis window (inclusive boundaries)."""
    m = t >= t_start - 1e-12
    if t_end is not None:
        m &= t <= t_end + 1e-12
    return m


def peak_lateral_error(log: SimLog, ref: ReferenceTrajectory, t_stabilize: float) -> float:
    """Largest |y - y_ref| after the stabilization window."""
    t = log.time()
    m = window_mask(t, t_stabilize)
    y = log.channel("y")[m]
    y_ref = np.interp(t[m], ref.t, ref.y_ref)
    return float(np.max(np.abs(y - y_ref)))


def actuation_effort(
    t: np.ndarray, tau: np.ndarray, window: tuple[float, float], *, absolute: bool = True
) -> float:
    m = window_mask(np.asarray(t), *window)
    series = np.abs(tau) if absolute else np.asarray(tau, dtype=float)
    return float(np.trapezoid(series[m], np.asarray(t)[m]))


def control_stress(
    t: np.ndarray, tau: np.ndarray, tau_nominal: float, window: tuple[float, float]
) -> float:
    m = window_mask(np.asarray(t), *window)
    return float(np.max(np.abs(np.asarray(tau)[m] - tau_nominal)))


def control_load_quantity(
    t: np.ndarray, tau: np.ndarray, tau_nominal: float, window: tuple[float, float]
) -> float:
    m = window_mask(np.asarray(t), *window)
    return float(np.trapezoid(np.abs(np.asarray(tau)[m] - tau_nominal), np.asarray(t)[m]))


def nominal_torque(arm_params: ArmParams, posture: np.ndarray) -> np.ndarray:
    """Static gravity-hold torque per joint at the given (initial) posture."""
    return gravity_torque(np.asarray(posture, dtype=float), arm_params)


def build_performance_report(
    log: SimLog,
    ref: ReferenceTrajectory,
    t_stabilize: float,
    ads_torque_limit: float,
) -> PerformanceReport:
    t = log.time()
    m = window_mask(t, t_stabilize)
    t_ads = log.channel("t_ads")[m]
    peak_ads = float(np.max(np.abs(t_ads))) if t_ads.size else 0.0
    return PerformanceReport(
        peak_lateral_error=peak_lateral_error(log, ref, t_stabilize),
        peak_ads_torque=peak_ads,
        peak_driver_torque=float(np.max(np.abs(log.channel("t_hm")[m]))),
        peak_hand_force=float(np.max(log.channel("f_hand_r")[m])),
        ads_saturated=bool(peak_ads >= ads_torque_limit - _SAT_EPS),
    )


def build_workload_report(
    log: SimLog,
    arm_params: ArmParams,
    initial_posture: np.ndarray,
    window: tuple[float, float],
    condition: str,
    mode: str,
    *,
    effort_absolute: bool = True,
    nominal_from_run_mean: bool = False,
) -> WorkloadReport:
    """Per-joint workload indicators from the logged joint torques.

    ``nominal_from_run_mean`` switches the stress/load baseline from the
    gravity-hold torque to each joint's windowed mean torque.
    """
    t = log.time()
    nominal = nominal_torque(arm_params, initial_posture)
    joints: dict[str, JointWorkload] = {}
    for idx, name in enumerate(JOINT_NAMES):
        tau = log.channel(f"tau_{_joint_suffix(name)}")
        if nominal_from_run_mean:
            nom = float(np.mean(tau[window_mask(t, *window)]))
        else:
            nom = float(nominal[idx])
        joints[name] = JointWorkload(
            actuation_effort=actuation_effort(t, tau, window, absolute=effort_absolute),
            control_stress=control_stress(t, tau, nom, window),
            control_load_quantity=control_load_quantity(t, tau, nom, window),
            nominal_torque=nom,
        )
    return WorkloadReport(condition=condition, mode=mode, joints=joints)


def _joint_suffix(name: str) -> str:
    side, joint = name.split("_")
    return side[0] + joint[0]  # left_shoulder -> ls
