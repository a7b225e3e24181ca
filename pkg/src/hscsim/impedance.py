"""Equivalent arm impedance at the steering wheel.

Protocol: the two-arm model holds a wheel stripped of mass and stiffness
(tiny inertia, no self-centering), a seeded pulse-train torque excites the
wheel, and the recorded angle response is fitted to a single rotational
mass-spring-damper

    J * dd(theta) + B * d(theta) + K * theta = T(t)

by linear least squares. Because the fitted relation is linear and time
invariant, applying one zero-phase low-pass filter to both theta and T
preserves it exactly, so the regression runs on filtered signals with
central-difference derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt

from .arm import (
    ArmParams,
    DriverGains,
    HandCoupling,
    arm_forward_dynamics,
    control_accel,
    desired_reaction_force,
    hand_contact,
    initial_posture,
    joint_torques,
    tangent_directions,
)
from .engine import SimulationError
from .wheel import WheelParams, WheelState, column_torque, wheel_dynamics

__all__ = [
    "ImpedanceTrial",
    "ImpedanceFit",
    "generate_excitation",
    "run_impedance_trial",
    "fit_second_order",
]

# Massless/stiffness-free wheel stand-in for the identification rig.
RIG_WHEEL_INERTIA = 1e-4


@dataclass(frozen=True)
class ImpedanceTrial:
    """Excitation torque and wheel-angle response sampled at a fixed dt."""

    time: np.ndarray
    torque: np.ndarray  # N m, applied wheel torque
    theta: np.ndarray   # rad, wheel angle response
    dt: float
    mode: str
    seed: int

    def __post_init__(self) -> None:
        if not (len(self.time) == len(self.torque) == len(self.theta)):
            raise ValueError("trial series must have equal length")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class ImpedanceFit:
    inertia: float        # kg m^2
    damping: float        # N m s/rad
    stiffness: float      # N m/rad
    rms_residual: float   # N m, reconstruction error on the filtered torque


def generate_excitation(
    seed: int, duration: float = 10.0, dt: float = 0.001, amplitude: float = 3.0
) -> np.ndarray:
    """Seeded rectangular pulse train, zero mean over the trial.

    Pulse widths are drawn uniformly from 0.2-0.6 s. Each drawn width is
    emitted twice with opposite signs (random order, random gaps), so the
    signed area cancels exactly for every completed pair.
    """
    if duration <= 0.0 or dt <= 0.0 or amplitude < 0.0:
        raise ValueError("duration and dt must be positive, amplitude nonnegative")
    n = round(duration / dt)
    torque = np.zeros(n)
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.1, 0.4)  # lead-in gap
    while True:
        width = rng.uniform(0.2, 0.6)
        gap = rng.uniform(0.1, 0.5)
        first = 1.0 if rng.random() < 0.5 else -1.0
        end = t + 2.0 * width + gap
        if end > duration - 0.05:
            break
        i0 = round(t / dt)
        i1 = round((t + width) / dt)
        torque[i0:i1] = first * amplitude
        i2 = round((t + width + gap) / dt)
        i3 = round((t + 2.0 * width + gap) / dt)
        torque[i2:i3] = -first * amplitude
        t = end + rng.uniform(0.1, 0.5)
    return torque


def run_impedance_trial(
    mode: str,
    excitation: np.ndarray,
    dt: float = 0.001,
    seed: int = 0,
    arm_params: ArmParams | None = None,
    coupling: HandCoupling | None = None,
    radius: float = 0.185,
) -> ImpedanceTrial:
    """Drive the held wheel with an external torque and record the response.

    The desired posture is frozen at the initial hold (zero rate and
    acceleration references), matching how the gain sets were defined, and
    the wheel model carries no stiffness, damping, or appreciable inertia.
    """
    gains = DriverGains.from_mode(mode)
    p = arm_params or ArmParams()
    c = coupling or HandCoupling()
    rig = WheelParams(inertia=RIG_WHEEL_INERTIA, stiffness=0.0, damping=0.0, radius=radius)

    arm_state = initial_posture(radius, p)
    q_d = arm_state.q.copy()
    zeros4 = np.zeros(4)
    wheel = WheelState()

    excitation = np.asarray(excitation, dtype=float)
    n = len(excitation)
    theta = np.empty(n)
    time = np.arange(n) * dt

    for i in range(n):
        theta[i] = wheel.delta
        if not np.isfinite(wheel.delta) or not np.all(np.isfinite(arm_state.q)):
            raise SimulationError(f"impedance trial diverged at t={i * dt:.4f} s")

        f_applied, grips = hand_contact(arm_state, wheel.delta, wheel.ddelta, rig.radius, c, p)
        tangents = tangent_directions(wheel.delta)
        f_des_scalars = desired_reaction_force(wheel.delta, 0.0, gains)
        f_meas = tuple(np.dot(f_applied[k], tangents[k]) * tangents[k] for k in range(2))
        f_des = tuple(f_des_scalars[k] * tangents[k] for k in range(2))
        a_q = control_accel(arm_state, q_d, zeros4, zeros4, f_meas, f_des, gains, p)
        tau = joint_torques(arm_state, a_q, f_applied, p)

        t_hands = column_torque(f_applied, grips)
        arm_state = arm_forward_dynamics(arm_state, tau, f_applied, p, dt)
        wheel = wheel_dynamics(wheel, t_hands, excitation[i], rig, dt)

    return ImpedanceTrial(time=time, torque=excitation, theta=theta, dt=dt, mode=mode, seed=seed)


def fit_second_order(
    trial: ImpedanceTrial, cutoff_hz: float = 20.0, edge_trim: float = 0.5
) -> ImpedanceFit:
    """Least-squares (J, B, K) of the single-DOF model from a recorded trial.

    Both signals pass through a zero-phase 4th-order Butterworth low-pass;
    derivatives come from central differences; ``edge_trim`` seconds are
    dropped at each end to discard filter transients.
    """
    n = len(trial.theta)
    if n < 1000:
        raise ValueError(f"trial too short to fit ({n} samples, need >= 1000)")
    fs = 1.0 / trial.dt
    b, a = butter(4, cutoff_hz / (0.5 * fs))
    theta_f = filtfilt(b, a, trial.theta)
    torque_f = filtfilt(b, a, trial.torque)

    dtheta = np.gradient(theta_f, trial.dt, edge_order=2)
    ddtheta = np.gradient(dtheta, trial.dt, edge_order=2)

    k = max(int(edge_trim / trial.dt), 2)
    if 2 * k >= n - 10:
        raise ValueError("edge_trim leaves too few samples")
    sl = slice(k, n - k)

    design = np.column_stack([ddtheta[sl], dtheta[sl], theta_f[sl]])
    target = torque_f[sl]
    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < 3:
        raise ValueError("rank-deficient regression (insufficient excitation)")
    residual = target - design @ solution
    rms = float(np.sqrt(np.mean(residual**2)))
    return ImpedanceFit(
        inertia=float(solution[0]),
        damping=float(solution[1]),
        stiffness=float(solution[2]),
        rms_residual=rms,
    )
