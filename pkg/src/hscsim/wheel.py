"""Steering wheel and column: self-centering dynamics, saturated assist
actuator, and the virtual column torque sensor.

The wheel is a single rotational inertia. Its balance is

    J_sw * dd(delta_sw) = T_hands + T_ADS - T_sw

where ``T_hands`` is the net rim torque from the hand contact forces,
``T_ADS`` the (saturated) assist actuator torque, and ``T_sw`` the
self-centering stiffness/damping torque.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WheelParams",
    "AdsActuator",
    "WheelState",
    "ads_torque",
    "self_align_torque",
    "wheel_dynamics",
    "column_torque",
    "column_sensor",
]


@dataclass(frozen=True)
class WheelParams:
    inertia: float = 0.04      # kg m^2, wheel plus column
    stiffness: float = 7.5     # N m/rad
    damping: float = 0.9       # N m s/rad
    radius: float = 0.185      # m, rim radius (370 mm wheel)
    rake: float = math.radians(25.0)  # rad, informational; gravity enters via arm g_eff
    # When set, the damping term uses the reference wheel rate instead of the
    # actual one (the literal published form; dimensionally odd, kept testable).
    damp_reference_rate: bool = False

    def __post_init__(self) -> None:
        if self.inertia <= 0.0:
            raise ValueError("wheel inertia must be positive")
        if self.stiffness < 0.0 or self.damping < 0.0:
            raise ValueError("stiffness and damping must be nonnegative")
        if self.radius <= 0.0:
            raise ValueError("wheel radius must be positive")


@dataclass(frozen=True)
class AdsActuator:
    gain: float = 72.7     # N m/rad
    torque_limit: float = 5.0  # N m
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.torque_limit <= 0.0:
            raise ValueError("torque limit must be positive")


@dataclass(frozen=True)
class WheelState:
    delta: float = 0.0   # rad
    ddelta: float = 0.0  # rad/s


def ads_torque(delta_sw: float, delta_sw_r_ads: float, act: AdsActuator) -> float:
    """Saturated proportional assist torque; zero when the actuator is disabled."""
    if not act.enabled:
        return 0.0
    t = -act.gain * (delta_sw - delta_sw_r_ads)
    return min(max(t, -act.torque_limit), act.torque_limit)


def self_align_torque(
    delta_sw: float, ddelta_sw: float, p: WheelParams, ref_rate: float = 0.0
) -> float:
    """Self-centering torque opposing wheel deflection and motion."""
    rate = ref_rate if p.damp_reference_rate else ddelta_sw
    return p.stiffness * delta_sw + p.damping * rate


def wheel_dynamics(
    state: WheelState,
    t_hands: float,
    t_ads: float,
    p: WheelParams,
    dt: float,
    ref_rate: float = 0.0,
) -> WheelState:
    """One RK4 step with the hand and assist torques held over the step."""

    def acc(delta: float, ddelta: float) -> float:
        return (t_hands + t_ads - self_align_torque(delta, ddelta, p, ref_rate)) / p.inertia

    d0, v0 = state.delta, state.ddelta
    k1v = acc(d0, v0)
    k2v = acc(d0 + 0.5 * dt * v0, v0 + 0.5 * dt * k1v)
    k2x = v0 + 0.5 * dt * k1v
    k3v = acc(d0 + 0.5 * dt * k2x, v0 + 0.5 * dt * k2v)
    k3x = v0 + 0.5 * dt * k2v
    k4v = acc(d0 + dt * k3x, v0 + dt * k3v)
    k4x = v0 + dt * k3v
    delta = d0 + dt / 6.0 * (v0 + 2.0 * k2x + 2.0 * k3x + k4x)
    ddelta = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return WheelState(delta=delta, ddelta=ddelta)


def column_torque(
    f_hands: tuple[np.ndarray, np.ndarray],
    grips: tuple[np.ndarray, np.ndarray],
) -> float:
    """Net torque about the column axis from the hand-on-rim contact forces."""
    total = 0.0
    for f, g in zip(f_hands, grips):
        total += g[0] * f[1] - g[1] * f[0]
    return total


def column_sensor(t_hands: float) -> float:
    """Virtual column sensor reading: the net driver hand torque."""
    return t_hands
