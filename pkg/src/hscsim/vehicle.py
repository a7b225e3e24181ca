"""Planar vehicle motion.

Lateral dynamics are the linear 2-DOF single-track (bicycle) model in body
lateral velocity ``v_y`` and yaw rate ``r``, driven by the front-wheel angle
``delta_sw / steer_ratio``. The longitudinal channel is a first-order
pedal-to-acceleration map: ``dV/dt = accel_gain * pedal_pct - drag_coeff * V``.

Sign conventions: x forward, y to the left, yaw counterclockwise from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "VehicleParams",
    "VehicleState",
    "step_lateral",
    "step_longitudinal",
    "MIN_SPEED",
]

# Below this speed the slip-angle formulation degenerates (division by V).
MIN_SPEED = 0.5


@dataclass(frozen=True)
class VehicleParams:
    """Mid-size sedan defaults; all values overridable through the scenario config."""

    mass: float = 1500.0            # kg
    yaw_inertia: float = 2600.0     # kg m^2
    lf: float = 1.1                 # m, CG to front axle
    lr: float = 1.6                 # m, CG to rear axle
    cornering_front: float = 80e3   # N/rad
    cornering_rear: float = 80e3    # N/rad
    steer_ratio: float = 16.0       # steering-wheel angle per front-wheel angle
    accel_gain: float = 0.03        # (m/s^2) per % pedal
    drag_coeff: float = 0.012       # 1/s

    def __post_init__(self) -> None:
        for name in (
            "mass",
            "yaw_inertia",
            "lf",
            "lr",
            "cornering_front",
            "cornering_rear",
            "steer_ratio",
            "accel_gain",
            "drag_coeff",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"vehicle parameter {name} must be positive")

    @property
    def wheelbase(self) -> float:
        return self.lf + self.lr


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0        # m, global
    y: float = 0.0        # m, global
    psi: float = 0.0      # rad, yaw
    yaw_rate: float = 0.0  # rad/s
    v_y: float = 0.0      # m/s, body lateral velocity
    speed: float = 25.0   # m/s, longitudinal


def _lateral_rates(
    v_y: float, r: float, psi: float, delta_f: float, speed: float, p: VehicleParams
) -> tuple[float, float, float, float, float]:
    f_front = p.cornering_front * (delta_f - (v_y + p.lf * r) / speed)
    f_rear = -p.cornering_rear * (v_y - p.lr * r) / speed
    dv_y = (f_front + f_rear) / p.mass - speed * r
    dr = (p.lf * f_front - p.lr * f_rear) / p.yaw_inertia
    dx = speed * math.cos(psi) - v_y * math.sin(psi)
    dy = speed * math.sin(psi) + v_y * math.cos(psi)
    return dv_y, dr, r, dx, dy


def step_lateral(state: VehicleState, delta_sw: float, p: VehicleParams, dt: float) -> VehicleState:
    """Advance (v_y, r, psi, x, y) one RK4 step with the wheel angle held.

    Raises ValueError below MIN_SPEED, where the slip-angle model is invalid.
    """
    if state.speed <= MIN_SPEED:
        raise ValueError(
            f"bicycle model invalid at speed {state.speed:.3f} m/s (requires > {MIN_SPEED})"
        )
    delta_f = delta_sw / p.steer_ratio
    v = state.speed

    def f(s: tuple[float, float, float, float, float]):
        return _lateral_rates(s[0], s[1], s[2], delta_f, v, p)

    s0 = (state.v_y, state.yaw_rate, state.psi, state.x, state.y)
    k1 = f(s0)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(s0, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(s0, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(s0, k3)))
    v_y, r, psi, x, y = (
        a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(s0, k1, k2, k3, k4)
    )
    return VehicleState(x=x, y=y, psi=psi, yaw_rate=r, v_y=v_y, speed=state.speed)


def step_longitudinal(
    state: VehicleState, pedal_pct: float, p: VehicleParams, dt: float
) -> VehicleState:
    """Advance speed one RK4 step with the pedal held; speed clamps at zero."""

    def dv(v: float) -> float:
        return p.accel_gain * pedal_pct - p.drag_coeff * v

    v0 = state.speed
    k1 = dv(v0)
    k2 = dv(v0 + 0.5 * dt * k1)
    k3 = dv(v0 + 0.5 * dt * k2)
    k4 = dv(v0 + dt * k3)
    v = v0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if v < 0.0:
        v = 0.0
    return VehicleState(
        x=state.x, y=state.y, psi=state.psi, yaw_rate=state.yaw_rate, v_y=state.v_y, speed=v
    )
