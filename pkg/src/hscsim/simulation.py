"""Closed-loop assembly of driver model, assist actuator, wheel, and vehicle.

Structure per run:

- Outer rate: driver and ADS task reasoning read the vehicle state and the
  input trajectory, and push their commands into transport-delay lines.
- Inner rate: the delayed wheel-angle reference becomes the desired joint
  trajectory (with reference rates estimated by central differences at the
  outer spacing), the computed-torque controller produces actuator torques,
  the ADS torque law fires on its own delayed reference, and each plant block
  advances one RK4 step with its interface inputs held across the step.

Everything evolves through explicit state handed between steps; a run is
bit-reproducible from its configuration.
"""

from __future__ import annotations

import numpy as np

from .arm import (
    ArmParams,
    DriverGains,
    HandCoupling,
    arm_accel,
    arm_forward_dynamics,
    control_accel,
    desired_joint_traj,
    desired_reaction_force,
    hand_contact,
    initial_posture,
    joint_torques,
    tangent_directions,
)
from .engine import DelayLine, SimClock, SimLog, run_loop
from .reasoning import (
    ConflictSpec,
    ReasoningParams,
    ReferenceTrajectory,
    ads_steering_reference,
    pedal_reference,
    steering_reference,
)
from .vehicle import VehicleParams, VehicleState, step_lateral, step_longitudinal
from .wheel import (
    AdsActuator,
    WheelParams,
    WheelState,
    ads_torque,
    column_torque,
    self_align_torque,
    wheel_dynamics,
)

__all__ = ["SharedControlSimulation", "CHANNEL_UNITS"]

CHANNEL_UNITS: dict[str, str] = {
    "x": "m",
    "y": "m",
    "psi": "rad",
    "yaw_rate": "rad/s",
    "v_y": "m/s",
    "speed": "m/s",
    "y_ref": "m",
    "v_ref": "m/s",
    "delta_sw_r": "rad",
    "delta_sw_r_ads": "rad",
    "pedal": "%",
    "delta_sw": "rad",
    "delta_sw_dot": "rad/s",
    "delta_sw_ddot": "rad/s^2",
    "t_ads": "N m",
    "t_hm": "N m",
    "t_sw": "N m",
    **{f"q_{s}": "rad" for s in ("ls", "le", "rs", "re")},
    **{f"dq_{s}": "rad/s" for s in ("ls", "le", "rs", "re")},
    **{f"tau_{s}": "N m" for s in ("ls", "le", "rs", "re")},
    **{f"aq_{s}": "rad/s^2" for s in ("ls", "le", "rs", "re")},
    **{f"qdd_{s}": "rad/s^2" for s in ("ls", "le", "rs", "re")},
    "f_hand_l": "N",
    "f_hand_r": "N",
}

_JOINT_SUFFIXES = ("ls", "le", "rs", "re")


class SharedControlSimulation:
    """One haptic shared-control run wired from explicit module parameters."""

    def __init__(
        self,
        clock: SimClock,
        reference: ReferenceTrajectory,
        reasoning: ReasoningParams,
        conflict: ConflictSpec,
        gains: DriverGains,
        arm_params: ArmParams,
        coupling: HandCoupling,
        wheel_params: WheelParams,
        actuator: AdsActuator,
        vehicle_params: VehicleParams,
        initial_speed: float | None = None,
    ):
        self.clock = clock
        self.reference = reference
        self.reasoning = reasoning
        self.conflict = conflict
        self.gains = gains
        self.arm_params = arm_params
        self.coupling = coupling
        self.wheel_params = wheel_params
        self.actuator = actuator
        self.vehicle_params = vehicle_params
        v0 = reference.speed_at(0.0) if initial_speed is None else initial_speed
        self.initial_vehicle = VehicleState(speed=v0)
        self.initial_joint_posture = initial_posture(wheel_params.radius, arm_params).q

    def _new_log(self) -> SimLog:
        log = SimLog()
        for name, units in CHANNEL_UNITS.items():
            log.register(name, units)
        return log

    def run(self) -> SimLog:
        clock = self.clock
        dt = clock.dt_inner
        d_out = clock.dt_outer
        p_arm = self.arm_params
        p_wheel = self.wheel_params
        p_veh = self.vehicle_params
        gains = self.gains
        coupling = self.coupling
        actuator = self.actuator
        reasoning = self.reasoning
        reference = self.reference
        radius = p_wheel.radius
        ads_on = actuator.enabled

        vehicle = self.initial_vehicle
        arm_state = initial_posture(radius, p_arm)
        wheel_st = WheelState()

        # Delay lines primed with the t=0 commands so runs start in trim.
        drv_line = DelayLine(
            reasoning.steer_delay,
            initial_value=steering_reference(vehicle, reference, 0.0, reasoning),
        )
        ped_line = DelayLine(
            reasoning.pedal_delay,
            initial_value=pedal_reference(vehicle.speed, reference.speed_at(0.0), None, reasoning),
        )
        ads_line = None
        if ads_on:
            ads_line = DelayLine(
                self.conflict.ads_params.steer_delay,
                initial_value=ads_steering_reference(vehicle, reference, 0.0, self.conflict),
            )

        # Centered reference-rate estimation needs the delayed signal one
        # outer interval ahead of the read point, which exists only when the
        # transport delay covers that interval; otherwise shift the stencil
        # one interval into the past.
        centered = reasoning.steer_delay >= d_out

        def outer(t: float) -> None:
            drv_line.push(t, steering_reference(vehicle, reference, t, reasoning))
            ped_line.push(t, pedal_reference(vehicle.speed, reference.speed_at(t), None, reasoning))
            if ads_line is not None:
                ads_line.push(t, ads_steering_reference(vehicle, reference, t, self.conflict))

        def inner(t: float) -> dict[str, float]:
            nonlocal vehicle, arm_state, wheel_st

            if centered:
                rc = drv_line.read(t)
                rm = drv_line.read(t - d_out)
                rp = drv_line.read(t + d_out)
            else:
                rc = drv_line.read(t - d_out)
                rm = drv_line.read(t - 2.0 * d_out)
                rp = drv_line.read(t)
            ref_rate = (rp - rm) / (2.0 * d_out)
            ref_accel = (rp - 2.0 * rc + rm) / (d_out * d_out)

            q_d, qd_d, qdd_d = desired_joint_traj(rc, ref_rate, ref_accel, radius, p_arm)

            delta = wheel_st.delta
            f_applied, grips = hand_contact(
                arm_state, delta, wheel_st.ddelta, radius, coupling, p_arm
            )
            tangents = tangent_directions(delta)
            f_des_scalars = desired_reaction_force(delta, rc, gains)
            f_meas = tuple(
                float(np.dot(f_applied[k], tangents[k])) * tangents[k] for k in range(2)
            )
            f_des = tuple(f_des_scalars[k] * tangents[k] for k in range(2))

            a_q = control_accel(arm_state, q_d, qd_d, qdd_d, f_meas, f_des, gains, p_arm)
            tau = joint_torques(arm_state, a_q, f_applied, p_arm)
            qdd_now = arm_accel(arm_state, tau, f_applied, p_arm)

            t_hm = column_torque(f_applied, grips)
            t_sw = self_align_torque(delta, wheel_st.ddelta, p_wheel, ref_rate)
            if ads_line is not None:
                r_ads = ads_line.read(t)
                t_ads = ads_torque(delta, r_ads, actuator)
            else:
                r_ads = 0.0
                t_ads = 0.0
            delta_ddot = (t_hm + t_ads - t_sw) / p_wheel.inertia
            pedal = ped_line.read(t)

            sample = {
                "x": vehicle.x,
                "y": vehicle.y,
                "psi": vehicle.psi,
                "yaw_rate": vehicle.yaw_rate,
                "v_y": vehicle.v_y,
                "speed": vehicle.speed,
                "y_ref": reference.lateral_at(t),
                "v_ref": reference.speed_at(t),
                "delta_sw_r": rc,
                "delta_sw_r_ads": r_ads,
                "pedal": pedal,
                "delta_sw": delta,
                "delta_sw_dot": wheel_st.ddelta,
                "delta_sw_ddot": delta_ddot,
                "t_ads": t_ads,
                "t_hm": t_hm,
                "t_sw": t_sw,
                "f_hand_l": float(np.hypot(*f_applied[0])),
                "f_hand_r": float(np.hypot(*f_applied[1])),
            }
            for j, s in enumerate(_JOINT_SUFFIXES):
                sample[f"q_{s}"] = arm_state.q[j]
                sample[f"dq_{s}"] = arm_state.dq[j]
                sample[f"tau_{s}"] = tau[j]
                sample[f"aq_{s}"] = a_q[j]
                sample[f"qdd_{s}"] = qdd_now[j]

            arm_state = arm_forward_dynamics(arm_state, tau, f_applied, p_arm, dt)
            wheel_st = wheel_dynamics(wheel_st, t_hm, t_ads, p_wheel, dt, ref_rate)
            vehicle = step_lateral(vehicle, delta, p_veh, dt)
            vehicle = step_longitudinal(vehicle, pedal, p_veh, dt)
            return sample

        return run_loop(clock, outer, inner, self._new_log())
