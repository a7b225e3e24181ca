"""Two-link-per-arm driver model in the steering-wheel plane.

Geometry and frames
-------------------
All contact geometry lives in the wheel plane: origin at the hub, x toward
the driver's right, y up along the rim, angles counterclockwise. The hands
grip the rim at the 3 o'clock (right) and 9 o'clock (left) positions and
rotate rigidly with the wheel, so the grip angular positions are
``delta_sw`` (right) and ``delta_sw + pi`` (left) measured from +x.

Each arm is an upper-arm / forearm chain with joint vector (shoulder, elbow).
To keep one set of equations for both sides, the left arm is expressed in a
mirrored local frame (x negated); every vector crossing the arm boundary is
converted by ``to_local`` / ``to_global``. Elbow angles then use the same
convention on both sides: 0 is full extension, values grow as the arm folds,
and the valid band is (0, pi) guarded by one-sided soft limit springs.

The joint state vector packs both arms as
``[left_shoulder, left_elbow, right_shoulder, right_elbow]``.

Control and dynamics
--------------------
The motion controller is an inverse-dynamics (computed torque) law: a
commanded joint acceleration built from trajectory errors and a hand-force
error, mapped through the full rigid-body model ``M(q) a + C(q,dq) + N(q)``
plus the contact Jacobian term. ``N`` bundles gravity (an equivalent in-plane
component ``g_eff``, calibrated so the static right-shoulder hold torque
matches the 9.4 N m baseline) together with the elbow soft-limit springs, and
is used identically by the inverse and forward paths so they stay exact
mirrors of each other.

``f_hands`` throughout is the pair of in-plane forces the hands apply to the
wheel rim, in global coordinates; the reaction on each hand is its negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import SimulationError

__all__ = [
    "ArmParams",
    "ArmState",
    "DriverGains",
    "HandCoupling",
    "TENSE_GAINS",
    "RELAXED_GAINS",
    "grip_points",
    "tangent_directions",
    "arm_ik",
    "arm_fk",
    "hand_jacobian",
    "hand_velocity",
    "to_local",
    "to_global",
    "initial_posture",
    "wheel_posture",
    "desired_joint_traj",
    "desired_reaction_force",
    "hand_coupling_force",
    "hand_contact",
    "control_accel",
    "joint_torques",
    "arm_accel",
    "arm_forward_dynamics",
    "mass_matrix",
    "gravity_torque",
    "calibrate_g_eff",
]

_SIDES = ("left", "right")

# Default equivalent in-plane gravity, from calibrate_g_eff() with the default
# anthropometry and a 0.185 m wheel; exceeds 9.81 because it also carries the
# out-of-plane gravity moment of the true driving posture.
_G_EFF_DEFAULT = 21.27984036777184


@dataclass(frozen=True)
class ArmParams:
    """Per-arm segment properties and shoulder anchors (both arms identical).

    Segment lengths and masses follow standard body-segment fractions for a
    1.8 m, 77.4 kg adult; the forearm segment includes the hand. Shoulder
    anchors are wheel-plane projections, mirrored in x between sides.
    """

    upper_len: float = 0.31       # m
    fore_len: float = 0.27        # m, forearm + hand
    upper_mass: float = 2.1       # kg
    fore_mass: float = 1.7        # kg
    upper_com: float = 0.135      # m from shoulder
    fore_com: float = 0.15        # m from elbow
    upper_inertia: float = 0.021  # kg m^2 about segment COM
    fore_inertia: float = 0.024   # kg m^2 about segment COM
    shoulder_x: float = 0.18      # m, lateral offset of each shoulder from the hub
    shoulder_y: float = -0.25     # m, below the hub in the wheel plane
    g_eff: float = _G_EFF_DEFAULT  # m/s^2, equivalent in-plane gravity
    elbow_limit_stiffness: float = 50.0  # N m/rad, one-sided outside the margin band
    elbow_margin: float = 0.05           # rad

    def __post_init__(self) -> None:
        for name in (
            "upper_len",
            "fore_len",
            "upper_mass",
            "fore_mass",
            "upper_com",
            "fore_com",
            "upper_inertia",
            "fore_inertia",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"arm parameter {name} must be positive")


@dataclass(frozen=True)
class ArmState:
    """Joint angles and rates, packed [left_shoulder, left_elbow, right_shoulder, right_elbow]."""

    q: np.ndarray
    dq: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "dq", np.asarray(self.dq, dtype=float))
        if self.q.shape != (4,) or self.dq.shape != (4,):
            raise ValueError("arm state requires 4 joint angles and 4 joint rates")


@dataclass(frozen=True)
class DriverGains:
    """Motion-controller gain set emulating one neuromuscular state."""

    kp: float      # 1/s^2, per-joint position gain
    kd: float      # 1/s, per-joint velocity gain
    kf: float      # hand-force error gain
    k_gs: float    # N/rad, desired hand force per wheel-angle error
    label: str

    def __post_init__(self) -> None:
        if min(self.kp, self.kd, self.kf, self.k_gs) < 0.0:
            raise ValueError("gains must be nonnegative")

    @staticmethod
    def from_mode(mode: str) -> "DriverGains":
        try:
            return {"tense": TENSE_GAINS, "relaxed": RELAXED_GAINS}[mode.lower()]
        except KeyError:
            raise ValueError(f"unknown driver mode {mode!r}") from None


TENSE_GAINS = DriverGains(kp=225.0, kd=30.0, kf=1.0, k_gs=800.0, label="tense")
RELAXED_GAINS = DriverGains(kp=30.0, kd=10.8, kf=0.0, k_gs=0.0, label="relaxed")


@dataclass(frozen=True)
class HandCoupling:
    """Point-to-point spring-damper pinning each hand to its grip point."""

    stiffness: float = 5000.0  # N/m
    damping: float = 100.0     # N s/m

    def __post_init__(self) -> None:
        if self.stiffness <= 0.0 or self.damping <= 0.0:
            raise ValueError("coupling stiffness and damping must be positive")


# ---------------------------------------------------------------------------
# Wheel-plane geometry


def grip_points(delta_sw: float, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Global (left, right) grip positions on the rim for a wheel angle."""
    if radius <= 0.0:
        raise ValueError("wheel radius must be positive")
    c, s = math.cos(delta_sw), math.sin(delta_sw)
    right = np.array([radius * c, radius * s])
    return -right, right


def tangent_directions(delta_sw: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit rim tangents (left, right) pointing in the +delta_sw direction."""
    c, s = math.cos(delta_sw), math.sin(delta_sw)
    right = np.array([-s, c])
    return -right, right


def grip_velocities(
    delta_sw: float, ddelta_sw: float, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    left_t, right_t = tangent_directions(delta_sw)
    return radius * ddelta_sw * left_t, radius * ddelta_sw * right_t


def _side_sign(side: str) -> float:
    if side not in _SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return 1.0 if side == "right" else -1.0


def to_local(vec: np.ndarray, side: str) -> np.ndarray:
    """Map a global wheel-plane vector into the arm's (possibly mirrored) frame."""
    s = _side_sign(side)
    return np.array([s * vec[0], vec[1]])


def to_global(vec: np.ndarray, side: str) -> np.ndarray:
    return to_local(vec, side)  # the mirror map is its own inverse


def _shoulder_local(p: ArmParams) -> np.ndarray:
    return np.array([p.shoulder_x, p.shoulder_y])


def arm_fk(q_s: float, q_e: float, side: str, p: ArmParams) -> np.ndarray:
    """Global hand position for one arm's joint angles."""
    sx, sy = _shoulder_local(p)
    x = sx + p.upper_len * math.cos(q_s) + p.fore_len * math.cos(q_s + q_e)
    y = sy + p.upper_len * math.sin(q_s) + p.fore_len * math.sin(q_s + q_e)
    return to_global(np.array([x, y]), side)


def hand_jacobian(q_s: float, q_e: float, p: ArmParams) -> np.ndarray:
    """Local 2x2 Jacobian of the hand point w.r.t. (shoulder, elbow)."""
    s1, c1 = math.sin(q_s), math.cos(q_s)
    s12, c12 = math.sin(q_s + q_e), math.cos(q_s + q_e)
    return np.array(
        [
            [-p.upper_len * s1 - p.fore_len * s12, -p.fore_len * s12],
            [p.upper_len * c1 + p.fore_len * c12, p.fore_len * c12],
        ]
    )


def hand_velocity(q_s: float, q_e: float, dq_s: float, dq_e: float, side: str, p: ArmParams) -> np.ndarray:
    """Global hand velocity for one arm."""
    v_local = hand_jacobian(q_s, q_e, p) @ np.array([dq_s, dq_e])
    return to_global(v_local, side)


def arm_ik(hand_target: np.ndarray, side: str, p: ArmParams) -> tuple[float, float]:
    """Closed-form two-link inverse kinematics, folded-elbow branch (q_e in [0, pi)).

    ``hand_target`` is global; the returned angles are in the arm's local
    frame. Raises SimulationError when the target lies outside the annulus
    the arm can reach.
    """
    target = to_local(np.asarray(hand_target, dtype=float), side)
    dx, dy = target - _shoulder_local(p)
    d2 = dx * dx + dy * dy
    l1, l2 = p.upper_len, p.fore_len
    cos_e = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if cos_e > 1.0 + 1e-9 or cos_e < -1.0 + 1e-9:
        reach = math.sqrt(d2)
        raise SimulationError(
            f"hand target {np.asarray(hand_target)} unreachable for {side} arm "
            f"(distance {reach:.4f} m, reachable annulus "
            f"({abs(l1 - l2):.4f}, {l1 + l2:.4f}) m)"
        )
    q_e = math.acos(min(max(cos_e, -1.0), 1.0))
    q_s = math.atan2(dy, dx) - math.atan2(l2 * math.sin(q_e), l1 + l2 * math.cos(q_e))
    return q_s, q_e


def wheel_posture(delta_sw: float, radius: float, p: ArmParams) -> np.ndarray:
    """Joint vector placing both hands on their grip points for a wheel angle."""
    left, right = grip_points(delta_sw, radius)
    try:
        q_ls, q_le = arm_ik(left, "left", p)
        q_rs, q_re = arm_ik(right, "right", p)
    except SimulationError as err:
        raise SimulationError(f"wheel angle {delta_sw:.4f} rad: {err}") from None
    return np.array([q_ls, q_le, q_rs, q_re])


def initial_posture(radius: float, p: ArmParams, delta_sw: float = 0.0) -> ArmState:
    return ArmState(q=wheel_posture(delta_sw, radius, p), dq=np.zeros(4))


# ---------------------------------------------------------------------------
# Desired trajectories and forces


def desired_joint_traj(
    ref_angle: float,
    ref_rate: float,
    ref_accel: float,
    radius: float,
    p: ArmParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint-space desired trajectory for a delayed wheel-angle reference.

    The joint position is the grip-point inverse kinematics at the reference
    angle; rates and accelerations follow by the chain rule, with the posture
    derivatives w.r.t. the wheel angle taken by central differences.
    """
    eps = 1e-4
    q0 = wheel_posture(ref_angle, radius, p)
    qp = wheel_posture(ref_angle + eps, radius, p)
    qm = wheel_posture(ref_angle - eps, radius, p)
    dq_dd = (qp - qm) / (2.0 * eps)
    d2q_dd2 = (qp - 2.0 * q0 + qm) / (eps * eps)
    qd_d = dq_dd * ref_rate
    qdd_d = dq_dd * ref_accel + d2q_dd2 * ref_rate * ref_rate
    return q0, qd_d, qdd_d


def desired_reaction_force(
    delta_sw: float, delta_sw_r: float, gains: DriverGains
) -> tuple[float, float]:
    """Desired tangential hand-on-wheel force, split equally: (left, right) in N.

    Positive values push the wheel toward larger angles, so a wheel sitting
    beyond its reference commands negative force.
    """
    total = -gains.k_gs * (delta_sw - delta_sw_r)
    return 0.5 * total, 0.5 * total


def hand_coupling_force(
    hand_pos: np.ndarray,
    hand_vel: np.ndarray,
    grip_pos: np.ndarray,
    grip_vel: np.ndarray,
    coupling: HandCoupling,
) -> np.ndarray:
    """Spring-damper force on the hand; the rim sees the negative."""
    return coupling.stiffness * (np.asarray(grip_pos) - np.asarray(hand_pos)) + coupling.damping * (
        np.asarray(grip_vel) - np.asarray(hand_vel)
    )


def hand_contact(
    state: ArmState,
    delta_sw: float,
    ddelta_sw: float,
    radius: float,
    coupling: HandCoupling,
    p: ArmParams,
) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Hand-on-rim forces for the current arm and wheel state.

    Returns (forces, grips): the global (left, right) force vectors the hands
    apply to the rim through the couplings, and the grip points they act at.
    """
    grips = grip_points(delta_sw, radius)
    grip_vels = grip_velocities(delta_sw, ddelta_sw, radius)
    forces = []
    for k, side in enumerate(_SIDES):
        q_s, q_e = state.q[2 * k], state.q[2 * k + 1]
        dq_s, dq_e = state.dq[2 * k], state.dq[2 * k + 1]
        pos = arm_fk(q_s, q_e, side, p)
        vel = hand_velocity(q_s, q_e, dq_s, dq_e, side, p)
        forces.append(-hand_coupling_force(pos, vel, grips[k], grip_vels[k], coupling))
    return (forces[0], forces[1]), grips


# ---------------------------------------------------------------------------
# Rigid-body terms

def _arm_matrices(
    q_s: float, q_e: float, dq_s: float, dq_e: float, p: ArmParams
) -> tuple[float, float, float, float, float]:
    """One arm's (m11, m12, m22, c1, c2); bias excludes gravity."""
    a = p.upper_inertia + p.upper_mass * p.upper_com**2
    b = p.fore_inertia + p.fore_mass * p.fore_com**2
    d = p.fore_mass * p.upper_len * p.fore_com
    cos_e, sin_e = math.cos(q_e), math.sin(q_e)
    m11 = a + b + p.fore_mass * p.upper_len**2 + 2.0 * d * cos_e
    m12 = b + d * cos_e
    m22 = b
    c1 = -d * sin_e * (2.0 * dq_s * dq_e + dq_e * dq_e)
    c2 = d * sin_e * dq_s * dq_s
    return m11, m12, m22, c1, c2


def _arm_gravity(q_s: float, q_e: float, p: ArmParams) -> tuple[float, float]:
    cos1 = math.cos(q_s)
    cos12 = math.cos(q_s + q_e)
    n1 = p.g_eff * (
        p.upper_mass * p.upper_com * cos1
        + p.fore_mass * (p.upper_len * cos1 + p.fore_com * cos12)
    )
    n2 = p.g_eff * p.fore_mass * p.fore_com * cos12
    return n1, n2


def _elbow_limit(q_e: float, p: ArmParams) -> float:
    """Restoring torque from the one-sided elbow springs (zero inside the band)."""
    lo = p.elbow_margin
    hi = math.pi - p.elbow_margin
    if q_e < lo:
        return p.elbow_limit_stiffness * (lo - q_e)
    if q_e > hi:
        return -p.elbow_limit_stiffness * (q_e - hi)
    return 0.0


def _passive_terms(q: np.ndarray, dq: np.ndarray, p: ArmParams):
    """Mass blocks, velocity bias, and the passive torque N for both arms.

    N combines gravity with the elbow limit springs; it appears with the same
    sign in the inverse and forward maps, keeping them exact inverses.
    """
    blocks = []
    cvec = np.empty(4)
    nvec = np.empty(4)
    for k in range(2):  # 0 = left, 1 = right
        q_s, q_e = q[2 * k], q[2 * k + 1]
        dq_s, dq_e = dq[2 * k], dq[2 * k + 1]
        m11, m12, m22, c1, c2 = _arm_matrices(q_s, q_e, dq_s, dq_e, p)
        det = m11 * m22 - m12 * m12
        if m11 <= 0.0 or det <= 0.0:
            raise SimulationError(
                f"mass matrix not positive definite at posture q={np.asarray(q)}"
            )
        n1, n2 = _arm_gravity(q_s, q_e, p)
        n2 -= _elbow_limit(q_e, p)
        blocks.append((m11, m12, m22, det))
        cvec[2 * k : 2 * k + 2] = (c1, c2)
        nvec[2 * k : 2 * k + 2] = (n1, n2)
    return blocks, cvec, nvec


def _jacobian_transpose_force(
    q: np.ndarray, f_hands: tuple[np.ndarray, np.ndarray], p: ArmParams
) -> np.ndarray:
    """Joint torques needed to exert the given global hand forces on the rim."""
    out = np.empty(4)
    for k, side in enumerate(_SIDES):
        f_local = to_local(np.asarray(f_hands[k], dtype=float), side)
        jt = hand_jacobian(q[2 * k], q[2 * k + 1], p).T
        out[2 * k : 2 * k + 2] = jt @ f_local
    return out


def mass_matrix(q: np.ndarray, p: ArmParams) -> np.ndarray:
    """Full 4x4 joint-space mass matrix (block diagonal per arm)."""
    m = np.zeros((4, 4))
    for k in range(2):
        m11, m12, m22, _, _ = _arm_matrices(q[2 * k], q[2 * k + 1], 0.0, 0.0, p)
        m[2 * k, 2 * k] = m11
        m[2 * k, 2 * k + 1] = m12
        m[2 * k + 1, 2 * k] = m12
        m[2 * k + 1, 2 * k + 1] = m22
    return m


def gravity_torque(q: np.ndarray, p: ArmParams) -> np.ndarray:
    """Static gravity-hold torque per joint (elbow limit springs excluded)."""
    out = np.empty(4)
    for k in range(2):
        out[2 * k : 2 * k + 2] = _arm_gravity(q[2 * k], q[2 * k + 1], p)
    return out


# ---------------------------------------------------------------------------
# Control law and dynamics


def control_accel(
    state: ArmState,
    q_d: np.ndarray,
    qd_d: np.ndarray,
    qdd_d: np.ndarray,
    f_rc: tuple[np.ndarray, np.ndarray],
    f_rc_d: tuple[np.ndarray, np.ndarray],
    gains: DriverGains,
    p: ArmParams,
) -> np.ndarray:
    """Commanded joint acceleration from trajectory and hand-force errors.

    ``f_rc`` and ``f_rc_d`` are measured and desired hand-on-wheel forces as
    global (left, right) vectors; their error is mapped to joint space through
    each arm's hand Jacobian.
    """
    a = qdd_d - gains.kd * (state.dq - qd_d) - gains.kp * (state.q - q_d)
    if gains.kf != 0.0:
        f_err = (
            np.asarray(f_rc[0], dtype=float) - np.asarray(f_rc_d[0], dtype=float),
            np.asarray(f_rc[1], dtype=float) - np.asarray(f_rc_d[1], dtype=float),
        )
        a = a - gains.kf * _jacobian_transpose_force(state.q, f_err, p)
    return a


def joint_torques(
    state: ArmState,
    a_q: np.ndarray,
    f_hands: tuple[np.ndarray, np.ndarray],
    p: ArmParams,
) -> np.ndarray:
    """Inverse dynamics: actuator torques realizing ``a_q`` while the hands
    apply ``f_hands`` to the rim."""
    blocks, cvec, nvec = _passive_terms(state.q, state.dq, p)
    tau = np.empty(4)
    for k in range(2):
        m11, m12, m22, _ = blocks[k]
        a1, a2 = a_q[2 * k], a_q[2 * k + 1]
        tau[2 * k] = m11 * a1 + m12 * a2
        tau[2 * k + 1] = m12 * a1 + m22 * a2
    return tau + cvec + nvec + _jacobian_transpose_force(state.q, f_hands, p)


def arm_accel(
    state: ArmState,
    tau: np.ndarray,
    f_hands: tuple[np.ndarray, np.ndarray],
    p: ArmParams,
) -> np.ndarray:
    """Forward dynamics acceleration under actuator torques and rim forces."""
    return _accel(state.q, state.dq, np.asarray(tau, dtype=float), f_hands, p)


def _accel(q, dq, tau, f_hands, p: ArmParams) -> np.ndarray:
    blocks, cvec, nvec = _passive_terms(q, dq, p)
    rhs = tau - cvec - nvec - _jacobian_transpose_force(q, f_hands, p)
    qdd = np.empty(4)
    for k in range(2):
        m11, m12, m22, det = blocks[k]
        b1, b2 = rhs[2 * k], rhs[2 * k + 1]
        qdd[2 * k] = (m22 * b1 - m12 * b2) / det
        qdd[2 * k + 1] = (m11 * b2 - m12 * b1) / det
    return qdd


def arm_forward_dynamics(
    state: ArmState,
    tau: np.ndarray,
    f_hands: tuple[np.ndarray, np.ndarray],
    p: ArmParams,
    dt: float,
) -> ArmState:
    """One RK4 step with actuator torques and rim forces held over the step."""
    tau = np.asarray(tau, dtype=float)
    q0, dq0 = state.q, state.dq
    k1v = _accel(q0, dq0, tau, f_hands, p)
    k1x = dq0
    k2v = _accel(q0 + 0.5 * dt * k1x, dq0 + 0.5 * dt * k1v, tau, f_hands, p)
    k2x = dq0 + 0.5 * dt * k1v
    k3v = _accel(q0 + 0.5 * dt * k2x, dq0 + 0.5 * dt * k2v, tau, f_hands, p)
    k3x = dq0 + 0.5 * dt * k2v
    k4v = _accel(q0 + dt * k3x, dq0 + dt * k3v, tau, f_hands, p)
    k4x = dq0 + dt * k3v
    q = q0 + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    dq = dq0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return ArmState(q=q, dq=dq)


def calibrate_g_eff(p: ArmParams, radius: float, target_torque: float = 9.4) -> float:
    """Equivalent in-plane gravity making the right-shoulder static hold torque
    at the neutral wheel posture equal ``target_torque``."""
    q = wheel_posture(0.0, radius, p)
    q_s, q_e = q[2], q[3]
    moment = p.upper_mass * p.upper_com * math.cos(q_s) + p.fore_mass * (
        p.upper_len * math.cos(q_s) + p.fore_com * math.cos(q_s + q_e)
    )
    if abs(moment) < 1e-9:
        raise ValueError("degenerate posture: gravity moment arm is zero")
    return target_torque / moment
