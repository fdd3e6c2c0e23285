"""Analytical forward kinematics of a tendon-driven serial chain and the
simulated ground-truth plant with motor-side backlash.

The chain is described by Denavit-Hartenberg rows plus a linear motor-to-
joint coupling map (the elbow DOFs drive pairs of serial joints through
1:2 gearing).  The plant applies a classical play (deadband) operator per
motor before the kinematics; the analytical model optionally applies a
velocity-sign hysteresis compensation offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "DhRow",
    "KinematicChain",
    "MotorState",
    "PlantState",
    "dh_transform",
    "forward_kinematics",
    "analytical_model",
    "plant_step",
    "default_microiges_chain",
    "wrong_analytical_chain",
    "chain_to_json",
    "chain_from_json",
    "load_chain",
]

FIXED = -1  # joint_index sentinel for non-actuated rows


@dataclass(frozen=True)
class DhRow:
    """One Denavit-Hartenberg link: Rz(theta) Tz(d) Tx(a) Rx(alpha)."""

    a: float
    alpha: float
    d: float
    theta_offset: float
    joint_index: int = FIXED


@dataclass(frozen=True)
class MotorState:
    """Extended motor input: positions, velocities, accelerations plus the
    previous positions/velocities used for hysteresis handling."""

    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    theta_old: np.ndarray
    theta_dot_old: np.ndarray

    def __post_init__(self):
        n = None
        for name in ("theta", "theta_dot", "theta_ddot", "theta_old", "theta_dot_old"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            object.__setattr__(self, name, v)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains non-finite values")
            if n is None:
                n = v.shape[0]
            elif v.shape[0] != n:
                raise ValueError("all MotorState vectors must share length n_m")

    @classmethod
    def resting(cls, n_m: int) -> "MotorState":
        z = np.zeros(n_m)
        return cls(z, z, z, z, z)

    def flat(self) -> np.ndarray:
        """Flatten to the 5*n_m input vector [theta; dtheta; ddtheta; theta_old; dtheta_old]."""
        return np.concatenate(
            [self.theta, self.theta_dot, self.theta_ddot, self.theta_old, self.theta_dot_old]
        )

    @classmethod
    def from_flat(cls, x: np.ndarray) -> "MotorState":
        x = np.asarray(x, dtype=float).ravel()
        n = x.shape[0] // 5
        if 5 * n != x.shape[0]:
            raise ValueError("flat state length must be a multiple of 5")
        return cls(*(x[i * n : (i + 1) * n] for i in range(5)))


@dataclass(frozen=True)
class KinematicChain:
    """Chain geometry plus transmission: DH rows, motor->joint coupling,
    per-motor limits, backlash widths and hysteresis compensation gains."""

    dh_rows: tuple
    coupling: np.ndarray  # n_j x n_m
    joint_limits: np.ndarray  # n_m x 2 (min, max), radians
    velocity_limits: np.ndarray  # n_m x 2, rad/s
    acceleration_limits: np.ndarray  # n_m x 2, rad/s^2
    backlash_widths: np.ndarray  # n_m, radians (deadband width)
    hysteresis_gain: np.ndarray  # n_m, radians per velocity-sign unit

    def __post_init__(self):
        object.__setattr__(self, "dh_rows", tuple(self.dh_rows))
        for name in (
            "coupling",
            "joint_limits",
            "velocity_limits",
            "acceleration_limits",
            "backlash_widths",
            "hysteresis_gain",
        ):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=float)
            )
        n_j, n_m = self.coupling.shape
        for name in ("joint_limits", "velocity_limits", "acceleration_limits"):
            lim = getattr(self, name)
            if lim.shape != (n_m, 2):
                raise ValueError(f"{name} must be n_m x 2")
            if np.any(lim[:, 0] > lim[:, 1]):
                raise ValueError(f"{name} has an empty interval")
        if self.backlash_widths.shape != (n_m,) or np.any(self.backlash_widths < 0):
            raise ValueError("backlash_widths must be n_m nonnegative values")
        if self.hysteresis_gain.shape != (n_m,):
            raise ValueError("hysteresis_gain must have length n_m")
        for row in self.dh_rows:
            if row.joint_index != FIXED and not 0 <= row.joint_index < n_j:
                raise ValueError("DhRow joint_index out of chain bounds")

    @property
    def n_motors(self) -> int:
        return self.coupling.shape[1]

    @property
    def n_joints(self) -> int:
        return self.coupling.shape[0]

    @property
    def reach(self) -> float:
        """Sum of link lengths; upper bound on the tip distance."""
        return float(sum(abs(r.a) + abs(r.d) for r in self.dh_rows))


@dataclass
class PlantState:
    """Internal memory of the per-motor play (backlash) operator."""

    joint_lag: np.ndarray

    def __post_init__(self):
        self.joint_lag = np.asarray(self.joint_lag, dtype=float).copy()

    @classmethod
    def centered(cls, motor_theta: np.ndarray) -> "PlantState":
        return cls(joint_lag=np.asarray(motor_theta, dtype=float))


def dh_transform(theta: float, d: float, a: float, alpha: float) -> np.ndarray:
    """Homogeneous transform Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def forward_kinematics(chain: KinematicChain, joints: Sequence[float]) -> np.ndarray:
    """Tip position (x, y, z) in the base frame for given joint values."""
    joints = np.asarray(joints, dtype=float).ravel()
    if joints.shape[0] != chain.n_joints:
        raise ValueError(
            f"expected {chain.n_joints} joint values, got {joints.shape[0]}"
        )
    T = np.eye(4)
    for row in chain.dh_rows:
        q = joints[row.joint_index] if row.joint_index != FIXED else 0.0
        T = T @ dh_transform(q + row.theta_offset, row.d, row.a, row.alpha)
    return T[:3, 3].copy()


def _sign_state(theta_dot: np.ndarray, theta_dot_old: np.ndarray) -> np.ndarray:
    """Velocity sign with hold-at-zero: the previous sign is kept while the
    current velocity is exactly zero."""
    s = np.sign(theta_dot)
    hold = s == 0.0
    s[hold] = np.sign(theta_dot_old[hold])
    return s


def analytical_model(chain: KinematicChain, state: MotorState) -> np.ndarray:
    """Analytical tip position: hysteresis-compensated motor-to-joint map
    followed by DH forward kinematics.

    Only theta, theta_dot and theta_dot_old of the state are used; the
    compensation offsets each motor by gain * sign(velocity), holding the
    previous sign when the current velocity is zero.
    """
    if state.theta.shape[0] != chain.n_motors:
        raise ValueError("MotorState length does not match chain motor count")
    s = _sign_state(state.theta_dot.copy(), state.theta_dot_old)
    joints = chain.coupling @ (state.theta + chain.hysteresis_gain * s)
    return forward_kinematics(chain, joints)


def plant_step(
    chain: KinematicChain,
    plant: PlantState,
    motor_theta: Sequence[float],
    dt: float,
) -> tuple[PlantState, np.ndarray]:
    """Advance the backlash plant one step and return the true tip position.

    Per motor the classical play operator clamps the lagging joint-side
    value into the deadband [theta - w/2, theta + w/2]; the joint follows
    the motor only once the gap is consumed.  The operator is
    rate-independent, so dt only matters for the caller's bookkeeping.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    theta = np.asarray(motor_theta, dtype=float).ravel()
    half = 0.5 * chain.backlash_widths
    lag = np.clip(plant.joint_lag, theta - half, theta + half)
    pos = forward_kinematics(chain, chain.coupling @ lag)
    return PlantState(joint_lag=lag), pos


def _default_dh_rows() -> tuple:
    """DH layout for the 4-DOF articulated section: roll, elbow pitch pair,
    elbow yaw pair, wrist pitch.  Zero configuration is straight along +z
    with the tip at z = 0.038 m."""
    e = 0.007  # elbow link length, m
    w = 0.010  # wrist-to-tip length, m
    return (
        DhRow(a=0.0, alpha=np.pi / 2, d=0.0, theta_offset=0.0, joint_index=0),
        DhRow(a=e, alpha=0.0, d=0.0, theta_offset=np.pi / 2, joint_index=1),
        DhRow(a=e, alpha=np.pi / 2, d=0.0, theta_offset=0.0, joint_index=2),
        DhRow(a=e, alpha=0.0, d=0.0, theta_offset=0.0, joint_index=3),
        DhRow(a=e, alpha=-np.pi / 2, d=0.0, theta_offset=0.0, joint_index=4),
        DhRow(a=w, alpha=0.0, d=0.0, theta_offset=0.0, joint_index=5),
    )


DEFAULT_BACKLASH = 0.05  # rad, per motor


def default_microiges_chain() -> KinematicChain:
    """Default 4-motor, 6-joint chain: roll + two geared elbow pairs +
    wrist pitch, articulated length 0.038 m at zero configuration.

    Each elbow DOF drives its two serial joints equally through the 1:2
    gearing, so each joint of a pair receives half the motor angle.  The
    hysteresis gains are matched to the backlash widths (-width/2), making
    this the "correct" analytical model for the simulated plant away from
    velocity reversals.
    """
    coupling = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],  # roll
            [0.0, 0.5, 0.0, 0.0],  # elbow pitch, proximal
            [0.0, 0.5, 0.0, 0.0],  # elbow pitch, distal
            [0.0, 0.0, 0.5, 0.0],  # elbow yaw, proximal
            [0.0, 0.0, 0.5, 0.0],  # elbow yaw, distal
            [0.0, 0.0, 0.0, 1.0],  # wrist pitch
        ]
    )
    backlash = np.full(4, DEFAULT_BACKLASH)
    return KinematicChain(
        dh_rows=_default_dh_rows(),
        coupling=coupling,
        joint_limits=np.array([[-np.pi, np.pi], [-1.2, 1.2], [-1.2, 1.2], [-1.2, 1.2]]),
        velocity_limits=np.array([[-15.0, 15.0]] * 4),
        acceleration_limits=np.array([[-200.0, 200.0]] * 4),
        backlash_widths=backlash,
        hysteresis_gain=-0.5 * backlash,
    )


def wrong_analytical_chain(
    chain: KinematicChain, length_scale: float = 0.5
) -> KinematicChain:
    """Deliberately degraded analytical model: compensation disabled and
    every DH link length scaled (default 0.5)."""
    rows = tuple(
        replace(r, a=length_scale * r.a, d=length_scale * r.d) for r in chain.dh_rows
    )
    return replace(
        chain, dh_rows=rows, hysteresis_gain=np.zeros(chain.n_motors)
    )


def chain_to_json(chain: KinematicChain) -> str:
    return json.dumps(
        {
            "dh_rows": [
                {
                    "a": r.a,
                    "alpha": r.alpha,
                    "d": r.d,
                    "theta_offset": r.theta_offset,
                    "joint_index": r.joint_index,
                }
                for r in chain.dh_rows
            ],
            "coupling": chain.coupling.tolist(),
            "limits": {
                "position": chain.joint_limits.tolist(),
                "velocity": chain.velocity_limits.tolist(),
                "acceleration": chain.acceleration_limits.tolist(),
            },
            "backlash_widths": chain.backlash_widths.tolist(),
            "hysteresis_gain": chain.hysteresis_gain.tolist(),
        },
        indent=2,
        sort_keys=True,
    )


def chain_from_json(text: str) -> KinematicChain:
    obj = json.loads(text)
    rows = tuple(
        DhRow(
            a=float(r["a"]),
            alpha=float(r["alpha"]),
            d=float(r["d"]),
            theta_offset=float(r["theta_offset"]),
            joint_index=int(r["joint_index"]),
        )
        for r in obj["dh_rows"]
    )
    return KinematicChain(
        dh_rows=rows,
        coupling=np.asarray(obj["coupling"], dtype=float),
        joint_limits=np.asarray(obj["limits"]["position"], dtype=float),
        velocity_limits=np.asarray(obj["limits"]["velocity"], dtype=float),
        acceleration_limits=np.asarray(obj["limits"]["acceleration"], dtype=float),
        backlash_widths=np.asarray(obj["backlash_widths"], dtype=float),
        hysteresis_gain=np.asarray(obj["hysteresis_gain"], dtype=float),
    )


def load_chain(path: Optional[str] = None) -> KinematicChain:
    """Load a chain from a JSON file, or the shipped default when path is None."""
    if path is None:
        text = resources.files("tendonkin.data").joinpath("default_chain.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return chain_from_json(text)
