"""Motor-space trajectory families: limit-constrained chirp excitation,
piecewise-quintic test motion, and the lemniscate Cartesian test path.

All generators are pure functions of (parameters, t).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kinematics import KinematicChain

__all__ = [
    "ChirpParams",
    "QuinticMotion",
    "LemniscatePath",
    "InfeasibleTrajectoryError",
    "chirp_eval",
    "chirp_eval_all",
    "fit_chirp_amplitudes",
    "motion_combinations",
    "quintic_s",
    "test_motion",
    "test_motion_all",
    "lemniscate",
]

DEFAULT_OMEGA_MIN = 0.1  # Hz
DEFAULT_OMEGA_MAX = 1.0  # Hz


class InfeasibleTrajectoryError(Exception):
    """Limits cannot be satisfied even at zero excitation amplitude."""


@dataclass(frozen=True)
class ChirpParams:
    """Per-motor swept-sine excitation a sin(O t + psi) + b cos(O t + phi) + theta0,
    gated by the binary mask h, with instantaneous frequency rising from
    omega_min to omega_max (cycles/s) over the duration T.

    phase_mode selects between the phase written as Omega(t)*t ("omega_t",
    default) and the integrated instantaneous frequency ("integral");
    omega_units selects "hz" (multiplied by 2*pi inside the sinusoids,
    default) or "rad".
    """

    a: np.ndarray
    b: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    theta0: np.ndarray
    h: np.ndarray
    omega_min: float = DEFAULT_OMEGA_MIN
    omega_max: float = DEFAULT_OMEGA_MAX
    T: float = np.pi / DEFAULT_OMEGA_MIN
    phase_mode: str = "omega_t"
    omega_units: str = "hz"

    def __post_init__(self):
        for name in ("a", "b", "psi", "phi", "theta0", "h"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=float).ravel()
            )
        if self.omega_min > self.omega_max:
            raise ValueError("omega_min must not exceed omega_max")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not np.all(np.isin(self.h, (0.0, 1.0))):
            raise ValueError("mask entries must be 0 or 1")
        if self.phase_mode not in ("omega_t", "integral"):
            raise ValueError("phase_mode must be 'omega_t' or 'integral'")
        if self.omega_units not in ("hz", "rad"):
            raise ValueError("omega_units must be 'hz' or 'rad'")

    @property
    def n_motors(self) -> int:
        return self.a.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "a": self.a.tolist(),
                "b": self.b.tolist(),
                "psi": self.psi.tolist(),
                "phi": self.phi.tolist(),
                "theta0": self.theta0.tolist(),
                "h": self.h.tolist(),
                "omega_min": self.omega_min,
                "omega_max": self.omega_max,
                "T": self.T,
                "phase_mode": self.phase_mode,
                "omega_units": self.omega_units,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ChirpParams":
        o = json.loads(text)
        return cls(**o)


@dataclass(frozen=True)
class QuinticMotion:
    """Three-segment rest-to-rest test motion: 0 -> theta_max -> theta_min -> 0,
    each segment of duration T with quintic timing."""

    theta_min: np.ndarray
    theta_max: np.ndarray
    T: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "theta_min", np.asarray(self.theta_min, dtype=float).ravel())
        object.__setattr__(self, "theta_max", np.asarray(self.theta_max, dtype=float).ravel())
        if np.any(self.theta_min > self.theta_max):
            raise ValueError("theta_min must not exceed theta_max")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def n_motors(self) -> int:
        return self.theta_min.shape[0]


@dataclass(frozen=True)
class LemniscatePath:
    """Figure-eight Cartesian test path with quintic timing plus a roll sweep."""

    scale: float = 6e-3
    P_i: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.038]))
    alpha_i: float = 0.0
    alpha_f: float = np.deg2rad(100.0)
    T: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "P_i", np.asarray(self.P_i, dtype=float).ravel())
        if self.T <= 0:
            raise ValueError("T must be positive")


def _check_range(t, T):
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > T):
        raise ValueError(f"t must lie in [0, {T}]")


def _chirp_phase(p: ChirpParams, t):
    """Phase and its first two time derivatives (before per-motor offsets)."""
    two_pi = 2.0 * np.pi if p.omega_units == "hz" else 1.0
    wmin = two_pi * p.omega_min
    rate = two_pi * (p.omega_max - p.omega_min) / p.T
    if p.phase_mode == "omega_t":
        # phase = Omega(t) * t with Omega(t) = wmin + rate * t
        ph = (wmin + rate * t) * t
        dph = wmin + 2.0 * rate * t
        ddph = 2.0 * rate
    else:
        ph = wmin * t + 0.5 * rate * t**2
        dph = wmin + rate * t
        ddph = rate
    return ph, dph, ddph


def chirp_eval(p: ChirpParams, i: int, t: float) -> tuple[float, float, float]:
    """Position, velocity and acceleration of motor i at time t."""
    _check_range(t, p.T)
    ph, dph, ddph = _chirp_phase(p, t)
    sa, ca = np.sin(ph + p.psi[i]), np.cos(ph + p.psi[i])
    sb, cb = np.sin(ph + p.phi[i]), np.cos(ph + p.phi[i])
    h = p.h[i]
    theta = h * (p.a[i] * sa + p.b[i] * cb + p.theta0[i])
    dtheta = h * (p.a[i] * ca - p.b[i] * sb) * dph
    ddtheta = h * (
        -(p.a[i] * sa + p.b[i] * cb) * dph**2 + (p.a[i] * ca - p.b[i] * sb) * ddph
    )
    return float(theta), float(dtheta), float(ddtheta)


def chirp_eval_all(p: ChirpParams, t: np.ndarray):
    """Vectorized chirp evaluation: three (len(t), n_m) arrays."""
    t = np.asarray(t, dtype=float)
    _check_range(t, p.T)
    ph, dph, ddph = _chirp_phase(p, t[:, None])
    sa, ca = np.sin(ph + p.psi), np.cos(ph + p.psi)
    sb, cb = np.sin(ph + p.phi), np.cos(ph + p.phi)
    theta = p.h * (p.a * sa + p.b * cb + p.theta0)
    dtheta = p.h * (p.a * ca - p.b * sb) * dph
    ddtheta = p.h * (-(p.a * sa + p.b * cb) * dph**2 + (p.a * ca - p.b * sb) * ddph)
    return theta, dtheta, ddtheta


def motion_combinations(n_m: int) -> list[tuple[int, ...]]:
    """All 2^n_m on/off motor masks in lexicographic order."""
    if n_m < 1:
        raise ValueError("n_m must be >= 1")
    return list(itertools.product((0, 1), repeat=n_m))


def fit_chirp_amplitudes(
    chain: KinematicChain,
    mask: Sequence[int],
    seed: int = 0,
    omega_min: float = DEFAULT_OMEGA_MIN,
    omega_max: float = DEFAULT_OMEGA_MAX,
    T: float | None = None,
    grid_dt: float = 1e-3,
    margin_frac: float = 0.01,
    phase_mode: str = "omega_t",
    omega_units: str = "hz",
) -> ChirpParams:
    """Draw seeded random phases/offsets and scale the wave amplitude so the
    excitation respects position, velocity and acceleration limits.

    theta0 is drawn from the central half of the position interval, the
    initial amplitude from the remaining headroom, and a single scale factor
    s in (0, 1] per motor shrinks (a, b) until a 1 ms-grid check of all
    three limit sets passes with at least `margin_frac` margin.
    """
    mask = np.asarray(mask, dtype=float).ravel()
    n_m = chain.n_motors
    if mask.shape[0] != n_m:
        raise ValueError("mask length must equal the motor count")
    if T is None:
        T = np.pi / omega_min
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 2.0 * np.pi, n_m)
    phi = rng.uniform(0.0, 2.0 * np.pi, n_m)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    theta0 = rng.uniform(mid - 0.5 * rad, mid + 0.5 * rad)

    pos_margin = margin_frac * (hi - lo)
    if np.any(theta0 < lo + pos_margin) or np.any(theta0 > hi - pos_margin):
        raise InfeasibleTrajectoryError(
            "theta0 violates position limits at zero amplitude"
        )
    amp0 = 0.45 * np.minimum(hi - theta0, theta0 - lo)

    unit = ChirpParams(
        a=amp0, b=amp0, psi=psi, phi=phi, theta0=np.zeros(n_m),
        h=np.ones(n_m), omega_min=omega_min, omega_max=omega_max, T=T,
        phase_mode=phase_mode, omega_units=omega_units,
    )
    grid = np.arange(0.0, T + 0.5 * grid_dt, grid_dt)
    grid = grid[grid <= T]
    w, dw, ddw = chirp_eval_all(unit, grid)  # zero-offset wave per motor

    # Largest admissible scale per motor; the wave is linear in s.
    with np.errstate(divide="ignore"):
        s_pos = np.minimum(
            (hi - pos_margin - theta0) / np.maximum(w.max(axis=0), 1e-300),
            (theta0 - lo - pos_margin) / np.maximum(-w.min(axis=0), 1e-300),
        )
        vmax = np.minimum(-chain.velocity_limits[:, 0], chain.velocity_limits[:, 1])
        amax = np.minimum(
            -chain.acceleration_limits[:, 0], chain.acceleration_limits[:, 1]
        )
        s_vel = (1.0 - margin_frac) * vmax / np.maximum(np.abs(dw).max(axis=0), 1e-300)
        s_acc = (1.0 - margin_frac) * amax / np.maximum(np.abs(ddw).max(axis=0), 1e-300)
    s = np.minimum(1.0, np.minimum(s_pos, np.minimum(s_vel, s_acc)))
    if np.any(s <= 0.0):
        raise InfeasibleTrajectoryError("limits leave no room for excitation")

    return ChirpParams(
        a=s * amp0, b=s * amp0, psi=psi, phi=phi, theta0=theta0, h=mask,
        omega_min=omega_min, omega_max=omega_max, T=T,
        phase_mode=phase_mode, omega_units=omega_units,
    )


def quintic_s(t, T: float):
    """Quintic blend 6(t/T)^5 - 15(t/T)^4 + 10(t/T)^3 on [0, T]."""
    _check_range(t, T)
    u = np.asarray(t, dtype=float) / T
    out = ((6.0 * u - 15.0) * u + 10.0) * u**3
    return float(out) if np.isscalar(t) else out


def test_motion(m: QuinticMotion, i: int, t: float) -> float:
    """Motor i position of the three-segment quintic test motion at time t."""
    return float(test_motion_all(m, np.asarray([t]))[0, i])


def test_motion_all(m: QuinticMotion, t: np.ndarray) -> np.ndarray:
    """Vectorized test motion: (len(t), n_m) motor positions over [0, 3T]."""
    t = np.asarray(t, dtype=float)
    _check_range(t, 3.0 * m.T)
    T = m.T
    out = np.empty((t.shape[0], m.n_motors))
    for k, tk in enumerate(t):
        if tk <= T:
            out[k] = m.theta_max * quintic_s(tk, T)
        elif tk <= 2.0 * T:
            out[k] = (m.theta_min - m.theta_max) * quintic_s(tk - T, T) + m.theta_max
        else:
            out[k] = -m.theta_min * quintic_s(tk - 2.0 * T, T) + m.theta_min
    return out


def lemniscate(path: LemniscatePath, t):
    """Point (x, y, roll) of the Bernoulli figure-eight at time t in [0, T].

    The curve parameter runs quintically from pi/2 to 5*pi/2 (a full closed
    figure-eight) while the roll sweeps alpha_i -> alpha_f -> alpha_i.
    """
    _check_range(t, path.T)
    u = np.asarray(t, dtype=float) / path.T
    s = (((24.0 * u - 60.0) * u + 40.0) * u**3 + 1.0) * (np.pi / 2.0)
    s_roll = ((6.0 * u - 15.0) * u + 10.0) * u**3
    denom = np.sin(s) ** 2 + 1.0
    x = path.scale * np.sqrt(2.0) / denom * np.cos(s) + path.P_i[0]
    y = path.scale * np.sqrt(2.0) / denom * (np.sin(2.0 * s) / 2.0) + path.P_i[1]
    roll = (path.alpha_f - path.alpha_i) * np.sin(s_roll * np.pi) + path.alpha_i
    if np.isscalar(t):
        return float(x), float(y), float(roll)
    return x, y, roll
