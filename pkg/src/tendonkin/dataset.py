"""Dataset generation from the simulated plant, noise injection, random
subsampling, CSV persistence, and ingestion of recorded real data including
depth-camera projection and calibration to the robot base frame.

A Dataset stores its columns as numpy arrays; Sample offers a per-row view.
The CSV schema (one row per sample) is:

    t, theta_1..n, thetadot_1..n, thetaddot_1..n, theta_old_1..n,
    thetadot_old_1..n, px, py, pz, px_meas, py_meas, pz_meas

with px/py/pz left blank for real data (no ground truth available).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kinematics import KinematicChain, MotorState, PlantState, plant_step
from .trajectories import ChirpParams, chirp_eval_all

__all__ = [
    "Sample",
    "Dataset",
    "CameraIntrinsics",
    "CalibrationTransform",
    "CsvFormatError",
    "generate_dataset",
    "subsample",
    "project_depth_to_3d",
    "apply_calibration",
    "write_csv",
    "read_csv",
    "ingest_camera_csv",
]


class CsvFormatError(Exception):
    """Malformed dataset CSV; message carries the offending line or column."""


@dataclass(frozen=True)
class Sample:
    t: float
    state: MotorState
    p_meas: np.ndarray
    p_true: Optional[np.ndarray] = None


@dataclass
class Dataset:
    """Time-stamped motor states with measured (and, when simulated, true)
    tip positions.  Columns are (N, ...) arrays; immutable by convention."""

    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    theta_old: np.ndarray
    theta_dot_old: np.ndarray
    p_meas: np.ndarray
    p_true: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t.shape[0] > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def n_motors(self) -> int:
        return self.theta.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(
            t=float(self.t[i]),
            state=self.state(i),
            p_meas=self.p_meas[i].copy(),
            p_true=None if self.p_true is None else self.p_true[i].copy(),
        )

    def state(self, i: int) -> MotorState:
        return MotorState(
            self.theta[i], self.theta_dot[i], self.theta_ddot[i],
            self.theta_old[i], self.theta_dot_old[i],
        )

    def states_flat(self) -> np.ndarray:
        """All motor states as a (5*n_m, N) column-wise input matrix."""
        return np.hstack(
            [self.theta, self.theta_dot, self.theta_ddot, self.theta_old, self.theta_dot_old]
        ).T


@dataclass(frozen=True)
class CameraIntrinsics:
    f_x: float
    f_y: float
    c_x: float
    c_y: float

    def __post_init__(self):
        if self.f_x <= 0 or self.f_y <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class CalibrationTransform:
    """Rigid camera-to-base transform."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        tr = np.asarray(self.translation, dtype=float).ravel()
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", tr)
        if R.shape != (3, 3) or tr.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must be proper (det = +1)")


def generate_dataset(
    chain: KinematicChain,
    chirp_sets: Sequence[ChirpParams],
    dt: float,
    noise_sigma: float,
    seed: int = 0,
) -> Dataset:
    """Run the backlash plant along each chirp and record noisy tip positions.

    Each chirp segment restarts the plant centered on its initial command;
    theta_old / theta_dot_old are the previous sample's values (zeros at a
    segment start).  Timestamps continue across segments.  Deterministic
    given seed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    cols = {k: [] for k in ("t", "th", "dth", "ddth", "th_o", "dth_o", "p")}
    t_base = 0.0
    for params in chirp_sets:
        grid = np.arange(0.0, params.T + 0.5 * dt, dt)
        grid = grid[grid <= params.T]
        th, dth, ddth = chirp_eval_all(params, grid)
        plant = PlantState.centered(th[0])
        p_true = np.empty((grid.shape[0], 3))
        for k in range(grid.shape[0]):
            plant, p_true[k] = plant_step(chain, plant, th[k], dt)
        cols["t"].append(t_base + grid)
        cols["th"].append(th)
        cols["dth"].append(dth)
        cols["ddth"].append(ddth)
        th_o = np.vstack([np.zeros_like(th[0]), th[:-1]])
        dth_o = np.vstack([np.zeros_like(dth[0]), dth[:-1]])
        cols["th_o"].append(th_o)
        cols["dth_o"].append(dth_o)
        cols["p"].append(p_true)
        t_base += params.T + dt
    p_true = np.vstack(cols["p"])
    noise = rng.normal(0.0, noise_sigma, p_true.shape) if noise_sigma > 0 else 0.0
    return Dataset(
        t=np.concatenate(cols["t"]),
        theta=np.vstack(cols["th"]),
        theta_dot=np.vstack(cols["dth"]),
        theta_ddot=np.vstack(cols["ddth"]),
        theta_old=np.vstack(cols["th_o"]),
        theta_dot_old=np.vstack(cols["dth_o"]),
        p_true=p_true,
        p_meas=p_true + noise,
        meta={
            "source": "simulated",
            "noise_sigma": noise_sigma,
            "seed": seed,
            "dt": dt,
            "n_segments": len(chirp_sets),
        },
    )


def subsample(ds: Dataset, n: int, seed: int = 0) -> Dataset:
    """Uniform random subset without replacement, original order preserved."""
    if not 1 <= n <= len(ds):
        raise ValueError(f"subsample size {n} outside [1, {len(ds)}]")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(ds), size=n, replace=False))
    return Dataset(
        t=ds.t[idx],
        theta=ds.theta[idx],
        theta_dot=ds.theta_dot[idx],
        theta_ddot=ds.theta_ddot[idx],
        theta_old=ds.theta_old[idx],
        theta_dot_old=ds.theta_dot_old[idx],
        p_meas=ds.p_meas[idx],
        p_true=None if ds.p_true is None else ds.p_true[idx],
        meta={**ds.meta, "subsampled": n, "subsample_seed": seed},
    )


def project_depth_to_3d(
    intr: CameraIntrinsics, x: float, y: float, depth: float
) -> tuple[float, float, float]:
    """Pinhole back-projection of an image point with measured depth."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    u = (x - intr.c_x) * depth / intr.f_x
    v = (y - intr.c_y) * depth / intr.f_y
    return u, v, depth


def apply_calibration(T: CalibrationTransform, p_cam: Sequence[float]) -> np.ndarray:
    """Map a camera-frame point into the robot base frame."""
    return T.rotation @ np.asarray(p_cam, dtype=float).ravel() + T.translation


def _header(n_m: int) -> list[str]:
    cols = ["t"]
    for group in ("theta", "thetadot", "thetaddot", "theta_old", "thetadot_old"):
        cols += [f"{group}_{i + 1}" for i in range(n_m)]
    cols += ["px", "py", "pz", "px_meas", "py_meas", "pz_meas"]
    return cols


def write_csv(ds: Dataset, path: str) -> None:
    """Write the dataset in the documented CSV schema (plus a metadata
    sidecar JSON next to it)."""
    n_m = ds.n_motors
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_header(n_m))
        for i in range(len(ds)):
            row = [repr(float(ds.t[i]))]
            for arr in (ds.theta, ds.theta_dot, ds.theta_ddot, ds.theta_old, ds.theta_dot_old):
                row += [repr(float(v)) for v in arr[i]]
            if ds.p_true is None:
                row += ["", "", ""]
            else:
                row += [repr(float(v)) for v in ds.p_true[i]]
            row += [repr(float(v)) for v in ds.p_meas[i]]
            w.writerow(row)
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(ds.meta, fh, indent=2, sort_keys=True)


def read_csv(path: str) -> Dataset:
    """Read a dataset CSV written by write_csv (lossless round-trip)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, expected a header row")
        n_m = sum(1 for c in header if c.startswith("theta_") and not c.startswith("theta_old"))
        expected = _header(n_m)
        if header != expected:
            missing = sorted(set(expected) - set(header))
            if missing:
                raise CsvFormatError(f"{path}: missing column(s) {', '.join(missing)}")
            raise CsvFormatError(f"{path}: unexpected header layout")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise CsvFormatError(
                    f"{path}: line {lineno}: expected {len(expected)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) if v != "" else np.nan for v in row])
            except ValueError as exc:
                raise CsvFormatError(f"{path}: line {lineno}: {exc}") from exc
    meta = {}
    try:
        with open(path + ".meta.json", "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    if not rows:
        z = np.zeros((0, n_m))
        return Dataset(
            t=np.zeros(0), theta=z, theta_dot=z, theta_ddot=z, theta_old=z,
            theta_dot_old=z, p_meas=np.zeros((0, 3)), p_true=None, meta=meta,
        )
    data = np.asarray(rows)
    off = 1
    groups = []
    for _ in range(5):
        groups.append(data[:, off : off + n_m])
        off += n_m
    p_true = data[:, off : off + 3]
    p_meas = data[:, off + 3 : off + 6]
    return Dataset(
        t=data[:, 0],
        theta=groups[0], theta_dot=groups[1], theta_ddot=groups[2],
        theta_old=groups[3], theta_dot_old=groups[4],
        p_true=None if np.all(np.isnan(p_true)) else p_true,
        p_meas=p_meas,
        meta=meta,
    )


def ingest_camera_csv(
    csv_path: str,
    intrinsics: CameraIntrinsics,
    calibration: CalibrationTransform,
) -> Dataset:
    """Build a Dataset from recorded pixel/depth tracking data.

    Expects columns t, x_px, y_px, depth_m, theta_1..n.  Tip positions are
    back-projected through the pinhole model and mapped to the base frame;
    velocities and accelerations are recovered by central differences over t.
    """
    with open(csv_path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{csv_path}: empty file, expected a header row")
        base = ["t", "x_px", "y_px", "depth_m"]
        if header[: len(base)] != base:
            raise CsvFormatError(
                f"{csv_path}: header must start with {', '.join(base)}"
            )
        n_m = len(header) - len(base)
        if n_m < 1 or header[len(base) :] != [f"theta_{i + 1}" for i in range(n_m)]:
            raise CsvFormatError(f"{csv_path}: motor columns must be theta_1..n")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvFormatError(f"{csv_path}: line {lineno}: {exc}") from exc
    data = np.asarray(rows)
    t = data[:, 0]
    p_meas = np.array(
        [
            apply_calibration(
                calibration, project_depth_to_3d(intrinsics, x, y, d)
            )
            for x, y, d in data[:, 1:4]
        ]
    )
    theta = data[:, 4:]
    dtheta = np.gradient(theta, t, axis=0)
    ddtheta = np.gradient(dtheta, t, axis=0)
    theta_old = np.vstack([np.zeros_like(theta[0]), theta[:-1]])
    dtheta_old = np.vstack([np.zeros_like(dtheta[0]), dtheta[:-1]])
    return Dataset(
        t=t, theta=theta, theta_dot=dtheta, theta_ddot=ddtheta,
        theta_old=theta_old, theta_dot_old=dtheta_old,
        p_meas=p_meas, p_true=None,
        meta={"source": "real", "csv": csv_path},
    )
