"""Data-driven kinematic model variants and the confidence-weighted hybrid.

Three per-axis GP configurations are supported:

- ERROR_LEARNING: the GP learns the residual between measurements and the
  analytical model; predictions add the learned correction back.
- GP_WITH_PRIOR: the GP regresses the raw measurements with the analytical
  model as prior mean.
- GP_NO_PRIOR: the GP regresses the raw measurements around their sample
  mean, with no analytical knowledge.

The hybrid model blends data-driven and analytical predictions per axis
with a weight that favours the analytical model where the GP is uncertain
and the data-driven model where the two disagree strongly.
"""

from __future__ import annotations

import base64
import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import gp
from .dataset import Dataset
from .kinematics import KinematicChain, MotorState, analytical_model

__all__ = [
    "VariantKind",
    "DataDrivenModel",
    "WeightConfig",
    "HybridModel",
    "train_variant",
    "predict_data_driven",
    "predict_data_driven_batch",
    "weight",
    "hybrid_predict",
    "hybrid_predict_batch",
    "save_bundle",
    "load_bundle",
]

BUNDLE_VERSION = 1
AXES = ("x", "y", "z")


class VariantKind(enum.Enum):
    ERROR_LEARNING = "error_learning"
    GP_WITH_PRIOR = "gp_with_prior"
    GP_NO_PRIOR = "gp_no_prior"


@dataclass(frozen=True)
class WeightConfig:
    """Per-axis disagreement thresholds (meters) of the fusion weight."""

    thresholds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float).ravel()
        object.__setattr__(self, "thresholds", t)
        if t.shape != (3,) or np.any(t <= 0):
            raise ValueError("thresholds must be three positive reals")


# Simulated-experiment and real-data threshold presets.
SIM_THRESHOLDS = WeightConfig(np.array([5e-4, 5e-4, 5e-4]))
REAL_THRESHOLDS = WeightConfig(np.array([0.10, 0.01, 0.005]))


@dataclass(frozen=True)
class DataDrivenModel:
    """Three per-axis GPs over the flattened extended motor state."""

    kind: VariantKind
    gps: tuple  # three gp.GpModel, axes x/y/z
    chain: Optional[KinematicChain]  # analytical handle; None for GP_NO_PRIOR

    def __post_init__(self):
        dims = {g.kernel.input_dim for g in self.gps}
        sizes = {g.n_train for g in self.gps}
        if len(self.gps) != 3 or len(dims) != 1 or len(sizes) != 1:
            raise ValueError("need three GPs sharing input dimension and size")
        if self.kind is not VariantKind.GP_NO_PRIOR and self.chain is None:
            raise ValueError(f"{self.kind.value} requires an analytical chain")

    @property
    def n_motors(self) -> int:
        return self.gps[0].kernel.input_dim // 5


@dataclass(frozen=True)
class HybridModel:
    data_driven: DataDrivenModel
    chain: KinematicChain
    weights: WeightConfig


def _analytical_batch(chain: KinematicChain, X: np.ndarray) -> np.ndarray:
    """Analytical tip positions for column-wise flattened states (5n x N)."""
    return np.array(
        [analytical_model(chain, MotorState.from_flat(X[:, i])) for i in range(X.shape[1])]
    )


def _axis_mean_fn(chain: KinematicChain, axis: int) -> Callable[[np.ndarray], float]:
    def mean(x: np.ndarray) -> float:
        return float(analytical_model(chain, MotorState.from_flat(x))[axis])

    return mean


def train_variant(
    kind: VariantKind,
    ds: Dataset,
    chain: KinematicChain,
    restarts: int = 8,
    seed: int = 0,
    maxiter: int = 100,
    kernels: Optional[list] = None,
    hyperopt_n: Optional[int] = None,
) -> DataDrivenModel:
    """Fit the three per-axis GPs of a variant on a training dataset.

    Hyperparameters are selected independently per axis via marginal-
    likelihood ascent unless explicit KernelSpecs are passed.  `chain` is
    the analytical model handle used by the residual and prior variants
    (ignored by GP_NO_PRIOR).  When hyperopt_n is smaller than the training
    set, the likelihood ascent runs on that many seeded random points; the
    final factorization always uses the full set.
    """
    if len(ds) == 0:
        raise ValueError("training dataset is empty")
    X = ds.states_flat()
    if kind is VariantKind.GP_NO_PRIOR:
        p_a = None
    else:
        p_a = _analytical_batch(chain, X)

    gps = []
    for axis in range(3):
        y = ds.p_meas[:, axis]
        if kind is VariantKind.ERROR_LEARNING:
            targets = y - p_a[:, axis]
            mean_fn = gp.ZERO_MEAN
        elif kind is VariantKind.GP_WITH_PRIOR:
            targets = y
            mean_fn = _axis_mean_fn(chain, axis)
        else:
            targets = y
            const = float(np.mean(y))
            mean_fn = (lambda c: lambda x: c)(const)
        if kernels is not None:
            spec = kernels[axis]
        else:
            X_opt, y_opt = X, targets
            if hyperopt_n is not None and hyperopt_n < X.shape[1]:
                idx = np.sort(
                    np.random.default_rng(seed + 7 * axis).choice(
                        X.shape[1], size=hyperopt_n, replace=False
                    )
                )
                X_opt, y_opt = X[:, idx], targets[idx]
            spec = gp.optimize_hyperparams(
                X_opt, y_opt, mean_fn, restarts=restarts,
                seed=seed + 1000 * axis, maxiter=maxiter,
            )
        gps.append(gp.fit(X, targets, spec, mean_fn))
    return DataDrivenModel(
        kind=kind,
        gps=tuple(gps),
        chain=None if kind is VariantKind.GP_NO_PRIOR else chain,
    )


def predict_data_driven(
    m: DataDrivenModel, state: MotorState
) -> tuple[np.ndarray, np.ndarray]:
    """Data-driven position and per-axis predictive variance at one state."""
    P, V = predict_data_driven_batch(m, state.flat().reshape(-1, 1))
    return P[0], V[0]


def predict_data_driven_batch(
    m: DataDrivenModel, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized prediction over column-wise flattened states (5n x N).

    Returns (N, 3) positions and (N, 3) variances.  For ERROR_LEARNING the
    analytical model is added to the learned residual; the other variants
    return the GP posterior directly (the prior-mean variant carries the
    analytical model inside its mean function).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mus, vars_ = [], []
    for g in m.gps:
        mu, var = gp.predict_batch(g, X)
        mus.append(mu)
        vars_.append(var)
    P = np.column_stack(mus)
    V = np.column_stack(vars_)
    if m.kind is VariantKind.ERROR_LEARNING:
        P = P + _analytical_batch(m.chain, X)
    return P, V


def weight(
    P_d: np.ndarray, P_a: np.ndarray, sigma_d2: np.ndarray, cfg: WeightConfig
) -> np.ndarray:
    """Diagonal fusion weights W in [0,1]^3 (1 = fully analytical).

    Per axis, with e = P_d - P_a and k = |e| / threshold, the weight is
    exp(-k e^2 / sigma^2).  The sigma^2 = 0 limit is taken continuously:
    0 on disagreement, 1 on exact agreement.
    """
    e = np.asarray(P_d, dtype=float) - np.asarray(P_a, dtype=float)
    s2 = np.asarray(sigma_d2, dtype=float)
    if np.any(s2 < 0):
        raise ValueError("variances must be nonnegative")
    k = np.abs(e) / cfg.thresholds
    W = np.empty(3)
    for i in range(3):
        if s2[i] == 0.0:
            W[i] = 1.0 if e[i] == 0.0 else 0.0
        else:
            W[i] = np.exp(-k[i] * e[i] ** 2 / s2[i])
    return W


def hybrid_predict(h: HybridModel, state: MotorState) -> np.ndarray:
    """Fused position (I - W) P_d + W P_a at a single motor state."""
    return hybrid_predict_batch(h, state.flat().reshape(-1, 1))[0]


def hybrid_predict_batch(h: HybridModel, X: np.ndarray) -> np.ndarray:
    """Vectorized hybrid prediction over column-wise flattened states.

    The analytical side is evaluated with accelerations and old positions
    zeroed (it only depends on positions and velocity signs).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0] // 5
    Xa = X.copy()
    Xa[2 * n : 4 * n, :] = 0.0  # ddtheta and theta_old unused analytically
    P_d, V = predict_data_driven_batch(h.data_driven, X)
    P_a = _analytical_batch(h.chain, Xa)
    out = np.empty_like(P_d)
    for i in range(P_d.shape[0]):
        W = weight(P_d[i], P_a[i], V[i], h.weights)
        out[i] = (1.0 - W) * P_d[i] + W * P_a[i]
    return out


def save_bundle(model: DataDrivenModel, path: str, thresholds=None) -> None:
    """Serialize a trained variant (and optional thresholds) to a versioned
    JSON bundle; arrays are embedded as base64 little-endian float64."""

    def enc(a: np.ndarray):
        a = np.ascontiguousarray(a, dtype="<f8")
        return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode()}

    from .kinematics import chain_to_json

    obj = {
        "version": BUNDLE_VERSION,
        "kind": model.kind.value,
        "chain": None if model.chain is None else json.loads(chain_to_json(model.chain)),
        "thresholds": None if thresholds is None else list(map(float, thresholds.thresholds)),
        "axes": [],
    }
    for g in model.gps:
        obj["axes"].append(
            {
                "kernel": json.loads(g.kernel.to_json()),
                "inputs": enc(g.inputs),
                "targets": enc(g.targets),
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)


def load_bundle(path: str):
    """Rebuild a DataDrivenModel (plus optional WeightConfig) from a bundle."""

    def dec(o):
        a = np.frombuffer(base64.b64decode(o["data"]), dtype="<f8")
        return a.reshape(o["shape"]).copy()

    from .kinematics import chain_from_json

    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("version") != BUNDLE_VERSION:
        raise ValueError(f"unsupported bundle version {obj.get('version')}")
    kind = VariantKind(obj["kind"])
    chain = None if obj["chain"] is None else chain_from_json(json.dumps(obj["chain"]))
    gps = []
    for axis, ax in enumerate(obj["axes"]):
        spec = gp.KernelSpec.from_json(json.dumps(ax["kernel"]))
        X = dec(ax["inputs"])
        y = dec(ax["targets"])
        if kind is VariantKind.ERROR_LEARNING:
            mean_fn = gp.ZERO_MEAN
        elif kind is VariantKind.GP_WITH_PRIOR:
            mean_fn = _axis_mean_fn(chain, axis)
        else:
            # constant prior: recover the stored sample mean of the targets
            mean_fn = (lambda c: lambda x: c)(float(np.mean(y)))
        gps.append(gp.fit(X, y, spec, mean_fn))
    model = DataDrivenModel(kind=kind, gps=tuple(gps), chain=chain)
    cfg = None
    if obj["thresholds"] is not None:
        cfg = WeightConfig(np.asarray(obj["thresholds"]))
    return model, cfg
