"""Exact Gaussian Process Regression with a squared-exponential ARD kernel.

Inference follows the standard Cholesky route: the Gram matrix of the
training inputs plus observation noise is factored once at fit time, and
posterior means/variances at query points are obtained through triangular
solves.  Hyperparameters are selected by multi-start quasi-Newton ascent of
the log marginal likelihood in log-parameter space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.optimize

__all__ = [
    "KernelSpec",
    "GpModel",
    "Posterior",
    "GpError",
    "DegenerateDataError",
    "OptimizationFailure",
    "kernel_eval",
    "kernel_matrix",
    "fit",
    "predict",
    "predict_batch",
    "log_marginal_likelihood",
    "lml_gradient",
    "optimize_hyperparams",
]

# Relative jitter added to the Gram diagonal to guard the factorization.
JITTER_REL = 1e-10


class GpError(Exception):
    """Base class for GP failures."""


class DegenerateDataError(GpError):
    """The training set produced a non-SPD Gram matrix."""


class OptimizationFailure(GpError):
    """Hyperparameter search found no finite objective value."""


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential ARD kernel with Gaussian observation noise."""

    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be positive")
        if not np.all(ls > 0):
            raise ValueError("all lengthscales must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")

    @property
    def input_dim(self) -> int:
        return self.lengthscales.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "signal_variance": self.signal_variance,
                "lengthscales": self.lengthscales.tolist(),
                "noise_variance": self.noise_variance,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        obj = json.loads(text)
        return cls(
            signal_variance=float(obj["signal_variance"]),
            lengthscales=np.asarray(obj["lengthscales"], dtype=float),
            noise_variance=float(obj["noise_variance"]),
        )


@dataclass(frozen=True)
class Posterior:
    """Gaussian predictive distribution at a single query point."""

    mean: float
    variance: float


ZERO_MEAN: Callable[[np.ndarray], float] = lambda x: 0.0


@dataclass(frozen=True)
class GpModel:
    """Trained GP: immutable after construction, safe for concurrent reads.

    ``inputs`` is stored column-wise (n_in x N).  ``chol_factor`` is the
    lower Cholesky factor of K(X,X) + (noise + jitter) I and ``alpha``
    solves that matrix against the centered targets.
    """

    inputs: np.ndarray
    targets: np.ndarray
    kernel: KernelSpec
    mean_fn: Callable[[np.ndarray], float] = ZERO_MEAN
    chol_factor: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)

    @property
    def n_train(self) -> int:
        return self.inputs.shape[1]


def _check_dim(spec: KernelSpec, v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != spec.input_dim:
        raise ValueError(
            f"{name} has dimension {v.shape[0]}, kernel expects {spec.input_dim}"
        )
    return v


def kernel_eval(spec: KernelSpec, a: Sequence[float], b: Sequence[float]) -> float:
    """Evaluate the SE-ARD covariance between two input vectors."""
    a = _check_dim(spec, a, "a")
    b = _check_dim(spec, b, "b")
    z = (a - b) / spec.lengthscales
    return spec.signal_variance * float(np.exp(-0.5 * np.dot(z, z)))


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Covariance matrix between column-wise input sets A (d x n) and B (d x m)."""
    inv_l = 1.0 / spec.lengthscales[:, None]
    As = A * inv_l
    Bs = B * inv_l
    sq = (
        np.sum(As * As, axis=0)[:, None]
        + np.sum(Bs * Bs, axis=0)[None, :]
        - 2.0 * As.T @ Bs
    )
    np.maximum(sq, 0.0, out=sq)
    return spec.signal_variance * np.exp(-0.5 * sq)


def _mean_values(mean_fn: Callable, X: np.ndarray) -> np.ndarray:
    return np.array([float(mean_fn(X[:, i])) for i in range(X.shape[1])])


def fit(
    X: np.ndarray,
    y: np.ndarray,
    spec: KernelSpec,
    mean_fn: Callable[[np.ndarray], float] = ZERO_MEAN,
) -> GpModel:
    """Factor the noisy Gram matrix and precompute the posterior weights.

    X is n_in x N (one training input per column).  Raises
    DegenerateDataError when the Gram matrix is not SPD, which with zero
    noise happens for duplicate training inputs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != spec.input_dim:
        raise ValueError(
            f"X has input dimension {X.shape[0]}, kernel expects {spec.input_dim}"
        )
    if X.shape[1] != y.shape[0]:
        raise ValueError("X and y disagree on the number of training points")
    if y.shape[0] < 1:
        raise ValueError("need at least one training point")

    K = kernel_matrix(spec, X, X)
    Ky = K + (spec.noise_variance + JITTER_REL * spec.signal_variance) * np.eye(
        X.shape[1]
    )
    try:
        L = sla.cholesky(Ky, lower=True)
    except sla.LinAlgError as exc:
        raise DegenerateDataError(
            "Gram matrix is not positive definite; duplicate training inputs "
            "with zero noise variance make the system singular"
        ) from exc
    if spec.noise_variance == 0.0:
        # Jitter alone can push a singular Gram matrix (duplicate inputs)
        # through the factorization; treat pivots at jitter scale as singular.
        if np.min(np.diag(L)) ** 2 <= 1e3 * JITTER_REL * spec.signal_variance:
            raise DegenerateDataError(
                "Gram matrix is singular up to jitter; duplicate training "
                "inputs with zero noise variance"
            )
    r = y - _mean_values(mean_fn, X)
    alpha = sla.cho_solve((L, True), r)
    return GpModel(
        inputs=X, targets=y, kernel=spec, mean_fn=mean_fn, chol_factor=L, alpha=alpha
    )


def predict(model: GpModel, x_star: Sequence[float]) -> Posterior:
    """Posterior mean and variance at a single query point."""
    mu, var = predict_batch(model, np.asarray(x_star, dtype=float).reshape(-1, 1))
    return Posterior(mean=float(mu[0]), variance=float(var[0]))


def predict_batch(model: GpModel, X_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at column-wise query points (d x M)."""
    X_star = np.atleast_2d(np.asarray(X_star, dtype=float))
    if X_star.shape[0] != model.kernel.input_dim:
        raise ValueError(
            f"query has dimension {X_star.shape[0]}, model expects "
            f"{model.kernel.input_dim}"
        )
    Ks = kernel_matrix(model.kernel, model.inputs, X_star)  # N x M
    mu = _mean_values(model.mean_fn, X_star) + Ks.T @ model.alpha
    V = sla.solve_triangular(model.chol_factor, Ks, lower=True)
    var = model.kernel.signal_variance - np.sum(V * V, axis=0)
    np.maximum(var, 0.0, out=var)  # clamp round-off
    return mu, var


def log_marginal_likelihood(model: GpModel) -> float:
    """log p(y | X, kernel) of the fitted model."""
    r = model.targets - _mean_values(model.mean_fn, model.inputs)
    n = model.n_train
    return float(
        -0.5 * r @ model.alpha
        - np.sum(np.log(np.diag(model.chol_factor)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


def _lml_and_grad(
    theta: np.ndarray, X: np.ndarray, D2f: np.ndarray, r: np.ndarray
) -> tuple[float, np.ndarray]:
    """Negative LML and gradient w.r.t. log-parameters.

    theta = [log sf2, log l_1..l_d, log sn2]; X the d x N inputs; D2f the
    (d, N*N) flattened per-dimension squared input differences; r the
    centered targets.
    """
    d, n = X.shape
    sf2 = np.exp(theta[0])
    ell = np.exp(theta[1 : 1 + d])
    sn2 = np.exp(theta[-1])

    Xs = X / ell[:, None]
    sn = np.sum(Xs * Xs, axis=0)
    sq = sn[:, None] + sn[None, :] - 2.0 * Xs.T @ Xs
    np.maximum(sq, 0.0, out=sq)
    K = sf2 * np.exp(-0.5 * sq)
    Ky = K + (sn2 + JITTER_REL * sf2) * np.eye(n)
    try:
        L = sla.cholesky(Ky, lower=True)
    except sla.LinAlgError:
        return np.inf, np.zeros_like(theta)
    alpha = sla.cho_solve((L, True), r)
    lml = -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2 * np.pi)

    inv_tri, info = sla.lapack.dpotri(L, lower=1)
    if info != 0:
        return np.inf, np.zeros_like(theta)
    Kinv = inv_tri + np.tril(inv_tri, -1).T
    A = np.outer(alpha, alpha) - Kinv
    AK = A * K
    grad = np.empty_like(theta)
    # d/dlog sf2: dK = K + jitter*sf2*I (the jitter scales with sf2)
    grad[0] = 0.5 * (np.sum(AK) + JITTER_REL * sf2 * np.trace(A))
    grad[1 : 1 + d] = 0.5 * (D2f @ AK.ravel()) / ell**2
    grad[-1] = 0.5 * sn2 * np.trace(A)
    return -float(lml), -grad


def lml_gradient(model: GpModel) -> np.ndarray:
    """Gradient of the LML w.r.t. [log sf2, log l_1..d, log sn2]."""
    X = model.inputs
    d, n = X.shape
    D2f = ((X[:, :, None] - X[:, None, :]) ** 2).reshape(d, n * n)
    r = model.targets - _mean_values(model.mean_fn, X)
    theta = np.concatenate(
        [
            [np.log(model.kernel.signal_variance)],
            np.log(model.kernel.lengthscales),
            [np.log(max(model.kernel.noise_variance, 1e-300))],
        ]
    )
    _, neg_grad = _lml_and_grad(theta, X, D2f, r)
    return -neg_grad


def optimize_hyperparams(
    X: np.ndarray,
    y: np.ndarray,
    mean_fn: Callable[[np.ndarray], float] = ZERO_MEAN,
    restarts: int = 8,
    seed: int = 0,
    maxiter: int = 100,
    noise_floor: float = 1e-12,
) -> KernelSpec:
    """Select kernel hyperparameters by maximizing the log marginal likelihood.

    Runs L-BFGS-B in log-parameter space from `restarts` initializations
    (the first a data-driven heuristic, the rest seeded random perturbations
    of it) and returns the best KernelSpec found.  Deterministic given seed.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    d, n = X.shape
    r = y - _mean_values(mean_fn, X)
    D2f = ((X[:, :, None] - X[:, None, :]) ** 2).reshape(d, n * n)

    var_r = float(np.var(r))
    scale_v = max(var_r, 1e-10)
    span = np.maximum(np.ptp(X, axis=1), 1e-6)

    theta0 = np.concatenate(
        [[np.log(scale_v)], np.log(span), [np.log(max(0.1 * scale_v, noise_floor))]]
    )
    lo = np.concatenate(
        [[np.log(1e-6 * scale_v)], np.log(1e-3 * span), [np.log(noise_floor)]]
    )
    hi = np.concatenate(
        [[np.log(1e6 * scale_v)], np.log(1e4 * span), [np.log(1e4 * scale_v)]]
    )
    bounds = list(zip(lo, hi))

    rng = np.random.default_rng(seed)
    best_val = np.inf
    best_theta = None
    for k in range(restarts):
        start = theta0 if k == 0 else np.clip(
            theta0 + rng.normal(0.0, 1.0, size=theta0.shape), lo, hi
        )
        f0, _ = _lml_and_grad(start, X, D2f, r)
        if not np.isfinite(f0):
            continue
        res = scipy.optimize.minimize(
            _lml_and_grad,
            start,
            args=(X, D2f, r),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": maxiter, "maxfun": 3 * maxiter},
        )
        for cand_val, cand in ((f0, start), (res.fun, res.x)):
            if np.isfinite(cand_val) and cand_val < best_val:
                best_val = cand_val
                best_theta = cand
    if best_theta is None:
        raise OptimizationFailure(
            "log marginal likelihood was non-finite at every initialization"
        )
    return KernelSpec(
        signal_variance=float(np.exp(best_theta[0])),
        lengthscales=np.exp(best_theta[1 : 1 + d]),
        noise_variance=float(np.exp(best_theta[-1])),
    )
