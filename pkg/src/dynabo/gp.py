"""Gaussian-process regression over space-time samples.

Targets are standardized internally (zero mean, unit standard deviation);
predictions are mapped back to the original scale.  The marginal likelihood
and its analytic gradient drive hyperparameter training by projected
gradient ascent with restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from dynabo.kernels import (
    Hyperparameters,
    KernelForm,
    KernelSpec,
    cross_gram,
    grad_gram_log_hp,
    gram,
    hp_from_vector,
    hp_to_vector,
    n_hyperparameters,
)

__all__ = [
    "Dataset",
    "GpModel",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "FactorizationError",
    "chol_with_jitter",
    "log_marginal_likelihood",
    "lml_and_gradient",
    "default_log_bounds",
    "train",
]

# standardization is skipped when the target spread is below this
_STD_FLOOR = 1e-12


class FactorizationError(RuntimeError):
    """Gram matrix stayed non-positive-definite after all jitter levels."""


class TrainingError(RuntimeError):
    """No restart produced a finite marginal likelihood."""


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of samples: rows are spatial coords then time."""

    points: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        tgt = np.asarray(self.targets, dtype=float).ravel()
        if pts.shape[0] != tgt.shape[0]:
            raise ValueError("points and targets disagree on sample count")
        if pts.shape[0] == 0:
            raise ValueError("dataset needs at least one sample")
        if pts.shape[1] < 2:
            raise ValueError("points need at least one spatial column plus time")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(tgt))):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "targets", tgt)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def spatial_dim(self) -> int:
        return self.points.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.points[:, -1]

    @property
    def current_time(self) -> float:
        return float(self.times.max())

    @property
    def target_mean(self) -> float:
        return float(self.targets.mean())

    @property
    def target_std(self) -> float:
        s = float(self.targets.std())
        return s if s > _STD_FLOOR else 1.0

    @property
    def normalized_targets(self) -> np.ndarray:
        return (self.targets - self.target_mean) / self.target_std

    def append(self, point, target: float) -> "Dataset":
        point = np.asarray(point, dtype=float).ravel()
        return Dataset(
            np.vstack([self.points, point[None, :]]),
            np.append(self.targets, float(target)),
        )


def chol_with_jitter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, adding diagonal jitter only when needed.

    Jitter starts at 1e-9 times the mean diagonal and grows tenfold per
    attempt up to 1e-3 times the mean diagonal; a matrix that still fails
    raises ``FactorizationError``.
    """
    mean_diag = float(np.mean(np.diag(matrix)))
    if not (np.isfinite(mean_diag) and mean_diag > 0):
        raise FactorizationError("matrix diagonal is not positive")
    jitters = [0.0] + [mean_diag * 10.0**e for e in range(-9, -2)]
    for jitter in jitters:
        try:
            shifted = matrix if jitter == 0.0 else matrix + jitter * np.eye(len(matrix))
            return cholesky(shifted, lower=True), jitter
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"factorization failed up to jitter {jitters[-1]:.3e}"
    )


def _factor(dataset: Dataset, spec: KernelSpec, hp: Hyperparameters):
    k = gram(dataset.points, spec, hp, with_noise=True)
    el, _ = chol_with_jitter(k)
    alpha = cho_solve((el, True), dataset.normalized_targets)
    return el, alpha


def _lml_from_factor(el: np.ndarray, alpha: np.ndarray, y: np.ndarray) -> float:
    n = y.shape[0]
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(el))) - 0.5 * n * math.log(2 * math.pi)
    )


def log_marginal_likelihood(
    dataset: Dataset, spec: KernelSpec, hp: Hyperparameters
) -> float:
    """Log marginal likelihood of the standardized targets under ``hp``."""
    el, alpha = _factor(dataset, spec, hp)
    return _lml_from_factor(el, alpha, dataset.normalized_targets)


def lml_and_gradient(
    dataset: Dataset, spec: KernelSpec, hp: Hyperparameters
) -> tuple[float, np.ndarray]:
    """Marginal likelihood and its gradient in the log-hyperparameter vector order."""
    el, alpha = _factor(dataset, spec, hp)
    value = _lml_from_factor(el, alpha, dataset.normalized_targets)
    k_inv = cho_solve((el, True), np.eye(dataset.n))
    grads = grad_gram_log_hp(dataset.points, spec, hp)
    out = np.empty(len(grads))
    for i, dk in enumerate(grads):
        # 0.5 * tr((alpha alpha^T - K^-1) dK)
        out[i] = 0.5 * (alpha @ dk @ alpha - np.sum(k_inv * dk))
    return value, out


@dataclass(frozen=True)
class GpModel:
    """Trained-or-fixed GP posterior over one dataset."""

    dataset: Dataset
    spec: KernelSpec
    hp: Hyperparameters
    _factor_l: np.ndarray = field(repr=False)
    _alpha: np.ndarray = field(repr=False)
    lml: float = 0.0

    @classmethod
    def fit(cls, dataset: Dataset, spec: KernelSpec, hp: Hyperparameters) -> "GpModel":
        if hp.spatial_dim != dataset.spatial_dim:
            raise ValueError("hyperparameter dimensionality does not match data")
        el, alpha = _factor(dataset, spec, hp)
        lml = _lml_from_factor(el, alpha, dataset.normalized_targets)
        return cls(dataset, spec, hp, el, alpha, lml)

    def _query(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dataset.spatial_dim + 1:
            raise ValueError("query points have the wrong number of columns")
        if not np.all(np.isfinite(points)):
            raise ValueError("query points must be finite")
        return points

    def predict_normalized(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance on the standardized-target scale."""
        points = self._query(points)
        k_star = cross_gram(self.dataset.points, points, self.spec, self.hp)
        mean = k_star.T @ self._alpha
        v = solve_triangular(self._factor_l, k_star, lower=True)
        var = self.hp.signal_variance - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def predict(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance of the latent objective (no noise term)."""
        mean, var = self.predict_normalized(points)
        std = self.dataset.target_std
        return self.dataset.target_mean + std * mean, std**2 * var

    @property
    def time_lengthscale(self) -> float:
        """Temporal length-scale; the faster (smaller) component for sum forms."""
        lt = np.atleast_1d(np.asarray(self.hp.log_temporal_lengthscale))
        return float(np.exp(lt).min())


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs.

    ``tie_lengthscales``: "none" trains every length-scale freely (ARD),
    "spatial" ties the spatial ones into a single isotropic value, and
    "all" additionally ties the temporal one to them (time treated as just
    another input dimension; plain kernel forms only).
    """

    restarts: int = 5
    max_iters: int = 200
    seed: int = 0
    log_bounds: np.ndarray | None = None
    tie_lengthscales: str = "none"
    relative_tol: float = 1e-7

    def __post_init__(self):
        if self.tie_lengthscales not in ("none", "spatial", "all"):
            raise ValueError("tie_lengthscales must be none, spatial, or all")


@dataclass(frozen=True)
class TrainResult:
    hp: Hyperparameters
    lml: float
    iterations: int


def default_log_bounds(
    spec: KernelSpec, spatial_widths, temporal_width: float
) -> np.ndarray:
    """Box constraints for the log-hyperparameter vector.

    Length-scales range over [1e-3, 1e3] times the corresponding domain
    width, variances over [1e-4, 1e4], and observation noise over [1e-8, 1].
    """
    spatial_widths = np.maximum(np.asarray(spatial_widths, dtype=float), _STD_FLOOR)
    temporal_width = max(float(temporal_width), _STD_FLOOR)
    ls = np.log(spatial_widths)
    lt = math.log(temporal_width)
    scale_lo, scale_hi = math.log(1e-3), math.log(1e3)
    var_lo, var_hi = math.log(1e-4), math.log(1e4)
    rows = []
    spatial_blocks = 2 if spec.spatial is KernelForm.SUM else 1
    for _ in range(spatial_blocks):
        rows += [[w + scale_lo, w + scale_hi] for w in ls]
    if spec.spatial is KernelForm.SUM:
        rows += [[var_lo, var_hi]] * 2
    temporal_blocks = 2 if spec.temporal is KernelForm.SUM else 1
    rows += [[lt + scale_lo, lt + scale_hi]] * temporal_blocks
    if spec.temporal is KernelForm.SUM:
        rows += [[var_lo, var_hi]] * 2
    if spec.signal_variance_free:
        rows += [[var_lo, var_hi]]
    rows += [[math.log(1e-8), 0.0]]
    return np.array(rows, dtype=float)


def _tie_blocks(spec: KernelSpec, d: int, mode: str) -> list[np.ndarray]:
    if mode == "none":
        return []
    if mode == "spatial":
        if spec.spatial is KernelForm.SUM:
            return [np.arange(0, d), np.arange(d, 2 * d)]
        return [np.arange(0, d)]
    # "all": spatial and temporal length-scales share one value
    if spec.has_sum:
        raise ValueError("tie_lengthscales='all' requires plain kernel forms")
    return [np.arange(0, d + 1)]  # theta starts with D spatial then 1 temporal


def train(
    dataset: Dataset,
    spec: KernelSpec,
    init: Hyperparameters,
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Maximize the marginal likelihood over the log-hyperparameters.

    Projected gradient ascent with a backtracking line search, run from the
    supplied warm start plus ``restarts - 1`` random initializations drawn
    log-uniformly within the bounds.  Returns the best restart; raises
    ``TrainingError`` when every restart fails to produce a finite value.
    """
    d = dataset.spatial_dim
    if init.spatial_dim != d:
        raise ValueError("warm start dimensionality does not match data")
    n_hp = n_hyperparameters(spec, d)
    bounds = config.log_bounds
    if bounds is None:
        widths = dataset.points[:, :d].max(axis=0) - dataset.points[:, :d].min(axis=0)
        t_width = dataset.times.max() - dataset.times.min()
        bounds = default_log_bounds(spec, np.maximum(widths, 1.0), max(t_width, 1.0))
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (n_hp, 2):
        raise ValueError(f"bounds must have shape ({n_hp}, 2)")
    tie_blocks = _tie_blocks(spec, d, config.tie_lengthscales)
    for block in tie_blocks:
        # tied entries share one box so projection cannot split them again
        bounds[block, 0] = bounds[block, 0].max()
        bounds[block, 1] = bounds[block, 1].min()

    def project(theta: np.ndarray) -> np.ndarray:
        theta = np.clip(theta, bounds[:, 0], bounds[:, 1])
        for block in tie_blocks:
            theta[block] = theta[block].mean()
        return theta

    def objective(theta: np.ndarray) -> float:
        try:
            return log_marginal_likelihood(dataset, spec, hp_from_vector(theta, spec, d))
        except (FactorizationError, np.linalg.LinAlgError):
            return -np.inf

    def gradient(theta: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = lml_and_gradient(dataset, spec, hp_from_vector(theta, spec, d))
        for block in tie_blocks:
            grad[block] = grad[block].mean()
        return value, grad

    rng = np.random.default_rng(config.seed)
    starts = [project(hp_to_vector(init, spec))]
    for _ in range(max(config.restarts - 1, 0)):
        starts.append(project(rng.uniform(bounds[:, 0], bounds[:, 1])))

    best_theta, best_value, total_iters = None, -np.inf, 0
    for theta in starts:
        value = objective(theta)
        if not np.isfinite(value):
            continue
        theta_prev = grad_prev = None
        step = 0.1
        small_gains = 0
        for _ in range(config.max_iters):
            total_iters += 1
            try:
                value, grad = gradient(theta)
            except (FactorizationError, np.linalg.LinAlgError):
                break
            if not np.all(np.isfinite(grad)):
                break
            if np.max(np.abs(project(theta + grad) - theta)) < 1e-8 * (1 + abs(value)):
                break  # stationary within the box
            if grad_prev is not None:
                # secant-based step guess, then backtrack until it improves
                ds = theta - theta_prev
                dg = grad - grad_prev
                denom = abs(float(ds @ dg))
                if denom > 1e-300:
                    step = float(np.clip((ds @ ds) / denom, 1e-8, 1e2))
            theta_prev, grad_prev = theta.copy(), grad.copy()
            # never move a log-parameter more than 2 per iteration: early
            # gradients can be enormous and a lucky giant leap still "improves"
            step = min(step, 2.0 / (np.max(np.abs(grad)) + 1e-300))
            gained = 0.0
            while step > 1e-14:
                candidate = project(theta + step * grad)
                cand_value = objective(candidate)
                if cand_value > value:
                    gained = cand_value - value
                    theta, value = candidate, cand_value
                    break
                step *= 0.5
            if gained == 0.0:
                break
            if gained <= config.relative_tol * (1.0 + abs(value)):
                small_gains += 1
                if small_gains >= 3:
                    break
            else:
                small_gains = 0
        if value > best_value:
            best_value, best_theta = value, theta.copy()
    if best_theta is None:
        raise TrainingError("all restarts failed to factorize")
    return TrainResult(hp_from_vector(best_theta, spec, d), best_value, total_iters)
