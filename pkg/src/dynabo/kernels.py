"""Stationary covariance functions over space-time inputs.

Inputs live in ``R^{D+1}``: ``D`` spatial coordinates followed by a scalar
time coordinate in the last column.  The covariance is always the separable
product ``K_S(x, x') * K_T(t, t')`` of a spatial and a temporal part.  Each
part is a squared exponential, a Matern 1/2 (exponential), or a sum of the
two with independent variance/length-scale sets.

All hyperparameters are stored in log space so that unconstrained training
keeps them positive.  ``grad_gram_log_hp`` returns analytic derivatives with
respect to each free log-hyperparameter, in the same order used by
``hp_to_vector``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "KernelForm",
    "KernelSpec",
    "Hyperparameters",
    "eval_se",
    "eval_matern12",
    "eval_spatiotemporal",
    "gram",
    "cross_gram",
    "grad_gram_log_hp",
    "hp_to_vector",
    "hp_from_vector",
    "n_hyperparameters",
    "hyperparameter_names",
]


class KernelForm(str, Enum):
    """Shape of one separable part (spatial or temporal)."""

    SE = "se"
    MATERN12 = "matern12"
    SUM = "sum"  # SE + Matern 1/2 with independent parameter sets


@dataclass(frozen=True)
class KernelSpec:
    """Forms of the two separable parts; composition is always their product."""

    spatial: KernelForm = KernelForm.SE
    temporal: KernelForm = KernelForm.SE

    @property
    def has_sum(self) -> bool:
        return KernelForm.SUM in (self.spatial, self.temporal)

    @property
    def signal_variance_free(self) -> bool:
        # With a sum part the component variances absorb the overall scale,
        # so the top-level signal variance is pinned to 1.
        return not self.has_sum


@dataclass(frozen=True, eq=False)
class Hyperparameters:
    """Log-space kernel parameters for a model with D spatial dimensions.

    ``log_spatial_lengthscales`` has shape ``(D,)`` for plain spatial forms
    and ``(2, D)`` for the sum form (SE row first, Matern 1/2 row second).
    ``log_temporal_lengthscale`` is a scalar for plain temporal forms and a
    length-2 array for the sum form.  The component variance fields are set
    only for sum parts; with any sum part present ``log_signal_variance``
    must be 0 (variance 1).  ``log_noise_variance`` is observation noise on
    the targets; nothing is noisy in the time coordinate itself.
    """

    log_spatial_lengthscales: np.ndarray
    log_temporal_lengthscale: float | np.ndarray
    log_signal_variance: float
    log_noise_variance: float
    log_spatial_variances: np.ndarray | None = None
    log_temporal_variances: np.ndarray | None = None

    def __post_init__(self):
        sls = np.atleast_1d(np.asarray(self.log_spatial_lengthscales, dtype=float))
        object.__setattr__(self, "log_spatial_lengthscales", sls)
        tls = np.asarray(self.log_temporal_lengthscale, dtype=float)
        object.__setattr__(
            self, "log_temporal_lengthscale", float(tls) if tls.ndim == 0 else tls
        )
        for name in ("log_spatial_variances", "log_temporal_variances"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))
        for value in (
            self.log_spatial_lengthscales,
            np.asarray(self.log_temporal_lengthscale),
            self.log_signal_variance,
            self.log_noise_variance,
        ):
            if not np.all(np.isfinite(value)):
                raise ValueError("hyperparameters must be finite")

    @property
    def spatial_dim(self) -> int:
        return int(self.log_spatial_lengthscales.shape[-1])

    @property
    def noise_variance(self) -> float:
        return float(np.exp(self.log_noise_variance))

    @property
    def signal_variance(self) -> float:
        """Total variance of the kernel at zero lag."""
        total = np.exp(self.log_signal_variance)
        if self.log_spatial_variances is not None:
            total *= np.sum(np.exp(self.log_spatial_variances))
        if self.log_temporal_variances is not None:
            total *= np.sum(np.exp(self.log_temporal_variances))
        return float(total)

    @classmethod
    def default(
        cls,
        spatial_dim: int,
        spec: KernelSpec = KernelSpec(),
        spatial_scale: float = 1.0,
        temporal_scale: float = 1.0,
        signal_variance: float = 1.0,
        noise_variance: float = 1e-4,
    ) -> "Hyperparameters":
        """Build parameters with shapes matching ``spec``."""
        if spatial_dim < 1:
            raise ValueError("spatial_dim must be at least 1")
        ls = np.log(spatial_scale)
        lt = np.log(temporal_scale)
        if spec.spatial is KernelForm.SUM:
            sls = np.full((2, spatial_dim), ls)
            svar = np.zeros(2)
        else:
            sls = np.full(spatial_dim, ls)
            svar = None
        if spec.temporal is KernelForm.SUM:
            tls = np.array([lt, lt])
            tvar = np.zeros(2)
        else:
            tls = float(lt)
            tvar = None
        return cls(
            log_spatial_lengthscales=sls,
            log_temporal_lengthscale=tls,
            log_signal_variance=0.0 if spec.has_sum else float(np.log(signal_variance)),
            log_noise_variance=float(np.log(noise_variance)),
            log_spatial_variances=svar,
            log_temporal_variances=tvar,
        )


def _check_shapes(spec: KernelSpec, hp: Hyperparameters) -> None:
    sls = hp.log_spatial_lengthscales
    if spec.spatial is KernelForm.SUM:
        if sls.ndim != 2 or sls.shape[0] != 2 or hp.log_spatial_variances is None:
            raise ValueError("sum spatial form needs (2, D) length-scales and 2 variances")
    else:
        if sls.ndim != 1 or hp.log_spatial_variances is not None:
            raise ValueError("plain spatial form needs (D,) length-scales and no variances")
    tls = np.atleast_1d(np.asarray(hp.log_temporal_lengthscale))
    if spec.temporal is KernelForm.SUM:
        if tls.shape != (2,) or hp.log_temporal_variances is None:
            raise ValueError("sum temporal form needs 2 length-scales and 2 variances")
    else:
        if tls.shape != (1,) or hp.log_temporal_variances is not None:
            raise ValueError("plain temporal form needs a scalar length-scale")
    if spec.has_sum and hp.log_signal_variance != 0.0:
        raise ValueError("signal variance is fixed to 1 when a sum part is present")


def eval_se(distance_sq, lengthscale, variance):
    """Squared-exponential value ``variance * exp(-d^2 / (2 l^2))``.

    ``distance_sq`` is a squared distance (scalar or array); the result is
    bounded by ``variance`` and equals it at zero distance.
    """
    distance_sq = np.asarray(distance_sq, dtype=float)
    if not (np.all(np.isfinite(distance_sq)) and np.all(distance_sq >= 0)):
        raise ValueError("distance_sq must be finite and nonnegative")
    if not (np.isfinite(lengthscale) and lengthscale > 0):
        raise ValueError("lengthscale must be finite and positive")
    if not (np.isfinite(variance) and variance > 0):
        raise ValueError("variance must be finite and positive")
    out = variance * np.exp(-0.5 * distance_sq / lengthscale**2)
    return out if out.ndim else float(out)


def eval_matern12(distance, lengthscale, variance):
    """Matern 1/2 (exponential) value ``variance * exp(-d / l)``.

    Equivalent to a per-step forgetting factor ``eps ** d`` with
    ``eps = exp(-1 / l)``.
    """
    distance = np.asarray(distance, dtype=float)
    if not (np.all(np.isfinite(distance)) and np.all(distance >= 0)):
        raise ValueError("distance must be finite and nonnegative")
    if not (np.isfinite(lengthscale) and lengthscale > 0):
        raise ValueError("lengthscale must be finite and positive")
    if not (np.isfinite(variance) and variance > 0):
        raise ValueError("variance must be finite and positive")
    out = variance * np.exp(-distance / lengthscale)
    return out if out.ndim else float(out)


def _scaled_diffs(xa: np.ndarray, xb: np.ndarray, log_ells: np.ndarray) -> np.ndarray:
    """Pairwise per-dimension differences scaled by length-scales, (n, m, p)."""
    ells = np.exp(log_ells)
    return (xa[:, None, :] - xb[None, :, :]) / ells


def _plain_cov(form: KernelForm, z: np.ndarray) -> np.ndarray:
    s = np.sum(z * z, axis=-1)
    if form is KernelForm.SE:
        return np.exp(-0.5 * s)
    return np.exp(-np.sqrt(s))


def _part_cov(
    form: KernelForm,
    xa: np.ndarray,
    xb: np.ndarray,
    log_ells: np.ndarray,
    log_vars: np.ndarray | None,
) -> np.ndarray:
    if form is KernelForm.SUM:
        va, vb = np.exp(log_vars)
        k_se = _plain_cov(KernelForm.SE, _scaled_diffs(xa, xb, log_ells[0]))
        k_m12 = _plain_cov(KernelForm.MATERN12, _scaled_diffs(xa, xb, log_ells[1]))
        return va * k_se + vb * k_m12
    return _plain_cov(form, _scaled_diffs(xa, xb, log_ells))


def _plain_cov_grads(form: KernelForm, z: np.ndarray):
    """Covariance of a unit-variance plain part plus d/dlog(l_j) matrices."""
    s = np.sum(z * z, axis=-1)
    if form is KernelForm.SE:
        k = np.exp(-0.5 * s)
        grads = [k * z[..., j] ** 2 for j in range(z.shape[-1])]
    else:
        r = np.sqrt(s)
        k = np.exp(-r)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, k / np.where(r > 0, r, 1.0), 0.0)
        grads = [scale * z[..., j] ** 2 for j in range(z.shape[-1])]
    return k, grads


def _part_cov_grads(
    form: KernelForm,
    xa: np.ndarray,
    xb: np.ndarray,
    log_ells: np.ndarray,
    log_vars: np.ndarray | None,
):
    """Part covariance and gradient matrices, length-scale block then variances."""
    if form is KernelForm.SUM:
        va, vb = np.exp(log_vars)
        k_se, g_se = _plain_cov_grads(KernelForm.SE, _scaled_diffs(xa, xb, log_ells[0]))
        k_m12, g_m12 = _plain_cov_grads(
            KernelForm.MATERN12, _scaled_diffs(xa, xb, log_ells[1])
        )
        k = va * k_se + vb * k_m12
        grads = [va * g for g in g_se] + [vb * g for g in g_m12]
        grads += [va * k_se, vb * k_m12]
        return k, grads
    return _plain_cov_grads(form, _scaled_diffs(xa, xb, log_ells))


def _split_points(points: np.ndarray, spatial_dim: int):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != spatial_dim + 1:
        raise ValueError(
            f"points have {points.shape[1]} columns, expected {spatial_dim + 1}"
        )
    return points[:, :spatial_dim], points[:, spatial_dim:]


def _temporal_log_ells(spec: KernelSpec, hp: Hyperparameters) -> np.ndarray:
    tls = np.atleast_1d(np.asarray(hp.log_temporal_lengthscale))
    if spec.temporal is KernelForm.SUM:
        return tls[:, None]  # (2, 1): one length-scale per component
    return tls  # (1,)


def eval_spatiotemporal(a, b, spec: KernelSpec, hp: Hyperparameters) -> float:
    """Covariance between two space-time points (spatial coords then time)."""
    k = cross_gram(np.atleast_2d(a), np.atleast_2d(b), spec, hp)
    return float(k[0, 0])


def cross_gram(
    points_a: np.ndarray, points_b: np.ndarray, spec: KernelSpec, hp: Hyperparameters
) -> np.ndarray:
    """Covariance matrix between two point sets, without observation noise."""
    _check_shapes(spec, hp)
    d = hp.spatial_dim
    xa, ta = _split_points(points_a, d)
    xb, tb = _split_points(points_b, d)
    k_s = _part_cov(
        spec.spatial, xa, xb, hp.log_spatial_lengthscales, hp.log_spatial_variances
    )
    k_t = _part_cov(
        spec.temporal, ta, tb, _temporal_log_ells(spec, hp), hp.log_temporal_variances
    )
    return np.exp(hp.log_signal_variance) * k_s * k_t


def gram(
    points: np.ndarray,
    spec: KernelSpec,
    hp: Hyperparameters,
    with_noise: bool = False,
) -> np.ndarray:
    """Covariance matrix of a point set.

    With ``with_noise`` the observation-noise variance is added to the
    diagonal only; time coordinates are treated as exact either way.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 1:
        raise ValueError("need at least one point")
    k = cross_gram(points, points, spec, hp)
    if with_noise:
        k = k + hp.noise_variance * np.eye(k.shape[0])
    return k


def grad_gram_log_hp(
    points: np.ndarray, spec: KernelSpec, hp: Hyperparameters
) -> list[np.ndarray]:
    """Derivative of the noisy gram matrix for each free log-hyperparameter.

    Matrices follow the ``hp_to_vector`` order: spatial length-scales,
    spatial component variances (sum form), temporal length-scales, temporal
    component variances (sum form), signal variance (plain forms only),
    noise variance.  The noise derivative is ``noise_variance * I``.
    """
    _check_shapes(spec, hp)
    d = hp.spatial_dim
    x, t = _split_points(points, d)
    s2 = np.exp(hp.log_signal_variance)
    k_s, gs = _part_cov_grads(
        spec.spatial, x, x, hp.log_spatial_lengthscales, hp.log_spatial_variances
    )
    k_t, gt = _part_cov_grads(
        spec.temporal, t, t, _temporal_log_ells(spec, hp), hp.log_temporal_variances
    )
    grads = [s2 * g * k_t for g in gs]
    grads += [s2 * k_s * g for g in gt]
    if spec.signal_variance_free:
        grads.append(s2 * k_s * k_t)
    grads.append(hp.noise_variance * np.eye(points.shape[0]))
    return grads


def n_hyperparameters(spec: KernelSpec, spatial_dim: int) -> int:
    n = 0
    n += 2 * spatial_dim + 2 if spec.spatial is KernelForm.SUM else spatial_dim
    n += 4 if spec.temporal is KernelForm.SUM else 1
    n += 1 if spec.signal_variance_free else 0
    return n + 1  # noise


def hyperparameter_names(spec: KernelSpec, spatial_dim: int) -> list[str]:
    """Names of the free log-hyperparameters, in vector order."""
    names = []
    if spec.spatial is KernelForm.SUM:
        names += [f"spatial_se_lengthscale_{j}" for j in range(spatial_dim)]
        names += [f"spatial_m12_lengthscale_{j}" for j in range(spatial_dim)]
        names += ["spatial_se_variance", "spatial_m12_variance"]
    else:
        names += [f"spatial_lengthscale_{j}" for j in range(spatial_dim)]
    if spec.temporal is KernelForm.SUM:
        names += ["temporal_se_lengthscale", "temporal_m12_lengthscale"]
        names += ["temporal_se_variance", "temporal_m12_variance"]
    else:
        names += ["temporal_lengthscale"]
    if spec.signal_variance_free:
        names += ["signal_variance"]
    return names + ["noise_variance"]


def hp_to_vector(hp: Hyperparameters, spec: KernelSpec) -> np.ndarray:
    """Flatten the free log-hyperparameters into the canonical vector order."""
    _check_shapes(spec, hp)
    parts = [np.ravel(hp.log_spatial_lengthscales)]
    if hp.log_spatial_variances is not None:
        parts.append(hp.log_spatial_variances)
    parts.append(np.atleast_1d(np.asarray(hp.log_temporal_lengthscale)))
    if hp.log_temporal_variances is not None:
        parts.append(hp.log_temporal_variances)
    if spec.signal_variance_free:
        parts.append(np.array([hp.log_signal_variance]))
    parts.append(np.array([hp.log_noise_variance]))
    return np.concatenate(parts)


def hp_from_vector(
    theta: np.ndarray, spec: KernelSpec, spatial_dim: int
) -> Hyperparameters:
    """Inverse of ``hp_to_vector``."""
    theta = np.asarray(theta, dtype=float)
    expected = n_hyperparameters(spec, spatial_dim)
    if theta.shape != (expected,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({expected},)")
    i = 0
    if spec.spatial is KernelForm.SUM:
        sls = theta[i : i + 2 * spatial_dim].reshape(2, spatial_dim)
        i += 2 * spatial_dim
        svar = theta[i : i + 2]
        i += 2
    else:
        sls = theta[i : i + spatial_dim]
        i += spatial_dim
        svar = None
    if spec.temporal is KernelForm.SUM:
        tls = theta[i : i + 2]
        i += 2
        tvar = theta[i : i + 2]
        i += 2
    else:
        tls = float(theta[i])
        i += 1
        tvar = None
    if spec.signal_variance_free:
        sig = float(theta[i])
        i += 1
    else:
        sig = 0.0
    noise = float(theta[i])
    return Hyperparameters(
        log_spatial_lengthscales=sls,
        log_temporal_lengthscale=tls,
        log_signal_variance=sig,
        log_noise_variance=noise,
        log_spatial_variances=svar,
        log_temporal_variances=tvar,
    )
