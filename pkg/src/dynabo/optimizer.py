"""Search-space types, Latin hypercube sampling, and acquisition optimization.

Global search is particle-swarm optimization seeded from a Latin hypercube;
a quasi-Newton polish with numerical gradients runs from the swarm's best
position.  A dimension whose bounds coincide is a slice: it is held fixed
and removed from the search space instead of being searched at zero width.

Objectives are batch maps: given an ``(M, dim)`` array of candidate points
they return ``(M,)`` scores.  Evaluations within one swarm iteration are
independent and may therefore run concurrently (here: vectorized), with the
reduction order fixed by particle index so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from dynabo.acquisition import AcquisitionSpec, evaluate_on_model

__all__ = [
    "Box",
    "PsoConfig",
    "RefineConfig",
    "latin_hypercube",
    "pso_minimize",
    "local_refine",
    "optimize_acquisition",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounds; equal lower and upper pin that coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise ValueError("bounds must be matching nonempty vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def degenerate(self) -> np.ndarray:
        """Mask of slice dimensions (zero width)."""
        return self.width == 0

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def contains(self, points: np.ndarray, atol: float = 0.0) -> bool:
        points = np.atleast_2d(points)
        return bool(
            np.all(points >= self.lower - atol) and np.all(points <= self.upper + atol)
        )


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 50
    iterations: int = 120
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    seed: int = 0

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("need at least 2 particles")
        if self.iterations < 1:
            raise ValueError("need at least 1 iteration")


@dataclass(frozen=True)
class RefineConfig:
    max_iters: int = 100
    step_tol: float = 1e-8


def latin_hypercube(n: int, box: Box, seed) -> np.ndarray:
    """``n`` points stratified one-per-interval along every free dimension.

    Slice dimensions stay at their pinned value.  Output is deterministic in
    ``seed`` and has shape ``(n, box.dim)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    out = np.tile(box.lower, (n, 1))
    for j in np.flatnonzero(~box.degenerate):
        strata = (rng.permutation(n) + rng.uniform(size=n)) / n
        out[:, j] = box.lower[j] + strata * (box.upper[j] - box.lower[j])
    return out


def _freeze_degenerate(box: Box):
    """Split a box into free dimensions and pinned values."""
    free = ~box.degenerate
    reduced = None
    if free.any():
        reduced = Box(box.lower[free], box.upper[free])

    def embed(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        full = np.tile(box.lower, (points.shape[0], 1))
        full[:, free] = points
        return full

    return free, reduced, embed


def pso_minimize(objective, box: Box, config: PsoConfig = PsoConfig(), init=None):
    """Global minimization by a velocity-clamped particle swarm.

    ``objective`` maps an ``(M, dim)`` array to ``(M,)`` scores; non-finite
    scores count as +inf and the search continues.  ``init`` optionally
    seeds particle positions (rows beyond the particle count are dropped,
    missing rows drawn uniformly).  Deterministic given ``seed``.
    """
    free, reduced, embed = _freeze_degenerate(box)
    if reduced is None:
        point = box.lower.copy()
        value = _batch_eval(objective, point[None, :])[0]
        return point, float(value)

    rng = np.random.default_rng(config.seed)
    p, dim = config.particles, reduced.dim
    width = reduced.width
    positions = rng.uniform(reduced.lower, reduced.upper, size=(p, dim))
    if init is not None:
        init = np.atleast_2d(np.asarray(init, dtype=float))[:p, free]
        positions[: init.shape[0]] = np.clip(init, reduced.lower, reduced.upper)
    v_max = 0.5 * width
    velocities = rng.uniform(-v_max, v_max, size=(p, dim))

    values = _batch_eval(objective, embed(positions))
    best_pos = positions.copy()
    best_val = values.copy()
    g_idx = int(np.argmin(best_val))
    g_pos, g_val = best_pos[g_idx].copy(), float(best_val[g_idx])

    for _ in range(config.iterations):
        r_cog = rng.uniform(size=(p, dim))
        r_soc = rng.uniform(size=(p, dim))
        velocities = (
            config.inertia * velocities
            + config.cognitive * r_cog * (best_pos - positions)
            + config.social * r_soc * (g_pos - positions)
        )
        velocities = np.clip(velocities, -v_max, v_max)
        positions = np.clip(positions + velocities, reduced.lower, reduced.upper)
        values = _batch_eval(objective, embed(positions))
        improved = values < best_val
        best_pos[improved] = positions[improved]
        best_val[improved] = values[improved]
        g_idx = int(np.argmin(best_val))
        if best_val[g_idx] < g_val:
            g_pos, g_val = best_pos[g_idx].copy(), float(best_val[g_idx])

    return embed(g_pos[None, :])[0], g_val


def _batch_eval(objective, points: np.ndarray) -> np.ndarray:
    values = np.asarray(objective(points), dtype=float).ravel()
    if values.shape != (points.shape[0],):
        raise ValueError("objective must return one score per point")
    return np.where(np.isfinite(values), values, np.inf)


def local_refine(objective, start, box: Box, config: RefineConfig = RefineConfig()):
    """Quasi-Newton polish from ``start``, kept inside the box.

    Gradients are central differences with step ``1e-6`` of each dimension
    width; probe points are clipped to the box, so the difference quotient
    degrades to one-sided at a boundary.  A non-finite gradient at the start
    returns the start unchanged; the result never scores worse than it.
    """
    start = np.asarray(start, dtype=float).ravel()
    if start.shape != (box.dim,):
        raise ValueError("start has the wrong dimension")
    if not box.contains(start[None, :]):
        raise ValueError("start must lie inside the box")
    free, reduced, embed = _freeze_degenerate(box)
    start_value = float(_batch_eval(objective, start[None, :])[0])
    if reduced is None:
        return start.copy(), start_value

    steps = 1e-6 * reduced.width

    def grad(z: np.ndarray) -> np.ndarray:
        probes_hi = np.clip(z + np.diag(steps), reduced.lower, reduced.upper)
        probes_lo = np.clip(z - np.diag(steps), reduced.lower, reduced.upper)
        hi = _raw_eval(objective, embed(probes_hi))
        lo = _raw_eval(objective, embed(probes_lo))
        span = np.diag(probes_hi - probes_lo).copy()
        span[span == 0] = 1.0
        return (hi - lo) / span

    def fun(z: np.ndarray) -> float:
        return float(_batch_eval(objective, embed(z[None, :]))[0])

    z0 = start[free]
    g0 = grad(z0)
    if not np.all(np.isfinite(g0)):
        return start.copy(), start_value
    result = minimize(
        fun,
        z0,
        jac=lambda z: np.where(np.isfinite(g := grad(z)), g, 0.0),
        method="L-BFGS-B",
        bounds=list(zip(reduced.lower, reduced.upper)),
        options={"maxiter": config.max_iters, "ftol": config.step_tol},
    )
    candidate = embed(np.clip(result.x, reduced.lower, reduced.upper)[None, :])[0]
    cand_value = float(_batch_eval(objective, candidate[None, :])[0])
    if cand_value <= start_value:
        return candidate, cand_value
    return start.copy(), start_value


def _raw_eval(objective, points: np.ndarray) -> np.ndarray:
    return np.asarray(objective(points), dtype=float).ravel()


def optimize_acquisition(
    model,
    acq: AcquisitionSpec,
    box: Box,
    pso: PsoConfig = PsoConfig(),
    refine: RefineConfig = RefineConfig(),
) -> np.ndarray:
    """Best scoring point in the box: LHD-seeded swarm, then local polish."""

    def objective(points):
        return evaluate_on_model(acq, model, points)

    probes = latin_hypercube(pso.particles, box, pso.seed)
    point, _ = pso_minimize(objective, box, pso, init=probes)
    point, _ = local_refine(objective, point, box, refine)
    return box.clip(point)
