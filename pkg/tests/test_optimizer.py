"""Search-space and optimizer tests.

The acquisition-optimization path is checked against a dense-grid argmin
oracle; PSO and the quasi-Newton polish are checked on analytic functions
with known minimizers.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynabo.acquisition import PosteriorMean
from dynabo.gp import Dataset, GpModel
from dynabo.kernels import Hyperparameters, KernelSpec
from dynabo.optimizer import (
    Box,
    PsoConfig,
    RefineConfig,
    latin_hypercube,
    local_refine,
    optimize_acquisition,
    pso_minimize,
)


def sphere(points):
    return np.sum(points**2, axis=1)


def test_box_validation():
    Box([0.0, 0.0], [1.0, 1.0])
    Box([0.0, 2.0], [1.0, 2.0])  # slice dimension is fine
    with pytest.raises(ValueError):
        Box([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        Box([0.0], [np.inf])
    with pytest.raises(ValueError):
        Box([], [])
    box = Box([0.0, 2.0, -1.0], [1.0, 2.0, 1.0])
    assert box.dim == 3
    assert np.array_equal(box.degenerate, [False, True, False])
    assert np.allclose(box.width, [1.0, 0.0, 2.0])


def test_latin_hypercube_stratification():
    box = Box([0.0, 0.0], [1.0, 1.0])
    pts = latin_hypercube(4, box, seed=3)
    assert pts.shape == (4, 2)
    for j in range(2):
        strata = np.sort(np.floor(pts[:, j] * 4).astype(int))
        assert np.array_equal(strata, [0, 1, 2, 3])


def test_latin_hypercube_general_box_and_slices():
    box = Box([-2.0, 5.0, 0.0], [2.0, 5.0, 10.0])
    pts = latin_hypercube(7, box, seed=0)
    assert box.contains(pts)
    assert np.all(pts[:, 1] == 5.0)
    strata = np.sort(np.floor((pts[:, 2] / 10.0) * 7).astype(int))
    assert np.array_equal(strata, np.arange(7))


def test_latin_hypercube_determinism():
    box = Box([0.0, 0.0], [1.0, 1.0])
    a = latin_hypercube(5, box, seed=11)
    b = latin_hypercube(5, box, seed=11)
    c = latin_hypercube(5, box, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_latin_hypercube_single_point():
    box = Box([0.0, 3.0], [1.0, 3.0])
    pts = latin_hypercube(1, box, seed=0)
    assert pts.shape == (1, 2)
    assert box.contains(pts)
    with pytest.raises(ValueError):
        latin_hypercube(0, box, seed=0)


def test_pso_sphere():
    box = Box([-5.0, -5.0], [5.0, 5.0])
    point, value = pso_minimize(sphere, box, PsoConfig(particles=40, iterations=100, seed=1))
    assert value <= 1e-3
    assert box.contains(point[None, :])


def test_pso_all_degenerate_box():
    box = Box([1.0, 2.0], [1.0, 2.0])
    point, value = pso_minimize(sphere, box, PsoConfig(seed=0))
    assert np.array_equal(point, [1.0, 2.0])
    assert value == pytest.approx(5.0)


def test_pso_constant_objective():
    box = Box([0.0, 0.0], [1.0, 1.0])
    point, value = pso_minimize(
        lambda pts: np.full(pts.shape[0], 3.25), box, PsoConfig(particles=5, iterations=3, seed=2)
    )
    assert value == 3.25
    assert box.contains(point[None, :])


def test_pso_handles_nonfinite_regions():
    box = Box([-2.0, -2.0], [2.0, 2.0])

    def holey(points):
        vals = sphere(points)
        vals[points[:, 0] > 0.5] = np.nan  # poisoned half-plane
        return vals

    point, value = pso_minimize(holey, box, PsoConfig(particles=30, iterations=60, seed=4))
    assert np.isfinite(value)
    assert value <= 1e-2


def test_pso_deterministic_and_monotone_in_iterations():
    box = Box([-5.0, -5.0, -5.0], [5.0, 5.0, 5.0])
    cfg = lambda k: PsoConfig(particles=12, iterations=k, seed=9)
    p1, v1 = pso_minimize(sphere, box, cfg(40))
    p2, v2 = pso_minimize(sphere, box, cfg(40))
    assert np.array_equal(p1, p2) and v1 == v2
    # same seed, growing iteration budget: reported best can only improve
    values = [pso_minimize(sphere, box, cfg(k))[1] for k in (1, 5, 10, 20, 40)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_pso_respects_init_positions():
    box = Box([-5.0, -5.0], [5.0, 5.0])
    init = np.array([[0.01, -0.01]])  # near the optimum
    _, with_init = pso_minimize(
        sphere, box, PsoConfig(particles=8, iterations=1, seed=3), init=init
    )
    assert with_init <= sphere(init)[0] + 1e-12


def test_pso_rejects_bad_config():
    with pytest.raises(ValueError):
        PsoConfig(particles=1)
    with pytest.raises(ValueError):
        PsoConfig(iterations=0)


def test_refine_quadratic():
    box = Box([0.0], [1.0])
    point, value = local_refine(lambda p: (p[:, 0] - 0.3) ** 2, np.array([0.9]), box)
    assert point[0] == pytest.approx(0.3, abs=1e-6)
    assert value <= 1e-10


def test_refine_already_optimal():
    box = Box([0.0], [1.0])
    point, value = local_refine(lambda p: (p[:, 0] - 0.3) ** 2, np.array([0.3]), box)
    assert point[0] == pytest.approx(0.3, abs=1e-8)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_refine_converges_to_boundary():
    # unconstrained minimizer at 2.0 lies outside the box
    box = Box([0.0], [1.0])
    point, value = local_refine(lambda p: (p[:, 0] - 2.0) ** 2, np.array([0.4]), box)
    assert point[0] == pytest.approx(1.0, abs=1e-6)
    assert value == pytest.approx(1.0, rel=1e-5)


def test_refine_never_worsens():
    rng = np.random.default_rng(0)
    box = Box([-1.0, -1.0], [1.0, 1.0])

    def rastrigin(points):
        return np.sum(points**2 - np.cos(8 * points), axis=1)

    for _ in range(10):
        start = rng.uniform(-1, 1, size=2)
        _, value = local_refine(rastrigin, start, box)
        assert value <= rastrigin(start[None, :])[0] + 1e-12


def test_refine_nonfinite_gradient_returns_start():
    box = Box([0.0], [1.0])

    def nasty(points):
        return np.where(points[:, 0] == 0.5, 1.0, np.nan)

    point, value = local_refine(nasty, np.array([0.5]), box)
    assert point[0] == 0.5
    assert value == 1.0


def test_refine_degenerate_dims_held_fixed():
    box = Box([0.0, 7.0], [1.0, 7.0])
    point, _ = local_refine(
        lambda p: (p[:, 0] - 0.6) ** 2 + p[:, 1], np.array([0.2, 7.0]), box
    )
    assert point[1] == 7.0
    assert point[0] == pytest.approx(0.6, abs=1e-6)


def test_refine_rejects_out_of_box_start():
    box = Box([0.0], [1.0])
    with pytest.raises(ValueError):
        local_refine(sphere, np.array([2.0]), box)


def quadratic_model():
    # noiseless parabola on a grid; posterior mean recovers it closely
    xs = np.linspace(0, 1, 9)
    pts = np.array([[x, 0.0] for x in xs])
    y = (xs - 0.42) ** 2
    spec = KernelSpec()
    hp = Hyperparameters.default(1, spec, spatial_scale=0.3, noise_variance=1e-8)
    return GpModel.fit(Dataset(pts, y), spec, hp)


def test_optimize_acquisition_grid_oracle():
    model = quadratic_model()
    box = Box([0.0, 0.0], [1.0, 0.0])  # time pinned to the sampled slice
    point = optimize_acquisition(model, PosteriorMean(), box, PsoConfig(seed=5))
    grid = np.linspace(0, 1, 2001)
    scores, _ = model.predict(np.column_stack([grid, np.zeros_like(grid)]))
    oracle = grid[np.argmin(scores)]
    assert point[1] == 0.0
    assert point[0] == pytest.approx(oracle, abs=1e-2)


def test_optimize_acquisition_beats_lhd_probes():
    model = quadratic_model()
    box = Box([0.0, 0.0], [1.0, 0.0])
    pso = PsoConfig(particles=20, iterations=30, seed=8)
    point = optimize_acquisition(model, PosteriorMean(), box, pso)
    probes = latin_hypercube(pso.particles, box, pso.seed)
    best_probe = np.min(model.predict(probes)[0])
    found = model.predict(point[None, :])[0][0]
    assert found <= best_probe + 1e-12


def test_optimize_acquisition_respects_time_slice():
    model = quadratic_model()
    box = Box([0.0, 2.5], [1.0, 2.5])
    point = optimize_acquisition(model, PosteriorMean(), box, PsoConfig(seed=1))
    assert point[1] == 2.5


@given(seed=st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_pso_stays_in_box_property(seed):
    box = Box([-1.0, 0.0, 2.0], [1.0, 0.0, 3.0])
    point, _ = pso_minimize(
        sphere, box, PsoConfig(particles=6, iterations=8, seed=seed)
    )
    assert box.contains(point[None, :])
    assert point[1] == 0.0
