import numpy as np
import pytest

from cylstable import catalog
from cylstable.errors import ConfigurationError
from cylstable.grid import TimeGrid
from cylstable.hilbert import HSOperator, random_hs_operator
from cylstable.processes import (
    AdaptedStepProcess, ContractionStepProcess, DetStepFunction, IntegrandProgram,
    approximate_by_steps, hs_norms, lalpha_distance, lalpha_norm, lalpha_quadrature,
    randomized_metric, truncate,
)
from cylstable.rng import RngStream
from cylstable.sampler import DrivingPath, sample_driving_path

PHI = catalog.default_operator(2, 2)


def test_single_cell_norm(gen):
    phi = random_hs_operator(gen, 3, 2)
    f = DetStepFunction([0.0, 2.5], [phi])
    for alpha in (0.5, 1.0, 1.7):
        assert lalpha_norm(f, alpha) == pytest.approx(2.5 * np.linalg.norm(phi.matrix) ** alpha)


@pytest.mark.parametrize("alpha, beta", [(1.0, 0.5), (0.5, 1.2), (1.5, 0.3)])
def test_power_law_closed_form(alpha, beta):
    T = 2.0
    psi = catalog.power_law(2, 2, beta, scale=1.3)
    expected = 1.3 ** alpha * T ** (1 - beta * alpha) / (1 - beta * alpha)
    q = lalpha_quadrature(psi, alpha, T=T)
    assert q.converged
    assert q.value == pytest.approx(expected, rel=1e-4)


def test_divergent_power_law():
    q = lalpha_quadrature(catalog.power_law(2, 2, 1.0), 1.0)
    assert q.diverging and not q.converged


def test_distance_axioms(gen):
    grid = TimeGrid.uniform(1.0, 5)
    for _ in range(30):
        f, g, h = (DetStepFunction(grid, [random_hs_operator(gen, 2, 2) for _ in range(5)])
                   for _ in range(3))
        for alpha in (0.4, 0.9):
            assert lalpha_distance(f, f, alpha) == 0.0
            assert lalpha_distance(f, g, alpha) == pytest.approx(lalpha_distance(g, f, alpha))
            assert lalpha_distance(f, h, alpha) <= lalpha_distance(f, g, alpha) + lalpha_distance(g, h, alpha) + 1e-12


def test_value_at_zero_ignored():
    a = DetStepFunction([0.0, 1.0], [PHI], initial=HSOperator(100 * PHI))
    assert a(0.0).matrix[0, 0] == pytest.approx(100 * PHI[0, 0])
    assert a(0.5).matrix[0, 0] == pytest.approx(PHI[0, 0])
    assert lalpha_norm(a, 1.0) == pytest.approx(1.0)


def test_randomized_metric_deterministic():
    half = DetStepFunction([0.0, 0.5], [PHI])
    assert randomized_metric(half, 1.0, 10, 0).value == pytest.approx(0.5, abs=1e-15)
    big = DetStepFunction([0.0, 3.0], [PHI])
    assert randomized_metric(big, 1.0, 10, 0).value == 1.0
    assert randomized_metric(catalog.power_law(2, 2, 0.5), 1.0, 10, 0).value == 1.0


def test_randomized_metric_self_consistent():
    psi = catalog.volatility(2, 2, exponent=1.0, scale=0.4)
    grid = TimeGrid.uniform(1.0, 16)
    small = randomized_metric(psi, 1.2, 2000, RngStream(31), grid=grid)
    large = randomized_metric(psi, 1.2, 20000, RngStream(32), grid=grid)
    assert 0 < small.value < 1
    assert abs(small.value - large.value) <= 3 * np.hypot(small.stderr, large.stderr)


def test_truncate():
    v = np.stack([PHI, 5 * PHI, np.full((2, 2), np.nan)])
    out = truncate(v, 2.0)
    np.testing.assert_array_equal(out[0], PHI)
    assert np.all(out[1:] == 0)
    assert np.isinf(hs_norms(v)[2])


def test_approximate_fixed_point_and_constant():
    grid = TimeGrid.uniform(1.0, 4)
    theta = AdaptedStepProcess.constant(grid, PHI)
    assert approximate_by_steps(theta, grid) is theta
    const = approximate_by_steps(catalog.constant(2, 2), TimeGrid.uniform(1.0, 7))
    assert const.is_static()
    np.testing.assert_array_equal(const._static, np.broadcast_to(PHI, (7, 2, 2)))


def test_left_point_error_closed_form():
    # psi(t) = t Phi with |Phi|_HS = 1: left-point error on a cell of width h is h^2/2
    prog = IntegrandProgram(lambda t, p: t * PHI, 2, 2, "linear", deterministic=True)
    prev = np.inf
    for k in range(2, 11):
        grid = TimeGrid.dyadic(1.0, k)
        step = approximate_by_steps(prog, grid)
        mats = step._static
        times = grid.times
        diff = IntegrandProgram(
            lambda t, p, mats=mats, times=times:
                t * PHI - mats[min(int(np.searchsorted(times, t, side="left")) - 1, len(mats) - 1)],
            2, 2, "diff", deterministic=True)
        d = randomized_metric(diff, 1.0, 10, 0).value
        # the quadrature resolves the sawtooth only up to its graded mesh
        assert d == pytest.approx(grid.mesh / 2, rel=1e-2)
        assert d < prev
        prev = d
    assert prev < 0.01


def test_predictability_under_splicing():
    psi = catalog.volatility(2, 2, exponent=1.0)
    grid = TimeGrid.uniform(1.0, 8)
    a = sample_driving_path(1.1, (2, 2), grid, RngStream(33), 50)
    b = sample_driving_path(1.1, (2, 2), grid, RngStream(34), 50)
    step = approximate_by_steps(psi, grid)
    for j in range(1, 8):
        sub = np.concatenate([a.subordinators[:, :j], b.subordinators[:, j:]], axis=1)
        xi = np.concatenate([a.gaussians[:, :j], b.gaussians[:, j:]], axis=1)
        spliced = DrivingPath(1.1, grid, sub, xi)
        ca, cs = step.coefficients(a), step.coefficients(spliced)
        np.testing.assert_array_equal(ca[:, : j + 1], cs[:, : j + 1])
        assert not np.allclose(ca[:, j + 1:], cs[:, j + 1:]) or j == 7


def test_monotone_truncation():
    psi = catalog.volatility(2, 2, exponent=2.0)
    grid = TimeGrid.uniform(1.0, 16)
    path = sample_driving_path(0.8, (2, 2), grid, RngStream(35), 2000)
    full = approximate_by_steps(psi, grid).coefficients(path)
    prev = np.inf
    for n in (1.0, 2.0, 4.0, 8.0, 64.0, 1e6, np.inf):
        cut = approximate_by_steps(psi, grid, n).coefficients(path)
        d = np.mean(np.minimum(np.sum(hs_norms(full - cut) ** 0.8 * grid.dt, axis=1), 1.0))
        assert d <= prev + 1e-15
        prev = d
    assert prev == 0.0


def test_contraction_checks(gen):
    grid = TimeGrid.uniform(1.0, 3)
    with pytest.raises(ConfigurationError):
        ContractionStepProcess.deterministic(grid, [2 * np.eye(2)] * 3)
    gamma = ContractionStepProcess.random(grid, 3, RngStream(36))
    path = sample_driving_path(1.0, (3, 3), grid, 0, 100)
    c = gamma.coefficients(path)
    assert np.max(np.linalg.norm(c, 2, axis=(-2, -1))) <= 1 + 1e-12
    theta = AdaptedStepProcess.constant(grid, random_hs_operator(gen, 3, 3))
    prod = gamma.compose(theta)
    np.testing.assert_allclose(prod.coefficients(path), c @ theta._static[0])


def test_partition_process():
    grid = TimeGrid.uniform(1.0, 2)
    cells = [[(lambda p: np.ones(p.n_scenarios, bool), PHI)],
             [(lambda p: p.position[:, 0] > 0, PHI), (lambda p: p.position[:, 0] <= 0, -PHI)]]
    theta = AdaptedStepProcess.from_partition(grid, cells)
    path = sample_driving_path(1.0, (2, 2), grid, 0, 200)
    c = theta.coefficients(path)
    sign = np.where(path.positions[:, 1, 0] > 0, 1.0, -1.0)
    np.testing.assert_array_equal(c[:, 1], sign[:, None, None] * PHI)


def test_catalog_errors():
    with pytest.raises(ConfigurationError):
        catalog.build("nope", 2, 2)
    with pytest.raises(ConfigurationError):
        catalog.build("power_law", 2, 2, {"gamma": 1})
    with pytest.raises(ConfigurationError):
        catalog.build("constant", 2, 2, {"matrix": [[1.0]]})
    assert np.linalg.norm(catalog.default_operator(3, 4)) == pytest.approx(1.0)
