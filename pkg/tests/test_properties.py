import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cylstable.grid import TimeGrid
from cylstable.hilbert import HSOperator, adjoint, hs_norm, random_contraction, compose
from cylstable.integrator import integrate_step
from cylstable.processes import AdaptedStepProcess, DetStepFunction, lalpha_norm
from cylstable.sampler import sample_driving_path

floats = st.floats(-10, 10, allow_nan=False)
matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(lambda c: arrays(float, (r, c), elements=floats)))


@given(matrices)
def test_hs_norm_properties(m):
    phi = HSOperator(m)
    assert hs_norm(phi) >= 0
    assert np.isclose(hs_norm(adjoint(phi)), hs_norm(phi))
    assert np.isclose(hs_norm(2.5 * phi), 2.5 * hs_norm(phi))
    assert hs_norm(phi) >= np.linalg.norm(m, 2) - 1e-9


@given(matrices, st.integers(0, 2**32 - 1))
def test_contraction_does_not_increase_norm(m, seed):
    g = random_contraction(np.random.default_rng(seed), m.shape[0])
    assert hs_norm(compose(g, HSOperator(m))) <= hs_norm(HSOperator(m)) + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5), st.floats(0.2, 1.9),
       st.floats(-3, 3), st.integers(0, 1000))
def test_integral_scales_linearly(widths, alpha, c, seed):
    times = np.concatenate([[0.0], np.cumsum(widths)])
    grid = TimeGrid(times)
    gen = np.random.default_rng(seed)
    ops = gen.standard_normal((grid.n_cells, 2, 2))
    theta = AdaptedStepProcess.deterministic(grid, ops)
    path = sample_driving_path(alpha, (2, 2), grid, seed, 5)
    np.testing.assert_allclose(integrate_step(theta.scaled(c), path), c * integrate_step(theta, path),
                               rtol=1e-12, atol=1e-12)
    f = DetStepFunction(grid, [HSOperator(o) for o in ops])
    assert np.isclose(lalpha_norm(f.scaled(c), alpha), abs(c) ** alpha * lalpha_norm(f, alpha))
