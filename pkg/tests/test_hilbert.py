import numpy as np
import pytest

from cylstable.errors import ConfigurationError
from cylstable.hilbert import (
    ContractionOperator, HSOperator, HVector, TruncationConfig, adjoint, compose, hs_norm,
    operator_from_csv, operator_from_json, operator_to_csv, operator_to_json, random_contraction,
    random_hs_operator, singular_decomposition,
)


def test_truncation_config_rejects_nonpositive():
    assert TruncationConfig(3, 2).d_G == 3
    with pytest.raises(ConfigurationError):
        TruncationConfig(0, 2)
    with pytest.raises(ConfigurationError):
        TruncationConfig(2, -1)


def test_hvector_norm():
    assert HVector([3.0, 4.0]).norm() == pytest.approx(5.0)


@pytest.mark.parametrize("m, expected", [
    (np.zeros((2, 2)), 0.0),
    (np.eye(2), np.sqrt(2.0)),
    (np.array([[3.0, 0.0], [0.0, 4.0]]), 5.0),
])
def test_hs_norm_examples(m, expected):
    assert hs_norm(HSOperator(m)) == pytest.approx(expected, abs=1e-15)


def test_hs_norm_matches_singular_values(gen):
    for _ in range(20):
        phi = random_hs_operator(gen, 5, 3)
        assert hs_norm(phi) ** 2 == pytest.approx(np.sum(phi.singular_values ** 2), rel=1e-10)
        fresh = np.linalg.svd(phi.matrix, compute_uv=False)
        np.testing.assert_allclose(phi.singular_values, fresh, atol=1e-10)


def test_adjoint_examples(gen):
    a = HSOperator([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(adjoint(a).matrix, [[1.0, 3.0], [2.0, 4.0]])
    s = HSOperator([[2.0, 1.0], [1.0, 5.0]])
    assert adjoint(s) == s
    phi = random_hs_operator(gen, 4, 3)
    for _ in range(100):
        g, h = gen.standard_normal(3), gen.standard_normal(4)
        assert np.dot(phi.matrix @ g, h) == pytest.approx(np.dot(g, adjoint(phi).matrix @ h), abs=1e-12)
    assert adjoint(adjoint(phi)) == phi
    assert hs_norm(adjoint(phi)) == pytest.approx(hs_norm(phi))


def test_compose_examples(gen):
    phi = random_hs_operator(gen, 3, 2)
    assert compose(ContractionOperator.identity(3), phi) == phi
    assert hs_norm(compose(ContractionOperator(np.zeros((3, 3))), phi)) == 0.0
    for _ in range(100):
        g = random_contraction(gen, 3)
        p = random_hs_operator(gen, 3, 4)
        assert hs_norm(compose(g, p)) <= hs_norm(p) + 1e-12


def test_compose_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        compose(ContractionOperator.identity(2), HSOperator(np.ones((3, 1))))


def test_contraction_rejects_large_norm():
    with pytest.raises(ConfigurationError):
        ContractionOperator(np.diag([1.0 + 1e-9, 0.5]))
    ContractionOperator(np.diag([1.0, 0.5]))


def test_singular_decomposition_examples(gen):
    _, s, _ = singular_decomposition(HSOperator(np.diag([3.0, 4.0])))
    np.testing.assert_allclose(s, [4.0, 3.0])
    u = np.array([0.6, 0.8, 0.0])
    v = np.array([0.0, 1.0])
    _, s, _ = singular_decomposition(HSOperator(np.outer(u, v)))
    np.testing.assert_allclose(s, [1.0, 0.0], atol=1e-12)
    phi = random_hs_operator(gen, 4, 3)
    U, s, Vt = singular_decomposition(phi)
    assert np.sum(s ** 2) == pytest.approx(hs_norm(phi) ** 2, rel=1e-10)
    assert np.linalg.norm(phi.matrix - U @ np.diag(s) @ Vt) <= 1e-10 * (1 + hs_norm(phi))
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    _, s0, _ = singular_decomposition(HSOperator.zeros(2, 3))
    np.testing.assert_array_equal(s0, 0.0)


def test_operator_is_immutable(gen):
    phi = random_hs_operator(gen, 2, 2)
    with pytest.raises(ValueError):
        phi.matrix[0, 0] = 1.0


def test_serialization_round_trip(gen):
    phi = random_hs_operator(gen, 3, 2)
    assert operator_from_json(operator_to_json(phi)) == phi
    text = operator_to_csv(phi)
    assert text.startswith("# rows=3,cols=2")
    assert operator_from_csv(text) == phi
