import numpy as np
import pytest

from cylstable.errors import ConfigurationError
from cylstable.grid import TimeGrid, as_grid
from cylstable.rng import RngStream, draw, set_threads


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        TimeGrid([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ConfigurationError):
        TimeGrid([0.1, 1.0])
    with pytest.raises(ConfigurationError):
        TimeGrid([0.0])
    g = TimeGrid.uniform(2.0, 4)
    assert g.T == 2.0 and g.n_cells == 4 and g.mesh == pytest.approx(0.5)


def test_embedding():
    fine = TimeGrid.dyadic(1.0, 3)
    np.testing.assert_array_equal(TimeGrid.dyadic(1.0, 1).embedding(fine), [0, 4, 8])
    with pytest.raises(ConfigurationError):
        TimeGrid.uniform(1.0, 3).embedding(fine)


def test_as_grid_forms():
    assert as_grid({"T": 1.0, "M": 2}) == TimeGrid([0.0, 0.5, 1.0])
    assert as_grid({"times": [0, 1]}) == TimeGrid([0.0, 1.0])
    assert as_grid([0.0, 0.25, 1.0]).n_cells == 2


def test_streams_reproducible_and_distinct():
    a = RngStream(7, 1).generator().standard_normal(5)
    b = RngStream(7, 1).generator().standard_normal(5)
    c = RngStream(7, 2).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert RngStream(7).child("x").same_as(RngStream(7).child("x"))
    assert not RngStream(7).child("x").same_as(RngStream(7).child("y"))


def test_draw_independent_of_threads():
    def fn(g, k):
        return g.standard_normal(k)

    try:
        set_threads(1)
        one = draw(fn, 20000, RngStream(3), block_size=4096)
        set_threads(4)
        four = draw(fn, 20000, RngStream(3), block_size=4096)
    finally:
        set_threads(1)
    np.testing.assert_array_equal(one, four)
