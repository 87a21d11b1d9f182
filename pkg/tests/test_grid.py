"""Tests for tensor-product grids."""

import numpy as np
import pytest

from core.errors import ConfigurationError
from greedy.grid import domain_grid, make_grid


class TestMakeGrid:
    def test_counts_and_endpoints(self):
        grid = make_grid([0.0, -1.0], [1.0, 1.0], [3, 5])
        assert len(grid) == 15
        assert grid.counts == (3, 5)
        assert grid.d == 2
        np.testing.assert_allclose(grid.axes[0], [0.0, 0.5, 1.0])
        np.testing.assert_allclose(grid.axes[1], [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_last_dimension_varies_fastest(self):
        grid = make_grid([0.0, 0.0], [1.0, 1.0], [2, 3])
        np.testing.assert_allclose(grid.points, [
            [0.0, 0.0], [0.0, 0.5], [0.0, 1.0],
            [1.0, 0.0], [1.0, 0.5], [1.0, 1.0],
        ])

    def test_one_dimension(self):
        grid = make_grid([2.0], [4.0], [5])
        assert grid.points.shape == (5, 1)
        np.testing.assert_allclose(grid.points[:, 0], [2.0, 2.5, 3.0, 3.5, 4.0])

    def test_deterministic(self):
        first = make_grid([-0.5, -0.5], [0.5, 0.5], [25, 25])
        second = make_grid([-0.5, -0.5], [0.5, 0.5], [25, 25])
        assert np.array_equal(first.points, second.points)

    def test_iteration(self):
        grid = make_grid([0.0], [1.0], [2])
        assert [float(p[0]) for p in grid] == [0.0, 1.0]

    @pytest.mark.parametrize("a, b, n", [
        ([1.0], [1.0], [3]),
        ([1.0], [0.0], [3]),
        ([0.0], [1.0], [1]),
        ([0.0, 0.0], [1.0], [3, 3]),
    ])
    def test_invalid(self, a, b, n):
        with pytest.raises(ConfigurationError):
            make_grid(a, b, n)


def test_domain_grid():
    grid = domain_grid(np.array([[0.1, 1.0], [100.0, 1000.0]]), (4, 2))
    assert len(grid) == 8
    np.testing.assert_allclose(grid.points[0], [0.1, 100.0])
    np.testing.assert_allclose(grid.points[-1], [1.0, 1000.0])
