"""Tensor-product parameter grids."""

import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from core.errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Cartesian product of per-dimension equispaced samples.

    Points are enumerated with the last dimension varying fastest.
    """

    axes: Tuple[np.ndarray, ...]
    points: np.ndarray

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(len(axis) for axis in self.axes)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)


def make_grid(a: Sequence[float], b: Sequence[float], n: Sequence[int]) -> Grid:
    """
    Build the grid a_i + j h_i, h_i = (b_i - a_i) / (n_i - 1), j = 0..n_i-1.

    Args:
        a: Lower corner
        b: Upper corner
        n: Points per dimension (each >= 2)

    Raises:
        ConfigurationError: For degenerate intervals or fewer than 2 points
    """
    if not (len(a) == len(b) == len(n)):
        raise ConfigurationError(f"grid corners and counts differ in length: {len(a)}, {len(b)}, {len(n)}")
    axes = []
    for lo, hi, count in zip(a, b, n):
        if not lo < hi:
            raise ConfigurationError(f"degenerate grid interval [{lo}, {hi}]")
        if count < 2:
            raise ConfigurationError(f"grid needs at least 2 points per dimension, got {count}")
        axes.append(np.linspace(lo, hi, int(count)))
    points = np.array(list(itertools.product(*axes)), dtype=np.float64).reshape(-1, len(axes))
    return Grid(axes=tuple(axes), points=points)


def domain_grid(domain: np.ndarray, n: Sequence[int]) -> Grid:
    """Grid over a box given as a d x 2 array of [low, high] rows."""
    domain = np.asarray(domain, dtype=np.float64)
    return make_grid(domain[:, 0], domain[:, 1], n)
