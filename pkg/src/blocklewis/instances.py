"""Random test instances shared by the experiment scripts and the test-suite."""

from __future__ import annotations

import numpy as np

from .grouped import GroupedMatrix
from .msn import MsnInstance


def random_grouped(rng: np.random.Generator, k: int, n: int, group_size: int,
                   p: float = 2.0, inner_p=2.0, heavy: bool = True) -> GroupedMatrix:
    """Gaussian rows, optionally with lognormal row scales so importances differ."""
    a = rng.standard_normal((k, n))
    if heavy:
        a *= np.exp(rng.standard_normal(k))[:, None]
    return GroupedMatrix.uniform(a, group_size, inner_p, p)


def random_msn(rng: np.random.Generator, m: int, n: int, group_size: int = 2,
               noise: float = 1.0) -> MsnInstance:
    """Planted regression ``b = A x* + noise`` with heavy-tailed group scales."""
    k = m * group_size
    a = rng.standard_normal((k, n)) * np.exp(0.5 * rng.standard_normal(k))[:, None]
    x_star = rng.standard_normal(n)
    b = a @ x_star + noise * rng.standard_normal(k)
    groups = [list(range(i * group_size, (i + 1) * group_size)) for i in range(m)]
    return MsnInstance(a, groups, b)


def geometric_median(rng: np.random.Generator, num_points: int, dim: int) -> MsnInstance:
    pts = rng.standard_normal((num_points, dim))
    a = np.tile(np.eye(dim), (num_points, 1))
    groups = [list(range(i * dim, (i + 1) * dim)) for i in range(num_points)]
    return MsnInstance(a, groups, pts.ravel())
