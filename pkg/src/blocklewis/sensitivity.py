"""l_p sensitivities of rows and sensitivity-based sampling plans.

The sensitivity of row ``i`` is ``max_x |<a_i, x>|^p / ||A x||_p^p``.  At
``p = 2`` it is the leverage score; for ``n <= 3`` we compute it by a dense
search over directions; otherwise only the Lewis lower bound is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .grouped import GroupedMatrix, leverage_scores
from .sampling import SamplingPlan, sample_count_real
from .solvers import fixed_point_blw

METHODS = ("exact", "exact-leverage", "grid-oracle", "lewis-lower-bound")


@dataclass
class SensitivityVector:
    s: np.ndarray
    p: float
    method: str

    @property
    def is_bound(self) -> bool:
        return self.method == "lewis-lower-bound"


def _ratios(a: np.ndarray, xs: np.ndarray, p: float) -> np.ndarray:
    """``|<a_i, x>|^p / ||A x||_p^p`` for each direction (columns of the result)."""
    y = np.abs(a @ xs.T)
    if p != 1:
        y **= p
    tot = y.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(tot > 0, y / np.where(tot > 0, tot, 1.0), 0.0)
    return out


def _kink_directions(a: np.ndarray) -> np.ndarray:
    """Directions where ``n - 1`` rows vanish (unit vectors, one per candidate).

    At ``p = 1`` the ratio is quasi-linear on every sign cone, so its maximum
    is attained on one of these rays; for other ``p`` they are extra probes.
    """
    n = a.shape[1]
    if n == 2:
        dirs = np.column_stack([-a[:, 1], a[:, 0]])
    else:
        i, j = np.triu_indices(a.shape[0], 1)
        dirs = np.cross(a[i], a[j])
    norms = np.linalg.norm(dirs, axis=1)
    return dirs[norms > 0] / norms[norms > 0, None]


def _grid_2d(a: np.ndarray, p: float, num: int, chunk: int = 100_000) -> np.ndarray:
    k = a.shape[0]
    step = math.pi / num
    kinks = _kink_directions(a)
    r = _ratios(a, kinks, p)
    idx = np.argmax(r, axis=1)
    best = r[np.arange(k), idx]
    best_theta = np.arctan2(kinks[idx, 1], kinks[idx, 0])
    for start in range(0, num, chunk):
        theta = (np.arange(start, min(start + chunk, num)) + 0.5) * step
        r = _ratios(a, np.column_stack([np.cos(theta), np.sin(theta)]), p)
        idx = np.argmax(r, axis=1)
        val = r[np.arange(k), idx]
        better = val > best
        best[better] = val[better]
        best_theta[better] = theta[idx[better]]

    def neg(theta, i):
        return -_ratios(a, np.array([[math.cos(theta), math.sin(theta)]]), p)[i, 0]

    for i in range(k):
        res = optimize.minimize_scalar(neg, bounds=(best_theta[i] - step, best_theta[i] + step),
                                       args=(i,), method="bounded",
                                       options={"xatol": 1e-12})
        best[i] = max(best[i], -res.fun)
    return best


def _fibonacci_hemisphere(num: int) -> np.ndarray:
    i = np.arange(num) + 0.5
    z = i / num
    r = np.sqrt(1.0 - z ** 2)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _grid_3d(a: np.ndarray, p: float, num: int, chunk: int = 50_000) -> np.ndarray:
    k = a.shape[0]
    kinks = _kink_directions(a)
    r = _ratios(a, kinks, p)
    idx = np.argmax(r, axis=1)
    best = r[np.arange(k), idx]
    best_x = kinks[idx]
    pts = _fibonacci_hemisphere(num)
    for start in range(0, num, chunk):
        xs = pts[start:start + chunk]
        r = _ratios(a, xs, p)
        idx = np.argmax(r, axis=1)
        val = r[np.arange(k), idx]
        better = val > best
        best[better] = val[better]
        best_x[better] = xs[idx[better]]

    def neg(x, i):
        return -_ratios(a, x[None, :], p)[i, 0]

    if p == 1:
        return best
    for i in range(k):
        res = optimize.minimize(neg, best_x[i], args=(i,), method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        best[i] = max(best[i], -res.fun)
    return best


def grid_sensitivities(a, p: float, num: int | None = None) -> np.ndarray:
    """Direction search for ``n <= 3`` followed by local refinement."""
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    if n == 1:
        y = np.abs(a[:, 0]) ** p
        return y / y.sum() if y.sum() > 0 else np.zeros_like(y)
    if n == 2:
        return _grid_2d(a, p, num or 1_000_000)
    if n == 3:
        return _grid_3d(a, p, num or 200_000)
    raise ValueError("grid search is limited to n <= 3")


def lewis_lower_bounds(a, p: float) -> np.ndarray:
    """``lambda_i n^{p/2}`` with ``lambda`` the l_p Lewis measure (``0 < p < 4``).

    The measure comes from the unfloored fixed-point iteration: the 1/m floor
    of the contraction iteration inflates rows with tiny Lewis weight and
    would break the bound there.
    """
    a = np.asarray(a, dtype=float)
    g = GroupedMatrix(a, [[j] for j in range(a.shape[0])], 2.0, p)
    b = fixed_point_blw(g).b
    return b / b.sum() * g.n ** (p / 2.0)


def sensitivities(a, p: float, method: str = "exact") -> SensitivityVector:
    """Row sensitivities; ``exact`` means leverage scores or the grid oracle."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("a must be a matrix")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n = a.shape[1]
    if method == "lewis-lower-bound":
        return SensitivityVector(lewis_lower_bounds(a, p), p, method)
    if p == 2 and method in ("exact", "exact-leverage"):
        return SensitivityVector(leverage_scores(a).tau, p, "exact-leverage")
    if method == "exact-leverage":
        raise ValueError("exact-leverage requires p = 2")
    if n > 3:
        raise ValueError(f"exact sensitivities need p = 2 or n <= 3 (got p = {p}, n = {n})")
    return SensitivityVector(grid_sensitivities(a, p), p, "grid-oracle")


def sensitivity_plan(sv: SensitivityVector, n: int, eps: float, delta: float,
                     c_sample: float = 1.0, c_h: float = 1.0) -> SamplingPlan:
    """Sample rows proportionally to their sensitivities (``1 <= p <= 2``)."""
    p = sv.p
    if not 1 <= p <= 2:
        raise ValueError(f"sensitivity sampling needs 1 <= p <= 2, got {p}")
    s = np.asarray(sv.s, dtype=float)
    total = s.sum()
    if not total > 0:
        raise ValueError("sensitivities sum to zero")
    rho = s / total
    h = c_h * n ** (-p / 2.0) * total
    # Same polylog shape as the block-Lewis count, with F* H replaced by sum(s) n^{1-p/2}.
    real = sample_count_real(n, eps, delta, 2.0, 1.0, total * n ** (1.0 - p / 2.0), 1.0, c_sample)
    return SamplingPlan(rho, h, max(1, math.ceil(real)), eps, delta, 1.0, c_sample,
                        m_tilde_real=real)
