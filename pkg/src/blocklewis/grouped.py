"""Grouped matrices, block norms and leverage scores.

A grouped matrix is a dense ``k x n`` matrix whose rows are partitioned into
``m`` groups.  Each group carries an inner exponent ``p_i`` and the whole
structure carries an outer exponent ``p``; the block norm of ``A x`` is

    (sum_i ||A_{S_i} x||_{p_i}^p)^(1/p).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Floor applied to diagonal weights before taking (possibly negative) powers.
WEIGHT_FLOOR = 1e-300


class PartitionError(ValueError):
    """Raised when a group specification is not a partition of the rows."""


@dataclass(frozen=True)
class LeverageVector:
    tau: np.ndarray
    rank: int


class GroupedMatrix:
    """Matrix ``a`` with a row partition, inner exponents and an outer exponent.

    ``inner_p`` may be a scalar (broadcast to every group) or one value per
    group; ``np.inf`` is accepted for norm evaluation only.  Instances are
    read-only.
    """

    __slots__ = ("a", "groups", "inner_p", "outer_p", "row_group")

    def __init__(self, a, groups: Sequence[Sequence[int]], inner_p=2.0, outer_p=2.0):
        a = np.array(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"matrix must be 2-D and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        k = a.shape[0]

        groups = tuple(np.asarray(g, dtype=np.int64).reshape(-1) for g in groups)
        if len(groups) == 0:
            raise PartitionError("at least one group is required")
        owner = np.full(k, -1, dtype=np.int64)
        for i, g in enumerate(groups):
            if g.size == 0:
                raise PartitionError(f"group {i} is empty")
            for j in g:
                if j < 0 or j >= k:
                    raise PartitionError(f"group {i} refers to row {j}, outside [0, {k})")
                if owner[j] >= 0:
                    raise PartitionError(
                        f"row {j} appears in group {owner[j]} and group {i}")
                owner[j] = i
        missing = np.flatnonzero(owner < 0)
        if missing.size:
            raise PartitionError(f"row {missing[0]} is not covered by any group")

        inner = np.asarray(inner_p, dtype=float)
        if inner.ndim == 0:
            inner = np.full(len(groups), float(inner))
        if inner.shape != (len(groups),):
            raise ValueError(
                f"inner_p must be a scalar or have one entry per group ({len(groups)})")
        if np.any(np.isnan(inner)) or np.any(inner <= 0):
            raise ValueError("inner exponents must be positive")
        outer_p = float(outer_p)
        if not np.isfinite(outer_p) or outer_p <= 0:
            raise ValueError("outer exponent must be positive and finite")

        for g in groups:
            g.setflags(write=False)
        a.setflags(write=False)
        inner.setflags(write=False)
        owner.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "inner_p", inner)
        object.__setattr__(self, "outer_p", outer_p)
        object.__setattr__(self, "row_group", owner)

    def __setattr__(self, name, value):
        raise AttributeError("GroupedMatrix is immutable")

    def __repr__(self):
        return (f"GroupedMatrix(k={self.k}, n={self.n}, m={self.m}, "
                f"outer_p={self.outer_p}, inner_p={np.unique(self.inner_p).tolist()})")

    @classmethod
    def uniform(cls, a, group_size: int, inner_p=2.0, outer_p=2.0) -> "GroupedMatrix":
        """Consecutive groups of ``group_size`` rows (the last may be shorter)."""
        k = np.asarray(a).shape[0]
        groups = [list(range(s, min(s + group_size, k))) for s in range(0, k, group_size)]
        return cls(a, groups, inner_p, outer_p)

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array([g.size for g in self.groups])

    def expand(self, values) -> np.ndarray:
        """Spread a length-m vector down the rows (block-constant expansion)."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.m,):
            raise ValueError(f"expected a length-{self.m} vector, got shape {values.shape}")
        return values[self.row_group]

    def group_sum(self, row_values) -> np.ndarray:
        """Sum a length-k vector within each group."""
        return np.bincount(self.row_group, weights=row_values, minlength=self.m)

    def with_exponents(self, inner_p=None, outer_p=None) -> "GroupedMatrix":
        return GroupedMatrix(
            self.a, self.groups,
            self.inner_p if inner_p is None else inner_p,
            self.outer_p if outer_p is None else outer_p,
        )

    def subset_norms(self, y) -> np.ndarray:
        """Per-group ``||y_{S_i}||_{p_i}`` for a length-k vector ``y``."""
        y = np.abs(np.asarray(y, dtype=float))
        out = np.empty(self.m)
        for i, (g, q) in enumerate(zip(self.groups, self.inner_p)):
            yi = y[g]
            if np.isinf(q):
                out[i] = yi.max()
            else:
                top = yi.max()
                out[i] = 0.0 if top == 0 else top * np.sum((yi / top) ** q) ** (1.0 / q)
        return out


def _check_x(g: GroupedMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (g.n,):
        raise ValueError(f"x must have length {g.n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x has non-finite entries")
    return x


def group_inner_norms(g: GroupedMatrix, x) -> np.ndarray:
    """Vector of ``||A_{S_i} x||_{p_i}``, one entry per group."""
    return g.subset_norms(g.a @ _check_x(g, x))


def block_norm_p(g: GroupedMatrix, x) -> float:
    """p-th power of the block norm, ``sum_i ||A_{S_i} x||_{p_i}^p``."""
    return float(np.sum(group_inner_norms(g, x) ** g.outer_p))


def block_norm(g: GroupedMatrix, x) -> float:
    norms = group_inner_norms(g, x)
    top = norms.max()
    if top == 0:
        return 0.0
    p = g.outer_p
    return float(top * np.sum((norms / top) ** p) ** (1.0 / p))


def leverage_scores(m_in, rtol: float | None = None) -> LeverageVector:
    """Leverage scores from the left singular vectors of ``m_in``.

    Singular values below ``max(k, n) * eps * sigma_max`` (or ``rtol *
    sigma_max`` when given) are discarded, so rank-deficient inputs get the
    pseudoinverse convention.  The all-zero matrix has rank 0.
    """
    m_in = np.asarray(m_in, dtype=float)
    if m_in.ndim == 1:
        m_in = m_in[:, None]
    if m_in.shape[0] < 1:
        raise ValueError("matrix must have at least one row")
    if not np.all(np.isfinite(m_in)):
        raise ValueError("matrix has non-finite entries")
    u, s, _ = np.linalg.svd(m_in, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return LeverageVector(np.zeros(m_in.shape[0]), 0)
    if rtol is None:
        rtol = max(m_in.shape) * np.finfo(float).eps
    rank = int(np.sum(s > rtol * s[0]))
    tau = np.einsum("ij,ij->i", u[:, :rank], u[:, :rank])
    return LeverageVector(tau, rank)


def log_weighted_leverage_scores(a, log_d) -> LeverageVector:
    """Leverage scores of ``D^{1/2} A`` given ``log(diag(D))``.

    Weights are rescaled by their maximum first; leverage scores do not see
    a global scale, and this keeps extreme exponents from overflowing.
    """
    log_d = np.asarray(log_d, dtype=float)
    log_d = np.maximum(log_d, np.log(WEIGHT_FLOOR))
    scale = np.exp(0.5 * (log_d - log_d.max()))
    return leverage_scores(scale[:, None] * np.asarray(a, dtype=float))


def weighted_leverage_scores(a, d) -> LeverageVector:
    """Leverage scores of ``D^{1/2} A`` for a nonnegative diagonal ``d``."""
    d = np.asarray(d, dtype=float)
    if d.shape != (np.shape(a)[0],):
        raise ValueError("d must have one entry per row of a")
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("diagonal weights must be nonnegative")
    return log_weighted_leverage_scores(a, np.log(np.maximum(d, WEIGHT_FLOOR)))


def quadratic_forms(a, log_d) -> np.ndarray:
    """``a_j^T (A^T D A)^+ a_j`` for every row, with ``D`` given in log form."""
    log_d = np.maximum(np.asarray(log_d, dtype=float), np.log(WEIGHT_FLOOR))
    tau = log_weighted_leverage_scores(a, log_d).tau
    return tau * np.exp(-log_d)
