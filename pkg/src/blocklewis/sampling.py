"""Importance-sampling sparsifiers of block norm objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grouped import GroupedMatrix, group_inner_norms, leverage_scores
from .solvers import BlwCertificate


@dataclass
class SamplingPlan:
    rho: np.ndarray
    h: float
    m_tilde: int
    eps: float
    delta: float
    p_cap: float
    c_sample: float
    # Unrounded count, kept so scaling laws can be checked before the ceiling.
    m_tilde_real: float = math.nan
    alpha_p: Optional[np.ndarray] = None


@dataclass
class Sparsifier:
    """Reweighted multiset of groups.

    ``draws`` holds one group index per draw and ``coeff`` the matching
    ``1/(m_tilde * rho_i)``.  ``source`` is the matrix the draws refer to.
    """

    draws: np.ndarray
    coeff: np.ndarray
    source: GroupedMatrix = field(repr=False)

    @property
    def m_tilde(self) -> int:
        return int(self.draws.size)

    def merged(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct groups with the coefficients of their duplicates summed."""
        groups, inverse = np.unique(self.draws, return_inverse=True)
        return groups, np.bincount(inverse, weights=self.coeff)


def _check_unit(name, value):
    if not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def sample_count_real(n, eps, delta, p, p_cap, f_star, h, c_sample) -> float:
    """``c log2(1/delta) eps^-2 (log2 n)^2 log2(n/eps) H P F*^max(1, p/2)``.

    ``log2 n`` is floored at 1 so that ``n = 1`` does not collapse the count.
    """
    _check_unit("eps", eps)
    _check_unit("delta", delta)
    for name, v in (("n", n), ("p", p), ("p_cap", p_cap), ("f_star", f_star), ("h", h),
                    ("c_sample", c_sample)):
        if not v > 0 or not math.isfinite(v):
            raise ValueError(f"{name} must be positive and finite, got {v}")
    log_n = max(math.log2(n), 1.0)
    return (c_sample * math.log2(1.0 / delta) * eps ** -2 * log_n ** 2
            * math.log2(n / eps) * h * p_cap * f_star ** max(1.0, p / 2.0))


def sample_count(n, eps, delta, p, p_cap, f_star, h, c_sample) -> int:
    return max(1, math.ceil(sample_count_real(n, eps, delta, p, p_cap, f_star, h, c_sample)))


def build_plan(cert: BlwCertificate, eps: float, delta: float, c_sample: float = 1.0) -> SamplingPlan:
    """Sample proportionally to ``alpha_i^p`` with slack ``H = 1``."""
    alpha_p = np.asarray(cert.alpha, dtype=float) ** cert.p
    total = alpha_p.sum()
    if not total > 0 or not np.isfinite(total):
        raise ValueError("certificate has an all-zero or non-finite alpha vector")
    rho = alpha_p / total
    real = sample_count_real(cert.n, eps, delta, cert.p, cert.p_cap, cert.f_star, 1.0, c_sample)
    return SamplingPlan(rho, 1.0, max(1, math.ceil(real)), eps, delta, cert.p_cap, c_sample,
                        m_tilde_real=real, alpha_p=alpha_p)


def identity_plan(g: GroupedMatrix) -> SamplingPlan:
    """Uniform plan with ``m_tilde = m``; pairs with ``identity_sparsifier``."""
    m = g.m
    return SamplingPlan(np.full(m, 1.0 / m), 1.0, m, math.nan, math.nan, math.nan, math.nan,
                        m_tilde_real=float(m))


def identity_sparsifier(g: GroupedMatrix) -> Sparsifier:
    """Every group exactly once with coefficient 1."""
    return Sparsifier(np.arange(g.m), np.ones(g.m), g)


def draw_sparsifier(g: GroupedMatrix, plan: SamplingPlan, rng: np.random.Generator) -> Sparsifier:
    """``m_tilde`` independent draws from ``rho`` by inverting the cumulative table."""
    rho = np.asarray(plan.rho, dtype=float)
    if rho.shape != (g.m,):
        raise ValueError(f"plan has {rho.size} groups, matrix has {g.m}")
    cdf = np.cumsum(rho)
    cdf /= cdf[-1]
    uniforms = rng.random(plan.m_tilde)
    draws = np.searchsorted(cdf, uniforms, side="right")
    # Guard against a uniform landing exactly on a trailing flat stretch.
    draws = np.minimum(draws, np.flatnonzero(rho > 0)[-1])
    coeff = 1.0 / (plan.m_tilde * rho[draws])
    return Sparsifier(draws, coeff, g)


def eval_sparsifier(s: Sparsifier, x) -> float:
    """``sum_draws coeff * ||A_{S_i} x||_{p_i}^p``."""
    norms = group_inner_norms(s.source, x) ** s.source.outer_p
    return float(np.dot(s.coeff, norms[s.draws]))


def _probe_directions(g: GroupedMatrix, num_probes: int, rng: np.random.Generator,
                      row_budget: int = 256) -> np.ndarray:
    n, k = g.n, g.k
    dirs = [np.eye(n)]
    rows = np.arange(k) if k <= row_budget else rng.choice(k, row_budget, replace=False)
    # Pull each row back to the x that makes A x proportional to that row's own direction.
    pinv = np.linalg.pinv(g.a.T @ g.a)
    dirs.append(g.a[rows] @ pinv)
    dirs.append(rng.standard_normal((num_probes, n)))
    return np.vstack(dirs)


def distortion_probe(g: GroupedMatrix, s: Sparsifier, num_probes: int,
                     rng: np.random.Generator, return_samples: bool = False):
    """Largest relative deviation of the sparsifier over a probe set.

    Probes are the coordinate directions, (a subsample of) the row
    directions pulled back through ``(A^T A)^+``, and ``num_probes`` Gaussian
    directions.  This is a lower bound on the true sup distortion.
    """
    if num_probes < 1:
        raise ValueError("num_probes must be at least 1")
    dirs = _probe_directions(g, num_probes, rng)
    worst = 0.0
    samples = []
    for x in dirs:
        exact = float(np.sum(group_inner_norms(g, x) ** g.outer_p))
        if exact <= 0:
            continue
        dev = abs(eval_sparsifier(s, x) - exact) / exact
        samples.append((exact, dev))
        worst = max(worst, dev)
    if return_samples:
        return worst, samples
    return worst


def exact_distortion_quadratic(g: GroupedMatrix, s: Sparsifier) -> tuple[float, float]:
    """Extreme eigenvalues of ``M_s`` relative to ``M = A^T A`` on range(A).

    Only defined for ``p = 2`` with every inner exponent 2, where both the
    block norm and the sparsifier are quadratic forms.
    """
    if g.outer_p != 2 or np.any(g.inner_p != 2):
        raise ValueError("exact distortion needs p = 2 and every inner exponent 2")
    u, sv, vt = np.linalg.svd(g.a, full_matrices=False)
    rank = leverage_scores(g.a).rank
    if rank == 0:
        return 1.0, 1.0
    r = vt[:rank].T / sv[:rank]
    groups, coeff = s.merged()
    rows = np.concatenate([g.groups[i] for i in groups])
    weights = np.concatenate([np.full(g.groups[i].size, c) for i, c in zip(groups, coeff)])
    y = g.a[rows] @ r
    pencil = y.T @ (weights[:, None] * y)
    ev = np.linalg.eigvalsh(0.5 * (pencil + pencil.T))
    return float(ev[0]), float(ev[-1])
