"""Block Lewis weight overestimates and their certificates.

Three iterative schemes produce a weight vector ``b`` over the groups:

* ``contractive_blw``: floored fixed-point iteration of the map ``psi``,
  valid for ``0 < p < 4`` with every inner exponent equal to 2;
* ``averaging_blw``: averaged leverage-score iteration for ``p >= 2``,
  inner exponents 2;
* ``inner_blw``: alternating inner/outer reweighting for ``p = 2`` and
  inner exponents ``>= 2``.

``blw_convert`` turns weights into a measure ``lambda`` over the groups and a
diagonal rounding ``w`` over the rows, and ``certify_overestimate`` measures
the tightest ``F*`` such that the pair is an ``F*``-overestimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grouped import (
    WEIGHT_FLOOR,
    GroupedMatrix,
    leverage_scores,
    log_weighted_leverage_scores,
    quadratic_forms,
)

log = logging.getLogger(__name__)

OverLev = Callable[[np.ndarray], np.ndarray]

ALGORITHMS = ("contractive", "averaging", "inner", "fixed-point", "user")


def exact_overlev(mat: np.ndarray) -> np.ndarray:
    """Exact leverage scores; an ``rank(mat)``-bounded overestimate."""
    return leverage_scores(mat).tau


@dataclass
class BlwWeights:
    """Block Lewis weight overestimates ``b`` (one entry per group).

    ``bound`` is the F* value the producing algorithm advertises, and
    ``certified_regime`` is False when the algorithm ran outside the
    exponent range its guarantee covers.
    """

    b: np.ndarray
    algorithm: str
    iterations: int
    p: float
    bound: float = math.inf
    certified_regime: bool = True
    nu: float = math.nan


@dataclass
class InnerWeights:
    u: np.ndarray
    b_bar: np.ndarray


@dataclass
class BlwCertificate:
    lam: np.ndarray
    w: np.ndarray
    alpha: np.ndarray
    f_star: float
    algorithm: str
    p: float
    n: int
    p_cap: float
    b: Optional[np.ndarray] = None
    rounding_ok: bool = True
    notes: list = field(default_factory=list)

    @property
    def alpha_p(self) -> np.ndarray:
        return self.alpha ** self.p


def _require_positive(b, name="b"):
    b = np.asarray(b, dtype=float)
    if np.any(~np.isfinite(b)) or np.any(b <= 0):
        raise ValueError(f"{name} must be strictly positive and finite")
    return b


def _require_finite_inner(g: GroupedMatrix):
    if np.any(np.isinf(g.inner_p)):
        raise ValueError("infinite inner exponents are supported in norm evaluation only")


def p_cap(g: GroupedMatrix) -> float:
    """``max(1, max_i min(p_i, log2 |S_i|))``."""
    return float(max(1.0, np.max(np.minimum(g.inner_p, np.log2(g.group_sizes)))))


def _group_pnorm(g: GroupedMatrix, row_values: np.ndarray, scale_exp: float) -> np.ndarray:
    """``(sum_{j in S_i} row_values_j^{p_i/2})^{scale_exp/p_i}`` for every group."""
    q = g.inner_p
    powered = row_values ** (0.5 * g.expand(q))
    return g.group_sum(powered) ** (scale_exp / q)


def psi_map(g: GroupedMatrix, b) -> np.ndarray:
    """One application of the block Lewis map.

    ``psi_i(b) = (sum_{j in S_i} (a_j^T (A^T B^{1-2/p} A)^{-1} a_j)^{p_i/2})^{p/p_i}``
    where ``B`` spreads ``b`` down the rows.
    """
    p = g.outer_p
    if not 0 < p < 4:
        raise ValueError(f"psi_map needs 0 < p < 4, got p = {p}")
    _require_finite_inner(g)
    b = _require_positive(b)
    if b.shape != (g.m,):
        raise ValueError(f"b must have length {g.m}")
    quad = quadratic_forms(g.a, (1.0 - 2.0 / p) * np.log(g.expand(b)))
    return _group_pnorm(g, quad, p)


def beta_weights(g: GroupedMatrix, v) -> np.ndarray:
    """``beta_i(V) = (sum_{j in S_i} (a_j^T (A^T V A)^+ a_j)^{p_i/2})^{1/p_i}``."""
    _require_finite_inner(g)
    v = _require_positive(v, "v")
    if v.shape != (g.k,):
        raise ValueError(f"v must have length {g.k}")
    quad = quadratic_forms(g.a, np.log(v))
    return _group_pnorm(g, quad, 1.0)


def contraction_iterations(m: int, n: int, p: float, eps: float = 0.1) -> int:
    """Iteration count ``ceil(ln(ln(m/n)/ln(1+eps)) / ln(2/|2-p|))``, at least 1."""
    if p == 2 or m <= n:
        return 1
    inner = math.log(m / n) / math.log1p(eps)
    if inner <= 1:
        return 1
    return max(1, math.ceil(math.log(inner) / math.log(2.0 / abs(2.0 - p))))


def _zero_groups(g: GroupedMatrix) -> np.ndarray:
    row_zero = ~np.any(g.a != 0, axis=1)
    return g.group_sum(row_zero.astype(float)) == g.group_sizes


def contractive_blw(g: GroupedMatrix, eps: float = 0.1, iterations: Optional[int] = None) -> BlwWeights:
    """Floored contraction iteration, returning ``1.1 * b^(T)``."""
    p = g.outer_p
    if not 0 < p < 4:
        raise ValueError(f"contractive iteration needs 0 < p < 4 (got p = {p})")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _require_finite_inner(g)
    m, n = g.m, g.n
    t_count = contraction_iterations(m, n, p, eps) if iterations is None else int(iterations)
    if t_count < 1:
        raise ValueError("iterations must be positive")
    regime = bool(np.all(g.inner_p == 2))
    if not regime:
        log.info("contractive_blw with inner exponents != 2: output is not covered by the "
                 "contraction guarantee and relies on certification")
    floor = 1.0 / m
    b = np.full(m, n / m)
    for _ in range(t_count):
        b = np.maximum(psi_map(g, b), floor)
    return BlwWeights(1.1 * b, "contractive", t_count, p,
                      bound=1.1 * (n + 1), certified_regime=regime, nu=float(n))


def fixed_point_blw(g: GroupedMatrix, max_iter: int = 500, tol: float = 1e-13,
                    floor: float = WEIGHT_FLOOR) -> BlwWeights:
    """Fixed point of ``b -> max(psi(b), floor)`` by plain iteration (``0 < p < 4``).

    The default floor only guards against underflow; ``floor = 1/m`` gives the
    point the contraction iteration converges to.
    """
    b = np.full(g.m, g.n / g.m)
    it = 0
    for it in range(1, max_iter + 1):
        nxt = np.maximum(psi_map(g, b), floor)
        step = np.max(np.abs(np.log(nxt / b)))
        b = nxt
        if step < tol:
            break
    return BlwWeights(b, "fixed-point", it, g.outer_p, bound=float(g.n),
                      certified_regime=bool(np.all(g.inner_p == 2)), nu=float(g.n))


def default_averaging_iterations(m: int) -> int:
    return math.ceil(4.0 * math.log(max(m, 3)))


def averaging_blw(g: GroupedMatrix, t_iters: Optional[int] = None,
                  overlev: OverLev = exact_overlev) -> BlwWeights:
    """Averaged leverage-score iteration for ``p >= 2``; returns ``1.5 * mean``.

    The ``T`` averaged iterates include the uniform start ``n/m``, so the run
    performs ``T - 1`` leverage computations.
    """
    p = g.outer_p
    if p < 2:
        raise ValueError(f"averaging iteration needs p >= 2 (got p = {p})")
    if np.any(g.inner_p != 2):
        raise ValueError("averaging iteration needs every inner exponent equal to 2")
    t_count = default_averaging_iterations(g.m) if t_iters is None else int(t_iters)
    if t_count < 1:
        raise ValueError("t_iters must be positive")
    b = np.full(g.m, g.n / g.m)
    total = b.copy()
    nu = float(g.n)
    for _ in range(t_count - 1):
        log_d = (1.0 - 2.0 / p) * np.log(g.expand(b))
        scale = np.exp(0.5 * (log_d - log_d.max()))
        tau = np.asarray(overlev(scale[:, None] * g.a), dtype=float)
        nu = max(nu, float(tau.sum()))
        b = np.maximum(g.group_sum(tau), WEIGHT_FLOOR)
        total += b
    b_bar = total / t_count
    out = 1.5 * b_bar
    zero = _zero_groups(g)
    out[zero] = np.maximum(out[zero], 1.0 / g.m)
    return BlwWeights(out, "averaging", t_count, p, bound=1.5 * nu, nu=nu)


def averaging_potential(g: GroupedMatrix, b) -> np.ndarray:
    """``phi_i(b) = ln((1/b_i) sum_{j in S_i} tau_j(B^{1/2-1/p} A))``."""
    b = _require_positive(b)
    tau = log_weighted_leverage_scores(g.a, (1.0 - 2.0 / g.outer_p) * np.log(g.expand(b))).tau
    return np.log(g.group_sum(tau) / b)


def default_inner_iterations(g: GroupedMatrix) -> int:
    return max(1, int(np.max(np.ceil(np.log2(g.group_sizes)))))


def _inner_v(g: GroupedMatrix, u: np.ndarray) -> np.ndarray:
    """``v_j = u_j^{1 - 2/p_i}``; rows of ``p_i = 2`` groups get 1."""
    q = g.expand(g.inner_p)
    return np.maximum(u, WEIGHT_FLOOR) ** (1.0 - 2.0 / q)


def inner_blw(g: GroupedMatrix, t_iters: Optional[int] = None,
              overlev: OverLev = exact_overlev) -> tuple[BlwWeights, InnerWeights]:
    """Alternating scheme for ``p = 2`` and inner exponents ``>= 2``."""
    if g.outer_p != 2:
        raise ValueError(f"inner iteration needs p = 2 (got p = {g.outer_p})")
    _require_finite_inner(g)
    if np.any(g.inner_p < 2):
        raise ValueError("inner iteration needs every inner exponent >= 2")
    t_count = default_inner_iterations(g) if t_iters is None else int(t_iters)
    if t_count < 1:
        raise ValueError("t_iters must be positive")
    sizes = g.group_sizes
    uniform = 1.0 / g.expand(sizes.astype(float))
    fixed = g.expand(g.inner_p) == 2
    u = uniform.copy()
    u_total = np.zeros(g.k)
    b_total = np.zeros(g.m)
    nu = 0.0
    for _ in range(t_count):
        u_total += u
        v = _inner_v(g, u)
        tau = np.asarray(overlev(np.sqrt(v / v.max())[:, None] * g.a), dtype=float)
        nu = max(nu, float(tau.sum()))
        b_t = g.group_sum(tau)
        b_total += b_t
        denom = g.expand(b_t)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(denom > 0, tau / denom, uniform)
        u[fixed] = uniform[fixed]
    scale = float(np.max(sizes)) ** (1.0 / t_count)
    b_bar = scale * b_total / t_count
    zero = _zero_groups(g)
    b_bar[zero] = np.maximum(b_bar[zero], 1.0 / g.m)
    u_bar = u_total / t_count
    weights = BlwWeights(b_bar, "inner", t_count, 2.0, bound=scale * nu, nu=nu)
    return weights, InnerWeights(u_bar, b_bar.copy())


def overestimate_profile(g: GroupedMatrix, lam, w) -> np.ndarray:
    """Per-group ``(1/lam_i) (sum_{j in S_i} (tau_j / w_j)^{p_i/2})^{2/p_i}``.

    ``tau`` are the leverage scores of ``W^{1/2} Lam^{1/2-1/p} A``.  A group
    with ``lam_i = 0`` and a nonzero aggregate gets ``+inf``.
    """
    _require_finite_inner(g)
    lam = np.asarray(lam, dtype=float)
    w = np.asarray(w, dtype=float)
    if lam.shape != (g.m,) or w.shape != (g.k,):
        raise ValueError("lam must have length m and w length k")
    if np.any(lam < 0) or not np.isclose(lam.sum(), 1.0, rtol=0, atol=1e-9):
        raise ValueError("lam must be a probability vector")
    if np.any(w <= 0) or np.any(~np.isfinite(w)):
        raise ValueError("w must be strictly positive")
    p = g.outer_p
    lam_rows = np.maximum(g.expand(lam), WEIGHT_FLOOR)
    log_d = np.log(w) + (1.0 - 2.0 / p) * np.log(lam_rows)
    tau = log_weighted_leverage_scores(g.a, log_d).tau
    agg = _group_pnorm(g, tau / w, 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(lam > 0, agg / np.where(lam > 0, lam, 1.0), np.where(agg > 0, np.inf, 0.0))
    return out


def certify_overestimate(g: GroupedMatrix, lam, w) -> float:
    """Tightest ``F*`` for which ``(lam, w)`` is an ``F*``-block Lewis overestimate."""
    value = float(np.max(overestimate_profile(g, lam, w)))
    if math.isinf(value):
        log.warning("certificate is infinite: a group with zero measure carries mass")
    return value


def is_rounding(g: GroupedMatrix, w, tol: float = 1e-9) -> bool:
    """Groupwise Hölder test that ``w`` rounds the block 2-norm.

    For ``p_i >= 2`` the sufficient condition is
    ``||w_{S_i}||_{p_i/(p_i-2)} <= 1`` (``max w <= 1`` when ``p_i = 2``); for
    ``p_i < 2`` it is ``max w <= 1``.
    """
    w = np.asarray(w, dtype=float)
    for grp, q in zip(g.groups, g.inner_p):
        wi = w[grp]
        if q > 2 and np.isfinite(q):
            r = q / (q - 2.0)
            norm = float(np.sum(wi ** r) ** (1.0 / r))
        elif np.isinf(q):
            norm = float(np.sum(wi))
        else:
            norm = float(wi.max())
        if norm > 1.0 + tol:
            return False
    return True


def _default_rounding(g: GroupedMatrix) -> np.ndarray:
    """Uniform-within-group rounding ``|S_i|^{min(0, 2/p_i - 1)}``."""
    expo = np.minimum(0.0, 2.0 / g.inner_p - 1.0)
    return g.expand(g.group_sizes.astype(float) ** expo)


def blw_convert(g: GroupedMatrix, weights: BlwWeights,
                inner: Optional[InnerWeights] = None) -> BlwCertificate:
    """Measure, rounding, importance vector and certified ``F*`` for ``weights``."""
    p = g.outer_p
    b = _require_positive(weights.b)
    if b.shape != (g.m,):
        raise ValueError(f"weights must have length {g.m}")
    lam = b / b.sum()
    notes = []
    if weights.algorithm == "inner":
        if inner is None:
            raise ValueError("inner-iteration weights need their InnerWeights to build the rounding")
        v = _inner_v(g, np.asarray(inner.u, dtype=float))
        w = v * g.expand(b) ** (2.0 / p - 1.0)
    else:
        w = _default_rounding(g)
        if np.any(g.inner_p != 2):
            notes.append("rounding taken uniform within groups; inner exponents differ from 2")
    profile = overestimate_profile(g, lam, w)
    f_star = float(np.max(profile))
    alpha_p = lam ** (1.0 - p / 2.0) * (profile * lam) ** (p / 2.0)
    alpha = alpha_p ** (1.0 / p)
    rounding_ok = is_rounding(g, w)
    if not rounding_ok:
        notes.append("rounding condition fails")
    if not weights.certified_regime:
        notes.append("weights produced outside the algorithm's guaranteed regime")
    return BlwCertificate(lam, w, alpha, f_star, weights.algorithm, p, g.n, p_cap(g),
                          b=b.copy(), rounding_ok=rounding_ok, notes=notes)


def resolve_algorithm(g: GroupedMatrix) -> str:
    """Solver whose guarantee covers the exponents of ``g``."""
    if np.all(g.inner_p == 2):
        return "contractive" if g.outer_p < 4 else "averaging"
    if g.outer_p == 2 and np.all(g.inner_p >= 2) and not np.any(np.isinf(g.inner_p)):
        return "inner"
    raise ValueError(
        "no algorithm covers this exponent combination: need every inner exponent equal "
        "to 2, or p = 2 with finite inner exponents >= 2")


def compute_weights(g: GroupedMatrix, algorithm: str = "auto", **kwargs):
    """Dispatch to a solver; returns ``(BlwWeights, InnerWeights | None)``.

    ``auto`` picks the contraction for ``p < 4`` with inner exponents 2, the
    averaging scheme for larger ``p``, and the inner scheme for ``p = 2``
    with larger inner exponents.
    """
    if algorithm == "auto":
        algorithm = resolve_algorithm(g)
    if algorithm == "contractive":
        return contractive_blw(g, **kwargs), None
    if algorithm == "averaging":
        return averaging_blw(g, **kwargs), None
    if algorithm == "inner":
        return inner_blw(g, **kwargs)
    if algorithm == "fixed-point":
        return fixed_point_blw(g, **kwargs), None
    raise ValueError(f"unknown algorithm {algorithm!r}")
