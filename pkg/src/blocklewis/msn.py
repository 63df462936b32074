"""Minimizing sums of Euclidean norms with a log-barrier path-following method.

The objective is ``sum_i ||A_{S_i} x - b_{S_i}||_2``.  Each group gets an
epigraph variable ``c_i`` and the barrier ``-ln(c_i^2 - ||r_i||^2)``, which is
2-self-concordant per group.  Eliminating ``c`` in closed form leaves

    f_t(x) = sum_i s_i - sum_i ln(1 + s_i),   s_i = sqrt(1 + t^2 ||r_i||^2),

whose minimizer is the central-path point at parameter ``t``.  The duality
gap there is at most ``2m/t``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import MsnOptions
from .grouped import GroupedMatrix
from .sampling import Sparsifier, build_plan, draw_sparsifier
from .solvers import blw_convert, contractive_blw

log = logging.getLogger(__name__)


class CenteringError(RuntimeError):
    """Newton centering could not make progress."""


class MsnInstance:
    """``A`` with a row partition and per-row offsets ``b``."""

    def __init__(self, a, groups, b):
        self.grouped = GroupedMatrix(a, groups, 2.0, 1.0)
        b = np.asarray(b, dtype=float).reshape(-1)
        if b.shape != (self.grouped.k,):
            raise ValueError(f"b must have one entry per row ({self.grouped.k}), got {b.size}")
        if not np.all(np.isfinite(b)):
            raise ValueError("b has non-finite entries")
        b.setflags(write=False)
        self.b = b

    @classmethod
    def from_grouped(cls, g: GroupedMatrix, b) -> "MsnInstance":
        return cls(g.a, g.groups, b)

    @property
    def a(self) -> np.ndarray:
        return self.grouped.a

    @property
    def groups(self):
        return self.grouped.groups

    @property
    def m(self) -> int:
        return self.grouped.m

    @property
    def n(self) -> int:
        return self.grouped.n

    def residual(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}, got {x.size}")
        return self.a @ x - self.b

    def residual_sq(self, x) -> np.ndarray:
        """Per-group squared residual norms."""
        r = self.residual(x)
        return self.grouped.group_sum(r * r)


@dataclass
class TraceRecord:
    t: float
    newton_iterations: int
    objective: float
    gap: float


@dataclass
class MsnSolution:
    x_hat: np.ndarray
    objective: float
    trace: list = field(default_factory=list)
    x0: Optional[np.ndarray] = None
    scale: float = 0.0
    linear_solves: int = 0
    info: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return sum(rec.newton_iterations for rec in self.trace)


@dataclass
class BarrierState:
    t: float
    x: np.ndarray
    c: np.ndarray


def msn_objective(inst: MsnInstance, x) -> float:
    return float(np.sum(np.sqrt(inst.residual_sq(x))))


def barrier_state(inst: MsnInstance, t: float, x) -> BarrierState:
    """Optimal slacks ``c_i = 1/t + sqrt(1/t^2 + ||r_i||^2)`` at ``x``."""
    r2 = inst.residual_sq(x)
    return BarrierState(t, np.asarray(x, dtype=float), 1.0 / t + np.sqrt(1.0 / t ** 2 + r2))


def _check_t(t):
    if not t > 0 or not math.isfinite(t):
        raise ValueError(f"t must be positive and finite, got {t}")


def reduced_objective(inst: MsnInstance, t: float, x) -> float:
    _check_t(t)
    s = np.sqrt(1.0 + t * t * inst.residual_sq(x))
    return float(np.sum(s) - np.sum(np.log1p(s)))


def _pieces(inst: MsnInstance, t: float, x):
    r = inst.residual(x)
    s = np.sqrt(1.0 + t * t * inst.grouped.group_sum(r * r))
    return r, s


def gradient(inst: MsnInstance, t: float, x) -> np.ndarray:
    """``sum_i t^2/(1+s_i) A_{S_i}^T r_i``."""
    _check_t(t)
    r, s = _pieces(inst, t, x)
    row_w = inst.grouped.expand(t * t / (1.0 + s))
    return inst.a.T @ (row_w * r)


def _group_vectors(inst: MsnInstance, r: np.ndarray) -> np.ndarray:
    """Rows ``A_{S_i}^T r_i`` stacked into an ``m x n`` array."""
    out = np.zeros((inst.m, inst.n))
    np.add.at(out, inst.grouped.row_group, r[:, None] * inst.a)
    return out


def hessian(inst: MsnInstance, t: float, x) -> np.ndarray:
    """``sum_i A_{S_i}^T D_i A_{S_i}`` with
    ``D_i = t^2/(1+s_i) (I - t^2 r_i r_i^T / (s_i (1+s_i)))``."""
    _check_t(t)
    r, s = _pieces(inst, t, x)
    scale = t * t / (1.0 + s)
    rank_one = scale * t * t / (s * (1.0 + s))
    row_w = inst.grouped.expand(scale)
    gv = _group_vectors(inst, r)
    h = inst.a.T @ (row_w[:, None] * inst.a) - gv.T @ (rank_one[:, None] * gv)
    return 0.5 * (h + h.T)


def hessian_blocks(inst: MsnInstance, t: float, x) -> list:
    """Per-group ``|S_i| x |S_i|`` matrices ``D_i`` of the Hessian."""
    _check_t(t)
    r, s = _pieces(inst, t, x)
    blocks = []
    for i, grp in enumerate(inst.groups):
        ri = r[grp]
        sc = t * t / (1.0 + s[i])
        blocks.append(sc * (np.eye(grp.size) - t * t * np.outer(ri, ri) / (s[i] * (1.0 + s[i]))))
    return blocks


def _solve(h: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(h, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(h, rhs, rcond=None)[0]


def newton_centering(inst: MsnInstance, t: float, x_start, tol_newton: float = 1e-8,
                     options: MsnOptions = MsnOptions(),
                     history: Optional[list] = None) -> tuple[np.ndarray, int]:
    """Damped Newton on ``f_t``; returns the centered point and the step count.

    Stops when half the squared Newton decrement is at most ``tol_newton``.
    ``history``, when given, receives ``f_t`` at every accepted iterate.
    """
    x = np.array(x_start, dtype=float)
    f = reduced_objective(inst, t, x)
    if history is not None:
        history.append(f)
    for it in range(options.max_newton + 1):
        g = gradient(inst, t, x)
        dx = _solve(hessian(inst, t, x), -g)
        slope = float(g @ dx)
        dec2 = -slope
        if not np.isfinite(dec2) or dec2 / 2.0 <= tol_newton:
            return x, it
        if it == options.max_newton:
            break
        step = 1.0
        slack = 1e-13 * max(1.0, abs(f))
        for _ in range(options.max_halvings):
            x_new = x + step * dx
            f_new = reduced_objective(inst, t, x_new)
            if f_new <= f + options.ls_alpha * step * slope + slack:
                break
            step *= options.ls_beta
        else:
            raise CenteringError(
                f"line search failed after {options.max_halvings} halvings at t = {t:.3e} "
                f"(Newton decrement^2 = {dec2:.3e})")
        x, f = x_new, f_new
        if history is not None:
            history.append(f)
    log.warning("Newton centering hit %d iterations at t = %.3e", options.max_newton, t)
    return x, options.max_newton


def solve_msn(inst: MsnInstance, eps: float = 1e-6,
              options: MsnOptions = MsnOptions()) -> MsnSolution:
    """Path-following solve returning an objective within ``(1+eps)`` of optimal."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    a, b = inst.a, inst.b
    x0 = np.linalg.lstsq(a, b, rcond=None)[0]
    scale = float(np.linalg.norm(a @ x0 - b))
    if scale <= options.zero_tol * max(float(np.linalg.norm(b)), 1e-300):
        return MsnSolution(x0, msn_objective(inst, x0), [], x0, scale, 1)
    # Shift to the least-squares point and divide by its residual norm: the
    # least-squares value becomes 1, so the optimum is at least 1.
    norm_inst = MsnInstance(a, inst.groups, (b - a @ x0) / scale)
    m = inst.m
    z = np.zeros(inst.n)
    t = options.t0 if options.t0 is not None else m / (msn_objective(norm_inst, z) + 1.0)
    trace = []
    solves = 1
    while True:
        z, iters = newton_centering(norm_inst, t, z, options.newton_tol, options)
        solves += iters + 1
        obj = msn_objective(norm_inst, z)
        gap = 2.0 * m / t
        trace.append(TraceRecord(t, iters, scale * obj, scale * gap))
        log.debug("t=%.3e newton=%d objective=%.12g gap=%.3e", t, iters, obj, gap)
        if gap <= eps * max(1.0, obj - gap):
            break
        t *= options.mu
    x_hat = x0 + scale * z
    return MsnSolution(x_hat, msn_objective(inst, x_hat), trace, x0, scale, solves)


def augmented_grouped(inst: MsnInstance) -> GroupedMatrix:
    """Blocks ``[A_{S_i} | b_{S_i}]`` with ``p = 1`` and inner exponent 2."""
    return GroupedMatrix(np.column_stack([inst.a, inst.b]), inst.groups, 2.0, 1.0)


def reweighted_instance(inst: MsnInstance, s: Sparsifier) -> MsnInstance:
    """Drawn groups with duplicate coefficients summed and folded into row scaling."""
    groups, coeff = s.merged()
    rows, new_groups, row_scale = [], [], []
    start = 0
    for i, c in zip(groups, coeff):
        grp = inst.groups[i]
        rows.append(grp)
        new_groups.append(list(range(start, start + grp.size)))
        row_scale.append(np.full(grp.size, c))
        start += grp.size
    rows = np.concatenate(rows)
    row_scale = np.concatenate(row_scale)
    return MsnInstance(row_scale[:, None] * inst.a[rows], new_groups, row_scale * inst.b[rows])


def solve_msn_sparsified(inst: MsnInstance, eps: float, delta: float, c_sample: float = 1.0,
                         rng: Optional[np.random.Generator] = None,
                         sparsifier: Optional[Sparsifier] = None,
                         options: MsnOptions = MsnOptions()) -> MsnSolution:
    """Sparsify ``[A | b]`` with block Lewis sampling at ``eps/3``, then solve.

    ``sparsifier`` overrides the draw (it must refer to the augmented matrix's
    groups).  The reported objective is the true one at the returned point;
    ``info`` carries the sample count and the surrogate objective.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError("eps and delta must lie in (0, 1)")
    aug = augmented_grouped(inst)
    info = {}
    if sparsifier is None:
        if rng is None:
            rng = np.random.default_rng()
        cert = blw_convert(aug, contractive_blw(aug))
        plan = build_plan(cert, eps / 3.0, delta, c_sample)
        sparsifier = draw_sparsifier(aug, plan, rng)
        info["f_star"] = cert.f_star
    reduced = reweighted_instance(inst, sparsifier)
    sol = solve_msn(reduced, eps / 3.0, options)
    info.update(m_tilde=sparsifier.m_tilde, distinct_groups=reduced.m,
                surrogate_objective=sol.objective)
    return MsnSolution(sol.x_hat, msn_objective(inst, sol.x_hat), sol.trace, sol.x0,
                       sol.scale, sol.linear_solves, info)
