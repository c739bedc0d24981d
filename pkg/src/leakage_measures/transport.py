"""Wasserstein-1 between histograms: exact transportation LP and Sinkhorn.

The exact solver is the network simplex in :mod:`._netsimplex`.  Sinkhorn
uses the kernel ``exp(-lam * C)`` with plain alternating scaling.  When that
kernel underflows, or plain scaling stalls (it crawls once ``lam * C``
reaches the hundreds), the same scaling equations are solved on log-domain
dual potentials, walking a geometric schedule of regularization strengths
down to ``1/lam`` with Newton steps at each stage.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike

import numpy as np

from ._netsimplex import ITERATION_LIMIT, network_simplex
from .errors import ParameterError, ResourceError
from .histogram import HistogramGrid, bin_centers, to_probability_vector

MAX_COST_ENTRIES = 100_000_000
DEFAULT_LAMBDA = 700.0
DEFAULT_SINKHORN_TOL = 1e-9
DEFAULT_SINKHORN_MAX_ITER = 100_000
PLAIN_SCALING_ITER = 2_000

# exp(-x) for x beyond this is denormal or zero in float64
_EXP_SAFE = 700.0


def _guard(n_rows: int, n_cols: int, max_entries: int):
    if n_rows * n_cols > max_entries:
        raise ResourceError(
            f"cost matrix of {n_rows}x{n_cols} = {n_rows * n_cols:.3g} entries exceeds "
            f"the memory guard of {max_entries:.3g} entries")


def cost_matrix_from_centers(centers, *, max_entries: int = MAX_COST_ENTRIES) -> np.ndarray:
    """Pairwise Euclidean distances between bin centers."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers[:, None]
    n = centers.shape[0]
    if n < 1:
        raise ParameterError("need at least one center")
    _guard(n, n, max_entries)
    sq = np.zeros((n, n))
    for k in range(centers.shape[1]):
        diff = centers[:, k, None] - centers[None, :, k]
        sq += diff * diff
    return np.sqrt(sq)


def grid_cost_matrix(g: HistogramGrid, *, max_entries: int = MAX_COST_ENTRIES) -> np.ndarray:
    _guard(g.n_bins, g.n_bins, max_entries)
    return cost_matrix_from_centers(bin_centers(g), max_entries=max_entries)


@dataclass(frozen=True, eq=False)
class TransportProblem:
    p: np.ndarray
    q: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).ravel()
        q = np.asarray(self.q, dtype=np.float64).ravel()
        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.shape != (p.size, q.size):
            raise ParameterError(f"cost must be {p.size}x{q.size}, got {cost.shape}")
        if p.size == 0 or q.size == 0:
            raise ParameterError("empty marginals")
        if np.any(p < 0) or np.any(q < 0) or not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ParameterError("marginals must be finite and non-negative")
        if not np.all(np.isfinite(cost)) or np.any(cost < 0):
            raise ParameterError("cost must be finite and non-negative")
        sp, sq = math.fsum(p), math.fsum(q)
        if abs(sp - sq) > 1e-6:
            raise ParameterError(f"infeasible marginals: sums {sp} and {sq} differ")
        if abs(sp - 1.0) > 1e-9 or abs(sq - 1.0) > 1e-9:
            raise ParameterError(f"marginals must be probability vectors (sums {sp}, {sq})")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "cost", cost)

    @classmethod
    def from_histograms(cls, hp: HistogramGrid, hq: HistogramGrid, *,
                        max_entries: int = MAX_COST_ENTRIES) -> "TransportProblem":
        if not hp.same_grid(hq):
            raise ParameterError("histograms are on different grids")
        cost = grid_cost_matrix(hp, max_entries=max_entries)
        return cls(to_probability_vector(hp), to_probability_vector(hq), cost)


@dataclass(eq=False)
class TransportPlan:
    """Coupling ``plan`` and its transport cost ``objective = <C, plan>``.

    ``u``/``v`` are dual potentials when the solver provides a certificate
    (LP only).  ``marginal_error`` is the L-inf violation of the row and
    column constraints.
    """

    plan: np.ndarray
    objective: float
    method: str
    converged: bool = True
    n_iter: int = 0
    marginal_error: float = 0.0
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def dual_objective(self, tp: TransportProblem) -> float:
        if self.u is None or self.v is None:
            raise ParameterError("plan carries no dual certificate")
        return math.fsum(self.u * tp.p) + math.fsum(self.v * tp.q)

    def dual_violation(self, tp: TransportProblem) -> float:
        """Largest ``u_i + v_j - C_ij`` (<= 0 for a feasible dual)."""
        if self.u is None or self.v is None:
            raise ParameterError("plan carries no dual certificate")
        return float(np.max(self.u[:, None] + self.v[None, :] - tp.cost))


def _marginal_error(plan, p, q) -> float:
    return float(max(np.abs(plan.sum(axis=1) - p).max(), np.abs(plan.sum(axis=0) - q).max()))


def solve_lp(tp: TransportProblem, *, tol: float = 1e-12, max_pivots: int | None = None,
             max_entries: int = MAX_COST_ENTRIES) -> TransportPlan:
    """Exact optimal coupling via network simplex, with dual certificate.

    Zero-mass rows and columns are removed before pivoting; their dual
    values are then set to the largest value keeping the dual feasible.
    """
    n, m = tp.cost.shape
    _guard(n, m, max_entries)
    rows = np.flatnonzero(tp.p > 0)
    cols = np.flatnonzero(tp.q > 0)
    C = np.ascontiguousarray(tp.cost[np.ix_(rows, cols)])
    if max_pivots is None:
        max_pivots = 50 * (rows.size + cols.size) * max(rows.size, cols.size) + 10_000
    flow, pi, status, pivots = network_simplex(tp.p[rows], tp.q[cols], C, tol, max_pivots)
    n_real = rows.size * cols.size
    sub = np.clip(flow[:n_real].reshape(rows.size, cols.size), 0.0, None)
    art_flow = float(np.abs(flow[n_real:]).sum())

    plan = np.zeros((n, m))
    plan[np.ix_(rows, cols)] = sub
    u_sub = -pi[: rows.size]
    v_sub = pi[rows.size: rows.size + cols.size]
    shift = v_sub.min()
    u_sub, v_sub = u_sub + shift, v_sub - shift

    u = np.empty(n)
    v = np.empty(m)
    v[cols] = v_sub
    u[rows] = u_sub
    if cols.size < m:
        zero_cols = np.setdiff1d(np.arange(m), cols)
        v[zero_cols] = np.min(tp.cost[np.ix_(rows, zero_cols)] - u_sub[:, None], axis=0)
    if rows.size < n:
        zero_rows = np.setdiff1d(np.arange(n), rows)
        u[zero_rows] = np.min(tp.cost[zero_rows, :] - v[None, :], axis=1)

    objective = math.fsum((sub * C).ravel())
    return TransportPlan(plan, objective, "network-simplex", converged=status != ITERATION_LIMIT,
                         n_iter=int(pivots), marginal_error=_marginal_error(plan, tp.p, tp.q),
                         u=u, v=v, info={"artificial_flow": art_flow})


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    mx = a.max(axis=axis, keepdims=True)
    out = np.log(np.exp(a - mx).sum(axis=axis, keepdims=True)) + mx
    return np.squeeze(out, axis=axis)


def _sinkhorn_kernel(p, q, C, lam, tol, max_iter):
    K = np.exp(-lam * C)
    u = np.ones_like(p)
    v = np.ones_like(q)
    err = np.inf
    it = 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        while it < max_iter:
            it += 1
            v = q / (K.T @ u)
            kv = K @ v
            err = float(np.abs(u * kv - p).max())
            u = p / kv
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                return None
            if err <= tol:
                break
    plan = u[:, None] * K * v[None, :]
    return plan, it, err


def _col_potential(f, logq, C, eps):
    return eps * logq - eps * _lse((f[:, None] - C) / eps, axis=0)


def _newton_stage(f, p, q, logq, C, eps, tol, budget, max_shift=30.0, halvings=12):
    """Damped Newton ascent on the semi-dual ``f.p + g(f).q`` at fixed ``eps``.

    ``g(f)`` is the exact column scaling, so only row marginals can be off.
    Levenberg-Marquardt damping ``mu * diag(p)`` regularizes the solve; its
    floor keeps the block-shift directions (near-null once the plan splits
    into disconnected blocks) from dominating the step.  Steps are capped
    at ``max_shift * eps`` per coordinate and backtracked.  Near the optimum
    the objective stops resolving progress, so a step is also accepted when
    it lowers the row violation.
    """
    g = _col_potential(f, logq, C, eps)
    psi = f @ p + g @ q
    ones = np.ones((p.size, p.size))
    mu = 1e-6
    steps = 0
    plan = np.exp((f[:, None] + g[None, :] - C) / eps)
    rows = plan.sum(axis=1)
    err = float(np.abs(rows - p).max())
    while err > tol and steps < budget:
        # Hessian of the semi-dual (up to -1/eps); null space is the constant shift
        scaled = plan / q[None, :]
        hess = np.diag(rows) - scaled @ plan.T + ones * (rows.mean() / p.size)
        grad = p - rows
        noise = 1e-14 * (np.abs(f) @ p + np.abs(g) @ q + abs(psi))
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(hess + np.diag(mu * p), eps * grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                big = float(np.abs(step).max())
                if big > max_shift * eps:
                    step *= max_shift * eps / big
                t = 1.0
                for _ in range(halvings):
                    f_try = f + t * step
                    g_try = _col_potential(f_try, logq, C, eps)
                    psi_try = f_try @ p + g_try @ q
                    gain = t * (grad @ step)
                    if gain > noise:
                        ok = psi_try >= psi + 1e-4 * gain
                    else:
                        ok = psi_try >= psi - noise
                    if ok:
                        plan_try = np.exp((f_try[:, None] + g_try[None, :] - C) / eps)
                        rows_try = plan_try.sum(axis=1)
                        err_try = float(np.abs(rows_try - p).max())
                        if gain > noise or err_try < err:
                            f, g, psi = f_try, g_try, psi_try
                            plan, rows, err = plan_try, rows_try, err_try
                            accepted = True
                            break
                    t *= 0.5
            if accepted:
                mu = max(mu / 10.0, 1e-9)
            else:
                mu *= 10.0
                if mu > 1e12:
                    return f, g, err, steps
        steps += 1
    return f, g, err, steps


def _sinkhorn_log(p, q, C, lam, tol, max_iter, anneal=0.5, stage_tol=1e-6, sweeps=5):
    """Log-domain solve of the scaling equations at ``eps = 1/lam``.

    Works through ``eps = max(C), max(C)/2, ...`` down to the target, each
    stage warm-started from the previous one: a few alternating scaling
    sweeps, then Newton steps until the row violation is below the stage
    tolerance.
    """
    eps_target = 1.0 / lam
    logp, logq = np.log(p), np.log(q)
    f = np.zeros_like(p)
    eps = max(eps_target, float(C.max()))
    it = 0
    while True:
        final = eps <= eps_target
        target = tol if final else max(tol, stage_tol)
        err = np.inf
        for _ in range(min(sweeps, max_iter - it)):
            it += 1
            g = _col_potential(f, logq, C, eps)
            f_new = eps * logp - eps * _lse((g[None, :] - C) / eps, axis=1)
            # row sums before the f update equal p * exp((f - f_new) / eps)
            err = float(np.abs(p * np.expm1((f - f_new) / eps)).max())
            f = f_new
            if err <= target:
                break
        if err > target and it < max_iter:
            f, g, err, steps = _newton_stage(f, p, q, logq, C, eps, target, max_iter - it)
            it += steps
        if final or it >= max_iter:
            break
        eps = max(eps * anneal, eps_target)
    g = _col_potential(f, logq, C, eps)
    plan = np.exp((f[:, None] + g[None, :] - C) / eps)
    return plan, it, _marginal_error(plan, p, q), eps


def sinkhorn(tp: TransportProblem, lam: float = DEFAULT_LAMBDA, tol: float = DEFAULT_SINKHORN_TOL,
             max_iter: int = DEFAULT_SINKHORN_MAX_ITER, *, log_domain: bool | None = None,
             max_entries: int = MAX_COST_ENTRIES) -> TransportPlan:
    """Entropy-regularized coupling ``diag(u) exp(-lam C) diag(v)``.

    The returned objective is ``<C, M>`` of the regularized plan, without
    the entropy term.  ``log_domain=None`` tries plain scaling first unless the
    kernel would underflow; overflow or a stall hands over to the
    log-domain solver.  Hitting ``max_iter``
    yields ``converged=False`` rather than an exception.
    """
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if not tol > 0 or max_iter < 1:
        raise ParameterError("tol must be positive and max_iter >= 1")
    n, m = tp.cost.shape
    _guard(n, m, max_entries)
    rows = np.flatnonzero(tp.p > 0)
    cols = np.flatnonzero(tp.q > 0)
    p, q = tp.p[rows], tp.q[cols]
    C = tp.cost[np.ix_(rows, cols)]

    if log_domain is None:
        log_domain = lam * float(C.max()) > _EXP_SAFE
    method = "sinkhorn"
    res = None
    it = 0
    if not log_domain:
        res = _sinkhorn_kernel(p, q, C, lam, tol, min(max_iter, PLAIN_SCALING_ITER))
        if res is not None:
            it = res[1]
            if res[2] > tol and it < max_iter:
                res = None
    if res is None:
        method = "sinkhorn-log"
        sub, extra, err, _ = _sinkhorn_log(p, q, C, lam, tol, max(max_iter - it, 1))
        it += extra
    else:
        sub, _, err = res
    plan = np.zeros((n, m))
    plan[np.ix_(rows, cols)] = sub
    objective = math.fsum((sub * C).ravel())
    return TransportPlan(plan, objective, method, converged=err <= tol, n_iter=int(it),
                         marginal_error=float(err), info={"lambda": float(lam)})


def dump_plan_csv(plan: TransportPlan, path: str | PathLike, threshold: float = 0.0) -> None:
    """Write the coupling as ``i, j, mass`` triplets (entries above ``threshold``)."""
    ii, jj = np.nonzero(plan.plan > threshold)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "mass"])
        for i, j in zip(ii, jj):
            w.writerow([int(i), int(j), f"{plan.plan[i, j]:.17g}"])


def w1_lp(hp: HistogramGrid, hq: HistogramGrid, **kw) -> TransportPlan:
    return solve_lp(TransportProblem.from_histograms(hp, hq), **kw)


def w1_sinkhorn(hp: HistogramGrid, hq: HistogramGrid, lam: float = DEFAULT_LAMBDA, **kw) -> TransportPlan:
    return sinkhorn(TransportProblem.from_histograms(hp, hq), lam, **kw)
