"""Bounded-variable primal simplex on a dense tableau.

Two-phase method with per-row artificials, nonbasic variables resting at
either bound (or at zero when free), bound-flip ratio tests, and a permanent
switch to Bland's rule after a degeneracy streak to rule out cycling. Built
for desk-scale instances: robustness and determinism over speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BASIC = 0
_AT_LOWER = 1
_AT_UPPER = 2
_FREE = 3

_PIVOT_EPS = 1e-11
_DEGEN_STREAK = 30


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | numerical
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pow2_scale(values: np.ndarray) -> np.ndarray:
    """Power-of-two reciprocal of per-axis max magnitudes (exact to multiply)."""
    out = np.ones_like(values)
    mask = values > 0
    out[mask] = 2.0 ** (-np.round(np.log2(values[mask])))
    return out


def solve_dense_lp(
    A: np.ndarray,
    senses: list[str],
    rhs: np.ndarray,
    cost: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    feas_tol: float = 1e-7,
    opt_tol: float = 1e-7,
    max_iterations: int | None = None,
) -> LpResult:
    """Equilibrate, then run the two-phase bounded simplex, then unscale."""
    m, n = A.shape
    # Row/column equilibration tames models mixing coefficients across many
    # orders of magnitude; power-of-two factors keep the scaling lossless.
    row_scale = _pow2_scale(np.abs(A).max(axis=1, initial=0.0))
    A = A * row_scale[:, None]
    col_scale = _pow2_scale(np.abs(A).max(axis=0, initial=0.0))
    A = A * col_scale[None, :]
    rhs = rhs * row_scale
    # x = col_scale * x_scaled, so bounds divide and costs multiply.
    lb = lb / col_scale
    ub = ub / col_scale
    cost = cost * col_scale
    result = _solve_scaled(A, senses, rhs, cost, lb, ub, feas_tol, opt_tol,
                           max_iterations)
    if result.x is not None:
        x = result.x * col_scale
        result = LpResult(result.status, x, result.objective, result.iterations)
    return result


def _solve_scaled(
    A: np.ndarray,
    senses: list[str],
    rhs: np.ndarray,
    cost: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    feas_tol: float,
    opt_tol: float,
    max_iterations: int | None,
) -> LpResult:
    m, n = A.shape
    if max_iterations is None:
        max_iterations = 2000 + 50 * (m + n)

    # Slack per row: <= gets [0, inf), >= gets (-inf, 0], = gets [0, 0].
    slack_lb = np.empty(m)
    slack_ub = np.empty(m)
    for i, sense in enumerate(senses):
        if sense == "<=":
            slack_lb[i], slack_ub[i] = 0.0, math.inf
        elif sense == ">=":
            slack_lb[i], slack_ub[i] = -math.inf, 0.0
        elif sense == "=":
            slack_lb[i], slack_ub[i] = 0.0, 0.0
        else:
            raise ValueError(f"bad sense '{sense}'")

    lo = np.concatenate([lb, slack_lb])
    hi = np.concatenate([ub, slack_ub])
    n_cols = n + m

    status = np.empty(n_cols, dtype=np.int8)
    x_nb = np.zeros(n_cols)
    for j in range(n_cols):
        if np.isfinite(lo[j]):
            status[j] = _AT_LOWER
            x_nb[j] = lo[j]
        elif np.isfinite(hi[j]):
            status[j] = _AT_UPPER
            x_nb[j] = hi[j]
        else:
            status[j] = _FREE
            x_nb[j] = 0.0

    # Residuals with every column at its resting value.
    r = rhs - A @ x_nb[:n] - x_nb[n:]

    # Rows whose slack can absorb the residual start with the slack basic;
    # the rest get an artificial column (sign chosen to keep it >= 0).
    basis = np.empty(m, dtype=np.int64)
    beta = np.empty(m)
    art_rows: list[int] = []
    art_sign: list[float] = []
    for i in range(m):
        s = n + i
        val = x_nb[s] + r[i]
        if lo[s] - feas_tol <= val <= hi[s] + feas_tol:
            basis[i] = s
            beta[i] = min(max(val, lo[s]), hi[s])
            status[s] = _BASIC
        else:
            art_rows.append(i)
            art_sign.append(1.0 if r[i] >= 0 else -1.0)

    n_art = len(art_rows)
    n_full = n_cols + n_art
    T = np.zeros((m, n_full))
    T[:, :n] = A
    T[:, n:n_cols] = np.eye(m)
    lo = np.concatenate([lo, np.zeros(n_art)])
    hi = np.concatenate([hi, np.full(n_art, math.inf)])
    status = np.concatenate([status, np.full(n_art, _AT_LOWER, dtype=np.int8)])
    x_nb = np.concatenate([x_nb, np.zeros(n_art)])
    for a, (i, sgn) in enumerate(zip(art_rows, art_sign)):
        col = n_cols + a
        T[i, col] = sgn
        basis[i] = col
        beta[i] = abs(r[i])
        status[col] = _BASIC
        if sgn < 0:
            T[i, :] *= -1.0
            T[i, col] = 1.0
            # Row scaled so the artificial's tableau column is the identity.

    # Rows with a basic slack already match the identity in T.
    iterations = 0

    if n_art:
        c1 = np.zeros(n_full)
        c1[n_cols:] = 1.0
        st, iterations = _iterate(
            T, beta, basis, status, x_nb, lo, hi, c1,
            opt_tol, max_iterations, iterations,
        )
        if st != "optimal":
            return LpResult("numerical", None, None, iterations)
        infeas = float(beta[np.isin(basis, np.arange(n_cols, n_full))].sum())
        if infeas > feas_tol * (1.0 + float(np.abs(rhs).sum())):
            return LpResult("infeasible", None, None, iterations)
        # Artificials are pinned at zero for phase 2.
        hi[n_cols:] = 0.0

    c2 = np.zeros(n_full)
    c2[:n] = cost
    st, iterations = _iterate(
        T, beta, basis, status, x_nb, lo, hi, c2,
        opt_tol, max_iterations, iterations,
    )
    if st == "unbounded":
        return LpResult("unbounded", None, None, iterations)
    if st != "optimal":
        return LpResult("numerical", None, None, iterations)

    x_full = x_nb.copy()
    x_full[basis] = beta
    x = x_full[:n]
    # Clean tiny bound violations left by floating-point pivoting.
    np.clip(x, lb, ub, out=x)
    return LpResult("optimal", x, float(cost @ x), iterations)


def _iterate(T, beta, basis, status, x_nb, lo, hi, cost, opt_tol, max_iterations,
             iterations):
    m, n_full = T.shape
    in_basis = np.zeros(n_full, dtype=bool)
    in_basis[basis] = True
    bland = False
    degen_streak = 0

    while True:
        if iterations >= max_iterations:
            return "iteration_limit", iterations
        iterations += 1

        y = cost[basis] @ T
        d = cost - y
        fixed = hi - lo <= 0.0
        can_increase = ((status == _AT_LOWER) | (status == _FREE)) & (d < -opt_tol)
        can_decrease = ((status == _AT_UPPER) | (status == _FREE)) & (d > opt_tol)
        eligible = (~in_basis) & (~fixed) & (can_increase | can_decrease)
        if not eligible.any():
            return "optimal", iterations

        idxs = np.nonzero(eligible)[0]
        if bland:
            e = int(idxs[0])
        else:
            e = int(idxs[np.argmax(np.abs(d[idxs]))])
        direction = 1.0 if d[e] < 0 else -1.0

        # Moving x_e by +t*direction changes basics by -t*step.
        step = direction * T[:, e]
        t_best = math.inf
        leave = -1
        leave_bound = 0
        down = step > _PIVOT_EPS
        up = step < -_PIVOT_EPS
        if down.any():
            room = beta[down] - lo[basis[down]]
            ratios = room / step[down]
            rows = np.nonzero(down)[0]
            k = _pick_ratio(ratios, step[down], basis[rows], bland)
            if ratios[k] < t_best:
                t_best = float(ratios[k])
                leave, leave_bound = int(rows[k]), _AT_LOWER
        if up.any():
            room = hi[basis[up]] - beta[up]
            ratios = room / (-step[up])
            rows = np.nonzero(up)[0]
            k = _pick_ratio(ratios, -step[up], basis[rows], bland)
            if ratios[k] < t_best:
                t_best = float(ratios[k])
                leave, leave_bound = int(rows[k]), _AT_UPPER

        t_own = hi[e] - lo[e] if np.isfinite(hi[e]) and np.isfinite(lo[e]) else math.inf

        if t_own <= t_best:
            if not np.isfinite(t_own):
                return "unbounded", iterations
            # Bound flip: entering variable crosses to its other bound.
            beta -= t_own * step
            status[e] = _AT_UPPER if status[e] == _AT_LOWER else _AT_LOWER
            x_nb[e] = hi[e] if status[e] == _AT_UPPER else lo[e]
            degen_streak = 0
            continue

        if leave < 0:
            return "unbounded", iterations

        t_best = max(t_best, 0.0)
        piv = T[leave, e]
        if abs(piv) < _PIVOT_EPS:
            return "numerical_pivot", iterations

        entering_value = x_nb[e] + direction * t_best
        leaving = int(basis[leave])
        beta -= t_best * step
        T[leave, :] /= piv
        col = T[:, e].copy()
        col[leave] = 0.0
        T -= np.outer(col, T[leave, :])
        T[:, e] = 0.0
        T[leave, e] = 1.0

        basis[leave] = e
        beta[leave] = entering_value
        in_basis[e] = True
        in_basis[leaving] = False
        status[e] = _BASIC
        status[leaving] = leave_bound
        x_nb[leaving] = lo[leaving] if leave_bound == _AT_LOWER else hi[leaving]

        if t_best <= 1e-11:
            degen_streak += 1
            if degen_streak > _DEGEN_STREAK:
                bland = True
        else:
            degen_streak = 0


def _pick_ratio(ratios, magnitudes, basis_ids, bland) -> int:
    """Smallest ratio; ties prefer the largest pivot, then (Bland) lowest id."""
    t = ratios.min()
    close = np.nonzero(ratios <= t + 1e-12)[0]
    if bland:
        return int(close[np.argmin(basis_ids[close])])
    return int(close[np.argmax(magnitudes[close])])
