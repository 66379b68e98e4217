"""Bounded-variable primal simplex on a dense tableau.

Rows are turned into equalities with one slack per row (A x + s = b) whose
bounds encode the row sense. Phase 1 starts from the slack basis and adds an
artificial column for every row the starting point violates; phase 2 then
optimises the real objective with the artificials pinned at zero. Pricing is
Dantzig's rule until a pivot budget is spent, after which Bland's rule takes
over for the remainder of the phase so that degenerate cycling cannot
prevent termination.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_TOLERANCES, Tolerances

log = logging.getLogger(__name__)

LE, GE, EQ = "<=", ">=", "="

_PIVOT_TOL = 1e-9
_DUAL_TOL = 1e-9
_REFACTOR_EVERY = 64


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class LpProblem:
    """minimize c @ x  s.t.  A[i] @ x (senses[i]) rhs[i],  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        n = c.shape[0]
        A = np.asarray(self.A, dtype=np.float64).reshape(-1, n)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "lb", np.asarray(self.lb, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "ub", np.asarray(self.ub, dtype=np.float64).reshape(-1))
        m = A.shape[0]
        if len(self.senses) != m or self.rhs.shape[0] != m:
            raise ValueError("row count mismatch between A, senses and rhs")
        if self.lb.shape[0] != n or self.ub.shape[0] != n:
            raise ValueError("column count mismatch between c and bounds")
        if any(s not in (LE, GE, EQ) for s in self.senses):
            raise ValueError(f"unknown row sense in {set(self.senses)}")
        if not np.all(np.isfinite(self.rhs)) or not np.all(np.isfinite(A)) or not np.all(np.isfinite(c)):
            raise ValueError("objective, matrix and right-hand side must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("bounds must not be NaN")

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.c.shape[0]

    def with_bounds(self, lb, ub) -> "LpProblem":
        return LpProblem(self.c, self.A, self.senses, self.rhs, lb, ub)

    def max_violation(self, x) -> float:
        """Largest row or bound violation of point x."""
        x = np.asarray(x, dtype=np.float64)
        act = self.A @ x if self.num_rows else np.zeros(0)
        viol = [0.0]
        for s, a, b in zip(self.senses, act, self.rhs):
            if s == LE:
                viol.append(a - b)
            elif s == GE:
                viol.append(b - a)
            else:
                viol.append(abs(a - b))
        viol.extend(self.lb - x)
        viol.extend(x - self.ub)
        return float(max(viol))


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray = None
    objective: float = None
    iterations: int = 0


class _Simplex:
    def __init__(self, problem: LpProblem, tol: Tolerances, max_iter: int):
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0
        p = problem
        m, n = p.num_rows, p.num_cols
        self.m, self.n = m, n

        slack_lb = np.array([0.0 if s in (LE, EQ) else -np.inf for s in p.senses])
        slack_ub = np.array([np.inf if s == LE else 0.0 for s in p.senses])

        x_struct = np.where(np.isfinite(p.lb), p.lb, np.where(np.isfinite(p.ub), p.ub, 0.0))
        resid = p.rhs - p.A @ x_struct

        s_val = np.clip(resid, slack_lb, slack_ub)
        gap = resid - s_val
        art_rows = np.flatnonzero(np.abs(gap) > 0.0)
        k = len(art_rows)
        self.n_art = k
        art = np.zeros((m, k))
        art[art_rows, np.arange(k)] = np.sign(gap[art_rows])

        self.M = np.hstack([p.A, np.eye(m), art])
        self.b = p.rhs.copy()
        N = n + m + k
        self.N = N
        self.lb = np.concatenate([p.lb, slack_lb, np.zeros(k)])
        self.ub = np.concatenate([p.ub, slack_ub, np.full(k, np.inf)])
        self.x = np.concatenate([x_struct, s_val, np.abs(gap[art_rows])])

        self.basis = np.arange(n, n + m)
        self.basis[art_rows] = n + m + np.arange(k)
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[self.basis] = True
        # initial basis columns are +/- unit vectors
        diag = np.ones(m)
        diag[art_rows] = np.sign(gap[art_rows])
        self.T = self.M * diag[:, None]
        self.c_struct = np.concatenate([p.c, np.zeros(m + k)])
        self.blocked = np.zeros(N, dtype=bool)

    # -- linear algebra -------------------------------------------------
    def refactor(self):
        B = self.M[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.M)
            nonbasic = ~self.is_basic
            rhs = self.b - self.M[:, nonbasic] @ self.x[nonbasic]
            self.x[self.basis] = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:
            return False
        self.d = self.cost - self.cost[self.basis] @ self.T
        return True

    def objective(self):
        return float(self.cost @ self.x)

    # -- one phase --------------------------------------------------------
    def run(self, cost, bland_after: int):
        self.cost = cost
        if not self.refactor():
            return LpStatus.NUMERICAL_FAILURE
        bland = False
        since_refactor = 0
        phase_pivots = 0
        lb, ub, x = self.lb, self.ub, self.x
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.NUMERICAL_FAILURE
            if since_refactor >= _REFACTOR_EVERY:
                if not self.refactor():
                    return LpStatus.NUMERICAL_FAILURE
                since_refactor = 0
            if not bland and phase_pivots >= bland_after:
                log.debug("switching to Bland's rule after %d pivots", phase_pivots)
                bland = True

            d = self.d
            movable = ~self.is_basic & ~self.blocked & (ub > lb)
            can_up = movable & (x < ub) & (d < -_DUAL_TOL)
            can_down = movable & (x > lb) & (d > _DUAL_TOL)
            cand = can_up | can_down
            if not cand.any():
                return LpStatus.OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            direction = 1.0 if can_up[q] else -1.0

            alpha = direction * self.T[:, q]
            xb = x[self.basis]
            lbb, ubb = lb[self.basis], ub[self.basis]
            dec = alpha > _PIVOT_TOL
            inc = alpha < -_PIVOT_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.full(self.m, np.inf)
                ratio[dec] = np.maximum(xb[dec] - lbb[dec], 0.0) / alpha[dec]
                ratio[inc] = np.maximum(ubb[inc] - xb[inc], 0.0) / -alpha[inc]
            theta_row = float(ratio.min()) if self.m else np.inf
            span = (ub[q] - x[q]) if direction > 0 else (x[q] - lb[q])

            if not np.isfinite(theta_row) and not np.isfinite(span):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            phase_pivots += 1
            if span <= theta_row:
                # bound flip, basis unchanged
                x[self.basis] = xb - span * alpha
                x[q] = ub[q] if direction > 0 else lb[q]
                continue

            # leaving row: Harris-style pass preferring large pivots among near-ties
            ties = np.flatnonzero(ratio <= theta_row + 1e-12 * max(1.0, theta_row))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            theta = ratio[r]
            leaving = self.basis[r]
            x[self.basis] = xb - theta * alpha
            x[q] = x[q] + direction * theta
            x[leaving] = lb[leaving] if alpha[r] > 0 else ub[leaving]

            piv = self.T[r, q]
            row = self.T[r] / piv
            col = self.T[:, q].copy()
            col[r] = 0.0
            self.T -= np.outer(col, row)
            self.T[r] = row
            self.d = self.d - self.d[q] * row
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.basis[r] = q
            since_refactor += 1

    def structural(self):
        return self.x[: self.n].copy()


def solve(problem: LpProblem, tol: Tolerances = DEFAULT_TOLERANCES, max_iter: int = None, bland_after: int = None) -> LpSolution:
    """Solve an LP; NUMERICAL_FAILURE is returned on iteration exhaustion or a singular basis.

    `bland_after` is the per-phase pivot count after which pricing switches to
    Bland's rule (default scales with the problem size; 0 means Bland throughout).
    """
    m, n = problem.num_rows, problem.num_cols
    if np.any(problem.lb > problem.ub + tol.feas_tol):
        return LpSolution(LpStatus.INFEASIBLE)
    lb = np.minimum(problem.lb, problem.ub)
    problem = problem.with_bounds(lb, problem.ub)

    # drop empty rows after checking them against zero activity
    empty = ~np.any(problem.A != 0.0, axis=1) if m else np.zeros(0, dtype=bool)
    for i in np.flatnonzero(empty):
        s, b = problem.senses[i], problem.rhs[i]
        if (s == LE and b < -tol.feas_tol) or (s == GE and b > tol.feas_tol) or (s == EQ and abs(b) > tol.feas_tol):
            return LpSolution(LpStatus.INFEASIBLE)
    if empty.any():
        keep = ~empty
        problem = LpProblem(
            problem.c,
            problem.A[keep],
            [s for s, k in zip(problem.senses, keep) if k],
            problem.rhs[keep],
            problem.lb,
            problem.ub,
        )
        m = problem.num_rows

    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    if bland_after is None:
        bland_after = 10 * (m + n) + 100
    sx = _Simplex(problem, tol, max_iter)

    if sx.n_art:
        phase1 = np.zeros(sx.N)
        phase1[n + m :] = 1.0
        status = sx.run(phase1, bland_after)
        if status is not LpStatus.OPTIMAL:
            return LpSolution(LpStatus.NUMERICAL_FAILURE, iterations=sx.iterations)
        if sx.objective() > tol.feas_tol:
            return LpSolution(LpStatus.INFEASIBLE, iterations=sx.iterations)
        # pin artificials at zero for phase 2
        sx.ub[n + m :] = 0.0
        sx.blocked[n + m :] = True
        nb = ~sx.is_basic[n + m :]
        sx.x[n + m :][nb] = 0.0

    status = sx.run(sx.c_struct, bland_after)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=sx.iterations)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, iterations=sx.iterations)

    x = sx.structural()
    # snap nonbasic-at-bound noise and verify feasibility outside the tableau
    x = np.clip(x, problem.lb, problem.ub)
    if problem.max_violation(x) > tol.feas_tol:
        sx.refactor()
        x = np.clip(sx.structural(), problem.lb, problem.ub)
        if problem.max_violation(x) > tol.feas_tol:
            log.debug("final point violates constraints by %g", problem.max_violation(x))
            return LpSolution(LpStatus.NUMERICAL_FAILURE, iterations=sx.iterations)
    return LpSolution(LpStatus.OPTIMAL, x, float(problem.c @ x), sx.iterations)
