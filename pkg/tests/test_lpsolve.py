import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from relureach.lpsolve import EQ, GE, LE, LpProblem, LpStatus, solve

INF = np.inf


def test_empty_feasible_set():
    p = LpProblem([0.0], [[1.0], [1.0]], [GE, LE], [1.0, 0.0], [-INF], [INF])
    assert solve(p).status is LpStatus.INFEASIBLE


def test_bound_attained_optimum():
    p = LpProblem([1.0], [[1.0], [1.0]], [GE, LE], [-3.0, 5.0], [-INF], [INF])
    sol = solve(p)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x.tolist() == [-3.0] and sol.objective == -3.0


def test_segment_optimum_objective_only():
    p = LpProblem([-1.0, -1.0], [[1.0, 1.0]], [LE], [1.0], [0.0, 0.0], [1.0, 1.0])
    sol = solve(p)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-1.0, abs=1e-12)
    assert sol.x.sum() == pytest.approx(1.0, abs=1e-12)


def test_unbounded():
    p = LpProblem([-1.0, 0.0], [[1.0, 1.0]], [LE], [1.0], [-INF, -INF], [INF, INF])
    assert solve(p).status is LpStatus.UNBOUNDED


def test_iteration_limit_is_numerical_failure():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(8, 8))
    p = LpProblem(rng.normal(size=8), A, [LE] * 8, np.abs(rng.normal(size=8)) + 1, -np.ones(8), np.ones(8))
    assert solve(p, max_iter=1).status is LpStatus.NUMERICAL_FAILURE


def test_empty_rows_removed():
    p = LpProblem([1.0, 0.0], [[0.0, 0.0], [1.0, 0.0]], [LE, GE], [1.0, 2.0], [-INF, 0.0], [INF, 0.0])
    sol = solve(p)
    assert sol.status is LpStatus.OPTIMAL and sol.x[0] == 2.0
    bad = LpProblem([1.0], [[0.0]], [GE], [1.0], [0.0], [1.0])
    assert solve(bad).status is LpStatus.INFEASIBLE


def test_crossed_bounds_infeasible():
    assert solve(LpProblem([1.0], np.zeros((0, 1)), [], [], [1.0], [0.0])).status is LpStatus.INFEASIBLE


@pytest.mark.parametrize("bland_after", [0, None])
def test_beale_cycling_example(bland_after):
    # Beale's degenerate LP; textbook Dantzig pivoting can cycle on it
    c = [-0.75, 20.0, -0.5, 6.0]
    A = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
    p = LpProblem(c, A, [LE, LE, LE], [0.0, 0.0, 1.0], [0.0] * 4, [INF] * 4)
    sol = solve(p, bland_after=bland_after)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-1.25, abs=1e-12)


def _scipy(p, c=None):
    """Reference status/objective from HiGHS.

    HiGHS presolve can report an unbounded LP as infeasible, so a non-optimal
    answer is re-checked with a zero objective to separate the two.
    """
    senses = np.array(p.senses)
    ub = senses != EQ
    res = linprog(
        p.c if c is None else c,
        A_ub=np.vstack([p.A[senses == LE], -p.A[senses == GE]]) if ub.any() else None,
        b_ub=np.concatenate([p.rhs[senses == LE], -p.rhs[senses == GE]]) if ub.any() else None,
        A_eq=p.A[senses == EQ] if (~ub).any() else None,
        b_eq=p.rhs[senses == EQ] if (~ub).any() else None,
        bounds=list(zip(p.lb, p.ub)),
        method="highs",
    )
    if res.status == 0:
        return LpStatus.OPTIMAL, res.fun
    assert res.status in (2, 3)
    if c is not None:
        return LpStatus.INFEASIBLE, None
    feasible, _ = _scipy(p, np.zeros_like(p.c))
    return (LpStatus.UNBOUNDED if feasible is LpStatus.OPTIMAL else LpStatus.INFEASIBLE), None


@st.composite
def lp_problems(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 12)), int(rng.integers(1, 12))
    A = rng.normal(size=(m, n))
    A[rng.random((m, n)) < 0.3] = 0.0
    senses = list(rng.choice([LE, GE, EQ], size=m, p=[0.45, 0.45, 0.1]))
    lb = np.where(rng.random(n) < 0.8, rng.uniform(-3, 0, n), -INF)
    ub = np.where(rng.random(n) < 0.8, rng.uniform(0, 3, n), INF)
    return LpProblem(rng.normal(size=n), A, senses, rng.normal(size=m), lb, ub)


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(lp_problems())
def test_agrees_with_highs(p):
    sol = solve(p)
    status, fun = _scipy(p)
    assert sol.status is status
    if status is LpStatus.OPTIMAL:
        assert sol.objective == pytest.approx(fun, rel=1e-6, abs=1e-6)
        assert p.max_violation(sol.x) <= 1e-7


def _feasible_problem(rng):
    m, n = int(rng.integers(2, 10)), int(rng.integers(2, 8))
    x0 = rng.uniform(-1, 1, n)
    A = rng.normal(size=(m, n))
    senses = list(rng.choice([LE, GE], size=m))
    act = A @ x0
    rhs = np.where(np.array(senses) == LE, act + rng.uniform(0.5, 2, m), act - rng.uniform(0.5, 2, m))
    return LpProblem(rng.normal(size=n), A, senses, rhs, -2 * np.ones(n), 2 * np.ones(n)), x0


def test_weak_duality_spot_check(rng):
    for _ in range(50):
        p, x0 = _feasible_problem(rng)
        sol = solve(p)
        assert sol.status is LpStatus.OPTIMAL
        found = 0
        while found < 100:
            y = rng.uniform(-2, 2, p.num_cols)
            if p.max_violation(y) <= 0:
                assert sol.objective <= p.c @ y + 1e-9
                found += 1
            else:
                # shrink toward the known interior point
                y = x0 + rng.uniform(0, 1) * (y - x0)
                if p.max_violation(y) <= 0:
                    assert sol.objective <= p.c @ y + 1e-9
                    found += 1


def test_feasibility_certificate_rechecked(rng):
    for _ in range(100):
        p, _ = _feasible_problem(rng)
        sol = solve(p)
        act = p.A @ sol.x
        for s, a, b in zip(p.senses, act, p.rhs):
            assert (a <= b + 1e-7) if s == LE else (a >= b - 1e-7)
        assert np.all(sol.x >= p.lb - 1e-7) and np.all(sol.x <= p.ub + 1e-7)


def test_deterministic(rng):
    for _ in range(20):
        p, _ = _feasible_problem(rng)
        a, b = solve(p), solve(p)
        assert a.status is b.status and a.objective == b.objective
        assert np.array_equal(a.x, b.x)
