from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from teamocc.lp import LpSolution, dense_problem, simplex_solve, verify_solution

scipy_opt = pytest.importorskip("scipy.optimize")


def test_small_optimum():
    # min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
    p = dense_problem([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    sol = simplex_solve(p)
    assert sol.status == "optimal"
    assert sol.x == [F(8, 5), F(6, 5)] and sol.objective == F(-14, 5)
    assert verify_solution(p, sol) == []


def test_equality_and_redundant_row():
    p = dense_problem([1, 2, 3], A_eq=[[1, 1, 1], [2, 2, 2]], b_eq=[1, 2])
    sol = simplex_solve(p)
    assert sol.status == "optimal" and sol.objective == 1
    assert verify_solution(p, sol) == []


def test_beale_cycling_example():
    c = [F(-3, 4), 150, F(-1, 50), 6]
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    p = dense_problem(c, A_ub=A, b_ub=[0, 0, 1])
    sol = simplex_solve(p)
    assert sol.status == "optimal"
    assert sol.objective == F(-1, 20)
    assert sol.x == [F(1, 25), 0, 1, 0]
    assert verify_solution(p, sol) == []


def test_infeasible_gives_farkas():
    p = dense_problem([1, 1], A_eq=[[1, 1]], b_eq=[1], A_ub=[[1, 1]], b_ub=[F(1, 2)])
    sol = simplex_solve(p)
    assert sol.status == "infeasible"
    assert verify_solution(p, sol) == []


def test_unbounded_gives_ray():
    p = dense_problem([-1, 0], A_ub=[[-1, 1]], b_ub=[1])
    sol = simplex_solve(p)
    assert sol.status == "unbounded"
    assert verify_solution(p, sol) == []


def test_tampering_detected():
    p = dense_problem([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    sol = simplex_solve(p)
    bad = LpSolution("optimal", x=[F(1), F(1)], objective=sol.objective, dual_eq=sol.dual_eq, dual_ub=sol.dual_ub)
    assert verify_solution(p, bad)
    bad = LpSolution("optimal", x=sol.x, objective=sol.objective, dual_eq=sol.dual_eq,
                     dual_ub=[y / 2 for y in sol.dual_ub])
    assert verify_solution(p, bad)
    inf = dense_problem([1], A_eq=[[1]], b_eq=[1])
    assert verify_solution(inf, LpSolution("infeasible", farkas=([F(1)], [])))


rational = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2), st.integers(0, 3), st.data())
def test_random_lps_against_scipy(n, m_eq, m_ub, data):
    c = data.draw(st.lists(rational, min_size=n, max_size=n))
    A_eq = [data.draw(st.lists(rational, min_size=n, max_size=n)) for _ in range(m_eq)]
    b_eq = data.draw(st.lists(rational, min_size=m_eq, max_size=m_eq))
    A_ub = [data.draw(st.lists(rational, min_size=n, max_size=n)) for _ in range(m_ub)]
    b_ub = data.draw(st.lists(rational, min_size=m_ub, max_size=m_ub))
    # box keeps every feasible instance bounded
    A_ub = A_ub + [[1 if j == i else 0 for j in range(n)] for i in range(n)]
    b_ub = b_ub + [5] * n
    p = dense_problem(c, A_eq, b_eq, A_ub, b_ub)
    sol = simplex_solve(p)
    assert verify_solution(p, sol) == []
    ref = scipy_opt.linprog([float(x) for x in c], A_ub=[[float(x) for x in r] for r in A_ub],
                            b_ub=[float(x) for x in b_ub], A_eq=[[float(x) for x in r] for r in A_eq] or None,
                            b_eq=[float(x) for x in b_eq] or None, bounds=[(0, None)] * n, method="highs")
    if sol.status == "optimal":
        assert ref.status == 0
        assert abs(ref.fun - float(sol.objective)) < 1e-7
    else:
        assert sol.status == "infeasible" and ref.status == 2
