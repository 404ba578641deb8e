"""Exact rational linear programming.

Problems are ``min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0`` with sparse
rows (dicts column -> coefficient).  :func:`simplex_solve` is a two-phase primal
simplex on a sparse tableau with Bland's rule; :func:`verify_solution` re-checks a
returned solution from the problem data alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LpProblem:
    n_vars: int
    objective: dict  # col -> coefficient
    eq_rows: list = field(default_factory=list)  # [(row dict, rhs)]
    ub_rows: list = field(default_factory=list)
    var_names: list = None
    eq_labels: list = None
    ub_labels: list = None

    def add_eq(self, row, rhs, label=None):
        self.eq_rows.append((row, Fraction(rhs)))
        if self.eq_labels is not None:
            self.eq_labels.append(label)

    def add_ub(self, row, rhs, label=None):
        self.ub_rows.append((row, Fraction(rhs)))
        if self.ub_labels is not None:
            self.ub_labels.append(label)

    @property
    def shape(self):
        return len(self.eq_rows) + len(self.ub_rows), self.n_vars


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: list = None
    objective: Fraction = None
    dual_eq: list = None
    dual_ub: list = None
    basis: list = None
    farkas: tuple = None  # (y_eq, y_ub) certifying infeasibility
    ray: list = None  # improving direction certifying unboundedness
    pivots: int = 0


def simplex_solve(problem, max_pivots=1_000_000):
    n = problem.n_vars
    rows = [dict(r) for r, _ in problem.eq_rows] + [dict(r) for r, _ in problem.ub_rows]
    rhs = [b for _, b in problem.eq_rows] + [b for _, b in problem.ub_rows]
    n_eq = len(problem.eq_rows)
    m = len(rows)
    # slack columns n .. n + m_ub - 1, artificial columns after
    for k in range(m - n_eq):
        rows[n_eq + k][n + k] = ONE
    n_struct = n + (m - n_eq)
    art0 = n_struct
    sign = []
    for i in range(m):
        rows[i] = {j: Fraction(v) for j, v in rows[i].items() if v}
        if rhs[i] < 0:
            rows[i] = {j: -v for j, v in rows[i].items()}
            rhs[i] = -rhs[i]
            sign.append(-1)
        else:
            sign.append(1)
        rows[i][art0 + i] = ONE
    basis = [art0 + i for i in range(m)]
    tab = _Tableau(rows, rhs, basis, art0)

    # phase 1: minimize the sum of artificials
    cost1 = {art0 + i: ONE for i in range(m)}
    tab.set_objective(cost1)
    status = tab.run(max_pivots)
    assert status == "optimal"
    if tab.value > 0:
        # y_i = 1 - r_{art_i}; y.A <= 0 and y.b > 0
        y = [sign[i] * (ONE - tab.obj.get(art0 + i, ZERO)) for i in range(m)]
        return LpSolution(status="infeasible", farkas=(y[:n_eq], y[n_eq:]), pivots=tab.pivots)
    tab.drive_out_artificials()

    cost2 = {j: Fraction(v) for j, v in problem.objective.items() if v}
    tab.set_objective(cost2)
    status = tab.run(max_pivots)
    if status == "unbounded":
        j = tab.ray_col
        ray = [ZERO] * n
        if j < n:
            ray[j] = ONE
        for i, b in enumerate(tab.basis):
            a = tab.rows[i].get(j, ZERO)
            if a and b < n:
                ray[b] = -a
        return LpSolution(status="unbounded", ray=ray, pivots=tab.pivots)
    x = [ZERO] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            x[b] = tab.rhs[i]
    # dual y = c_B B^-1, read off the artificial columns: r_art_i = 0 - y_i
    y = [sign[i] * -tab.obj.get(art0 + i, ZERO) for i in range(m)]
    objective = sum((cost2.get(j, ZERO) * x[j] for j in range(n) if x[j]), ZERO)
    return LpSolution(status="optimal", x=x, objective=objective, dual_eq=y[:n_eq], dual_ub=y[n_eq:],
                      basis=list(tab.basis), pivots=tab.pivots)


class _Tableau:
    def __init__(self, rows, rhs, basis, art0):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.art0 = art0
        self.pivots = 0
        self.ray_col = None

    def set_objective(self, cost):
        # reduced costs r = c - c_B B^-1 A over the current tableau
        obj = dict(cost)
        value = ZERO
        for i, b in enumerate(self.basis):
            cb = cost.get(b, ZERO)
            if not cb:
                continue
            value += cb * self.rhs[i]
            for j, a in self.rows[i].items():
                obj[j] = obj.get(j, ZERO) - cb * a
        self.obj = {j: v for j, v in obj.items() if v}
        self.value = value

    def pivot(self, r, j):
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            row = {k: v / piv for k, v in row.items()}
            self.rhs[r] /= piv
        self.rows[r] = row
        br = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(j)
            if not f:
                continue
            for k, v in row.items():
                nv = other.get(k, ZERO) - f * v
                if nv:
                    other[k] = nv
                else:
                    other.pop(k, None)
            self.rhs[i] -= f * br
        f = self.obj.get(j)
        if f:
            for k, v in row.items():
                nv = self.obj.get(k, ZERO) - f * v
                if nv:
                    self.obj[k] = nv
                else:
                    self.obj.pop(k, None)
            self.value += f * br
        self.basis[r] = j
        self.pivots += 1

    def run(self, max_pivots):
        art0 = self.art0
        while True:
            # Bland: lowest-index improving column (artificials never re-enter)
            entering = None
            for j, v in self.obj.items():
                if v < 0 and j < art0 and (entering is None or j < entering):
                    entering = j
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                self.ray_col = entering
                return "unbounded"
            self.pivot(best[1], entering)
            if self.pivots > max_pivots:
                raise RuntimeError("simplex pivot limit exceeded")

    def drive_out_artificials(self):
        for i, b in enumerate(self.basis):
            if b < self.art0:
                continue
            cols = [j for j, v in self.rows[i].items() if j < self.art0 and v]
            if cols:
                self.pivot(i, min(cols))
            # otherwise the row is redundant; the artificial stays basic at zero and no
            # entering column can touch it


def verify_solution(problem, sol):
    """Independent exact re-check of a solution or certificate. Returns a list of violations."""
    problems = []
    n = problem.n_vars
    c = problem.objective
    if sol.status == "optimal":
        x = sol.x
        if any(v < 0 for v in x):
            problems.append("negative primal value")
        for i, (row, b) in enumerate(problem.eq_rows):
            if sum((v * x[j] for j, v in row.items()), ZERO) != b:
                problems.append(f"equality row {i} violated")
        slack_ub = []
        for i, (row, b) in enumerate(problem.ub_rows):
            s = b - sum((v * x[j] for j, v in row.items()), ZERO)
            slack_ub.append(s)
            if s < 0:
                problems.append(f"inequality row {i} violated")
        y_eq, y_ub = sol.dual_eq, sol.dual_ub
        if any(y > 0 for y in y_ub):
            problems.append("inequality dual with wrong sign")
        reduced = {j: Fraction(v) for j, v in c.items()}
        for y, (row, _) in zip(list(y_eq) + list(y_ub), list(problem.eq_rows) + list(problem.ub_rows)):
            if y:
                for j, v in row.items():
                    reduced[j] = reduced.get(j, ZERO) - y * v
        for j in range(n):
            r = reduced.get(j, ZERO)
            if r < 0:
                problems.append(f"dual infeasible at column {j}")
                break
            if r and x[j]:
                problems.append(f"complementary slackness fails at column {j}")
                break
        for i, (y, s) in enumerate(zip(y_ub, slack_ub)):
            if y and s:
                problems.append(f"complementary slackness fails at inequality {i}")
        primal = sum((Fraction(v) * x[j] for j, v in c.items()), ZERO)
        dual = sum((y * b for y, (_, b) in zip(y_eq, problem.eq_rows)), ZERO) + \
            sum((y * b for y, (_, b) in zip(y_ub, problem.ub_rows)), ZERO)
        if primal != dual or primal != sol.objective:
            problems.append(f"objective mismatch: primal {primal}, dual {dual}, reported {sol.objective}")
    elif sol.status == "infeasible":
        y_eq, y_ub = sol.farkas
        if any(y > 0 for y in y_ub):
            problems.append("Farkas multiplier on an inequality has the wrong sign")
        ya = {}
        for y, (row, _) in zip(list(y_eq) + list(y_ub), list(problem.eq_rows) + list(problem.ub_rows)):
            for j, v in row.items():
                ya[j] = ya.get(j, ZERO) + y * v
        if any(v > 0 for v in ya.values()):
            problems.append("Farkas certificate: y.A has a positive entry")
        yb = sum((y * b for y, (_, b) in zip(list(y_eq) + list(y_ub), list(problem.eq_rows) + list(problem.ub_rows))),
                 ZERO)
        if yb <= 0:
            problems.append("Farkas certificate: y.b is not positive")
    elif sol.status == "unbounded":
        d = sol.ray
        if any(v < 0 for v in d):
            problems.append("ray has a negative entry")
        for i, (row, _) in enumerate(problem.eq_rows):
            if sum((v * d[j] for j, v in row.items()), ZERO) != 0:
                problems.append(f"ray leaves equality row {i}")
        for i, (row, _) in enumerate(problem.ub_rows):
            if sum((v * d[j] for j, v in row.items()), ZERO) > 0:
                problems.append(f"ray increases inequality row {i}")
        if sum((Fraction(v) * d[j] for j, v in c.items()), ZERO) >= 0:
            problems.append("ray does not decrease the objective")
    return problems


def dense_problem(c, A_eq=(), b_eq=(), A_ub=(), b_ub=()):
    """Convenience constructor from dense lists."""
    def sparse(row):
        return {j: Fraction(v) for j, v in enumerate(row) if v}
    p = LpProblem(n_vars=len(c), objective=sparse(c))
    for row, b in zip(A_eq, b_eq):
        p.add_eq(sparse(row), b)
    for row, b in zip(A_ub, b_ub):
        p.add_ub(sparse(row), b)
    return p
