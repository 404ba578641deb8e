"""Constrained team problem as an LP over coordination occupation measures, Lagrangian
dual by backward induction, duality gaps, and the nonconvexity probe."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .coordination import coordinated_forward, coordination_cost_tables, measure_to_policy
from .errors import NegativeMultiplier, NoWitnessFound, SizeLimitExceeded
from .lp import LpProblem, simplex_solve, verify_solution
from .occupancy import OccupationMeasure, combine, cost_tables, forward_weights, long_term_costs
from .policies import CoordinationPolicy

ZERO = Fraction(0)
ONE = Fraction(1)
DEFAULT_COLUMN_CAP = 100_000


@dataclass
class CopLp:
    problem: LpProblem
    columns: list  # column -> (t, ht, gamma)
    horizon: int
    discount: Fraction
    kappa: tuple


def build_cop_lp(system, horizon, discount=ONE, kappa=None, column_cap=DEFAULT_COLUMN_CAP, cap=None):
    """Columns q(t, ht, gamma) over positive-mass ht; mass, flow and constraint rows."""
    discount = Fraction(discount)
    model = system.model
    kappa = tuple(model.kappa if kappa is None else (Fraction(k) for k in kappa))
    pindex = system.pindex
    n_cols = 0
    tree = [system.roots()]
    for t in range(1, horizon + 1):
        n_cols += len(tree[-1]) * pindex.count(t)
        if n_cols > column_cap:
            raise SizeLimitExceeded(f"COP LP needs more than {column_cap} columns", cardinality=n_cols,
                                    cap=column_cap)
        if t < horizon:
            gammas = pindex.prescriptions(t, cap)
            tree.append([ht + (g, o0) for ht in tree[-1] for g in gammas for o0 in sorted(system.children(ht, g))])
    columns = []
    col_of = {}
    for t, layer in enumerate(tree, 1):
        gammas = pindex.prescriptions(t, cap)
        for ht in layer:
            for g in gammas:
                col_of[(t, ht, g)] = len(columns)
                columns.append((t, ht, g))
    K = len(kappa)
    objective = {}
    d_rows = [dict() for _ in range(K)]
    for j, (t, ht, g) in enumerate(columns):
        c, d = system.costs(ht, g)
        if c:
            objective[j] = c
        for k in range(K):
            if d[k]:
                d_rows[k][j] = d[k]
    names = [f"q[{t},{ht!r},{g!r}]" for t, ht, g in columns]
    prob = LpProblem(len(columns), objective, var_names=names, eq_labels=[], ub_labels=[])
    for ht in tree[0]:
        prob.add_eq({col_of[(1, ht, g)]: ONE for g in pindex.prescriptions(1, cap)}, system.mass(ht),
                    label=("mass", ht))
    for j, (t, ht, g) in enumerate(columns):
        if t == horizon:
            continue
        nxt = pindex.prescriptions(t + 1, cap)
        for o0, p in system.kernel(ht, g).items():
            child = ht + (g, o0)
            row = {col_of[(t + 1, child, g2)]: ONE for g2 in nxt}
            row[j] = -discount * p
            prob.add_eq(row, ZERO, label=("flow", t, ht, g, o0))
    for k in range(K):
        prob.add_ub(d_rows[k], kappa[k], label=("constraint", k))
    return CopLp(prob, columns, horizon, discount, kappa)


@dataclass
class CopResult:
    status: str
    lp: CopLp
    solution: object
    certificate_errors: list
    objective: Fraction = None
    constraint_values: tuple = None
    multipliers: tuple = None  # lambda* = -(inequality duals) >= 0
    measure: OccupationMeasure = None
    policy: CoordinationPolicy = None


def solve_cop(system, horizon, discount=ONE, kappa=None, column_cap=DEFAULT_COLUMN_CAP, cap=None):
    lp = build_cop_lp(system, horizon, discount, kappa, column_cap, cap)
    sol = simplex_solve(lp.problem)
    errors = verify_solution(lp.problem, sol)
    res = CopResult(sol.status, lp, sol, errors)
    if sol.status != "optimal":
        return res
    weights = {lp.columns[j]: v for j, v in enumerate(sol.x) if v}
    res.measure = OccupationMeasure(horizon, lp.discount, weights, space="coordination")
    res.objective = sol.objective
    K = len(lp.kappa)
    res.constraint_values = tuple(
        sum((v * sol.x[j] for j, v in lp.problem.ub_rows[k][0].items()), ZERO) for k in range(K))
    res.multipliers = tuple(-y for y in sol.dual_ub)
    res.policy = measure_to_policy(res.measure, system)
    return res


def evaluate_coordination(system, policy, horizon, discount=ONE):
    """(C, D) of a coordination policy via its measure and the coordination cost tables."""
    q = coordinated_forward(system.model, system.pindex, policy, horizon, discount)
    return long_term_costs(q, coordination_cost_tables(system, horizon, keys=q.weights))


@dataclass
class DualValue:
    value: Fraction  # g(lambda)
    policy: CoordinationPolicy
    lagrangian_cost: Fraction  # min of <rho, c + lambda.d>
    multipliers: tuple


def lagrangian_dp(system, horizon, discount=ONE, lam=(), kappa=None, cap=None):
    """g(lambda) = min over coordination policies of <rho, c~ + lambda.d~> - lambda.kappa."""
    discount = Fraction(discount)
    model = system.model
    lam = tuple(Fraction(x) for x in lam) or tuple(ZERO for _ in range(model.n_constraints))
    if any(x < 0 for x in lam):
        raise NegativeMultiplier(f"multipliers must be non-negative, got {[str(x) for x in lam]}")
    kappa = tuple(model.kappa if kappa is None else (Fraction(k) for k in kappa))
    pindex = system.pindex
    gamma_lists = [pindex.prescriptions(t, cap) for t in range(1, horizon + 1)]
    rules = [dict() for _ in range(horizon)]

    def value(t, ht):
        best = None
        best_g = None
        for g in gamma_lists[t - 1]:
            c, d = system.costs(ht, g)
            v = c + sum((l * x for l, x in zip(lam, d)), ZERO)
            if t < horizon:
                for o0, p in system.kernel(ht, g).items():
                    v += discount * p * value(t + 1, ht + (g, o0))
            if best is None or v < best:
                best, best_g = v, g
        rules[t - 1][ht] = {best_g: ONE}
        return best

    total = ZERO
    for ht in system.roots():
        total += system.mass(ht) * value(1, ht)
    g_val = total - sum((l * k for l, k in zip(lam, kappa)), ZERO)
    return DualValue(g_val, CoordinationPolicy(tuple(rules)), total, lam)


@dataclass
class DualAscentResult:
    multipliers: tuple
    value: Fraction
    primal: Fraction
    gap: Fraction
    certified: bool
    bracket: Fraction
    history: list = field(default_factory=list)


def supergradient(system, horizon, discount, policy, kappa):
    _, D = evaluate_coordination(system, policy, horizon, discount)
    return tuple(x - k for x, k in zip(D, kappa))


def dual_ascent(system, horizon, discount=ONE, kappa=None, primal=None, certificate=None, grid=None,
                bisect_steps=12, lam_max=None, cap=None):
    """Maximize g over lambda >= 0.

    An LP dual certificate short-circuits the search.  Otherwise each coordinate is scanned
    on a grid and refined by bisection on the sign of the supergradient; the reported
    bracket is the final bisection interval width.
    """
    model = system.model
    kappa = tuple(model.kappa if kappa is None else (Fraction(k) for k in kappa))
    K = len(kappa)
    history = []
    if certificate is not None:
        lam = tuple(Fraction(x) for x in certificate)
        dv = lagrangian_dp(system, horizon, discount, lam, kappa, cap)
        history.append((lam, dv.value))
        gap = None if primal is None else primal - dv.value
        return DualAscentResult(lam, dv.value, primal, gap, gap == 0, ZERO, history)
    if lam_max is None:
        lam_max = Fraction(4) * max(model.c_bound, ONE) / max(model.d_bound, ONE)
    grid = grid or [lam_max * Fraction(i, 8) for i in range(9)]
    lam = [ZERO] * K
    bracket = ZERO
    for k in range(K):
        best = None
        for x in grid:
            trial = tuple(lam[:k] + [x] + lam[k + 1:])
            v = lagrangian_dp(system, horizon, discount, trial, kappa, cap).value
            history.append((trial, v))
            if best is None or v > best[1]:
                best = (x, v)
        i = grid.index(best[0])
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        for _ in range(bisect_steps):
            mid = (lo + hi) / 2
            trial = tuple(lam[:k] + [mid] + lam[k + 1:])
            dv = lagrangian_dp(system, horizon, discount, trial, kappa, cap)
            history.append((trial, dv.value))
            if dv.value > best[1]:
                best = (mid, dv.value)
            sg = supergradient(system, horizon, discount, dv.policy, kappa)[k]
            if sg > 0:
                lo = mid
            elif sg < 0:
                hi = mid
            else:
                lo = hi = mid
                break
        lam[k] = best[0]
        bracket = max(bracket, hi - lo)
    lam = tuple(lam)
    value = max(v for _, v in history)
    gap = None if primal is None else primal - value
    return DualAscentResult(lam, value, primal, gap, gap == 0, bracket, history)


def weak_duality_grid(system, horizon, discount, primal, points=10, lam_max=None, kappa=None, cap=None):
    """[(lambda, g(lambda), g <= primal)] on an evenly spaced grid along the all-ones direction."""
    model = system.model
    K = model.n_constraints
    if lam_max is None:
        lam_max = Fraction(2) * max(model.c_bound, ONE)
    out = []
    for i in range(points):
        x = lam_max * Fraction(i, points - 1)
        lam = tuple(x for _ in range(K))
        g = lagrangian_dp(system, horizon, discount, lam, kappa, cap).value
        out.append((lam, g, g <= primal))
    return out


# decentralized (independently randomized) class


def _grid_profiles(model, index, horizon, den, cap):
    from .policies import AgentPolicy, DecentralizedProfile
    per_agent = []
    total = 1
    for n, k in enumerate(model.action_sizes()):
        slots = [(t, key) for t in range(1, horizon + 1) for key in index.agent_keys(n, t)]
        dists = [tuple(Fraction(x, den) for x in c) for c in itertools.product(range(den + 1), repeat=k)
                 if sum(c) == den]
        total *= len(dists) ** len(slots)
        if total > cap:
            raise SizeLimitExceeded(f"behavioral grid has more than {cap} profiles", cardinality=total, cap=cap)
        agents = []
        for pick in itertools.product(dists, repeat=len(slots)):
            rules = [dict() for _ in range(horizon)]
            for (t, key), d in zip(slots, pick):
                rules[t - 1][key] = d
            agents.append(AgentPolicy(tuple(rules)))
        per_agent.append(agents)
    for combo in itertools.product(*per_agent):
        yield DecentralizedProfile(tuple(combo))


def decentralized_primal_grid(model, index, horizon, discount=ONE, kappa=None, den=8, cap=200_000):
    """Best feasible (C, D) over behavioral profiles whose rules lie on the 1/den lattice."""
    kappa = tuple(model.kappa if kappa is None else (Fraction(k) for k in kappa))
    tables = cost_tables(model, horizon)
    best = None
    for u in _grid_profiles(model, index, horizon, den, cap):
        C, D = long_term_costs(forward_weights(model, u, horizon, discount), tables)
        if all(x <= k for x, k in zip(D, kappa)) and (best is None or C < best[0]):
            best = (C, D, u)
    return best


def decentralized_dual(model, index, horizon, discount=ONE, kappa=None):
    """max over lambda >= 0 of min over profiles of the Lagrangian, exactly.

    The Lagrangian is multilinear in the behavioral rule entries, so its minimum over
    behavioral profiles is attained at a pure profile.  The outer maximization over the
    finitely many pure (C, D) points is the LP  max z  s.t.  z <= C_i + lambda.(D_i - kappa).
    """
    from .oracles import pure_decentralized_profiles
    kappa = tuple(model.kappa if kappa is None else (Fraction(k) for k in kappa))
    tables = cost_tables(model, horizon)
    pts = set()
    for u in pure_decentralized_profiles(model, index, horizon):
        pts.add(long_term_costs(forward_weights(model, u, horizon, discount), tables))
    K = len(kappa)
    # variables: z+ (0), z- (1), lambda (2..)
    prob = LpProblem(2 + K, {0: -ONE, 1: ONE})
    for C, D in sorted(pts):
        row = {0: ONE, 1: -ONE}
        for k in range(K):
            if D[k] - kappa[k]:
                row[2 + k] = -(D[k] - kappa[k])
        prob.add_ub(row, C)
    sol = simplex_solve(prob)
    if sol.status != "optimal":
        return None, None
    lam = tuple(sol.x[2:])
    return -sol.objective, lam


# nonconvexity of the decentralized behavioral measure set


@dataclass
class FactorizationCertificate:
    t: int
    history: tuple
    conditional: dict  # joint action -> probability
    marginals: list  # per agent: action -> probability
    cell: tuple  # joint action where conditional != product of marginals
    conditional_value: Fraction
    product_value: Fraction


def factorization_failure(measure, n_agents, action_sizes):
    """First (t, h) whose conditional joint-action law is not the product of its marginals."""
    cells = {}
    for (t, h, a), v in measure.weights.items():
        cells.setdefault((t, h), {})[a] = v
    for (t, h) in sorted(cells):
        cell = cells[(t, h)]
        tot = sum(cell.values(), ZERO)
        cond = {a: v / tot for a, v in cell.items()}
        margs = []
        for n in range(n_agents):
            m = [ZERO] * action_sizes[n]
            for a, p in cond.items():
                m[a[n]] += p
            margs.append(m)
        bad = []
        for a in itertools.product(*(range(k) for k in action_sizes)):
            prod = ONE
            for n in range(n_agents):
                prod *= margs[n][a[n]]
            if cond.get(a, ZERO) != prod:
                bad.append((cond.get(a, ZERO) != 0, a, prod))
        if bad:
            # prefer a joint action the midpoint never plays but any product would
            _, a, prod = min(bad)
            return FactorizationCertificate(t, h, cond, [tuple(m) for m in margs], a, cond.get(a, ZERO), prod)
    return None


def check_factorization_certificate(measure, cert, action_sizes):
    """Recompute the conditional and marginals at the certificate's history and confirm the mismatch."""
    cell = {a: v for (t, h, a), v in measure.weights.items() if t == cert.t and h == cert.history}
    tot = sum(cell.values(), ZERO)
    if not tot:
        return False
    p = cell.get(cert.cell, ZERO) / tot
    prod = ONE
    for n, k in enumerate(action_sizes):
        prod *= sum((v for a, v in cell.items() if a[n] == cert.cell[n]), ZERO) / tot
    return p == cert.conditional_value and prod == cert.product_value and p != prod


@dataclass
class NonconvexityWitness:
    u1: object
    u2: object
    weight: Fraction
    midpoint: OccupationMeasure
    certificate: FactorizationCertificate
    pairs_tried: int


def nonconvexity_probe(model, index, horizon, discount=ONE, sample_count=200, seed=0, den=4, pure_cap=256):
    """Search for two profiles whose measure midpoint cannot come from any single profile.

    Pure pairs are tried first (constant joint actions lead), then random lattice pairs.
    A witness is certified by a non-factorizing conditional joint-action law, which no
    single decentralized profile can produce.
    """
    from .oracles import pure_decentralized_profiles
    from .sampling import random_profile, rng_for
    half = Fraction(1, 2)
    sizes = model.action_sizes()
    tried = 0
    candidates = []
    n_pure = 1
    for n, k in enumerate(sizes):
        n_pure *= k ** sum(len(index.agent_keys(n, t)) for t in range(1, horizon + 1))
    if n_pure <= pure_cap:
        candidates = pure_decentralized_profiles(model, index, horizon)
        measures = [forward_weights(model, u, horizon, discount) for u in candidates]
        for i, j in itertools.combinations(range(len(candidates)), 2):
            tried += 1
            mid = combine([measures[i], measures[j]], [half, half])
            cert = factorization_failure(mid, model.n_agents, sizes)
            if cert is not None:
                return NonconvexityWitness(candidates[i], candidates[j], half, mid, cert, tried)
    rng = rng_for(seed, "nonconvexity")
    for _ in range(sample_count):
        u1 = random_profile(rng, model, index, den=den, horizon=horizon)
        u2 = random_profile(rng, model, index, den=den, horizon=horizon)
        tried += 1
        mid = combine([forward_weights(model, u1, horizon, discount), forward_weights(model, u2, horizon, discount)],
                      [half, half])
        cert = factorization_failure(mid, model.n_agents, sizes)
        if cert is not None:
            return NonconvexityWitness(u1, u2, half, mid, cert, tried)
    raise NoWitnessFound(f"no witness among {tried} pairs (grid 1/{den})", pairs=tried, resolution=den)

