"""Brute-force reference computations, deliberately sharing no code path with the recursions.

Everything here walks explicit trajectories (state, observation, action, and for the
coordinated system prescription) one at a time.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .occupancy import OccupationMeasure
from .policies import CoordinationPolicy, DecentralizedProfile, FiniteMixture, ProductMixture

ZERO = Fraction(0)
ONE = Fraction(1)


def _agent_dist(agent, t, obs, acts, n):
    h0 = tuple(o[0] for o in obs)
    hn = (tuple(o[n + 1] for o in obs), tuple(a[n] for a in acts))
    return agent.rules[t - 1][(h0, hn)]


def trajectory_count(model, horizon):
    """Upper bound on the number of (s, o, a) trajectories, from the table supports."""
    width = max(len(v) for v in model.transition.values())
    return len(model.initial) * len(model.joint_actions) ** horizon * width ** (horizon - 1)


def trajectory_oracle(model, policy, horizon, discount=ONE):
    """(measure, C, D) of a decentralized policy by explicit summation over trajectories."""
    discount = Fraction(discount)
    if isinstance(policy, DecentralizedProfile):
        atoms = [(ONE, policy)]
    elif isinstance(policy, FiniteMixture):
        atoms = list(policy.atoms)
    elif isinstance(policy, ProductMixture):
        atoms = []
        for combo in itertools.product(*(f.atoms for f in policy.factors)):
            w = ONE
            for c in combo:
                w *= c[0]
            atoms.append((w, DecentralizedProfile(tuple(c[1] for c in combo))))
    else:
        raise TypeError(type(policy).__name__)
    K = model.n_constraints
    weights = {}
    totals = [ZERO, [ZERO] * K]

    def walk(profile, t, s, obs, acts, p):
        dists = [_agent_dist(agent, t, obs, acts, n) for n, agent in enumerate(profile.agents)]
        for a in itertools.product(*(range(len(d)) for d in dists)):
            pa = p
            for n, d in enumerate(dists):
                pa *= d[a[n]]
            if not pa:
                continue
            scale = discount ** (t - 1)
            key = (t, (obs, acts), a)
            weights[key] = weights.get(key, ZERO) + scale * pa
            totals[0] += scale * pa * model.cost_c[(s, a)]
            for k in range(K):
                totals[1][k] += scale * pa * model.cost_d[(s, a)][k]
            if t < horizon:
                for s2, o, q in model.transition[(s, a)]:
                    walk(profile, t + 1, s2, obs + (o,), acts + (a,), pa * q)

    for w, profile in atoms:
        for s, o, p in model.initial:
            walk(profile, 1, s, (o,), (), w * p)
    return OccupationMeasure(horizon, discount, weights), totals[0], tuple(totals[1])


def coordination_trajectory_oracle(model, pindex, policy, horizon, discount=ONE):
    """(coordination measure, C, D) by summing over (s, o, gamma, a) trajectories."""
    discount = Fraction(discount)
    atoms = list(policy.atoms) if isinstance(policy, FiniteMixture) else [(ONE, policy)]
    K = model.n_constraints
    weights = {}
    totals = [ZERO, [ZERO] * K]
    n = model.n_agents

    def rule(v, t, ht):
        d = v.rules[t - 1]
        key = ht if v.key_mode == "htilde" else ht[0::2]
        if key in d:
            return d[key]
        gammas = pindex.prescriptions(t)
        return {g: Fraction(1, len(gammas)) for g in gammas}

    def walk(v, t, s, ht, obs_n, acts_n, p):
        for gamma, pg in rule(v, t, ht).items():
            pp = p * pg
            if not pp:
                continue
            a = tuple(pindex.agent_apply(t, k, gamma[k], (obs_n[k], acts_n[k])) for k in range(n))
            scale = discount ** (t - 1)
            key = (t, ht, gamma)
            weights[key] = weights.get(key, ZERO) + scale * pp
            totals[0] += scale * pp * model.cost_c[(s, a)]
            for k in range(K):
                totals[1][k] += scale * pp * model.cost_d[(s, a)][k]
            if t < horizon:
                for s2, o, q in model.transition[(s, a)]:
                    walk(v, t + 1, s2, ht + (gamma, o[0]),
                         tuple(obs_n[k] + (o[k + 1],) for k in range(n)),
                         tuple(acts_n[k] + (a[k],) for k in range(n)), pp * q)

    for w, v in atoms:
        if not isinstance(v, CoordinationPolicy):
            raise TypeError(type(v).__name__)
        for s, o, p in model.initial:
            walk(v, 1, s, (o[0],), tuple((o[k + 1],) for k in range(n)), tuple(() for _ in range(n)), w * p)
    return OccupationMeasure(horizon, discount, weights, space="coordination"), totals[0], tuple(totals[1])


def pure_coordination_points(model, pindex, horizon, discount=ONE, cap=200_000):
    """Every (C, D) pair achievable by a pure coordination policy, deduplicated.

    Recursion on bundles of absolute-probability particles ``(p, s, privs)``: a pure
    policy picks one prescription per bundle, then the subtrees of distinct next common
    observations are chosen independently, so their point sets combine by Minkowski sum.
    """
    discount = Fraction(discount)
    n = model.n_agents
    K = model.n_constraints

    def points(t, bundle):
        gammas = pindex.prescriptions(t, cap)
        scale = discount ** (t - 1)
        out = set()
        for g in gammas:
            c = ZERO
            d = [ZERO] * K
            children = {}
            for p, s, privs in bundle:
                a = pindex.apply(t, g, privs)
                c += p * model.cost_c[(s, a)]
                for k in range(K):
                    d[k] += p * model.cost_d[(s, a)][k]
                if t < horizon:
                    for s2, o, q in model.transition[(s, a)]:
                        privs2 = tuple(((privs[k][0] + (o[k + 1],)), privs[k][1] + (a[k],)) for k in range(n))
                        children.setdefault(o[0], []).append((p * q, s2, privs2))
            here = {(scale * c, tuple(scale * x for x in d))}
            for o0 in sorted(children):
                sub = points(t + 1, children[o0])
                here = {(c1 + c2, tuple(x + y for x, y in zip(d1, d2))) for c1, d1 in here for c2, d2 in sub}
                if len(here) > cap:
                    raise RuntimeError("point set exceeds the cap")
            out |= here
        return out

    roots = {}
    for s, o, p in model.initial:
        roots.setdefault(o[0], []).append((p, s, tuple(((o[k + 1],), ()) for k in range(n))))
    total = {(ZERO, tuple(ZERO for _ in range(K)))}
    for o0 in sorted(roots):
        sub = points(1, roots[o0])
        total = {(c1 + c2, tuple(x + y for x, y in zip(d1, d2))) for c1, d1 in total for c2, d2 in sub}
    return sorted(total)


def atom_lp_oracle(points, kappa):
    """min sum w_i C_i s.t. sum w_i D_i <= kappa over mixture weights w.

    With K = 1 an optimal mixture uses at most two atoms, so the optimum is the best feasible
    single point or the best two-point mix whose constraint value equals kappa.  More
    constraints fall back to a dense LP over the atoms.  Returns None when infeasible.
    """
    if len(kappa) != 1:
        return _atom_lp_simplex(points, kappa)
    kap = kappa[0]
    best_on = {}
    for c, d in points:
        x = d[0]
        if x not in best_on or c < best_on[x]:
            best_on[x] = c
    pts = sorted(best_on.items())
    best = None
    for x, c in pts:
        if x <= kap and (best is None or c < best):
            best = c
    below = [(x, c) for x, c in pts if x < kap]
    above = [(x, c) for x, c in pts if x > kap]
    for x1, c1 in below:
        for x2, c2 in above:
            v = c1 + (c2 - c1) * (kap - x1) / (x2 - x1)
            if best is None or v < best:
                best = v
    return best


def _atom_lp_simplex(points, kappa):
    from .lp import LpProblem, simplex_solve
    prob = LpProblem(len(points), {i: c for i, (c, _) in enumerate(points) if c})
    prob.add_eq({i: ONE for i in range(len(points))}, ONE)
    for k, kap in enumerate(kappa):
        prob.add_ub({i: d[k] for i, (_, d) in enumerate(points) if d[k]}, kap)
    sol = simplex_solve(prob)
    return sol.objective if sol.status == "optimal" else None


def pure_decentralized_profiles(model, index, horizon=None):
    """All pure profiles, constant-joint-action ones first, then the rest in product order."""
    from .policies import AgentPolicy, unit
    horizon = index.horizon if horizon is None else horizon
    per_agent = []
    for n, k in enumerate(model.action_sizes()):
        slots = [(t, key) for t in range(1, horizon + 1) for key in index.agent_keys(n, t)]
        pols = []
        for pick in itertools.product(range(k), repeat=len(slots)):
            rules = [dict() for _ in range(horizon)]
            for (t, key), i in zip(slots, pick):
                rules[t - 1][key] = unit(k, i)
            pols.append((pick, AgentPolicy(tuple(rules))))
        per_agent.append(pols)
    constant, rest = [], []
    for combo in itertools.product(*per_agent):
        prof = DecentralizedProfile(tuple(c[1] for c in combo))
        flat = [len(set(c[0])) == 1 for c in combo]
        (constant if all(flat) else rest).append(prof)
    return constant + rest
