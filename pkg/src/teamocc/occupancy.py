"""Exact occupation measures over (time, joint history, joint action) for decentralized policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .enumeration import common_part, extend, initial_history, prefix, private_part
from .errors import DimensionMismatch
from .lp import LpProblem, simplex_solve
from .model import discount_mass
from .policies import (
    DecentralizedProfile,
    FiniteMixture,
    ProductMixture,
    joint_action_kernel,
    kuhn_collapse,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class OccupationMeasure:
    """Sparse measure: ``weights[(t, history, action)] = alpha^(t-1) P(history, action)``.

    ``space="coordination"`` measures key ``(t, prescription history, joint prescription)``.
    Zero entries are dropped so equality of measures is equality of the dicts.
    """

    horizon: int
    discount: Fraction
    weights: dict
    space: str = "joint_history"

    def __post_init__(self):
        self.discount = Fraction(self.discount)
        self.weights = {k: v for k, v in self.weights.items() if v}

    def total(self):
        return sum(self.weights.values(), ZERO)

    def expected_total(self):
        return discount_mass(self.horizon, self.discount)

    def at_time(self, t):
        return {k: v for k, v in self.weights.items() if k[0] == t}

    def truncated(self, horizon):
        return OccupationMeasure(horizon, self.discount, {k: v for k, v in self.weights.items() if k[0] <= horizon},
                                 self.space)

    def first_difference(self, other):
        """First cell (in sorted key order) where the two measures differ, or None."""
        for k in sorted(set(self.weights) | set(other.weights)):
            a = self.weights.get(k, ZERO)
            b = other.weights.get(k, ZERO)
            if a != b:
                return k, a, b
        return None

    def same_as(self, other):
        return (self.space == other.space and self.horizon == other.horizon
                and self.discount == other.discount and self.weights == other.weights)

    def conditional_action_law(self, t, h):
        """Normalized distribution over the second key component at (t, h)."""
        cell = {k[2]: v for k, v in self.weights.items() if k[0] == t and k[1] == h}
        tot = sum(cell.values(), ZERO)
        return {a: v / tot for a, v in cell.items()} if tot else {}


def combine(measures, coeffs):
    """Linear combination of measures sharing (horizon, discount, space)."""
    measures = list(measures)
    first = measures[0]
    acc = {}
    for m, c in zip(measures, coeffs):
        if (m.horizon, m.discount, m.space) != (first.horizon, first.discount, first.space):
            raise DimensionMismatch("cannot combine measures with different horizon/discount/space")
        c = Fraction(c)
        for k, v in m.weights.items():
            acc[k] = acc.get(k, ZERO) + c * v
    return OccupationMeasure(first.horizon, first.discount, acc, first.space)


def _check_horizon(policy, horizon):
    if policy.horizon < horizon:
        from .errors import PolicyHistoryMismatch
        raise PolicyHistoryMismatch(f"policy covers t <= {policy.horizon}, requested horizon {horizon}")


def forward_state_weights(model, profile, horizon):
    """Yield ``(t, {h: {s: P(S_t = s, H_t = h)}}, {h: joint action law})`` for t = 1..horizon."""
    w = {}
    for s, o, p in model.initial:
        w.setdefault(initial_history(o), {})
        w[initial_history(o)][s] = w[initial_history(o)].get(s, ZERO) + p
    for t in range(1, horizon + 1):
        pis = {h: joint_action_kernel(profile, t, h) for h in w}
        yield t, w, pis
        if t == horizon:
            break
        nxt = {}
        for h, sw in w.items():
            for a, pa in pis[h].items():
                for s, ws in sw.items():
                    base = ws * pa
                    for s2, o, q in model.transition[(s, a)]:
                        cell = nxt.setdefault(extend(h, a, o), {})
                        cell[s2] = cell.get(s2, ZERO) + base * q
        w = nxt


def _forward_profile(model, profile, horizon, discount):
    _check_horizon(profile, horizon)
    out = {}
    for t, w, pis in forward_state_weights(model, profile, horizon):
        scale = discount ** (t - 1)
        for h, sw in w.items():
            mass = sum(sw.values(), ZERO) * scale
            for a, pa in pis[h].items():
                out[(t, h, a)] = mass * pa
    return OccupationMeasure(horizon, discount, out)


def kernel_weights(model, horizon):
    """Policy-free weights: for every reachable h_t, the map s -> P1 x product of transition terms.

    Summed over s this is the product of the observation-kernel factors of the chain
    relation; the ratio of two such sums is the policy-independent posterior over states.
    """
    cache = model.cache()
    key = ("kernel_weights", horizon)
    if key in cache:
        return cache[key]
    layers = []
    w = {}
    for s, o, p in model.initial:
        cell = w.setdefault(initial_history(o), {})
        cell[s] = cell.get(s, ZERO) + p
    layers.append(w)
    for _ in range(1, horizon):
        nxt = {}
        for h, sw in w.items():
            for a in model.joint_actions:
                for s, ws in sw.items():
                    for s2, o, q in model.transition[(s, a)]:
                        cell = nxt.setdefault(extend(h, a, o), {})
                        cell[s2] = cell.get(s2, ZERO) + ws * q
        w = nxt
        layers.append(w)
    cache[key] = layers
    return layers


def kernel_masses(model, horizon):
    cache = model.cache()
    key = ("kernel_masses", horizon)
    if key not in cache:
        cache[key] = [{h: sum(sw.values(), ZERO) for h, sw in layer.items()} for layer in kernel_weights(model, horizon)]
    return cache[key]


def _pure_joint_action(profile, t, h):
    h0 = common_part(h)
    return tuple(agent.action(t, h0, private_part(h, n)) for n, agent in enumerate(profile.agents))


def chain_pure_mixture(model, mixture, horizon, discount):
    """Measure of a joint mixture of pure profiles via the chain relation.

    Each atom contributes its weight to the cells consistent with its own actions; the
    policy-free observation-kernel product is applied once per cell.
    """
    _check_horizon(mixture, horizon)
    K = kernel_masses(model, horizon)
    acc = {}
    for w, profile in mixture.atoms:
        frontier = list(K[0])
        for t in range(1, horizon + 1):
            nxt = []
            for h in frontier:
                a = _pure_joint_action(profile, t, h)
                key = (t, h, a)
                acc[key] = acc.get(key, ZERO) + w
                if t < horizon:
                    layer = K[t]
                    for o in model.joint_observations:
                        h2 = extend(h, a, o)
                        if h2 in layer:
                            nxt.append(h2)
            frontier = nxt
    out = {key: discount ** (key[0] - 1) * K[key[0] - 1][key[1]] * v for key, v in acc.items()}
    return OccupationMeasure(horizon, discount, out)


def chain_product_mixture(model, pm, horizon, discount):
    """Measure of a product mixture: kernel product times the per-agent mixture-integrated realization weights."""
    _check_horizon(pm, horizon)
    K = kernel_masses(model, horizon)
    memo = [dict() for _ in pm.factors]

    def realization(n, t, h0, hn, an):
        key = (h0, hn, an)
        cache = memo[n]
        if key not in cache:
            tot = ZERO
            for w, agent in pm.factors[n].atoms:
                r = w * agent.prob(t, h0, hn, an)
                k = t - 1
                while r and k >= 1:
                    r *= agent.prob(k, h0[:k], prefix(hn, k), hn[1][k - 1])
                    k -= 1
                tot += r
            cache[key] = tot
        return cache[key]

    out = {}
    for t in range(1, horizon + 1):
        scale = discount ** (t - 1)
        for h, mass in K[t - 1].items():
            h0 = common_part(h)
            privs = [private_part(h, n) for n in range(model.n_agents)]
            for a in model.joint_actions:
                v = mass * scale
                for n in range(model.n_agents):
                    if not v:
                        break
                    v *= realization(n, t, h0, privs[n], a[n])
                if v:
                    out[(t, h, a)] = v
    return OccupationMeasure(horizon, discount, out)


def forward_weights(model, policy, horizon, discount=ONE, method="auto"):
    """Occupation measure of any decentralized policy class.

    ``method`` selects the route for mixtures: ``"atoms"`` (convex combination of per-atom
    forward recursions), ``"chain"`` (kernel product times mixture-integrated policy
    products), ``"expand"`` / ``"collapse"`` for product mixtures.  ``"auto"`` picks the
    cheapest route.
    """
    discount = Fraction(discount)
    if isinstance(policy, DecentralizedProfile):
        return _forward_profile(model, policy, horizon, discount)
    if isinstance(policy, FiniteMixture):
        atoms = policy.atoms
        if not all(isinstance(p, DecentralizedProfile) for _, p in atoms):
            raise TypeError("forward_weights handles decentralized mixtures; use coordination.joint_measure")
        if method in ("auto", "chain") and policy.is_pure:
            return chain_pure_mixture(model, policy, horizon, discount)
        return combine([_forward_profile(model, p, horizon, discount) for _, p in atoms], [w for w, _ in atoms])
    if isinstance(policy, ProductMixture):
        if method in ("auto", "chain"):
            return chain_product_mixture(model, policy, horizon, discount)
        if method == "collapse":
            return _forward_profile(model, kuhn_collapse(policy, horizon), horizon, discount)
        if method in ("expand", "atoms"):
            return forward_weights(model, policy.to_joint(), horizon, discount, method="atoms")
        raise ValueError(f"unknown method {method!r}")
    raise TypeError(f"unsupported policy type {type(policy).__name__}")


@dataclass
class CostTables:
    """Policy-independent conditional expected immediate costs per cell."""

    horizon: int
    c: dict
    d: dict
    unreachable: frozenset = field(default_factory=frozenset)
    space: str = "joint_history"

    def bounded_by(self, c_bound, d_bound):
        return all(abs(v) <= c_bound for v in self.c.values()) and \
            all(abs(x) <= d_bound for v in self.d.values() for x in v)


def cost_tables(model, horizon, index=None):
    """c_hat(t, h, a) = sum_s omega(h, s) c(s, a) / sum_s omega(h, s) from the policy-free weights."""
    K = model.n_constraints
    c, d = {}, {}
    for t, layer in enumerate(kernel_weights(model, horizon), 1):
        for h, sw in layer.items():
            tot = sum(sw.values(), ZERO)
            for a in model.joint_actions:
                c[(t, h, a)] = sum((ws * model.cost_c[(s, a)] for s, ws in sw.items()), ZERO) / tot
                d[(t, h, a)] = tuple(sum((ws * model.cost_d[(s, a)][k] for s, ws in sw.items()), ZERO) / tot
                                     for k in range(K))
    unreachable = set()
    if index is not None:
        zero_d = tuple(ZERO for _ in range(K))
        for t in range(1, horizon + 1):
            for h in index.joint_histories(t):
                for a in model.joint_actions:
                    if (t, h, a) not in c:
                        c[(t, h, a)] = ZERO
                        d[(t, h, a)] = zero_d
                        unreachable.add((t, h, a))
    return CostTables(horizon, c, d, frozenset(unreachable))


def conditional_costs_under(model, profile, horizon):
    """E^u[c | h, a] and E^u[d | h, a] from the policy's own state weights (positive-mass cells only)."""
    c, d = {}, {}
    K = model.n_constraints
    for t, w, pis in forward_state_weights(model, profile, horizon):
        for h, sw in w.items():
            for a, pa in pis[h].items():
                joint = {s: ws * pa for s, ws in sw.items()}
                tot = sum(joint.values(), ZERO)
                if not tot:
                    continue
                c[(t, h, a)] = sum((v * model.cost_c[(s, a)] for s, v in joint.items()), ZERO) / tot
                d[(t, h, a)] = tuple(sum((v * model.cost_d[(s, a)][k] for s, v in joint.items()), ZERO) / tot
                                     for k in range(K))
    return c, d


def long_term_costs(measure, tables):
    """Inner products <rho, c> and <rho, d_k>."""
    if measure.space != tables.space or measure.horizon > tables.horizon:
        raise DimensionMismatch("measure and cost tables do not share space/horizon",
                                measure_space=measure.space, table_space=tables.space)
    K = None
    C = ZERO
    D = None
    for key, v in measure.weights.items():
        try:
            ck = tables.c[key]
            dk = tables.d[key]
        except KeyError:
            raise DimensionMismatch(f"cost tables have no entry for cell {key}") from None
        if D is None:
            K = len(dk)
            D = [ZERO] * K
        C += v * ck
        for k in range(K):
            D[k] += v * dk[k]
    return C, tuple(D or ())


@dataclass
class DominanceReport:
    dominated: bool
    mode: str
    failures: list  # indices of B not covered
    weights: dict  # index of B -> list of convex weights over A (hull mode)


def dominance_check(A, B, convex=False):
    """Is every measure of B in A (exactly), or in the convex hull of A?"""
    A = list(A)
    failures = []
    weights = {}
    if not convex:
        pool = [m.weights for m in A]
        for i, m in enumerate(B):
            if not any(m.weights == p for p in pool):
                failures.append(i)
        return DominanceReport(not failures, "exact", failures, weights)
    for i, m in enumerate(B):
        cells = sorted(set(m.weights).union(*(a.weights for a in A)))
        prob = LpProblem(n_vars=len(A), objective={})
        prob.add_eq({j: ONE for j in range(len(A))}, ONE)
        for cell in cells:
            prob.add_eq({j: a.weights[cell] for j, a in enumerate(A) if cell in a.weights}, m.weights.get(cell, ZERO))
        sol = simplex_solve(prob)
        if sol.status == "optimal":
            weights[i] = sol.x
        else:
            failures.append(i)
    return DominanceReport(not failures, "convex_hull", failures, weights)
