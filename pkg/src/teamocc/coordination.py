"""The coordinated system: a single decision maker choosing joint prescriptions from
common observations and its own past prescriptions.

The latent state of the lifted system is ``(privs, s)`` with ``privs`` the tuple of the
agents' private histories.  :class:`CoordinatedSystem` memoizes the policy-free weights
``Omega(ht)[(privs, s)]`` from which posteriors, the common-observation kernel and the
coordination cost tables are all ratios.
"""

from __future__ import annotations

from fractions import Fraction

from .enumeration import assemble, extend_private, htilde_common, htilde_time
from .errors import FlowViolation, PolicyHistoryMismatch
from .occupancy import CostTables, OccupationMeasure, combine, forward_weights
from .policies import CoordinationPolicy, DecentralizedProfile, FiniteMixture, ProductMixture

ZERO = Fraction(0)
ONE = Fraction(1)


class CoordinatedSystem:
    def __init__(self, model, pindex):
        self.model = model
        self.pindex = pindex
        self._omega = {}
        self._mass = {}
        self._children = {}
        self._initial()

    def _initial(self):
        n = self.model.n_agents
        roots = {}
        for s, o, p in self.model.initial:
            privs = tuple(((o[k + 1],), ()) for k in range(n))
            cell = roots.setdefault((o[0],), {})
            cell[(privs, s)] = cell.get((privs, s), ZERO) + p
        for ht, w in roots.items():
            self._omega[ht] = w

    def roots(self):
        return sorted(ht for ht in self._omega if len(ht) == 1)

    def initial_common_marginal(self):
        return {ht[0]: self.mass(ht) for ht in self.roots()}

    def omega(self, ht):
        """Policy-free weights at ``ht`` (empty dict if unreachable)."""
        if ht in self._omega:
            return self._omega[ht]
        if len(ht) == 1:
            return {}
        self.children(ht[:-2], ht[-2])
        return self._omega.get(ht, {})

    def mass(self, ht):
        m = self._mass.get(ht)
        if m is None:
            m = sum(self.omega(ht).values(), ZERO)
            self._mass[ht] = m
        return m

    def children(self, ht, gamma):
        """``{o0: Omega(ht + (gamma, o0))}`` for every common symbol with positive weight."""
        key = (ht, gamma)
        got = self._children.get(key)
        if got is not None:
            return got
        t = htilde_time(ht)
        model = self.model
        n = model.n_agents
        out = {}
        for (privs, s), w in self.omega(ht).items():
            a = self.pindex.apply(t, gamma, privs)
            for s2, o, q in model.transition[(s, a)]:
                privs2 = tuple(extend_private(privs[k], a[k], o[k + 1]) for k in range(n))
                cell = out.setdefault(o[0], {})
                cell[(privs2, s2)] = cell.get((privs2, s2), ZERO) + w * q
        for o0, cell in out.items():
            self._omega[ht + (gamma, o0)] = cell
        self._children[key] = out
        return out

    def posterior(self, ht):
        m = self.mass(ht)
        return {k: v / m for k, v in self.omega(ht).items()} if m else {}

    def kernel(self, ht, gamma):
        """P~(o0' | ht, gamma)."""
        m = self.mass(ht)
        if not m:
            return {}
        return {o0: sum(cell.values(), ZERO) / m for o0, cell in sorted(self.children(ht, gamma).items())}

    def costs(self, ht, gamma):
        """(c~, d~) at (ht, gamma)."""
        t = htilde_time(ht)
        m = self.mass(ht)
        K = self.model.n_constraints
        if not m:
            return ZERO, tuple(ZERO for _ in range(K))
        c = ZERO
        d = [ZERO] * K
        for (privs, s), w in self.omega(ht).items():
            a = self.pindex.apply(t, gamma, privs)
            c += w * self.model.cost_c[(s, a)]
            dv = self.model.cost_d[(s, a)]
            for k in range(K):
                d[k] += w * dv[k]
        return c / m, tuple(x / m for x in d)

    def reachable_tree(self, horizon, cap=None):
        """Layers ``[[ht, ...] per t]`` of positive-mass prescription histories over all prescriptions."""
        layers = [self.roots()]
        for t in range(1, horizon):
            nxt = []
            gammas = self.pindex.prescriptions(t, cap)
            for ht in layers[-1]:
                for g in gammas:
                    for o0 in sorted(self.children(ht, g)):
                        nxt.append(ht + (g, o0))
            layers.append(nxt)
        return layers


def coordinated_system(model, pindex):
    cache = model.cache()
    key = ("coordinated_system", id(pindex))
    entry = cache.get(key)
    if entry is None or entry[0] is not pindex:
        entry = (pindex, CoordinatedSystem(model, pindex))
        cache[key] = entry
    return entry[1]


def _rule_or_uniform(policy, pindex, t, ht, cap):
    d = policy.rule(t, ht)
    if d is not None:
        return d
    gammas = pindex.prescriptions(t, cap)
    w = Fraction(1, len(gammas))
    return {g: w for g in gammas}


def coordinated_forward(model, pindex, policy, horizon, discount=ONE, cap=None, return_weights=False):
    """Coordination occupation measure of a coordination policy or a finite mixture of them.

    Runs the policy-weighted recursion over ``W_t(ht)[(privs, s)]``.
    """
    discount = Fraction(discount)
    if isinstance(policy, FiniteMixture):
        measures = [coordinated_forward(model, pindex, v, horizon, discount, cap) for _, v in policy.atoms]
        return combine(measures, [w for w, _ in policy.atoms])
    if not isinstance(policy, CoordinationPolicy):
        raise TypeError(f"expected a coordination policy, got {type(policy).__name__}")
    if policy.horizon < horizon or pindex.horizon < horizon:
        raise PolicyHistoryMismatch(f"policy/prescription index do not cover horizon {horizon}")
    n = model.n_agents
    W = {}
    for s, o, p in model.initial:
        privs = tuple(((o[k + 1],), ()) for k in range(n))
        cell = W.setdefault((o[0],), {})
        cell[(privs, s)] = cell.get((privs, s), ZERO) + p
    out = {}
    layers = []
    for t in range(1, horizon + 1):
        scale = discount ** (t - 1)
        nxt = {}
        for ht in sorted(W):
            cell = W[ht]
            mass = sum(cell.values(), ZERO)
            if not mass:
                continue
            rule = _rule_or_uniform(policy, pindex, t, ht, cap)
            for gamma, v in rule.items():
                if not v:
                    continue
                out[(t, ht, gamma)] = scale * mass * v
                if t == horizon:
                    continue
                for (privs, s), w in cell.items():
                    a = pindex.apply(t, gamma, privs)
                    base = w * v
                    for s2, o, q in model.transition[(s, a)]:
                        privs2 = tuple(extend_private(privs[k], a[k], o[k + 1]) for k in range(n))
                        c2 = nxt.setdefault(ht + (gamma, o[0]), {})
                        c2[(privs2, s2)] = c2.get((privs2, s2), ZERO) + base * q
        if return_weights:
            layers.append(W)
        W = nxt
    measure = OccupationMeasure(horizon, discount, out, space="coordination")
    return (measure, layers) if return_weights else measure


def common_obs_kernel(system, keys):
    """``{(t, ht, gamma): {o0: P~(o0 | ht, gamma)}}`` over the given cells."""
    return {(t, ht, g): system.kernel(ht, g) for t, ht, g in keys}


def coordination_cost_tables(system, horizon, keys=None, cap=None):
    """c~ and d~ over ``keys`` (e.g. a measure's support) or over the full reachable tree."""
    if keys is None:
        keys = []
        for t, layer in enumerate(system.reachable_tree(horizon, cap), 1):
            gammas = system.pindex.prescriptions(t, cap)
            keys.extend((t, ht, g) for ht in layer for g in gammas)
    c, d = {}, {}
    for t, ht, g in keys:
        c[(t, ht, g)], d[(t, ht, g)] = system.costs(ht, g)
    return CostTables(horizon, c, d, space="coordination")


def project_to_joint(measure, system):
    """Push a coordination measure down to (t, joint history, joint action) via the posterior."""
    pindex = system.pindex
    out = {}
    for (t, ht, gamma), q in measure.weights.items():
        h0 = htilde_common(ht)
        for (privs, s), p in system.posterior(ht).items():
            key = (t, assemble(h0, privs), pindex.apply(t, gamma, privs))
            out[key] = out.get(key, ZERO) + q * p
    return OccupationMeasure(measure.horizon, measure.discount, out)


def check_flow(measure, system):
    """First violated mass/flow identity as ``(cell, lhs, rhs)``, or None."""
    alpha = measure.discount
    T = measure.horizon
    by_ht = {}
    for (t, ht, g), q in measure.weights.items():
        by_ht[(t, ht)] = by_ht.get((t, ht), ZERO) + q
    for o0, p in sorted(system.initial_common_marginal().items()):
        lhs = by_ht.get((1, (o0,)), ZERO)
        if lhs != p:
            return ((1, (o0,)), lhs, p)
    for (t, ht) in by_ht:
        if t == 1 and ht[0] not in system.initial_common_marginal():
            return ((1, ht), by_ht[(t, ht)], ZERO)
    expected = {}
    for (t, ht, g), q in measure.weights.items():
        if t == T:
            continue
        for o0, p in system.kernel(ht, g).items():
            key = (t + 1, ht + (g, o0))
            expected[key] = expected.get(key, ZERO) + alpha * q * p
    for key in sorted(set(expected) | {k for k in by_ht if k[0] > 1}):
        lhs = by_ht.get(key, ZERO)
        rhs = expected.get(key, ZERO)
        if lhs != rhs:
            return (key, lhs, rhs)
    return None


def measure_to_policy(measure, system):
    """Behavioral coordination policy whose measure is ``measure``: the conditional rule per ht."""
    if measure.space != "coordination":
        raise TypeError("measure_to_policy needs a coordination-space measure")
    bad = check_flow(measure, system)
    if bad is not None:
        cell, lhs, rhs = bad
        raise FlowViolation(f"flow identity fails at {cell}: {lhs} != {rhs}", cell=repr(cell),
                            lhs=str(lhs), rhs=str(rhs))
    totals = {}
    for (t, ht, g), q in measure.weights.items():
        totals[(t, ht)] = totals.get((t, ht), ZERO) + q
    rules = [dict() for _ in range(measure.horizon)]
    for (t, ht, g), q in sorted(measure.weights.items()):
        rules[t - 1].setdefault(ht, {})[g] = q / totals[(t, ht)]
    return CoordinationPolicy(tuple(rules))


def joint_measure(model, policy, horizon, discount=ONE, pindex=None, index=None, cap=None):
    """Joint-history occupation measure of any policy class."""
    if isinstance(policy, (DecentralizedProfile, ProductMixture)):
        return forward_weights(model, policy, horizon, discount)
    if isinstance(policy, FiniteMixture) and all(isinstance(p, DecentralizedProfile) for _, p in policy.atoms):
        return forward_weights(model, policy, horizon, discount)
    if pindex is None:
        raise ValueError("coordination policies need a prescription index")
    system = coordinated_system(model, pindex)
    return project_to_joint(coordinated_forward(model, pindex, policy, horizon, discount, cap), system)
