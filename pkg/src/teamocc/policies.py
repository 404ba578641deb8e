"""Policy classes and the constructive conversions between them.

Decentralized rules are keyed by agent information states ``(h0, hn)``; a
distribution over an agent's actions is a tuple of Fractions indexed by action id.
Coordination rules map a prescription-observation history (or, for lifted pure
profiles, just its common-observation part) to a sparse distribution over joint
prescriptions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .enumeration import htilde_common, prefix
from .errors import NotOnPathRealizable, PolicyFormatError, PolicyHistoryMismatch, SupportExplosion

ONE = Fraction(1)
ZERO = Fraction(0)
DEFAULT_SUPPORT_CAP = 200_000


def unit(k, i):
    return tuple(ONE if j == i else ZERO for j in range(k))


def uniform(k):
    return tuple(Fraction(1, k) for _ in range(k))


def _check_dist(dist, what):
    if any(p < 0 for p in dist) or sum(dist) != 1:
        raise PolicyFormatError(f"{what}: not a probability vector: {dist}")


@dataclass(frozen=True)
class AgentPolicy:
    """One agent's decision rules: ``rules[t-1][(h0, hn)]`` is a distribution over its actions."""

    rules: tuple

    @property
    def horizon(self):
        return len(self.rules)

    def dist(self, t, h0, hn):
        try:
            return self.rules[t - 1][(h0, hn)]
        except (KeyError, IndexError):
            raise PolicyHistoryMismatch(f"no decision rule at t={t} for information state {(h0, hn)}",
                                        t=t) from None

    def prob(self, t, h0, hn, a):
        return self.dist(t, h0, hn)[a]

    @property
    def is_pure(self):
        return all(max(d) == 1 for layer in self.rules for d in layer.values())

    def action(self, t, h0, hn):
        d = self.dist(t, h0, hn)
        return d.index(ONE)

    def key(self):
        return tuple(tuple(sorted(layer.items())) for layer in self.rules)

    def validate(self):
        for t, layer in enumerate(self.rules, 1):
            for k, d in layer.items():
                _check_dist(d, f"agent rule t={t} at {k}")
        return self


@dataclass(frozen=True)
class DecentralizedProfile:
    agents: tuple  # AgentPolicy per agent

    @property
    def horizon(self):
        return min(a.horizon for a in self.agents)

    @property
    def is_pure(self):
        return all(a.is_pure for a in self.agents)

    def key(self):
        return tuple(a.key() for a in self.agents)

    def validate(self):
        for a in self.agents:
            a.validate()
        return self


@dataclass(frozen=True)
class FiniteMixture:
    """Finite-support mixture ``[(weight, atom), ...]``; weights positive and summing to one."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((Fraction(w), p) for w, p in self.atoms)
        if not atoms:
            raise PolicyFormatError("a mixture needs at least one atom")
        if any(w <= 0 for w, _ in atoms):
            raise PolicyFormatError("mixture weights must be positive")
        if sum(w for w, _ in atoms) != 1:
            raise PolicyFormatError(f"mixture weights sum to {sum(w for w, _ in atoms)}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def is_pure(self):
        return all(p.is_pure for _, p in self.atoms)

    @property
    def horizon(self):
        return min(p.horizon for _, p in self.atoms)

    def merged(self):
        """Merge atoms with identical rules (summing weights), keeping first-seen order."""
        acc = {}
        first = {}
        for w, p in self.atoms:
            k = p.key()
            if k in acc:
                acc[k] += w
            else:
                acc[k] = w
                first[k] = p
        return FiniteMixture(tuple((acc[k], first[k]) for k in acc))


@dataclass(frozen=True)
class ProductMixture:
    """Independent per-agent mixtures; ``factors[n]`` is a FiniteMixture of AgentPolicy."""

    factors: tuple

    @property
    def horizon(self):
        return min(f.horizon for f in self.factors)

    @property
    def joint_support_size(self):
        return math.prod(len(f.atoms) for f in self.factors)

    def to_joint(self, cap=DEFAULT_SUPPORT_CAP):
        """The induced joint mixture over decentralized profiles."""
        size = self.joint_support_size
        if size > cap:
            raise SupportExplosion(f"joint support {size} exceeds the cap {cap}", count=size)
        atoms = []
        for combo in itertools.product(*(f.atoms for f in self.factors)):
            w = math.prod((c[0] for c in combo), start=ONE)
            atoms.append((w, DecentralizedProfile(tuple(c[1] for c in combo))))
        return FiniteMixture(tuple(atoms))


@dataclass(frozen=True)
class CoordinationPolicy:
    """``rules[t-1][key]`` is a dict ``{gamma: weight}``.

    ``key_mode="htilde"`` keys rules by the full prescription-observation history;
    ``key_mode="common"`` keys them by its common-observation part only.  Histories with
    no rule are off-path; they follow the uniform rule over the prescription set.
    """

    rules: tuple
    key_mode: str = "htilde"

    @property
    def horizon(self):
        return len(self.rules)

    def rule(self, t, ht):
        key = ht if self.key_mode == "htilde" else htilde_common(ht)
        return self.rules[t - 1].get(key)

    @property
    def is_pure(self):
        return all(len(d) == 1 for layer in self.rules for d in layer.values())

    def key(self):
        return (self.key_mode, tuple(tuple(sorted((k, tuple(sorted(d.items()))) for k, d in layer.items()))
                                     for layer in self.rules))

    def validate(self):
        for t, layer in enumerate(self.rules, 1):
            for k, d in layer.items():
                if any(w < 0 for w in d.values()) or sum(d.values()) != 1:
                    raise PolicyFormatError(f"coordination rule at t={t}, {k} is not a distribution")
        return self


def joint_action_kernel(profile, t, h):
    """Probability of each joint action at joint history ``h``: product of the agents' rules."""
    h0 = tuple(o[0] for o in h[0])
    per_agent = []
    for n, agent in enumerate(profile.agents):
        hn = (tuple(o[n + 1] for o in h[0]), tuple(a[n] for a in h[1]))
        d = agent.dist(t, h0, hn)
        per_agent.append([(i, p) for i, p in enumerate(d) if p])
    out = {}
    for combo in itertools.product(*per_agent):
        out[tuple(c[0] for c in combo)] = math.prod((c[1] for c in combo), start=ONE)
    return out


def profile_from_function(index, n_actions, fn, horizon=None):
    """Build a profile from ``fn(n, t, h0, hn) -> distribution`` over the full history index."""
    horizon = index.horizon if horizon is None else horizon
    agents = []
    for n, k in enumerate(n_actions):
        rules = []
        for t in range(1, horizon + 1):
            layer = {}
            for key in index.agent_keys(n, t):
                d = tuple(Fraction(x) for x in fn(n, t, *key))
                if len(d) != k:
                    raise PolicyFormatError(f"agent {n + 1} rule at t={t} has {len(d)} entries, expected {k}")
                layer[key] = d
            rules.append(layer)
        agents.append(AgentPolicy(tuple(rules)))
    return DecentralizedProfile(tuple(agents)).validate()


def pure_profile_from_function(index, n_actions, fn, horizon=None):
    """Pure profile from ``fn(n, t, h0, hn) -> action id``."""
    return profile_from_function(index, n_actions, lambda n, t, h0, hn: unit(n_actions[n], fn(n, t, h0, hn)),
                                 horizon)


def behavioral_to_pure_agent_mixture(agent, cap=DEFAULT_SUPPORT_CAP):
    """One agent's behavioral policy as a mixture over pure policies (product of choice probabilities)."""
    slots = [(t, key, d) for t, layer in enumerate(agent.rules, 1) for key, d in layer.items()]
    choices = [[(i, p) for i, p in enumerate(d) if p] for _, _, d in slots]
    count = math.prod(len(c) for c in choices)
    if count > cap:
        raise SupportExplosion(f"pure expansion has {count} atoms, cap is {cap}", count=count, cap=cap)
    atoms = []
    for pick in itertools.product(*choices):
        rules = [dict() for _ in agent.rules]
        w = ONE
        for (t, key, d), (i, p) in zip(slots, pick):
            rules[t - 1][key] = unit(len(d), i)
            w *= p
        atoms.append((w, AgentPolicy(tuple(rules))))
    return FiniteMixture(tuple(atoms))


def behavioral_to_product_pure_mixture(profile, horizon=None, cap=DEFAULT_SUPPORT_CAP):
    """Independent per-agent product of pure policies realizing the same occupation measure."""
    if horizon is not None and profile.horizon < horizon:
        raise PolicyHistoryMismatch(f"profile covers t <= {profile.horizon}, need {horizon}")
    return ProductMixture(tuple(behavioral_to_pure_agent_mixture(a, cap) for a in profile.agents))


def flatten_joint_mixture(mixture, horizon=None, cap=DEFAULT_SUPPORT_CAP):
    """Joint mixture over behavioral profiles -> equivalent joint mixture over pure profiles."""
    acc = {}
    first = {}
    total = 0
    for w, profile in mixture.atoms:
        if profile.is_pure:
            expanded = [(ONE, profile)]
        else:
            expanded = behavioral_to_product_pure_mixture(profile, horizon, cap).to_joint(cap).atoms
        total += len(expanded)
        if total > cap:
            raise SupportExplosion(f"flattened support exceeds the cap {cap}", count=total, cap=cap)
        for v, pure in expanded:
            k = pure.key()
            if k in acc:
                acc[k] += w * v
            else:
                acc[k] = w * v
                first[k] = pure
    return FiniteMixture(tuple((acc[k], first[k]) for k in acc))


def _agent_prefix_weights(factor, t, h0, hn):
    """Per-atom probability that the atom produced the agent's own past actions in ``hn``."""
    out = []
    for w, agent in factor.atoms:
        r = w
        for k in range(1, t):
            r *= agent.prob(k, h0[:k], prefix(hn, k), hn[1][k - 1])
            if not r:
                break
        out.append(r)
    return out


def kuhn_collapse(product_mixture, horizon=None):
    """Behavioral profile equivalent to a product mixture (each agent has perfect recall).

    Each rule is the conditional law of the agent's next action given its own information under
    its factor mixture; information states of zero probability get the uniform rule.
    """
    horizon = product_mixture.horizon if horizon is None else horizon
    agents = []
    for factor in product_mixture.factors:
        template = factor.atoms[0][1]
        rules = []
        for t in range(1, horizon + 1):
            layer = {}
            for (h0, hn), d0 in template.rules[t - 1].items():
                k = len(d0)
                weights = _agent_prefix_weights(factor, t, h0, hn)
                den = sum(weights, ZERO)
                if not den:
                    layer[(h0, hn)] = uniform(k)
                    continue
                num = [ZERO] * k
                for r, (_, agent) in zip(weights, factor.atoms):
                    if r:
                        d = agent.dist(t, h0, hn)
                        for i in range(k):
                            if d[i]:
                                num[i] += r * d[i]
                layer[(h0, hn)] = tuple(x / den for x in num)
            rules.append(layer)
        agents.append(AgentPolicy(tuple(rules)))
    return DecentralizedProfile(tuple(agents))


def lift_prescription(profile, pindex, t, h0):
    """Joint prescription playing ``profile``'s time-t rules at common history ``h0``."""
    return tuple(tuple(agent.action(t, h0, hn) for hn in pindex.domain(t, n))
                 for n, agent in enumerate(profile.agents))


def psi_lift(pure_profile, pindex, index, horizon=None):
    """Canonical pure coordination policy prescribing exactly the profile's decision rules."""
    if not pure_profile.is_pure:
        raise PolicyFormatError("psi_lift needs a pure profile")
    horizon = pindex.horizon if horizon is None else horizon
    rules = []
    for t in range(1, horizon + 1):
        rules.append({h0: {lift_prescription(pure_profile, pindex, t, h0): ONE} for h0 in index.common_histories(t)})
    return CoordinationPolicy(tuple(rules), key_mode="common")


def mixture_transport(mixture, pindex, index, horizon=None):
    """Mixture of pure profiles -> mixture of their lifts, weights unchanged."""
    if isinstance(mixture, DecentralizedProfile):
        mixture = FiniteMixture(((ONE, mixture),))
    return FiniteMixture(tuple((w, psi_lift(u, pindex, index, horizon)) for w, u in mixture.atoms))


def pure_coordination_to_profile(policy, pindex, index, horizon=None):
    """The pure profile a pure coordination policy plays on path.

    Along a pure policy the prescription history is a function of the common history, so
    the profile reads off ``v_t(ht(h0))`` componentwise.  Missing rules and private histories
    outside the prescription domain default to action 0.
    """
    horizon = pindex.horizon if horizon is None else horizon
    if not policy.is_pure:
        raise PolicyFormatError("expected a pure coordination policy")
    n_agents = len(pindex.n_actions)
    rules = [[dict() for _ in range(horizon)] for _ in range(n_agents)]
    for t in range(1, horizon + 1):
        for h0 in index.common_histories(t):
            ht = (h0[0],)
            for k in range(1, t):
                ht = ht + (_pure_choice(policy, pindex, k, ht), h0[k])
            gamma = _pure_choice(policy, pindex, t, ht)
            for n in range(n_agents):
                k_act = pindex.n_actions[n]
                for hn in index.private_histories(n, t):
                    rules[n][t - 1][(h0, hn)] = unit(k_act, pindex.agent_apply(t, n, gamma[n], hn))
    return DecentralizedProfile(tuple(AgentPolicy(tuple(r)) for r in rules))


def _pure_choice(policy, pindex, t, ht):
    d = policy.rule(t, ht)
    if d is None:
        return pindex.default_prescription(t)
    (gamma,) = d.keys()
    return gamma


def coordination_to_pure_mixture(policy, pindex, horizon=None, cap=DEFAULT_SUPPORT_CAP):
    """Behavioral coordination policy -> mixture of pure ones with the same path law.

    The coordinator has perfect recall, so choosing independently at every on-path
    prescription history (probability = product of the choices) reproduces its behavior.
    Only histories reached through the policy's own support are expanded.
    """
    horizon = pindex.horizon if horizon is None else horizon
    n_common = pindex.n_common

    def expand(t, ht):
        # list of (weight, {(t, ht): gamma}) for the subtree rooted at ht
        d = policy.rule(t, ht)
        if d is None:
            d = {pindex.default_prescription(t): ONE}
        branches = []
        for gamma, w in d.items():
            if not w:
                continue
            if t == horizon:
                branches.append((w, {(t, ht): gamma}))
                continue
            subtrees = [expand(t + 1, ht + (gamma, o)) for o in range(n_common)]
            size = math.prod(len(s) for s in subtrees)
            if len(branches) + size > cap:
                raise NotOnPathRealizable(f"pure expansion exceeds the cap {cap}", cap=cap)
            for combo in itertools.product(*subtrees):
                v = w
                choice = {(t, ht): gamma}
                for cw, cchoice in combo:
                    v *= cw
                    choice.update(cchoice)
                branches.append((v, choice))
        return branches

    atoms = []
    for w_root in [expand(1, (o,)) for o in range(n_common)]:
        atoms.append(w_root)
    out = []
    for combo in itertools.product(*atoms):
        if len(out) >= cap:
            raise NotOnPathRealizable(f"pure expansion exceeds the cap {cap}", cap=cap)
        w = ONE
        choice = {}
        for cw, cchoice in combo:
            w *= cw
            choice.update(cchoice)
        rules = [dict() for _ in range(horizon)]
        for (t, ht), gamma in choice.items():
            rules[t - 1][ht] = {gamma: ONE}
        out.append((w, CoordinationPolicy(tuple(rules))))
    return FiniteMixture(tuple(out)).merged()


def transport_back(mixture, pindex, index, horizon=None, cap=DEFAULT_SUPPORT_CAP):
    """Mixture of coordination policies -> mixture of pure decentralized profiles, same joint measure."""
    if isinstance(mixture, CoordinationPolicy):
        mixture = FiniteMixture(((ONE, mixture),))
    atoms = []
    for w, v in mixture.atoms:
        pure_parts = [(ONE, v)] if v.is_pure else coordination_to_pure_mixture(v, pindex, horizon, cap).atoms
        for w2, v2 in pure_parts:
            atoms.append((w * w2, pure_coordination_to_profile(v2, pindex, index, horizon)))
            if len(atoms) > cap:
                raise NotOnPathRealizable(f"reverse transport exceeds the cap {cap}", cap=cap)
    return FiniteMixture(tuple(atoms)).merged()
