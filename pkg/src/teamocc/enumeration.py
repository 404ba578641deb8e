"""History and prescription spaces up to a finite horizon.

Representations (all plain tuples of ints, hashable and ordered):

* joint history      ``h  = (obs, acts)`` with ``obs`` a tuple of joint observations
  ``(o0, o1, .., oN)`` of length t and ``acts`` a tuple of joint actions of length t-1;
* common history     ``h0 = (o0_1, .., o0_t)``;
* private history    ``hn = (obs_n, acts_n)``, agent n's own observations and actions;
* prescription       ``gamma = (g1, .., gN)`` where ``gn`` lists agent n's action for each
  private history of its domain, in domain order;
* prescription-observation history ``ht = (o0_1, gamma_1, o0_2, .., gamma_{t-1}, o0_t)``.

Ids are dense and follow the extension order, so
``id(h_{t+1}) = (id(h_t) * |A| + id(a_t)) * |O| + id(o_{t+1})``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import SizeLimitExceeded

DEFAULT_HISTORY_CAP = 2_000_000
DEFAULT_PRESCRIPTION_CAP = 200_000


def initial_history(o):
    return ((o,), ())


def extend(h, a, o):
    obs, acts = h
    return (obs + (o,), acts + (a,))


def history_time(h):
    return len(h[0])


def common_part(h):
    return tuple(o[0] for o in h[0])


def private_part(h, n):
    """Agent ``n``'s private history (agents are 1-based in observations, 0-based in actions)."""
    obs, acts = h
    return (tuple(o[n + 1] for o in obs), tuple(a[n] for a in acts))


def project(h):
    """Split a joint history into (common, (private_1, .., private_N))."""
    n_agents = len(h[0][0]) - 1
    return common_part(h), tuple(private_part(h, n) for n in range(n_agents))


def assemble(h0, privs):
    """Inverse of :func:`project`."""
    t = len(h0)
    obs = tuple((h0[k],) + tuple(p[0][k] for p in privs) for k in range(t))
    acts = tuple(tuple(p[1][k] for p in privs) for k in range(t - 1))
    return (obs, acts)


def prefix(h, t):
    """Truncate a joint or private history to time ``t``."""
    return (h[0][:t], h[1][:t - 1])


def extend_private(hn, a, o):
    return (hn[0] + (o,), hn[1] + (a,))


def htilde_common(ht):
    return ht[0::2]


def htilde_prescriptions(ht):
    return ht[1::2]


def htilde_time(ht):
    return (len(ht) + 1) // 2


def joint_history_count(model, t):
    n_obs = math.prod(model.obs_sizes())
    n_act = math.prod(model.action_sizes())
    return n_obs ** t * n_act ** (t - 1)


def private_history_count(model, n, t):
    return len(model.private_obs[n]) ** t * len(model.actions[n]) ** (t - 1)


@dataclass
class HistoryIndex:
    horizon: int
    common: list  # common[t-1] -> list of common histories
    private: list  # private[n][t-1] -> list of private histories
    joint: list  # joint[t-1] -> list of joint histories
    common_ids: list
    private_ids: list
    joint_ids: list

    def common_histories(self, t):
        return self.common[t - 1]

    def private_histories(self, n, t):
        return self.private[n][t - 1]

    def joint_histories(self, t):
        return self.joint[t - 1]

    def joint_id(self, h):
        return self.joint_ids[history_time(h) - 1][h]

    def common_id(self, h0):
        return self.common_ids[len(h0) - 1][h0]

    def private_id(self, n, hn):
        return self.private_ids[n][len(hn[0]) - 1][hn]

    def agent_keys(self, n, t):
        """All (common, private) information states of agent n at time t, in id order."""
        return [(h0, hn) for h0 in self.common[t - 1] for hn in self.private[n][t - 1]]

    def cardinalities(self):
        rows = []
        for t in range(1, self.horizon + 1):
            rows.append((t, "joint", len(self.joint[t - 1])))
            rows.append((t, "common", len(self.common[t - 1])))
            for n in range(len(self.private)):
                rows.append((t, f"private_{n + 1}", len(self.private[n][t - 1])))
        return rows


def build_history_index(model, horizon, cap=DEFAULT_HISTORY_CAP):
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    size = joint_history_count(model, horizon)
    if size > cap:
        raise SizeLimitExceeded(f"|H_{horizon}| = {size} exceeds the cap {cap}", cardinality=size, cap=cap)
    n_common = len(model.common_obs)
    common = [[(o,) for o in range(n_common)]]
    for _ in range(1, horizon):
        common.append([h + (o,) for h in common[-1] for o in range(n_common)])
    private = []
    for n in range(model.n_agents):
        n_obs, n_act = len(model.private_obs[n]), len(model.actions[n])
        layers = [[((o,), ()) for o in range(n_obs)]]
        for _ in range(1, horizon):
            layers.append([extend_private(h, a, o) for h in layers[-1] for a in range(n_act) for o in range(n_obs)])
        private.append(layers)
    joint = [[initial_history(o) for o in model.joint_observations]]
    for _ in range(1, horizon):
        joint.append([extend(h, a, o) for h in joint[-1] for a in model.joint_actions for o in model.joint_observations])

    def ids(layers):
        return [{h: i for i, h in enumerate(layer)} for layer in layers]

    return HistoryIndex(
        horizon=horizon,
        common=common,
        private=private,
        joint=joint,
        common_ids=ids(common),
        private_ids=[ids(p) for p in private],
        joint_ids=ids(joint),
    )


def reachable_joint_histories(model, horizon):
    """Joint histories with positive probability under some action sequence, per time."""
    support = {}
    for s, o, p in model.initial:
        support.setdefault(initial_history(o), set()).add(s)
    layers = [sorted(support)]
    for _ in range(1, horizon):
        nxt = {}
        for h, states in support.items():
            for a in model.joint_actions:
                for s in states:
                    for s2, o, p in model.transition[(s, a)]:
                        nxt.setdefault(extend(h, a, o), set()).add(s2)
        support = nxt
        layers.append(sorted(support))
    return layers


@dataclass
class PrescriptionIndex:
    """Prescription domains per (t, agent) and the induced joint prescription spaces.

    Prescriptions are never materialized unless enumerated; ids are computed in mixed
    radix (agent 1 most significant, first domain entry most significant), which is also
    the enumeration order.  Private histories outside a domain are mapped to action 0.
    """

    horizon: int
    domain_mode: str
    domains: list  # domains[t-1][n] -> tuple of private histories
    n_actions: tuple
    n_common: int
    cap: int = DEFAULT_PRESCRIPTION_CAP

    def __post_init__(self):
        self._pos = [[{h: i for i, h in enumerate(dom)} for dom in layer] for layer in self.domains]

    def domain(self, t, n):
        return self.domains[t - 1][n]

    def agent_count(self, t, n):
        return self.n_actions[n] ** len(self.domains[t - 1][n])

    def count(self, t):
        return math.prod(self.agent_count(t, n) for n in range(len(self.n_actions)))

    def agent_apply(self, t, n, g, hn):
        i = self._pos[t - 1][n].get(hn)
        return 0 if i is None else g[i]

    def apply(self, t, gamma, privs):
        """Joint action ``gamma(h^{1:N})``; componentwise application of each agent's prescription."""
        pos = self._pos[t - 1]
        out = []
        for n, (g, hn) in enumerate(zip(gamma, privs)):
            i = pos[n].get(hn)
            out.append(0 if i is None else g[i])
        return tuple(out)

    def agent_prescriptions(self, t, n):
        return itertools.product(range(self.n_actions[n]), repeat=len(self.domains[t - 1][n]))

    def prescriptions(self, t, cap=None):
        """All joint prescriptions at time ``t`` in id order."""
        cap = self.cap if cap is None else cap
        total = self.count(t)
        if total > cap:
            raise SizeLimitExceeded(f"|Gamma_{t}| = {total} exceeds the cap {cap}", cardinality=total, cap=cap)
        return list(itertools.product(*(list(self.agent_prescriptions(t, n)) for n in range(len(self.n_actions)))))

    def prescription_id(self, t, gamma):
        pid = 0
        for n, g in enumerate(gamma):
            k = self.n_actions[n]
            local = 0
            for x in g:
                local = local * k + x
            pid = pid * self.agent_count(t, n) + local
        return pid

    def prescription_from_id(self, t, pid):
        parts = []
        for n in reversed(range(len(self.n_actions))):
            pid, local = divmod(pid, self.agent_count(t, n))
            k = self.n_actions[n]
            g = []
            for _ in self.domains[t - 1][n]:
                local, x = divmod(local, k)
                g.append(x)
            parts.append(tuple(reversed(g)))
        return tuple(reversed(parts))

    def default_prescription(self, t):
        return tuple(tuple(0 for _ in self.domains[t - 1][n]) for n in range(len(self.n_actions)))

    def constant_prescription(self, t, a):
        return tuple(tuple(a[n] for _ in self.domains[t - 1][n]) for n in range(len(self.n_actions)))

    def htilde_count(self, t):
        return self.n_common ** t * math.prod(self.count(k) for k in range(1, t))

    def htilde_id(self, ht):
        t = htilde_time(ht)
        hid = ht[0]
        for k in range(1, t):
            hid = (hid * self.count(k) + self.prescription_id(k, ht[2 * k - 1])) * self.n_common + ht[2 * k]
        return hid

    def htilde_from_id(self, t, hid):
        parts = []
        for k in range(t - 1, 0, -1):
            hid, o = divmod(hid, self.n_common)
            hid, pid = divmod(hid, self.count(k))
            parts = [self.prescription_from_id(k, pid), o] + parts
        return (hid,) + tuple(parts)

    def prescription_histories(self, t, cap=None):
        """Exhaustive enumeration of the prescription-observation histories at time t."""
        cap = self.cap if cap is None else cap
        total = self.htilde_count(t)
        if total > cap:
            raise SizeLimitExceeded(f"|H~_{t}| = {total} exceeds the cap {cap}", cardinality=total, cap=cap)
        layer = [(o,) for o in range(self.n_common)]
        for k in range(1, t):
            gammas = self.prescriptions(k, cap)
            layer = [ht + (g, o) for ht in layer for g in gammas for o in range(self.n_common)]
        return layer

    def cardinalities(self):
        rows = []
        for t in range(1, self.horizon + 1):
            for n in range(len(self.n_actions)):
                rows.append((t, f"prescriptions_{n + 1}", self.agent_count(t, n)))
            rows.append((t, "joint_prescriptions", self.count(t)))
            rows.append((t, "prescription_histories", self.htilde_count(t)))
        return rows


def build_prescription_index(model, horizon, index=None, domain_mode="reachable", cap=DEFAULT_PRESCRIPTION_CAP):
    """Prescription domains: every private history (``full``) or only reachable ones."""
    if domain_mode not in ("full", "reachable"):
        raise ValueError(f"domain_mode must be 'full' or 'reachable', got {domain_mode!r}")
    domains = []
    if domain_mode == "full":
        if index is None:
            index = build_history_index(model, horizon)
        for t in range(1, horizon + 1):
            domains.append([tuple(index.private_histories(n, t)) for n in range(model.n_agents)])
    else:
        reach = reachable_joint_histories(model, horizon)
        for t in range(1, horizon + 1):
            per_agent = [set() for _ in range(model.n_agents)]
            for h in reach[t - 1]:
                for n in range(model.n_agents):
                    per_agent[n].add(private_part(h, n))
            # extension order, matching the HistoryIndex id order
            domains.append([tuple(sorted(p, key=_private_sort_key)) for p in per_agent])
    return PrescriptionIndex(
        horizon=horizon,
        domain_mode=domain_mode,
        domains=domains,
        n_actions=model.action_sizes(),
        n_common=len(model.common_obs),
        cap=cap,
    )


def _private_sort_key(hn):
    obs, acts = hn
    # interleave o_1, a_1, o_2, ... which is the extension order of the index
    key = []
    for k, o in enumerate(obs):
        if k:
            key.append(acts[k - 1])
        key.append(o)
    return tuple(key)
