"""Seeded random policies with rational weights on a fixed denominator lattice."""

from __future__ import annotations

import random
import zlib
from fractions import Fraction

from .policies import (
    AgentPolicy,
    CoordinationPolicy,
    DecentralizedProfile,
    FiniteMixture,
    ProductMixture,
    unit,
)

DENOMINATOR = 16


def derive_seed(*parts):
    """Stable integer seed from arbitrary printable parts (independent of PYTHONHASHSEED)."""
    return zlib.crc32("|".join(map(str, parts)).encode())


def rng_for(*parts):
    return random.Random(derive_seed(*parts))


def lattice_distribution(rng, k, den=DENOMINATOR, min_support=1):
    """Random distribution over k outcomes with weights in (1/den) Z, via sorted cut points."""
    if k == 1:
        return (Fraction(1),)
    while True:
        cuts = sorted(rng.randint(0, den) for _ in range(k - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
        if sum(1 for p in parts if p) >= min_support:
            return tuple(Fraction(p, den) for p in parts)


def lattice_weights(rng, m, den=DENOMINATOR):
    """Strictly positive weights for m mixture atoms."""
    den = max(den, m)
    while True:
        w = lattice_distribution(rng, m, den)
        if all(w):
            return w


def random_agent_policy(rng, index, n, n_act, pure=False, den=DENOMINATOR, behavioral_prob=1.0, horizon=None):
    horizon = index.horizon if horizon is None else horizon
    rules = []
    for t in range(1, horizon + 1):
        layer = {}
        for key in index.agent_keys(n, t):
            if pure or rng.random() >= behavioral_prob:
                layer[key] = unit(n_act, rng.randrange(n_act))
            else:
                layer[key] = lattice_distribution(rng, n_act, den)
        rules.append(layer)
    return AgentPolicy(tuple(rules))


def random_profile(rng, model, index, pure=False, den=DENOMINATOR, behavioral_prob=1.0, horizon=None):
    return DecentralizedProfile(tuple(
        random_agent_policy(rng, index, n, k, pure, den, behavioral_prob, horizon)
        for n, k in enumerate(model.action_sizes())))


def random_sparse_profile(rng, model, index, n_random=2, den=DENOMINATOR, horizon=None):
    """Pure profile except at ``n_random`` randomly chosen information states per agent."""
    horizon = index.horizon if horizon is None else horizon
    agents = []
    for n, k in enumerate(model.action_sizes()):
        slots = [(t, key) for t in range(1, horizon + 1) for key in index.agent_keys(n, t)]
        chosen = set(rng.sample(range(len(slots)), min(n_random, len(slots))))
        rules = [dict() for _ in range(horizon)]
        for i, (t, key) in enumerate(slots):
            rules[t - 1][key] = lattice_distribution(rng, k, den) if i in chosen else unit(k, rng.randrange(k))
        agents.append(AgentPolicy(tuple(rules)))
    return DecentralizedProfile(tuple(agents))


def random_mixture(rng, model, index, atoms=2, pure=False, sparse=None, den=DENOMINATOR, horizon=None):
    """Joint mixture of profiles; ``sparse`` limits behavioral randomization to that many states per agent."""
    ws = lattice_weights(rng, atoms, den)
    out = []
    for w in ws:
        if sparse is not None and not pure:
            p = random_sparse_profile(rng, model, index, sparse, den, horizon)
        else:
            p = random_profile(rng, model, index, pure, den, horizon=horizon)
        out.append((w, p))
    return FiniteMixture(tuple(out))


def random_product_mixture(rng, model, index, atoms=2, pure=True, den=DENOMINATOR, horizon=None):
    factors = []
    for n, k in enumerate(model.action_sizes()):
        ws = lattice_weights(rng, atoms, den)
        factors.append(FiniteMixture(tuple(
            (w, random_agent_policy(rng, index, n, k, pure, den, horizon=horizon)) for w in ws)))
    return ProductMixture(tuple(factors))


def random_prescription(rng, pindex, t):
    return tuple(tuple(rng.randrange(pindex.n_actions[n]) for _ in pindex.domain(t, n))
                 for n in range(len(pindex.n_actions)))


def random_coordination_policy(rng, system, horizon, support=2, pure=False, den=DENOMINATOR):
    """Random coordination policy defined on every positive-mass history it reaches itself.

    Prescriptions are sampled directly from the domains, so the prescription sets are
    never enumerated.
    """
    pindex = system.pindex
    rules = [dict() for _ in range(horizon)]
    frontier = system.roots()
    for t in range(1, horizon + 1):
        nxt = []
        for ht in frontier:
            k = 1 if pure else support
            gammas = []
            while len(gammas) < k:
                g = random_prescription(rng, pindex, t)
                if g not in gammas:
                    gammas.append(g)
                if len(gammas) >= pindex.count(t):
                    break
            ws = (Fraction(1),) if len(gammas) == 1 else lattice_weights(rng, len(gammas), den)
            rules[t - 1][ht] = dict(zip(gammas, ws))
            if t < horizon:
                for g in gammas:
                    nxt.extend(ht + (g, o0) for o0 in sorted(system.children(ht, g)))
        frontier = nxt
    return CoordinationPolicy(tuple(rules))
