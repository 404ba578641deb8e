"""Exact, exhaustive checks of the class-equivalence and structure results on small fixtures."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .coordination import (check_flow, coordinated_forward, coordinated_system, coordination_cost_tables,
                           measure_to_policy, project_to_joint)
from .enumeration import build_history_index, build_prescription_index
from .errors import DiscountIsOne
from .model import discount_mass, format_rational, truncation_bound
from .occupancy import (combine, conditional_costs_under, cost_tables, forward_weights, long_term_costs)
from .optimize import factorization_failure
from .oracles import coordination_trajectory_oracle, trajectory_count, trajectory_oracle
from .policies import (behavioral_to_product_pure_mixture, flatten_joint_mixture, joint_action_kernel,
                       kuhn_collapse, mixture_transport, transport_back)
from .sampling import (lattice_distribution, random_coordination_policy, random_mixture, random_product_mixture,
                       random_profile, random_sparse_profile, rng_for)

ONE = Fraction(1)
ZERO = Fraction(0)
ORACLE_TRAJECTORY_LIMIT = 10 ** 6


def _fmt(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, tuple):
        return [_fmt(x) for x in v]
    return v


def measure_witness(a, b):
    """First differing cell of two measures, in a JSON-friendly form."""
    diff = a.first_difference(b)
    if diff is None:
        return None
    key, x, y = diff
    return {"cell": repr(key), "left": format_rational(x), "right": format_rational(y)}


@dataclass
class CheckReport:
    name: str
    fixture: str
    status: str = "pass"
    seed: int = 0
    trials: int = 0
    horizon: int = 0
    discount: str = "1"
    witness: dict = None
    details: dict = field(default_factory=dict)
    timing: float = None

    @property
    def passed(self):
        return self.status == "pass"

    def fail(self, witness):
        # only the first failure is kept
        if self.status == "pass":
            self.status = "fail"
            self.witness = witness

    def to_dict(self, timing=False):
        out = {"name": self.name, "fixture": self.fixture, "status": self.status, "seed": self.seed,
               "trials": self.trials, "horizon": self.horizon, "discount": self.discount,
               "witness": self.witness, "details": self.details}
        if timing:
            out["timing"] = self.timing
        return out


@dataclass
class Context:
    """Everything a check needs for one (fixture, horizon, discount)."""

    model: object
    fixture: str
    horizon: int
    discount: Fraction
    seed: int = 0
    domain_mode: str = "reachable"

    def __post_init__(self):
        self.discount = Fraction(self.discount)
        self.index = build_history_index(self.model, self.horizon)
        self.pindex = build_prescription_index(self.model, self.horizon, self.index, self.domain_mode)
        self.system = coordinated_system(self.model, self.pindex)

    def rng(self, check, trial):
        return rng_for(self.seed, check, self.fixture, self.horizon, self.discount, trial)

    def report(self, name, trials):
        return CheckReport(name, self.fixture, seed=self.seed, trials=trials, horizon=self.horizon,
                           discount=format_rational(self.discount))

    def rho(self, policy, method="auto"):
        return forward_weights(self.model, policy, self.horizon, self.discount, method)

    def coord_rho(self, policy):
        return coordinated_forward(self.model, self.pindex, policy, self.horizon, self.discount)


def _timed(fn):
    def wrapper(ctx, trials=None, **kw):
        t0 = time.perf_counter()
        rep = fn(ctx, trials if trials is not None else default_trials(ctx.model), **kw)
        rep.timing = time.perf_counter() - t0
        return rep
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _choice_bits(ctx):
    """log2 of the pure-expansion size of a fully randomized profile, per agent."""
    out = []
    for n, k in enumerate(ctx.model.action_sizes()):
        slots = sum(len(ctx.index.agent_keys(n, t)) for t in range(1, ctx.horizon + 1))
        out.append(slots * math.log2(k) if k > 1 else 0.0)
    return out


def randomized_states_budget(ctx, budget_bits):
    """None when fully random profiles expand within 2**budget_bits atoms, else the number of
    randomized information states per agent that keeps binary expansions within it."""
    bits = _choice_bits(ctx)
    if sum(bits) <= budget_bits:
        return None
    return max(1, budget_bits // max(1, len(bits)))


def default_trials(model):
    from .enumeration import joint_history_count
    return 50 if joint_history_count(model, 2) <= 8 else 20


@_timed
def check_kuhn_equivalence(ctx, trials):
    """Behavioral profile vs. its product-of-pure expansion, and product mixture vs. its Kuhn collapse."""
    rep = ctx.report("kuhn_equivalence", trials)
    sparse = randomized_states_budget(ctx, 16)
    rep.details["randomized_states_per_agent"] = "all" if sparse is None else sparse
    sizes = []
    for i in range(trials):
        rng = ctx.rng("kuhn_equivalence", i)
        if sparse is None:
            u = random_profile(rng, ctx.model, ctx.index)
        else:
            u = random_sparse_profile(rng, ctx.model, ctx.index, sparse)
        pm = behavioral_to_product_pure_mixture(u, ctx.horizon)
        sizes.append(pm.joint_support_size)
        a, b = ctx.rho(u), ctx.rho(pm, "chain")
        if not a.same_as(b):
            rep.fail({"trial": i, "direction": "expand", **measure_witness(a, b)})
        m = random_product_mixture(rng, ctx.model, ctx.index, atoms=2 + i % 2, pure=bool(i % 2))
        a, b = ctx.rho(m, "chain"), ctx.rho(kuhn_collapse(m, ctx.horizon))
        if not a.same_as(b):
            rep.fail({"trial": i, "direction": "collapse", **measure_witness(a, b)})
    rep.details["max_expansion_support"] = max(sizes, default=0)
    return rep


@_timed
def check_mixture_flattening(ctx, trials, sparse=None):
    """Joint mixture of behavioral profiles vs. its flattening onto pure profiles."""
    rep = ctx.report("mixture_flattening", trials)
    if sparse is None:
        sparse = randomized_states_budget(ctx, 10)
    rep.details["randomized_states_per_agent"] = "all" if sparse is None else sparse
    supports = []
    for i in range(trials):
        rng = ctx.rng("mixture_flattening", i)
        mix = random_mixture(rng, ctx.model, ctx.index, atoms=2 + i % 2, sparse=sparse)
        flat = flatten_joint_mixture(mix, ctx.horizon)
        supports.append(len(flat.atoms))
        if not flat.is_pure:
            rep.fail({"trial": i, "reason": "flattened support is not pure"})
        a, b = ctx.rho(mix, "atoms"), ctx.rho(flat, "chain")
        if not a.same_as(b):
            rep.fail({"trial": i, **measure_witness(a, b)})
    rep.details["max_flat_support"] = max(supports, default=0)
    return rep


@_timed
def check_coordination_transport(ctx, trials, reverse=True):
    """Pure decentralized mixtures vs. their lifts, and coordination mixtures vs. their reverse transports."""
    rep = ctx.report("coordination_transport", trials)
    for i in range(trials):
        rng = ctx.rng("coordination_transport", i)
        mix = random_mixture(rng, ctx.model, ctx.index, atoms=1 + i % 3, pure=True)
        lifted = mixture_transport(mix, ctx.pindex, ctx.index)
        a = ctx.rho(mix)
        b = project_to_joint(ctx.coord_rho(lifted), ctx.system)
        if not a.same_as(b):
            rep.fail({"trial": i, "direction": "lift", **measure_witness(a, b)})
        if not reverse:
            continue
        back = transport_back(lifted, ctx.pindex, ctx.index, ctx.horizon)
        c = ctx.rho(back)
        if not a.same_as(c):
            rep.fail({"trial": i, "direction": "lift then back", **measure_witness(a, c)})
        v = random_coordination_policy(rng, ctx.system, ctx.horizon, support=2)
        jv = project_to_joint(ctx.coord_rho(v), ctx.system)
        jb = ctx.rho(transport_back(v, ctx.pindex, ctx.index, ctx.horizon))
        if not jv.same_as(jb):
            rep.fail({"trial": i, "direction": "coordination back", **measure_witness(jv, jb)})
    return rep


@_timed
def check_convexity_coordination(ctx, trials):
    """Convex combinations of coordination measures are realized by the extracted conditional policy."""
    rep = ctx.report("convexity_coordination", trials)
    for i in range(trials):
        rng = ctx.rng("convexity", i)
        v1 = random_coordination_policy(rng, ctx.system, ctx.horizon, pure=bool(i % 2))
        v2 = random_coordination_policy(rng, ctx.system, ctx.horizon, pure=i % 3 == 0)
        lam = [ZERO, ONE][i] if i < 2 else lattice_distribution(rng, 2)[0]
        q1, q2 = ctx.coord_rho(v1), ctx.coord_rho(v2)
        q = combine([q1, q2], [lam, 1 - lam])
        v = measure_to_policy(q, ctx.system)
        r = ctx.coord_rho(v)
        if not r.same_as(q):
            rep.fail({"trial": i, "lambda": format_rational(lam), **measure_witness(q, r)})
    return rep


@_timed
def check_normalization_and_linearity(ctx, trials):
    """Total mass m(T, alpha) for every class, and mixture measures equal weighted atom sums."""
    rep = ctx.report("normalization_linearity", trials)
    m = discount_mass(ctx.horizon, ctx.discount)
    rep.details["mass"] = format_rational(m)
    for i in range(trials):
        rng = ctx.rng("normalization", i)
        u = random_profile(rng, ctx.model, ctx.index)
        pure = random_profile(rng, ctx.model, ctx.index, pure=True)
        mix = random_mixture(rng, ctx.model, ctx.index, atoms=2 + i % 2)
        pmix = random_mixture(rng, ctx.model, ctx.index, atoms=2 + i % 2, pure=True)
        prod = random_product_mixture(rng, ctx.model, ctx.index, atoms=2, pure=bool(i % 2))
        v = random_coordination_policy(rng, ctx.system, ctx.horizon)
        vp = random_coordination_policy(rng, ctx.system, ctx.horizon, pure=True)
        measures = {
            "pure_dec": ctx.rho(pure), "behavioral_dec": ctx.rho(u), "mixture_dec": ctx.rho(mix),
            "mixture_pure_dec": ctx.rho(pmix), "product_mixture": ctx.rho(prod),
            "pure_coord": ctx.coord_rho(vp), "behavioral_coord": ctx.coord_rho(v),
        }
        from .policies import FiniteMixture
        mv = FiniteMixture(((Fraction(1, 3), v), (Fraction(2, 3), vp)))
        measures["mixture_coord"] = ctx.coord_rho(mv)
        for cls, meas in measures.items():
            if meas.total() != m:
                rep.fail({"trial": i, "class": cls, "total": format_rational(meas.total()),
                          "expected": format_rational(m)})
            if any(w < 0 for w in meas.weights.values()):
                rep.fail({"trial": i, "class": cls, "reason": "negative weight"})
        lin = combine([ctx.rho(p) for _, p in mix.atoms], [w for w, _ in mix.atoms])
        if not lin.same_as(measures["mixture_dec"]):
            rep.fail({"trial": i, "reason": "mixture linearity", **measure_witness(lin, measures["mixture_dec"])})
        lin = combine([ctx.coord_rho(v), measures["pure_coord"]], [Fraction(1, 3), Fraction(2, 3)])
        if not lin.same_as(measures["mixture_coord"]):
            rep.fail({"trial": i, "reason": "coordination linearity",
                      **measure_witness(lin, measures["mixture_coord"])})
        chain = ctx.rho(pmix, "chain")
        if not chain.same_as(ctx.rho(pmix, "atoms")):
            rep.fail({"trial": i, "reason": "chain relation", **measure_witness(chain, ctx.rho(pmix, "atoms"))})
        proj = project_to_joint(measures["behavioral_coord"], ctx.system)
        if proj.total() != m:
            rep.fail({"trial": i, "reason": "projection mass", "total": format_rational(proj.total())})
    return rep


@_timed
def check_factorization(ctx, trials):
    """Joint-action kernels and measure conditionals factorize across agents for every profile."""
    rep = ctx.report("factorization", trials)
    sizes = ctx.model.action_sizes()
    for i in range(trials):
        rng = ctx.rng("factorization", i)
        u = random_profile(rng, ctx.model, ctx.index)
        for t in range(1, ctx.horizon + 1):
            for h in ctx.index.joint_histories(t)[:64]:
                kern = joint_action_kernel(u, t, h)
                h0 = tuple(o[0] for o in h[0])
                for a, p in kern.items():
                    prod = ONE
                    for n, agent in enumerate(u.agents):
                        hn = (tuple(o[n + 1] for o in h[0]), tuple(x[n] for x in h[1]))
                        prod *= agent.prob(t, h0, hn, a[n])
                    if p != prod:
                        rep.fail({"trial": i, "t": t, "history": repr(h), "action": repr(a)})
        cert = factorization_failure(ctx.rho(u), ctx.model.n_agents, sizes)
        if cert is not None:
            rep.fail({"trial": i, "t": cert.t, "history": repr(cert.history), "action": repr(cert.cell)})
    return rep


@_timed
def check_policy_independence(ctx, trials):
    """Conditional cost tables and the common-observation kernel do not depend on the policy."""
    rep = ctx.report("policy_independence", trials)
    tables = cost_tables(ctx.model, ctx.horizon)
    for i in range(trials):
        rng = ctx.rng("independence", i)
        for u in (random_profile(rng, ctx.model, ctx.index), random_profile(rng, ctx.model, ctx.index)):
            c, d = conditional_costs_under(ctx.model, u, ctx.horizon)
            for key in c:
                if c[key] != tables.c[key] or d[key] != tables.d[key]:
                    rep.fail({"trial": i, "space": "joint", "cell": repr(key)})
                    break
        v = random_coordination_policy(rng, ctx.system, ctx.horizon)
        q, layers = coordinated_forward(ctx.model, ctx.pindex, v, ctx.horizon, ctx.discount, return_weights=True)
        ref = coordination_cost_tables(ctx.system, ctx.horizon, keys=q.weights)
        for (t, ht, g) in q.weights:
            W = layers[t - 1][ht]
            tot = sum(W.values(), ZERO)
            c = sum((w * ctx.model.cost_c[(s, ctx.pindex.apply(t, g, privs))] for (privs, s), w in W.items()),
                    ZERO) / tot
            if c != ref.c[(t, ht, g)]:
                rep.fail({"trial": i, "space": "coordination", "cell": repr((t, ht, g))})
            if t < ctx.horizon:
                nxt = layers[t]
                vg = v.rule(t, ht)[g]
                for o0, p in ctx.system.kernel(ht, g).items():
                    child = nxt.get(ht + (g, o0), {})
                    if sum(child.values(), ZERO) != tot * vg * p:
                        rep.fail({"trial": i, "space": "kernel", "cell": repr((t, ht, g, o0))})
    return rep


@_timed
def check_truncation(ctx, trials, long_horizon=None):
    """|C^T - C^T'| is within the tail bound for T' < T (requires alpha < 1)."""
    rep = ctx.report("truncation", trials)
    if ctx.discount >= 1:
        rep.details["skipped"] = "discount is 1; no geometric tail"
        return rep
    T = long_horizon or ctx.horizon
    short = max(1, ctx.horizon // 2) if long_horizon is None else ctx.horizon
    idx = ctx.index if T == ctx.horizon else build_history_index(ctx.model, T)
    tables = cost_tables(ctx.model, T)
    bound = truncation_bound(ctx.model, ctx.discount, short)
    rep.details.update({"long": T, "short": short, "bound": format_rational(bound)})
    worst = ZERO
    for i in range(trials):
        rng = ctx.rng("truncation", i)
        u = random_profile(rng, ctx.model, idx, horizon=T)
        full = forward_weights(ctx.model, u, T, ctx.discount)
        C_long, _ = long_term_costs(full, tables)
        C_short, _ = long_term_costs(full.truncated(short), tables)
        gap = abs(C_long - C_short)
        worst = max(worst, gap)
        if gap > bound:
            rep.fail({"trial": i, "gap": format_rational(gap), "bound": format_rational(bound)})
    rep.details["worst_gap"] = format_rational(worst)
    return rep


@_timed
def check_oracle_equivalence(ctx, trials):
    """Recursions vs. explicit trajectory sums (skipped above the trajectory limit)."""
    rep = ctx.report("oracle_equivalence", trials)
    n_traj = trajectory_count(ctx.model, ctx.horizon)
    rep.details["trajectory_bound"] = n_traj
    if n_traj > ORACLE_TRAJECTORY_LIMIT:
        rep.details["skipped"] = "too many trajectories"
        return rep
    tables = cost_tables(ctx.model, ctx.horizon)
    for i in range(trials):
        rng = ctx.rng("oracle", i)
        u = random_profile(rng, ctx.model, ctx.index)
        a = ctx.rho(u)
        b, C, D = trajectory_oracle(ctx.model, u, ctx.horizon, ctx.discount)
        if not a.same_as(b) or long_term_costs(a, tables) != (C, D):
            rep.fail({"trial": i, "space": "joint", **(measure_witness(a, b) or {"reason": "costs differ"})})
        v = random_coordination_policy(rng, ctx.system, ctx.horizon)
        q = ctx.coord_rho(v)
        q2, C2, D2 = coordination_trajectory_oracle(ctx.model, ctx.pindex, v, ctx.horizon, ctx.discount)
        ct = coordination_cost_tables(ctx.system, ctx.horizon, keys=q.weights)
        if not q.same_as(q2) or long_term_costs(q, ct) != (C2, D2):
            rep.fail({"trial": i, "space": "coordination", **(measure_witness(q, q2) or {"reason": "costs differ"})})
        if check_flow(q, ctx.system) is not None:
            rep.fail({"trial": i, "reason": "flow identity", "cell": repr(check_flow(q, ctx.system)[0])})
    return rep


CHECKS = {
    "kuhn_equivalence": check_kuhn_equivalence,
    "mixture_flattening": check_mixture_flattening,
    "coordination_transport": check_coordination_transport,
    "convexity_coordination": check_convexity_coordination,
    "normalization_linearity": check_normalization_and_linearity,
    "factorization": check_factorization,
    "policy_independence": check_policy_independence,
    "truncation": check_truncation,
    "oracle_equivalence": check_oracle_equivalence,
}


def run_suite(model, fixture, horizon, discount=ONE, seed=0, trials=None, checks=None, jobs=1):
    """Every check on one (fixture, horizon, discount); returns the reports in a fixed order."""
    ctx = Context(model, fixture, horizon, discount, seed)
    names = list(CHECKS) if checks is None else list(checks)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(_run_one, model, fixture, horizon, discount, seed, trials, n) for n in names]
            return [f.result() for f in futs]
    return [CHECKS[n](ctx, trials) for n in names]


def _run_one(model, fixture, horizon, discount, seed, trials, name):
    return CHECKS[name](Context(model, fixture, horizon, discount, seed), trials)


def suite_passed(reports):
    return all(r.passed for r in reports)


__all__ = ["CheckReport", "Context", "run_suite", "suite_passed", "CHECKS", "DiscountIsOne"] + list(CHECKS)
