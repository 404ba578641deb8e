"""Finite multi-agent constrained POMDP instances.

A :class:`TeamModel` is immutable after validation. Labels from the JSON file
are kept for rendering, but every table is indexed by integer ids:

* joint observation ``o = (o0, o1, ..., oN)`` (common first),
* joint action ``a = (a1, ..., aN)``.

Joint actions and joint observations are enumerated in ``itertools.product``
order (first component most significant); the dense cost arrays of the file
format use the same row-major order over ``S x A``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import (
    DimensionMismatch,
    DiscountIsOne,
    MissingEntry,
    ModelFormatError,
    NegativeProbability,
    RowSumError,
)


def parse_rational(value, what="value"):
    """Parse ``"num/den"``, a decimal-free string or an int into a Fraction.

    Floats are rejected so no binary rounding enters the core path.
    """
    if isinstance(value, bool):
        raise ModelFormatError(f"{what}: booleans are not rationals", value=value)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ModelFormatError(f"{what}: expected 'num/den' or an integer, got {value!r}", value=value)
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelFormatError(f"{what}: cannot parse {value!r} as a rational", value=value) from exc
    raise ModelFormatError(f"{what}: expected 'num/den' or an integer, got {type(value).__name__}", value=value)


def format_rational(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def discount_mass(horizon, discount):
    """Total mass m(T, alpha) = sum_{t=1}^T alpha^(t-1) of any occupation measure."""
    discount = Fraction(discount)
    return sum((discount ** (t - 1) for t in range(1, horizon + 1)), Fraction(0))


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    discount: Fraction = Fraction(1)

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        d = Fraction(self.discount)
        if not (0 < d <= 1):
            raise ValueError(f"discount must lie in (0, 1], got {d}")
        object.__setattr__(self, "discount", d)

    @property
    def mass(self):
        return discount_mass(self.horizon, self.discount)


@dataclass(frozen=True, eq=True)
class TeamModel:
    n_agents: int
    states: tuple
    common_obs: tuple
    private_obs: tuple  # one tuple of labels per agent
    actions: tuple  # one tuple of labels per agent
    transition: dict  # (s, a) -> tuple of (s_next, o, p), sorted
    initial: tuple  # tuple of (s, o, p), sorted
    cost_c: dict  # (s, a) -> Fraction
    cost_d: dict  # (s, a) -> tuple of K Fractions
    kappa: tuple
    c_bound: Fraction = field(default=Fraction(0), compare=False)
    d_bound: Fraction = field(default=Fraction(0), compare=False)

    @property
    def n_constraints(self):
        return len(self.kappa)

    @property
    def n_states(self):
        return len(self.states)

    def obs_sizes(self):
        return (len(self.common_obs),) + tuple(len(o) for o in self.private_obs)

    def action_sizes(self):
        return tuple(len(a) for a in self.actions)

    @property
    def joint_actions(self):
        return _cached(self, "joint_actions", lambda: list(itertools.product(*(range(k) for k in self.action_sizes()))))

    @property
    def joint_observations(self):
        return _cached(self, "joint_obs", lambda: list(itertools.product(*(range(k) for k in self.obs_sizes()))))

    def joint_action_id(self, a):
        return _cached(self, "ja_ids", lambda: {x: i for i, x in enumerate(self.joint_actions)})[a]

    def joint_obs_id(self, o):
        return _cached(self, "jo_ids", lambda: {x: i for i, x in enumerate(self.joint_observations)})[o]

    def initial_obs_marginal(self):
        """P1(S, o) for every joint observation with positive mass."""
        def build():
            out = {}
            for _, o, p in self.initial:
                out[o] = out.get(o, Fraction(0)) + p
            return out
        return _cached(self, "init_marginal", build)

    def cache(self):
        """Per-instance scratch space for derived tables (the model itself never changes)."""
        return self.__dict__.setdefault("_derived", {})


def _cached(model, key, build):
    store = model.__dict__.setdefault("_derived", {})
    if key not in store:
        store[key] = build()
    return store[key]


def _index_labels(labels, what):
    if not isinstance(labels, list) or not labels:
        raise ModelFormatError(f"{what} must be a non-empty array")
    index = {}
    for i, lab in enumerate(labels):
        key = json.dumps(lab)
        if key in index:
            raise ModelFormatError(f"{what}: duplicate label {lab!r}")
        index[key] = i
    return index


def _lookup(index, label, what):
    try:
        return index[json.dumps(label)]
    except KeyError:
        raise ModelFormatError(f"unknown {what} label {label!r}") from None


def validate_model(raw):
    """Build a :class:`TeamModel` from the parsed JSON description, enforcing every model axiom."""
    if not isinstance(raw, dict):
        raise ModelFormatError("model description must be a JSON object")
    for key in ("n_agents", "states", "common_obs", "private_obs", "actions",
                "transition", "initial", "cost_c", "cost_d", "kappa"):
        if key not in raw:
            raise MissingEntry(f"model is missing field {key!r}", field=key)
    n = raw["n_agents"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelFormatError("n_agents must be a positive integer")
    if len(raw["private_obs"]) != n or len(raw["actions"]) != n:
        raise DimensionMismatch("private_obs and actions need one entry per agent",
                                n_agents=n)
    state_ix = _index_labels(raw["states"], "states")
    common_ix = _index_labels(raw["common_obs"], "common_obs")
    priv_ix = [_index_labels(o, f"private_obs[{i}]") for i, o in enumerate(raw["private_obs"])]
    act_ix = [_index_labels(a, f"actions[{i}]") for i, a in enumerate(raw["actions"])]

    def obs_tuple(rec):
        o = rec.get("o")
        if not isinstance(o, list) or len(o) != n + 1:
            raise DimensionMismatch("observation must list the common symbol then one per agent", record=rec)
        return (_lookup(common_ix, o[0], "common_obs"),) + tuple(
            _lookup(priv_ix[i], o[i + 1], f"private_obs[{i}]") for i in range(n))

    def act_tuple(rec):
        a = rec.get("a")
        if not isinstance(a, list) or len(a) != n:
            raise DimensionMismatch("joint action must list one action per agent", record=rec)
        return tuple(_lookup(act_ix[i], a[i], f"actions[{i}]") for i in range(n))

    n_states = len(state_ix)
    joint_actions = list(itertools.product(*(range(len(a)) for a in act_ix)))

    trans = {}
    for rec in raw["transition"]:
        s = _lookup(state_ix, rec.get("s"), "state")
        s2 = _lookup(state_ix, rec.get("s_next"), "state")
        a = act_tuple(rec)
        o = obs_tuple(rec)
        p = parse_rational(rec.get("p"), "transition probability")
        if p < 0:
            raise NegativeProbability(f"negative transition probability at s={rec.get('s')!r}, a={rec.get('a')!r}",
                                      s=s, a=a)
        row = trans.setdefault((s, a), {})
        if (s2, o) in row:
            raise ModelFormatError("duplicate transition record", record=rec)
        if p:
            row[(s2, o)] = p
    transition = {}
    for s in range(n_states):
        for a in joint_actions:
            row = trans.get((s, a), {})
            total = sum(row.values(), Fraction(0))
            if total != 1:
                s_label = raw["states"][s]
                a_label = [raw["actions"][i][a[i]] for i in range(n)]
                raise RowSumError(f"transition row (s={s_label!r}, a={a_label!r}) sums to {total}, not 1",
                                  s=s_label, a=a_label, total=total)
            transition[(s, a)] = tuple(sorted((s2, o, p) for (s2, o), p in row.items()))

    init = {}
    for rec in raw["initial"]:
        s = _lookup(state_ix, rec.get("s"), "state")
        o = obs_tuple(rec)
        p = parse_rational(rec.get("p"), "initial probability")
        if p < 0:
            raise NegativeProbability("negative initial probability", s=s, o=o)
        if (s, o) in init:
            raise ModelFormatError("duplicate initial record", record=rec)
        if p:
            init[(s, o)] = p
    total = sum(init.values(), Fraction(0))
    if total != 1:
        raise RowSumError(f"initial distribution sums to {total}, not 1", total=total)
    initial = tuple(sorted((s, o, p) for (s, o), p in init.items()))

    kappa = tuple(parse_rational(k, "kappa") for k in raw["kappa"])
    K = len(kappa)
    expected = n_states * len(joint_actions)
    flat_c = raw["cost_c"]
    flat_d = raw["cost_d"]
    if not isinstance(flat_c, list) or len(flat_c) != expected:
        raise MissingEntry(f"cost_c must have {expected} entries (|S| x |A| row-major)",
                           got=len(flat_c) if isinstance(flat_c, list) else None)
    if not isinstance(flat_d, list) or len(flat_d) != expected:
        raise MissingEntry(f"cost_d must have {expected} entries (|S| x |A| row-major)",
                           got=len(flat_d) if isinstance(flat_d, list) else None)
    cost_c, cost_d = {}, {}
    for s in range(n_states):
        for j, a in enumerate(joint_actions):
            idx = s * len(joint_actions) + j
            cost_c[(s, a)] = parse_rational(flat_c[idx], "cost_c")
            row = flat_d[idx]
            if not isinstance(row, list) or len(row) != K:
                raise DimensionMismatch(f"cost_d entry {idx} must have K={K} components", index=idx)
            cost_d[(s, a)] = tuple(parse_rational(x, "cost_d") for x in row)

    c_bound = max(abs(v) for v in cost_c.values())
    d_bound = max((abs(x) for v in cost_d.values() for x in v), default=Fraction(0))
    return TeamModel(
        n_agents=n,
        states=tuple(raw["states"]),
        common_obs=tuple(raw["common_obs"]),
        private_obs=tuple(tuple(o) for o in raw["private_obs"]),
        actions=tuple(tuple(a) for a in raw["actions"]),
        transition=transition,
        initial=initial,
        cost_c=cost_c,
        cost_d=cost_d,
        kappa=kappa,
        c_bound=c_bound,
        d_bound=d_bound,
    )


def model_to_dict(model):
    """Inverse of :func:`validate_model` (zero-probability records are omitted)."""
    def obs_labels(o):
        return [model.common_obs[o[0]]] + [model.private_obs[i][o[i + 1]] for i in range(model.n_agents)]

    def act_labels(a):
        return [model.actions[i][a[i]] for i in range(model.n_agents)]

    transition = []
    for (s, a), row in sorted(model.transition.items()):
        for s2, o, p in row:
            transition.append({"s": model.states[s], "a": act_labels(a), "s_next": model.states[s2],
                               "o": obs_labels(o), "p": format_rational(p)})
    initial = [{"s": model.states[s], "o": obs_labels(o), "p": format_rational(p)}
               for s, o, p in model.initial]
    cost_c, cost_d = [], []
    for s in range(model.n_states):
        for a in model.joint_actions:
            cost_c.append(format_rational(model.cost_c[(s, a)]))
            cost_d.append([format_rational(x) for x in model.cost_d[(s, a)]])
    return {
        "n_agents": model.n_agents,
        "states": list(model.states),
        "common_obs": list(model.common_obs),
        "private_obs": [list(o) for o in model.private_obs],
        "actions": [list(a) for a in model.actions],
        "transition": transition,
        "initial": initial,
        "cost_c": cost_c,
        "cost_d": cost_d,
        "kappa": [format_rational(k) for k in model.kappa],
    }


def load_model(path):
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    return validate_model(raw)


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def with_kappa(model, kappa):
    """Copy of ``model`` with a different constraint threshold."""
    kappa = tuple(Fraction(k) for k in kappa)
    if len(kappa) != model.n_constraints:
        raise DimensionMismatch(f"kappa override has {len(kappa)} entries, model has K={model.n_constraints}")
    raw = model_to_dict(model)
    raw["kappa"] = [format_rational(k) for k in kappa]
    return validate_model(raw)


def truncation_bound(model, discount, tail_start, which="c"):
    """Bound on |C^inf - C^T| from the discarded geometric tail: bound * alpha^T / (1 - alpha).

    ``which="d"`` uses the constraint-cost bound instead of the objective bound.
    """
    discount = Fraction(discount)
    if discount >= 1:
        raise DiscountIsOne("alpha = 1 has no geometric tail bound; use finite-horizon semantics")
    if discount <= 0:
        raise ValueError("discount must be positive")
    bound = model.c_bound if which == "c" else model.d_bound
    return bound * discount ** tail_start / (1 - discount)
