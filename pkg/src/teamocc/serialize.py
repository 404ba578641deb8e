"""JSON policy files and CSV measure exports.

Policy tables are keyed by ``(t, history id)`` using the dense ids of the history and
prescription indexes, so a file is only meaningful together with its model, horizon and
prescription domain mode (all recorded in the file).
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from .enumeration import build_history_index, build_prescription_index
from .errors import PolicyFormatError
from .model import format_rational, parse_rational
from .policies import AgentPolicy, CoordinationPolicy, DecentralizedProfile, FiniteMixture, ProductMixture

CLASSES = ("pure_dec", "behavioral_dec", "mixture_dec", "product_mixture", "pure_coord", "behavioral_coord",
           "mixture_coord")


def policy_class(policy):
    if isinstance(policy, DecentralizedProfile):
        return "pure_dec" if policy.is_pure else "behavioral_dec"
    if isinstance(policy, ProductMixture):
        return "product_mixture"
    if isinstance(policy, CoordinationPolicy):
        return "pure_coord" if policy.is_pure else "behavioral_coord"
    if isinstance(policy, FiniteMixture):
        first = policy.atoms[0][1]
        return "mixture_coord" if isinstance(first, CoordinationPolicy) else "mixture_dec"
    raise TypeError(type(policy).__name__)


def _agent_rules_to_json(agent, index, n):
    out = []
    for t, layer in enumerate(agent.rules, 1):
        for (h0, hn), d in sorted(layer.items(), key=lambda kv: (index.common_id(kv[0][0]),
                                                                 index.private_id(n, kv[0][1]))):
            out.append({"t": t, "common": index.common_id(h0), "private": index.private_id(n, hn),
                        "dist": [format_rational(p) for p in d]})
    return out


def _agent_rules_from_json(rows, index, n, horizon):
    rules = [dict() for _ in range(horizon)]
    for r in rows:
        t = r["t"]
        try:
            key = (index.common_histories(t)[r["common"]], index.private_histories(n, t)[r["private"]])
        except (IndexError, KeyError):
            raise PolicyFormatError(f"history id out of range at t={t}: {r}") from None
        rules[t - 1][key] = tuple(parse_rational(p, "policy weight") for p in r["dist"])
    return AgentPolicy(tuple(rules)).validate()


def _coord_to_json(policy, index, pindex):
    rows = []
    for t, layer in enumerate(policy.rules, 1):
        for key, d in layer.items():
            hid = index.common_id(key) if policy.key_mode == "common" else pindex.htilde_id(key)
            rows.append({"t": t, "history": hid,
                         "dist": [[pindex.prescription_id(t, g), format_rational(w)]
                                  for g, w in sorted(d.items(), key=lambda kv: pindex.prescription_id(t, kv[0]))]})
    rows.sort(key=lambda r: (r["t"], r["history"]))
    return {"key_mode": policy.key_mode, "rules": rows}


def _coord_from_json(data, index, pindex, horizon):
    mode = data.get("key_mode", "htilde")
    rules = [dict() for _ in range(horizon)]
    for r in data["rules"]:
        t = r["t"]
        key = index.common_histories(t)[r["history"]] if mode == "common" else pindex.htilde_from_id(t, r["history"])
        rules[t - 1][key] = {pindex.prescription_from_id(t, gid): parse_rational(w, "policy weight")
                             for gid, w in r["dist"]}
    return CoordinationPolicy(tuple(rules), key_mode=mode).validate()


def _body(policy, index, pindex):
    cls = policy_class(policy)
    if cls in ("pure_dec", "behavioral_dec"):
        return {"agents": [_agent_rules_to_json(a, index, n) for n, a in enumerate(policy.agents)]}
    if cls == "product_mixture":
        return {"factors": [[{"weight": format_rational(w), "rules": _agent_rules_to_json(a, index, n)}
                             for w, a in f.atoms] for n, f in enumerate(policy.factors)]}
    if cls in ("pure_coord", "behavioral_coord"):
        return _coord_to_json(policy, index, pindex)
    return {"atoms": [{"weight": format_rational(w), "policy": _body(p, index, pindex)} for w, p in policy.atoms]}


def policy_to_dict(policy, index, pindex=None):
    cls = policy_class(policy)
    out = {"class": cls, "horizon": policy.horizon}
    if cls.endswith("coord"):
        if pindex is None:
            raise ValueError("coordination policies need their prescription index")
        out["domain_mode"] = pindex.domain_mode
    out.update(_body(policy, index, pindex))
    return out


def _from_body(cls, data, model, index, pindex, horizon):
    if cls in ("pure_dec", "behavioral_dec"):
        return DecentralizedProfile(tuple(_agent_rules_from_json(rows, index, n, horizon)
                                          for n, rows in enumerate(data["agents"])))
    if cls == "product_mixture":
        return ProductMixture(tuple(
            FiniteMixture(tuple((parse_rational(a["weight"]), _agent_rules_from_json(a["rules"], index, n, horizon))
                                for a in f))
            for n, f in enumerate(data["factors"])))
    if cls in ("pure_coord", "behavioral_coord"):
        return _coord_from_json(data, index, pindex, horizon)
    inner = "pure_coord" if cls == "mixture_coord" else "behavioral_dec"
    return FiniteMixture(tuple((parse_rational(a["weight"]), _from_body(inner, a["policy"], model, index, pindex,
                                                                        horizon))
                               for a in data["atoms"]))


def policy_from_dict(data, model, index=None, pindex=None):
    cls = data.get("class")
    if cls not in CLASSES:
        raise PolicyFormatError(f"unknown policy class {cls!r}; expected one of {CLASSES}")
    horizon = int(data["horizon"])
    if index is None or index.horizon < horizon:
        index = build_history_index(model, horizon)
    if cls.endswith("coord") and pindex is None:
        pindex = build_prescription_index(model, horizon, index, data.get("domain_mode", "reachable"))
    policy = _from_body(cls, data, model, index, pindex, horizon)
    if cls == "pure_dec" and not policy.is_pure:
        raise PolicyFormatError("class pure_dec but some rule is randomized")
    return policy


def save_policy(policy, path, index, pindex=None):
    with open(path, "w") as f:
        json.dump(policy_to_dict(policy, index, pindex), f, indent=1, sort_keys=True)
        f.write("\n")


def load_policy(path, model, index=None, pindex=None):
    with open(path) as f:
        return policy_from_dict(json.load(f), model, index, pindex)


# measures


def history_string(model, h):
    obs, acts = h
    parts = ["o=" + "|".join(",".join(str(x) for x in o) for o in obs)]
    if acts:
        parts.append("a=" + "|".join(",".join(str(x) for x in a) for a in acts))
    return ";".join(parts)


def htilde_string(pindex, ht):
    t = (len(ht) + 1) // 2
    parts = [str(ht[0])]
    for k in range(1, t):
        parts.append(f"G{pindex.prescription_id(k, ht[2 * k - 1])}")
        parts.append(str(ht[2 * k]))
    return "|".join(parts)


def measure_rows(measure, model, pindex=None):
    rows = []
    for (t, h, a), w in sorted(measure.weights.items()):
        if measure.space == "coordination":
            hs, acts = htilde_string(pindex, h), f"G{pindex.prescription_id(t, a)}"
        else:
            hs, acts = history_string(model, h), ",".join(str(x) for x in a)
        rows.append((t, hs, acts, format_rational(w), float(w)))
    return rows


def measure_to_csv(measure, model, pindex=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "history", "action", "weight", "weight_float"])
    for r in measure_rows(measure, model, pindex):
        writer.writerow([r[0], r[1], r[2], r[3], repr(r[4])])
    return buf.getvalue()


def rational_json(q):
    """Both renderings of an exact value."""
    q = Fraction(q)
    return {"exact": format_rational(q), "float": float(q)}
