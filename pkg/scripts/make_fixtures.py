"""Regenerate the bundled fixture models under src/teamocc/fixtures/."""

import itertools
import json
from fractions import Fraction
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "teamocc" / "fixtures"


def fr(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dense(states, actions, fn):
    return [fn(s, a) for s in states for a in itertools.product(*actions)]


def m_unit(cost=lambda s, a: a[0] + a[1], dcost=lambda s, a: [a[0]], kappa=("1/2",)):
    actions = [[0, 1], [0, 1]]
    return {
        "n_agents": 2,
        "states": ["s0"],
        "common_obs": ["-"],
        "private_obs": [["-"], ["-"]],
        "actions": actions,
        "transition": [{"s": "s0", "a": list(a), "s_next": "s0", "o": ["-", "-", "-"], "p": "1"}
                       for a in itertools.product(*actions)],
        "initial": [{"s": "s0", "o": ["-", "-", "-"], "p": "1"}],
        "cost_c": [fr(x) for x in dense(["s0"], actions, cost)],
        "cost_d": [[fr(x) for x in row] for row in dense(["s0"], actions, dcost)],
        "kappa": list(kappa),
    }


def m_match():
    # state flips sticky; agent 1 sees it through a 3/4-accurate channel, agent 2 is blind
    states = [0, 1]
    actions = [[0, 1], [0, 1]]
    acc = Fraction(3, 4)
    transition = []
    for s in states:
        for a in itertools.product(*actions):
            stay = Fraction(3, 4) if a[0] == s else Fraction(1, 2)
            for s2 in states:
                ps = stay if s2 == s else 1 - stay
                for o1 in states:
                    po = acc if o1 == s2 else 1 - acc
                    transition.append({"s": s, "a": list(a), "s_next": s2, "o": ["-", o1, "-"], "p": fr(ps * po)})
    initial = [{"s": s, "o": ["-", o1, "-"], "p": fr(Fraction(1, 2) * (acc if o1 == s else 1 - acc))}
               for s in states for o1 in states]
    return {
        "n_agents": 2,
        "states": states,
        "common_obs": ["-"],
        "private_obs": [[0, 1], ["-"]],
        "actions": actions,
        "transition": transition,
        "initial": initial,
        "cost_c": [fr(x) for x in dense(states, actions, lambda s, a: Fraction((a[0] != s) + (a[1] != s), 2))],
        "cost_d": [[fr(x) for x in row] for row in dense(states, actions, lambda s, a: [a[0]])],
        "kappa": ["3/4"],
    }


def m_reveal():
    # the common observation reveals the state; agent 1 additionally sees a private fair coin
    states = [0, 1]
    actions = [[0, 1], [0, 1]]
    transition = []
    for s in states:
        for a in itertools.product(*actions):
            p_one = Fraction(3, 4) if a[0] == 1 else Fraction(1, 4)
            for s2 in states:
                ps = p_one if s2 == 1 else 1 - p_one
                for coin in (0, 1):
                    transition.append({"s": s, "a": list(a), "s_next": s2, "o": [s2, coin, "-"],
                                       "p": fr(ps / 2)})
    initial = [{"s": s, "o": [s, coin, "-"], "p": "1/4"} for s in states for coin in (0, 1)]
    return {
        "n_agents": 2,
        "states": states,
        "common_obs": states,
        "private_obs": [[0, 1], ["-"]],
        "actions": actions,
        "transition": transition,
        "initial": initial,
        "cost_c": [fr(x) for x in dense(states, actions, lambda s, a: s)],
        "cost_d": [[fr(x) for x in row] for row in dense(states, actions, lambda s, a: [1 - a[0]])],
        "kappa": ["1"],
    }


def m_corr():
    # miscoordination cost; the two constraints pin agent 1's marginal to 1/2
    return m_unit(cost=lambda s, a: int(a[0] != a[1]), dcost=lambda s, a: [a[0], 1 - a[0]],
                  kappa=("1/2", "1/2"))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, raw in [("m_unit", m_unit()), ("m_match", m_match()), ("m_reveal", m_reveal()), ("m_corr", m_corr())]:
        (OUT / f"{name}.json").write_text(json.dumps(raw, indent=1) + "\n")
        print("wrote", OUT / f"{name}.json")


if __name__ == "__main__":
    main()
