import copy
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from teamocc.errors import (DimensionMismatch, DiscountIsOne, MissingEntry, ModelFormatError, NegativeProbability,
                            RowSumError)
from teamocc.fixtures import fixture_path
from teamocc.model import (RunConfig, discount_mass, format_rational, load_model, model_to_dict, parse_rational,
                           save_model, truncation_bound, validate_model, with_kappa)


def raw(name):
    with open(fixture_path(name)) as f:
        return json.load(f)


def test_m_unit_is_valid(m_unit):
    assert m_unit.n_agents == 2 and m_unit.n_states == 1
    assert m_unit.action_sizes() == (2, 2)
    assert m_unit.obs_sizes() == (1, 1, 1)
    assert m_unit.c_bound == 2 and m_unit.d_bound == 1


def test_half_scaled_transition_row_is_rejected():
    r = raw("m_unit")
    r["transition"][0]["p"] = "1/2"
    with pytest.raises(RowSumError) as exc:
        validate_model(r)
    assert exc.value.details["s"] == "s0" and exc.value.details["a"] == [0, 0]


def test_missing_row_is_a_row_sum_error():
    r = raw("m_unit")
    del r["transition"][2]
    with pytest.raises(RowSumError):
        validate_model(r)


def test_negative_probability():
    r = raw("m_match")
    r["initial"][0]["p"] = "-3/8"
    r["initial"][1]["p"] = "7/8"
    with pytest.raises(NegativeProbability):
        validate_model(r)


def test_short_cost_table():
    r = raw("m_unit")
    r["cost_c"] = r["cost_c"][:-1]
    with pytest.raises(MissingEntry):
        validate_model(r)


def test_d_vector_length_mismatch():
    r = raw("m_unit")
    r["cost_d"][1] = ["1", "0"]
    with pytest.raises(DimensionMismatch):
        validate_model(r)


def test_float_probabilities_rejected():
    r = raw("m_unit")
    r["initial"][0]["p"] = 1.0
    with pytest.raises(ModelFormatError):
        validate_model(r)
    with pytest.raises(ModelFormatError):
        parse_rational("0.5")


def test_m_match_c_bound_by_table_scan(m_match):
    scan = max(abs(v) for v in m_match.cost_c.values())
    assert m_match.c_bound == scan == 1


def test_round_trip_all_fixtures(tmp_path, m_unit, m_match, m_reveal, m_corr):
    for m in (m_unit, m_match, m_reveal, m_corr):
        p = tmp_path / "m.json"
        save_model(m, p)
        again = load_model(p)
        assert again == m
        assert again.c_bound == m.c_bound and again.d_bound == m.d_bound


def test_probabilities_are_the_file_rationals(m_match):
    r = raw("m_match")
    rec = r["transition"][5]
    s, a, s2, o = rec["s"], tuple(rec["a"]), rec["s_next"], rec["o"]
    row = m_match.transition[(s, a)]
    o_ids = (0, m_match.private_obs[0].index(o[1]), 0)
    (p,) = [p for s_, o_, p in row if s_ == s2 and o_ == o_ids]
    assert p == F(rec["p"]) and isinstance(p, F)


def test_with_kappa(m_match):
    m = with_kappa(m_match, [F(1, 3)])
    assert m.kappa == (F(1, 3),)
    with pytest.raises(DimensionMismatch):
        with_kappa(m_match, [1, 2])


def test_truncation_examples(m_match, m_unit):
    assert truncation_bound(m_match, F(1, 2), 10) == F(1, 512)
    zero = validate_model({**raw("m_unit"), "cost_c": ["0"] * 4})
    assert zero.c_bound == 0
    assert truncation_bound(zero, F(1, 3), 4) == 0
    assert truncation_bound(m_match, F(3, 4), 8) == F(6561, 16384)
    # the bound equals the tail sum of alpha^(t-1) * c_bar for t > T
    tail = sum(F(3, 4) ** (t - 1) for t in range(9, 400))
    assert F(6561, 16384) - tail < F(1, 10 ** 40)
    with pytest.raises(DiscountIsOne):
        truncation_bound(m_match, 1, 3)


def test_run_config_and_mass():
    assert RunConfig(3, F(1, 2)).mass == F(7, 4)
    assert discount_mass(2, 1) == 2
    with pytest.raises(ValueError):
        RunConfig(0)
    with pytest.raises(ValueError):
        RunConfig(2, F(3, 2))


def test_format_rational():
    assert format_rational(F(3, 1)) == "3"
    assert format_rational(F(-2, 6)) == "-1/3"


lattice = st.integers(min_value=0, max_value=8)


@st.composite
def random_models(draw):
    n_states = draw(st.integers(1, 2))
    n_o1 = draw(st.integers(1, 2))
    acts = [[0, 1], [0, 1]] if draw(st.booleans()) else [[0, 1], [0]]
    states = [f"s{i}" for i in range(n_states)]
    cells = [(s2, o1) for s2 in states for o1 in range(n_o1)]

    def dist():
        w = [draw(lattice) for _ in cells]
        if sum(w) == 0:
            w[0] = 1
        tot = sum(w)
        return [F(x, tot) for x in w]

    transition = []
    import itertools
    for s in states:
        for a in itertools.product(*acts):
            for (s2, o1), p in zip(cells, dist()):
                if p:
                    transition.append({"s": s, "a": list(a), "s_next": s2, "o": ["-", o1, "-"],
                                       "p": format_rational(p)})
    initial = [{"s": s, "o": ["-", o1, "-"], "p": format_rational(p)} for (s, o1), p in zip(cells, dist()) if p]
    n_sa = n_states * len(acts[0]) * len(acts[1])
    return {
        "n_agents": 2, "states": states, "common_obs": ["-"], "private_obs": [list(range(n_o1)), ["-"]],
        "actions": acts, "transition": transition, "initial": initial,
        "cost_c": [format_rational(F(draw(st.integers(-4, 4)), 4)) for _ in range(n_sa)],
        "cost_d": [[format_rational(F(draw(st.integers(0, 4)), 4))] for _ in range(n_sa)],
        "kappa": ["1/2"],
    }


@settings(max_examples=40, deadline=None)
@given(random_models())
def test_round_trip_property(r):
    m = validate_model(r)
    again = validate_model(json.loads(json.dumps(model_to_dict(m))))
    assert again == m
    assert m.c_bound == max(abs(v) for v in m.cost_c.values())


@settings(max_examples=40, deadline=None)
@given(random_models(), st.integers(0, 3))
def test_perturbed_row_rejected(r, k):
    r = copy.deepcopy(r)
    rec = r["transition"][k % len(r["transition"])]
    rec["p"] = format_rational(F(rec["p"]) / 2)
    with pytest.raises(RowSumError):
        validate_model(r)
