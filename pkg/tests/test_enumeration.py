import math

import pytest
from hypothesis import given, settings, strategies as st

from teamocc.enumeration import (assemble, build_history_index, build_prescription_index, extend, history_time,
                                 joint_history_count, private_history_count, project, reachable_joint_histories)
from teamocc.errors import SizeLimitExceeded


def test_m_unit_private_counts(m_unit):
    idx = build_history_index(m_unit, 2)
    assert len(idx.private_histories(0, 1)) == 1
    assert len(idx.private_histories(0, 2)) == 2


def test_m_match_counts(m_match):
    idx = build_history_index(m_match, 2)
    assert len(idx.private_histories(0, 2)) == 8
    assert len(idx.joint_histories(2)) == 16
    # exhaustive enumeration agrees with the product formula
    assert len(idx.joint_histories(2)) == len(idx.common_histories(2)) * 8 * 2


@pytest.mark.parametrize("name,T", [("m_unit", 3), ("m_match", 3), ("m_reveal", 2)])
def test_cardinality_formulas(name, T, setup):
    s = setup(name, T)
    m, idx = s.model, s.index
    for t in range(1, T + 1):
        assert len(idx.common_histories(t)) == len(m.common_obs) ** t
        for n in range(m.n_agents):
            assert len(idx.private_histories(n, t)) == len(m.private_obs[n]) ** t * len(m.actions[n]) ** (t - 1)
            assert len(idx.private_histories(n, t)) == private_history_count(m, n, t)
        assert len(idx.joint_histories(t)) == len(idx.common_histories(t)) * math.prod(
            len(idx.private_histories(n, t)) for n in range(m.n_agents)) == joint_history_count(m, t)


@pytest.mark.parametrize("name,T", [("m_unit", 3), ("m_match", 2), ("m_reveal", 2)])
def test_projection_bijection_and_extension_ids(name, T, setup):
    s = setup(name, T)
    m, idx = s.model, s.index
    n_a, n_o = len(m.joint_actions), len(m.joint_observations)
    for t in range(1, T + 1):
        seen = set()
        for h in idx.joint_histories(t):
            h0, privs = project(h)
            assert assemble(h0, privs) == h
            seen.add((idx.common_id(h0),) + tuple(idx.private_id(n, p) for n, p in enumerate(privs)))
            if t < T:
                for a in m.joint_actions:
                    for o in m.joint_observations:
                        h2 = extend(h, a, o)
                        expect = (idx.joint_id(h) * n_a + m.joint_action_id(a)) * n_o + m.joint_obs_id(o)
                        assert idx.joint_id(h2) == expect
        assert len(seen) == len(idx.joint_histories(t))
    assert history_time(idx.joint_histories(T)[0]) == T


def test_size_cap(m_match):
    with pytest.raises(SizeLimitExceeded) as exc:
        build_history_index(m_match, 6, cap=1000)
    assert exc.value.details["cardinality"] == 65536


def test_prescription_counts(m_match):
    idx = build_history_index(m_match, 2)
    full = build_prescription_index(m_match, 2, idx, "full")
    assert full.agent_count(1, 0) == 4
    assert full.agent_count(2, 1) == 4
    assert full.count(2) == 2 ** 8 * 4 == 1024
    reach = build_prescription_index(m_match, 2, idx, "reachable")
    assert reach.count(2) == 1024  # every private history is reachable in this model


def test_m_unit_prescription_counts(m_unit):
    pi = build_prescription_index(m_unit, 2, build_history_index(m_unit, 2))
    assert [pi.count(t) for t in (1, 2)] == [4, 16]
    assert pi.htilde_count(2) == 4


def test_reachable_domain_can_be_smaller(m_match):
    # knock out one observation symbol: it stays in the full domain but is unreachable
    from teamocc.model import model_to_dict, validate_model
    from fractions import Fraction as F
    raw = model_to_dict(m_match)
    raw["private_obs"][0].append("never")
    m = validate_model(raw)
    idx = build_history_index(m, 2)
    full = build_prescription_index(m, 2, idx, "full")
    reach = build_prescription_index(m, 2, idx, "reachable")
    assert len(full.domain(1, 0)) == 3 and len(reach.domain(1, 0)) == 2
    assert reach.count(2) < full.count(2)
    # unreachable inputs fall back to action 0
    g = reach.prescription_from_id(1, 3)
    assert reach.agent_apply(1, 0, g[0], ((2,), ())) == 0
    assert set(reachable_joint_histories(m, 2)[0]) < set(idx.joint_histories(1))
    assert F(0) == 0


@pytest.mark.parametrize("name,T", [("m_unit", 2), ("m_match", 2)])
def test_prescription_ids_and_application(name, T, setup):
    s = setup(name, T)
    pi, idx = s.pindex, s.index
    for t in range(1, T + 1):
        gammas = pi.prescriptions(t)
        assert len(gammas) == pi.count(t)
        for i, g in enumerate(gammas):
            assert pi.prescription_id(t, g) == i
            assert pi.prescription_from_id(t, i) == g
        for g in gammas[:: max(1, len(gammas) // 50)]:
            for h in idx.joint_histories(t):
                _, privs = project(h)
                a = pi.apply(t, g, privs)
                assert a in s.model.joint_actions
                assert a == tuple(pi.agent_apply(t, n, g[n], privs[n]) for n in range(len(privs)))


def test_htilde_ids(setup):
    s = setup("m_unit", 3)
    pi = s.pindex
    hts = pi.prescription_histories(3)
    assert len(hts) == pi.htilde_count(3) == 64
    for i, ht in enumerate(hts):
        assert pi.htilde_id(ht) == i
        assert pi.htilde_from_id(3, i) == ht


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6))
def test_prescription_id_round_trip_property(t, raw_id):
    from teamocc.fixtures import load_fixture
    m = load_fixture("m_unit")
    pi = build_prescription_index(m, 3, build_history_index(m, 3))
    pid = raw_id % pi.count(t)
    assert pi.prescription_id(t, pi.prescription_from_id(t, pid)) == pid
