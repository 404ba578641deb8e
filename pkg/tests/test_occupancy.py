from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from teamocc.errors import DimensionMismatch, PolicyHistoryMismatch
from teamocc.model import discount_mass, model_to_dict, validate_model
from teamocc.occupancy import (OccupationMeasure, combine, conditional_costs_under, cost_tables, dominance_check,
                               forward_weights, long_term_costs)
from teamocc.oracles import pure_decentralized_profiles, trajectory_oracle
from teamocc.policies import FiniteMixture, behavioral_to_product_pure_mixture, profile_from_function, \
    pure_profile_from_function, uniform
from teamocc.sampling import random_mixture, random_product_mixture, random_profile, rng_for

HALF = F(1, 2)


def uniform_profile(s):
    return profile_from_function(s.index, s.model.action_sizes(), lambda n, t, h0, hn: uniform(2))


def test_m_unit_uniform_weights(setup):
    s = setup("m_unit", 2)
    rho = forward_weights(s.model, uniform_profile(s), 2, 1)
    h1 = s.index.joint_histories(1)[0]
    assert {a: rho.weights[(1, h1, a)] for a in s.model.joint_actions} == {a: F(1, 4) for a in s.model.joint_actions}
    assert rho.total() == 2 == rho.expected_total()
    C, D = long_term_costs(rho, cost_tables(s.model, 2))
    assert (C, D) == (2, (1,))


def test_pure_profile_one_step(setup):
    s = setup("m_match", 1)
    u = pure_profile_from_function(s.index, (2, 2), lambda n, t, h0, hn: hn[0][0] if n == 0 else 1)
    rho = forward_weights(s.model, u, 1)
    assert rho.weights == {(1, ((("-" and 0, o, 0),), ()), (o, 1)): HALF for o in (0, 1)}
    assert rho.total() == 1


def test_m_match_behavioral_matches_oracle(setup):
    s = setup("m_match", 2)
    u = random_profile(rng_for("occ-oracle", 0), s.model, s.index)
    rho = forward_weights(s.model, u, 2, HALF)
    brute, C, D = trajectory_oracle(s.model, u, 2, HALF)
    assert rho.same_as(brute)
    assert rho.total() == F(3, 2)
    assert long_term_costs(rho, cost_tables(s.model, 2)) == (C, D)


def test_cost_tables_m_unit(setup):
    s = setup("m_unit", 3)
    tab = cost_tables(s.model, 3, s.index)
    for (t, h, a), c in tab.c.items():
        assert c == a[0] + a[1]
        assert tab.d[(t, h, a)] == (a[0],)
    assert not tab.unreachable


def test_cost_tables_m_match_belief(setup):
    s = setup("m_match", 1)
    tab = cost_tables(s.model, 1)
    h = (((0, 1, 0),), ())
    c = s.model.cost_c
    for a in s.model.joint_actions:
        assert tab.c[(1, h, a)] == F(1, 4) * c[(0, a)] + F(3, 4) * c[(1, a)]
    assert tab.c[(1, h, (1, 1))] == F(1, 4)
    assert tab.bounded_by(s.model.c_bound, s.model.d_bound)


def test_unreachable_cells_flagged(setup):
    raw = model_to_dict(setup("m_match", 1).model)
    raw["private_obs"][0].append("never")
    m = validate_model(raw)
    from teamocc.enumeration import build_history_index
    idx = build_history_index(m, 1)
    tab = cost_tables(m, 1, idx)
    h = (((0, 2, 0),), ())
    assert (1, h, (0, 0)) in tab.unreachable and tab.c[(1, h, (0, 0))] == 0


def test_strategic_independence(setup):
    s = setup("m_match", 2)
    tab = cost_tables(s.model, 2)
    for seed in range(3):
        u = random_profile(rng_for("indep", seed), s.model, s.index)
        c, d = conditional_costs_under(s.model, u, 2)
        assert c and all(tab.c[k] == v for k, v in c.items())
        assert all(tab.d[k] == v for k, v in d.items())


def test_zero_cost_model(setup):
    raw = model_to_dict(setup("m_match", 1).model)
    raw["cost_c"] = ["0"] * len(raw["cost_c"])
    raw["cost_d"] = [["0"]] * len(raw["cost_d"])
    m = validate_model(raw)
    from teamocc.enumeration import build_history_index
    idx = build_history_index(m, 2)
    rho = forward_weights(m, random_profile(rng_for("zero", 0), m, idx), 2)
    assert long_term_costs(rho, cost_tables(m, 2)) == (0, (0,))


def test_m_unit_one_step_cost(setup):
    s = setup("m_unit", 1)
    rho = forward_weights(s.model, uniform_profile(s), 1)
    assert long_term_costs(rho, cost_tables(s.model, 1))[0] == 1


def test_dimension_mismatch(setup):
    s = setup("m_unit", 2)
    rho = forward_weights(s.model, uniform_profile(s), 2)
    with pytest.raises(DimensionMismatch):
        long_term_costs(rho, cost_tables(s.model, 1))
    from teamocc.coordination import coordination_cost_tables
    with pytest.raises(DimensionMismatch):
        long_term_costs(rho, coordination_cost_tables(s.system, 2))
    partial = cost_tables(s.model, 2)
    partial.c.pop(next(iter(rho.weights)))
    with pytest.raises(DimensionMismatch):
        long_term_costs(rho, partial)
    with pytest.raises(DimensionMismatch):
        combine([rho, forward_weights(s.model, uniform_profile(s), 2, HALF)], [HALF, HALF])


def test_policy_horizon_checked(setup):
    s = setup("m_unit", 1)
    with pytest.raises(PolicyHistoryMismatch):
        forward_weights(s.model, uniform_profile(s), 2)


def test_product_mixture_routes_agree(setup):
    s = setup("m_match", 2)
    pm = random_product_mixture(rng_for("routes", 0), s.model, s.index, atoms=2)
    ref = forward_weights(s.model, pm, 2, HALF, method="chain")
    for method in ("collapse", "expand"):
        assert forward_weights(s.model, pm, 2, HALF, method=method).same_as(ref)
    assert trajectory_oracle(s.model, pm, 2, HALF)[0].same_as(ref)


def test_pure_mixture_chain_vs_atoms(setup):
    s = setup("m_match", 2)
    mix = random_mixture(rng_for("chain", 0), s.model, s.index, atoms=3, pure=True)
    assert forward_weights(s.model, mix, 2, method="chain").same_as(forward_weights(s.model, mix, 2, method="atoms"))


def test_dominance_examples(setup):
    s = setup("m_unit", 1)
    pures = [forward_weights(s.model, p, 1) for p in pure_decentralized_profiles(s.model, s.index)]
    assert dominance_check(pures, pures[:2]).dominated
    beh = forward_weights(s.model, uniform_profile(s), 1)
    rep = dominance_check(pures, [beh])
    assert not rep.dominated and rep.failures == [0]
    hull = dominance_check(pures, [beh], convex=True)
    assert hull.dominated and sum(hull.weights[0]) == 1
    # via the product-of-pure expansion the behavioral measure is an exact mixture of pure atoms
    flat = behavioral_to_product_pure_mixture(uniform_profile(s)).to_joint()
    atoms = [forward_weights(s.model, p, 1) for _, p in flat.atoms]
    assert combine(atoms, [w for w, _ in flat.atoms]).same_as(beh)
    assert dominance_check(atoms, [beh], convex=True).dominated


def test_measure_helpers(setup):
    s = setup("m_unit", 2)
    rho = forward_weights(s.model, uniform_profile(s), 2)
    assert rho.truncated(1).total() == 1
    assert len(rho.at_time(2)) == 16
    h1 = s.index.joint_histories(1)[0]
    assert rho.conditional_action_law(1, h1) == {a: F(1, 4) for a in s.model.joint_actions}
    other = OccupationMeasure(2, 1, dict(rho.weights))
    assert rho.first_difference(other) is None
    k = next(iter(other.weights))
    other.weights[k] += 1
    assert rho.first_difference(other)[0] == k


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([F(1), HALF, F(1, 3)]))
def test_normalization_property(seed, alpha):
    from conftest import setup_for
    s = setup_for("m_match", 2)
    rng = rng_for("norm", seed)
    for policy in (random_profile(rng, s.model, s.index), random_mixture(rng, s.model, s.index, atoms=2),
                   random_product_mixture(rng, s.model, s.index, atoms=2)):
        rho = forward_weights(s.model, policy, 2, alpha)
        assert rho.total() == discount_mass(2, alpha)
        assert all(v > 0 for v in rho.weights.values())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mixture_linearity_property(seed):
    from conftest import setup_for
    s = setup_for("m_unit", 2)
    mix = random_mixture(rng_for("lin", seed), s.model, s.index, atoms=3)
    parts = [forward_weights(s.model, p, 2, HALF) for _, p in mix.atoms]
    assert forward_weights(s.model, mix, 2, HALF).same_as(combine(parts, [w for w, _ in mix.atoms]))
