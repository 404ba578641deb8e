from fractions import Fraction as F

import numpy as np
import pytest

from teamocc.coordination import coordinated_forward
from teamocc.errors import NegativeMultiplier, NoWitnessFound
from teamocc.model import validate_model
from teamocc.enumeration import build_history_index
from teamocc.optimize import (build_cop_lp, check_factorization_certificate, decentralized_dual,
                              decentralized_primal_grid, dual_ascent, evaluate_coordination, factorization_failure,
                              lagrangian_dp, nonconvexity_probe, solve_cop, weak_duality_grid)
from teamocc.oracles import atom_lp_oracle, pure_coordination_points

scipy_opt = pytest.importorskip("scipy.optimize")
HALF = F(1, 2)

_SOLVED = {}


def solved(setup, name, T, alpha=F(1), kappa=None):
    key = (name, T, alpha, kappa)
    if key not in _SOLVED:
        s = setup(name, T)
        _SOLVED[key] = (s, solve_cop(s.system, T, alpha, kappa))
    return _SOLVED[key]


def test_column_counts(setup):
    s1 = setup("m_unit", 1)
    assert len(build_cop_lp(s1.system, 1).columns) == 4
    s2 = setup("m_unit", 2)
    assert len(build_cop_lp(s2.system, 2).columns) == 4 + 4 * 16
    s3 = setup("m_match", 2)
    lp = build_cop_lp(s3.system, 2)
    assert len(lp.columns) == 8 + 8 * 1024 == 8200
    # each column sits in exactly one mass/flow row
    hits = {}
    for row, _ in lp.problem.eq_rows:
        for j, v in row.items():
            if v == 1:
                hits[j] = hits.get(j, 0) + 1
    assert all(hits.get(j) == 1 for j in range(len(lp.columns)))


def test_m_match_lp_value(setup):
    s, res = solved(setup, "m_match", 2)
    assert res.status == "optimal" and res.certificate_errors == []
    assert res.objective == F(37, 48)
    assert res.constraint_values == (F(3, 4),)
    assert res.multipliers == (F(1, 9),)
    pts = pure_coordination_points(s.model, s.pindex, 2)
    assert atom_lp_oracle(pts, s.model.kappa) == F(37, 48)
    # extracted policy re-evaluated from scratch
    C, D = evaluate_coordination(s.system, res.policy, 2)
    assert (C, D) == (F(37, 48), (F(3, 4),))
    assert coordinated_forward(s.model, s.pindex, res.policy, 2).same_as(res.measure)


def test_m_match_lp_scipy_cross_check(setup):
    s, res = solved(setup, "m_match", 2)
    p = res.lp.problem
    n = p.n_vars

    def dense(rows):
        A = np.zeros((len(rows), n))
        for i, (row, _) in enumerate(rows):
            for j, v in row.items():
                A[i, j] = float(v)
        return A, np.array([float(b) for _, b in rows])

    A_eq, b_eq = dense(p.eq_rows)
    A_ub, b_ub = dense(p.ub_rows)
    c = np.zeros(n)
    for j, v in p.objective.items():
        c[j] = float(v)
    ref = scipy_opt.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert ref.status == 0 and abs(ref.fun - 37 / 48) < 1e-9


def test_m_match_discounted(setup):
    s, res = solved(setup, "m_match", 2, HALF)
    assert res.objective == F(9, 16) and res.multipliers == (F(1, 13),)
    assert atom_lp_oracle(pure_coordination_points(s.model, s.pindex, 2, HALF), s.model.kappa) == F(9, 16)


def test_vacuous_constraint_matches_unconstrained_dp(setup):
    s, res = solved(setup, "m_unit", 2)
    assert res.objective == 0 and res.multipliers == (0,)
    assert lagrangian_dp(s.system, 2).value == 0
    da = dual_ascent(s.system, 2, primal=res.objective, certificate=res.multipliers)
    assert da.multipliers == (0,) and da.gap == 0 and da.certified


def test_infeasible_kappa(setup):
    s = setup("m_match", 2)
    res = solve_cop(s.system, 2, kappa=(F(-1, 10),))
    assert res.status == "infeasible" and res.certificate_errors == []
    assert atom_lp_oracle(pure_coordination_points(s.model, s.pindex, 2), (F(-1, 10),)) is None


def test_m_corr_coordination_optimum(setup):
    s, res = solved(setup, "m_corr", 1)
    assert res.objective == 0 and res.constraint_values == (HALF, HALF)
    pts = pure_coordination_points(s.model, s.pindex, 1)
    assert atom_lp_oracle(pts, s.model.kappa) == 0


def test_lagrangian_separable(setup):
    s = setup("m_corr", 1)
    # min over a of 1{a1 != a2} + a1 at lambda = (1, 0): play (0, 0)
    dv = lagrangian_dp(s.system, 1, lam=(1, 0))
    assert dv.value == -HALF and dv.lagrangian_cost == 0
    (g,) = dv.policy.rules[0][(0,)]
    assert g == ((0,), (0,))
    u = setup("m_unit", 1)
    for lam in (0, F(1, 3), 2):
        assert lagrangian_dp(u.system, 1, lam=(lam,)).value == -lam / 2


def test_weak_duality_and_concavity(setup):
    s, res = solved(setup, "m_match", 2)
    grid = weak_duality_grid(s.system, 2, 1, res.objective, points=10)
    assert len(grid) == 10 and all(ok for _, _, ok in grid)
    a, b = F(0), F(1, 3)
    ga = lagrangian_dp(s.system, 2, lam=(a,)).value
    gb = lagrangian_dp(s.system, 2, lam=(b,)).value
    gm = lagrangian_dp(s.system, 2, lam=((a + b) / 2,)).value
    assert gm >= (ga + gb) / 2
    assert lagrangian_dp(s.system, 2, lam=res.multipliers).value == res.objective


def test_negative_multiplier(setup):
    s = setup("m_unit", 1)
    with pytest.raises(NegativeMultiplier):
        lagrangian_dp(s.system, 1, lam=(F(-1, 2),))


def test_dual_search_without_certificate(setup):
    s, res = solved(setup, "m_match", 2)
    da = dual_ascent(s.system, 2, primal=res.objective)
    assert 0 <= da.gap <= F(1, 1000)
    assert abs(da.multipliers[0] - F(1, 9)) <= da.bracket + F(1, 8)
    assert all(v <= res.objective for _, v in da.history)


def test_decentralized_gap(setup):
    s = setup("m_corr", 1)
    best = decentralized_primal_grid(s.model, s.index, 1, den=8)
    assert best[0] == HALF
    value, lam = decentralized_dual(s.model, s.index, 1)
    assert value == 0 and all(x >= 0 for x in lam)
    assert best[0] - value == HALF


def test_nonconvexity_witness(setup):
    s = setup("m_unit", 1)
    w = nonconvexity_probe(s.model, s.index, 1, seed=0)
    cert = w.certificate
    assert cert.t == 1
    assert cert.conditional == {(0, 0): HALF, (1, 1): HALF}
    assert cert.cell == (0, 1) and cert.conditional_value == 0 and cert.product_value == F(1, 4)
    assert check_factorization_certificate(w.midpoint, cert, s.model.action_sizes())
    s2 = setup("m_unit", 2)
    w2 = nonconvexity_probe(s2.model, s2.index, 2, seed=0)
    assert set(w2.certificate.conditional) == {(0, 0), (1, 1)}


def test_factorizing_measure_has_no_certificate(setup):
    from teamocc.occupancy import forward_weights
    from teamocc.sampling import random_profile, rng_for
    s = setup("m_match", 2)
    rho = forward_weights(s.model, random_profile(rng_for("fac", 0), s.model, s.index), 2)
    assert factorization_failure(rho, 2, (2, 2)) is None


def test_no_witness_with_singleton_actions():
    m = validate_model({
        "n_agents": 2, "states": ["s"], "common_obs": ["-"], "private_obs": [["-"], ["-"]],
        "actions": [[0], [0]],
        "transition": [{"s": "s", "a": [0, 0], "s_next": "s", "o": ["-", "-", "-"], "p": "1"}],
        "initial": [{"s": "s", "o": ["-", "-", "-"], "p": "1"}],
        "cost_c": ["1"], "cost_d": [["0"]], "kappa": ["0"],
    })
    with pytest.raises(NoWitnessFound) as exc:
        nonconvexity_probe(m, build_history_index(m, 1), 1, sample_count=5)
    assert exc.value.details["pairs"] == 5
