"""Coordinated vs. independently randomized teams on the miscoordination fixture.

The coordinator closes the duality gap; independent randomization cannot, because the
constrained optimum needs a correlated joint action.
"""

from teamocc.coordination import coordinated_system
from teamocc.enumeration import build_history_index, build_prescription_index
from teamocc.fixtures import load_fixture
from teamocc.optimize import decentralized_dual, decentralized_primal_grid, lagrangian_dp, solve_cop


def main():
    m = load_fixture("m_corr")
    index = build_history_index(m, 1)
    system = coordinated_system(m, build_prescription_index(m, 1, index))
    res = solve_cop(system, 1)
    g = lagrangian_dp(system, 1, 1, res.multipliers).value
    print(f"coordinated: primal {res.objective}, dual {g}, gap {res.objective - g}")
    best = decentralized_primal_grid(m, index, 1, den=8)
    dual, lam = decentralized_dual(m, index, 1)
    print(f"decentralized: best lattice primal {best[0]} (D = {[str(x) for x in best[1]]}), "
          f"dual {dual} at lambda {[str(x) for x in lam]}, gap {best[0] - dual}")


if __name__ == "__main__":
    main()
