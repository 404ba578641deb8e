"""Solve the constrained M-match problem exactly and compare with the atom-weight LP."""

import argparse
import time
from fractions import Fraction

from teamocc.coordination import coordinated_system
from teamocc.enumeration import build_history_index, build_prescription_index
from teamocc.fixtures import load_fixture
from teamocc.optimize import evaluate_coordination, lagrangian_dp, solve_cop
from teamocc.oracles import atom_lp_oracle, pure_coordination_points


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=int, default=2)
    ap.add_argument("--alpha", type=Fraction, default=Fraction(1))
    args = ap.parse_args()
    m = load_fixture("m_match")
    index = build_history_index(m, args.T)
    pindex = build_prescription_index(m, args.T, index)
    system = coordinated_system(m, pindex)
    t0 = time.perf_counter()
    res = solve_cop(system, args.T, args.alpha)
    print(f"LP: {len(res.lp.columns)} columns, status {res.status}, {time.perf_counter() - t0:.1f}s")
    if res.status != "optimal":
        return
    pts = pure_coordination_points(m, pindex, args.T, args.alpha)
    oracle = atom_lp_oracle(pts, m.kappa)
    print(f"primal   {res.objective}  (atom LP over {len(pts)} pure points: {oracle})")
    print(f"D        {[str(x) for x in res.constraint_values]}  kappa {[str(k) for k in m.kappa]}")
    print(f"lambda*  {[str(x) for x in res.multipliers]}")
    print(f"g(l*)    {lagrangian_dp(system, args.T, args.alpha, res.multipliers).value}")
    C, D = evaluate_coordination(system, res.policy, args.T, args.alpha)
    print(f"policy   re-evaluates to C={C}, D={[str(x) for x in D]}")


if __name__ == "__main__":
    main()
