"""Print the non-factorizing midpoint witness for the behavioral decentralized measure set."""

import argparse

from teamocc.enumeration import build_history_index
from teamocc.fixtures import load_fixture
from teamocc.optimize import check_factorization_certificate, nonconvexity_probe


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixture", default="m_unit")
    ap.add_argument("--T", type=int, default=1)
    args = ap.parse_args()
    m = load_fixture(args.fixture)
    index = build_history_index(m, args.T)
    w = nonconvexity_probe(m, index, args.T)
    c = w.certificate
    print(f"pairs tried: {w.pairs_tried}")
    print(f"t={c.t}, history {c.history}")
    print("conditional:", {a: str(p) for a, p in c.conditional.items()})
    print("marginals:  ", [[str(p) for p in mg] for mg in c.marginals])
    print(f"cell {c.cell}: conditional {c.conditional_value} vs product {c.product_value}")
    print("verified:", check_factorization_certificate(w.midpoint, c, m.action_sizes()))


if __name__ == "__main__":
    main()
