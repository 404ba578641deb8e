"""Run the verification harness over the bundled fixtures and print a summary table."""

import argparse
import json
from fractions import Fraction

from teamocc.fixtures import load_fixture
from teamocc.verify import run_suite, suite_passed

CASES = [("m_unit", 2, Fraction(1)), ("m_unit", 3, Fraction(1, 2)), ("m_match", 2, Fraction(1, 2)),
         ("m_reveal", 2, Fraction(1))]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    out = []
    ok = True
    for name, T, alpha in CASES:
        reports = run_suite(load_fixture(name), name, T, alpha, args.seed, args.trials, jobs=args.jobs)
        ok &= suite_passed(reports)
        for r in reports:
            print(f"{name:9s} T={T} alpha={alpha!s:4s} {r.name:25s} {r.status}  ({r.timing:.1f}s)")
            out.append(r.to_dict())
    if args.json:
        with open(args.json, "w") as f:
            json.dump(out, f, indent=1, sort_keys=True)
    print("ALL PASS" if ok else "FAILURES")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
