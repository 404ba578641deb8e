"""Command-line entry point.

Exit codes: 0 success, 1 failed check or module error, 2 usage error, 3 infeasible LP.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .coordination import coordinated_forward, coordinated_system, coordination_cost_tables, project_to_joint
from .enumeration import build_history_index, build_prescription_index
from .errors import ModelFormatError, TeamOccError
from .model import discount_mass, format_rational, load_model, parse_rational, with_kappa
from .occupancy import cost_tables, forward_weights, long_term_costs
from .policies import (CoordinationPolicy, DecentralizedProfile, FiniteMixture, ProductMixture,
                       behavioral_to_product_pure_mixture, flatten_joint_mixture, kuhn_collapse,
                       mixture_transport, profile_from_function, psi_lift, transport_back, uniform, unit)
from .serialize import load_policy, measure_to_csv, policy_class, rational_json, save_policy

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _rational_arg(flag):
    def parse(text):
        try:
            return parse_rational(text, flag)
        except ModelFormatError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _vector_arg(flag):
    def parse(text):
        try:
            return tuple(parse_rational(x, flag) for x in text.split(","))
        except ModelFormatError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _num(q):
    return rational_json(q)


def _vec(v):
    return [rational_json(x) for x in v]


def resolve_model(spec, kappa=None):
    """A model file path, or the name of a bundled fixture."""
    from .fixtures import NAMES, load_fixture
    if Path(spec).exists():
        model = load_model(spec)
    elif spec in NAMES:
        model = load_fixture(spec)
    else:
        raise UsageError(f"model: no such file or fixture {spec!r}")
    if kappa is not None:
        if len(kappa) != model.n_constraints:
            raise UsageError(f"--kappa: expected {model.n_constraints} values, got {len(kappa)}")
        model = with_kappa(model, kappa)
    return model


def builtin_policy(name, model, index):
    sizes = model.action_sizes()
    if name == "uniform":
        return profile_from_function(index, sizes, lambda n, t, h0, hn: uniform(sizes[n]))
    if name == "zeros":
        return profile_from_function(index, sizes, lambda n, t, h0, hn: unit(sizes[n], 0))
    return None


def resolve_policy(spec, model, index, pindex):
    p = builtin_policy(spec, model, index)
    if p is not None:
        return p
    if not Path(spec).exists():
        raise UsageError(f"policy: no such file {spec!r} (built-ins: uniform, zeros)")
    return load_policy(spec, model, index, pindex)


def _check_alpha(alpha):
    if not (0 < alpha <= 1):
        raise UsageError(f"--alpha: must lie in (0, 1], got {format_rational(alpha)}")


def _emit(obj, out=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def cmd_validate(args):
    m = resolve_model(args.model)
    _emit({
        "n_agents": m.n_agents, "states": len(m.states), "common_obs": len(m.common_obs),
        "private_obs": [len(x) for x in m.private_obs], "actions": [len(x) for x in m.actions],
        "joint_actions": len(m.joint_actions), "joint_observations": len(m.joint_observations),
        "constraints": m.n_constraints, "kappa": _vec(m.kappa),
        "c_bound": _num(m.c_bound), "d_bound": _num(m.d_bound),
    })
    return EXIT_OK


def cmd_enumerate(args):
    m = resolve_model(args.model)
    index = build_history_index(m, args.T, cap=args.history_cap)
    pindex = build_prescription_index(m, args.T, index, args.domain_mode)
    rows = index.cardinalities() + pindex.cardinalities()
    sys.stdout.write("t,space,count\n")
    for t, space, n in sorted(rows, key=lambda r: r[0]):
        sys.stdout.write(f"{t},{space},{n}\n")
    return EXIT_OK


def _indexes(m, args):
    index = build_history_index(m, args.T, cap=args.history_cap)
    pindex = build_prescription_index(m, args.T, index, getattr(args, "domain_mode", "reachable"),
                                      cap=args.prescription_cap)
    return index, pindex


def _is_coordination(policy):
    if isinstance(policy, CoordinationPolicy):
        return True
    return isinstance(policy, FiniteMixture) and isinstance(policy.atoms[0][1], CoordinationPolicy)


def cmd_evaluate(args):
    _check_alpha(args.alpha)
    m = resolve_model(args.model, args.kappa)
    index, pindex = _indexes(m, args)
    policy = resolve_policy(args.policy, m, index, pindex)
    report = {"class": policy_class(policy), "horizon": args.T, "alpha": _num(args.alpha),
              "expected_mass": _num(discount_mass(args.T, args.alpha))}
    if _is_coordination(policy):
        system = coordinated_system(m, pindex)
        q = coordinated_forward(m, pindex, policy, args.T, args.alpha, cap=args.prescription_cap)
        C, D = long_term_costs(q, coordination_cost_tables(system, args.T, keys=q.weights))
        rho = project_to_joint(q, system)
    else:
        rho = forward_weights(m, policy, args.T, args.alpha)
        C, D = long_term_costs(rho, cost_tables(m, args.T))
    report.update({"total_mass": _num(rho.total()), "C": _num(C), "D": _vec(D),
                   "feasible": all(x <= k for x, k in zip(D, m.kappa)), "support": len(rho.weights)})
    if args.csv:
        Path(args.csv).write_text(measure_to_csv(rho, m))
        report["csv"] = args.csv
    _emit(report, args.out)
    return EXIT_OK


def cmd_convert(args):
    m = resolve_model(args.model)
    index, pindex = _indexes(m, args)
    policy = resolve_policy(args.policy, m, index, pindex)
    to = args.to
    if to == "expand":
        if not isinstance(policy, DecentralizedProfile):
            raise UsageError("--to expand needs a decentralized profile")
        result = behavioral_to_product_pure_mixture(policy, args.T, args.support_cap)
    elif to == "kuhn":
        if not isinstance(policy, ProductMixture):
            raise UsageError("--to kuhn needs a product mixture")
        result = kuhn_collapse(policy, args.T)
    elif to == "flatten":
        mix = FiniteMixture(((Fraction(1), policy),)) if isinstance(policy, DecentralizedProfile) else policy
        if not isinstance(mix, FiniteMixture) or _is_coordination(mix):
            raise UsageError("--to flatten needs a decentralized profile or joint mixture")
        result = flatten_joint_mixture(mix, args.T, args.support_cap)
    elif to == "psi-lift":
        if not (isinstance(policy, DecentralizedProfile) and policy.is_pure):
            raise UsageError("--to psi-lift needs a pure decentralized profile")
        result = psi_lift(policy, pindex, index)
    else:  # transport
        if _is_coordination(policy):
            result = transport_back(policy, pindex, index, args.T, args.support_cap)
        else:
            mix = FiniteMixture(((Fraction(1), policy),)) if isinstance(policy, DecentralizedProfile) else policy
            if not isinstance(mix, FiniteMixture) or not mix.is_pure:
                raise UsageError("--to transport needs pure decentralized atoms (flatten first)")
            result = mixture_transport(mix, pindex, index)
    save_policy(result, args.out, index, pindex)
    _emit({"from": policy_class(policy), "to": policy_class(result), "out": args.out})
    return EXIT_OK


def cmd_solve(args):
    from .optimize import lagrangian_dp, solve_cop
    _check_alpha(args.alpha)
    m = resolve_model(args.model, args.kappa)
    index, pindex = _indexes(m, args)
    system = coordinated_system(m, pindex)
    res = solve_cop(system, args.T, args.alpha, column_cap=args.column_cap, cap=args.prescription_cap)
    rows, cols = res.lp.problem.shape
    report = {"status": res.status, "columns": cols, "rows": rows, "pivots": res.solution.pivots,
              "certificate_ok": not res.certificate_errors, "certificate_errors": res.certificate_errors}
    if res.status == "optimal":
        dv = lagrangian_dp(system, args.T, args.alpha, res.multipliers, cap=args.prescription_cap)
        report.update({"primal": _num(res.objective), "constraint_values": _vec(res.constraint_values),
                       "kappa": _vec(m.kappa), "lambda": _vec(res.multipliers), "dual_value": _num(dv.value),
                       "gap": _num(res.objective - dv.value)})
        if args.policy_out:
            save_policy(res.policy, args.policy_out, index, pindex)
            report["policy"] = args.policy_out
        if args.csv:
            Path(args.csv).write_text(measure_to_csv(res.measure, m, pindex))
            report["csv"] = args.csv
    elif res.status == "infeasible":
        y_eq, y_ub = res.solution.farkas
        report["farkas"] = {"eq": [format_rational(y) for y in y_eq], "ub": [format_rational(y) for y in y_ub]}
    _emit(report, args.out)
    if res.certificate_errors:
        return EXIT_FAIL
    return EXIT_INFEASIBLE if res.status == "infeasible" else EXIT_OK


def cmd_dual(args):
    from .optimize import dual_ascent, lagrangian_dp, solve_cop, weak_duality_grid
    _check_alpha(args.alpha)
    m = resolve_model(args.model, args.kappa)
    index, pindex = _indexes(m, args)
    system = coordinated_system(m, pindex)
    report = {}
    if args.lam is not None:
        if len(args.lam) != m.n_constraints:
            raise UsageError(f"--lambda: expected {m.n_constraints} values, got {len(args.lam)}")
        dv = lagrangian_dp(system, args.T, args.alpha, args.lam, cap=args.prescription_cap)
        report["g"] = {"lambda": _vec(dv.multipliers), "value": _num(dv.value)}
    res = solve_cop(system, args.T, args.alpha, column_cap=args.column_cap, cap=args.prescription_cap)
    report["lp_status"] = res.status
    if res.status != "optimal":
        _emit(report, args.out)
        return EXIT_INFEASIBLE
    cert = None if args.search else res.multipliers
    da = dual_ascent(system, args.T, args.alpha, primal=res.objective, certificate=cert, cap=args.prescription_cap)
    grid = weak_duality_grid(system, args.T, args.alpha, res.objective, points=args.grid, cap=args.prescription_cap)
    report.update({
        "primal": _num(res.objective), "lambda_star": _vec(da.multipliers), "dual_value": _num(da.value),
        "gap": _num(da.gap), "zero_gap_certified": da.certified, "bracket": _num(da.bracket),
        "method": "search" if args.search else "lp_certificate",
        "weak_duality": [{"lambda": _vec(lam), "g": _num(g), "ok": ok} for lam, g, ok in grid],
    })
    _emit(report, args.out)
    return EXIT_OK if all(ok for _, _, ok in grid) else EXIT_FAIL


def cmd_verify(args):
    from .verify import CHECKS, run_suite, suite_passed
    _check_alpha(args.alpha)
    m = resolve_model(args.model)
    name = Path(args.model).stem if Path(args.model).exists() else args.model
    checks = args.checks.split(",") if args.checks else None
    if checks:
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise UsageError(f"--checks: unknown check(s) {unknown}; available {sorted(CHECKS)}")
    reports = run_suite(m, name, args.T, args.alpha, seed=args.seed, trials=args.trials, checks=checks,
                        jobs=args.jobs)
    ok = suite_passed(reports)
    doc = {"fixture": name, "horizon": args.T, "alpha": format_rational(args.alpha), "seed": args.seed,
           "passed": ok, "checks": [r.to_dict(args.timing) for r in reports]}
    if args.csv:
        lines = ["check,status,trials,witness"]
        lines += [f"{r.name},{r.status},{r.trials},{json.dumps(r.witness, sort_keys=True) if r.witness else ''}"
                  for r in reports]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_probe(args):
    from .optimize import check_factorization_certificate, nonconvexity_probe
    _check_alpha(args.alpha)
    m = resolve_model(args.model)
    index = build_history_index(m, args.T, cap=args.history_cap)
    w = nonconvexity_probe(m, index, args.T, args.alpha, args.samples, args.seed)
    cert = w.certificate
    report = {
        "witness": True, "pairs_tried": w.pairs_tried, "weight": _num(w.weight),
        "t": cert.t, "history": repr(cert.history),
        "conditional": {",".join(map(str, a)): _num(p) for a, p in sorted(cert.conditional.items())},
        "marginals": [[_num(p) for p in mg] for mg in cert.marginals],
        "cell": list(cert.cell), "conditional_value": _num(cert.conditional_value),
        "product_value": _num(cert.product_value),
        "certificate_verified": check_factorization_certificate(w.midpoint, cert, m.action_sizes()),
    }
    if args.policy_out:
        save_policy(FiniteMixture(((w.weight, w.u1), (1 - w.weight, w.u2))), args.policy_out, index)
        report["policy"] = args.policy_out
    _emit(report, args.out)
    return EXIT_OK if report["certificate_verified"] else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="teamocc", description="Exact occupation-measure toolkit for finite "
                                                              "constrained multi-agent POMDPs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, horizon=True, alpha=True, kappa=False):
        sp.add_argument("model", help="model JSON path or bundled fixture name")
        if horizon:
            sp.add_argument("--T", type=_positive_int, default=2, help="horizon (default 2)")
        if alpha:
            sp.add_argument("--alpha", type=_rational_arg("--alpha"), default=Fraction(1),
                            help="discount as 'num/den' in (0, 1] (default 1)")
        if kappa:
            sp.add_argument("--kappa", type=_vector_arg("--kappa"), default=None,
                            help="comma-separated constraint thresholds overriding the model")
        sp.add_argument("--out", default=None, help="also write the JSON report here")
        sp.add_argument("--history-cap", type=_positive_int, default=2_000_000)
        sp.add_argument("--prescription-cap", type=_positive_int, default=200_000)
        sp.add_argument("--domain-mode", choices=("reachable", "full"), default="reachable")

    sp = sub.add_parser("validate", help="check a model file and print its summary")
    sp.add_argument("model")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("enumerate", help="cardinality table as CSV")
    common(sp, alpha=False)
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("evaluate", help="occupation measure and long-term costs of a policy")
    common(sp, kappa=True)
    sp.add_argument("policy", help="policy JSON path, or 'uniform' / 'zeros'")
    sp.add_argument("--csv", default=None, help="write the joint-history measure as CSV")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("convert", help="apply a class conversion and write the result")
    common(sp, alpha=False)
    sp.add_argument("policy")
    sp.add_argument("--to", required=True, choices=("kuhn", "flatten", "psi-lift", "transport", "expand"))
    sp.add_argument("--support-cap", type=_positive_int, default=200_000)
    sp.set_defaults(func=cmd_convert)
    sp.set_defaults(out_required=True)

    sp = sub.add_parser("solve", help="exact LP over coordination occupation measures")
    common(sp, kappa=True)
    sp.add_argument("--column-cap", type=_positive_int, default=100_000)
    sp.add_argument("--policy-out", default=None, help="write the extracted coordination policy")
    sp.add_argument("--csv", default=None, help="write the optimal coordination measure as CSV")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("dual", help="Lagrangian dual, dual ascent and weak-duality grid")
    common(sp, kappa=True)
    sp.add_argument("--lambda", dest="lam", type=_vector_arg("--lambda"), default=None)
    sp.add_argument("--search", action="store_true", help="grid + bisection instead of the LP certificate")
    sp.add_argument("--grid", type=_positive_int, default=10)
    sp.add_argument("--column-cap", type=_positive_int, default=100_000)
    sp.set_defaults(func=cmd_dual)

    sp = sub.add_parser("verify", help="run the exact verification harness")
    common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=_positive_int, default=None)
    sp.add_argument("--checks", default=None, help="comma-separated subset of checks")
    sp.add_argument("--jobs", type=_positive_int, default=1)
    sp.add_argument("--csv", default=None, help="write a per-check CSV summary")
    sp.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte-identity)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("probe-nonconvexity", help="search for a non-factorizing midpoint")
    common(sp)
    sp.add_argument("--samples", type=_positive_int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--policy-out", default=None, help="write the witness pair as a 1/2-1/2 mixture")
    sp.set_defaults(func=cmd_probe)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "out_required", False) and not args.out:
        sys.stderr.write("teamocc: error: --out is required for convert\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"teamocc: error: {exc}\n")
        return EXIT_USAGE
    except TeamOccError as exc:
        sys.stderr.write(json.dumps({"error": exc.to_dict()}, sort_keys=True) + "\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
