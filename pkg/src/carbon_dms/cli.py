"""``carbon-dms`` command line: gen | solve | sweep | lorenz | price | trace.

Exit codes: 0 success, 2 invalid input, 3 infeasible target, 4 column
generation hit its iteration cap.  ``CARBON_DMS_THREADS`` sets the number of
threads used to build policy tables.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

from .benchmarks import solve_bms, solve_sms
from .exceptions import InfeasibleTargetError, NotConvergedError, ParameterError
from .harness import (
    APPROACHES,
    LORENZ_HEADER,
    PRICE_HEADER,
    carbon_price,
    fmt,
    lorenz,
    parse_targets,
    solution_dict,
    solve_dms,
    sweep,
    write_rows,
    write_sweep,
)
from .master import build_tables, run_column_generation, write_iteration_log
from .policy_sim import SimConfig, demand_matrix, parse_policy, simulate_path, write_trace
from .testbed import DEFAULT_OVERRIDES, Instance, TargetSpec, check_fraction, generate_instance, resolve_target

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 0, 2, 3, 4


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParameterError(f"--set expects key=value, got {item!r}", "set")
        out[key.strip()] = value.strip()
    return out


def _add_instance_args(p):
    p.add_argument("--instance", help="instance JSON written by 'gen'")
    p.add_argument("--type", type=int, default=1, help="assortment type 1-3 (when no --instance)")
    p.add_argument("--seed", type=int, default=0, help="instance seed (when no --instance)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help=f"generator override, one of: {', '.join(DEFAULT_OVERRIDES)}")


def _add_sim_args(p):
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--horizon", type=int, default=9500)
    p.add_argument("--warmup", type=int, default=5000)
    p.add_argument("--sim-seed", type=int, default=0, help="seed of the demand streams")


def _add_out(p):
    p.add_argument("--out", help="output file (default: stdout)")


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _instance(args):
    if args.instance:
        try:
            return Instance.from_json(args.instance)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"cannot read instance {args.instance}: {exc}", "instance") from None
    return generate_instance(args.type, args.seed, _parse_set(args.set))


def _sim(args):
    return SimConfig(args.reps, args.horizon, args.warmup, args.sim_seed)


def _write_json(fh, obj):
    fh.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_gen(args):
    inst = generate_instance(args.type, args.seed, _parse_set(args.set))
    with _output(args.out) as fh:
        fh.write(inst.to_json())
    return EXIT_OK


def _solve_target(args, inst, tables):
    if args.e_max is None:
        return resolve_target(inst, check_fraction(args.target, "target"), tables)
    e_max = args.e_max
    if not math.isfinite(e_max):
        raise ParameterError("--e-max must be finite", "e_max")
    base = resolve_target(inst, 0.0, tables)
    if e_max < base.e_min - 1e-9 * max(1.0, base.e_min):
        raise InfeasibleTargetError(f"cap {e_max:.6g} is below the emission floor {base.e_min:.6g}")
    r = 0.0 if base.reducible <= 0 else min(max((base.e_unconstrained - e_max) / base.reducible, 0.0), 1.0)
    return TargetSpec(r, max(e_max, base.e_min), base.e_min, base.e_unconstrained)


def cmd_solve(args):
    inst = _instance(args)
    if args.e_max is None:
        check_fraction(args.target, "target")
    tables = build_tables(inst, _sim(args))
    target = _solve_target(args, inst, tables)
    if args.approach == "DMS":
        history = []
        cg = run_column_generation(tables, target.e_max, max_iter=args.max_iter, log=history)
        result = cg.solution
        doc = solution_dict(result, target)
        doc.update({"approach": "DMS", "eta": float(cg.eta), "converged": cg.converged,
                    "iterations": cg.state.iteration})
        if args.log:
            with open(args.log, "w", newline="") as fh:
                write_iteration_log(fh, history)
    else:
        result = solve_sms(tables, target.e_max) if args.approach == "SMS" else solve_bms(tables, target.reduction)
        doc = solution_dict(result, target)
        doc["approach"] = args.approach
    with _output(args.out) as fh:
        _write_json(fh, doc)
    if args.approach == "DMS" and not doc["converged"]:
        raise NotConvergedError(f"column generation stopped after {args.max_iter} iterations")
    return EXIT_OK


def cmd_sweep(args):
    inst = _instance(args)
    targets = parse_targets(args.targets)
    approaches = tuple(a.strip().upper() for a in args.approaches.split(","))
    rows = sweep(inst, targets, _sim(args), approaches, max_iter=args.max_iter)
    with _output(args.out) as fh:
        write_sweep(fh, rows)
    if any(not row.converged for row in rows):
        raise NotConvergedError("column generation hit the iteration cap for some targets")
    return EXIT_OK


def cmd_lorenz(args):
    inst = _instance(args)
    r = check_fraction(args.target, "target")
    tables = build_tables(inst, _sim(args))
    _, cg = solve_dms(tables, inst, r, max_iter=args.max_iter)
    curve = lorenz(tables, cg.solution, args.top)
    with _output(args.out) as fh:
        write_rows(fh, LORENZ_HEADER, curve.rows())
    print(f"top {fmt(args.top)} share: realized {fmt(curve.top_realized)} "
          f"ratio {fmt(curve.top_ratio)} zero_total {int(curve.zero_total)}", file=sys.stderr)
    return EXIT_OK


def cmd_price(args):
    inst = _instance(args)
    prices = []
    for v in args.price.split(","):
        try:
            prices.append(float(v))
        except ValueError:
            raise ParameterError(f"cannot parse carbon price {v!r}", "price") from None
    tables = build_tables(inst, _sim(args))
    reports = [carbon_price(tables, c_e) for c_e in prices]
    with _output(args.out) as fh:
        write_rows(fh, PRICE_HEADER, [rep.values() for rep in reports])
    return EXIT_OK


def cmd_trace(args):
    inst = _instance(args)
    products = {p.id: p for p in inst.products}
    if args.product not in products:
        raise ParameterError(f"no product with id {args.product}", "product")
    prod = products[args.product]
    policy = parse_policy(args.policy)
    if args.periods < 1:
        raise ParameterError("periods must be at least 1", "periods")
    config = SimConfig(1, args.periods, 0, args.sim_seed)
    demand = demand_matrix(prod, config, periods=args.periods)[0]
    q_f, q_s, over, avail = simulate_path(policy, prod, demand)
    with _output(args.out) as fh:
        write_trace(fh, demand, q_f, q_s, over, avail)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="carbon-dms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a random instance as JSON")
    p.add_argument("--type", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    _add_out(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one target with one approach, JSON out")
    _add_instance_args(p)
    _add_sim_args(p)
    p.add_argument("--target", type=float, default=0.5, help="fraction of reducible emissions removed")
    p.add_argument("--e-max", type=float, help="absolute emission cap in kg CO2 per period (overrides --target)")
    p.add_argument("--approach", type=str.upper, choices=APPROACHES, default="DMS")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--log", help="CSV iteration log of column generation")
    _add_out(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="all approaches over a list of targets, CSV out")
    _add_instance_args(p)
    _add_sim_args(p)
    p.add_argument("--targets", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")
    p.add_argument("--approaches", default=",".join(APPROACHES))
    p.add_argument("--max-iter", type=int, default=50)
    _add_out(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lorenz", help="cumulative shares of the emission reduction, CSV out")
    _add_instance_args(p)
    _add_sim_args(p)
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--top", type=float, default=0.2, help="fraction of products in the reported top share")
    p.add_argument("--max-iter", type=int, default=50)
    _add_out(p)
    p.set_defaults(func=cmd_lorenz)

    p = sub.add_parser("price", help="carbon-priced policies, CSV out")
    _add_instance_args(p)
    _add_sim_args(p)
    p.add_argument("--price", required=True, help="comma-separated prices per kg CO2")
    _add_out(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("trace", help="per-period trace of one policy, CSV out")
    _add_instance_args(p)
    p.add_argument("--product", type=int, default=0)
    p.add_argument("--policy", required=True, help="dual:S_f,delta | fast:S_f | slow:S_s")
    p.add_argument("--periods", type=int, default=100)
    p.add_argument("--sim-seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleTargetError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotConvergedError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ParameterError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
