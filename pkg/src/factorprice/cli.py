"""Command-line frontend: generate, price, bound, check, cluster, tightness, experiment."""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import bench, serialize
from .clustering import fpf_cluster, kmeans_cluster
from .engine import (
    economic_factor,
    factor_optimize,
    nonpersonalized_heuristic,
    personalized_optimize,
    robust_factor,
)
from .errors import NumericError, ValidationError
from .guarantees import check_a1, check_p1_p2, compute_bound, tightness_oracle
from .market import BundleMarket


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with the validation-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="factor-price", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance file")
    g.add_argument("--family", required=True, choices=sorted(set(bench.FAMILIES)))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    p = sub.add_parser("price", help="price an instance with one strategy")
    p.add_argument("--instance", required=True)
    p.add_argument(
        "--strategy",
        required=True,
        choices=["personalized", "uniform", "economic", "robust", "nonpersonalized"],
    )
    p.add_argument("--factor-file", help="JSON array overriding the factor direction")
    p.add_argument("--q-min", type=float)
    p.add_argument("--q-max", type=float)
    p.add_argument("--csv", action="store_true", help="machine-readable output")

    b = sub.add_parser("bound", help="certify a factor against personalized pricing")
    b.add_argument("--instance", required=True)
    b.add_argument("--factor", default="e", choices=["e", "economic", "robust", "file"])
    b.add_argument("--factor-file")
    b.add_argument("--grid", type=int, default=512, help="scalars for the demand check")
    b.add_argument("--csv", action="store_true")

    c = sub.add_parser("check", help="run the demand-inequality and substitutability checks")
    c.add_argument("--instance", required=True)
    c.add_argument("--factor", default="e", choices=["e", "economic", "robust", "file"])
    c.add_argument("--factor-file")
    c.add_argument("--grid", type=int, default=2000)
    c.add_argument("--dump-gh", help="write the q,G,H curve to this CSV")
    c.add_argument("--csv", action="store_true")

    k = sub.add_parser("cluster", help="partition segments and bound each cluster")
    k.add_argument("--instance", required=True)
    k.add_argument("--k", type=int, required=True)
    k.add_argument("--method", default="fpf", choices=["fpf", "kmeans"])
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", required=True, help="partition CSV path")
    k.add_argument("--csv", action="store_true")

    t = sub.add_parser("tightness", help="continuous-type construction for a given spread")
    t.add_argument("--rho", type=float, required=True)
    t.add_argument("--steps", type=int, default=100_000)
    t.add_argument("--csv", action="store_true")

    e = sub.add_parser("experiment", help="run an experiment grid and write the CSV")
    e.add_argument("--config", help="JSON config file")
    e.add_argument("--preset", choices=sorted(bench.FAMILIES), help="builtin grid")
    e.add_argument("--seed", type=int, help="override the config seed")
    e.add_argument("--out", required=True)
    e.add_argument("--workers", type=int)
    e.add_argument("--timings", action="store_true")
    e.add_argument("--dump-dir")
    return parser


def _load_market(path):
    market = serialize.load_instance(path)
    if isinstance(market, BundleMarket):
        return market.inner
    return market


def _resolve_factor(args, market, ps):
    if args.factor == "e":
        return np.ones(market.n)
    if args.factor == "economic":
        return economic_factor(market, ps)
    if args.factor == "robust":
        return robust_factor(ps)[0]
    if not args.factor_file:
        raise ValidationError("--factor file requires --factor-file")
    return _read_factor_file(args.factor_file)


def _read_factor_file(path):
    payload = serialize._load_json(path)
    arr = np.asarray(payload, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{path}: factor file must hold a flat JSON array")
    return arr


def _print_price_vector(prices, labels=None, indent="  "):
    for i, v in enumerate(prices):
        name = labels[i] if labels else f"product {i}"
        print(f"{indent}{name:<12} {v:12.6f}")


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    gens = {
        "linear": bench.gen_linear_instance,
        "linear-cluster": bench.gen_linear_instance,
        "lcmnl": bench.gen_lcmnl_instance,
        "lcmnl-cluster": bench.gen_lcmnl_instance,
        "nonlinear": bench.gen_nonlinear_instance,
    }
    market = gens[args.family](args.n, args.m, rng)
    serialize.save_instance(market, args.out)
    print(f"wrote {args.family} instance (n={args.n}, m={args.m}) to {args.out}")
    return 0


def _cmd_price(args) -> int:
    market = _load_market(args.instance)
    ps = personalized_optimize(market)
    rows = []
    if args.strategy == "personalized":
        if not args.csv:
            for j in range(ps.m):
                print(f"segment {j} (weight {ps.thetas[j]:.4f}); profit {ps.profits[j]:.6f}")
                _print_price_vector(ps.prices[j], market.labels)
            print(f"aggregate profit {ps.aggregate:.6f}")
        for j in range(ps.m):
            rows.extend(("price", j, i, ps.prices[j, i]) for i in range(ps.n))
            rows.append(("profit", j, "", ps.profits[j]))
        rows.append(("profit_aggregate", "", "", ps.aggregate))
    elif args.strategy == "nonpersonalized":
        prices, profit = nonpersonalized_heuristic(market)
        if not args.csv:
            print("single price vector (heuristic)")
            _print_price_vector(prices, market.labels)
            print(f"profit {profit:.6f}  ({100 * profit / ps.aggregate:.2f}% of personalized)")
        rows.extend(("price", "", i, prices[i]) for i in range(market.n))
        rows.append(("profit_aggregate", "", "", profit))
    else:
        if args.factor_file:
            f = _read_factor_file(args.factor_file)
        elif args.strategy == "uniform":
            f = np.ones(market.n)
        elif args.strategy == "economic":
            f = economic_factor(market, ps)
        else:
            f = robust_factor(ps)[0]
        q_range = None
        if (args.q_min is None) != (args.q_max is None):
            raise ValidationError("--q-min and --q-max must be given together")
        if args.q_min is not None:
            q_range = (args.q_min, args.q_max)
        res = factor_optimize(market, f, q_range=q_range, ps=ps)
        prices = res.q_star * res.f
        if not args.csv:
            print(f"{args.strategy} factor pricing: q* = {res.q_star:.6f}")
            if res.on_bracket_edge:
                print("note: optimum sits on the search bracket edge")
            _print_price_vector(prices, market.labels)
            print(f"profit {res.profit:.6f}  ({100 * res.profit / ps.aggregate:.2f}% of personalized)")
        rows.append(("q_star", "", "", res.q_star))
        rows.extend(("price", "", i, prices[i]) for i in range(market.n))
        rows.append(("profit_aggregate", "", "", res.profit))
    if args.csv:
        print("record,segment,product,value")
        for rec in rows:
            print(",".join(str(x) for x in rec))
    return 0


def _cmd_bound(args) -> int:
    market = _load_market(args.instance)
    ps = personalized_optimize(market)
    f = _resolve_factor(args, market, ps)
    res = factor_optimize(market, f, ps=ps)
    profile = check_a1(market, ps, f, grid_size=args.grid)
    report = compute_bound(ps, f, factor_res=res, a1=profile)
    if args.csv:
        print("q_min,q_max,rho,beta,a1_verified,observed_ratio,factor_profit,personalized_profit")
        print(
            f"{report.q_min!r},{report.q_max!r},{report.rho!r},{report.beta!r},"
            f"{report.a1_verified},{report.guarantee_ratio_observed!r},"
            f"{res.profit!r},{ps.aggregate!r}"
        )
    else:
        print(f"price/factor ratios: q_min = {report.q_min:.6f}, q_max = {report.q_max:.6f}")
        print(f"spread rho = {report.rho:.6f}  ->  multiplier beta = {report.beta:.6f}")
        print(f"demand inequality: {report.a1_verified}")
        print(
            f"profits: personalized {ps.aggregate:.6f}, factor {res.profit:.6f} "
            f"(observed ratio {report.guarantee_ratio_observed:.4f})"
        )
    return 0


def _cmd_check(args) -> int:
    market = _load_market(args.instance)
    ps = personalized_optimize(market)
    f = _resolve_factor(args, market, ps)
    profile = check_a1(market, ps, f, grid_size=args.grid)
    if args.dump_gh:
        profile.dump_csv(args.dump_gh)
    probe = [ps.prices[j] for j in range(ps.m)]
    seg_reports = [
        check_p1_p2(seg.model, f, probe_prices=probe) for seg in market.segments
    ]
    if args.csv:
        print("segment,p1,p2,p1_slack,p2_slack")
        for j, rep in enumerate(seg_reports):
            print(f"{j},{rep.p1},{rep.p2},{rep.p1_slack!r},{rep.p2_slack!r}")
        print("a1_status,violation_q")
        status = "ok" if profile.ok else "violated"
        print(f"{status},{profile.violation!r}")
    else:
        for j, rep in enumerate(seg_reports):
            print(
                f"segment {j}: cross-price check {'pass' if rep.p1 else 'FAIL'} "
                f"(slack {rep.p1_slack:.3g}), weighted-demand check "
                f"{'pass' if rep.p2 else 'FAIL'} (slack {rep.p2_slack:.3g})"
            )
        if profile.ok:
            print(f"demand inequality holds at all {profile.grid.size} grid scalars")
        else:
            print(f"demand inequality VIOLATED at q = {profile.violation:.6g}")
        print(f"note: {profile.note}")
    return 0


def _cmd_cluster(args) -> int:
    market = _load_market(args.instance)
    ps = personalized_optimize(market)
    if args.method == "fpf":
        part = fpf_cluster(ps, args.k)
    else:
        part = kmeans_cluster(ps, args.k, seed=args.seed)
    part.to_csv(args.out)
    if args.csv:
        print("cluster_id,size,rho_star,beta")
        for k, info in enumerate(part.clusters):
            beta = 1.0 + float(np.log(info.rho_star))
            print(f"{k},{len(info.members)},{info.rho_star!r},{beta!r}")
    else:
        print(f"{args.method} partition into {part.k} clusters (worst spread {part.worst_rho:.4f})")
        for k, info in enumerate(part.clusters):
            beta = 1.0 + float(np.log(info.rho_star))
            members = ", ".join(str(j) for j in info.members)
            print(f"  cluster {k}: segments [{members}]  rho* {info.rho_star:.4f}  beta {beta:.4f}")
        print(f"partition written to {args.out}")
    return 0


def _cmd_tightness(args) -> int:
    res = tightness_oracle(args.rho, integration_steps=args.steps)
    if args.csv:
        print("personalized,uniform,ratio,density_integral")
        print(f"{res.personalized!r},{res.uniform!r},{res.ratio!r},{res.density_integral!r}")
    else:
        print(f"personalized profit  {res.personalized:.6f}")
        print(f"uniform profit       {res.uniform:.6f}")
        print(f"ratio                {res.ratio:.6f}")
        print(f"density integral     {res.density_integral:.8f}")
    return 0


def _cmd_experiment(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ValidationError("give exactly one of --config or --preset")
    if args.config:
        config = serialize.load_config(args.config)
    else:
        config = bench.preset(args.preset)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    results = bench.run_experiment(
        config,
        csv_path=args.out,
        workers=args.workers,
        timings=args.timings,
        dump_dir=args.dump_dir,
    )
    print(f"wrote {len(results)} rows to {args.out}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "price": _cmd_price,
    "bound": _cmd_bound,
    "check": _cmd_check,
    "cluster": _cmd_cluster,
    "tightness": _cmd_tightness,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse help/usage paths
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
