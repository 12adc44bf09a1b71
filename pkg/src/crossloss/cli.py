"""Command-line front end.

Exit codes: 0 success, 2 parse or format error, 3 domain violation,
4 numerical failure (rank-deficient regression).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from crossloss import io
from crossloss.blend import AlignmentError, grid_search_weights
from crossloss.elicitation import (
    DEFAULT_FLOOR_DELTA, InsufficientSamplesError, RankDeficientError, clean_samples,
    fit_loss_params, specification_test)
from crossloss.loss import DomainError, LossParams, bias_ranking
from crossloss.metrics import (
    ALL_METRICS, P90_CONVENTION, average_estimated_variance, evaluate,
    generate_noisy_predictions, table1_demo)

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3, 4


def _params(args) -> LossParams:
    if args.webster:
        return LossParams(2.0, -1.0)
    return LossParams(args.loss_p, args.loss_q)


def _emit(args, machine, text):
    print(io.dumps(machine) if args.format == "json" else text)


def cmd_evaluate(args):
    sets = io.read_predictions(args.predictions)
    params = _params(args)
    metrics = [m.strip() for m in args.metrics.split(",")] if args.metrics else None
    unknown = sorted(set(metrics or ()) - set(ALL_METRICS))
    if unknown:
        raise io.ParseError(f"unknown metric(s) {unknown}; choose from {list(ALL_METRICS)}")
    reports = [evaluate(s, params, metrics, args.hamilton_p) for s in sets]
    names = [m for m in (metrics or ALL_METRICS) if any(m in r.metric_values for r in reports)]
    rows = [[r.set_name] + [r.metric_values.get(m) for m in names] for r in reports]
    flag_of = {m: f for r in reports for m, f in r.admissibility_flags.items()}
    flags = [[m, flag_of[m].value] for m in names]
    text = "\n\n".join([
        f"loss p={params.p:g} q={params.q:g}",
        io.format_table(rows, ["set"] + names),
        io.format_table(flags, ["metric", "flag"]),
        f"p90_ape convention: {P90_CONVENTION}",
    ])
    _emit(args, {"reports": [io.report_to_dict(r) for r in reports],
                 "p90_convention": P90_CONVENTION}, text)


def cmd_fit(args):
    samples = io.read_elicitation(args.elicitation)
    cleaned = clean_samples(samples, args.floor_delta,
                            "drop" if args.drop_full_satisfaction else "floor")
    fit = fit_loss_params(cleaned)
    spec = specification_test(fit)
    se = fit.standard_errors
    rows = [["p", fit.p_hat, se[0]], ["q", fit.q_hat, se[1]], ["log a", fit.intercept, se[2]]]
    lines = [
        io.format_table(rows, ["term", "estimate", "std_error"]),
        f"p + q = {spec.sum_pq:.4f}: property 1 {'holds' if spec.property1_holds else 'VIOLATED'}",
        f"samples used {fit.n_used}, dropped U=0 {fit.n_dropped_zero_u}, "
        f"floored U=100 {fit.n_floored}, dropped U=100 {fit.n_dropped_full}",
    ] + [f"note: {d}" for d in spec.diagnostics]
    _emit(args, io.fit_to_dict(fit, spec), "\n".join(lines))


def cmd_blend(args):
    if not 0 < args.resolution <= 1:
        raise io.ParseError(f"--resolution must lie in (0, 1], got {args.resolution}")
    sets = io.read_predictions(args.predictions)
    if args.sets:
        wanted = args.sets.split(",")
        by_name = {s.name: s for s in sets}
        missing = [n for n in wanted if n not in by_name]
        if missing:
            raise io.ParseError(f"{args.predictions}: no prediction column(s) {missing}")
        sets = [by_name[n] for n in wanted]
    controls = io.read_controls(args.controls, sets[0].ids) if args.controls else None
    params = _params(args)
    result = grid_search_weights(sets, params, args.resolution, controls, args.refine,
                                 args.allow_negative_weights, args.threads)
    if args.output:
        io.write_predictions(args.output, [result.blended])
    names = [s.name for s in sets]
    rows = [[n, w] for n, w in zip(names, result.best_weights.weights)]
    text = "\n".join([
        io.format_table(rows, ["set", "weight"]),
        f"total loss {result.best_loss:.2f} (p={params.p:g}, q={params.q:g})",
        f"final grid spacing {result.grid_resolution:g}, {result.evaluations} evaluations",
    ])
    _emit(args, io.blend_to_dict(result, names), text)


def cmd_bias(args):
    sets = io.read_predictions(args.predictions)
    if args.set:
        sets = [s for s in sets if s.name == args.set]
        if not sets:
            raise io.ParseError(f"{args.predictions}: no prediction column {args.set!r}")
    params = _params(args)
    ranked = [(s.name, bias_ranking(s, params)) for s in sets]
    blocks = [f"{name}\n" + io.format_table(
        [[r.id, r.signed_loss, r.magnitude] for r in recs], ["id", "signed_loss", "magnitude"])
        for name, recs in ranked]
    _emit(args, {"sets": [io.bias_to_dict(n, r) for n, r in ranked]}, "\n\n".join(blocks))


def cmd_demo_table1(args):
    demo = table1_demo()
    rows = []
    for i, a in enumerate(demo.table.actuals):
        row = [i + 1, a]
        for s in demo.table.scenarios:
            row += [float(demo.table.scenarios[s][i]), float(demo.ape(s)[i]),
                    float(demo.webster_loss(s)[i])]
        rows.append(row)
    means = ["Means", ""]
    for s in demo.table.scenarios:
        vals = demo.reports[s].metric_values
        means += ["", vals["mape"], vals["mean_loss"]]
    rows.append(means)
    header = ["area", "A"]
    for n in range(1, len(demo.table.scenarios) + 1):
        header += [f"eps{n}", f"APE{n}", f"L{n}"]
    text = "\n".join([
        io.format_table(rows, header),
        "",
        "best to worst by MAPE:          " + ", ".join(demo.ranking("mape")),
        "best to worst by Webster loss:  " + ", ".join(demo.ranking("mean_loss")),
    ])
    machine = {
        "actuals": list(demo.table.actuals),
        "scenarios": {s: {"epsilon": list(demo.table.scenarios[s]),
                          "ape": io._plain(demo.ape(s)),
                          "webster_loss": io._plain(demo.webster_loss(s)),
                          "mape": demo.reports[s].metric_values["mape"],
                          "mean_webster_loss": demo.reports[s].metric_values["mean_loss"]}
                      for s in demo.table.scenarios},
        "ranking": {"mape": demo.ranking("mape"), "webster": demo.ranking("mean_loss")},
    }
    _emit(args, machine, text)


def cmd_demo_variance(args):
    rng = np.random.default_rng(args.seed)
    actuals = rng.uniform(args.low, args.high, args.n)
    pset = generate_noisy_predictions(actuals, args.variance_factor, args.seed + 1)
    value = average_estimated_variance(pset)
    _emit(args, {"variance_factor": args.variance_factor, "n": args.n, "seed": args.seed,
                 "average_estimated_variance": value},
          f"variance factor {args.variance_factor:g}, n={args.n}: "
          f"average estimated variance {value:.4f}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table")
    loss = argparse.ArgumentParser(add_help=False)
    loss.add_argument("--loss-p", type=float, default=2.0, help="exponent on |P - A| (default 2)")
    loss.add_argument("--loss-q", type=float, default=-1.0, help="exponent on A (default -1)")
    loss.add_argument("--webster", action="store_true", help="shorthand for p=2, q=-1")

    parser = argparse.ArgumentParser(
        prog="crossloss", description="Loss-function evaluation of cross-sectional predictions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common, loss], help="metrics for each prediction set")
    p.add_argument("predictions")
    p.add_argument("--metrics", help="comma-separated subset of: " + ",".join(ALL_METRICS))
    p.add_argument("--hamilton-p", type=float, default=1.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fit", parents=[common], help="estimate p and q from elicited scores")
    p.add_argument("elicitation")
    p.add_argument("--floor-delta", type=float, default=DEFAULT_FLOOR_DELTA)
    p.add_argument("--drop-full-satisfaction", action="store_true",
                   help="drop U=100 answers instead of flooring their loss")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("blend", parents=[common, loss], help="loss-minimizing weighted blend")
    p.add_argument("predictions")
    p.add_argument("--sets", help="comma-separated prediction columns to blend (default all)")
    p.add_argument("--resolution", type=float, default=0.01, help="weight grid spacing (default 0.01)")
    p.add_argument("--refine", action="store_true",
                   help="zoom in around the best point until spacing drops below 1e-4")
    p.add_argument("--controls", help="control totals file")
    p.add_argument("--allow-negative-weights", action="store_true",
                   help="search weights down to -1; blends with negative values are skipped")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for the compiled kernel (0 = all cores)")
    p.add_argument("--output", help="write the blended predictions here")
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("bias", parents=[common, loss], help="rank observations by signed loss")
    p.add_argument("predictions")
    p.add_argument("--set", help="only this prediction column")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("demo-table1", parents=[common], help="MAPE vs Webster loss scenarios")
    p.set_defaults(func=cmd_demo_table1)

    p = sub.add_parser("demo-variance", parents=[common],
                       help="simulate unbiased predictions with variance c*A")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--variance-factor", type=float, default=4.0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--low", type=float, default=1e3)
    p.add_argument("--high", type=float, default=1e5)
    p.set_defaults(func=cmd_demo_variance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except io.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, AlignmentError, InsufficientSamplesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except RankDeficientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
