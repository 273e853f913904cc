"""Command-line front end: run experiments, validate configs, compute
centralized references, compare summaries, and generate or check graphs."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import (BenchError, build_problem, compare_tables,
                    config_from_file, load_summary_csv, reference_solution,
                    run_experiment, validate_config, _fmt)
from .topology import (Graph, TopologyError, generate_random_connected_graph,
                       metropolis_hastings_weights, mixing_ok, validate_mixing)


def _cmd_run(args) -> int:
    cfg = config_from_file(args.config)
    result = run_experiment(cfg)
    for (alg, sched), path in sorted(result.trace_paths.items()):
        print(f"{alg}/{sched}: {path}")
    if result.summary_path:
        print(f"summary: {result.summary_path}")
    return 0


def _cmd_validate(args) -> int:
    cfg = config_from_file(args.config)
    issues = validate_config(cfg)
    if issues:
        for issue in issues:
            print(f"INVALID: {issue}")
        return 1
    print("OK")
    return 0


def _cmd_reference(args) -> int:
    cfg = config_from_file(args.config)
    bundle = build_problem(cfg)
    ref = reference_solution(bundle.problems, tol=cfg.reference_tol)
    print(f"solver = {ref.solver}")
    print(f"iterations = {ref.iterations}")
    print(f"objective = {_fmt(ref.objective)}")
    print(f"kkt_residual = {_fmt(ref.achieved_kkt)}")
    print("x_star = " + ",".join(_fmt(v) for v in ref.x_star))
    return 0


def _cmd_compare(args) -> int:
    summaries = [load_summary_csv(p) for p in args.summaries]
    text, csv_text = compare_tables(summaries)
    if args.csv:
        print(csv_text, end="")
    else:
        print(text, end="")
    return 0


def _cmd_graph_gen(args) -> int:
    graph = generate_random_connected_graph(args.n_agents, args.ratio, args.seed)
    text = graph.to_edge_list()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    if args.weights:
        mixing = metropolis_hastings_weights(graph)
        with open(args.weights, "w", encoding="utf-8") as fh:
            fh.write(mixing.to_csv())
    return 0


def _cmd_graph_check(args) -> int:
    with open(args.edge_list, "r", encoding="utf-8") as fh:
        graph = Graph.from_edge_list(fh.read())
    if args.weights:
        W = np.loadtxt(args.weights, delimiter=",", ndmin=2)
    else:
        W = metropolis_hastings_weights(graph).W
    checks = validate_mixing(W, graph)
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{c.name}: {status} (violation {c.violation:.3g})")
    return 0 if mixing_ok(checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dipgm",
        description="Decentralized composite-optimization experiment harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every experiment cell in a config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("reference", help="solve the centralized problem")
    p.add_argument("config")
    p.set_defaults(func=_cmd_reference)

    p = sub.add_parser("compare", help="tabulate two or more summary CSVs")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--csv", action="store_true", help="emit CSV instead of text")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("graph", help="graph utilities")
    gsub = p.add_subparsers(dest="graph_command", required=True)
    g = gsub.add_parser("gen", help="generate a random connected graph")
    g.add_argument("n_agents", type=int)
    g.add_argument("ratio", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", help="edge-list output path (default stdout)")
    g.add_argument("--weights", help="also write the mixing matrix CSV here")
    g.set_defaults(func=_cmd_graph_gen)
    g = gsub.add_parser("check", help="validate an edge list and its weights")
    g.add_argument("edge_list")
    g.add_argument("--weights", help="mixing matrix CSV (default: rebuild)")
    g.set_defaults(func=_cmd_graph_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BenchError, TopologyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
