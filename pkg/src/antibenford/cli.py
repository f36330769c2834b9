"""Command-line interface: ``antibenford {detect,synth,eval,export,stats}``.

Exit codes: 0 success, 1 usage/input error, 3 no significant subgraph found.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evalkit, pipeline, synthgen
from .benford import first_digit
from .pipeline import DetectionConfig
from .scoring import node_scores
from .txgraph import IngestConfig, load_csv

logger = logging.getLogger("antibenford")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_FOUND = 3
NOT_FOUND_MSG = "no statistically significant anomalous subgraph found"


class CliError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", required=True, help="transaction CSV: src,dst,value[,timestamp]")
    p.add_argument("--min-value", type=float, default=1.0, help="drop transactions below this amount (default 1)")
    p.add_argument("--delimiter", default=",", help="CSV field delimiter (default ',')")
    p.add_argument("--allow-self-loops", action="store_true", help="keep src == dst transactions")


def _ingest(args) -> IngestConfig:
    if args.min_value < 0:
        raise CliError("--min-value must be >= 0")
    return IngestConfig(min_value=args.min_value, delimiter=args.delimiter, allow_self_loops=args.allow_self_loops)


def _load(args):
    path = Path(args.input)
    if not path.is_file():
        raise CliError(f"input file not found: {path}")
    return load_csv(path, _ingest(args))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antibenford", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="extract top-k node-disjoint AntiBenford subgraphs")
    _add_ingest_flags(p)
    p.add_argument("--output", "-o", default=os.environ.get("ANTIBENFORD_REPORT", "antibenford_report.json"),
                   help="report JSON path (default $ANTIBENFORD_REPORT or antibenford_report.json)")
    p.add_argument("--k", type=_positive_int, default=5, help="number of subgraphs to extract (default 5)")
    p.add_argument("--tau", type=float, default=10.0, help="significance multiplier over psi(V) (default 10)")
    p.add_argument("--psi-floor", type=float, default=1.0, help="minimum psi(S) to report (default 1)")
    p.add_argument("--solver", choices=pipeline.SOLVERS, default="greedy")
    p.add_argument("--iterations", type=_positive_int, default=1, help="peeling rounds for greedy_iterated")
    p.add_argument("--multiplicity-weighting", action="store_true",
                   help="multiply pair weights by their transaction count")
    p.add_argument("--baseline", choices=("residual", "original"), default="residual",
                   help="psi(V) recomputed per round on the residual graph, or fixed")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads for node scoring (default: CPU count)")
    p.add_argument("--scores-out", help="write node scores as JSON lines")
    p.add_argument("--histogram-out", help="write the s(u)/deg(u) histogram as CSV")
    p.add_argument("--histogram-bins", type=_positive_int, default=30)
    p.add_argument("--digits-out", help="write first-digit distributions as CSV")
    p.add_argument("--trace-out", help="write the first round's peeling trace as CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="generate the planted-biclique benchmark or a Benford null graph")
    p.add_argument("--graph", default="synth.csv", help="output transaction CSV (default synth.csv)")
    p.add_argument("--truth", default="truth.json", help="output ground-truth JSON (default truth.json)")
    p.add_argument("--anomalous-size", type=int, help="size of every anomalous cluster (default 80)")
    p.add_argument("--anomalous-sizes", type=_int_list, help="comma-separated sizes, one per planted digit")
    p.add_argument("--digits", type=_int_list, default=[1, 2, 3], help="planted digits (default 1,2,3)")
    p.add_argument("--normal-clusters", type=int, default=6, help="number of normal clusters (default 6)")
    p.add_argument("--normal-size", type=int, default=80, help="nodes per normal cluster (default 80)")
    p.add_argument("--p", type=float, default=0.1, help="cross-cluster edge probability (default 0.1)")
    p.add_argument("--null", action="store_true", help="emit a pure Benford random graph instead")
    p.add_argument("--nodes", type=int, default=1000, help="null graph: node count")
    p.add_argument("--avg-degree", type=float, default=20.0, help="null graph: average degree")
    p.add_argument("--allow-parallel", action="store_true", help="null graph: sample pairs with replacement")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a detection report against ground truth or labels")
    p.add_argument("--report", required=True, help="report JSON from detect (or a ground-truth JSON)")
    p.add_argument("--truth", help="ground-truth JSON from synth")
    p.add_argument("--labels", help="CSV of node_key,label for entropy purity")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="write reported subgraphs as Graphviz DOT")
    _add_ingest_flags(p)
    p.add_argument("--report", required=True, help="report JSON from detect")
    p.add_argument("--rank", type=_positive_int, action="append", help="rank(s) to export (default 1)")
    p.add_argument("--output", "-o", default="subgraph.dot")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="print graph and global Benford statistics as JSON")
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_stats)
    return parser


def cmd_detect(args) -> int:
    if not args.tau > 1:
        raise CliError("--tau must be > 1")
    if args.psi_floor < 0:
        raise CliError("--psi-floor must be >= 0")
    config = DetectionConfig(
        k=args.k,
        tau=args.tau,
        psi_floor=args.psi_floor,
        solver=args.solver,
        iterations=args.iterations,
        min_value=args.min_value,
        multiplicity_weighting=args.multiplicity_weighting,
        baseline=args.baseline,
        workers=args.threads,
    )
    graph = _load(args)
    logger.info("loaded %d nodes, %d transactions", graph.n, graph.num_transactions)
    global_rep = pipeline.global_stats(graph)
    reports = pipeline.detect_topk(graph, config)
    pipeline.reports_to_json(reports, args.output)

    if args.scores_out or args.histogram_out:
        scores = node_scores(graph, workers=args.threads)
        if args.scores_out:
            scores.to_jsonl(args.scores_out, graph.keys)
        if args.histogram_out:
            hist = evalkit.score_degree_histogram(scores, args.histogram_bins)
            Path(args.histogram_out).write_text(hist.to_csv())
    if args.digits_out:
        dist = evalkit.digit_distribution_report(reports, global_rep)
        Path(args.digits_out).write_text(dist.to_csv())
    if args.trace_out:
        first = reports[0] if reports else pipeline.find_candidate(graph, config)
        if first.trace is None:
            logger.warning("solver %s records no peeling trace", config.solver)
        else:
            first.trace.to_csv(args.trace_out, graph.keys)

    if not reports:
        print(NOT_FOUND_MSG, file=sys.stderr)
        return EXIT_NOT_FOUND
    print(pipeline.format_table(reports, global_rep))
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.null:
        try:
            graph = synthgen.generate_null(args.nodes, args.avg_degree, args.seed, args.allow_parallel)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        graph.to_csv(args.graph)
        Path(args.truth).write_text(json.dumps({"anomalous": [], "clusters": {}}) + "\n")
        return EXIT_OK
    if args.anomalous_sizes is not None and args.anomalous_size is not None:
        raise CliError("use either --anomalous-size or --anomalous-sizes")
    if args.anomalous_sizes is not None:
        sizes = tuple(args.anomalous_sizes)
    else:
        size = 80 if args.anomalous_size is None else args.anomalous_size
        sizes = (size,) * len(args.digits)
    spec = synthgen.SynthSpec(
        normal_cluster_count=args.normal_clusters,
        normal_cluster_size=args.normal_size,
        anomalous_sizes=sizes,
        inter_cluster_p=args.p,
        planted_digits=tuple(args.digits),
        seed=args.seed,
    )
    try:
        graph, truth = synthgen.generate(spec)
    except ValueError as exc:
        raise CliError(f"invalid synthetic spec: {exc}") from None
    graph.to_csv(args.graph)
    truth.to_json(args.truth)
    logger.info("wrote %d nodes, %d transactions to %s", graph.n, graph.num_transactions, args.graph)
    return EXIT_OK


def _detected_sets(path) -> list[tuple[int, list[str]]]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "anomalous" in data:
        return [(i + 1, list(s)) for i, s in enumerate(data["anomalous"])]
    if not isinstance(data, list):
        raise CliError(f"{path}: not a report list")
    return [(int(r["rank"]), list(r["nodes"])) for r in data]


def _read_labels(path) -> dict[str, str]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and rows[0][0].strip().lower() in ("node", "node_key", "key"):
        rows = rows[1:]
    return {r[0].strip(): r[1].strip() for r in rows}


def cmd_eval(args) -> int:
    if not args.truth and not args.labels:
        raise CliError("give --truth and/or --labels")
    detected = _detected_sets(args.report)
    out: dict = {}
    if args.truth:
        truth = synthgen.load_truth(args.truth)
        known = set(truth.get("clusters", {}))
        union = [k for _, s in detected for k in s]
        unknown = sorted(set(union) - known) if known else []
        if unknown:
            raise CliError(f"report nodes missing from ground truth: {unknown[:5]}")
        truth_nodes = [k for s in truth["anomalous"] for k in s]
        out["detection"] = evalkit.f1(union, truth_nodes).to_dict()
    if args.labels:
        labels = _read_labels(args.labels)
        purity = []
        for rank, nodes in detected:
            try:
                score = evalkit.entropy_purity(nodes, labels)
            except KeyError as exc:
                raise CliError(str(exc).strip('"')) from None
            purity.append({"rank": rank, **score.to_dict()})
        out["purity"] = purity
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def cmd_export(args) -> int:
    graph = _load(args)
    reports = {int(r["rank"]): r for r in pipeline.load_reports(args.report)}
    ranks = args.rank or [1]
    unknown = [r for r in ranks if r not in reports]
    if unknown:
        raise CliError(f"unknown rank(s) {unknown}; report has {sorted(reports)}")
    scores = node_scores(graph)
    texts = graph.amount_strings()
    lines = ["digraph antibenford {"]
    for rank in ranks:
        keys = reports[rank]["nodes"]
        missing = [k for k in keys if k not in graph.key_to_id]
        if missing:
            raise CliError(f"rank {rank}: nodes not in graph: {missing[:5]}")
        ids = np.array(sorted(graph.key_to_id[k] for k in keys), dtype=np.int64)
        lines.append(f"  subgraph cluster_{rank} {{")
        lines.append(f'    label="rank {rank}";')
        for u in ids.tolist():
            lines.append(f"    {_dot_id(graph.keys[u])} [label={_dot_id(graph.keys[u] + f' s={scores.s[u]:.3g}')}, score={float(scores.s[u])!r}];")
        lines.append("  }")
        for a in graph.induced_arcs(ids).tolist():
            src, dst = graph.keys[graph.src[a]], graph.keys[graph.dst[a]]
            amount = texts[a]
            lines.append(
                f"  {_dot_id(src)} -> {_dot_id(dst)} "
                f"[label={_dot_id(f'{amount} ({first_digit(amount)})')}, amount={_dot_id(amount)}, digit={int(graph.digit[a])}];"
            )
    lines.append("}")
    Path(args.output).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    graph = _load(args)
    directed, undirected = graph.distinct_edge_counts()
    glob = pipeline.global_stats(graph)
    out = {
        "nodes": graph.n,
        "transactions": graph.num_transactions,
        "distinct_directed_edges": directed,
        "distinct_undirected_edges": undirected,
        "dropped_self_loops": graph.dropped_self_loops,
        "dropped_below_min": graph.dropped_below_min,
        "dropped_nonpositive": graph.dropped_nonpositive,
        "chi2": glob.chi2,
        "psi": glob.psi,
        "density": glob.density_txn,
        "digit_histogram": glob.chi.to_dict(),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
