"""End-to-end AntiBenford subgraph detection.

One detection round scores every node, reweights the pair graph, extracts a
dense subgraph of the reweighted graph and tests whether the average
chi-square of that subgraph stands far above the whole-graph baseline.
Top-k extraction repeats the round on the residual graph after deleting the
nodes already reported, so results are node-disjoint.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from . import dsp
from .benford import BENFORD, BenfordModel, ChiSquareResult, DigitHistogram, chi_square_counts
from .scoring import NodeScoreTable, node_scores, reweight
from .txgraph import TransactionGraph

logger = logging.getLogger(__name__)

SOLVERS = ("greedy", "greedy_iterated", "exact")


@dataclass(frozen=True)
class DetectionConfig:
    k: int = 1
    # "psi(S) >> psi(V)" is read as psi(S) >= tau * psi(V) and psi(S) >= psi_floor
    tau: float = 10.0
    psi_floor: float = 1.0
    solver: Literal["greedy", "greedy_iterated", "exact"] = "greedy"
    iterations: int = 1
    min_value: float = 1.0
    multiplicity_weighting: bool = False
    baseline: Literal["residual", "original"] = "residual"
    exact_node_limit: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tau > 1:
            raise ValueError("tau must be > 1")
        if self.psi_floor < 0:
            raise ValueError("psi_floor must be >= 0")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.baseline not in ("residual", "original"):
            raise ValueError("baseline must be 'residual' or 'original'")


@dataclass
class SubgraphReport:
    nodes: np.ndarray
    keys: list[str]
    chi: ChiSquareResult
    txn_count: int
    reweighted_density: float = 0.0
    baseline_psi: float = 0.0
    significant: bool = False
    rank: int = 0
    trace: dsp.PeelingTrace | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def chi2(self) -> float:
        return self.chi.statistic

    @property
    def psi(self) -> float:
        return self.chi.statistic / self.size

    @property
    def density_txn(self) -> float:
        return self.txn_count / self.size

    @property
    def highly_suspicious(self) -> bool:
        return self.psi > self.density_txn

    @property
    def digit_histogram(self) -> DigitHistogram:
        return DigitHistogram(self.chi.counts)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "nodes": list(self.keys),
            "size": self.size,
            "chi2": self.chi2,
            "psi": self.psi,
            "txn_count": self.txn_count,
            "density": self.density_txn,
            "reweighted_density": self.reweighted_density,
            "baseline_psi": self.baseline_psi,
            "significant": self.significant,
            "highly_suspicious": self.highly_suspicious,
            "digit_histogram": self.chi.to_dict(),
        }


def subgraph_chi(graph: TransactionGraph, nodes, model: BenfordModel = BENFORD) -> ChiSquareResult:
    """Chi-square of the first digits of transactions induced by ``nodes``."""
    arcs = graph.induced_arcs(nodes)
    counts = np.bincount(graph.digit[arcs].astype(np.int64) - 1, minlength=9)[:9]
    return chi_square_counts(counts, model)


def _report(graph: TransactionGraph, nodes: np.ndarray, model: BenfordModel, **kw) -> SubgraphReport:
    chi = subgraph_chi(graph, nodes, model)
    return SubgraphReport(nodes=nodes, keys=[graph.keys[i] for i in nodes], chi=chi, txn_count=chi.sample_count, **kw)


def global_stats(graph: TransactionGraph, model: BenfordModel = BENFORD) -> SubgraphReport:
    """Report over the whole node set (the baseline column)."""
    if graph.n == 0:
        raise ValueError("empty graph")
    counts = np.bincount(graph.digit.astype(np.int64) - 1, minlength=9)[:9]
    chi = chi_square_counts(counts, model)
    nodes = np.arange(graph.n, dtype=np.int64)
    rep = SubgraphReport(nodes=nodes, keys=list(graph.keys), chi=chi, txn_count=chi.sample_count)
    rep.baseline_psi = rep.psi
    return rep


def _solve(g: dsp.ReweightedGraph, config: DetectionConfig) -> dsp.DensityResult:
    if config.solver == "exact":
        return dsp.exact_densest(g, node_limit=config.exact_node_limit)
    if config.solver == "greedy_iterated":
        return dsp.peel_iterations(g, config.iterations)
    return dsp.greedy_peel(g)


def find_candidate(
    graph: TransactionGraph,
    config: DetectionConfig = DetectionConfig(),
    baseline_psi: float | None = None,
    model: BenfordModel = BENFORD,
    scores: NodeScoreTable | None = None,
) -> SubgraphReport:
    """Run one detection round and return the candidate with its flags set,
    whether or not it is significant.

    ``baseline_psi`` defaults to psi(V) of ``graph`` itself.
    """
    if graph.num_transactions == 0:
        raise ValueError("graph has no transactions")
    if scores is None:
        scores = node_scores(graph, model, workers=config.workers)
    g = reweight(graph, scores, config.multiplicity_weighting)
    found = _solve(g, config)
    if baseline_psi is None:
        baseline_psi = global_stats(graph, model).psi
    rep = _report(
        graph,
        found.nodes,
        model,
        reweighted_density=found.density,
        baseline_psi=baseline_psi,
        trace=found.trace,
    )
    rep.significant = rep.psi >= config.tau * baseline_psi and rep.psi >= config.psi_floor
    return rep


def detect_one(graph: TransactionGraph, config: DetectionConfig = DetectionConfig(), model: BenfordModel = BENFORD) -> SubgraphReport | None:
    """The AntiBenford subgraph of ``graph``, or None when the densest
    reweighted subgraph is not significant."""
    rep = find_candidate(graph, config, model=model)
    if not rep.significant:
        logger.info("no statistically significant anomalous subgraph found")
        return None
    rep.rank = 1
    return rep


def detect_topk(graph: TransactionGraph, config: DetectionConfig = DetectionConfig(), model: BenfordModel = BENFORD) -> list[SubgraphReport]:
    """Up to ``config.k`` node-disjoint AntiBenford subgraphs in extraction order."""
    original_psi = global_stats(graph, model).psi if config.baseline == "original" else None
    active = np.arange(graph.n, dtype=np.int64)
    residual = graph
    reports: list[SubgraphReport] = []
    while len(reports) < config.k:
        if residual.num_transactions == 0:
            break
        rep = find_candidate(residual, config, baseline_psi=original_psi, model=model)
        if not rep.significant:
            logger.info("round %d: no statistically significant anomalous subgraph found", len(reports) + 1)
            break
        local = rep.nodes
        rep.nodes = active[local]
        rep.rank = len(reports) + 1
        reports.append(rep)
        logger.info("round %d: |S|=%d psi=%.4g chi2=%.4g", rep.rank, rep.size, rep.psi, rep.chi2)
        keep = np.ones(len(active), dtype=bool)
        keep[local] = False
        residual = residual.subgraph(np.flatnonzero(keep))
        active = active[keep]
    return reports


@dataclass(frozen=True)
class SuffixStatistics:
    """Induced statistics of every peeling suffix; entry ``i`` describes
    ``removal_order[i:]``."""

    size: np.ndarray
    txn_count: np.ndarray
    chi2: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.chi2 / self.size

    @property
    def density(self) -> np.ndarray:
        return self.txn_count / self.size


def suffix_statistics(graph: TransactionGraph, trace: dsp.PeelingTrace, model: BenfordModel = BENFORD) -> SuffixStatistics:
    n = graph.n
    pos = np.empty(n, dtype=np.int64)
    pos[trace.removal_order] = np.arange(n)
    # an arc leaves the suffix when its first endpoint is peeled
    leave = np.minimum(pos[graph.src], pos[graph.dst])
    flat = np.bincount(leave * 9 + graph.digit.astype(np.int64) - 1, minlength=9 * n).reshape(n, 9)
    counts = np.cumsum(flat[::-1], axis=0)[::-1]
    total = counts.sum(axis=1)
    expected = total[:, None] * model.p[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        chi2 = np.where(expected > 0, (counts - expected) ** 2 / expected, 0.0).sum(axis=1)
    return SuffixStatistics(n - np.arange(n), total, chi2)


def reports_to_json(reports: list[SubgraphReport], path: str | Path | None = None) -> str:
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_reports(path: str | Path) -> list[dict]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON list of reports")
    return data


def _ordinal(i: int) -> str:
    suffix = "th" if 10 <= i % 100 <= 20 else {1: "st", 2: "nd", 3: "rd"}.get(i % 10, "th")
    return f"{i}{suffix}"


def format_table(reports: list[SubgraphReport], global_report: SubgraphReport) -> str:
    """Text table with chi2, psi and |E|/|S| per subgraph plus the global
    column; a ``*`` marks subgraphs with psi > |E|/|S|."""
    cols = [_ordinal(r.rank) for r in reports] + ["global"]
    rows = [
        ("chi2", [f"{r.chi2:.4g}" for r in reports] + [f"{global_report.chi2:.4g}"]),
        ("psi", [f"{r.psi:.4g}" + ("*" if r.highly_suspicious else "") for r in reports] + [f"{global_report.psi:.3g}"]),
        ("|E|/|S|", [f"{r.density_txn:.4g}" for r in reports] + [f"{global_report.density_txn:.4g}"]),
        ("|S|", [str(r.size) for r in reports] + [str(global_report.size)]),
    ]
    width = max([10] + [len(c) for c in cols] + [len(v) for _, vals in rows for v in vals]) + 2
    lines = ["metric".ljust(9) + "".join(c.rjust(width) for c in cols)]
    for name, vals in rows:
        lines.append(name.ljust(9) + "".join(v.rjust(width) for v in vals))
    return "\n".join(lines)
