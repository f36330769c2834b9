"""Per-node Benford anomaly scores and the score-reweighted graph."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benford import BENFORD, BenfordModel
from .dsp import ReweightedGraph
from .txgraph import TransactionGraph

__all__ = ["NodeScoreTable", "ReweightedGraph", "digit_counts", "node_scores", "reweight"]


@dataclass(frozen=True)
class NodeScoreTable:
    """``s[u]`` is the chi-square statistic of the first digits of all
    transactions incident to ``u``; ``deg[u]`` is their number."""

    s: np.ndarray
    deg: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        """``s(u)/deg(u)``; NaN where ``deg(u) = 0``."""
        out = np.full(len(self.s), np.nan)
        has = self.deg > 0
        out[has] = self.s[has] / self.deg[has]
        return out

    def to_jsonl(self, path: str | Path, keys) -> None:
        norm = self.normalized
        with open(path, "w") as fh:
            for u, key in enumerate(keys):
                rec = {
                    "node_key": key,
                    "degree": int(self.deg[u]),
                    "score": float(self.s[u]),
                    "score_per_degree": None if self.deg[u] == 0 else float(norm[u]),
                }
                fh.write(json.dumps(rec) + "\n")


def _count_chunk(graph: TransactionGraph, lo: int, hi: int) -> np.ndarray:
    n = graph.n
    d = graph.digit[lo:hi].astype(np.int64) - 1
    flat = np.bincount(graph.src[lo:hi] * 9 + d, minlength=9 * n)
    flat += np.bincount(graph.dst[lo:hi] * 9 + d, minlength=9 * n)
    return flat


def digit_counts(graph: TransactionGraph, workers: int = 1) -> np.ndarray:
    """(n, 9) matrix of incident first-digit counts per node."""
    m = graph.num_transactions
    workers = max(1, min(workers, m // 100_000 or 1))
    if workers == 1:
        flat = _count_chunk(graph, 0, m)
    else:
        bounds = np.linspace(0, m, workers + 1).astype(np.int64)
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(lambda i: _count_chunk(graph, bounds[i], bounds[i + 1]), range(workers))
            flat = sum(parts)
    return flat.reshape(graph.n, 9)


def node_scores(graph: TransactionGraph, model: BenfordModel = BENFORD, workers: int = 1) -> NodeScoreTable:
    """Chi-square of each node's incident digit histogram; E[X_d^u] = p_d deg(u).

    Nodes without transactions score 0.
    """
    counts = digit_counts(graph, workers)
    deg = counts.sum(axis=1)
    expected = deg[:, None] * model.p[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (counts - expected) ** 2 / expected, 0.0)
    return NodeScoreTable(terms.sum(axis=1), deg)


def reweight(graph: TransactionGraph, scores: NodeScoreTable, multiplicity_weighting: bool = False) -> ReweightedGraph:
    """Collapse transactions to undirected pairs weighted sqrt(s(u) s(v)).

    With ``multiplicity_weighting`` the weight is multiplied by the number of
    transactions between the pair. Self-loops carry no pair and are skipped.
    """
    n = graph.n
    lo = np.minimum(graph.src, graph.dst)
    hi = np.maximum(graph.src, graph.dst)
    keep = lo != hi
    pair, mult = np.unique(lo[keep] * n + hi[keep], return_counts=True)
    u, v = pair // n, pair % n
    w = np.sqrt(scores.s[u] * scores.s[v])
    if multiplicity_weighting:
        w = w * mult
    return ReweightedGraph(n, u, v, w)
