"""Evaluation metrics and report data emitters."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .benford import BENFORD, BenfordModel
from .pipeline import SubgraphReport
from .scoring import NodeScoreTable


@dataclass(frozen=True)
class DetectionScore:
    precision: float
    recall: float
    f1: float
    detected: frozenset
    truth: frozenset

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class PurityScore:
    entropy: float
    label_proportions: dict

    def to_dict(self) -> dict:
        return {"entropy": self.entropy, "label_proportions": dict(self.label_proportions)}


def f1(detected: Iterable[Hashable], truth: Iterable[Hashable]) -> DetectionScore:
    """Node-level precision, recall and F1 of ``detected`` against ``truth``."""
    detected, truth = frozenset(detected), frozenset(truth)
    if not truth:
        raise ValueError("truth set is empty")
    hits = len(detected & truth)
    precision = hits / len(detected) if detected else 0.0
    recall = hits / len(truth)
    score = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return DetectionScore(precision, recall, score, detected, truth)


def entropy_purity(nodes: Iterable[Hashable], labels: Mapping[Hashable, Hashable]) -> PurityScore:
    """Natural-log entropy of the label mix inside ``nodes`` (0 for a pure set)."""
    nodes = list(nodes)
    missing = [x for x in nodes if x not in labels]
    if missing:
        raise KeyError(f"unlabeled nodes: {missing[:5]}")
    if not nodes:
        raise ValueError("node set is empty")
    counts = Counter(labels[x] for x in nodes)
    total = len(nodes)
    props = {lab: c / total for lab, c in sorted(counts.items(), key=lambda kv: str(kv[0]))}
    entropy = -math.fsum(p * math.log(p) for p in props.values())
    return PurityScore(max(entropy, 0.0) if len(props) > 1 else 0.0, props)


@dataclass(frozen=True)
class Histogram:
    lo: np.ndarray
    hi: np.ndarray
    count: np.ndarray

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("bin_lo,bin_hi,count\n")
        for a, b, c in zip(self.lo.tolist(), self.hi.tolist(), self.count.tolist()):
            out.write(f"{a!r},{b!r},{c}\n")
        return out.getvalue()


def score_degree_histogram(scores: NodeScoreTable, bins: int | Sequence[float] = 30) -> Histogram:
    """Histogram of s(u)/deg(u) over nodes with deg(u) >= 1.

    An integer ``bins`` gives logarithmically spaced edges between the
    smallest positive and the largest value; exact zeros fall into an extra
    leading bin ``[0, min_positive)``. Explicit edges are used as given, with
    the last bin closed on the right.
    """
    values = scores.normalized[scores.deg > 0]
    if values.size == 0:
        raise ValueError("no node with positive degree")
    if isinstance(bins, int):
        if bins < 1:
            raise ValueError("bins must be >= 1")
        pos = values[values > 0]
        if pos.size == 0:
            edges = np.array([0.0, 1.0])
        else:
            lo, hi = pos.min(), pos.max()
            if hi <= lo:
                hi = lo * 10
            edges = np.geomspace(lo, hi, bins + 1)
            if np.any(values == 0):
                edges = np.concatenate([[0.0], edges])
    else:
        edges = np.asarray(bins, dtype=np.float64)
    counts, edges = np.histogram(values, bins=edges)
    return Histogram(edges[:-1], edges[1:], counts)


@dataclass(frozen=True)
class DigitDistribution:
    """First-digit frequencies per series: the Benford reference, the
    global graph and each reported subgraph in rank order."""

    names: list[str]
    freqs: np.ndarray  # (series, 9)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["digit"] + [f"freq_{n}" for n in self.names])
        for d in range(9):
            writer.writerow([d + 1] + [repr(float(f)) for f in self.freqs[:, d]])
        return out.getvalue()

    def to_dict(self) -> list[dict]:
        return [{"series": n, "freq": [float(x) for x in row]} for n, row in zip(self.names, self.freqs)]


def digit_distribution_report(
    reports: Sequence[SubgraphReport], global_report: SubgraphReport, model: BenfordModel = BENFORD
) -> DigitDistribution:
    names = ["benford", "global"] + [f"rank{r.rank}" for r in reports]
    rows = [model.p, global_report.digit_histogram.frequencies()]
    rows += [r.digit_histogram.frequencies() for r in reports]
    return DigitDistribution(names, np.vstack(rows))
