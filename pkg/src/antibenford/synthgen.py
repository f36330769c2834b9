"""Synthetic transaction graphs.

``generate`` builds a bipartite blockmodel: every cluster is a complete
bipartite graph between its users and its objects, users and objects of
different clusters are joined independently with probability p, and all
first digits are Benford except on the induced edges of the anomalous
clusters, which carry one fixed digit each.

``generate_null`` draws an Erdos-Renyi graph whose digits are iid Benford.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benford import BENFORD
from .txgraph import TransactionGraph


@dataclass(frozen=True)
class SynthSpec:
    normal_cluster_count: int = 6
    normal_cluster_size: int = 80
    anomalous_sizes: tuple[int, ...] = (80, 80, 80)
    inter_cluster_p: float = 0.1
    planted_digits: tuple[int, ...] = (1, 2, 3)
    seed: int = 0

    def validate(self) -> None:
        if len(self.planted_digits) != len(self.anomalous_sizes):
            raise ValueError("need one planted digit per anomalous cluster")
        if any(not 1 <= d <= 9 for d in self.planted_digits):
            raise ValueError("planted digits must lie in 1..9")
        if any(s < 2 for s in self.anomalous_sizes):
            raise ValueError("anomalous clusters need at least 2 nodes")
        if self.normal_cluster_count < 0 or (self.normal_cluster_count and self.normal_cluster_size < 2):
            raise ValueError("normal clusters need at least 2 nodes")
        if not 0.0 <= self.inter_cluster_p <= 1.0:
            raise ValueError("inter_cluster_p must lie in [0, 1]")
        if self.normal_cluster_count + len(self.anomalous_sizes) == 0:
            raise ValueError("spec has no clusters")

    @property
    def cluster_sizes(self) -> list[int]:
        return [self.normal_cluster_size] * self.normal_cluster_count + list(self.anomalous_sizes)


@dataclass(frozen=True)
class PlantedGroundTruth:
    keys: list[str]
    cluster: np.ndarray  # cluster id per node
    anomalous: list[np.ndarray]  # node ids per planted cluster

    def anomalous_keys(self) -> list[list[str]]:
        return [[self.keys[i] for i in s] for s in self.anomalous]

    def to_json(self, path: str | Path) -> None:
        payload = {
            "anomalous": self.anomalous_keys(),
            "clusters": {k: int(c) for k, c in zip(self.keys, self.cluster.tolist())},
        }
        Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_truth(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    if "anomalous" not in data:
        raise ValueError(f"{path}: missing 'anomalous'")
    return data


def _amounts(rng: np.random.Generator, digits: np.ndarray) -> np.ndarray:
    # only the first digit matters; spread magnitudes over digit * 10^0..10^4
    return digits * 10.0 ** rng.integers(0, 5, size=len(digits))


def generate(spec: SynthSpec = SynthSpec()) -> tuple[TransactionGraph, PlantedGroundTruth]:
    """Planted-anomaly blockmodel; arcs run from users to objects.

    A cluster of size c has ceil(c/2) users and floor(c/2) objects. Normal
    clusters come first, then the anomalous ones in ``anomalous_sizes`` order.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sizes = spec.cluster_sizes
    n_normal = spec.normal_cluster_count
    keys: list[str] = []
    cluster_of: list[int] = []
    users, objects = [], []
    for c, size in enumerate(sizes):
        nu = (size + 1) // 2
        base = len(keys)
        users.append(np.arange(base, base + nu))
        objects.append(np.arange(base + nu, base + size))
        keys += [f"c{c}u{i}" for i in range(nu)] + [f"c{c}o{i}" for i in range(size - nu)]
        cluster_of += [c] * size

    src_parts, dst_parts, digit_parts = [], [], []
    for c in range(len(sizes)):
        uu, oo = np.meshgrid(users[c], objects[c], indexing="ij")
        src_parts.append(uu.ravel())
        dst_parts.append(oo.ravel())
        if c >= n_normal:
            digit_parts.append(np.full(uu.size, spec.planted_digits[c - n_normal], dtype=np.uint8))
        else:
            digit_parts.append(BENFORD.sample_digits(rng, uu.size))
    if spec.inter_cluster_p > 0:
        for c in range(len(sizes)):
            foreign = np.concatenate([objects[o] for o in range(len(sizes)) if o != c] or [np.empty(0, np.int64)])
            hit = rng.random((len(users[c]), len(foreign))) < spec.inter_cluster_p
            ui, oi = np.nonzero(hit)
            src_parts.append(users[c][ui])
            dst_parts.append(foreign[oi])
            digit_parts.append(BENFORD.sample_digits(rng, len(ui)))

    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    digit = np.concatenate(digit_parts)
    graph = TransactionGraph.from_arrays(keys, src, dst, _amounts(rng, digit), digit=digit)
    cluster = np.array(cluster_of, dtype=np.int64)
    anomalous = [np.flatnonzero(cluster == c) for c in range(n_normal, len(sizes))]
    return graph, PlantedGroundTruth(keys, cluster, anomalous)


def _unrank_pairs(index: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map 0..n(n-1)/2-1 onto pairs i < j in row-major order."""
    index = index.astype(np.int64)
    # row i starts at i*n - i*(i+1)/2; invert the quadratic then fix rounding
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * index)) / 2).astype(np.int64)
    start = i * n - i * (i + 1) // 2
    over = start > index
    i[over] -= 1
    start = i * n - i * (i + 1) // 2
    nxt = (i + 1) * n - (i + 1) * (i + 2) // 2
    under = nxt <= index
    i[under] += 1
    start = i * n - i * (i + 1) // 2
    j = index - start + i + 1
    return i, j


def generate_null(n: int, avg_degree: float, seed: int = 0, allow_parallel: bool = False) -> TransactionGraph:
    """Random graph with round(avg_degree * n / 2) transactions, iid Benford digits.

    By default pairs are distinct (a simple graph, so ``avg_degree <= n-1``);
    ``allow_parallel`` draws pairs with replacement, which permits the very
    high average degrees needed for concentration checks on small n.
    Each pair is oriented by a fair coin.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if avg_degree < 1:
        raise ValueError("avg_degree must be >= 1")
    if not allow_parallel and avg_degree > n - 1:
        raise ValueError(f"avg_degree {avg_degree} infeasible for a simple graph on {n} nodes")
    rng = np.random.default_rng(seed)
    m = int(round(avg_degree * n / 2))
    pairs = n * (n - 1) // 2
    index = rng.choice(pairs, size=m, replace=allow_parallel)
    i, j = _unrank_pairs(index, n)
    flip = rng.random(m) < 0.5
    src = np.where(flip, j, i)
    dst = np.where(flip, i, j)
    digit = BENFORD.sample_digits(rng, m)
    keys = [str(x) for x in range(n)]
    return TransactionGraph.from_arrays(keys, src, dst, _amounts(rng, digit), digit=digit)
