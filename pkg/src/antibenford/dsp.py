"""Densest-subgraph solvers for non-negatively weighted undirected graphs.

All solvers maximise the degree density rho(S) = w(S) / |S|, where w(S) is
the total weight of edges with both endpoints in S.

* :func:`greedy_peel` -- repeatedly delete the minimum weighted-degree node
  and keep the best suffix; a 1/2-approximation in O((n + m) log n).
* :func:`peel_iterations` -- Greedy++: peeling rounds whose priorities are
  augmented by loads accumulated in earlier rounds.
* :func:`exact_densest` -- Goldberg's min-cut construction inside a
  search over the density threshold.
* :func:`brute_force_densest` -- exhaustive enumeration, a test oracle.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

BRUTE_FORCE_LIMIT = 20


def _as_ids(nodes) -> np.ndarray:
    if isinstance(nodes, np.ndarray):
        return nodes.astype(np.int64, copy=False)
    return np.fromiter(nodes, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ReweightedGraph:
    """Undirected simple graph with edges ``(u[i], v[i])``, ``u[i] < v[i]``."""

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges, weights=None) -> "ReweightedGraph":
        """Build from an edge list; parallel edges are merged by summing weights."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=np.float64)
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint outside [0, n)")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        keep = e[:, 0] != e[:, 1]
        e, w = e[keep], w[keep]
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        pair, inv = np.unique(lo * n + hi, return_inverse=True)
        return cls(n, pair // n, pair % n, np.bincount(inv, weights=w, minlength=len(pair)))

    @property
    def m(self) -> int:
        return len(self.u)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR ``(indptr, neighbours, weights)``, neighbours sorted per row."""
        ends = np.concatenate([self.u, self.v])
        other = np.concatenate([self.v, self.u])
        ww = np.concatenate([self.w, self.w])
        order = np.lexsort((other, ends))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=self.n), out=indptr[1:])
        return indptr, other[order], ww[order]

    @cached_property
    def weighted_degree(self) -> np.ndarray:
        return np.bincount(self.u, self.w, self.n) + np.bincount(self.v, self.w, self.n)

    def weight(self, a: int, b: int) -> float:
        indptr, nbr, ww = self.adjacency
        lo, hi = indptr[a], indptr[a + 1]
        j = lo + np.searchsorted(nbr[lo:hi], b)
        return float(ww[j]) if j < hi and nbr[j] == b else 0.0

    def induced_weight(self, nodes) -> float:
        mask = np.zeros(self.n, dtype=bool)
        mask[_as_ids(nodes)] = True
        return math.fsum(self.w[mask[self.u] & mask[self.v]].tolist())

    def density(self, nodes) -> float:
        nodes = np.unique(_as_ids(nodes))
        if not nodes.size:
            return 0.0
        return self.induced_weight(nodes) / nodes.size

    def subgraph(self, nodes) -> tuple["ReweightedGraph", np.ndarray]:
        keep = np.unique(_as_ids(nodes))
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        sel = (remap[self.u] >= 0) & (remap[self.v] >= 0)
        return ReweightedGraph(keep.size, remap[self.u[sel]], remap[self.v[sel]], self.w[sel]), keep


@dataclass(frozen=True)
class PeelingTrace:
    """Removal order and the density of the node set just before each removal.

    ``suffix_density[i]`` is the density of ``removal_order[i:]``.
    """

    removal_order: np.ndarray
    suffix_density: np.ndarray

    def to_csv(self, path: str | Path, keys=None) -> None:
        with open(path, "w") as fh:
            fh.write("step,removed_node,suffix_density\n")
            for step, (node, dens) in enumerate(zip(self.removal_order.tolist(), self.suffix_density.tolist())):
                label = keys[node] if keys is not None else node
                fh.write(f"{step},{label},{dens!r}\n")


@dataclass(frozen=True)
class DensityResult:
    nodes: np.ndarray
    density: float
    trace: PeelingTrace | None = None
    # width of the final search interval (exact solver only)
    gap: float = 0.0

    @property
    def size(self) -> int:
        return len(self.nodes)


def _require_nonempty(g: ReweightedGraph) -> None:
    if g.n < 1:
        raise ValueError("densest subgraph of an empty graph is undefined")


def _peel_round(indptr, nbr, ww, n, loads):
    """One peeling pass. Returns (order, suffix_density, removal_degree)."""
    deg = [0.0] * n
    for x in range(n):
        lo, hi = indptr[x], indptr[x + 1]
        if hi > lo:
            deg[x] = math.fsum(ww[lo:hi])
    total = math.fsum(deg) / 2.0
    if loads is None:
        heap = [(deg[x], x) for x in range(n)]
    else:
        heap = [(loads[x] + deg[x], x) for x in range(n)]
    heapq.heapify(heap)
    alive = [True] * n
    order = [0] * n
    dens = [0.0] * n
    at_removal = [0.0] * n
    pop, push = heapq.heappop, heapq.heappush
    remaining = n
    step = 0
    while heap:
        key, x = pop(heap)
        if not alive[x]:
            continue
        dx = deg[x]
        if (dx if loads is None else loads[x] + dx) != key:
            continue  # stale entry
        dens[step] = total / remaining if total > 0.0 else 0.0
        order[step] = x
        at_removal[x] = dx
        step += 1
        alive[x] = False
        remaining -= 1
        total -= dx
        for j in range(indptr[x], indptr[x + 1]):
            y = nbr[j]
            if alive[y]:
                w = ww[j]
                if w:
                    dy = deg[y] - w
                    deg[y] = dy
                    push(heap, (dy if loads is None else loads[y] + dy, y))
    return order, dens, at_removal


def _best_suffix(order, dens):
    # ties favour the smaller (later) suffix
    best_i, best = 0, -1.0
    for i, d in enumerate(dens):
        if d >= best:
            best, best_i = d, i
    return best_i


def _peel(g: ReweightedGraph, rounds: int) -> DensityResult:
    _require_nonempty(g)
    indptr_a, nbr_a, ww_a = g.adjacency
    indptr, nbr, ww = indptr_a.tolist(), nbr_a.tolist(), ww_a.tolist()
    loads = None if rounds == 1 else [0.0] * g.n
    best_nodes = None
    best_density = -1.0
    first_trace = None
    for _ in range(rounds):
        order, dens, at_removal = _peel_round(indptr, nbr, ww, g.n, loads)
        if first_trace is None:
            first_trace = PeelingTrace(np.array(order, dtype=np.int64), np.array(dens))
        i = _best_suffix(order, dens)
        nodes = np.sort(np.array(order[i:], dtype=np.int64))
        density = g.density(nodes)
        if density > best_density:
            best_density, best_nodes = density, nodes
        if loads is not None:
            for x in range(g.n):
                loads[x] += at_removal[x]
    return DensityResult(best_nodes, best_density, first_trace)


def greedy_peel(g: ReweightedGraph) -> DensityResult:
    """Greedy peeling (ties on minimum degree go to the smallest node id).

    The returned ``trace`` records all n suffixes; ``density`` is recomputed
    from the edges of the best suffix.
    """
    return _peel(g, 1)


def peel_iterations(g: ReweightedGraph, T: int) -> DensityResult:
    """Best set over T load-augmented peeling rounds (Greedy++).

    In each round a node's priority is its accumulated load plus its current
    weighted degree; after the round every node's load grows by its degree at
    removal time. ``T=1`` is plain greedy peeling.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    return _peel(g, T)


class _FlowNetwork:
    """Dinic max-flow on float capacities."""

    def __init__(self, size: int):
        self.size = size
        self.head = [[] for _ in range(size)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, a: int, b: int, c: float, rc: float = 0.0) -> None:
        self.head[a].append(len(self.to))
        self.to.append(b)
        self.cap.append(c)
        self.head[b].append(len(self.to))
        self.to.append(a)
        self.cap.append(rc)

    def max_flow(self, s: int, t: int, eps: float) -> float:
        to, cap, head = self.to, self.cap, self.head
        flow = 0.0
        while True:
            level = [-1] * self.size
            level[s] = 0
            q = deque([s])
            while q:
                x = q.popleft()
                for e in head[x]:
                    if cap[e] > eps and level[to[e]] < 0:
                        level[to[e]] = level[x] + 1
                        q.append(to[e])
            if level[t] < 0:
                return flow
            it = [0] * self.size
            stack: list[int] = []
            x = s
            while True:
                if x == t:
                    f = min(cap[e] for e in stack)
                    for e in stack:
                        cap[e] -= f
                        cap[e ^ 1] += f
                    flow += f
                    stack.clear()
                    x = s
                    continue
                edges = head[x]
                while it[x] < len(edges):
                    e = edges[it[x]]
                    if cap[e] > eps and level[to[e]] == level[x] + 1:
                        break
                    it[x] += 1
                if it[x] < len(edges):
                    e = edges[it[x]]
                    stack.append(e)
                    x = to[e]
                elif x == s:
                    break
                else:
                    level[x] = -1
                    e = stack.pop()
                    x = to[e ^ 1]
                    it[x] += 1

    def source_side(self, s: int, eps: float) -> list[int]:
        seen = [False] * self.size
        seen[s] = True
        q = deque([s])
        while q:
            x = q.popleft()
            for e in self.head[x]:
                if self.cap[e] > eps and not seen[self.to[e]]:
                    seen[self.to[e]] = True
                    q.append(self.to[e])
        return [x for x in range(self.size) if seen[x]]


def _denser_than(g: ReweightedGraph, deg: np.ndarray, total: float, guess: float) -> list[int]:
    """Source side of Goldberg's min cut for threshold ``guess``.

    cut({s} + S) = n W + 2 (guess |S| - w(S)), so a nonempty source side means
    some S has density above ``guess``.
    """
    n = g.n
    s, t = n, n + 1
    net = _FlowNetwork(n + 2)
    for x in range(n):
        net.add_edge(s, x, total)
        net.add_edge(x, t, total + 2.0 * guess - deg[x])
    for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        if w > 0:
            net.add_edge(a, b, w, w)
    eps = 1e-12 * max(total, 1.0)
    net.max_flow(s, t, eps)
    return [x for x in net.source_side(s, eps) if x != s]


def exact_densest(g: ReweightedGraph, node_limit: int = 10_000) -> DensityResult:
    """Maximum-density subgraph via min-cut feasibility tests.

    The lower end of the search interval always is the density of a
    concrete set found so far, so the answer is exact once the interval
    closes: below ``1/(n(n-1))`` for integer weights, relative 1e-9
    otherwise (the achieved width is reported as ``gap``).
    """
    _require_nonempty(g)
    if g.n > node_limit:
        raise ValueError(f"graph has {g.n} nodes > node_limit={node_limit}; use greedy_peel")
    n = g.n
    all_nodes = np.arange(n, dtype=np.int64)
    if g.m == 0 or not np.any(g.w > 0):
        return DensityResult(all_nodes[-1:], 0.0)
    deg = g.weighted_degree.tolist()
    total = float(g.w.sum())
    best = all_nodes
    lo = total / n
    hi = max(deg) / 2.0
    integral = bool(np.all(g.w == np.round(g.w)))
    tol = 1.0 / (n * (n - 1)) if integral else 1e-9 * max(hi, 1e-300)
    while hi - lo >= tol:
        guess = (lo + hi) / 2.0
        side = _denser_than(g, deg, total, guess)
        if side:
            dens = g.density(side)
            if dens > guess:
                lo, best = dens, np.array(side, dtype=np.int64)
                continue
        hi = guess
    return DensityResult(np.sort(best), g.density(best), gap=max(hi - lo, 0.0))


def brute_force_densest(g: ReweightedGraph) -> DensityResult:
    """Exhaustive search over all nonempty subsets (n <= 20).

    Ties resolve to the smallest set, then the lowest bitmask.
    """
    _require_nonempty(g)
    n = g.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} nodes, got {n}")
    wmat = np.zeros((n, n))
    wmat[g.u, g.v] = g.w
    wmat[g.v, g.u] = g.w
    size = 1 << n
    weight = np.zeros(size)
    card = np.zeros(size, dtype=np.int64)
    for b in range(n):
        low = np.arange(1 << b)
        gain = np.zeros(1 << b)
        for a in range(b):
            if wmat[a, b]:
                gain += wmat[a, b] * ((low >> a) & 1)
        weight[(1 << b) + low] = weight[low] + gain
        card[(1 << b) + low] = card[low] + 1
    dens = np.zeros(size)
    dens[1:] = weight[1:] / card[1:]
    top = dens[1:].max()
    candidates = np.flatnonzero(dens[1:] == top) + 1
    mask = int(candidates[np.argmin(card[candidates])])
    nodes = np.array([x for x in range(n) if mask >> x & 1], dtype=np.int64)
    return DensityResult(nodes, float(top))
