import numpy as np
import pytest

from antibenford.dsp import ReweightedGraph
from antibenford.txgraph import TransactionGraph


def make_graph(arcs, amounts=None, keys=None):
    """TransactionGraph from (src, dst) id pairs; keys default to 'n<i>'."""
    arcs = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
    n = int(arcs.max()) + 1 if len(arcs) else 0
    if keys is None:
        keys = [f"n{i}" for i in range(n)]
    if amounts is None:
        amounts = [1.0] * len(arcs)
    return TransactionGraph.from_arrays(keys, arcs[:, 0], arcs[:, 1], amounts)


def random_weighted(rng, n, p=0.5, integer=False):
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    if integer:
        w = rng.integers(1, 6, size=len(edges)).astype(float)
    else:
        w = rng.random(len(edges)) * 3
    return ReweightedGraph.from_edges(n, edges or np.empty((0, 2)), w)


@pytest.fixture
def triangle_pendant():
    # triangle a,b,c = 0,1,2 plus pendant d = 3 attached to a
    return ReweightedGraph.from_edges(4, [(0, 1), (1, 2), (0, 2), (0, 3)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
