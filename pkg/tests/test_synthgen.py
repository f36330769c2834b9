import json

import numpy as np
import pytest

from antibenford.benford import chi_square_counts
from antibenford.synthgen import SynthSpec, _unrank_pairs, generate, generate_null, load_truth

CHI2_8DF_99 = 20.090235029663233  # 0.99 quantile of chi-square with 8 dof


def test_within_cluster_count():
    g, truth = generate(SynthSpec(normal_cluster_count=6, anomalous_sizes=(80, 80, 80), inter_cluster_p=0.0))
    assert g.n == 720
    assert g.num_transactions == 9 * 40 * 40 == 14_400


def test_p0_no_anomalies_gives_disjoint_bicliques():
    spec = SynthSpec(normal_cluster_count=9, anomalous_sizes=(), planted_digits=(), inter_cluster_p=0.0, seed=1)
    g, truth = generate(spec)
    assert truth.anomalous == []
    assert np.all(truth.cluster[g.src] == truth.cluster[g.dst])
    assert g.num_transactions == 9 * 1600
    assert chi_square_counts(np.bincount(g.digit - 1, minlength=9)).statistic < 40


def test_cross_edges_user_to_object_only():
    spec = SynthSpec(seed=3)
    g, truth = generate(spec)
    assert all("u" in g.keys[u] for u in np.unique(g.src))
    assert all("o" in g.keys[v] for v in np.unique(g.dst))
    cross = truth.cluster[g.src] != truth.cluster[g.dst]
    # 9 clusters x 40 users, each facing 8 x 40 foreign objects
    expected = 0.1 * 9 * 40 * 8 * 40
    assert abs(cross.sum() - expected) < 5 * np.sqrt(expected)


def test_planted_histograms_are_single_spikes():
    g, truth = generate(SynthSpec(seed=4))
    for digit, nodes in zip((1, 2, 3), truth.anomalous):
        arcs = g.induced_arcs(nodes)
        assert len(arcs) == 1600
        assert np.all(g.digit[arcs] == digit)


def test_background_passes_global_test():
    passed = 0
    for seed in range(40):
        g, truth = generate(SynthSpec(seed=seed))
        planted = np.zeros(g.n, dtype=bool)
        for s in truth.anomalous:
            planted[s] = True
        inside = (truth.cluster[g.src] == truth.cluster[g.dst]) & planted[g.src]
        counts = np.bincount(g.digit[~inside].astype(int) - 1, minlength=9)
        passed += chi_square_counts(counts).statistic < CHI2_8DF_99
    assert passed >= 38


def test_truth_matches_clusters():
    spec = SynthSpec(anomalous_sizes=(20, 51, 110), seed=2)
    g, truth = generate(spec)
    sizes = [len(s) for s in truth.anomalous]
    assert sizes == [20, 51, 110]
    allnodes = np.concatenate(truth.anomalous)
    assert len(np.unique(allnodes)) == len(allnodes)
    for cid, s in zip(range(6, 9), truth.anomalous):
        assert s.tolist() == np.flatnonzero(truth.cluster == cid).tolist()
    # odd sizes: 26 users, 25 objects
    keys = [g.keys[i] for i in truth.anomalous[1]]
    assert sum("u" in k for k in keys) == 26


def test_deterministic():
    a, _ = generate(SynthSpec(seed=7))
    b, _ = generate(SynthSpec(seed=7))
    c, _ = generate(SynthSpec(seed=8))
    assert np.array_equal(a.amount, b.amount) and np.array_equal(a.src, b.src)
    assert not (len(a.src) == len(c.src) and np.array_equal(a.amount, c.amount))


def test_amounts_are_digit_times_power_of_ten():
    g, _ = generate(SynthSpec(seed=1))
    mant = g.amount / 10.0 ** np.floor(np.log10(g.amount))
    np.testing.assert_allclose(mant, g.digit)
    assert g.amount.max() < 10 ** 5


@pytest.mark.parametrize(
    "kw",
    [dict(anomalous_sizes=(80, 80)), dict(planted_digits=(0, 1, 2)), dict(inter_cluster_p=1.5),
     dict(anomalous_sizes=(0, 80, 80)), dict(normal_cluster_count=0, anomalous_sizes=(), planted_digits=())],
)
def test_invalid_spec(kw):
    with pytest.raises(ValueError):
        generate(SynthSpec(**kw))


def test_truth_json(tmp_path):
    g, truth = generate(SynthSpec(normal_cluster_count=1, normal_cluster_size=4, anomalous_sizes=(4,), planted_digits=(5,)))
    path = tmp_path / "t.json"
    truth.to_json(path)
    data = load_truth(path)
    assert data["anomalous"] == [["c1u0", "c1u1", "c1o0", "c1o1"]]
    assert data["clusters"]["c0u0"] == 0 and len(data["clusters"]) == 8
    assert json.loads(path.read_text()) == data


def test_unrank_pairs_bijective():
    n = 23
    i, j = _unrank_pairs(np.arange(n * (n - 1) // 2), n)
    assert list(zip(i.tolist(), j.tolist())) == [(a, b) for a in range(n) for b in range(a + 1, n)]


def test_null_graph():
    g = generate_null(1000, 20, seed=0)
    assert g.num_transactions == 10_000
    _, undirected = g.distinct_edge_counts()
    assert undirected == 10_000
    assert g.n == 1000 and np.all(g.src != g.dst)


def test_null_digit_frequency():
    g = generate_null(2000, 100, seed=1)
    assert g.num_transactions == 100_000
    assert abs(np.mean(g.digit == 1) - 0.30103) < 0.01


def test_null_infeasible():
    with pytest.raises(ValueError):
        generate_null(10, 10)
    with pytest.raises(ValueError):
        generate_null(1, 1)
    g = generate_null(10, 50, allow_parallel=True)
    assert g.num_transactions == 250
    assert g.distinct_edge_counts()[1] <= 45
