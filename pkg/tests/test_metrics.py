import csv
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpdhp.errors import ParameterError, PreconditionError
from mpdhp.hawkes import SYNTHETIC_KERNEL, EventHistory, RbfKernel, simulate
from mpdhp.langmodel import VocabCounts
from mpdhp.metrics import (InteractionNetwork, cluster_entropy, effective_histogram, effective_interaction,
                           interaction_summary, nmi)

labels_st = st.lists(st.integers(0, 4), min_size=1, max_size=60)


def brute_nmi(a, b):
    n = len(a)
    pa = {x: a.count(x) / n for x in set(a)}
    pb = {y: b.count(y) / n for y in set(b)}
    mi = 0.0
    for x, y in itertools.product(pa, pb):
        pxy = sum(1 for u, v in zip(a, b) if u == x and v == y) / n
        if pxy:
            mi += pxy * math.log(pxy / (pa[x] * pb[y]))
    ha = -sum(p * math.log(p) for p in pa.values())
    hb = -sum(p * math.log(p) for p in pb.values())
    return mi / math.sqrt(ha * hb)


@pytest.mark.parametrize("a, b, expected", [
    ([0, 0, 1, 1], [0, 0, 1, 1], 1.0),
    ([0, 0, 0, 0], [0, 0, 1, 1], 0.0),
    ([0, 0, 1, 1], [0, 1, 0, 1], 0.0),
    ([0, 0, 1, 1], [1, 1, 0, 0], 1.0),
])
def test_nmi_examples(a, b, expected):
    assert nmi(a, b) == pytest.approx(expected, abs=1e-12)


def test_nmi_single_clusters_warn():
    with pytest.warns(RuntimeWarning):
        assert nmi([3, 3, 3], [1, 1, 1]) == 1.0


def test_nmi_errors():
    with pytest.raises(PreconditionError):
        nmi([0, 1], [0])
    with pytest.raises(PreconditionError):
        nmi([], [])


@given(labels_st, st.data())
def test_nmi_matches_brute_force(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    if len(set(a)) < 2 or len(set(b)) < 2:
        return
    assert nmi(a, b) == pytest.approx(brute_nmi(a, b), abs=1e-10)


@given(labels_st, st.data())
def test_nmi_symmetric_and_relabel_invariant(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    if len(set(a)) < 2 and len(set(b)) < 2:
        return
    assert nmi(a, b) == nmi(b, a)
    perm = data.draw(st.permutations(range(5)))
    relabelled = [perm[x] * 7 + 100 for x in a]
    assert nmi(relabelled, b) == pytest.approx(nmi(a, b), abs=1e-12)
    assert 0 <= nmi(a, b) <= 1


def test_entropy_examples():
    assert cluster_entropy(VocabCounts({4: 9}, 9), 1000) == 0.0
    assert cluster_entropy(VocabCounts({i: 2 for i in range(50)}, 100), 50) == pytest.approx(1.0)
    assert cluster_entropy(VocabCounts({0: 3, 1: 1}, 4), 2) == pytest.approx(0.8113, abs=1e-4)
    with pytest.raises(PreconditionError):
        cluster_entropy(VocabCounts(), 10)


def test_effective_interaction_example():
    w = np.zeros((2, 2, 3))
    w[1, 0, 0] = 1.0
    h = EventHistory([0.0, 3.0], [0, 1])
    W = effective_interaction(h, w, SYNTHETIC_KERNEL, 0.01, min_docs=1)
    assert W[1, 0, 0] == pytest.approx(0.79788 - 0.01, abs=1e-5)
    assert np.all(W[0] == 0)
    assert W.sum() == pytest.approx(W[1, 0, 0])


def test_effective_interaction_clamps_and_excludes():
    w = np.full((1, 1, 3), 0.001)
    h = EventHistory(np.arange(20.0), np.zeros(20, dtype=int))
    assert np.all(effective_interaction(h, w, SYNTHETIC_KERNEL, 0.01) == 0)
    assert np.all(np.isnan(effective_interaction(h, w, SYNTHETIC_KERNEL, 0.01, min_docs=30)))


def test_effective_interaction_shape_errors():
    with pytest.raises(ParameterError):
        effective_interaction(EventHistory([0.0], [0]), np.ones((1, 1, 2)), SYNTHETIC_KERNEL, 0.01)
    with pytest.raises(ParameterError):
        effective_interaction(EventHistory([0.0], [3]), np.ones((1, 1, 3)), SYNTHETIC_KERNEL, 0.01)


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.integers(0, 50))
def test_effective_interaction_monotone_in_clamp(l1, l2, seed):
    lo, hi = sorted((l1, l2))
    rng = np.random.default_rng(seed)
    times = np.sort(rng.uniform(0, 40, 25))
    h = EventHistory(times, rng.integers(0, 2, 25))
    w = rng.uniform(0, 1, (2, 2, 3))
    a = effective_interaction(h, w, SYNTHETIC_KERNEL, lo, min_docs=1)
    b = effective_interaction(h, w, SYNTHETIC_KERNEL, hi, min_docs=1)
    ok = np.isfinite(a)
    assert np.all(b[ok] <= a[ok] + 1e-15)


def test_effective_interaction_brute_force():
    rng = np.random.default_rng(3)
    k = RbfKernel((0.0, 4.0), (1.0, 1.0))
    times = np.sort(rng.uniform(0, 30, 40))
    labels = rng.integers(0, 3, 40)
    w = rng.uniform(0, 1, (3, 3, 2))
    got = effective_interaction(EventHistory(times, labels), w, k, 0.02, min_docs=1)
    expected = np.zeros_like(w)
    for n in range(40):
        for m in range(n):
            if times[m] < times[n]:
                dt = times[n] - times[m]
                for l in range(2):
                    val = w[labels[n], labels[m], l] * math.exp(-0.5 * (dt - k.means[l]) ** 2) / math.sqrt(2 * math.pi)
                    expected[labels[n], labels[m], l] += max(val - 0.02, 0.0)
    expected /= np.bincount(labels, minlength=3)[:, None, None]
    np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)


def test_summary_diagonal_weights_saturate():
    A = np.zeros((2, 2, 3))
    A[0, 0], A[1, 1] = [0.5, 0.2, 0.1], [0.3, 0.3, 0.3]
    W = A * 0.1
    s = interaction_summary(InteractionNetwork(A, W))
    assert s["saturated"] and s["intra_extra_ratio"] == math.inf
    assert s["mean_W_extra"] == 0.0


def test_summary_symmetric_weights_ratio_near_one():
    w = np.full((2, 2, 3), 0.45 / 3)
    h = simulate(w, SYNTHETIC_KERNEL, 0.2, 5000.0, seed=1)
    W = effective_interaction(h, w, SYNTHETIC_KERNEL, 0.01)
    s = interaction_summary(InteractionNetwork(w, W), SYNTHETIC_KERNEL)
    assert s["intra_extra_ratio"] == pytest.approx(1.0, abs=0.1)


def test_summary_statistics():
    A = np.array([[[0.2, 0.4], [0.0, 0.1]], [[0.3, 0.0], [0.5, 0.5]]])
    W = np.array([[[0.1, 0.0], [0.0, 0.05]], [[0.2, 0.0], [np.nan, np.nan]]])
    k = RbfKernel((0.0, 5.0), (1.0, 1.0))
    s = interaction_summary(InteractionNetwork(A, W), k)
    assert s["mean_A"] == pytest.approx(np.mean([0.2, 0.4, 0.1, 0.3, 0.5, 0.5]))
    assert s["mean_W"] == pytest.approx(np.mean([0.1, 0.05, 0.2]))
    assert s["mean_A_weighted_by_W"] == pytest.approx((0.2 * 0.1 + 0.1 * 0.05 + 0.3 * 0.2) / 0.35)
    assert s["intra_extra_ratio"] == pytest.approx(0.1 / np.mean([0.05, 0.2]))
    prof = s["range_profile"]
    assert prof[0]["doubled"] and prof[0]["effective"] == pytest.approx(2 * np.mean([0.1, 0.2]))
    assert not prof[1]["doubled"] and prof[1]["effective"] == pytest.approx(0.05)


def test_network_validation():
    with pytest.raises(ParameterError):
        InteractionNetwork(np.zeros((2, 2, 3)), np.zeros((2, 2, 2)))
    with pytest.raises(ParameterError):
        InteractionNetwork(np.zeros((1, 1, 1)), -np.ones((1, 1, 1)))


def test_network_exports(tmp_path):
    A = np.zeros((2, 2, 1))
    A[1, 0, 0] = 0.4
    W = np.zeros((2, 2, 1))
    W[1, 0, 0] = 0.25
    net = InteractionNetwork(A, W, cluster_ids=[7, 9])
    net.to_json(tmp_path / "n.json")
    net.to_csv(tmp_path / "n.csv")
    edges = json.loads((tmp_path / "n.json").read_text())
    assert edges == [{"from": 7, "to": 9, "basis": 0, "weight": 0.4, "effective": 0.25}]
    rows = list(csv.DictReader(open(tmp_path / "n.csv")))
    assert rows == [{"from": "7", "to": "9", "basis": "0", "weight": "0.4", "effective": "0.25"}]


def test_histogram_mass_near_zero():
    x = np.random.default_rng(0).exponential(0.01, 500)
    h = effective_histogram(x.reshape(5, 10, 10))
    assert sum(h["counts"]) == 500
    assert h["median"] < h["mean"]
    assert effective_histogram(np.zeros(3))["counts"] == []
