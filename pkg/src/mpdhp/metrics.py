"""Clustering scores and interaction-network statistics."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PreconditionError
from .hawkes import EventHistory, RbfKernel
from .langmodel import VocabCounts

MIN_CLUSTER_DOCS = 10


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(labels_a, labels_b) -> float:
    """Normalised mutual information ``I(a; b) / sqrt(H(a) H(b))`` (natural logs).

    Two single-cluster partitions score 1.0; a single-cluster partition against
    any other scores 0.0.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise PreconditionError("label sequences must be 1-d and of equal length")
    if a.size == 0:
        raise PreconditionError("label sequences must not be empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1.0)
    ha = _entropy(table.sum(axis=1))
    hb = _entropy(table.sum(axis=0))
    if ha == 0 and hb == 0:
        warnings.warn("both partitions have a single cluster; NMI set to 1", RuntimeWarning)
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    n = a.size
    nz = table > 0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    # fsum is correctly rounded, so transposing the table gives the same value bit for bit
    mi = math.fsum((table[nz] / n * np.log(table[nz] * n / outer[nz])).tolist())
    return float(min(max(mi / math.sqrt(ha * hb), 0.0), 1.0))


def cluster_entropy(vocab: VocabCounts, vocab_size: int) -> float:
    """Shannon entropy of a cluster's word counts divided by ``ln V``."""
    if vocab.total < 1:
        raise PreconditionError("cluster has no words")
    if vocab_size < 2:
        return 0.0
    counts = np.array(list(vocab.counts.values()), dtype=float)
    return _entropy(counts) / math.log(vocab_size)


def effective_interaction(history: EventHistory, weights, kernel: RbfKernel, lambda0: float,
                          min_docs: int = MIN_CLUSTER_DOCS) -> np.ndarray:
    """Average excitation above ``lambda0`` that each cluster receives from each source.

    ``W[i, j, l]`` averages ``max(weights[i, j, l] * kappa_l(t_i - t_j) - lambda0, 0)``
    over the events ``t_i`` of cluster ``i``, summed over earlier events ``t_j`` of
    ``j`` within the kernel support. Rows of clusters with fewer than
    ``min_docs`` events, or none, are NaN.
    """
    weights = np.asarray(weights, dtype=float)
    K = weights.shape[0]
    if weights.ndim != 3 or weights.shape[1] != K or weights.shape[2] != kernel.size:
        raise ParameterError("weights must be (K, K, L) with L matching the kernel")
    if len(history) and history.clusters.max() >= K:
        raise ParameterError("history references clusters outside the weight tensor")
    W = np.zeros_like(weights)
    times, labels = history.times, history.clusters
    support = kernel.support
    for n in range(len(history)):
        lo = np.searchsorted(times, times[n] - support, side="left")
        src = np.arange(lo, n)
        src = src[times[src] < times[n]]
        if not src.size:
            continue
        i = labels[n]
        contrib = weights[i, labels[src]] * kernel(times[n] - times[src]) - lambda0
        np.add.at(W[i], labels[src], np.maximum(contrib, 0.0))
    sizes = np.bincount(labels, minlength=K) if len(history) else np.zeros(K, dtype=int)
    with np.errstate(invalid="ignore", divide="ignore"):
        W = W / sizes[:, None, None]
    W[sizes < max(min_docs, 1)] = np.nan
    return W


@dataclass
class InteractionNetwork:
    adjacency: np.ndarray
    effective: np.ndarray
    cluster_ids: list[int] = field(default_factory=list)
    sizes: list[int] = field(default_factory=list)
    top_tokens: list[list] = field(default_factory=list)

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=float)
        self.effective = np.asarray(self.effective, dtype=float)
        if self.adjacency.shape != self.effective.shape or self.adjacency.ndim != 3:
            raise ParameterError("adjacency and effective must share a (K, K, L) shape")
        if np.any(self.effective[np.isfinite(self.effective)] < 0):
            raise ParameterError("effective interactions must be nonnegative")
        if not self.cluster_ids:
            self.cluster_ids = list(range(self.adjacency.shape[0]))

    def edges(self) -> list[dict]:
        out = []
        K, _, L = self.adjacency.shape
        for i in range(K):
            for j in range(K):
                for l in range(L):
                    a = float(self.adjacency[i, j, l])
                    w = self.effective[i, j, l]
                    if a == 0 and not w > 0:
                        continue
                    out.append({"from": self.cluster_ids[j], "to": self.cluster_ids[i], "basis": l,
                                "weight": a, "effective": None if np.isnan(w) else float(w)})
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.edges(), fh, indent=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["from", "to", "basis", "weight", "effective"])
            writer.writeheader()
            for e in self.edges():
                writer.writerow({**e, "effective": "" if e["effective"] is None else e["effective"]})


def _nonzero_mean(x: np.ndarray) -> float:
    x = x[np.isfinite(x) & (x != 0)]
    return float(x.mean()) if x.size else 0.0


def interaction_summary(network: InteractionNetwork, kernel: RbfKernel | None = None) -> dict:
    """Aggregate statistics of an interaction network.

    Zero entries of ``A`` and ``W`` are left out of every mean: a zero means the
    two clusters never coexisted. When ``kernel`` is given, the per-basis range
    profile doubles the value of bases centred at lag 0, half of which would
    act on negative lags, and flags them.
    """
    A, W = network.adjacency, network.effective
    K = A.shape[0]
    valid = np.isfinite(W)
    diag = np.zeros_like(valid)
    diag[np.arange(K), np.arange(K)] = True
    Wz = np.where(valid, W, 0.0)
    intra = _nonzero_mean(np.where(diag & valid, W, 0.0))
    extra = _nonzero_mean(np.where(~diag & valid, W, 0.0))
    if extra == 0:
        ratio, saturated = math.inf, True
    else:
        ratio, saturated = intra / extra, False
    wsum = Wz.sum()
    profile = []
    for l in range(A.shape[2]):
        value = _nonzero_mean(Wz[:, :, l])
        doubled = bool(kernel is not None and kernel.means[l] == 0)
        profile.append({"basis": l, "mean": None if kernel is None else kernel.means[l],
                        "effective": 2 * value if doubled else value, "doubled": doubled})
    return {
        "mean_A": _nonzero_mean(A),
        "mean_W": _nonzero_mean(Wz),
        "mean_A_weighted_by_W": float((A * Wz).sum() / wsum) if wsum > 0 else 0.0,
        "intra_extra_ratio": ratio,
        "saturated": saturated,
        "mean_W_intra": intra,
        "mean_W_extra": extra,
        "range_profile": profile,
    }


def effective_histogram(W: np.ndarray, bins: int = 20) -> dict:
    """Histogram of the nonzero, defined effective-interaction entries."""
    x = np.asarray(W, dtype=float)
    x = x[np.isfinite(x) & (x > 0)]
    if not x.size:
        return {"counts": [], "edges": [], "median": 0.0, "mean": 0.0}
    counts, edges = np.histogram(x, bins=bins)
    return {"counts": counts.tolist(), "edges": edges.tolist(),
            "median": float(np.median(x)), "mean": float(x.mean())}
