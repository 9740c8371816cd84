"""Synthetic streams with controlled textual and temporal overlap.

The overlap of functions ``f_1..f_N`` is

    sum_i int min(f_i, max_{j != i} f_j) / sum_i int f_i

which is 0 for disjoint supports and 1 for identical functions. Textual
overlap is measured between the clusters' word distributions; temporal overlap
is measured, for each target cluster, between the triggering functions
``alpha[c, c'] . kappa(t)`` of its source clusters ``c'``; for univariate
streams it is measured between the self-triggering functions ``alpha[c, c] . kappa(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FeasibilityError, ParameterError
from .hawkes import SYNTHETIC_KERNEL, RbfKernel, simulate, spectral_radius
from .langmodel import Document

GRID_POINTS = 10_000
REJECTION_BUDGET = 10_000


@dataclass(frozen=True)
class SynthSpec:
    n_clusters: int = 2
    vocab_size: int = 1000
    words_per_doc: int = 20
    textual_overlap: float = 0.0
    temporal_overlap: float = 0.0
    kernel: RbfKernel = SYNTHETIC_KERNEL
    background_rate: float = 0.05
    n_events: int | None = 5000
    horizon: float | None = None
    seed: int = 0
    univariate: bool = False
    # width of each word distribution's support; defaults to min(100, vocab_size // n_clusters)
    vocab_support: int | None = None
    tolerance: float = 0.05
    # branching ratio of the generated process; 1 is the near-unstable default
    spectral_radius: float = 1.0

    def __post_init__(self):
        if self.n_clusters < 1 or self.vocab_size < 1 or self.words_per_doc < 1:
            raise ParameterError("n_clusters, vocab_size and words_per_doc must be >= 1")
        for name in ("textual_overlap", "temporal_overlap"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if not self.background_rate > 0:
            raise ParameterError("background_rate must be > 0")
        if self.n_events is None and self.horizon is None:
            raise ParameterError("give n_events, horizon or both")
        if self.n_events is not None and self.n_events < 1:
            raise ParameterError("n_events must be >= 1")
        if not 0 < self.spectral_radius <= 1:
            raise ParameterError("spectral_radius must lie in (0, 1]")
        if self.vocab_support is not None and not 1 <= self.vocab_support <= self.vocab_size:
            raise ParameterError("vocab_support must lie in [1, vocab_size]")

    @property
    def support_width(self) -> int:
        return self.vocab_support or max(1, min(100, self.vocab_size // self.n_clusters))


def overlap(functions, grid) -> float:
    """Overlap of sampled functions, trapezoid rule on ``grid``.

    ``functions`` is an ``(N, len(grid))`` array of nonnegative values.

    >>> x = np.arange(200.0)
    >>> f = np.stack([(x >= 0) & (x < 100), (x >= 50) & (x < 150)]).astype(float)
    >>> round(overlap(f, x), 2)
    0.5
    """
    f = np.asarray(functions, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if f.ndim != 2 or f.shape[1] != grid.size:
        raise ParameterError("functions must be (N, len(grid))")
    if np.any(f < 0):
        raise DomainError("functions must be nonnegative")
    total = np.trapezoid(f, grid, axis=1).sum()
    if not total > 0:
        raise DomainError("functions have zero total mass")
    if f.shape[0] < 2:
        return 0.0
    # largest competitor of each function: the top value, or the runner-up where f_i is on top
    order = np.sort(f, axis=0)
    first, second = order[-1], order[-2]
    competitor = np.where(f >= first, second, first)
    return float(np.trapezoid(np.minimum(f, competitor), grid, axis=1).sum() / total)


def vocab_overlap(dists) -> float:
    """Overlap of discrete distributions over token ids (sum over tokens)."""
    d = np.asarray(dists, dtype=float)
    if d.shape[0] < 2:
        return 0.0
    order = np.sort(d, axis=0)
    first, second = order[-1], order[-2]
    competitor = np.where(d >= first, second, first)
    return float(np.minimum(d, competitor).sum() / d.sum())


def make_vocab_distributions(spec: SynthSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-cluster word distributions, ``(n_clusters, vocab_size)``.

    Cluster ``i`` is uniform over ``support_width`` consecutive tokens starting
    at ``offset + i * d``. Two neighbours then overlap by exactly ``1 - d / w``,
    so ``d`` is the shift closest to the target; the offset is random.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    K, V, w = spec.n_clusters, spec.vocab_size, spec.support_width
    d = int(round((1.0 - spec.textual_overlap) * w)) if K > 1 else 0
    span = (K - 1) * d + w
    if span > V:
        raise FeasibilityError(f"{K} supports of width {w} shifted by {d} do not fit in {V} tokens")
    offset = int(rng.integers(0, V - span + 1))
    dists = np.zeros((K, V))
    for i in range(K):
        dists[i, offset + i * d:offset + i * d + w] = 1.0 / w
    if K > 1 and abs(vocab_overlap(dists) - spec.textual_overlap) > spec.tolerance:
        raise FeasibilityError(f"could not reach textual overlap {spec.textual_overlap}")
    return dists


def triggering_overlap(row: np.ndarray, kernel: RbfKernel, grid: np.ndarray | None = None) -> float:
    """Overlap of the triggering functions ``row[c'] . kappa(t)`` of one target cluster."""
    if grid is None:
        grid = np.linspace(0.0, kernel.support, GRID_POINTS)
    funcs = np.asarray(row) @ kernel(grid).T
    return overlap(funcs, grid)


def temporal_overlaps(weights: np.ndarray, kernel: RbfKernel) -> np.ndarray:
    grid = np.linspace(0.0, kernel.support, GRID_POINTS)
    return np.array([triggering_overlap(w, kernel, grid) for w in weights])


def _split_row(rng, K, L, target, tol) -> np.ndarray:
    mag = rng.uniform(0.05, 1.0, L)
    if target <= tol:
        split = np.zeros((K, L))
        split[rng.integers(0, K, L), np.arange(L)] = 1.0
    elif target >= 1 - tol:
        split = np.full((K, L), 1.0 / K)
    else:
        gamma = np.exp(rng.uniform(np.log(0.05), np.log(20.0)))
        split = rng.dirichlet(np.full(K, gamma), size=L).T
    return split * mag


def make_weights(spec: SynthSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Random ``(K, K, L)`` weights at ``spec.spectral_radius`` with the requested overlap.

    For each target cluster and basis, a random magnitude is split across the
    source clusters: one source takes everything for target 0, the split is
    even for target 1, and a Dirichlet draw of random concentration is used in
    between. Each target's row is redrawn until its triggering-function overlap
    is within tolerance. Univariate weights are diagonal; the same split is
    then made across the clusters' self-triggering functions, so overlap 0
    gives every basis to a single cluster, and each cluster is scaled to
    branch at ``spec.spectral_radius``.
    """
    rng = np.random.default_rng(spec.seed + 1) if rng is None else rng
    K, L = spec.n_clusters, spec.kernel.size
    target, tol = spec.temporal_overlap, spec.tolerance
    if K == 1:
        w = rng.uniform(0.05, 1.0, (1, 1, L))
        return w * (spec.spectral_radius / spectral_radius(w))
    grid = np.linspace(0.0, spec.kernel.support, GRID_POINTS)
    basis = spec.kernel(grid).T                                  # (L, G)
    w = np.zeros((K, K, L))
    draws = 0
    # univariate: a single draw split across the clusters' self-excitations
    for c in range(1 if spec.univariate else K):
        while True:
            draws += 1
            if draws > REJECTION_BUDGET:
                raise FeasibilityError(f"temporal overlap {target} not reached in {REJECTION_BUDGET} draws")
            row = _split_row(rng, K, L, target, tol)
            if spec.univariate:
                # every cluster branches at the same ratio
                mass = row @ spec.kernel.masses
                if np.any(mass == 0):
                    continue
                row = row * (spec.spectral_radius / mass)[:, None]
            if abs(overlap(row @ basis, grid) - target) <= tol:
                if spec.univariate:
                    w[np.arange(K), np.arange(K)] = row
                else:
                    w[c] = row
                break
    rho = spectral_radius(w)
    if rho <= 1e-12:
        raise FeasibilityError("drawn weights have zero spectral radius")
    return w * (spec.spectral_radius / rho)


@dataclass
class SynthDataset:
    documents: list[Document]
    temporal_labels: np.ndarray
    textual_labels: np.ndarray
    weights: np.ndarray
    vocab_distributions: np.ndarray
    spec: SynthSpec
    measured: dict = field(default_factory=dict)

    @property
    def labels(self) -> np.ndarray:
        return self.temporal_labels


def _draw_documents(times, labels, dists, words_per_doc, rng) -> list[Document]:
    docs: list[Document | None] = [None] * len(times)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        counts = rng.multinomial(words_per_doc, dists[c], size=idx.size)
        for i, row in zip(idx, counts):
            nz = np.flatnonzero(row)
            docs[i] = Document(times[i], dict(zip(nz.tolist(), row[nz].tolist())))
    return docs


def strictly_increasing(times: np.ndarray, step: float = 1e-9) -> np.ndarray:
    """Break ties by nudging the r-th repeated time by ``r * step``."""
    t = np.array(times, dtype=float)
    for i in range(1, t.size):
        if t[i] <= t[i - 1]:
            t[i] = t[i - 1] + step
    return t


def _measured_temporal(weights, spec):
    if spec.n_clusters == 1:
        return None
    if spec.univariate:
        K = spec.n_clusters
        return triggering_overlap(weights[np.arange(K), np.arange(K)], spec.kernel)
    return temporal_overlaps(weights, spec.kernel).tolist()


def generate(spec: SynthSpec) -> SynthDataset:
    """Simulate a labelled document stream from ``spec``."""
    rng = np.random.default_rng(spec.seed)
    dists = make_vocab_distributions(spec, rng)
    weights = make_weights(spec, rng)
    horizon = np.inf if spec.horizon is None else spec.horizon
    hist = simulate(weights, spec.kernel, spec.background_rate, horizon,
                    seed=int(rng.integers(2**32)), max_events=spec.n_events)
    times = strictly_increasing(hist.times)
    labels = hist.clusters.copy()
    docs = _draw_documents(times, labels, dists, spec.words_per_doc, rng)
    measured = {
        "textual_overlap": vocab_overlap(dists) if spec.n_clusters > 1 else None,
        "temporal_overlap": _measured_temporal(weights, spec),
        "spectral_radius": spectral_radius(weights),
        "n_events": len(docs),
    }
    return SynthDataset(docs, labels, labels.copy(), weights, dists, spec, measured)


def decorrelate_labels(documents, true_clusters, fraction: float, seed: int,
                       distributions: np.ndarray):
    """Resample the textual cluster of a random ``fraction`` of the documents.

    The chosen documents get a textual label drawn uniformly over all clusters
    and fresh tokens (same length) from that cluster's distribution. Timestamps
    and temporal labels are unchanged.

    Returns ``(documents, textual_labels, temporal_labels)``.
    """
    if not 0 <= fraction <= 1:
        raise ParameterError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    temporal = np.asarray(true_clusters, dtype=int)
    textual = temporal.copy()
    n = len(documents)
    picked = np.flatnonzero(rng.random(n) < fraction)
    K = distributions.shape[0]
    textual[picked] = rng.integers(0, K, picked.size)
    out = list(documents)
    for i in picked:
        row = rng.multinomial(documents[i].n_tokens, distributions[textual[i]])
        nz = np.flatnonzero(row)
        out[i] = Document(documents[i].time, dict(zip(nz.tolist(), row[nz].tolist())))
    return out, textual, temporal.copy()
