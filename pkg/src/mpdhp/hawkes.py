"""Multivariate Hawkes processes on a Gaussian RBF basis.

The intensity of cluster ``c`` is

    lambda_c(t) = sum_{t_i < t} sum_l weights[c, c_i, l] * kappa_l(t - t_i)

with ``kappa_l`` a normalised Gaussian of mean ``means[l]`` and deviation
``sigmas[l]``.  ``weights`` is a ``(K, K, L)`` array whose entry ``(c, c', l)``
is the influence of cluster ``c'`` on cluster ``c`` through basis ``l``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import (DegenerateLikelihoodError, DomainError, ParameterError,
                     PreconditionError, StabilityError)

# kernel values below this are treated as exactly zero
KERNEL_FLOOR = 1e-15
_SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class RbfKernel:
    means: tuple
    sigmas: tuple

    def __post_init__(self):
        means = tuple(float(m) for m in np.atleast_1d(self.means))
        sigmas = tuple(float(s) for s in np.atleast_1d(self.sigmas))
        if len(means) != len(sigmas) or not means:
            raise ParameterError("kernel means and sigmas must be non-empty and of equal length")
        if min(sigmas) <= 0:
            raise ParameterError("kernel sigmas must be > 0")
        if min(means) < 0 or any(b < a for a, b in zip(means, means[1:])):
            raise ParameterError("kernel means must be nonnegative and nondecreasing")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "_mu", np.array(means))
        object.__setattr__(self, "_sd", np.array(sigmas))

    @property
    def size(self) -> int:
        return len(self.means)

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def sd(self) -> np.ndarray:
        return self._sd

    @property
    def peaks(self) -> np.ndarray:
        """Maximum value of each basis function."""
        return 1.0 / (self._sd * _SQRT_2PI)

    @property
    def support(self) -> float:
        """Lag beyond which every basis function is negligible."""
        return max(self.means) + 5 * max(self.sigmas)

    @property
    def masses(self) -> np.ndarray:
        """Integral of each basis function over positive lags."""
        return ndtr(self._mu / self._sd)

    def __call__(self, dt) -> np.ndarray:
        """Evaluate every basis at lag(s) ``dt``; output shape ``dt.shape + (L,)``."""
        dt = np.asarray(dt, dtype=float)[..., None]
        z = (dt - self._mu) / self._sd
        out = np.exp(-0.5 * z * z) / (self._sd * _SQRT_2PI)
        out[out < KERNEL_FLOOR] = 0.0
        return out

    def cdf(self, dt) -> np.ndarray:
        """Integral of each basis from lag 0 to lag ``dt`` (zero for dt <= 0)."""
        dt = np.maximum(np.asarray(dt, dtype=float), 0.0)[..., None]
        return ndtr((dt - self._mu) / self._sd) - ndtr(-self._mu / self._sd)

    def to_dict(self) -> dict:
        return {"means": list(self.means), "sigmas": list(self.sigmas)}


# three well-separated equal-width bumps, used for every synthetic benchmark
SYNTHETIC_KERNEL = RbfKernel((3.0, 7.0, 11.0), (0.5, 0.5, 0.5))


def kernel_eval(kernel: RbfKernel, dt: float) -> np.ndarray:
    if dt < 0:
        raise DomainError(f"negative lag {dt}")
    return kernel(dt)


@dataclass
class EventHistory:
    """Time-ordered events, each tagged with the cluster it belongs to."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    clusters: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.clusters = np.asarray(self.clusters, dtype=int)
        if self.times.shape != self.clusters.shape or self.times.ndim != 1:
            raise PreconditionError("times and clusters must be 1-d and of equal length")
        if np.any(np.diff(self.times) < 0):
            raise PreconditionError("event times must be nondecreasing")
        if self.times.size and self.times[0] < 0:
            raise PreconditionError("event times must be nonnegative")

    def __len__(self):
        return len(self.times)

    @property
    def n_clusters(self) -> int:
        return int(self.clusters.max()) + 1 if len(self) else 0

    def before(self, t: float) -> "EventHistory":
        k = np.searchsorted(self.times, t, side="left")
        return EventHistory(self.times[:k], self.clusters[:k])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for t, c in zip(self.times, self.clusters):
                fh.write(json.dumps({"t": float(t), "cluster": int(c)}) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "EventHistory":
        times, clusters = [], []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                rec = json.loads(line)
                times.append(rec["t"])
                clusters.append(rec["cluster"])
        return cls(np.array(times), np.array(clusters, dtype=int))


def _check_weights(weights, kernel: RbfKernel, n_clusters: int | None = None) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 3 or weights.shape[0] != weights.shape[1] or weights.shape[2] != kernel.size:
        raise ParameterError(f"weights must have shape (K, K, {kernel.size}), got {weights.shape}")
    if n_clusters is not None and weights.shape[0] < n_clusters:
        raise ParameterError("weights do not cover every cluster in the history")
    return weights


def spectral_radius(weights) -> float:
    """Spectral radius of the basis-summed branching matrix."""
    m = np.asarray(weights, dtype=float).sum(axis=2)
    return float(np.max(np.abs(np.linalg.eigvals(m)))) if m.size else 0.0


def intensity(target_cluster: int, t: float, history: EventHistory, weights,
              kernel: RbfKernel) -> float:
    """Triggered intensity of ``target_cluster`` at time ``t`` given past events."""
    weights = _check_weights(weights, kernel, history.n_clusters)
    if len(history) and history.times[-1] >= t:
        raise PreconditionError("all history events must precede t")
    if not len(history):
        return 0.0
    phi = kernel(t - history.times)                       # (n, L)
    contrib = np.einsum("nl,nl->n", weights[target_cluster, history.clusters], phi)
    return float(math.fsum(contrib))


def compensator(history: EventHistory, weights, kernel: RbfKernel, horizon: float,
                baseline: float = 0.0) -> np.ndarray:
    """Integral of each cluster's intensity over ``[0, horizon]``; shape ``(K,)``."""
    weights = _check_weights(weights, kernel, history.n_clusters)
    K = weights.shape[0]
    if not len(history):
        return np.full(K, baseline * horizon)
    mass = kernel.cdf(horizon - history.times)            # (n, L)
    per_event = np.einsum("cnl,nl->cn", weights[:, history.clusters], mass)
    return np.array([math.fsum(row) for row in per_event]) + baseline * horizon


def log_likelihood(history: EventHistory, weights, kernel: RbfKernel, horizon: float,
                   baseline: float = 0.0, exclude_immigrants: bool = False) -> float:
    """Exact log-likelihood of a multivariate history on ``[0, horizon]``.

    ``baseline`` is an optional constant intensity added to every cluster. An
    event with zero intensity (the first event of a history when ``baseline``
    is 0) raises ``DegenerateLikelihoodError``, unless ``exclude_immigrants``
    is set: such events are then treated as immigrants and contribute no
    log-intensity term, which is how the inference engine scores them.
    """
    weights = _check_weights(weights, kernel, history.n_clusters)
    if len(history) and (history.times[-1] > horizon or history.times[0] < 0):
        raise PreconditionError("events must lie in [0, horizon]")
    terms = []
    support = kernel.support
    times, clusters = history.times, history.clusters
    for i in range(len(history)):
        lo = np.searchsorted(times, times[i] - support, side="left")
        hi = np.searchsorted(times, times[i], side="left")
        lam = baseline
        if hi > lo:
            phi = kernel(times[i] - times[lo:hi])
            lam += float(np.einsum("nl,nl->", weights[clusters[i], clusters[lo:hi]], phi))
        if lam <= 0:
            if exclude_immigrants:
                continue
            raise DegenerateLikelihoodError(f"zero intensity at event {i} (t={times[i]})")
        terms.append(math.log(lam))
    comp = compensator(history, weights, kernel, horizon, baseline)
    return math.fsum(terms) - math.fsum(comp)


def simulate(weights, kernel: RbfKernel, background_rate: float, horizon: float,
             seed: int = 0, max_events: int | None = None) -> EventHistory:
    """Ogata thinning.

    Every cluster receives immigrants at rate ``background_rate``, so ``K``
    clusters with zero weights produce a Poisson stream of rate
    ``K * background_rate``. Simulation stops at ``horizon`` or after
    ``max_events`` events.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 3 or weights.shape[0] != weights.shape[1] or weights.shape[2] != kernel.size:
        raise ParameterError(f"weights must have shape (K, K, {kernel.size})")
    if np.any(weights < 0):
        raise ParameterError("weights must be nonnegative")
    if background_rate < 0:
        raise ParameterError("background_rate must be >= 0")
    rho = spectral_radius(weights)
    if rho > 1 + 1e-9:
        raise StabilityError(f"spectral radius {rho:.6g} exceeds 1")
    K = weights.shape[0]
    rng = np.random.default_rng(seed)
    limit = np.inf if max_events is None else max_events
    base = background_rate
    total_base = K * background_rate
    # total outgoing weight of a source cluster per basis, summed over targets
    out_w = weights.sum(axis=0)                           # (K, L)
    peaks = kernel.peaks
    mu, sd = kernel.mu, kernel.sd
    support = kernel.support

    cap = 1024
    times = np.empty(cap)
    labels = np.empty(cap, dtype=int)
    n = 0
    start = 0
    t = 0.0
    while n < limit:
        while start < n and t - times[start] > support:
            start += 1
        wt = times[start:n]
        wc = labels[start:n]
        if n > start:
            lag = t - wt
            # per-event future maximum of each basis: the peak if not yet reached
            z = (lag[:, None] - mu) / sd
            future_max = np.where(lag[:, None] <= mu, peaks, peaks * np.exp(-0.5 * z * z))
            bound = total_base + float(np.sum(out_w[wc] * future_max))
        else:
            bound = total_base
        if bound <= 0:
            break
        t = t + rng.exponential(1.0 / bound)
        if t > horizon:
            break
        if n > start:
            lam = base + np.einsum("cnl,nl->c", weights[:, wc], kernel(t - wt))
        else:
            lam = np.full(K, base)
        u = rng.random() * bound
        if u < lam.sum():
            if n == cap:
                times = np.concatenate([times, np.empty(cap)])
                labels = np.concatenate([labels, np.empty(cap, dtype=int)])
                cap *= 2
            times[n] = t
            labels[n] = min(int(np.searchsorted(np.cumsum(lam), u, side="right")), K - 1)
            n += 1
    return EventHistory(times[:n].copy(), labels[:n].copy())
