"""Sequential Monte Carlo inference for the multivariate powered Dirichlet-Hawkes process.

Each particle holds one hypothesis for the cluster of every document seen so
far. For a new document at time ``t`` a particle

1. integrates every active cluster's intensity from the previous document to
   ``t`` for each of its sample matrices (compensator term),
2. forms the temporal prior ``lambda_c(t)**r / (lambda0 + sum lambda**r)``
   from its current kernel-weight estimates,
3. multiplies it by the Dirichlet-Multinomial text likelihood and samples a
   cluster from the normalised posterior,
4. adds ``log lambda_c(t)`` of the chosen cluster to each sample's score.

Kernel weights are never optimised directly. Every particle carries
``n_samples`` candidate tensors drawn from independent Beta(beta0, beta0)
priors; the estimate for cluster ``c`` is their average weighted by the
posterior ``exp(loglik_s) * prior_s``. Candidate tables only span the active
clusters, so the work per document does not depend on how many clusters were
archived before.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betaln, logsumexp

from .errors import DegenerateStreamError, ParameterError, PreconditionError, StreamOrderError
from .hawkes import SYNTHETIC_KERNEL, RbfKernel
from .langmodel import Document, TextPrior, VocabCounts, absorb, doc_log_likelihood_many

# floor for a sample's intensity at an event when another sample sees a positive one
_TINY = 1e-300


@dataclass(frozen=True)
class MpdhpConfig:
    """Hyper-parameters of the inference engine.

    ``omega_thres`` defaults to ``1 / (2 * n_particles)`` and ``prune_age`` to the
    kernel support ``max(means) + 5 * max(sigmas)``. At ``r = 0`` the prior ignores
    intensities, so dormant clusters stay eligible and ``prune_age`` defaults to
    infinity.
    """

    kernel: RbfKernel = SYNTHETIC_KERNEL
    text_prior: TextPrior = field(default_factory=TextPrior)
    r: float = 1.0
    lambda0: float = 0.01
    n_particles: int = 8
    n_samples: int = 2000
    beta0: float = 2.0
    omega_thres: float | None = None
    prune_age: float | None = None
    univariate: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.omega_thres is None and self.n_particles >= 1:
            object.__setattr__(self, "omega_thres", 1.0 / (2 * self.n_particles))
        if self.prune_age is None:
            object.__setattr__(self, "prune_age", self.kernel.support if self.r > 0 else math.inf)
        self.validate()

    def validate(self) -> None:
        if not (np.isfinite(self.r) and self.r >= 0):
            raise ParameterError("r must be >= 0")
        if not self.lambda0 > 0:
            raise ParameterError("lambda0 must be > 0")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ParameterError("n_particles must be a positive integer")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ParameterError("n_samples must be a positive integer")
        if not self.beta0 > 0:
            raise ParameterError("beta0 must be > 0")
        if self.omega_thres is None or not 0 < self.omega_thres < 1.0 / self.n_particles:
            raise ParameterError("omega_thres must lie in (0, 1/n_particles)")
        k = self.kernel
        if self.prune_age < max(k.means) + 3 * max(k.sigmas):
            raise ParameterError("prune_age must be >= max(means) + 3 * max(sigmas)")
        # a single event at full weight must be able to beat the new-cluster mass
        if np.any(k.peaks <= self.lambda0):
            raise ParameterError(
                f"lambda0={self.lambda0} is not below every basis peak {k.peaks.round(6).tolist()}; "
                "use narrower or equal-width Gaussians, or a smaller lambda0")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kernel"] = self.kernel.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MpdhpConfig":
        d = dict(d)
        if isinstance(d.get("kernel"), dict):
            d["kernel"] = RbfKernel(tuple(d["kernel"]["means"]), tuple(d["kernel"]["sigmas"]))
        if isinstance(d.get("text_prior"), dict):
            d["text_prior"] = TextPrior(**d["text_prior"])
        return cls(**d)


@dataclass
class ClusterState:
    """Bookkeeping for one cluster of one particle.

    The per-sample Hawkes log-likelihoods of active clusters live in the owning
    particle's tables so that they can be updated with array operations.
    ``weight_row`` maps a source cluster id to its frozen influence on this
    cluster; it is filled when either side is archived.
    """

    cluster_id: int
    vocab: VocabCounts = field(default_factory=VocabCounts)
    event_times: list[float] = field(default_factory=list)
    last_event_time: float = 0.0
    active: bool = True
    weight_row: dict[int, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "ClusterState":
        return ClusterState(self.cluster_id, self.vocab.copy(), list(self.event_times),
                            self.last_event_time, self.active, dict(self.weight_row))


@dataclass
class PosteriorBreakdown:
    cluster_ids: list[int]          # active ids, then the id a new cluster would get
    temporal_prior: np.ndarray
    text_log_lik: np.ndarray
    posterior: np.ndarray
    log_evidence: float


def beta_logpdf(x: np.ndarray, beta0: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return (beta0 - 1.0) * (np.log(x) + np.log1p(-x)) - betaln(beta0, beta0)


def extend_samples_for_new_cluster(samples: np.ndarray, config: MpdhpConfig,
                                   rng: np.random.Generator) -> np.ndarray:
    """Append a row and a column of fresh Beta draws to every sample tensor.

    ``samples`` has shape ``(S, K, K, L)``; the result has ``(S, K+1, K+1, L)``
    with the old block untouched. In univariate mode the new off-diagonal
    entries are zero.
    """
    S, K, _, L = samples.shape
    out = np.empty((S, K + 1, K + 1, L))
    out[:, :K, :K] = samples
    fresh = rng.beta(config.beta0, config.beta0, size=(S, 2 * K + 1, L))
    out[:, K, :] = fresh[:, :K + 1]
    out[:, :K, K] = fresh[:, K + 1:]
    if config.univariate:
        out[:, K, :K] = 0.0
        out[:, :K, K] = 0.0
    return out


def sample_weight_row(log_liks: np.ndarray, samples_row: np.ndarray,
                      log_prior: np.ndarray) -> np.ndarray:
    """Posterior-weighted average of the candidate rows of one cluster.

    ``log_liks`` and ``log_prior`` have shape ``(S,)``; ``samples_row`` has
    shape ``(S, K, L)``. When no sample has a finite score, the plain sample
    average (the prior mean) is returned.
    """
    score = log_liks + log_prior
    top = np.max(score)
    if not np.isfinite(top):
        return samples_row.mean(axis=0)
    w = np.exp(score - top)
    w /= w.sum()
    return np.tensordot(w, samples_row, axes=1)


def _softmax_rows(score: np.ndarray) -> np.ndarray:
    top = score.max(axis=1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    w = np.exp(score - top)
    total = w.sum(axis=1, keepdims=True)
    bad = total[:, 0] <= 0
    if np.any(bad):
        w[bad] = 1.0
        total[bad] = w.shape[1]
    return w / total


class Particle:
    """One cluster-allocation hypothesis with its candidate weight tables."""

    def __init__(self, config: MpdhpConfig):
        self.config = config
        L = config.kernel.size
        S = config.n_samples
        self.clusters: dict[int, ClusterState] = {}
        self.active: list[int] = []
        self.assignments: list[int] = []
        self.log_weight = -math.log(config.n_particles)
        self.next_id = 0
        self.samples = np.empty((S, 0, 0, L))
        self.prior_tab = np.empty((S, 0, 0))     # log Beta density, summed over L
        self.log_prior = np.empty((S, 0))        # per-sample prior of each active row
        self.log_liks = np.empty((0, S))
        self.win_t = np.empty(0)                 # recent events: time ...
        self.win_k = np.empty(0, dtype=int)      # ... and active-table index
        self.t_prev = 0.0
        self._t_cached = None
        self._V = np.empty((S, 0))

    # -- state management -------------------------------------------------

    def copy(self) -> "Particle":
        new = Particle.__new__(Particle)
        new.config = self.config
        # archived clusters are immutable and can be shared between copies
        new.clusters = {cid: (c.copy() if c.active else c) for cid, c in self.clusters.items()}
        new.active = list(self.active)
        new.assignments = list(self.assignments)
        new.log_weight = self.log_weight
        new.next_id = self.next_id
        for name in ("samples", "prior_tab", "log_prior", "log_liks", "win_t", "win_k", "_V"):
            setattr(new, name, getattr(self, name).copy())
        new.t_prev = self.t_prev
        new._t_cached = self._t_cached
        return new

    @property
    def n_active(self) -> int:
        return len(self.active)

    def advance(self, t: float) -> None:
        """Move the particle clock to ``t``.

        Subtracts the compensator increment on ``(t_prev, t]`` from every sample
        score, prunes stale clusters and caches each sample's intensity at ``t``.
        """
        if t < self.t_prev:
            raise StreamOrderError(f"time {t} precedes previous document at {self.t_prev}")
        if self._t_cached == t:
            return
        kernel = self.config.kernel
        K = self.n_active
        if K and self.win_t.size and t > self.t_prev:
            dmass = kernel.cdf(t - self.win_t) - kernel.cdf(self.t_prev - self.win_t)
            dG = np.zeros((K, kernel.size))
            np.add.at(dG, self.win_k, dmass)
            self.log_liks -= self._sample_intensity(dG).T
        self.t_prev = t
        prune_inactive(self, t, self.config)
        keep = t - self.win_t <= kernel.support
        if not np.all(keep):
            self.win_t = self.win_t[keep]
            self.win_k = self.win_k[keep]
        self._G = np.zeros((self.n_active, kernel.size))
        if self.win_t.size:
            np.add.at(self._G, self.win_k, kernel(t - self.win_t))
        self._V = self._sample_intensity(self._G)
        self._t_cached = t

    def _sample_intensity(self, G: np.ndarray) -> np.ndarray:
        """``(S, K)`` intensity of each active cluster under each sample tensor."""
        S, K, _, L = self.samples.shape
        if K == 0:
            return np.empty((S, 0))
        return (self.samples.reshape(S * K, K * L) @ G.ravel()).reshape(S, K)

    def sample_weights(self) -> np.ndarray:
        """``(K, S)`` normalised posterior weights of the candidate tensors."""
        return _softmax_rows(self.log_liks + self.log_prior.T)

    def intensities(self) -> np.ndarray:
        """Estimated intensity of each active cluster at the current clock time."""
        if not self.n_active:
            return np.empty(0)
        return np.einsum("ks,sk->k", self.sample_weights(), self._V)

    def weight_estimates(self) -> np.ndarray:
        """``(K, K, L)`` current kernel-weight estimate among active clusters."""
        w = self.sample_weights()
        return np.einsum("ks,skjl->kjl", w, self.samples)

    def _open_cluster(self, rng: np.random.Generator) -> int:
        cfg = self.config
        cid = self.next_id
        self.next_id += 1
        K = self.n_active
        self.samples = extend_samples_for_new_cluster(self.samples, cfg, rng)
        lp = beta_logpdf(self.samples[:, K], cfg.beta0).sum(axis=-1)         # (S, K+1)
        lq = beta_logpdf(self.samples[:, :K, K], cfg.beta0).sum(axis=-1)     # (S, K)
        if cfg.univariate:
            lp[:, :K] = 0.0
            lq[:] = 0.0
        S = cfg.n_samples
        tab = np.empty((S, K + 1, K + 1))
        tab[:, :K, :K] = self.prior_tab
        tab[:, K, :] = lp
        tab[:, :K, K] = lq
        self.prior_tab = tab
        self.log_prior = tab.sum(axis=2)
        self.log_liks = np.vstack([self.log_liks, np.zeros((1, S))])
        self._V = np.hstack([self._V, np.zeros((S, 1))])
        self.active.append(cid)
        self.clusters[cid] = ClusterState(cid)
        return K

    def drop(self, stale: list[int]) -> None:
        """Archive the clusters at the given table indices."""
        if not stale:
            return
        est = self.weight_estimates()
        ids = self.active
        stale_set = set(stale)
        keep = [i for i in range(len(ids)) if i not in stale_set]
        for i in stale:
            c = self.clusters[ids[i]]
            c.weight_row.update({ids[j]: est[i, j].copy() for j in range(len(ids))})
            c.active = False
        for i in keep:
            row = self.clusters[ids[i]].weight_row
            for j in stale:
                row[ids[j]] = est[i, j].copy()
        idx = np.array(keep, dtype=int)
        self.samples = np.ascontiguousarray(self.samples[:, idx][:, :, idx])
        self.prior_tab = np.ascontiguousarray(self.prior_tab[:, idx][:, :, idx])
        self.log_prior = self.prior_tab.sum(axis=2)
        self.log_liks = self.log_liks[idx]
        self._V = self._V[:, idx]
        remap = np.full(len(ids), -1)
        remap[idx] = np.arange(len(idx))
        alive = remap[self.win_k] >= 0
        self.win_t = self.win_t[alive]
        self.win_k = remap[self.win_k[alive]]
        self.active = [ids[i] for i in keep]
        self._t_cached = None

    def full_weight_rows(self) -> dict[int, dict[int, np.ndarray]]:
        """Latest weight estimate of every cluster, active or archived."""
        out = {cid: dict(c.weight_row) for cid, c in self.clusters.items()}
        if self.n_active:
            est = self.weight_estimates()
            for i, ci in enumerate(self.active):
                for j, cj in enumerate(self.active):
                    out[ci][cj] = est[i, j]
        return out


def temporal_prior(t: float, particle: Particle, config: MpdhpConfig) -> np.ndarray:
    """Prior over the active clusters of ``particle`` plus a new one, at time ``t``.

    Advances the particle clock to ``t``.
    """
    particle.advance(t)
    lam = particle.intensities()
    mass = np.append(np.power(lam, config.r), config.lambda0)
    return mass / mass.sum()


def prune_inactive(particle: Particle, now: float, config: MpdhpConfig) -> Particle:
    """Archive every cluster whose last event is at least ``prune_age`` old."""
    stale = [i for i, cid in enumerate(particle.active)
             if now - particle.clusters[cid].last_event_time >= config.prune_age]
    particle.drop(stale)
    return particle


def process_document(doc: Document, particle: Particle, config: MpdhpConfig,
                     rng: np.random.Generator) -> tuple[int, PosteriorBreakdown]:
    """Sample a cluster for ``doc`` and update the particle's state with it."""
    prior = temporal_prior(doc.time, particle, config)
    K = particle.n_active
    vocabs = [particle.clusters[cid].vocab for cid in particle.active]
    text = doc_log_likelihood_many(vocabs, doc, config.text_prior)
    with np.errstate(divide="ignore"):
        logpost = np.log(prior) + text
    log_evidence = float(logsumexp(logpost))
    post = np.exp(logpost - log_evidence)
    ids = list(particle.active) + [particle.next_id]
    breakdown = PosteriorBreakdown(ids, prior, text, post, log_evidence)

    k = min(int(np.searchsorted(np.cumsum(post), rng.random() * post.sum(), side="right")), K)
    if k == K:
        k = particle._open_cluster(rng)
    else:
        v = particle._V[:, k]
        # an event with no excitation from the window counts as background
        if v.max() > 0:
            particle.log_liks[k] += np.log(np.maximum(v, _TINY))
    cid = particle.active[k]
    cluster = particle.clusters[cid]
    absorb(cluster.vocab, doc)
    cluster.event_times.append(doc.time)
    cluster.last_event_time = doc.time
    particle.assignments.append(cid)
    particle.win_t = np.append(particle.win_t, doc.time)
    particle.win_k = np.append(particle.win_k, k)
    # the new event changes the excitation at the current time
    particle._t_cached = None
    return cid, breakdown


def update_particle_weights_and_resample(ensemble: list[Particle], log_evidences,
                                         config: MpdhpConfig,
                                         rng: np.random.Generator) -> list[Particle]:
    """Reweight particles by their document evidence and replace the weak ones.

    Particles whose normalised weight falls below ``omega_thres`` are replaced
    by copies of the others, drawn by systematic resampling proportionally to
    weight; all weights are then reset to uniform.
    """
    lw = np.array([p.log_weight for p in ensemble]) + np.asarray(log_evidences, dtype=float)
    if not np.any(np.isfinite(lw)):
        raise DegenerateStreamError("every particle gave the document zero evidence")
    lw = lw - logsumexp(lw)
    w = np.exp(lw)
    low = w < config.omega_thres
    if not np.any(low):
        for p, v in zip(ensemble, lw):
            p.log_weight = float(v)
        return ensemble
    surv = np.where(low, 0.0, w)
    cdf = np.cumsum(surv / surv.sum())
    cdf[-1] = 1.0
    n_low = int(low.sum())
    u = (rng.random() + np.arange(n_low)) / n_low
    src = np.searchsorted(cdf, u, side="right")
    for dst, s in zip(np.flatnonzero(low), src):
        ensemble[dst] = ensemble[s].copy()
    uniform = -math.log(len(ensemble))
    for p in ensemble:
        p.log_weight = uniform
    return ensemble


@dataclass
class DocumentRecord:
    doc: int
    t: float
    particle: int
    cluster: int
    posterior_top: list

    def to_dict(self) -> dict:
        return {"doc": self.doc, "t": self.t, "particle": self.particle,
                "cluster": self.cluster, "posterior_top": self.posterior_top}


class MpdhpEngine:
    """Streams documents through an ensemble of particles."""

    def __init__(self, config: MpdhpConfig, top_k: int = 3):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.particles = [Particle(config) for _ in range(config.n_particles)]
        self.n_docs = 0
        self.top_k = top_k

    def process(self, doc: Document) -> DocumentRecord:
        doc.check_vocabulary(self.config.text_prior.vocabulary_size)
        evid = np.empty(len(self.particles))
        picks = []
        for i, p in enumerate(self.particles):
            cid, br = process_document(doc, p, self.config, self.rng)
            evid[i] = br.log_evidence
            picks.append((cid, br))
        lw = np.array([p.log_weight for p in self.particles]) + evid
        best = int(np.argmax(lw))
        cid, br = picks[best]
        order = np.argsort(-br.posterior, kind="stable")[: self.top_k]
        top = [[int(br.cluster_ids[j]), float(br.posterior[j])] for j in order]
        self.particles = update_particle_weights_and_resample(
            self.particles, evid, self.config, self.rng)
        rec = DocumentRecord(self.n_docs, doc.time, best, int(cid), top)
        self.n_docs += 1
        return rec

    def fit(self, documents, callback=None) -> list[DocumentRecord]:
        records = []
        for doc in documents:
            rec = self.process(doc)
            if callback is not None:
                callback(rec)
            records.append(rec)
        return records

    def best_particle(self) -> Particle:
        return max(self.particles, key=lambda p: p.log_weight)

    def assignments(self) -> list[int]:
        return list(self.best_particle().assignments)

    def dump(self, top_tokens: int = 10, vocabulary: list[str] | None = None) -> dict:
        """JSON-ready description of the best particle's clusters."""
        p = self.best_particle()
        rows = p.full_weight_rows()

        def name(tok):
            return vocabulary[tok] if vocabulary is not None else tok

        clusters = []
        for cid, c in sorted(p.clusters.items()):
            clusters.append({
                "id": cid,
                "active": c.active,
                "n_events": len(c.event_times),
                "n_tokens": c.vocab.total,
                "first_event": c.event_times[0] if c.event_times else None,
                "last_event": c.last_event_time,
                "top_tokens": [[name(t), n] for t, n in c.vocab.top_tokens(top_tokens)],
                "weights": {str(src): np.asarray(v).tolist() for src, v in sorted(rows[cid].items())},
            })
        return {"config": self.config.to_dict(), "n_docs": self.n_docs,
                "particle_log_weight": p.log_weight, "clusters": clusters}
