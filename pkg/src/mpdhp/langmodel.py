"""Dirichlet-Multinomial text likelihood with per-cluster word counts.

A cluster holding word counts ``N_v`` (total ``N``) scores a document with
counts ``n_v`` (total ``n``) by the posterior predictive

    Gamma(N + theta0) / Gamma(N + n + theta0)
        * prod_v Gamma(N_v + n_v + theta) / Gamma(N_v + theta)

where ``theta`` is the symmetric per-token concentration and
``theta0 = theta * V``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError, PreconditionError


@dataclass(frozen=True)
class TextPrior:
    theta0_per_token: float = 0.01
    vocabulary_size: int = 1000

    def __post_init__(self):
        if not self.theta0_per_token > 0:
            raise ParameterError("theta0_per_token must be > 0")
        if int(self.vocabulary_size) != self.vocabulary_size or self.vocabulary_size < 1:
            raise ParameterError("vocabulary_size must be a positive integer")

    @property
    def theta0(self) -> float:
        return self.theta0_per_token * self.vocabulary_size


class Document:
    """A timestamped bag of words.

    ``token_counts`` maps token id to a positive count. Ids and counts are also
    kept as parallel arrays, which is what the likelihood code consumes.
    """

    __slots__ = ("time", "token_counts", "ids", "counts", "n_tokens")

    def __init__(self, time: float, token_counts: dict[int, int]):
        time = float(time)
        if not np.isfinite(time) or time < 0:
            raise PreconditionError(f"document time must be a nonnegative number, got {time}")
        token_counts = {int(k): int(v) for k, v in token_counts.items() if v}
        if not token_counts:
            raise PreconditionError("a document needs at least one token")
        if min(token_counts.values()) < 0 or min(token_counts) < 0:
            raise PreconditionError("token ids and counts must be nonnegative")
        self.time = time
        self.token_counts = token_counts
        self.ids = np.fromiter(token_counts.keys(), dtype=np.int64, count=len(token_counts))
        self.counts = np.fromiter(token_counts.values(), dtype=float, count=len(token_counts))
        self.n_tokens = int(self.counts.sum())

    @classmethod
    def from_tokens(cls, time: float, tokens) -> "Document":
        counts: dict[int, int] = {}
        for tok in tokens:
            counts[int(tok)] = counts.get(int(tok), 0) + 1
        return cls(time, counts)

    def check_vocabulary(self, vocabulary_size: int) -> None:
        if self.ids.max() >= vocabulary_size:
            raise PreconditionError(f"token id {self.ids.max()} outside vocabulary of size {vocabulary_size}")

    def __repr__(self):
        return f"Document(time={self.time!r}, token_counts={self.token_counts!r})"

    def __eq__(self, other):
        return (isinstance(other, Document) and self.time == other.time
                and self.token_counts == other.token_counts)


@dataclass
class VocabCounts:
    counts: dict[int, int] = field(default_factory=dict)
    total: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise PreconditionError("total must equal the sum of per-token counts")

    def copy(self) -> "VocabCounts":
        return VocabCounts(dict(self.counts), self.total)

    def lookup(self, ids: np.ndarray) -> np.ndarray:
        get = self.counts.get
        return np.fromiter((get(i, 0) for i in ids.tolist()), dtype=float, count=len(ids))

    def top_tokens(self, n: int = 10) -> list[tuple[int, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def doc_log_likelihood(cluster: VocabCounts, doc: Document, prior: TextPrior) -> float:
    """Log posterior-predictive probability of ``doc`` under ``cluster``'s counts."""
    theta, theta0 = prior.theta0_per_token, prior.theta0
    held = cluster.lookup(doc.ids) + theta
    out = gammaln(cluster.total + theta0) - gammaln(cluster.total + doc.n_tokens + theta0)
    return float(out + np.sum(gammaln(held + doc.counts) - gammaln(held)))


def doc_log_likelihood_many(clusters: list[VocabCounts], doc: Document,
                            prior: TextPrior) -> np.ndarray:
    """``doc_log_likelihood`` against several clusters at once, plus an empty one.

    The last entry scores the document against empty counts.
    """
    theta, theta0 = prior.theta0_per_token, prior.theta0
    k = len(clusters)
    held = np.empty((k + 1, len(doc.ids)))
    totals = np.empty(k + 1)
    for i, c in enumerate(clusters):
        held[i] = c.lookup(doc.ids)
        totals[i] = c.total
    held[k] = 0.0
    totals[k] = 0.0
    held += theta
    out = gammaln(totals + theta0) - gammaln(totals + doc.n_tokens + theta0)
    return out + np.sum(gammaln(held + doc.counts) - gammaln(held), axis=1)


def absorb(cluster: VocabCounts, doc: Document) -> VocabCounts:
    """Add the document's word counts to the cluster, in place; returns the cluster."""
    counts = cluster.counts
    for tok, n in doc.token_counts.items():
        counts[tok] = counts.get(tok, 0) + n
    cluster.total += doc.n_tokens
    return cluster


def batch_log_marginal(counts, prior: TextPrior) -> float:
    """Dirichlet-Multinomial marginal of a pooled count vector (ordered draws)."""
    if isinstance(counts, VocabCounts):
        values = np.array(list(counts.counts.values()), dtype=float)
    elif isinstance(counts, dict):
        values = np.array(list(counts.values()), dtype=float)
    else:
        values = np.asarray(counts, dtype=float)
    values = values[values > 0]
    theta, theta0 = prior.theta0_per_token, prior.theta0
    n = values.sum()
    return float(gammaln(theta0) - gammaln(n + theta0)
                 + np.sum(gammaln(values + theta) - gammaln(theta)))
