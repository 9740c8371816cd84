import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from mpdhp.errors import ParameterError, PreconditionError
from mpdhp.langmodel import (Document, TextPrior, VocabCounts, absorb, batch_log_marginal,
                             doc_log_likelihood, doc_log_likelihood_many)

PRIOR = TextPrior(0.01, 1000)


def reference_loglik(cluster_counts, doc_counts, theta, V):
    """Posterior predictive as a ratio of two Dirichlet-Multinomial marginals."""
    def marginal(counts):
        n = sum(counts.values())
        return (math.lgamma(theta * V) - math.lgamma(n + theta * V)
                + sum(math.lgamma(c + theta) - math.lgamma(theta) for c in counts.values()))
    pooled = dict(cluster_counts)
    for k, v in doc_counts.items():
        pooled[k] = pooled.get(k, 0) + v
    return marginal(pooled) - marginal(cluster_counts)


def test_single_token_in_empty_cluster():
    got = doc_log_likelihood(VocabCounts(), Document(0.0, {7: 1}), PRIOR)
    assert got == pytest.approx(math.log(0.001), rel=1e-12)


def test_repeat_token_example():
    got = doc_log_likelihood(VocabCounts({3: 5}, 5), Document(1.0, {3: 1}), PRIOR)
    assert got == pytest.approx(math.log(5.01 / 15), rel=1e-12)


def test_empty_document_rejected():
    with pytest.raises(PreconditionError):
        Document(0.0, {})
    with pytest.raises(PreconditionError):
        Document(0.0, {4: 0})


@pytest.mark.parametrize("t", [-1.0, float("nan"), float("inf")])
def test_bad_document_time(t):
    with pytest.raises(PreconditionError):
        Document(t, {1: 1})


def test_vocabulary_bounds():
    Document(0.0, {999: 1}).check_vocabulary(1000)
    with pytest.raises(PreconditionError):
        Document(0.0, {1000: 1}).check_vocabulary(1000)


def test_prior_validation():
    with pytest.raises(ParameterError):
        TextPrior(0.0, 10)
    with pytest.raises(ParameterError):
        TextPrior(0.1, 0)
    assert TextPrior(0.01, 1000).theta0 == pytest.approx(10.0)


def test_vocab_counts_invariant():
    with pytest.raises(PreconditionError):
        VocabCounts({1: 2}, 3)


def test_absorb_examples():
    c = VocabCounts()
    doc = Document(0.0, {0: 2, 1: 1})
    absorb(c, doc)
    assert c.counts == {0: 2, 1: 1} and c.total == 3
    absorb(c, doc)
    assert c.counts == {0: 4, 1: 2} and c.total == 6


def test_from_tokens():
    d = Document.from_tokens(2.5, [4, 1, 4, 4])
    assert d.token_counts == {4: 3, 1: 1} and d.n_tokens == 4


docs_st = st.lists(st.dictionaries(st.integers(0, 29), st.integers(1, 4), min_size=1, max_size=6),
                   min_size=1, max_size=12)
theta_st = st.floats(0.001, 2.0)


@given(docs_st, theta_st)
def test_chain_rule_equals_batch_marginal(docs, theta):
    prior = TextPrior(theta, 30)
    c = VocabCounts()
    total = 0.0
    for i, d in enumerate(docs):
        doc = Document(float(i), d)
        total += doc_log_likelihood(c, doc, prior)
        absorb(c, doc)
    assert total == pytest.approx(batch_log_marginal(c, prior), rel=1e-9, abs=1e-9)


@settings(max_examples=50)
@given(docs_st, theta_st, st.randoms(use_true_random=False))
def test_exchangeable(docs, theta, rnd):
    prior = TextPrior(theta, 30)

    def chain(seq):
        c, s = VocabCounts(), 0.0
        for d in seq:
            doc = Document(0.0, d)
            s += doc_log_likelihood(c, doc, prior)
            absorb(c, doc)
        return s

    shuffled = list(docs)
    rnd.shuffle(shuffled)
    assert chain(docs) == pytest.approx(chain(shuffled), rel=1e-9, abs=1e-9)


@given(st.dictionaries(st.integers(0, 29), st.integers(1, 50), max_size=10),
       st.dictionaries(st.integers(0, 29), st.integers(1, 5), min_size=1, max_size=6), theta_st)
def test_matches_reference_and_is_a_log_probability(cluster, doc, theta):
    prior = TextPrior(theta, 30)
    got = doc_log_likelihood(VocabCounts(dict(cluster), sum(cluster.values())), Document(0.0, doc), prior)
    assert got <= 0
    assert got == pytest.approx(reference_loglik(cluster, doc, theta, 30), rel=1e-10, abs=1e-10)


@given(st.dictionaries(st.integers(0, 29), st.integers(1, 50), max_size=10),
       st.dictionaries(st.integers(0, 29), st.integers(1, 5), min_size=1, max_size=6))
def test_many_matches_single(cluster_counts, doc):
    d = Document(0.0, doc)
    clusters = [VocabCounts(dict(cluster_counts), sum(cluster_counts.values())), VocabCounts({0: 3}, 3)]
    many = doc_log_likelihood_many(clusters, d, PRIOR)
    single = [doc_log_likelihood(c, d, PRIOR) for c in clusters + [VocabCounts()]]
    np.testing.assert_allclose(many, single, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 200), st.integers(0, 998))
def test_specialised_cluster_prefers_its_token(n, other):
    other = other if other != 5 else 999
    c = VocabCounts({5: n}, n)
    assert doc_log_likelihood(c, Document(0.0, {5: 1}), PRIOR) > doc_log_likelihood(c, Document(0.0, {other: 1}), PRIOR)


def test_gammaln_accuracy():
    # large arguments keep full relative accuracy
    x = np.array([0.01, 1.5, 1e3, 1e7])
    expected = [math.lgamma(v) for v in x]
    np.testing.assert_allclose(gammaln(x), expected, rtol=1e-13)
