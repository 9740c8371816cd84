import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from mpdhp.errors import DegenerateLikelihoodError, DomainError, ParameterError, PreconditionError, StabilityError
from mpdhp.hawkes import (SYNTHETIC_KERNEL, EventHistory, RbfKernel, compensator, intensity, kernel_eval,
                          log_likelihood, simulate, spectral_radius)
from mpdhp.synth import SynthSpec, make_weights

K3 = SYNTHETIC_KERNEL
PEAK = 1 / (0.5 * math.sqrt(2 * math.pi))


def naive_intensity(c, t, times, clusters, weights, kernel, baseline=0.0):
    """Untruncated sum with scipy's Gaussian pdf."""
    lam = baseline
    for ti, ci in zip(times, clusters):
        if ti < t:
            lam += sum(weights[c, ci, l] * norm.pdf(t - ti, kernel.means[l], kernel.sigmas[l])
                       for l in range(kernel.size))
    return lam


def quad_log_likelihood(times, clusters, weights, kernel, horizon, baseline=0.0):
    K = weights.shape[0]
    pts = sorted({float(x) for t in times for x in (t, *(t + m for m in kernel.means)) if 0 <= x <= horizon})
    comp = 0.0
    for c in range(K):
        val, _ = integrate.quad(lambda s: naive_intensity(c, s, times, clusters, weights, kernel, baseline),
                                0, horizon, points=pts or None, limit=2000, epsabs=1e-13, epsrel=1e-13)
        comp += val
    logs = sum(math.log(naive_intensity(c, t, times, clusters, weights, kernel, baseline))
               for t, c in zip(times, clusters))
    return logs - comp


def test_kernel_examples():
    v = kernel_eval(K3, 3.0)
    assert v[0] == pytest.approx(0.79788, abs=1e-5)
    # the lag-7 basis sits 8 sigmas away: exp(-32) / (0.5 sqrt(2 pi)) ~ 1.01e-14
    assert v[1] == pytest.approx(math.exp(-32) * PEAK, rel=1e-12)
    assert v[2] == 0.0
    for l, m in enumerate(K3.means):
        assert kernel_eval(K3, m)[l] == pytest.approx(PEAK, rel=1e-14)
    assert np.all(kernel_eval(K3, 1e6) == 0)


def test_kernel_negative_lag():
    with pytest.raises(DomainError):
        kernel_eval(K3, -0.1)


@pytest.mark.parametrize("means, sigmas", [((1.0, 2.0), (1.0,)), ((1.0,), (0.0,)), ((2.0, 1.0), (1.0, 1.0)),
                                           ((-1.0,), (1.0,)), ((), ())])
def test_kernel_validation(means, sigmas):
    with pytest.raises(ParameterError):
        RbfKernel(means, sigmas)


@given(st.floats(0, 40))
def test_kernel_matches_scipy(dt):
    expected = norm.pdf(dt, K3.means, K3.sigmas)
    expected[expected < 1e-15] = 0
    np.testing.assert_allclose(K3(dt), expected, rtol=1e-12, atol=0)


@given(st.floats(0, 40))
def test_kernel_cdf_matches_scipy(dt):
    expected = norm.cdf(dt, K3.means, K3.sigmas) - norm.cdf(0, K3.means, K3.sigmas)
    np.testing.assert_allclose(K3.cdf(dt), expected, atol=1e-15)


def test_intensity_examples():
    w = np.zeros((1, 1, 3))
    assert intensity(0, 5.0, EventHistory(), w, K3) == 0.0
    w[0, 0] = [1, 0, 0]
    one = intensity(0, 3.0, EventHistory([0.0], [0]), w, K3)
    assert one == pytest.approx(0.79788, abs=1e-5)
    assert intensity(0, 3.0, EventHistory([0.0, 0.0], [0, 0]), w, K3) == 2 * one


def test_intensity_requires_past_events():
    w = np.ones((1, 1, 3))
    with pytest.raises(PreconditionError):
        intensity(0, 1.0, EventHistory([1.0], [0]), w, K3)


history_st = st.integers(1, 3).flatmap(lambda K: st.tuples(
    st.just(K),
    st.lists(st.tuples(st.floats(0, 30), st.integers(0, K - 1)), min_size=0, max_size=15),
    st.lists(st.floats(0, 1), min_size=K * K * 3, max_size=K * K * 3),
))


@given(history_st, st.floats(0.01, 40))
def test_intensity_matches_naive_sum(data, t):
    K, events, flat = data
    events = sorted(e for e in events if e[0] < t)
    w = np.array(flat).reshape(K, K, 3)
    h = EventHistory([e[0] for e in events], [e[1] for e in events]) if events else EventHistory()
    for c in range(K):
        got = intensity(c, t, h, w, K3)
        assert got >= 0
        assert got == pytest.approx(naive_intensity(c, t, h.times, h.clusters, w, K3), rel=1e-9, abs=1e-14)


def test_diagonal_weights_decouple_clusters():
    rng = np.random.default_rng(0)
    w = np.zeros((2, 2, 3))
    w[0, 0], w[1, 1] = rng.random(3), rng.random(3)
    h = EventHistory([0.0, 1.0, 2.5, 4.0], [0, 1, 1, 0])
    only0 = EventHistory([0.0, 4.0], [0, 0])
    for t in (6.0, 9.5, 13.0):
        assert intensity(0, t, h, w, K3) == pytest.approx(intensity(0, t, only0, w, K3), rel=1e-12)


def test_empty_history_likelihood_is_zero():
    assert log_likelihood(EventHistory(), np.ones((2, 2, 3)) * 0.3, K3, 50.0) == 0.0


def test_two_event_example_against_quadrature():
    w = np.zeros((1, 1, 3))
    w[0, 0, 0] = 1.0
    h = EventHistory([0.0, 3.0], [0, 0])
    # both events excite over the window; the one at t=3 only from lag 0
    comp, _ = integrate.quad(lambda s: norm.pdf(s, 3, 0.5) + (s > 3) * norm.pdf(s - 3, 3, 0.5), 0, 20,
                             points=[3.0, 6.0], epsabs=1e-13, epsrel=1e-13)
    expected = math.log(norm.pdf(3.0, 3, 0.5)) - comp
    assert log_likelihood(h, w, K3, 20.0, exclude_immigrants=True) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(DegenerateLikelihoodError):
        log_likelihood(h, w, K3, 20.0)


def test_likelihood_rejects_events_outside_window():
    with pytest.raises(PreconditionError):
        log_likelihood(EventHistory([0.0, 30.0], [0, 0]), np.ones((1, 1, 3)), K3, 20.0, baseline=0.1)


@settings(deadline=None, max_examples=15)
@given(st.integers(0, 2**31))
def test_likelihood_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, 4))
    n = int(rng.integers(1, 12))
    times = np.sort(rng.uniform(0, 25, n))
    clusters = rng.integers(0, K, n)
    w = rng.uniform(0, 1, (K, K, 3))
    base = float(rng.uniform(0.05, 0.5))
    got = log_likelihood(EventHistory(times, clusters), w, K3, 30.0, baseline=base)
    assert got == pytest.approx(quad_log_likelihood(times, clusters, w, K3, 30.0, base), rel=1e-6)


@given(st.floats(0.1, 10))
def test_likelihood_scaling(s):
    rng = np.random.default_rng(4)
    w = rng.uniform(0.1, 1, (2, 2, 3))
    h = EventHistory([0.0, 3.1, 6.9, 7.2, 11.0], [0, 1, 0, 1, 1])
    T = 25.0
    ll1 = log_likelihood(h, w, K3, T, exclude_immigrants=True)
    ll2 = log_likelihood(h, s * w, K3, T, exclude_immigrants=True)
    comp = compensator(h, w, K3, T).sum()
    n_triggered = len(h) - 1
    assert ll2 == pytest.approx(ll1 + n_triggered * math.log(s) - (s - 1) * comp, rel=1e-10, abs=1e-10)


def test_compensator_closed_form():
    w = np.array([[[0.3, 0.6, 0.1]]])
    h = EventHistory([0.0, 2.0, 5.5], [0, 0, 0])
    T = 9.0
    expected = sum(w[0, 0, l] * (norm.cdf((T - t - K3.means[l]) / 0.5) - norm.cdf((-K3.means[l]) / 0.5))
                   for t in h.times for l in range(3))
    assert compensator(h, w, K3, T)[0] == pytest.approx(expected, rel=1e-12)


def test_half_mass_for_zero_mean_basis():
    k = RbfKernel((0.0,), (1.0,))
    assert k.masses[0] == pytest.approx(0.5)
    assert compensator(EventHistory([0.0], [0]), np.ones((1, 1, 1)), k, 100.0)[0] == pytest.approx(0.5)


def test_history_jsonl_roundtrip(tmp_path):
    h = EventHistory([0.0, 1.5, 1.5, 7.25], [2, 0, 1, 0])
    p = tmp_path / "h.jsonl"
    h.to_jsonl(p)
    assert json.loads(p.read_text().splitlines()[1]) == {"t": 1.5, "cluster": 0}
    back = EventHistory.from_jsonl(p)
    np.testing.assert_array_equal(back.times, h.times)
    np.testing.assert_array_equal(back.clusters, h.clusters)


def test_history_validation():
    with pytest.raises(PreconditionError):
        EventHistory([2.0, 1.0], [0, 0])
    with pytest.raises(PreconditionError):
        EventHistory([1.0], [0, 1])


def test_simulate_without_immigrants_is_empty():
    assert len(simulate(np.full((2, 2, 3), 0.1), K3, 0.0, 100.0, seed=1)) == 0


def test_simulate_poisson_count():
    K, lam, T = 3, 0.2, 50.0
    counts = [len(simulate(np.zeros((K, K, 3)), K3, lam, T, seed=s)) for s in range(100)]
    mean = K * lam * T
    assert abs(np.mean(counts) - mean) < 3 * math.sqrt(mean / 100)


def test_simulate_rejects_supercritical():
    with pytest.raises(StabilityError):
        simulate(np.full((1, 1, 3), 0.5), K3, 0.1, 10.0)


def test_simulate_is_seeded_and_ordered():
    w = np.array([[[0.2, 0.3, 0.1], [0.05, 0.0, 0.1]], [[0.0, 0.1, 0.1], [0.3, 0.2, 0.1]]])
    assert spectral_radius(w) < 1
    a = simulate(w, K3, 0.1, 300.0, seed=9)
    b = simulate(w, K3, 0.1, 300.0, seed=9)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.clusters, b.clusters)
    assert np.all(np.diff(a.times) >= 0) and a.times[-1] <= 300.0


def test_simulate_max_events():
    w = np.full((1, 1, 3), 0.3)
    assert len(simulate(w, K3, 0.5, np.inf, seed=0, max_events=250)) == 250


def test_simulated_history_has_finite_likelihood():
    w = np.array([[[0.4, 0.3, 0.2]]])
    h = simulate(w, K3, 0.1, 400.0, seed=3)
    assert np.isfinite(log_likelihood(h, w, K3, 400.0, baseline=0.1))


def test_simulated_offspring_timing():
    # with all weight on the lag-7 basis, lags between 2 and 12 are parent-child pairs
    w = np.zeros((1, 1, 3))
    w[0, 0, 1] = 0.6
    h = simulate(w, K3, 0.002, 50000.0, seed=5)
    lags = (h.times[None, :] - h.times[:, None]).ravel()
    lags = lags[(lags > 2) & (lags < 12)]
    assert lags.size > 100
    # the rest are chance pairs of unrelated cascades
    assert np.mean(np.abs(lags - 7.0) < 2.5) > 0.9
    assert abs(np.median(lags) - 7.0) < 0.25


def test_subcritical_mean_count():
    # each immigrant spawns 1 / (1 - rho) events in expectation; edge losses are O(support / T)
    K, lam, T, rho = 2, 0.05, 2000.0, 0.5
    w = np.zeros((K, K, 3))
    w[0, 0] = w[1, 1] = [rho / 3] * 3
    counts = [len(simulate(w, K3, lam, T, seed=s)) for s in range(60)]
    expected = K * lam * T / (1 - rho)
    # offspring clustering inflates the variance by 1 / (1 - rho)^2
    sd = math.sqrt(expected / (1 - rho) ** 2 / 60)
    assert abs(np.mean(counts) - expected) < 4 * sd


def test_synthetic_setting_event_count():
    counts = []
    for s in range(20):
        w = make_weights(SynthSpec(seed=s, univariate=True, spectral_radius=0.95))
        counts.append(len(simulate(w, K3, 0.05, 1500.0, seed=s)))
    assert 3000 <= np.median(counts) <= 15000
