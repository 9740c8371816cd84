"""Powered Chinese Restaurant Process.

Occupied table ``k`` is chosen with probability ``N_k**r / (alpha + sum N**r)``
and a new table with ``alpha / (alpha + sum N**r)``.  ``r = 0`` gives the
uniform process, ``r = 1`` the usual CRP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

EULER_GAMMA = 0.5772156649015329

# above this count, N**r is evaluated as exp(r * log N) to stay finite for r > 1
_LOG_SPACE_COUNT = 1e6


@dataclass(frozen=True)
class PcrpParams:
    r: float = 1.0
    concentration: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise ParameterError(f"r must be >= 0, got {self.r}")
        if not np.isfinite(self.concentration) or self.concentration <= 0:
            raise ParameterError(f"concentration must be > 0, got {self.concentration}")

    @property
    def growth_exponent(self) -> float:
        """Exponent m of the harmonic number H_m(N) governing E[K | N]."""
        return (self.r**2 + 1) / 2 if self.r < 1 else self.r


def _check_counts(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1:
        raise ParameterError("counts must be one-dimensional")
    if counts.size and (counts.min() < 1 or not np.all(counts == np.floor(counts))):
        raise ParameterError("cluster counts must be integers >= 1")
    return counts


def powered(counts, r: float) -> np.ndarray:
    """``counts ** r`` with large counts handled in log space."""
    counts = np.asarray(counts, dtype=float)
    if r == 0:
        return np.ones_like(counts)
    out = np.power(counts, r)
    big = counts > _LOG_SPACE_COUNT
    if np.any(big):
        out[big] = np.exp(r * np.log(counts[big]))
    return out


def pcrp_prior(counts, params: PcrpParams) -> np.ndarray:
    """Probability of joining each occupied cluster, then of opening a new one.

    Returns a vector of length ``len(counts) + 1``; the new-cluster slot is last.

    >>> pcrp_prior([2, 1], PcrpParams(r=1.0, concentration=1.0))
    array([0.5 , 0.25, 0.25])
    """
    counts = _check_counts(counts)
    mass = np.append(powered(counts, params.r), params.concentration)
    return mass / mass.sum()


def _draw(cdf_mass: np.ndarray, u: float) -> int:
    # inverse CDF on an unnormalised mass vector
    cdf = np.cumsum(cdf_mass)
    return int(np.searchsorted(cdf, u * cdf[-1], side="right"))


def simulate_pcrp(n_draws: int, params: PcrpParams, seed: int = 0) -> list[int]:
    """Seat ``n_draws`` customers one at a time and return their table indices."""
    if n_draws < 1:
        raise ParameterError("n_draws must be >= 1")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(n_draws)
    counts: list[int] = []
    mass = np.empty(0)
    out = []
    for i in range(n_draws):
        k = _draw(np.append(mass, params.concentration), uniforms[i])
        if k == len(counts):
            counts.append(1)
            mass = np.append(mass, 1.0)
        else:
            counts[k] += 1
            mass[k] = powered(np.array([counts[k]]), params.r)[0]
        out.append(k)
    return out


def simulate_pcrp_batch(n_draws: int, params: PcrpParams, runs: int, seed: int = 0,
                        checkpoints=None):
    """Run ``runs`` independent restaurants side by side.

    Returns ``(checkpoints, K, powered_sum)`` where the two arrays have shape
    ``(runs, len(checkpoints))`` and hold the number of occupied tables and
    ``sum_k N_k**r`` after ``N`` customers for each checkpoint ``N``.
    """
    if n_draws < 1 or runs < 1:
        raise ParameterError("n_draws and runs must be >= 1")
    if checkpoints is None:
        checkpoints = np.arange(1, n_draws + 1)
    checkpoints = np.asarray(checkpoints, dtype=int)
    want = np.zeros(n_draws + 1, dtype=bool)
    want[checkpoints] = True

    rng = np.random.default_rng(seed)
    cap = 64
    counts = np.zeros((runs, cap))
    mass = np.zeros((runs, cap))
    n_tables = np.zeros(runs, dtype=int)
    rows = np.arange(runs)
    K_out = np.zeros((runs, len(checkpoints)))
    S_out = np.zeros((runs, len(checkpoints)))
    col = 0
    for n in range(1, n_draws + 1):
        if n_tables.max() + 1 >= cap:
            counts = np.pad(counts, ((0, 0), (0, cap)))
            mass = np.pad(mass, ((0, 0), (0, cap)))
            cap *= 2
        total = mass.sum(axis=1)
        u = rng.random(runs) * (total + params.concentration)
        cdf = np.cumsum(mass, axis=1)
        k = (cdf <= u[:, None]).sum(axis=1)
        # anything past the occupied tables opens a new one
        k = np.minimum(k, n_tables)
        counts[rows, k] += 1
        mass[rows, k] = powered(counts[rows, k], params.r)
        n_tables += k == n_tables
        if want[n]:
            K_out[:, col] = n_tables
            S_out[:, col] = mass.sum(axis=1)
            col += 1
    return checkpoints, K_out, S_out


def generalized_harmonic(n: int, m: float) -> float:
    """H_m(n) = sum_{k=1..n} k**-m."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    return float(np.sum(np.sort(k ** -m)))


def expected_cluster_count(n: int, params: PcrpParams) -> float:
    """Asymptotic expected number of tables after ``n`` customers.

    ``alpha * H_m(n)`` with ``m = (r^2 + 1) / 2`` for r < 1 and ``m = r`` otherwise.
    Only the growth law is meaningful for r != 1; the prefactor is a convention.
    """
    return params.concentration * generalized_harmonic(n, params.growth_exponent)


def powered_sum_trajectory(assignments, r: float) -> np.ndarray:
    """``sum_k N_k**r`` after each successive assignment."""
    assignments = np.asarray(assignments, dtype=int)
    counts: dict[int, int] = {}
    total = 0.0
    out = np.empty(len(assignments))
    for i, a in enumerate(assignments):
        c = counts.get(a, 0)
        if r == 0:
            total += c == 0
        else:
            total += (c + 1) ** r - (c ** r if c else 0.0)
        counts[a] = c + 1
        out[i] = total
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
