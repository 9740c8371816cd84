"""Helpers that run the engine on synthetic streams and score the result."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .hawkes import EventHistory
from .langmodel import TextPrior
from .metrics import nmi
from .smc import MpdhpConfig, MpdhpEngine
from .synth import SynthDataset, SynthSpec, decorrelate_labels, generate


@dataclass
class RunResult:
    assignments: np.ndarray
    engine: MpdhpEngine
    latencies: np.ndarray
    scores: dict = field(default_factory=dict)


def engine_config_for(spec: SynthSpec, **overrides) -> MpdhpConfig:
    """Engine settings matched to a synthetic spec (same kernel and vocabulary)."""
    base = dict(kernel=spec.kernel, text_prior=TextPrior(0.01, spec.vocab_size),
                lambda0=0.05, seed=spec.seed)
    base.update(overrides)
    return MpdhpConfig(**base)


def run_engine(documents, config: MpdhpConfig) -> RunResult:
    engine = MpdhpEngine(config)
    lat = np.empty(len(documents))
    for i, doc in enumerate(documents):
        t0 = time.perf_counter()
        engine.process(doc)
        lat[i] = time.perf_counter() - t0
    return RunResult(np.array(engine.assignments()), engine, lat)


def score_synthetic(spec: SynthSpec, dataset: SynthDataset | None = None, **overrides) -> RunResult:
    """Generate (unless given), fit and score one synthetic dataset."""
    data = generate(spec) if dataset is None else dataset
    res = run_engine(data.documents, engine_config_for(spec, **overrides))
    res.scores["nmi"] = nmi(data.temporal_labels, res.assignments)
    res.scores["n_clusters"] = len(res.engine.best_particle().clusters)
    return res


def score_decorrelated(spec: SynthSpec, fraction: float, r_values, **overrides) -> dict:
    """Textual and temporal NMI at several ``r`` on one decorrelated dataset."""
    data = generate(spec)
    docs, textual, temporal = decorrelate_labels(data.documents, data.temporal_labels, fraction,
                                                 spec.seed + 7919, data.vocab_distributions)
    out = {}
    for r in r_values:
        res = run_engine(docs, engine_config_for(spec, r=r, **overrides))
        out[r] = {"textual": nmi(textual, res.assignments), "temporal": nmi(temporal, res.assignments),
                  "n_clusters": len(res.engine.best_particle().clusters)}
    return out


def inferred_history(engine: MpdhpEngine, documents) -> tuple[EventHistory, list[int]]:
    """Event history of the best particle with clusters renumbered 0..K-1."""
    assign = engine.assignments()
    ids = sorted(set(assign))
    pos = {c: i for i, c in enumerate(ids)}
    times = np.array([d.time for d in documents])
    return EventHistory(times, np.array([pos[c] for c in assign])), ids


def adjacency_from_engine(engine: MpdhpEngine, ids: list[int], n_basis: int) -> np.ndarray:
    """Dense ``(K, K, L)`` weight estimates between the listed cluster ids."""
    rows = engine.best_particle().full_weight_rows()
    pos = {c: i for i, c in enumerate(ids)}
    A = np.zeros((len(ids), len(ids), n_basis))
    for target, row in rows.items():
        if target not in pos:
            continue
        for source, w in row.items():
            if source in pos:
                A[pos[target], pos[source]] = w
    return A

