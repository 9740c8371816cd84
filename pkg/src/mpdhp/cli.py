"""Command-line entry point: ingest, fit, simulate, eval and pcrp-sim.

Every subcommand takes ``--config FILE`` (a flat JSON object, or a manifest
written by an earlier run) whose keys are overridden by explicit flags.
Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (DegenerateError, DomainError, FeasibilityError, ParameterError,
                     PreconditionError, StabilityError)
from .hawkes import SYNTHETIC_KERNEL, EventHistory, RbfKernel
from .langmodel import Document, TextPrior
from .metrics import InteractionNetwork, effective_interaction, effective_histogram, interaction_summary, nmi
from .pcrp import PcrpParams, expected_cluster_count, loglog_slope, simulate_pcrp_batch
from .smc import MpdhpConfig, MpdhpEngine
from .synth import SynthSpec, decorrelate_labels, generate

__version__ = "0.1.0"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

SECONDS = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0, "days": 86400.0}


@dataclass(frozen=True)
class KernelPreset:
    means: tuple
    sigmas: tuple
    lambda0: float
    # unit of the means and sigmas; None means "whatever unit the stream uses"
    unit: str | None

    def kernel(self) -> RbfKernel:
        return RbfKernel(self.means, self.sigmas)


PRESETS = {
    "synthetic": KernelPreset(SYNTHETIC_KERNEL.means, SYNTHETIC_KERNEL.sigmas, 0.05, None),
    "minute": KernelPreset(tuple(float(m) for m in range(0, 90, 10)), (5.0,) * 9, 0.01, "minutes"),
    "hour": KernelPreset((0.0, 2.0, 4.0, 6.0, 8.0), (1.0,) * 5, 0.001, "hours"),
    "day": KernelPreset(tuple(float(d) for d in range(7)), (0.5,) * 7, 0.0001, "days"),
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------- ingest

_URL = re.compile(r"(https?://\S+|www\.\S+|\b\S+\.(com|org|net|io|fr|uk|de)\S*)")
_URL_SHORT = re.compile(r"\b[a-z]+://\S+")
_PUNCT = re.compile(r"[^\w\s]|_")
_SPACE = re.compile(r"\s+")

MIN_TOKEN_LEN = 4
MIN_CORPUS_FREQ = 3
MIN_DOC_TOKENS = 3


def load_stopwords(path=None) -> frozenset:
    if path is None:
        text = resources.files("mpdhp").joinpath("data/stopwords_en.txt").read_text()
    else:
        text = Path(path).read_text()
    # stopwords go through the same punctuation removal as the documents
    return frozenset(_PUNCT.sub("", w.strip().lower()) for w in text.split() if w.strip())


def clean_text(text: str, stopwords: frozenset) -> list[str]:
    """Per-document cleaning: everything except the corpus-frequency filter.

    >>> clean_text("Breaking News: http://x.y fire!!", frozenset())
    ['breaking', 'news', 'fire']
    """
    text = text.lower()
    text = _URL_SHORT.sub(" ", _URL.sub(" ", text))
    text = _PUNCT.sub(" ", text)
    tokens = _SPACE.sub(" ", text).strip().split(" ")
    return [t for t in tokens if t and t not in stopwords and len(t) >= MIN_TOKEN_LEN]


@dataclass
class IngestStats:
    records: int = 0
    malformed: int = 0
    below_min_score: int = 0
    too_short: int = 0
    out_of_lexicon_tokens: int = 0
    kept: int = 0
    vocabulary_size: int = 0


@dataclass
class Corpus:
    documents: list[Document]
    tokens: list[list[str]]
    vocabulary: list[str]
    raw_times: list[float]
    stats: IngestStats = field(default_factory=IngestStats)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for t, toks in zip(self.raw_times, self.tokens):
                fh.write(json.dumps({"t": t, "tokens": toks}) + "\n")


def _parse_time(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return datetime.fromisoformat(value.replace("Z", "+00:00")).timestamp()
    raise ValueError(f"unusable timestamp {value!r}")


def _read_records(path: Path):
    """Yield dicts from a JSONL file or a ``timestamp,text[,score]`` CSV; None marks a bad record."""
    with open(path, newline="") as fh:
        if path.suffix.lower() == ".csv":
            for i, row in enumerate(csv.reader(fh)):
                if i == 0 and row and row[0].strip().lower() in ("time", "timestamp", "date"):
                    continue
                if len(row) < 2:
                    yield None
                    continue
                rec = {"time": row[0], "text": row[1]}
                if len(row) > 2 and row[2].strip():
                    rec["score"] = row[2]
                yield rec
        else:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    yield None
                    continue
                yield rec if isinstance(rec, dict) else None


def ingest(path, lexicon=None, *, clean: bool = True, stopwords: frozenset | None = None,
           min_score: float | None = None) -> Corpus:
    """Read, clean, tokenise and sort a document file.

    Records carry ``time`` and either ``text`` or a ``tokens`` list. Records that
    cannot be parsed are counted and skipped. With ``clean`` the text is
    lowercased, stripped of URLs, punctuation, extra whitespace, stopwords and
    tokens shorter than 4 characters; tokens seen fewer than 3 times in the
    corpus are then removed and documents left with fewer than 3 tokens are
    dropped, repeating until nothing changes so that re-ingesting the output is
    a no-op. ``lexicon`` (a list of tokens or a token-to-id mapping) fixes the
    vocabulary; tokens outside it are dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cannot read {path}")
    stopwords = load_stopwords() if stopwords is None else stopwords
    stats = IngestStats()
    rows: list[tuple[float, list[str]]] = []
    for rec in _read_records(path):
        stats.records += 1
        if isinstance(rec, dict) and "time" not in rec and "t" in rec:
            rec["time"] = rec["t"]
        if rec is None or "time" not in rec or not any(k in rec for k in ("text", "tokens", "counts")):
            stats.malformed += 1
            continue
        try:
            t = _parse_time(rec["time"])
            if min_score is not None:
                if float(rec.get("score", "nan")) < min_score:
                    stats.below_min_score += 1
                    continue
            if "counts" in rec:
                raw = " ".join(" ".join([str(k)] * int(v)) for k, v in rec["counts"].items())
            elif "tokens" in rec:
                raw = " ".join(str(x) for x in rec["tokens"])
            else:
                raw = str(rec["text"])
        except (ValueError, TypeError):
            stats.malformed += 1
            continue
        if not np.isfinite(t):
            stats.malformed += 1
            continue
        toks = clean_text(raw, stopwords) if clean else raw.split()
        rows.append((t, toks))

    if isinstance(lexicon, dict):
        index = {str(k): int(v) for k, v in lexicon.items()}
    elif lexicon is not None:
        index = {str(tok): i for i, tok in enumerate(lexicon)}
    else:
        index = None
    if index is not None:
        before = sum(len(tk) for _, tk in rows)
        rows = [(t, [x for x in tk if x in index]) for t, tk in rows]
        stats.out_of_lexicon_tokens = before - sum(len(tk) for _, tk in rows)

    while True:
        n_before = len(rows), sum(len(tk) for _, tk in rows)
        if clean:
            freq = Counter(x for _, tk in rows for x in tk)
            rows = [(t, [x for x in tk if freq[x] >= MIN_CORPUS_FREQ]) for t, tk in rows]
        kept = [(t, tk) for t, tk in rows if len(tk) >= (MIN_DOC_TOKENS if clean else 1)]
        stats.too_short += len(rows) - len(kept)
        rows = kept
        if (len(rows), sum(len(tk) for _, tk in rows)) == n_before:
            break

    rows.sort(key=lambda r: r[0])  # stable
    if index is None:
        vocabulary = sorted({x for _, tk in rows for x in tk})
        index = {tok: i for i, tok in enumerate(vocabulary)}
    else:
        vocabulary = [tok for tok, _ in sorted(index.items(), key=lambda kv: kv[1])]
    docs = [Document.from_tokens(t, [index[x] for x in tk]) for t, tk in rows]
    stats.kept = len(docs)
    stats.vocabulary_size = len(vocabulary)
    return Corpus(docs, [tk for _, tk in rows], vocabulary, [t for t, _ in rows], stats)


def load_lexicon(path):
    """A JSON list or object, or a text file with one token per line (line number = id)."""
    text = Path(path).read_text()
    if Path(path).suffix.lower() == ".json":
        return json.loads(text)
    return [line.strip() for line in text.splitlines() if line.strip()]


def read_count_documents(path) -> list[Document]:
    """Documents stored as ``{"t": t, "counts": {token_id: n}}`` lines, as written by ``simulate``."""
    docs = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                docs.append(Document(rec.get("t", rec.get("time")),
                                     {int(k): int(v) for k, v in rec["counts"].items()}))
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
                raise PreconditionError(f"{path}:{n}: malformed document record ({exc})") from None
    return docs


def _sibling_vocab_size(path: Path) -> int | None:
    """Vocabulary size recorded by ``simulate`` next to its documents, if any."""
    manifest = path.parent / "manifest.json"
    try:
        data = json.loads(manifest.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if data.get("command") != "simulate":
        return None
    v = data.get("config", {}).get("vocab_size") or SynthSpec.vocab_size
    return int(v)


def _is_count_file(path: Path) -> bool:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    return False
                return (isinstance(rec, dict) and isinstance(rec.get("counts"), dict)
                        and all(str(k).isdigit() for k in rec["counts"]))
    return False


# ---------------------------------------------------------------- configuration

FIT_KEYS = {
    "input": str, "output": str, "kernel": str, "kernel_means": list, "kernel_sigmas": list,
    "time_unit": str, "r": float, "lambda0": float, "theta0": float, "vocab_size": int,
    "n_particles": int, "n_samples": int, "beta0": float, "omega_thres": float,
    "prune_age": float, "univariate": bool, "seed": int, "top_k": int, "top_tokens": int,
    "clean": bool, "min_score": float, "lexicon": str, "stopwords": str,
    "min_cluster_docs": int,
}
SIM_KEYS = {
    "output": str, "n_clusters": int, "vocab_size": int, "words_per_doc": int,
    "textual_overlap": float, "temporal_overlap": float, "background_rate": float,
    "n_events": int, "horizon": float, "seed": int, "univariate": bool,
    "vocab_support": int, "tolerance": float, "spectral_radius": float,
    "kernel_means": list, "kernel_sigmas": list, "decorrelate": float,
}
EVAL_KEYS = {"truth": str, "assignments": str, "output": str}
PCRP_KEYS = {"n_draws": int, "r": float, "concentration": float, "runs": int, "seed": int,
             "checkpoints": int, "output": str}

ALIASES = {"kernel.means": "kernel_means", "kernel.sigmas": "kernel_sigmas", "n": "n_draws",
           "alpha": "concentration"}

FIT_DEFAULTS = {"kernel": "synthetic", "time_unit": "seconds", "r": 1.0, "theta0": 0.01,
                "n_particles": 8, "n_samples": 2000, "beta0": 2.0, "univariate": False,
                "seed": 0, "top_k": 3, "top_tokens": 10, "clean": True, "min_cluster_docs": 10}
SIM_DEFAULTS = {"decorrelate": 0.0}
PCRP_DEFAULTS = {"r": 1.0, "concentration": 1.0, "runs": 100, "seed": 0, "checkpoints": 20}


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {ALIASES.get(k, k): v for k, v in data.items()}


def resolve(args: argparse.Namespace, keys: dict, defaults: dict) -> dict:
    """Defaults, then the config file, then explicit flags."""
    out = dict(defaults)
    if args.config:
        for k, v in load_config_file(args.config).items():
            if k not in keys:
                raise UsageError(f"unknown config key {k!r}")
            out[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    for k, v in list(out.items()):
        kind = keys[k]
        if v is None:
            continue
        try:
            out[k] = [float(x) for x in v] if kind is list else kind(v)
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {k}: {v!r}") from None
    return out


def fit_kernel(cfg: dict) -> tuple[RbfKernel, float, float]:
    """Kernel, default lambda0 and the factor turning input times into kernel units."""
    if cfg.get("kernel_means") or cfg.get("kernel_sigmas"):
        if not (cfg.get("kernel_means") and cfg.get("kernel_sigmas")):
            raise UsageError("kernel_means and kernel_sigmas go together")
        return RbfKernel(tuple(cfg["kernel_means"]), tuple(cfg["kernel_sigmas"])), 0.05, 1.0
    name = cfg["kernel"]
    if name not in PRESETS:
        raise UsageError(f"unknown kernel preset {name!r}; choose from {sorted(PRESETS)}")
    if cfg["time_unit"] not in SECONDS:
        raise UsageError(f"unknown time unit {cfg['time_unit']!r}")
    preset = PRESETS[name]
    scale = 1.0 if preset.unit is None else SECONDS[cfg["time_unit"]] / SECONDS[preset.unit]
    return preset.kernel(), preset.lambda0, scale


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir: Path, command: str, config: dict, **extra) -> None:
    manifest = {"command": command, "version": __version__, "config": config, **extra}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# ----------------------------------------------------------------- subcommands

def cmd_fit(cfg: dict) -> dict:
    if not cfg.get("input") or not cfg.get("output"):
        raise UsageError("fit needs --input and --output")
    kernel, preset_lambda0, scale = fit_kernel(cfg)
    lambda0 = cfg.get("lambda0") or preset_lambda0
    src = Path(cfg["input"])
    if not src.is_file():
        raise FileNotFoundError(f"cannot read {src}")

    vocabulary = None
    if _is_count_file(src):
        docs = read_count_documents(src)
        times = [d.time for d in docs]
        if any(b < a for a, b in zip(times, times[1:])):
            order = np.argsort(times, kind="stable")
            docs = [docs[i] for i in order]
        vsize = cfg.get("vocab_size") or _sibling_vocab_size(src) or (
            max(int(d.ids.max()) for d in docs) + 1 if docs else 1)
        stats = None
    else:
        lexicon = load_lexicon(cfg["lexicon"]) if cfg.get("lexicon") else None
        stop = load_stopwords(cfg.get("stopwords"))
        corpus = ingest(src, lexicon, clean=cfg["clean"], stopwords=stop, min_score=cfg.get("min_score"))
        docs, vocabulary, stats = corpus.documents, corpus.vocabulary, asdict(corpus.stats)
        vsize = cfg.get("vocab_size") or len(vocabulary)
    if not docs:
        raise PreconditionError("no documents left to fit")
    raw_times = [d.time for d in docs]
    stream = docs if scale == 1.0 else [Document(d.time * scale, d.token_counts) for d in docs]

    config = MpdhpConfig(
        kernel=kernel, text_prior=TextPrior(cfg["theta0"], int(vsize)), r=cfg["r"], lambda0=lambda0,
        n_particles=cfg["n_particles"], n_samples=cfg["n_samples"], beta0=cfg["beta0"],
        omega_thres=cfg.get("omega_thres"), prune_age=cfg.get("prune_age"),
        univariate=cfg["univariate"], seed=cfg["seed"])
    engine = MpdhpEngine(config, top_k=cfg["top_k"])
    outdir = Path(cfg["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "assignments.jsonl", "w") as fh:
        for rec in engine.fit(stream):
            fh.write(json.dumps(rec.to_dict()) + "\n")
    # the best particle at the end decides the final partition
    final = engine.assignments()
    with open(outdir / "clusters.jsonl", "w") as fh:
        for i, (raw, c) in enumerate(zip(raw_times, final)):
            fh.write(json.dumps({"doc": i, "t": raw, "cluster": int(c)}) + "\n")

    model = engine.dump(cfg["top_tokens"], vocabulary)
    (outdir / "model.json").write_text(json.dumps(model, indent=1, default=_json_default))

    ids = sorted(set(final))
    pos = {c: i for i, c in enumerate(ids)}
    hist = EventHistory(np.array([d.time for d in stream]), np.array([pos[c] for c in final]))
    rows = engine.best_particle().full_weight_rows()
    A = np.zeros((len(ids), len(ids), kernel.size))
    for tgt, row in rows.items():
        for srcid, w in row.items():
            if tgt in pos and srcid in pos:
                A[pos[tgt], pos[srcid]] = w
    W = effective_interaction(hist, A, kernel, lambda0, min_docs=cfg["min_cluster_docs"])
    sizes = np.bincount(hist.clusters, minlength=len(ids)).tolist()
    clusters = {c["id"]: c for c in model["clusters"]}
    network = InteractionNetwork(A, W, ids, sizes, [clusters[c]["top_tokens"] for c in ids])
    network.to_json(outdir / "network.json")
    network.to_csv(outdir / "network.csv")
    metrics = {"n_documents": len(stream), "n_clusters": len(ids),
               "interaction": interaction_summary(network, kernel),
               "effective_histogram": effective_histogram(W)}
    if stats is not None:
        metrics["ingest"] = stats
    (outdir / "metrics.json").write_text(json.dumps(metrics, indent=1, default=_json_default))
    write_manifest(outdir, "fit", cfg, input_sha256=_sha256(src), time_scale=scale, engine=config.to_dict())
    return {"n_documents": len(stream), "n_clusters": len(ids), "output": str(outdir)}


def cmd_simulate(cfg: dict) -> dict:
    if not cfg.get("output"):
        raise UsageError("simulate needs --output")
    kw = {k: v for k, v in cfg.items() if k in SynthSpec.__dataclass_fields__ and v is not None}
    if cfg.get("kernel_means") or cfg.get("kernel_sigmas"):
        kw["kernel"] = RbfKernel(tuple(cfg["kernel_means"]), tuple(cfg["kernel_sigmas"]))
    spec = SynthSpec(**kw)
    data = generate(spec)
    docs, textual, temporal = data.documents, data.textual_labels, data.temporal_labels
    if cfg["decorrelate"]:
        docs, textual, temporal = decorrelate_labels(docs, temporal, cfg["decorrelate"],
                                                     spec.seed + 7919, data.vocab_distributions)
    outdir = Path(cfg["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "documents.jsonl", "w") as fh:
        for d in docs:
            fh.write(json.dumps({"t": d.time, "counts": {str(k): v for k, v in d.token_counts.items()}}) + "\n")
    with open(outdir / "truth.jsonl", "w") as fh:
        for i, (d, a, b) in enumerate(zip(docs, temporal, textual)):
            fh.write(json.dumps({"doc": i, "t": d.time, "temporal_cluster": int(a),
                                 "textual_cluster": int(b)}) + "\n")
    write_manifest(outdir, "simulate", cfg, weights=data.weights, measured=data.measured,
                   kernel=spec.kernel.to_dict())
    return {"n_documents": len(docs), "measured": data.measured, "output": str(outdir)}


def _read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        try:
            return [json.loads(line) for line in fh if line.strip()]
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"{path}: {exc}") from None


def cmd_eval(cfg: dict) -> dict:
    if not cfg.get("truth") or not cfg.get("assignments"):
        raise UsageError("eval needs --truth and --assignments")
    truth = _read_jsonl(cfg["truth"])
    pred = _read_jsonl(cfg["assignments"])
    if len(truth) != len(pred):
        raise PreconditionError(f"{len(truth)} truth rows but {len(pred)} assignments")
    try:
        labels = [int(p["cluster"]) for p in pred]
        out = {"n_documents": len(pred), "n_clusters": len(set(labels))}
        for key in ("temporal", "textual"):
            col = f"{key}_cluster"
            if all(col in t for t in truth):
                out[f"nmi_{key}"] = nmi([int(t[col]) for t in truth], labels)
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed label rows: {exc}") from None
    if cfg.get("output"):
        Path(cfg["output"]).write_text(json.dumps(out, indent=1))
    return out


def cmd_pcrp(cfg: dict) -> dict:
    if not cfg.get("n_draws"):
        raise UsageError("pcrp-sim needs --n")
    params = PcrpParams(cfg["r"], cfg["concentration"])
    n = cfg["n_draws"]
    marks = np.unique(np.geomspace(1, n, cfg["checkpoints"]).astype(int))
    cps, K, S = simulate_pcrp_batch(n, params, cfg["runs"], cfg["seed"], marks)
    mean_k, mean_s = K.mean(axis=0), S.mean(axis=0)
    if cfg.get("output"):
        with open(cfg["output"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "K", "sum_powered", "expected_K"])
            for m, k, sp in zip(cps, mean_k, mean_s):
                writer.writerow([int(m), float(k), float(sp), expected_cluster_count(int(m), params)])
    fit = cps >= min(100, n)
    out = {"n_draws": n, "r": params.r, "concentration": params.concentration, "runs": cfg["runs"],
           "final_K": float(mean_k[-1]), "expected_K": expected_cluster_count(n, params)}
    if fit.sum() >= 2:
        expected = [expected_cluster_count(int(m), params) for m in cps[fit]]
        out.update(K_slope=loglog_slope(cps[fit], mean_k[fit]), expected_K_slope=loglog_slope(cps[fit], expected),
                   sum_powered_slope=loglog_slope(cps[fit], mean_s[fit]),
                   expected_sum_powered_slope=params.growth_exponent)
    return out


# ---------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s}")


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpdhp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    f = sub.add_parser("fit", help="cluster a document stream")
    f.add_argument("--config")
    f.add_argument("--input", "-i")
    f.add_argument("--output", "-o")
    f.add_argument("--kernel", help=f"preset: {', '.join(PRESETS)}")
    f.add_argument("--kernel-means", type=_floats, help="comma-separated; overrides --kernel")
    f.add_argument("--kernel-sigmas", type=_floats)
    f.add_argument("--time-unit", choices=sorted(SECONDS), help="unit of the input timestamps")
    f.add_argument("--r", type=float)
    f.add_argument("--lambda0", type=float, help="defaults to the kernel preset's value")
    f.add_argument("--theta0", type=float, help="Dirichlet concentration per vocabulary entry")
    f.add_argument("--vocab-size", type=int)
    f.add_argument("--n-particles", type=int)
    f.add_argument("--n-samples", type=int)
    f.add_argument("--beta0", type=float)
    f.add_argument("--omega-thres", type=float)
    f.add_argument("--prune-age", type=float)
    f.add_argument("--univariate", type=_bool, nargs="?", const=True)
    f.add_argument("--seed", type=int)
    f.add_argument("--top-k", type=int)
    f.add_argument("--top-tokens", type=int)
    f.add_argument("--no-clean", dest="clean", action="store_const", const=False)
    f.add_argument("--min-score", type=float)
    f.add_argument("--lexicon", help="JSON list of tokens or token-to-id object")
    f.add_argument("--stopwords", help="stopword file replacing the bundled English list")
    f.add_argument("--min-cluster-docs", type=int)

    s = sub.add_parser("simulate", help="generate a labelled synthetic stream")
    s.add_argument("--config")
    s.add_argument("--output", "-o")
    for name, kind in SIM_KEYS.items():
        if name in ("output",):
            continue
        flag = "--" + name.replace("_", "-")
        if kind is bool:
            s.add_argument(flag, type=_bool, nargs="?", const=True)
        elif kind is list:
            s.add_argument(flag, type=_floats)
        else:
            s.add_argument(flag, type=kind)

    e = sub.add_parser("eval", help="NMI of assignments against a truth file")
    e.add_argument("--config")
    e.add_argument("--truth")
    e.add_argument("--assignments")
    e.add_argument("--output", "-o")

    c = sub.add_parser("pcrp-sim", help="simulate the powered Chinese restaurant process")
    c.add_argument("--config")
    c.add_argument("--n", "--n-draws", dest="n_draws", type=int)
    c.add_argument("--r", type=float)
    c.add_argument("--alpha", "--concentration", dest="concentration", type=float)
    c.add_argument("--runs", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--checkpoints", type=int)
    c.add_argument("--output", "-o", help="CSV of (N, K, sum_powered) checkpoints")
    return p


COMMANDS = {
    "fit": (cmd_fit, FIT_KEYS, FIT_DEFAULTS),
    "simulate": (cmd_simulate, SIM_KEYS, SIM_DEFAULTS),
    "eval": (cmd_eval, EVAL_KEYS, {}),
    "pcrp-sim": (cmd_pcrp, PCRP_KEYS, PCRP_DEFAULTS),
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("choose a subcommand: " + ", ".join(COMMANDS))
        func, keys, defaults = COMMANDS[args.command]
        result = func(resolve(args, keys, defaults))
    except (UsageError, ParameterError, FeasibilityError, StabilityError) as exc:
        print(f"mpdhp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, DomainError, OSError) as exc:
        print(f"mpdhp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateError, FloatingPointError) as exc:
        print(f"mpdhp: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(result, default=_json_default))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
