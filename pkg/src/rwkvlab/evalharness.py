"""End-to-end evaluation of sentence embedders on labeled pairs.

A split is a TSV file with header ``label<TAB>sentence1<TAB>sentence2``.
Each pair is scored by the cosine similarity of its two sentence
embeddings, wall-clock timed with a monotonic clock, and the per-method
Spearman correlation against the 0/1 labels goes into a report row of
shape (method, split, spearman, mean_pair_seconds, peak_bytes).

Pairs whose embedding degenerates to a zero vector (e.g. every token out
of vocabulary) are skipped, listed in the report metadata, and never
shorten the similarity/label vectors inconsistently.

The stack has no real tokenizer; sentences are mapped to token ids by
hashing whitespace tokens into the model vocabulary (FNV-1a 64), purely as
a deterministic stand-in.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

import numpy as np

from . import tracking
from .baseline import WordVectorTable, embed_sentence_avg, tokenize_whitespace
from .errors import (
    ConfigError,
    EmptyInputError,
    FormatError,
    ZeroVectorError,
)
from .model import LayerTrace, RwkvParams, encode
from .numerics import cosine_similarity, spearman
from .pooling import PoolStrategy, pool
from .tracking import tracked_alloc_stats  # noqa: F401  (re-exported op)

CSV_HEADER = "method,split,spearman,mean_pair_seconds,peak_bytes"

Embedder = Callable[[str], np.ndarray]


@dataclass
class SentencePairRecord:
    sentence1: str
    sentence2: str
    label: int


def load_pairs(lines: Iterable[str]) -> list[SentencePairRecord]:
    """Parse TSV pair records; FormatError carries the 1-based line number."""
    it = iter(lines)
    try:
        header = next(it)
    except StopIteration:
        raise FormatError("empty pair file", line=1) from None
    if header.rstrip("\r\n").split("\t") != ["label", "sentence1", "sentence2"]:
        raise FormatError("header must be label<TAB>sentence1<TAB>sentence2", line=1)
    records = []
    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected 3 tab-separated fields, got {len(parts)}", line=lineno)
        label_raw, s1, s2 = parts
        if label_raw not in ("0", "1"):
            raise FormatError(f"label must be 0 or 1, got {label_raw!r}", line=lineno)
        if not s1.strip() or not s2.strip():
            raise FormatError("sentences must be non-empty", line=lineno)
        records.append(SentencePairRecord(s1, s2, int(label_raw)))
    return records


def load_pairs_file(path: str) -> list[SentencePairRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_pairs(fh)


# ---------------------------------------------------------------------------
# Embedders
# ---------------------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def hash_token_ids(text: str, vocab_size: int) -> list[int]:
    """Stable hash of each whitespace token into the model vocabulary."""
    ids = []
    for tok in tokenize_whitespace(text):
        h = _FNV_OFFSET
        for byte in tok.encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
        ids.append(h % vocab_size)
    return ids


def make_rwkv_embedder(params: RwkvParams, layer: int, strategy: PoolStrategy) -> Embedder:
    """Pooled hidden states of one layer as the sentence embedding."""
    if not 1 <= layer <= params.config.n_layers:
        raise ConfigError(f"layer {layer} outside 1..{params.config.n_layers}")

    def embed(text: str) -> np.ndarray:
        trace = encode(params, hash_token_ids(text, params.config.vocab_size))
        return pool(trace.layer(layer), strategy)

    return embed


def make_wordvec_embedder(table: WordVectorTable, count_oov: bool = True) -> Embedder:
    def embed(text: str) -> np.ndarray:
        return embed_sentence_avg(table, text, count_oov=count_oov)

    return embed


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass
class ScoredPairs:
    similarities: np.ndarray
    labels: np.ndarray
    seconds: np.ndarray
    skipped: list[tuple[int, str]]  # (0-based record index, reason)


def _score_one(embedder: Embedder, record: SentencePairRecord):
    start = time.perf_counter()
    try:
        sim = cosine_similarity(embedder(record.sentence1), embedder(record.sentence2))
    except ZeroVectorError as exc:
        return None, str(exc), time.perf_counter() - start
    return sim, None, time.perf_counter() - start


def score_pairs(
    embedder: Embedder,
    records: Sequence[SentencePairRecord],
    threads: int = 1,
    warmup: int = 0,
) -> ScoredPairs:
    """Cosine similarity and wall time for every pair, in input order."""
    if not records:
        raise EmptyInputError("no pair records to score")
    for _ in range(warmup):
        _score_one(embedder, records[0])
    if threads <= 1:
        results = [_score_one(embedder, rec) for rec in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool_:
            results = list(pool_.map(lambda rec: _score_one(embedder, rec), records))
    sims, labels, seconds, skipped = [], [], [], []
    for idx, ((sim, reason, elapsed), rec) in enumerate(zip(results, records)):
        if sim is None:
            skipped.append((idx, reason))
            continue
        sims.append(sim)
        labels.append(float(rec.label))
        seconds.append(elapsed)
    return ScoredPairs(
        np.array(sims), np.array(labels), np.array(seconds), skipped
    )


def evaluate_split(similarities, labels) -> float:
    """Spearman correlation between similarity scores and 0/1 labels."""
    return spearman(similarities, labels)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class EvalRow:
    method: str
    split: str
    spearman: float
    mean_pair_seconds: float
    peak_bytes: int


@dataclass
class EvalReport:
    rows: list[EvalRow]
    metadata: dict = field(default_factory=dict)


def config_digest(params: RwkvParams, layers: Sequence[int], strategy: PoolStrategy) -> str:
    cfg = params.config
    payload = json.dumps(
        {
            "d_model": cfg.d_model,
            "n_layers": cfg.n_layers,
            "vocab_size": cfg.vocab_size,
            "seed": cfg.seed,
            "layer_norm": cfg.layer_norm,
            "layers": list(layers),
            "pooling": strategy.kind,
            "q": None if strategy.q is None else strategy.q.tolist(),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def write_report(report: EvalReport, format: str = "csv") -> str:
    """Render a report; csv is rows-only, json carries the metadata too."""
    if format == "csv":
        lines = [CSV_HEADER]
        for row in report.rows:
            lines.append(
                f"{row.method},{row.split},{row.spearman:.4f},"
                f"{row.mean_pair_seconds:.9f},{row.peak_bytes}"
            )
        return "\n".join(lines) + "\n"
    if format == "json":
        payload = {
            "metadata": report.metadata,
            "rows": [
                {
                    "method": r.method,
                    "split": r.split,
                    "spearman": r.spearman,
                    "mean_pair_seconds": r.mean_pair_seconds,
                    "peak_bytes": r.peak_bytes,
                }
                for r in report.rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ConfigError(f"unknown report format {format!r}")


def parse_report(text: str, format: str = "csv") -> EvalReport:
    if format == "csv":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != CSV_HEADER:
            raise FormatError("bad report header", line=1)
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 5:
                raise FormatError("expected 5 comma-separated fields", line=lineno)
            rows.append(
                EvalRow(parts[0], parts[1], float(parts[2]), float(parts[3]), int(parts[4]))
            )
        return EvalReport(rows)
    if format == "json":
        payload = json.loads(text)
        rows = [
            EvalRow(
                r["method"], r["split"], float(r["spearman"]),
                float(r["mean_pair_seconds"]), int(r["peak_bytes"]),
            )
            for r in payload["rows"]
        ]
        return EvalReport(rows, payload.get("metadata", {}))
    raise ConfigError(f"unknown report format {format!r}")


# ---------------------------------------------------------------------------
# Layer sweep
# ---------------------------------------------------------------------------


@dataclass
class _PairOutcome:
    encode_seconds: float
    per_layer: dict[int, tuple[float | None, str | None, float]]  # sim, skip reason, seconds


def _sweep_pair(
    params: RwkvParams,
    layers: Sequence[int],
    strategy: PoolStrategy,
    record: SentencePairRecord,
) -> _PairOutcome:
    vocab = params.config.vocab_size
    start = time.perf_counter()
    trace1 = encode(params, hash_token_ids(record.sentence1, vocab))
    trace2 = encode(params, hash_token_ids(record.sentence2, vocab))
    encode_seconds = time.perf_counter() - start
    per_layer = {}
    for layer in layers:
        t0 = time.perf_counter()
        try:
            sim = cosine_similarity(
                pool(trace1.layer(layer), strategy), pool(trace2.layer(layer), strategy)
            )
            per_layer[layer] = (sim, None, time.perf_counter() - t0)
        except ZeroVectorError as exc:
            per_layer[layer] = (None, str(exc), time.perf_counter() - t0)
    return _PairOutcome(encode_seconds, per_layer)


def layer_sweep(
    params: RwkvParams,
    records: Sequence[SentencePairRecord],
    layers: Sequence[int],
    strategy: PoolStrategy,
    *,
    split_name: str = "validation",
    word_vectors: WordVectorTable | None = None,
    seed: int | None = None,
    threads: int = 1,
    warmup: int = 0,
) -> EvalReport:
    """One report row per requested layer plus one per registered baseline.

    Each sentence is encoded once; the captured trace is reused for every
    requested layer.  Every layer row's time includes the shared encode
    cost (that is what producing that row from scratch would cost).
    """
    if not records:
        raise EmptyInputError("no pair records to sweep")
    layers = list(layers)
    if not layers:
        raise ConfigError("layer sweep needs a non-empty layer list")
    for layer in layers:
        if not 1 <= layer <= params.config.n_layers:
            raise ConfigError(f"layer {layer} outside 1..{params.config.n_layers}")

    for _ in range(warmup):
        _sweep_pair(params, layers, strategy, records[0])

    window = tracking.tracker.window() if tracking.tracker.enabled else None
    if window:
        window.__enter__()
    if threads <= 1:
        outcomes = [_sweep_pair(params, layers, strategy, rec) for rec in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool_:
            outcomes = list(
                pool_.map(lambda rec: _sweep_pair(params, layers, strategy, rec), records)
            )
    if window:
        window.__exit__(None, None, None)
    rwkv_peak = window.peak if window else 0

    rows = []
    skipped_meta: dict[str, list[int]] = {}
    for layer in layers:
        sims, labels, secs = [], [], []
        skipped = []
        for idx, (outcome, rec) in enumerate(zip(outcomes, records)):
            sim, reason, layer_seconds = outcome.per_layer[layer]
            if sim is None:
                skipped.append(idx)
                continue
            sims.append(sim)
            labels.append(float(rec.label))
            secs.append(outcome.encode_seconds + layer_seconds)
        method = f"rwkv_layer_{layer}"
        if skipped:
            skipped_meta[method] = skipped
        rows.append(
            EvalRow(
                method=method,
                split=split_name,
                spearman=evaluate_split(np.array(sims), np.array(labels)),
                mean_pair_seconds=float(np.mean(secs)),
                peak_bytes=rwkv_peak,
            )
        )

    if word_vectors is not None:
        embedder = make_wordvec_embedder(word_vectors)
        window = tracking.tracker.window() if tracking.tracker.enabled else None
        if window:
            window.__enter__()
        scored = score_pairs(embedder, records, threads=threads, warmup=warmup)
        if window:
            window.__exit__(None, None, None)
        if scored.skipped:
            skipped_meta["glove_baseline"] = [idx for idx, _ in scored.skipped]
        rows.append(
            EvalRow(
                method="glove_baseline",
                split=split_name,
                spearman=evaluate_split(scored.similarities, scored.labels),
                mean_pair_seconds=float(np.mean(scored.seconds)),
                peak_bytes=window.peak if window else 0,
            )
        )

    metadata = {
        "seed": seed,
        "config_digest": config_digest(params, layers, strategy),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "n_records": len(records),
        "skipped": skipped_meta,
        "threads": threads,
    }
    return EvalReport(rows, metadata)
