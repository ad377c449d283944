"""Command-line interface.

Subcommands: embed, eval, sweep, bench, diagnose.  Every run is seeded
(default 42) and the seed is echoed into report metadata, so no run is
silently unseeded.  Option precedence is flags > config file > defaults;
the config file is plain ``key = value`` text with keys spelled like the
long flags with dashes replaced by underscores.

Exit codes: 0 success, 1 runtime failure (missing/bad files), 2 usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import tracking
from .baseline import load_word_vectors_file
from .checkpoint import load_checkpoint
from .diagnostics import collect_profile, scaling_benchmark
from .errors import ConfigError, RwkvLabError
from .evalharness import (
    EvalReport,
    EvalRow,
    config_digest,
    evaluate_split,
    hash_token_ids,
    layer_sweep,
    load_pairs_file,
    make_rwkv_embedder,
    make_wordvec_embedder,
    score_pairs,
    write_report,
)
from .model import ModelConfig, RwkvParams, init_model
from .pooling import PoolStrategy
from .rng import SeededRng

DEFAULT_LAYERS = "1,3,5,7,9,11"
DEFAULTS = {
    "seed": 42,
    "d_model": 16,
    "n_layers": 12,
    "vocab_size": 256,
    "layer_norm": "off",
    "layers": DEFAULT_LAYERS,
    "layer": 1,
    "pooling": "average",
    "pool_seed": 42,
    "threads": 1,
    "warmup": 0,
    "format": "csv",
    "split_name": "validation",
    "method": "rwkv",
    "track_memory": "on",
    "bins": 64,
    "max_sentences": 20,
    "lengths": "64,128,256,512,1024",
    "reps": 5,
}

_INT_KEYS = {
    "seed", "d_model", "n_layers", "vocab_size", "layer", "pool_seed",
    "threads", "warmup", "bins", "max_sentences", "reps",
}


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config file {path} line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, key: str):
    """flags > config file > defaults; argparse stores None for unset flags."""
    value = getattr(args, key, None)
    if value is None:
        value = getattr(args, "_config_values", {}).get(key)
    if value is None:
        value = DEFAULTS.get(key)
    if value is not None and key in _INT_KEYS:
        try:
            value = int(value)
        except ValueError:
            raise ConfigError(f"option {key} expects an integer, got {value!r}") from None
    return value


def _parse_layer_list(raw: str) -> list[int]:
    try:
        layers = [int(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad layer list {raw!r}") from None
    if not layers:
        raise ConfigError("layer list is empty")
    return layers


def _on_off(key: str, raw) -> bool:
    raw = str(raw).lower()
    if raw in ("on", "true", "1", "yes"):
        return True
    if raw in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"option {key} expects on/off, got {raw!r}")


def _build_model(args: argparse.Namespace) -> tuple[RwkvParams, int]:
    seed = _resolve(args, "seed")
    checkpoint_path = getattr(args, "checkpoint", None) or getattr(
        args, "_config_values", {}
    ).get("checkpoint")
    explicit_config = any(
        getattr(args, key, None) is not None
        for key in ("d_model", "n_layers", "vocab_size", "layer_norm")
    )
    if checkpoint_path and explicit_config:
        raise ConfigError("give either --checkpoint or model config flags, not both")
    if checkpoint_path:
        try:
            blob = Path(checkpoint_path).read_bytes()
        except OSError as exc:
            raise RuntimeError(f"cannot read checkpoint {checkpoint_path}: {exc}") from exc
        params, _ = load_checkpoint(blob)
        return params, seed
    config = ModelConfig(
        d_model=_resolve(args, "d_model"),
        n_layers=_resolve(args, "n_layers"),
        vocab_size=_resolve(args, "vocab_size"),
        seed=seed,
        layer_norm=_on_off("layer_norm", _resolve(args, "layer_norm")),
    )
    return init_model(config), seed


def _build_strategy(args: argparse.Namespace, d_model: int) -> PoolStrategy:
    kind = str(_resolve(args, "pooling"))
    aliases = {"last": "last_token"}
    kind = aliases.get(kind, kind)
    if kind != "adaptive":
        return PoolStrategy(kind)
    q = SeededRng(_resolve(args, "pool_seed")).normal_array(d_model)
    return PoolStrategy("adaptive", q=q)


def _setup_tracking(args: argparse.Namespace) -> bool:
    enabled = _on_off("track_memory", _resolve(args, "track_memory"))
    tracking.tracker.reset()
    if enabled:
        tracking.tracker.enable()
    else:
        tracking.tracker.disable()
    return enabled


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise RuntimeError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_embed(args: argparse.Namespace) -> int:
    _setup_tracking(args)
    params, _ = _build_model(args)
    strategy = _build_strategy(args, params.config.d_model)
    texts: list[str] = []
    if args.text:
        texts.extend(args.text)
    if args.input:
        texts.extend(ln for ln in _read_lines(args.input) if ln.strip())
    if not texts:
        raise ConfigError("embed needs --text or --input")
    method = str(_resolve(args, "method"))
    if method == "glove":
        wv_path = args.word_vectors or getattr(args, "_config_values", {}).get("word_vectors")
        if not wv_path:
            raise ConfigError("--method glove needs --word-vectors")
        embedder = make_wordvec_embedder(load_word_vectors_file(wv_path))
    elif method == "rwkv":
        embedder = make_rwkv_embedder(params, _resolve(args, "layer"), strategy)
    else:
        raise ConfigError(f"unknown method {method!r}")
    out = [{"text": t, "embedding": [float(x) for x in embedder(t)]} for t in texts]
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _single_method_report(args: argparse.Namespace) -> EvalReport:
    params, seed = _build_model(args)
    strategy = _build_strategy(args, params.config.d_model)
    records = load_pairs_file(args.data)
    method = str(_resolve(args, "method"))
    layer = _resolve(args, "layer")
    if method == "glove":
        wv_path = args.word_vectors or getattr(args, "_config_values", {}).get("word_vectors")
        if not wv_path:
            raise ConfigError("--method glove needs --word-vectors")
        embedder = make_wordvec_embedder(load_word_vectors_file(wv_path))
        method_name = "glove_baseline"
    elif method == "rwkv":
        embedder = make_rwkv_embedder(params, layer, strategy)
        method_name = f"rwkv_layer_{layer}"
    else:
        raise ConfigError(f"unknown method {method!r}")
    window = tracking.tracker.window() if tracking.tracker.enabled else None
    if window:
        window.__enter__()
    scored = score_pairs(
        embedder, records, threads=_resolve(args, "threads"), warmup=_resolve(args, "warmup")
    )
    if window:
        window.__exit__(None, None, None)
    row = EvalRow(
        method=method_name,
        split=str(_resolve(args, "split_name")),
        spearman=evaluate_split(scored.similarities, scored.labels),
        mean_pair_seconds=float(scored.seconds.mean()),
        peak_bytes=window.peak if window else 0,
    )
    metadata = {
        "seed": seed,
        "config_digest": config_digest(params, [layer], strategy),
        "n_records": len(records),
        "skipped": {method_name: [i for i, _ in scored.skipped]} if scored.skipped else {},
        "threads": _resolve(args, "threads"),
    }
    return EvalReport([row], metadata)


def _cmd_eval(args: argparse.Namespace) -> int:
    _setup_tracking(args)
    report = _single_method_report(args)
    _emit(write_report(report, str(_resolve(args, "format"))), args.report)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    _setup_tracking(args)
    params, seed = _build_model(args)
    strategy = _build_strategy(args, params.config.d_model)
    records = load_pairs_file(args.data)
    layers = _parse_layer_list(_resolve(args, "layers"))
    wv_path = args.word_vectors or getattr(args, "_config_values", {}).get("word_vectors")
    table = load_word_vectors_file(wv_path) if wv_path else None
    report = layer_sweep(
        params,
        records,
        layers,
        strategy,
        split_name=str(_resolve(args, "split_name")),
        word_vectors=table,
        seed=seed,
        threads=_resolve(args, "threads"),
        warmup=_resolve(args, "warmup"),
    )
    _emit(write_report(report, str(_resolve(args, "format"))), args.report)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    params, seed = _build_model(args)
    lengths = [int(tok) for tok in str(_resolve(args, "lengths")).split(",") if tok.strip()]
    result = scaling_benchmark(params, lengths, reps=_resolve(args, "reps"), seed=seed)
    payload = {
        "lengths": result.lengths,
        "seconds": result.seconds,
        "exponents": result.exponents,
        "seed": seed,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    _setup_tracking(args)
    params, seed = _build_model(args)
    sentences: list[str] = []
    if args.data:
        for rec in load_pairs_file(args.data):
            sentences.extend((rec.sentence1, rec.sentence2))
    if args.sentences:
        sentences.extend(ln for ln in _read_lines(args.sentences) if ln.strip())
    if not sentences:
        raise ConfigError("diagnose needs --data or --sentences")
    sentences = sentences[: _resolve(args, "max_sentences")]
    vocab = params.config.vocab_size
    token_seqs = [hash_token_ids(s, vocab) for s in sentences]
    bench_lengths = None
    if args.bench_lengths:
        bench_lengths = [int(tok) for tok in args.bench_lengths.split(",") if tok.strip()]
    profile = collect_profile(
        params, token_seqs, bins=_resolve(args, "bins"), bench_lengths=bench_lengths
    )
    payload = profile.to_dict()
    payload["seed"] = seed
    payload["n_sentences"] = len(sentences)
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        def curve(name: str, header: str, rows: list[str]) -> None:
            (out_dir / name).write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
        curve("entropy.csv", "layer,entropy_bits",
              [f"{i},{v!r}" for i, v in enumerate(payload["entropy_bits"], start=1)])
        curve("gradient_norms.csv", "layer,grad_norm",
              [f"{i},{v!r}" for i, v in enumerate(payload["gradient_norms"], start=1)])
        curve("diagonality.csv", "layer,offdiag_over_diag",
              [f"{i},{v!r}" for i, v in enumerate(payload["diagonality"], start=1)])
        curve("sv_decay.csv", "matrix,decay_rate",
              [f"{k},{v!r}" for k, v in sorted(payload["sv_decay"].items())])
        if payload["scaling_exponents"]:
            curve("scaling.csv", "form,exponent",
                  [f"{k},{v!r}" for k, v in sorted(payload["scaling_exponents"].items())])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--seed", type=int, help="run seed (default 42), echoed into metadata")
    p.add_argument("--checkpoint", help="load model parameters from a checkpoint file")
    p.add_argument("--d-model", dest="d_model", type=int, help="model width (default 16)")
    p.add_argument("--n-layers", dest="n_layers", type=int, help="layer count (default 12)")
    p.add_argument("--vocab-size", dest="vocab_size", type=int, help="vocabulary size (default 256)")
    p.add_argument("--layer-norm", dest="layer_norm", choices=["on", "off"],
                   help="pre-block normalization (default off: pure block formulas)")
    p.add_argument("--threads", type=int, help="worker threads for pair scoring (default 1)")
    p.add_argument("--track-memory", dest="track_memory", choices=["on", "off"],
                   help="account bytes of tracked numeric buffers (default on)")
    p.add_argument("--pooling", choices=["average", "max", "last", "adaptive"],
                   help="pooling strategy (default average)")
    p.add_argument("--pool-seed", dest="pool_seed", type=int,
                   help="seed of the adaptive pooling query vector (default 42)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwkvlab",
        description="Desk-scale laboratory for linear-attention sentence embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed sentences and print JSON vectors")
    _add_shared(p)
    p.add_argument("--text", action="append", help="sentence to embed (repeatable)")
    p.add_argument("--input", help="file with one sentence per line")
    p.add_argument("--method", choices=["rwkv", "glove"], help="embedder (default rwkv)")
    p.add_argument("--layer", type=int, help="layer to pool (default 1)")
    p.add_argument("--word-vectors", dest="word_vectors", help="word-vector text file")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("eval", help="score one embedder on a pair file")
    _add_shared(p)
    p.add_argument("--data", required=True, help="TSV pair file")
    p.add_argument("--split-name", dest="split_name", help="split label for the report")
    p.add_argument("--method", choices=["rwkv", "glove"], help="embedder (default rwkv)")
    p.add_argument("--layer", type=int, help="layer to pool (default 1)")
    p.add_argument("--word-vectors", dest="word_vectors", help="word-vector text file")
    p.add_argument("--warmup", type=int, help="untimed warmup pair scorings (default 0)")
    p.add_argument("--report", help="report output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="report format (default csv)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="evaluate several layers plus the baseline")
    _add_shared(p)
    p.add_argument("--data", required=True, help="TSV pair file")
    p.add_argument("--split-name", dest="split_name", help="split label for the report")
    p.add_argument("--layers", help=f"comma-separated layer list (default {DEFAULT_LAYERS})")
    p.add_argument("--word-vectors", dest="word_vectors",
                   help="word-vector text file; adds the baseline row")
    p.add_argument("--warmup", type=int, help="untimed warmup pair scorings (default 0)")
    p.add_argument("--report", help="report output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="report format (default csv)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="wall-clock scaling of recurrence vs attention")
    _add_shared(p)
    p.add_argument("--lengths", help="comma-separated sequence lengths (default 64..1024)")
    p.add_argument("--reps", type=int, help="timing repetitions per point (default 5)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("diagnose", help="entropy, gradient, diagonality and spectrum probes")
    _add_shared(p)
    p.add_argument("--data", help="TSV pair file supplying sentences")
    p.add_argument("--sentences", help="file with one sentence per line")
    p.add_argument("--bins", type=int, help="entropy histogram bins (default 64)")
    p.add_argument("--max-sentences", dest="max_sentences", type=int,
                   help="cap on profiled sentences (default 20)")
    p.add_argument("--bench-lengths", dest="bench_lengths",
                   help="run the scaling benchmark at these lengths too")
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.add_argument("--out-dir", dest="out_dir", help="directory for per-curve CSV files")
    p.set_defaults(func=_cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config_values = _read_config_file(args.config) if args.config else {}
        return args.func(args)
    except ConfigError as exc:
        print(f"rwkvlab: {exc}", file=sys.stderr)
        return 2
    except (RwkvLabError, RuntimeError, OSError) as exc:
        print(f"rwkvlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
