"""Versioned, human-readable checkpoint format.

Grammar (UTF-8 text, one token stream):

    line 1:   rwkvlab-checkpoint v<INT>
    line 2:   config d_model=<INT> n_layers=<INT> vocab_size=<INT>
                     seed=<INT> layer_norm=<0|1>
    then, for each tensor in the fixed order below:
              tensor <NAME> <ROWS> <COLS>
              <ROWS lines of COLS whitespace-separated decimal floats>
    last:     end

Floats are written with shortest round-trip precision, so save -> load is
bit-exact.  Vectors are stored as 1 x d tensors.  Tensor order:
token_embedding, embed_norm.{gain,bias}, then per layer L (1-based)
layerL.{ln1,ln2}.{gain,bias}, layerL.time_mix.{w_r,w_k,w_v,w_o,decay,
bonus,mu_r,mu_k,mu_v}, layerL.channel_mix.{w_r,w_k,w_v,mu}.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError, VersionError
from .model import (
    ChannelMixParams,
    LayerNormParams,
    LayerParams,
    ModelConfig,
    RwkvParams,
    TimeMixParams,
)

FORMAT_VERSION = 1
_MAGIC = "rwkvlab-checkpoint"


def _named_tensors(params: RwkvParams) -> list[tuple[str, np.ndarray]]:
    out = [
        ("token_embedding", params.token_embedding),
        ("embed_norm.gain", params.embed_norm.gain),
        ("embed_norm.bias", params.embed_norm.bias),
    ]
    for i, layer in enumerate(params.layers, start=1):
        tm, cm = layer.time_mix, layer.channel_mix
        out += [
            (f"layer{i}.ln1.gain", layer.ln1.gain),
            (f"layer{i}.ln1.bias", layer.ln1.bias),
            (f"layer{i}.ln2.gain", layer.ln2.gain),
            (f"layer{i}.ln2.bias", layer.ln2.bias),
            (f"layer{i}.time_mix.w_r", tm.w_r),
            (f"layer{i}.time_mix.w_k", tm.w_k),
            (f"layer{i}.time_mix.w_v", tm.w_v),
            (f"layer{i}.time_mix.w_o", tm.w_o),
            (f"layer{i}.time_mix.decay", tm.decay),
            (f"layer{i}.time_mix.bonus", tm.bonus),
            (f"layer{i}.time_mix.mu_r", tm.mu_r),
            (f"layer{i}.time_mix.mu_k", tm.mu_k),
            (f"layer{i}.time_mix.mu_v", tm.mu_v),
            (f"layer{i}.channel_mix.w_r", cm.w_r),
            (f"layer{i}.channel_mix.w_k", cm.w_k),
            (f"layer{i}.channel_mix.w_v", cm.w_v),
            (f"layer{i}.channel_mix.mu", cm.mu),
        ]
    return out


def save_checkpoint(params: RwkvParams, config: ModelConfig | None = None) -> bytes:
    """Serialize (params, config); round trips bit-exactly."""
    cfg = config if config is not None else params.config
    lines = [
        f"{_MAGIC} v{FORMAT_VERSION}",
        "config d_model={} n_layers={} vocab_size={} seed={} layer_norm={}".format(
            cfg.d_model, cfg.n_layers, cfg.vocab_size, cfg.seed, int(cfg.layer_norm)
        ),
    ]
    for name, tensor in _named_tensors(params):
        mat = np.atleast_2d(np.asarray(tensor, dtype=np.float64))
        lines.append(f"tensor {name} {mat.shape[0]} {mat.shape[1]}")
        for row in mat:
            lines.append(" ".join(repr(float(x)) for x in row))
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ParseError("truncated checkpoint stream")


def _read_tensor(reader: _Reader, expect_name: str) -> np.ndarray:
    header = reader.next_line().split()
    if len(header) != 4 or header[0] != "tensor":
        raise ParseError(f"expected a tensor header, got {' '.join(header)!r}")
    if header[1] != expect_name:
        raise ParseError(f"expected tensor {expect_name!r}, found {header[1]!r}")
    try:
        rows, cols = int(header[2]), int(header[3])
    except ValueError as exc:
        raise ParseError(f"bad tensor shape in {expect_name!r} header") from exc
    values: list[float] = []
    need = rows * cols
    while len(values) < need:
        for tok in reader.next_line().split():
            try:
                values.append(float(tok))
            except ValueError as exc:
                raise ParseError(f"bad float {tok!r} in tensor {expect_name!r}") from exc
    if len(values) != need:
        raise ParseError(f"tensor {expect_name!r} has {len(values)} values, expected {need}")
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def load_checkpoint(data: bytes) -> tuple[RwkvParams, ModelConfig]:
    """Parse a checkpoint stream back into (params, config)."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("checkpoint is not valid UTF-8 text") from exc
    reader = _Reader(text)
    first = reader.next_line().split()
    if len(first) != 2 or first[0] != _MAGIC or not first[1].startswith("v"):
        raise ParseError("missing checkpoint magic line")
    try:
        version = int(first[1][1:])
    except ValueError as exc:
        raise ParseError("unreadable checkpoint version tag") from exc
    if version != FORMAT_VERSION:
        raise VersionError(f"checkpoint version {version} not supported (expected {FORMAT_VERSION})")

    cfg_parts = reader.next_line().split()
    if not cfg_parts or cfg_parts[0] != "config":
        raise ParseError("missing config line")
    fields: dict[str, int] = {}
    for part in cfg_parts[1:]:
        if "=" not in part:
            raise ParseError(f"bad config entry {part!r}")
        key, _, raw = part.partition("=")
        try:
            fields[key] = int(raw)
        except ValueError as exc:
            raise ParseError(f"bad config value {part!r}") from exc
    try:
        config = ModelConfig(
            d_model=fields["d_model"],
            n_layers=fields["n_layers"],
            vocab_size=fields["vocab_size"],
            seed=fields["seed"],
            layer_norm=bool(fields.get("layer_norm", 0)),
        )
    except KeyError as exc:
        raise ParseError(f"config line missing field {exc.args[0]!r}") from exc

    def vec(name: str) -> np.ndarray:
        mat = _read_tensor(reader, name)
        if mat.shape[0] != 1:
            raise ParseError(f"tensor {name!r} should be a vector")
        return mat[0]

    d = config.d_model
    embedding = _read_tensor(reader, "token_embedding")
    if embedding.shape != (config.vocab_size, d):
        raise ParseError("token_embedding shape disagrees with config")
    embed_norm = LayerNormParams(vec("embed_norm.gain"), vec("embed_norm.bias"))
    layers = []
    for i in range(1, config.n_layers + 1):
        ln1 = LayerNormParams(vec(f"layer{i}.ln1.gain"), vec(f"layer{i}.ln1.bias"))
        ln2 = LayerNormParams(vec(f"layer{i}.ln2.gain"), vec(f"layer{i}.ln2.bias"))
        tm = TimeMixParams(
            w_r=_read_tensor(reader, f"layer{i}.time_mix.w_r"),
            w_k=_read_tensor(reader, f"layer{i}.time_mix.w_k"),
            w_v=_read_tensor(reader, f"layer{i}.time_mix.w_v"),
            w_o=_read_tensor(reader, f"layer{i}.time_mix.w_o"),
            decay=vec(f"layer{i}.time_mix.decay"),
            bonus=vec(f"layer{i}.time_mix.bonus"),
            mu_r=vec(f"layer{i}.time_mix.mu_r"),
            mu_k=vec(f"layer{i}.time_mix.mu_k"),
            mu_v=vec(f"layer{i}.time_mix.mu_v"),
        )
        cm = ChannelMixParams(
            w_r=_read_tensor(reader, f"layer{i}.channel_mix.w_r"),
            w_k=_read_tensor(reader, f"layer{i}.channel_mix.w_k"),
            w_v=_read_tensor(reader, f"layer{i}.channel_mix.w_v"),
            mu=vec(f"layer{i}.channel_mix.mu"),
        )
        for w in (tm.w_r, tm.w_k, tm.w_v, tm.w_o, cm.w_r, cm.w_k, cm.w_v):
            if w.shape != (d, d):
                raise ParseError(f"layer {i} matrix shape {w.shape} disagrees with config")
        layers.append(LayerParams(ln1, ln2, tm, cm))
    if reader.next_line() != "end":
        raise ParseError("missing end marker")
    return RwkvParams(config, embedding, embed_norm, layers), config
