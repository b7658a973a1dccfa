"""LSTM sequence-to-sequence auto-/heteroencoder.

Encoder LSTM stack -> concatenated final (C, H) -> ReLU bottleneck ->
one ReLU dense layer per decoder C and H -> decoder LSTM stack (teacher
forced in training, stateful at generation time) -> softmax over the
charset.
"""

from __future__ import annotations

import copy
import csv
import logging
import random
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .datasets import Charset, Corpus, DataMode, index_batch, make_pairs
from .nn import checkpoint as ckpt
from .nn.layers import (
    DenseLayer,
    LSTMLayer,
    dense_backward,
    dense_forward,
    dense_logits,
    lstm_backward,
    lstm_forward_trace,
    lstm_step,
    softmax,
)
from .nn.loss import cross_entropy
from .nn.optim import Action, AdamState, TrainSchedule, adam_step, clip_global_norm, schedule_update

log = logging.getLogger(__name__)


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    charset: tuple[str, ...]
    max_len: int = 35
    enc_layers: int = 1
    enc_cells: int = 64
    bidirectional: bool = False
    bottleneck_dim: int = 64
    dec_layers: int = 1
    dec_cells: int = 64
    seed: int = 0
    mask_padding: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        if self.bottleneck_dim < 1:
            raise InvalidConfig("bottleneck_dim must be >= 1")
        if self.enc_layers < 1 or self.dec_layers < 1:
            raise InvalidConfig("need at least one encoder and one decoder layer")
        if self.enc_cells < 1 or self.dec_cells < 1:
            raise InvalidConfig("cell counts must be positive")
        if self.max_len < 3:
            raise InvalidConfig("max_len must leave room for start and end tokens")
        if len(self.charset) < 4 or tuple(self.charset[:3]) != ("<pad>", "<start>", "<end>"):
            raise InvalidConfig("charset must start with <pad>, <start>, <end> plus tokens")
        if self.dtype not in ("float32", "float64"):
            raise InvalidConfig("dtype must be float32 or float64")

    @property
    def directions(self) -> int:
        return 2 if self.bidirectional else 1

    @property
    def bottleneck_input(self) -> int:
        return self.enc_layers * self.directions * 2 * self.enc_cells

    @property
    def n_state_init_layers(self) -> int:
        return 2 * self.dec_layers

    def to_dict(self) -> dict:
        d = asdict(self)
        d["charset"] = list(self.charset)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["charset"] = tuple(d["charset"])
        return cls(**d)


# Architecture presets.
PRESETS = {
    "gdb-small": dict(enc_layers=1, enc_cells=64, bottleneck_dim=64, dec_layers=1, dec_cells=64, max_len=35),
    "gdb-2layer": dict(enc_layers=2, enc_cells=128, bottleneck_dim=64, dec_layers=2, dec_cells=128, max_len=35),
    "large-bidi": dict(
        enc_layers=2, enc_cells=128, bidirectional=True, bottleneck_dim=256,
        dec_layers=2, dec_cells=256, max_len=102,
    ),
}
# Training defaults per preset. The published lr 0.05 / batch 256 did not
# converge on the ~5k-molecule desk corpus; these are the desk-scale values.
PRESET_TRAINING = {
    "gdb-small": dict(lr=0.01, min_lr=5e-4, batch_size=128, epochs=200),
    "gdb-2layer": dict(lr=0.005, min_lr=2.5e-4, batch_size=128, epochs=200),
    "large-bidi": dict(lr=0.005, min_lr=1e-4, batch_size=256, epochs=300),
}


def preset_config(name: str, charset: Sequence[str], **overrides) -> ModelConfig:
    if name not in PRESETS:
        raise InvalidConfig(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ModelConfig(charset=tuple(charset), **{**PRESETS[name], **overrides})


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    v = len(cfg.charset)
    shapes: dict[str, tuple[int, ...]] = {}
    for layer in range(cfg.enc_layers):
        width = v if layer == 0 else cfg.directions * cfg.enc_cells
        for d in "fr"[: cfg.directions]:
            shapes[f"enc.{layer}.{d}.W"] = (width, 4 * cfg.enc_cells)
            shapes[f"enc.{layer}.{d}.U"] = (cfg.enc_cells, 4 * cfg.enc_cells)
            shapes[f"enc.{layer}.{d}.b"] = (4 * cfg.enc_cells,)
    shapes["bottleneck.W"] = (cfg.bottleneck_input, cfg.bottleneck_dim)
    shapes["bottleneck.b"] = (cfg.bottleneck_dim,)
    for layer in range(cfg.dec_layers):
        for s in "ch":
            shapes[f"init.{layer}.{s}.W"] = (cfg.bottleneck_dim, cfg.dec_cells)
            shapes[f"init.{layer}.{s}.b"] = (cfg.dec_cells,)
    for layer in range(cfg.dec_layers):
        width = v if layer == 0 else cfg.dec_cells
        shapes[f"dec.{layer}.W"] = (width, 4 * cfg.dec_cells)
        shapes[f"dec.{layer}.U"] = (cfg.dec_cells, 4 * cfg.dec_cells)
        shapes[f"dec.{layer}.b"] = (4 * cfg.dec_cells,)
    shapes["out.W"] = (cfg.dec_cells, v)
    shapes["out.b"] = (v,)
    return shapes


def _glorot(rng: np.random.Generator, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng: np.random.Generator, shape) -> np.ndarray:
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


@dataclass
class SeqModel:
    config: ModelConfig
    params: dict[str, np.ndarray]

    @property
    def charset(self) -> Charset:
        return Charset(self.config.charset)

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    @property
    def dtype(self):
        return np.dtype(self.config.dtype)

    def lstm(self, prefix: str) -> LSTMLayer:
        p = self.params
        return LSTMLayer(p[prefix + ".W"], p[prefix + ".U"], p[prefix + ".b"])

    def dense(self, prefix: str, activation: str) -> DenseLayer:
        return DenseLayer(self.params[prefix + ".W"], self.params[prefix + ".b"], activation)

    def copy(self) -> "SeqModel":
        return SeqModel(self.config, {k: v.copy() for k, v in self.params.items()})


def build_model(cfg: ModelConfig, rng: Union[np.random.Generator, int, None] = None) -> SeqModel:
    """Fresh model: Glorot-uniform input/dense weights, orthogonal recurrent
    weights, zero biases except a forget-gate bias of 1."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(cfg.seed if rng is None else rng)
    dtype = np.dtype(cfg.dtype)
    params = {}
    for name, shape in parameter_shapes(cfg).items():
        kind = name.rsplit(".", 1)[1]
        if kind == "b":
            arr = np.zeros(shape)
            if name.startswith(("enc.", "dec.")):
                n = shape[0] // 4
                arr[n : 2 * n] = 1.0
        elif kind == "U":
            n = shape[0]
            arr = np.concatenate([_orthogonal(rng, (n, n)) for _ in range(4)], axis=1)
        else:
            arr = _glorot(rng, shape)
        params[name] = arr.astype(dtype)
    model = SeqModel(cfg, params)
    log.debug("built model with %d parameters", model.n_params)
    return model


# ---------------------------------------------------------------- forward / backward


def _reverse_index(lengths: np.ndarray, width: int) -> np.ndarray:
    """Per-row time index that reverses the valid prefix and keeps padding in place."""
    t = np.arange(width)[None, :]
    L = lengths[:, None]
    return np.where(t < L, L - 1 - t, t)


def _encode_forward(model: SeqModel, src: np.ndarray, lengths: np.ndarray, keep: bool):
    cfg = model.config
    rows = np.arange(src.shape[0])[:, None]
    rev = _reverse_index(lengths, src.shape[1]) if cfg.bidirectional else None
    x = src
    finals = []
    traces = []
    for layer in range(cfg.enc_layers):
        outs = []
        layer_traces = []
        for d in "fr"[: cfg.directions]:
            lstm = model.lstm(f"enc.{layer}.{d}")
            xin = x if d == "f" else x[rows, rev]
            out, (h, c), trace = lstm_forward_trace(lstm, xin, None, lengths)
            if d == "r":
                out = out[rows, rev]
            outs.append(out)
            finals += [c, h]
            layer_traces.append(trace)
        x = outs[0] if len(outs) == 1 else np.concatenate(outs, axis=-1)
        traces.append(layer_traces)
    feats = np.concatenate(finals, axis=-1)
    z = dense_forward(model.dense("bottleneck", "relu"), feats)
    cache = (src, lengths, rev, traces, feats) if keep else None
    return z, cache


def _initial_states(model: SeqModel, z: np.ndarray):
    states = []
    for layer in range(model.config.dec_layers):
        c = dense_forward(model.dense(f"init.{layer}.c", "relu"), z)
        h = dense_forward(model.dense(f"init.{layer}.h", "relu"), z)
        states.append((h, c))
    return states


def forward_backward(model: SeqModel, src, src_len, tgt, *, need_grads: bool = True, loss_scale: float = 1.0):
    """Teacher-forced loss and (optionally) gradients for every parameter.

    ``src`` and ``tgt`` are padded id arrays that include start and end
    tokens; the decoder reads ``tgt[:, :-1]`` and predicts ``tgt[:, 1:]``.
    """
    cfg = model.config
    z, enc_cache = _encode_forward(model, src, src_len, keep=need_grads)
    states = _initial_states(model, z)

    dec_in = tgt[:, :-1]
    dec_tgt = tgt[:, 1:]
    x = dec_in
    dec_traces = []
    for layer in range(cfg.dec_layers):
        out, _, trace = lstm_forward_trace(model.lstm(f"dec.{layer}"), x, states[layer])
        dec_traces.append(trace)
        x = out
    top = x
    out_layer = model.dense("out", "softmax")
    probs = softmax(dense_logits(out_layer, top))
    mask = (dec_tgt != 0) if cfg.mask_padding else None
    loss, dlogits = cross_entropy(probs, dec_tgt, mask)
    if not need_grads:
        return loss * loss_scale, None
    if loss_scale != 1.0:
        dlogits *= dlogits.dtype.type(loss_scale)

    grads: dict[str, np.ndarray] = {}
    d_top, grads["out.W"], grads["out.b"] = dense_backward(out_layer, top, probs, dlogits, pre_activation=True)

    d_out = d_top
    d_init = [None] * cfg.dec_layers
    for layer in reversed(range(cfg.dec_layers)):
        lstm = model.lstm(f"dec.{layer}")
        d_seq, d_state, g = lstm_backward(lstm, dec_traces[layer], d_out)
        for k, v in g.items():
            grads[f"dec.{layer}.{k}"] = v
        d_init[layer] = d_state
        d_out = d_seq

    dz = np.zeros_like(z)
    for layer in range(cfg.dec_layers):
        dh0, dc0 = d_init[layer]
        h0, c0 = states[layer]
        for s, y, dy in (("c", c0, dc0), ("h", h0, dh0)):
            dense = model.dense(f"init.{layer}.{s}", "relu")
            dzi, grads[f"init.{layer}.{s}.W"], grads[f"init.{layer}.{s}.b"] = dense_backward(dense, z, y, dy)
            dz += dzi

    src, lengths, rev, traces, feats = enc_cache
    bott = model.dense("bottleneck", "relu")
    d_feats, grads["bottleneck.W"], grads["bottleneck.b"] = dense_backward(bott, feats, z, dz)

    n = cfg.enc_cells
    rows = np.arange(src.shape[0])[:, None]
    # finals were laid out per layer, per direction, as [c, h]
    d_finals = np.split(d_feats, cfg.enc_layers * cfg.directions * 2, axis=-1)
    d_out = None
    for layer in reversed(range(cfg.enc_layers)):
        d_x = None
        for k, d in enumerate("fr"[: cfg.directions]):
            slot = (layer * cfg.directions + k) * 2
            dc, dh = d_finals[slot], d_finals[slot + 1]
            d_o = None
            if d_out is not None:
                d_o = d_out[..., k * n : (k + 1) * n]
                if d == "r":
                    d_o = d_o[rows, rev]
            lstm = model.lstm(f"enc.{layer}.{d}")
            d_seq, _, g = lstm_backward(lstm, traces[layer][k], d_o, (dh, dc))
            for name, v in g.items():
                grads[f"enc.{layer}.{d}.{name}"] = v
            if d_seq is not None:
                if d == "r":
                    d_seq = d_seq[rows, rev]
                d_x = d_seq if d_x is None else d_x + d_seq
        d_out = d_x
    return loss * loss_scale, grads


def loss_and_grads(model: SeqModel, src_smiles: Sequence[str], tgt_smiles: Sequence[str], need_grads=True):
    """Convenience wrapper taking SMILES strings."""
    cs = model.charset
    src, src_len = index_batch(src_smiles, cs, model.config.max_len)
    tgt, _ = index_batch(tgt_smiles, cs, model.config.max_len)
    return forward_backward(model, src, src_len, tgt, need_grads=need_grads)


# ---------------------------------------------------------------- inference


def encode_batch(model: SeqModel, smiles: Sequence[str]) -> np.ndarray:
    src, lengths = index_batch(smiles, model.charset, model.config.max_len)
    z, _ = _encode_forward(model, src, lengths, keep=False)
    return z


def encode(model: SeqModel, smiles: Union[str, Sequence[str]], batch_size: int = 512) -> np.ndarray:
    """Bottleneck activations: ``[dim]`` for one SMILES, ``[n, dim]`` for a list."""
    if isinstance(smiles, str):
        return encode_batch(model, [smiles])[0]
    smiles = list(smiles)
    if not smiles:
        return np.zeros((0, model.config.bottleneck_dim), dtype=model.dtype)
    return np.concatenate([encode_batch(model, smiles[i : i + batch_size]) for i in range(0, len(smiles), batch_size)])


@dataclass
class Decoded:
    smiles: str
    ids: list[int]
    truncated: bool
    pad_before_end: bool
    probs: Optional[np.ndarray] = None  # [steps, charset]


def _decode(model: SeqModel, Z: np.ndarray, pick: Callable[[np.ndarray], np.ndarray], keep_probs: bool) -> list[Decoded]:
    cfg = model.config
    cs = model.charset
    Z = np.asarray(Z, dtype=model.dtype)
    batch = Z.shape[0]
    states = _initial_states(model, Z)
    lstms = [model.lstm(f"dec.{l}") for l in range(cfg.dec_layers)]
    out_layer = model.dense("out", "identity")
    tok = np.full(batch, cs.start, dtype=np.int64)
    done = np.zeros(batch, dtype=bool)
    seqs: list[list[int]] = [[] for _ in range(batch)]
    probs_log = []
    pad_early = np.zeros(batch, dtype=bool)
    for _ in range(cfg.max_len - 1):
        x = tok
        for layer, lstm in enumerate(lstms):
            x, states[layer] = lstm_step(lstm, x, states[layer])
        probs = softmax(dense_forward(out_layer, x))
        if keep_probs:
            probs_log.append(probs)
        tok = pick(probs)
        for b in np.flatnonzero(~done):
            t = int(tok[b])
            if t == cs.end:
                done[b] = True
            else:
                if t == cs.pad:
                    pad_early[b] = True
                seqs[b].append(t)
        if done.all():
            break
    if pad_early.any():
        log.warning("decoder emitted the pad token before the end token in %d of %d rows", int(pad_early.sum()), batch)
    stacked = np.stack(probs_log, axis=1) if keep_probs else None
    out = []
    for b in range(batch):
        p = None
        if stacked is not None:
            steps = len(seqs[b]) + (1 if done[b] else 0)
            p = stacked[b, :steps]
        out.append(Decoded(cs.decode(seqs[b]), seqs[b], not bool(done[b]), bool(pad_early[b]), p))
    return out


def decode_greedy_batch(model: SeqModel, Z: np.ndarray, keep_probs: bool = False) -> list[Decoded]:
    """Argmax decoding; ties go to the lowest token index."""
    return _decode(model, np.atleast_2d(Z), lambda p: p.argmax(axis=-1), keep_probs)


def decode_greedy(model: SeqModel, z: np.ndarray) -> str:
    return decode_greedy_batch(model, np.asarray(z)[None, :])[0].smiles


def _multinomial(rng: np.random.Generator, temperature: float):
    def pick(probs: np.ndarray) -> np.ndarray:
        logp = np.log(np.maximum(probs.astype(np.float64), 1e-300)) / temperature
        p = np.exp(logp - logp.max(axis=-1, keepdims=True))
        p /= p.sum(axis=-1, keepdims=True)
        u = rng.random(p.shape[0])[:, None]
        idx = (np.cumsum(p, axis=-1) < u).sum(axis=-1)
        return np.minimum(idx, p.shape[-1] - 1)

    return pick


def sample_batch(
    model: SeqModel,
    z: np.ndarray,
    n: int,
    temperature: float = 1.0,
    rng: Union[np.random.Generator, int, None] = None,
    keep_probs: bool = False,
) -> list[Decoded]:
    """``n`` multinomial decodes of one latent vector.

    Sampling is from ``softmax(logits / temperature)``; the recorded
    ``probs`` are those tempered distributions.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    Z = np.repeat(np.asarray(z)[None, :], n, axis=0)
    pick = _multinomial(rng, temperature)
    if not keep_probs:
        return _decode(model, Z, pick, False)
    recorded = []

    def pick_and_record(probs):
        logp = np.log(np.maximum(probs.astype(np.float64), 1e-300)) / temperature
        p = np.exp(logp - logp.max(axis=-1, keepdims=True))
        recorded.append(p / p.sum(axis=-1, keepdims=True))
        return pick(probs)

    out = _decode(model, Z, pick_and_record, False)
    stacked = np.stack(recorded, axis=1)
    for b, d in enumerate(out):
        d.probs = stacked[b, : len(d.ids) + (0 if d.truncated else 1)]
    return out


def decode_multinomial(model: SeqModel, z: np.ndarray, temperature: float = 1.0, rng=None) -> str:
    return sample_batch(model, z, 1, temperature, rng)[0].smiles


# ---------------------------------------------------------------- training


@dataclass
class TrainLog:
    rows: list[dict] = field(default_factory=list)

    FIELDS = ("epoch", "train_loss", "test_loss", "lr", "checkpoint")

    def append(self, **row) -> None:
        self.rows.append(row)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.FIELDS)
            for r in self.rows:
                w.writerow([r["epoch"], repr(r["train_loss"]), repr(r["test_loss"]), repr(r["lr"]), int(r["checkpoint"])])

    @property
    def final_train_loss(self) -> float:
        return self.rows[-1]["train_loss"]

    @property
    def best_test_loss(self) -> float:
        return min(r["test_loss"] for r in self.rows)


PairSource = Union[Corpus, Sequence[tuple[str, str]]]


def _epoch_pairs(source: PairSource, mode: DataMode, rng: random.Random) -> list[tuple[str, str]]:
    if isinstance(source, Corpus):
        return list(make_pairs(source, mode, rng))
    return list(source)


def _batches(model: SeqModel, pairs: list[tuple[str, str]], order: np.ndarray, batch_size: int):
    cs = model.charset
    for i in range(0, len(order), batch_size):
        chunk = [pairs[j] for j in order[i : i + batch_size]]
        src, src_len = index_batch([p[0] for p in chunk], cs, model.config.max_len)
        tgt, _ = index_batch([p[1] for p in chunk], cs, model.config.max_len)
        yield src, src_len, tgt, len(chunk)


def evaluate_loss(model: SeqModel, pairs: list[tuple[str, str]], batch_size: int = 256) -> float:
    total = 0.0
    count = 0
    for src, src_len, tgt, n in _batches(model, pairs, np.arange(len(pairs)), batch_size):
        loss, _ = forward_backward(model, src, src_len, tgt, need_grads=False)
        total += loss * n
        count += n
    return total / max(count, 1)


def train(
    model: SeqModel,
    train_data: PairSource,
    test_data: Optional[PairSource],
    mode: DataMode | str = DataMode.CAN2CAN,
    sched: TrainSchedule = TrainSchedule(),
    batch_size: int = 256,
    epochs: int = 300,
    seed: int = 0,
    clip_norm: Optional[float] = 5.0,
    checkpoint_path=None,
    restore_best: bool = True,
    on_epoch: Optional[Callable[[dict], None]] = None,
) -> TrainLog:
    """Mini-batch Adam training with teacher forcing.

    Enumerated sides of corpus inputs are regenerated every epoch from a
    seeded stream; test pairs are drawn once so the monitored loss is
    comparable across epochs. The learning rate follows ``sched`` on the
    test loss (train loss if there is no test data).

    Losses are means over batch * decoder steps, where each batch is padded
    only to its own longest target.
    """
    mode = DataMode(mode)
    rng = np.random.default_rng(seed)
    pair_rng = random.Random(seed)
    test_pairs = _epoch_pairs(test_data, mode, random.Random(seed + 1)) if test_data is not None else None
    opt = AdamState(lr=sched.initial_lr)
    history: list[float] = []
    best_params = None
    tlog = TrainLog()
    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        pairs = _epoch_pairs(train_data, mode, pair_rng)
        order = rng.permutation(len(pairs))
        total = 0.0
        for src, src_len, tgt, n in _batches(model, pairs, order, batch_size):
            loss, grads = forward_backward(model, src, src_len, tgt)
            clip_global_norm(grads, clip_norm)
            adam_step(opt, model.params, grads)
            total += loss * n
        train_loss = total / len(pairs)
        test_loss = evaluate_loss(model, test_pairs, batch_size) if test_pairs else float("nan")
        monitored = test_loss if test_pairs else train_loss
        history.append(monitored)
        action = schedule_update(sched, history)
        row = dict(epoch=epoch, train_loss=train_loss, test_loss=test_loss, lr=opt.lr, checkpoint=bool(action & Action.CHECKPOINT))
        tlog.append(**row)
        if action & Action.CHECKPOINT:
            best_params = {k: v.copy() for k, v in model.params.items()}
            if checkpoint_path is not None:
                save(model, checkpoint_path)
        if action & Action.REDUCE_LR:
            opt.lr = max(opt.lr * sched.lr_factor, sched.min_lr)
        log.info(
            "epoch %d train %.5f test %.5f lr %.3g (%.1fs)",
            epoch, train_loss, test_loss, row["lr"], time.perf_counter() - t0,
        )
        if on_epoch is not None:
            on_epoch(row)
        if action & Action.STOP:
            break
    if restore_best and best_params is not None:
        model.params.update(best_params)
    return tlog


# ---------------------------------------------------------------- persistence


def save(model: SeqModel, path, run: Optional[dict] = None) -> None:
    """``run`` is optional provenance (seed, config hash) stored in the manifest."""
    meta = {"kind": "seqmodel", "config": model.config.to_dict()}
    if run:
        meta["run"] = run
    ckpt.save(path, {k: model.params[k] for k in parameter_shapes(model.config)}, meta)


def load(path) -> SeqModel:
    tensors, meta = ckpt.load(path)
    if meta.get("kind") != "seqmodel" or "config" not in meta:
        raise ckpt.CorruptCheckpoint(f"{path}: manifest does not describe a sequence model")
    cfg = ModelConfig.from_dict(meta["config"])
    expected = parameter_shapes(cfg)
    if set(expected) != set(tensors):
        raise ckpt.VersionMismatch(f"{path}: tensor names do not match the stored config")
    for name, shape in expected.items():
        if tuple(tensors[name].shape) != shape:
            raise ckpt.VersionMismatch(f"{path}: {name} has shape {tensors[name].shape}, config implies {shape}")
    dtype = np.dtype(cfg.dtype)
    return SeqModel(cfg, {k: tensors[k].astype(dtype) for k in expected})
