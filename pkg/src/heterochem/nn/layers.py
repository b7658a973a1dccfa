"""Dense and LSTM layers with hand-written forward and backward passes.

Sequence inputs are either float arrays ``[batch, time, in]`` or integer
token arrays ``[batch, time]``; the latter is treated as a one-hot input
and turned into a row gather of the input weights, which is bit-identical
to multiplying by the one-hot matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class ShapeMismatch(ValueError):
    pass


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class DenseLayer:
    W: np.ndarray  # [in, out]
    b: np.ndarray  # [out]
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ("identity", "relu", "softmax"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ShapeMismatch(f"inconsistent dense shapes {self.W.shape}, {self.b.shape}")


def _activate(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(pre, 0)
    if activation == "softmax":
        return softmax(pre)
    return pre


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != layer.W.shape[0]:
        raise ShapeMismatch(f"input width {x.shape[-1]} != layer input {layer.W.shape[0]}")
    return _activate(x @ layer.W + layer.b, layer.activation)


def dense_logits(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """Pre-activation output, used when softmax is fused into the loss."""
    if x.shape[-1] != layer.W.shape[0]:
        raise ShapeMismatch(f"input width {x.shape[-1]} != layer input {layer.W.shape[0]}")
    return x @ layer.W + layer.b


def dense_backward(
    layer: DenseLayer, x: np.ndarray, y: np.ndarray, dy: np.ndarray, *, pre_activation: bool = False
):
    """Gradients of a dense layer.

    ``y`` is the layer output from :func:`dense_forward`. With
    ``pre_activation=True`` the incoming ``dy`` is already w.r.t. the
    pre-activation (e.g. softmax fused into cross-entropy).

    Returns ``(dx, dW, db)``.
    """
    if pre_activation or layer.activation == "identity":
        dpre = dy
    elif layer.activation == "relu":
        dpre = dy * (y > 0)
    else:
        dpre = (dy - (dy * y).sum(axis=-1, keepdims=True)) * y
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dpre.reshape(-1, dpre.shape[-1])
    dW = x2.T @ d2
    db = d2.sum(axis=0)
    dx = (d2 @ layer.W.T).reshape(x.shape)
    return dx, dW, db


@dataclass
class LSTMLayer:
    """LSTM with gate blocks packed as (input, forget, candidate, output).

    W: [in, 4*cells], U: [cells, 4*cells], b: [4*cells].
    """

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        h = self.U.shape[0]
        if self.U.shape != (h, 4 * h) or self.W.shape[1] != 4 * h or self.b.shape != (4 * h,):
            raise ShapeMismatch(
                f"inconsistent LSTM shapes W{self.W.shape} U{self.U.shape} b{self.b.shape}"
            )

    @property
    def cells(self) -> int:
        return self.U.shape[0]

    @property
    def input_size(self) -> int:
        return self.W.shape[0]

    def gate(self, name: str, which: str = "W") -> np.ndarray:
        k = "ifco".index(name)
        h = self.cells
        return getattr(self, which)[..., k * h : (k + 1) * h]


def _input_projection(layer: LSTMLayer, x: np.ndarray) -> np.ndarray:
    if np.issubdtype(x.dtype, np.integer):
        return layer.W[x]
    if x.shape[-1] != layer.input_size:
        raise ShapeMismatch(f"input width {x.shape[-1]} != LSTM input {layer.input_size}")
    return x @ layer.W


def _cell(layer: LSTMLayer, xw: np.ndarray, h: np.ndarray, c: np.ndarray):
    n = layer.cells
    z = xw + h @ layer.U + layer.b
    i = sigmoid(z[:, :n])
    f = sigmoid(z[:, n : 2 * n])
    g = np.tanh(z[:, 2 * n : 3 * n])
    o = sigmoid(z[:, 3 * n :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    return o * tc, c_new, (i, f, g, o, tc)


def _zero_state(layer: LSTMLayer, batch: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    z = np.zeros((batch, layer.cells), dtype=dtype)
    return z, z.copy()


def lstm_step(layer: LSTMLayer, x: np.ndarray, state=None):
    """One recurrence step. ``x`` is ``[batch, in]`` floats or ``[batch]`` ints.

    Returns ``(y, (h, c))`` with ``y is h``.
    """
    batch = x.shape[0]
    if state is None:
        state = _zero_state(layer, batch, layer.U.dtype)
    h, c = state
    if h.shape != (batch, layer.cells) or c.shape != h.shape:
        raise ShapeMismatch("state shape does not match batch/cells")
    h, c, _ = _cell(layer, _input_projection(layer, x), h, c)
    return h, (h, c)


@dataclass
class LSTMTrace:
    x: np.ndarray
    h0: np.ndarray
    c0: np.ndarray
    lengths: Optional[np.ndarray]
    hs: np.ndarray  # [T, B, H] hidden after each step
    cs: np.ndarray
    gates: list = field(repr=False)


def lstm_forward_trace(layer: LSTMLayer, seq: np.ndarray, init=None, lengths=None):
    """Full-sequence forward pass that keeps everything needed for BPTT.

    With ``lengths`` the returned final state of row ``b`` is the state
    after ``lengths[b]`` steps rather than after the whole padded sequence.
    Returns ``(outputs [B, T, H], (h, c), trace)``.
    """
    batch, steps = seq.shape[0], seq.shape[1]
    if init is None:
        init = _zero_state(layer, batch, layer.U.dtype)
    h, c = init
    if h.shape != (batch, layer.cells) or c.shape != h.shape:
        raise ShapeMismatch("initial state shape does not match batch/cells")
    h0, c0 = h, c
    hs = np.empty((steps, batch, layer.cells), dtype=layer.U.dtype)
    cs = np.empty_like(hs)
    gates = []
    for t in range(steps):
        h, c, g = _cell(layer, _input_projection(layer, seq[:, t]), h, c)
        hs[t] = h
        cs[t] = c
        gates.append(g)
    outputs = hs.transpose(1, 0, 2)
    if lengths is None:
        final = (h, c)
    else:
        rows = np.arange(batch)
        idx = np.asarray(lengths) - 1
        final = (hs[idx, rows], cs[idx, rows])
    trace = LSTMTrace(seq, h0, c0, None if lengths is None else np.asarray(lengths), hs, cs, gates)
    return outputs, final, trace


def lstm_forward(layer: LSTMLayer, seq: np.ndarray, init=None, lengths=None):
    """Returns ``(outputs [B, T, H], (h, c))``."""
    outputs, final, _ = lstm_forward_trace(layer, seq, init, lengths)
    return outputs, final


def lstm_backward(layer: LSTMLayer, trace: LSTMTrace, d_outputs=None, d_final=None, input_size=None):
    """Backprop through time.

    Parameters
    ----------
    d_outputs : [B, T, H] or None
        Gradient w.r.t. the per-step outputs.
    d_final : (dh, dc) or None
        Gradient w.r.t. the final state returned by the forward pass.

    Returns
    -------
    d_seq, (dh0, dc0), grads
        ``d_seq`` is None for integer token inputs. ``grads`` has keys W, U, b.
    """
    hs, cs = trace.hs, trace.cs
    steps, batch, n = hs.shape
    dtype = hs.dtype
    dz_all = np.empty((steps, batch, 4 * n), dtype=dtype)
    dh_next = np.zeros((batch, n), dtype=dtype)
    dc_next = np.zeros((batch, n), dtype=dtype)
    final_step = None
    if d_final is not None:
        if trace.lengths is None:
            final_step = np.full(batch, steps - 1)
        else:
            final_step = trace.lengths - 1
    for t in range(steps - 1, -1, -1):
        i, f, g, o, tc = trace.gates[t]
        dh = dh_next if d_outputs is None else dh_next + d_outputs[:, t]
        dc = dc_next
        if final_step is not None:
            hit = (final_step == t)[:, None]
            if hit.any():
                dh = dh + hit * d_final[0]
                dc = dc + hit * d_final[1]
        c_prev = cs[t - 1] if t > 0 else trace.c0
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = dz_all[t]
        dz[:, :n] = dc * g * i * (1.0 - i)
        dz[:, n : 2 * n] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * n : 3 * n] = dc * i * (1.0 - g * g)
        dz[:, 3 * n :] = dh * tc * o * (1.0 - o)
        dh_next = dz @ layer.U.T
        dc_next = dc * f

    h_prev = np.concatenate([trace.h0[None], hs[:-1]], axis=0)
    dz2 = dz_all.reshape(-1, 4 * n)
    dU = h_prev.reshape(-1, n).T @ dz2
    db = dz2.sum(axis=0)
    x = trace.x
    # time-major flattening to line up with dz_all
    if np.issubdtype(x.dtype, np.integer):
        vocab = layer.input_size
        onehot = np.zeros((steps * batch, vocab), dtype=dtype)
        onehot[np.arange(steps * batch), x.T.reshape(-1)] = 1.0
        dW = onehot.T @ dz2
        d_seq = None
    else:
        xt = x.transpose(1, 0, 2).reshape(-1, x.shape[-1])
        dW = xt.T @ dz2
        d_seq = (dz2 @ layer.W.T).reshape(steps, batch, -1).transpose(1, 0, 2)
    return d_seq, (dh_next, dc_next), {"W": dW, "U": dU, "b": db}
