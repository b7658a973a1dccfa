"""Minimal dense/LSTM network engine with exact gradients."""

from .checkpoint import CorruptCheckpoint, VersionMismatch
from .layers import (
    DenseLayer,
    LSTMLayer,
    ShapeMismatch,
    dense_backward,
    dense_forward,
    lstm_backward,
    lstm_forward,
    lstm_forward_trace,
    lstm_step,
    sigmoid,
    softmax,
)
from .loss import cross_entropy
from .optim import Action, AdamState, TrainSchedule, adam_step, clip_global_norm, schedule_update

__all__ = [
    "Action",
    "AdamState",
    "CorruptCheckpoint",
    "DenseLayer",
    "LSTMLayer",
    "ShapeMismatch",
    "TrainSchedule",
    "VersionMismatch",
    "adam_step",
    "clip_global_norm",
    "cross_entropy",
    "dense_backward",
    "dense_forward",
    "lstm_backward",
    "lstm_forward",
    "lstm_forward_trace",
    "lstm_step",
    "schedule_update",
    "sigmoid",
    "softmax",
]
