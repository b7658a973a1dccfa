"""Adam, global-norm clipping and the plateau/early-stop schedule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict) -> dict:
    """Bias-corrected Adam update applied in place to ``params``.

    The corrections are folded into the step size and epsilon, which is the
    same update as dividing m and v by them, without the temporaries.
    """
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**t
    root2 = math.sqrt(1.0 - b2**t)
    step = state.lr * root2 / corr1
    eps = state.eps * root2
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        tmp = np.multiply(g, 1.0 - b1, out=np.empty_like(p), casting="same_kind")
        m *= b1
        m += tmp
        np.multiply(g, g, out=tmp, casting="same_kind")
        tmp *= 1.0 - b2
        v *= b2
        v += tmp
        np.sqrt(v, out=tmp)
        tmp += eps
        np.divide(m, tmp, out=tmp)
        tmp *= step
        p -= tmp
    return params


def sgd_step(lr: float, params: dict, grads: dict) -> dict:
    for name, p in params.items():
        g = grads.get(name)
        if g is not None:
            p -= (lr * g).astype(p.dtype, copy=False)
    return params


def clip_global_norm(grads: dict, max_norm: Optional[float]) -> float:
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``.

    Returns the norm before clipping.
    """
    total = math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))
    if max_norm is not None and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads.values():
            g *= g.dtype.type(scale)
    return total


class Action(enum.Flag):
    NONE = 0
    REDUCE_LR = enum.auto()
    STOP = enum.auto()
    CHECKPOINT = enum.auto()


@dataclass(frozen=True)
class TrainSchedule:
    initial_lr: float = 0.05
    plateau_patience: int = 5
    lr_factor: float = 0.5
    early_stop_patience: Optional[int] = None
    checkpoint_on_improvement: bool = True
    min_lr: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.lr_factor < 1.0:
            raise ValueError("lr_factor must lie in (0, 1)")
        if self.plateau_patience < 1:
            raise ValueError("plateau_patience must be >= 1")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


def schedule_update(sched: TrainSchedule, history: Sequence[float]) -> Action:
    """Decide what to do after the last epoch in ``history`` (monitored losses).

    Replays the whole history so the function stays pure: the plateau
    counter resets on improvement and after every learning-rate cut, the
    early-stop counter only on improvement.
    """
    if not history:
        raise ValueError("history must be non-empty")
    best = math.inf
    wait = 0
    stale = 0
    action = Action.NONE
    for loss in history:
        action = Action.NONE
        if loss < best:
            best = loss
            wait = 0
            stale = 0
            if sched.checkpoint_on_improvement:
                action |= Action.CHECKPOINT
            continue
        wait += 1
        stale += 1
        if wait >= sched.plateau_patience:
            action |= Action.REDUCE_LR
            wait = 0
        if sched.early_stop_patience is not None and stale >= sched.early_stop_patience:
            action |= Action.STOP
    return action
