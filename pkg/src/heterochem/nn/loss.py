from __future__ import annotations

from typing import Optional

import numpy as np

PROB_FLOOR = 1e-12


def cross_entropy(
    probs: np.ndarray, targets: np.ndarray, mask: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. the logits.

    ``probs`` is ``[batch, time, classes]`` softmax output; ``targets`` is
    either a one-hot array of the same shape or integer class ids
    ``[batch, time]``. Positions where ``mask`` is 0 are excluded and the
    mean runs over the remaining positions; without a mask it runs over
    batch * time.
    """
    if targets.ndim == probs.ndim:
        ids = targets.argmax(axis=-1)
    else:
        ids = targets
    picked = np.take_along_axis(probs, ids[..., None], axis=-1)[..., 0]
    nll = -np.log(np.maximum(picked, PROB_FLOOR))
    grad = probs.copy()
    np.put_along_axis(grad, ids[..., None], np.take_along_axis(grad, ids[..., None], -1) - 1, -1)
    if mask is None:
        count = nll.size
        loss = float(nll.sum(dtype=np.float64)) / count
    else:
        mask = mask.astype(probs.dtype)
        count = max(float(mask.sum()), 1.0)
        loss = float((nll * mask).sum(dtype=np.float64)) / count
        grad *= mask[..., None]
    grad /= probs.dtype.type(count)
    return loss, grad
