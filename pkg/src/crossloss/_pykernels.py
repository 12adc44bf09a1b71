"""Numpy fallback with the same interface as the compiled kernels.

Reductions use ``cumsum`` and ``bincount``, both of which accumulate in
index order, so totals match a left-to-right loop.
"""
import numpy as np

# rows of (candidates x observations) held in memory at once
_CHUNK_CELLS = 1 << 20


def component_losses(pred, act, p, q):
    pred = np.asarray(pred, dtype=np.float64)
    act = np.asarray(act, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.power(np.abs(pred - act), p) * np.power(act, q)
    out[pred == act] = 0.0
    return out


def ordered_sum(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.cumsum(x)[-1])


def total_loss(pred, act, p, q):
    return ordered_sum(component_losses(pred, act, p, q))


def blend_losses(preds, act, weights, p, q, group, totals, check_nonneg, num_threads=0):
    preds = np.asarray(preds, dtype=np.float64)
    act = np.asarray(act, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    group = np.asarray(group, dtype=np.intp)
    totals = np.asarray(totals, dtype=np.float64)
    k, n = preds.shape
    n_groups = totals.shape[0]
    out = np.empty(weights.shape[0], dtype=np.float64)
    step = max(1, _CHUNK_CELLS // max(n, 1))

    for start in range(0, weights.shape[0], step):
        w = weights[start:start + step]
        rows = w.shape[0]
        blended = np.zeros((rows, n))
        for j in range(k):
            blended = blended + w[:, j, None] * preds[j][None, :]
        bad = np.zeros(rows, dtype=bool)
        if check_nonneg:
            bad |= (blended < 0.0).any(axis=1)
        if n_groups:
            flat = (group[None, :] + n_groups * np.arange(rows)[:, None]).ravel()
            gsum = np.bincount(flat, weights=blended.ravel(), minlength=rows * n_groups)
            gsum = gsum.reshape(rows, n_groups)
            bad |= (gsum <= 0.0).any(axis=1)
            with np.errstate(divide="ignore"):
                factor = totals[None, :] / gsum
            blended = blended * factor[:, group]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            losses = np.power(np.abs(blended - act[None, :]), p) * np.power(act, q)[None, :]
        losses[blended == act[None, :]] = 0.0
        res = np.cumsum(losses, axis=1)[:, -1] if n else np.zeros(rows)
        res[bad] = np.inf
        out[start:start + rows] = res
    return out
