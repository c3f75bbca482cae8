"""Single-layer LSTM regressor trained with full backpropagation through time.

Gate order inside the stacked weight matrices is (input, forget, output,
candidate).  The final hidden state feeds an affine head.  Updates use
Adam on mini-batches after clipping the global gradient norm.

Layouts: ``day`` reshapes the lag window into days of 48 slots (oldest
day first, zero-padded at the old end when the window is not a whole
number of days); ``flat`` feeds one lag per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SLOTS_PER_DAY
from .base import DivergedLoss

STANDARDIZE = True


@dataclass(frozen=True)
class Params:
    n_blocks: int = 16
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.005
    layout: str = "day"
    clip_norm: float = 5.0

    def __post_init__(self):
        if int(self.n_blocks) != self.n_blocks or self.n_blocks < 1:
            raise ValueError("n_blocks must be a positive integer")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError("epochs must be an integer >= 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError("batch_size must be a positive integer")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.layout not in ("day", "flat"):
            raise ValueError(f"layout must be 'day' or 'flat', got {self.layout!r}")
        if not self.clip_norm > 0:
            raise ValueError("clip_norm must be > 0")


def to_sequences(x, layout: str) -> np.ndarray:
    """(n, steps, width) with the oldest lag first."""
    x = np.asarray(x, dtype=np.float64)[:, ::-1]
    n, lags = x.shape
    if layout == "flat":
        return np.ascontiguousarray(x[:, :, None])
    steps = -(-lags // SLOTS_PER_DAY)
    pad = steps * SLOTS_PER_DAY - lags
    if pad:
        x = np.concatenate([np.zeros((n, pad)), x], axis=1)
    return np.ascontiguousarray(x.reshape(n, steps, SLOTS_PER_DAY))


def init_weights(width: int, hidden: int, rng) -> dict:
    lim = 1.0 / np.sqrt(hidden)
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0
    return {"wx": rng.uniform(-lim, lim, (width, 4 * hidden)),
            "wh": rng.uniform(-lim, lim, (hidden, 4 * hidden)),
            "b": b, "v": rng.uniform(-lim, lim, hidden), "c": np.zeros(1)}


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def forward(w: dict, seq):
    """Predictions and the per-step cache (x, h_prev, c_prev, i, f, o, g, c)."""
    n, steps, _ = seq.shape
    hd = w["wh"].shape[0]
    h = np.zeros((n, hd))
    c = np.zeros((n, hd))
    cache = []
    for t in range(steps):
        xt = seq[:, t, :]
        z = xt @ w["wx"] + h @ w["wh"] + w["b"]
        i = _sigmoid(z[:, :hd])
        f = _sigmoid(z[:, hd:2 * hd])
        o = _sigmoid(z[:, 2 * hd:3 * hd])
        g = np.tanh(z[:, 3 * hd:])
        c_new = f * c + i * g
        cache.append((xt, h, c, i, f, o, g, c_new))
        c = c_new
        h = o * np.tanh(c)
    return h @ w["v"] + w["c"][0], cache


def loss_and_grad(w: dict, seq, y):
    pred, cache = forward(w, seq)
    n = y.shape[0]
    err = pred - y
    loss = float(np.mean(err * err))
    dpred = (2.0 / n) * err
    h_last = cache[-1][5] * np.tanh(cache[-1][7])
    grads = {k: np.zeros_like(v) for k, v in w.items()}
    grads["v"] = h_last.T @ dpred
    grads["c"] = np.array([dpred.sum()])
    dh = dpred[:, None] * w["v"][None, :]
    dc = np.zeros_like(dh)
    for xt, h_prev, c_prev, i, f, o, g, c in reversed(cache):
        tc = np.tanh(c)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([dc * g * i * (1.0 - i), dc * c_prev * f * (1.0 - f),
                             do * o * (1.0 - o), dc * i * (1.0 - g * g)], axis=1)
        grads["wx"] += xt.T @ dz
        grads["wh"] += h_prev.T @ dz
        grads["b"] += dz.sum(axis=0)
        dh = dz @ w["wh"].T
        dc = dc * f
    return loss, grads


def clip(grads: dict, max_norm: float) -> float:
    """Rescale in place so the global L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def fit_core(params: Params, x, y, rng):
    seq = to_sequences(x, params.layout)
    y = np.asarray(y, dtype=np.float64)
    n = seq.shape[0]
    w = init_weights(seq.shape[2], int(params.n_blocks), rng)
    m1 = {k: np.zeros_like(v) for k, v in w.items()}
    m2 = {k: np.zeros_like(v) for k, v in w.items()}
    b1, b2, tiny = 0.9, 0.999, 1e-8
    best = float(np.mean((forward(w, seq)[0] - y) ** 2))
    best_w, best_epoch = {k: v.copy() for k, v in w.items()}, 0
    history = [best]
    step = 0
    for epoch in range(1, int(params.epochs) + 1):
        perm = rng.permutation(n)
        for s in range(0, n, params.batch_size):
            idx = perm[s:s + params.batch_size]
            _, grads = loss_and_grad(w, seq[idx], y[idx])
            clip(grads, params.clip_norm)
            step += 1
            lr = params.learning_rate * np.sqrt(1 - b2 ** step) / (1 - b1 ** step)
            for k in w:
                m1[k] = b1 * m1[k] + (1 - b1) * grads[k]
                m2[k] = b2 * m2[k] + (1 - b2) * grads[k] * grads[k]
                w[k] -= lr * m1[k] / (np.sqrt(m2[k]) + tiny)
        with np.errstate(over="ignore", invalid="ignore"):
            loss = float(np.mean((forward(w, seq)[0] - y) ** 2))
        if not np.isfinite(loss):
            raise DivergedLoss(f"LSTM training loss became {loss} at epoch {epoch}")
        history.append(loss)
        if loss < best:
            best, best_w, best_epoch = loss, {k: v.copy() for k, v in w.items()}, epoch
    return best_w, {"train_loss": history, "best_epoch": best_epoch, "layout": params.layout,
                    "epochs_run": int(params.epochs)}


def predict_core(params: Params, state, x):
    return forward(state, to_sequences(x, params.layout))[0]
