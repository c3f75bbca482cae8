"""Feedforward network: ReLU or ELU hidden layers, linear output, MSE loss,
mini-batch SGD with momentum.  Keeps the weights with the lowest
full-training-set loss seen at any epoch boundary (including the initial
weights)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import DivergedLoss

STANDARDIZE = True


@dataclass(frozen=True)
class Params:
    hidden: tuple = (32,)
    activation: str = "relu"
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9

    def __post_init__(self):
        h = tuple(int(v) for v in self.hidden)
        if not h or min(h) < 1:
            raise ValueError("need at least one hidden layer, all sizes >= 1")
        object.__setattr__(self, "hidden", h)
        act = str(self.activation).lower()
        if act not in ("relu", "elu"):
            raise ValueError(f"activation must be relu or elu, got {self.activation!r}")
        object.__setattr__(self, "activation", act)
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError("epochs must be an integer >= 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError("batch_size must be a positive integer")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _act_grad(z, kind):
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def init_weights(sizes, rng) -> list:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / fan_in)
        layers.append([rng.uniform(-lim, lim, (fan_in, fan_out)), np.zeros(fan_out)])
    return layers


def forward(layers, x, kind):
    h = x
    cache = []
    for w, b in layers[:-1]:
        z = h @ w + b
        cache.append((h, z))
        h = _act(z, kind)
    w, b = layers[-1]
    cache.append((h, None))
    return (h @ w + b)[:, 0], cache


def loss_and_grad(layers, x, y, kind):
    """Mean squared error and its gradient with respect to every weight."""
    pred, cache = forward(layers, x, kind)
    err = pred - y
    n = y.shape[0]
    loss = float(np.mean(err * err))
    delta = (2.0 / n) * err[:, None]
    grads = [None] * len(layers)
    for li in range(len(layers) - 1, -1, -1):
        h, _ = cache[li]
        w = layers[li][0]
        grads[li] = [h.T @ delta, delta.sum(axis=0)]
        if li:
            delta = (delta @ w.T) * _act_grad(cache[li - 1][1], kind)
    return loss, grads


def _copy(layers):
    return [[w.copy(), b.copy()] for w, b in layers]


def fit_core(params: Params, x, y, rng):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    layers = init_weights([x.shape[1], *params.hidden, 1], rng)
    vel = [[np.zeros_like(w), np.zeros_like(b)] for w, b in layers]
    kind = params.activation
    best = float(np.mean((forward(layers, x, kind)[0] - y) ** 2))
    best_layers, best_epoch = _copy(layers), 0
    history = [best]
    for epoch in range(1, int(params.epochs) + 1):
        perm = rng.permutation(n)
        for s in range(0, n, params.batch_size):
            idx = perm[s:s + params.batch_size]
            _, grads = loss_and_grad(layers, x[idx], y[idx], kind)
            for (w, b), (gw, gb), v in zip(layers, grads, vel):
                v[0] *= params.momentum
                v[0] -= params.learning_rate * gw
                v[1] *= params.momentum
                v[1] -= params.learning_rate * gb
                w += v[0]
                b += v[1]
        with np.errstate(over="ignore", invalid="ignore"):
            loss = float(np.mean((forward(layers, x, kind)[0] - y) ** 2))
        if not np.isfinite(loss):
            raise DivergedLoss(f"MLP training loss became {loss} at epoch {epoch} "
                               f"(learning_rate={params.learning_rate})")
        history.append(loss)
        if loss < best:
            best, best_layers, best_epoch = loss, _copy(layers), epoch
    state = {}
    for i, (w, b) in enumerate(best_layers):
        state[f"w{i}"] = w
        state[f"b{i}"] = b
    return state, {"train_loss": history, "best_epoch": best_epoch, "epochs_run": int(params.epochs)}


def _layers(state):
    n = len(state) // 2
    return [[state[f"w{i}"], state[f"b{i}"]] for i in range(n)]


def predict_core(params: Params, state, x):
    return forward(_layers(state), np.asarray(x, dtype=np.float64), params.activation)[0]
