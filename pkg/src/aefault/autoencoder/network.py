"""Recurrent autoencoder with hand-written forward and backward passes.

Layout for the LSTM cell::

    window (w x n) -> LSTM encoder layers -> last hidden state
                   -> repeated w times -> LSTM decoder layers
                   -> per-timestep linear map back to n signals

The dense variant treats the flat ``w*n`` window as a single step with the
same layer widths. Flat windows are signal-major, so the sequence view is
``flat.reshape(B, n, w).transpose(0, 2, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DimensionError
from ..timeseries import FeatureWindow, stack_windows
from .config import AEConfig


@dataclass
class ModelState:
    config: AEConfig
    params: dict
    accum: dict
    epoch: int = 0
    best_val_loss: float = float("inf")

    def copy(self) -> "ModelState":
        return ModelState(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.accum.items()},
            self.epoch,
            self.best_val_loss,
        )

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())


def _glorot(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def layer_names(config: AEConfig) -> list[tuple[str, int, int]]:
    """(prefix, input width, output width) for every hidden layer, in order."""
    d_in = config.n_signals if config.cell == "lstm" else config.input_size
    out = []
    for i, h in enumerate(config.encoder_layers):
        out.append((f"enc{i}", d_in, h))
        d_in = h
    for i, h in enumerate(config.decoder_layers):
        out.append((f"dec{i}", d_in, h))
        d_in = h
    return out


def init(config: AEConfig, seed: Optional[int] = None) -> ModelState:
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    params: dict[str, np.ndarray] = {}
    for prefix, d_in, h in layer_names(config):
        if config.cell == "lstm":
            params[f"{prefix}.W"] = _glorot(rng, d_in, 4 * h, (d_in, 4 * h))
            params[f"{prefix}.U"] = _glorot(rng, h, 4 * h, (h, 4 * h))
            b = np.zeros(4 * h)
            b[h : 2 * h] = 1.0
            params[f"{prefix}.b"] = b
        else:
            params[f"{prefix}.W"] = _glorot(rng, d_in, h, (d_in, h))
            params[f"{prefix}.b"] = np.zeros(h)
    last = config.decoder_layers[-1]
    n_out = config.n_signals if config.cell == "lstm" else config.input_size
    params["out.W"] = _glorot(rng, last, n_out, (last, n_out))
    params["out.b"] = np.zeros(n_out)
    accum = {k: np.zeros_like(v) for k, v in params.items()}
    return ModelState(config, params, accum)


def parameter_count(config: AEConfig) -> int:
    """Closed-form number of trainable scalars."""
    total = 0
    for _, d_in, h in layer_names(config):
        total += 4 * h * (d_in + h + 1) if config.cell == "lstm" else h * (d_in + 1)
    n_out = config.n_signals if config.cell == "lstm" else config.input_size
    return total + n_out * (config.decoder_layers[-1] + 1)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def _lstm_forward(xs, W, U, b):
    """Run one LSTM layer over (B, T, d) inputs; caches are time-major."""
    B, T, _ = xs.shape
    H = U.shape[0]
    xw = (xs.transpose(1, 0, 2).reshape(T * B, -1) @ W).reshape(T, B, 4 * H)
    xw += b
    gates = np.empty((T, B, 4 * H))
    cs = np.empty((T, B, H))
    tcs = np.empty((T, B, H))
    hs = np.empty((T, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        z = xw[t]
        z += h @ U
        # sigmoid(x) = (1 + tanh(x / 2)) / 2 for the input, forget and output gates
        z[:, : 2 * H] *= 0.5
        z[:, 3 * H :] *= 0.5
        g = np.tanh(z, out=gates[t])
        g[:, : 2 * H] += 1.0
        g[:, : 2 * H] *= 0.5
        g[:, 3 * H :] += 1.0
        g[:, 3 * H :] *= 0.5
        c = g[:, H : 2 * H] * c + g[:, :H] * g[:, 2 * H : 3 * H]
        tc = np.tanh(c, out=tcs[t])
        h = np.multiply(g[:, 3 * H :], tc, out=hs[t])
        cs[t] = c
    return hs.transpose(1, 0, 2), (xs, gates, cs, tcs, hs)


def _lstm_backward(dhs, cache, W, U):
    xs, gates, cs, tcs, hs = cache
    T, B, H = hs.shape
    dhs = dhs.transpose(1, 0, 2)
    dz = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    UT = U.T
    for t in range(T - 1, -1, -1):
        g = gates[t]
        i, f, gg, o = g[:, :H], g[:, H : 2 * H], g[:, 2 * H : 3 * H], g[:, 3 * H :]
        tc = tcs[t]
        dh = dhs[t] + dh_next
        dc = dh * o * (1.0 - tc * tc)
        dc += dc_next
        d = dz[t]
        d[:, :H] = dc * gg * i * (1.0 - i)
        if t:
            d[:, H : 2 * H] = dc * cs[t - 1] * f * (1.0 - f)
        else:
            d[:, H : 2 * H] = 0.0
        d[:, 2 * H : 3 * H] = dc * i * (1.0 - gg * gg)
        d[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = d @ UT
    flat_dz = dz.reshape(T * B, 4 * H)
    grads = {
        "W": xs.transpose(1, 0, 2).reshape(T * B, -1).T @ flat_dz,
        "U": hs[:-1].reshape((T - 1) * B, H).T @ dz[1:].reshape((T - 1) * B, 4 * H),
        "b": flat_dz.sum(axis=0),
    }
    dxs = (flat_dz @ W.T).reshape(T, B, -1).transpose(1, 0, 2)
    return dxs, grads


def _dropout_mask(rng, shape, rate):
    if rng is None or rate == 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _as_batch(batch, config: AEConfig) -> np.ndarray:
    if isinstance(batch, FeatureWindow):
        batch = [batch]
    if isinstance(batch, (list, tuple)):
        batch = stack_windows(batch) if batch else np.zeros((0, config.input_size))
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != config.input_size:
        raise DimensionError(
            f"expected windows of length {config.input_size}, got shape {X.shape}"
        )
    return X


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------


@dataclass
class _Cache:
    X: np.ndarray
    layers: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    top: Optional[np.ndarray] = None


def _forward(model: ModelState, X: np.ndarray, train_mode: bool, seed):
    cfg = model.config
    p = model.params
    rng = np.random.default_rng(seed) if train_mode else None
    rate = cfg.dropout_rate
    cache = _Cache(X)
    B, w, n = X.shape[0], cfg.window, cfg.n_signals
    n_enc = len(cfg.encoder_layers)

    if cfg.cell == "lstm":
        a = X.reshape(B, n, w).transpose(0, 2, 1)
        for li, (prefix, _, _) in enumerate(layer_names(cfg)):
            hs, lc = _lstm_forward(a, p[f"{prefix}.W"], p[f"{prefix}.U"], p[f"{prefix}.b"])
            cache.layers.append(lc)
            out = hs[:, -1] if li == n_enc - 1 else hs
            mask = _dropout_mask(rng, out.shape, rate)
            cache.masks.append(mask)
            if mask is not None:
                out = out * mask
            a = np.repeat(out[:, None, :], w, axis=1) if li == n_enc - 1 else out
        cache.top = a
        Y = a.reshape(B * w, -1) @ p["out.W"] + p["out.b"]
        return Y.reshape(B, w, n).transpose(0, 2, 1).reshape(B, n * w), cache

    a = X
    for prefix, _, _ in layer_names(cfg):
        hs = np.tanh(a @ p[f"{prefix}.W"] + p[f"{prefix}.b"])
        cache.layers.append((a, hs))
        mask = _dropout_mask(rng, hs.shape, rate)
        cache.masks.append(mask)
        a = hs * mask if mask is not None else hs
    cache.top = a
    return a @ p["out.W"] + p["out.b"], cache


def _backward(model: ModelState, cache: _Cache, dY: np.ndarray) -> dict:
    cfg = model.config
    p = model.params
    grads: dict[str, np.ndarray] = {}
    B, w, n = dY.shape[0], cfg.window, cfg.n_signals
    names = layer_names(cfg)
    n_enc = len(cfg.encoder_layers)

    if cfg.cell == "lstm":
        dseq = dY.reshape(B, n, w).transpose(0, 2, 1).reshape(B * w, n)
        top = cache.top.reshape(B * w, -1)
        grads["out.W"] = top.T @ dseq
        grads["out.b"] = dseq.sum(axis=0)
        da = (dseq @ p["out.W"].T).reshape(B, w, -1)
        for li in range(len(names) - 1, -1, -1):
            prefix = names[li][0]
            lc = cache.layers[li]
            if li == n_enc - 1:
                dlast = da.sum(axis=1)
                if cache.masks[li] is not None:
                    dlast = dlast * cache.masks[li]
                T, B_, H = lc[4].shape
                da = np.zeros((B_, T, H))
                da[:, -1] = dlast
            elif cache.masks[li] is not None:
                da = da * cache.masks[li]
            da, g = _lstm_backward(da, lc, p[f"{prefix}.W"], p[f"{prefix}.U"])
            for k, v in g.items():
                grads[f"{prefix}.{k}"] = v
        return grads

    grads["out.W"] = cache.top.T @ dY
    grads["out.b"] = dY.sum(axis=0)
    da = dY @ p["out.W"].T
    for li in range(len(names) - 1, -1, -1):
        prefix = names[li][0]
        a_in, hs = cache.layers[li]
        if cache.masks[li] is not None:
            da = da * cache.masks[li]
        dz = da * (1.0 - hs * hs)
        grads[f"{prefix}.W"] = a_in.T @ dz
        grads[f"{prefix}.b"] = dz.sum(axis=0)
        da = dz @ p[f"{prefix}.W"].T
    return grads


def forward(model: ModelState, batch, train_mode: bool = False, seed=None) -> np.ndarray:
    """Reconstruct a batch; returns a (B, w*n) array.

    Dropout is active only with ``train_mode=True`` and its masks are drawn
    from ``seed``. Evaluation mode is a pure function of model and batch.
    """
    X = _as_batch(batch, model.config)
    Y, _ = _forward(model, X, train_mode, seed)
    return Y


def loss(batch, reconstructions) -> float:
    """Batch mean of the per-window mean squared reconstruction error."""
    X = np.asarray(batch if not isinstance(batch, (list, tuple)) else stack_windows(batch))
    Y = np.asarray(reconstructions)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    d = X - Y
    return float(np.mean(d * d)) if d.size else 0.0


def loss_and_gradients(model: ModelState, batch, seed=None, train_mode: bool = True):
    """Loss and its exact gradient for one batch, sharing one dropout draw."""
    X = _as_batch(batch, model.config)
    Y, cache = _forward(model, X, train_mode, seed)
    diff = Y - X
    value = float(np.mean(diff * diff))
    grads = _backward(model, cache, 2.0 * diff / diff.size)
    return value, grads


def backward(model: ModelState, batch, seed=None, train_mode: bool = True) -> dict:
    return loss_and_gradients(model, batch, seed, train_mode)[1]


def reconstruct(model: ModelState, windows, batch_size: int = 256) -> np.ndarray:
    """Evaluation-mode reconstruction of many windows in chunks."""
    X = _as_batch(windows, model.config)
    if X.shape[0] == 0:
        return X.copy()
    return np.concatenate(
        [forward(model, X[i : i + batch_size]) for i in range(0, X.shape[0], batch_size)]
    )


