from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import DimensionError
from .network import ModelState


def rmsprop_step(
    model: ModelState,
    gradients: dict,
    learning_rate: Optional[float] = None,
    rho: Optional[float] = None,
    eps: Optional[float] = None,
) -> ModelState:
    """One RMSprop update, applied in place; returns ``model`` for chaining.

    ``a <- rho * a + (1 - rho) * g**2`` then ``p <- p - lr * g / sqrt(a + eps)``.
    """
    cfg = model.config
    lr = cfg.learning_rate if learning_rate is None else learning_rate
    rho = cfg.rmsprop_rho if rho is None else rho
    eps = cfg.rmsprop_eps if eps is None else eps
    for name, g in gradients.items():
        p = model.params[name]
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        a = model.accum[name]
        a *= rho
        a += (1.0 - rho) * g * g
        p -= lr * g / np.sqrt(a + eps)
    return model


class EarlyStopping:
    """Signals a stop once the monitored loss fails to improve ``patience`` times in a row."""

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best = float("inf")
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, value: float) -> bool:
        if value < self.best:
            self.best, self.best_epoch, self.wait = value, epoch, 0
            return False
        self.wait += 1
        return self.wait >= self.patience
