from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ParameterError
from .config import AEConfig
from .network import ModelState, _as_batch, init, loss, loss_and_gradients, reconstruct
from .optim import EarlyStopping, rmsprop_step

log = logging.getLogger(__name__)


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_rows(self) -> list[tuple[int, float, float]]:
        return [(e + 1, t, v) for e, (t, v) in enumerate(zip(self.train_loss, self.val_loss))]


def evaluate_loss(model: ModelState, windows) -> float:
    X = _as_batch(windows, model.config)
    if X.shape[0] == 0:
        return float("nan")
    return loss(X, reconstruct(model, X))


def split_validation(n_windows: int, fraction: float) -> int:
    """Index where the chronologically last ``fraction`` of windows begins."""
    n_val = int(round(n_windows * fraction))
    if n_windows < 2:
        return n_windows
    return n_windows - min(max(n_val, 1), n_windows - 1)


def train(
    config: AEConfig,
    train_windows,
    model: Optional[ModelState] = None,
) -> tuple[ModelState, TrainingHistory]:
    """Fit the autoencoder and return the state with the best validation loss.

    The last ``validation_fraction`` of the windows (in the given order)
    is held out for early stopping; the rest is visited in a seeded random
    order each epoch.
    """
    X = _as_batch(train_windows, config)
    if X.shape[0] == 0:
        raise ParameterError("train needs at least one window")
    model = init(config, config.rng_seed) if model is None else model
    history = TrainingHistory()
    if config.max_epochs == 0:
        return model, history

    cut = split_validation(X.shape[0], config.validation_fraction)
    X_train, X_val = X[:cut], X[cut:]
    rng = np.random.default_rng([config.rng_seed, 1])
    stopper = EarlyStopping(config.early_stop_patience)
    best = model.copy()
    bs = config.batch_size

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(X_train.shape[0])
        total = 0.0
        for lo in range(0, order.size, bs):
            batch = X_train[order[lo : lo + bs]]
            value, grads = loss_and_gradients(model, batch, seed=int(rng.integers(2**63)))
            rmsprop_step(model, grads)
            total += value * batch.shape[0]
        train_loss = total / X_train.shape[0]
        val_loss = evaluate_loss(model, X_val) if X_val.shape[0] else train_loss
        model.epoch = epoch
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        log.debug("epoch %d train %.6g val %.6g", epoch, train_loss, val_loss)
        if not np.isfinite(val_loss):
            log.warning("epoch %d: non-finite validation loss, stopping", epoch)
            history.stopped_epoch = epoch
            break
        stop = stopper.update(epoch, val_loss)
        if stopper.best_epoch == epoch:
            best = model.copy()
            best.best_val_loss = val_loss
        history.stopped_epoch = epoch
        if stop:
            break
    history.best_epoch = stopper.best_epoch
    return best, history
