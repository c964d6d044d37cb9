"""Seeded random search over autoencoder hyperparameters."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .config import AEConfig
from .training import train

log = logging.getLogger(__name__)

DEFAULT_SPACE = {
    "n_layers": [1, 2, 3],
    "dropout_rate": [0.0, 0.1, 0.2, 0.3],
    "learning_rate": [1e-4, 3e-4, 1e-3, 3e-3],
    "batch_size": [16, 32, 64],
}


@dataclass
class SearchResult:
    best: AEConfig
    trials: list  # (config, best validation loss) in sampling order


def _candidates(space: dict) -> list[dict]:
    if not space or any(len(v) == 0 for v in space.values()):
        raise ConfigError("search space must name at least one value per dimension")
    allowed = {f.name for f in fields(AEConfig)} | {"n_layers"}
    unknown = set(space) - allowed
    if unknown:
        raise ConfigError(f"unknown search dimensions: {sorted(unknown)}")
    keys = sorted(space)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(space[k] for k in keys))]


def _apply(base: AEConfig, choice: dict) -> AEConfig:
    choice = dict(choice)
    n_layers = choice.pop("n_layers", None)
    cfg = replace(base, **choice)
    return cfg.with_layers(n_layers) if n_layers is not None else cfg


def random_search(
    space: dict,
    budget: int,
    train_windows,
    seed: int = 0,
    base: Optional[AEConfig] = None,
    epochs: int = 5,
) -> SearchResult:
    """Train ``budget`` sampled configurations briefly; keep the best.

    Points are drawn without replacement from the grid while it has enough
    of them, otherwise with replacement. Ties keep the earlier sample.
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    base = base or AEConfig()
    grid = _candidates(space)
    rng = np.random.default_rng(seed)
    if budget <= len(grid):
        picks = rng.choice(len(grid), size=budget, replace=False)
    else:
        picks = rng.integers(len(grid), size=budget)

    trials = []
    for k, idx in enumerate(picks):
        cfg = _apply(base, grid[int(idx)])
        cfg = replace(cfg, max_epochs=epochs, rng_seed=int(seed) + k)
        model, _ = train(cfg, train_windows)
        trials.append((cfg, float(model.best_val_loss)))
        log.info("search trial %d: %s -> %.6g", k, grid[int(idx)], model.best_val_loss)
    best_cfg = min(trials, key=lambda t: t[1])[0]
    return SearchResult(replace(best_cfg, max_epochs=base.max_epochs), trials)
