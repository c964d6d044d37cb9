"""From-scratch recurrent autoencoder: network, optimiser, training, persistence."""

from .config import AEConfig
from .network import (
    ModelState,
    backward,
    forward,
    init,
    loss,
    loss_and_gradients,
    parameter_count,
    reconstruct,
)
from .optim import EarlyStopping, rmsprop_step
from .persistence import load, load_meta, save
from .search import DEFAULT_SPACE, SearchResult, random_search
from .training import TrainingHistory, evaluate_loss, train

__all__ = [
    "AEConfig",
    "DEFAULT_SPACE",
    "EarlyStopping",
    "ModelState",
    "SearchResult",
    "TrainingHistory",
    "backward",
    "evaluate_loss",
    "forward",
    "init",
    "load",
    "loss",
    "loss_and_gradients",
    "parameter_count",
    "random_search",
    "reconstruct",
    "rmsprop_step",
    "load_meta",
    "save",
    "train",
]
