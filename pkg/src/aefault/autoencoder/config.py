from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from ..errors import ConfigError

CELL_KINDS = ("lstm", "dense")
ACTIVATIONS = ("tanh",)


@dataclass(frozen=True)
class AEConfig:
    """Architecture and optimisation settings of the reconstruction model.

    With ``encoder_widths`` unset the encoder uses ``[w*n, w*n // 2]``,
    which is 370/185 for 37 signals and a window of 10. The decoder mirrors
    the encoder unless given explicitly.
    """

    n_signals: int = 37
    window: int = 10
    encoder_widths: Optional[tuple] = None
    decoder_widths: Optional[tuple] = None
    cell: str = "lstm"
    activation: str = "tanh"
    dropout_rate: float = 0.2
    learning_rate: float = 0.001
    batch_size: int = 16
    max_epochs: int = 50
    early_stop_patience: int = 5
    validation_fraction: float = 0.1
    rng_seed: int = 0
    rmsprop_rho: float = 0.9
    rmsprop_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.n_signals < 1 or self.window < 1:
            raise ConfigError("n_signals and window must be >= 1")
        for name in ("encoder_widths", "decoder_widths"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(int(x) for x in v))
        enc, dec = self.encoder_layers, self.decoder_layers
        if not enc or not dec or min(enc + dec) < 1:
            raise ConfigError(f"layer widths must be non-empty and positive: {enc} / {dec}")
        if self.cell not in CELL_KINDS:
            raise ConfigError(f"cell must be one of {CELL_KINDS}, got {self.cell!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ConfigError("learning_rate must be > 0 and batch_size >= 1")
        if self.max_epochs < 0 or self.early_stop_patience < 1:
            raise ConfigError("max_epochs must be >= 0 and early_stop_patience >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in (0, 1)")

    @property
    def input_size(self) -> int:
        return self.n_signals * self.window

    @property
    def encoder_layers(self) -> tuple:
        if self.encoder_widths is not None:
            return self.encoder_widths
        return (self.input_size, max(self.input_size // 2, 1))

    @property
    def decoder_layers(self) -> tuple:
        if self.decoder_widths is not None:
            return self.decoder_widths
        return tuple(reversed(self.encoder_layers))

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("encoder_widths", "decoder_widths"):
            if d[name] is not None:
                d[name] = list(d[name])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AEConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown autoencoder settings: {sorted(unknown)}")
        return cls(**d)

    def with_layers(self, n_layers: int) -> "AEConfig":
        """Encoder of ``n_layers`` layers halving from ``w*n``; decoder mirrors."""
        if n_layers < 1:
            raise ConfigError("n_layers must be >= 1")
        widths = tuple(max(self.input_size >> k, 1) for k in range(n_layers))
        return replace(self, encoder_widths=widths, decoder_widths=None)
