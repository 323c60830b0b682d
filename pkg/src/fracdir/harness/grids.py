"""Verification grids: the d_x ladder and the time grid."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Grids:
    """d_x ladder base * ratio^k, k < dx_count, and a geometric t grid."""

    dx_base: float = 0.1
    dx_ratio: float = 0.5
    dx_count: int = 14
    t_lo: float = 1e-2
    t_hi: float = 1e2
    t_count: int = 9

    def __post_init__(self):
        if not (self.dx_base > 0 and 0 < self.dx_ratio < 1 and self.dx_count >= 2):
            raise ConfigError("d_x ladder needs base > 0, 0 < ratio < 1, count >= 2")
        if not (0 < self.t_lo < self.t_hi and self.t_count >= 2):
            raise ConfigError("t grid needs 0 < t_lo < t_hi and count >= 2")

    def dx_ladder(self) -> np.ndarray:
        return self.dx_base * self.dx_ratio ** np.arange(self.dx_count)

    def t_grid(self) -> np.ndarray:
        return np.geomspace(self.t_lo, self.t_hi, self.t_count)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, spec: dict | None) -> "Grids":
        spec = dict(spec or {})
        try:
            return cls(**spec)
        except TypeError as exc:
            raise ConfigError(f"unknown grid key: {exc}") from None
