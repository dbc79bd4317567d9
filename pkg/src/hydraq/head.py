"""Classical heads mapping measured expectation values to target units."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ShapeError

HEAD_KINDS = ("identity", "linear")


@dataclass(frozen=True)
class HeadSpec:
    """``y = scale * g(z) + offset`` with g the identity or ``w . z + b``.

    ``scale`` and ``offset`` are the frozen output calibration; only the
    linear weights and bias are trainable.
    """

    kind: str = "linear"
    weights: Optional[tuple] = None
    bias: float = 0.0
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ConfigurationError(f"unknown head kind {self.kind!r}")
        if self.kind == "linear":
            if self.weights is None:
                raise ConfigurationError("linear head needs weights")
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @classmethod
    def linear(cls, num_outputs: int, scale: float = 1.0, offset: float = 0.0) -> "HeadSpec":
        return cls("linear", (1.0,) * num_outputs, 0.0, scale, offset)

    @classmethod
    def identity(cls, scale: float = 1.0, offset: float = 0.0) -> "HeadSpec":
        return cls("identity", None, 0.0, scale, offset)

    def check(self, num_latent: int) -> None:
        if self.kind == "identity" and num_latent != 1:
            raise ConfigurationError("identity head needs exactly one observable")
        if self.kind == "linear" and len(self.weights) != num_latent:
            raise ShapeError(f"head has {len(self.weights)} weights for {num_latent} observables")

    @property
    def num_parameters(self) -> int:
        return 0 if self.kind == "identity" else len(self.weights) + 1

    def params(self) -> np.ndarray:
        if self.kind == "identity":
            return np.zeros(0)
        return np.array(self.weights + (self.bias,))

    def with_params(self, values) -> "HeadSpec":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.num_parameters,):
            raise ShapeError(f"head expects {self.num_parameters} parameters")
        if self.kind == "identity":
            return self
        return HeadSpec("linear", tuple(values[:-1]), float(values[-1]), self.scale, self.offset)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        if self.kind == "identity":
            raw = z[:, 0]
        else:
            raw = z @ np.asarray(self.weights) + self.bias
        return self.scale * raw + self.offset

    def grad_latent(self, z: np.ndarray) -> np.ndarray:
        """d prediction / d z, shape (B, m)."""
        z = np.atleast_2d(z)
        if self.kind == "identity":
            return np.full(z.shape, self.scale)
        return np.broadcast_to(self.scale * np.asarray(self.weights), z.shape)

    def grad_params(self, z: np.ndarray) -> np.ndarray:
        """d prediction / d head parameters, shape (B, num_parameters)."""
        z = np.atleast_2d(z)
        if self.kind == "identity":
            return np.zeros((z.shape[0], 0))
        return self.scale * np.hstack([z, np.ones((z.shape[0], 1))])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": None if self.weights is None else list(self.weights),
            "bias": self.bias,
            "scale": self.scale,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HeadSpec":
        return cls(data["kind"], data["weights"], data["bias"], data["scale"], data["offset"])
