"""Regression metrics and residual summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ShapeError, UndefinedVarianceError

TASK_DELTAS = {
    "usg": (1.0, 2.0, 3.0),
    "conductivity": (1.0, 2.0, 3.0),
    "volume": (25.0, 50.0, 75.0),
}
QUANTILES = (5, 25, 50, 75, 95)


def _pair(targets, predictions, min_len: int = 1):
    y = np.asarray(targets, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if y.size != p.size:
        raise ShapeError(f"length mismatch: {y.size} targets vs {p.size} predictions")
    if y.size < min_len:
        raise ShapeError(f"need at least {min_len} values, got {y.size}")
    return y, p


def r_squared(targets, predictions) -> float:
    y, p = _pair(targets, predictions, min_len=2)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedVarianceError("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((y - p) ** 2)) / ss_tot


def mae(targets, predictions) -> float:
    y, p = _pair(targets, predictions)
    return float(np.mean(np.abs(y - p)))


def check_deltas(deltas) -> tuple[float, ...]:
    d = tuple(float(v) for v in deltas)
    if not d or d[0] <= 0 or any(b <= a for a, b in zip(d, d[1:])):
        raise ConfigurationError(f"tolerances must be positive and strictly increasing, got {d}")
    return d


def tolerance_accuracy(targets, predictions, deltas) -> tuple[float, ...]:
    """Fraction of samples with |y - y_hat| <= delta, for each delta."""
    d = check_deltas(deltas)
    y, p = _pair(targets, predictions)
    err = np.abs(y - p)
    return tuple(float(np.mean(err <= delta)) for delta in d)


@dataclass(frozen=True)
class ResidualSet:
    targets: np.ndarray
    predictions: np.ndarray

    @classmethod
    def from_predictions(cls, targets, predictions) -> "ResidualSet":
        y, p = _pair(targets, predictions)
        return cls(y, p)

    @property
    def residuals(self) -> np.ndarray:
        return self.targets - self.predictions

    def summary(self) -> dict:
        e = self.residuals
        out = {"mean": float(e.mean()), "std": float(e.std())}
        for q, v in zip(QUANTILES, np.percentile(e, QUANTILES)):
            out[f"q{q:02d}"] = float(v)
        return out


@dataclass(frozen=True)
class MetricRow:
    task: str
    model: str
    r2: Optional[float]
    mae: Optional[float]
    acc: Optional[tuple]
    deltas: tuple
    n_test: int
    note: str = ""

    @property
    def failed(self) -> bool:
        return self.r2 is None


def metric_row(task: str, model: str, targets, predictions, deltas=None) -> MetricRow:
    deltas = check_deltas(deltas if deltas is not None else TASK_DELTAS[task])
    y, p = _pair(targets, predictions, min_len=2)
    return MetricRow(task, model, r_squared(y, p), mae(y, p), tolerance_accuracy(y, p, deltas), deltas, y.size)


def failed_row(task: str, model: str, n_test: int, note: str, deltas=None) -> MetricRow:
    deltas = check_deltas(deltas if deltas is not None else TASK_DELTAS[task])
    return MetricRow(task, model, None, None, None, deltas, n_test, note)
