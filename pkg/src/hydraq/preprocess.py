"""Standardization, PCA and angle rescaling, fitted once and replayed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DataError, DegenerateFeatureError, ShapeError

DEFAULT_ALPHA = 0.97
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
PIPELINE_VERSION = 1


@dataclass(frozen=True)
class StandardizerParams:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        return (data - self.means) / self.stds


@dataclass(frozen=True)
class PcaParams:
    mean: np.ndarray
    components: np.ndarray  # d x k, orthonormal columns
    eigenvalues: np.ndarray  # all d, descending
    retained: int
    alpha: float

    def project(self, data: np.ndarray) -> np.ndarray:
        # explicit per-row reduction: BLAS blocking would make results depend on batch size
        centered = np.atleast_2d(data - self.mean)
        out = (centered[:, :, None] * self.components[None, :, :]).sum(axis=1)
        return out if np.ndim(data) == 2 else out[0]

    def inverse(self, projected: np.ndarray) -> np.ndarray:
        return projected @ self.components.T + self.mean

    @property
    def explained_ratio(self) -> float:
        total = self.eigenvalues.sum()
        return float(self.eigenvalues[: self.retained].sum() / total) if total > 0 else 1.0


@dataclass(frozen=True)
class AngleScalerParams:
    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, data: np.ndarray) -> np.ndarray:
        scaled = -np.pi + 2 * np.pi * (data - self.mins) / (self.maxs - self.mins)
        return np.clip(scaled, -np.pi, np.pi)


def _as_matrix(data, min_rows: int = 1) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise DataError(f"need at least {min_rows} rows, got {x.shape[0]}")
    return x


def fit_standardizer(data, names: Optional[list] = None) -> StandardizerParams:
    x = _as_matrix(data, min_rows=2)
    means = x.mean(axis=0)
    stds = np.sqrt(np.mean((x - means) ** 2, axis=0))
    for j, s in enumerate(stds):
        if not s > 0:
            label = names[j] if names else f"column {j}"
            raise DegenerateFeatureError(f"{label} has zero variance")
    return StandardizerParams(means, stds)


def jacobi_eigh(matrix, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors as columns, in the
    order the diagonal ends up (unsorted).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("jacobi_eigh needs a square matrix")
    d = a.shape[0]
    v = np.eye(d)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    return np.diag(a).copy(), v


def retained_components(eigenvalues: np.ndarray, alpha: float) -> int:
    """Smallest k whose leading eigenvalues keep at least ``alpha`` of the variance."""
    total = eigenvalues.sum()
    if total <= 0:
        return 1
    cumulative = np.cumsum(eigenvalues)
    return int(min(np.searchsorted(cumulative, alpha * total, side="left") + 1, eigenvalues.size))


def fit_pca(standardized, alpha: float = DEFAULT_ALPHA) -> PcaParams:
    if not 0 < alpha <= 1:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}")
    x = _as_matrix(standardized, min_rows=2)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    values, vectors = jacobi_eigh(cov)
    order = np.argsort(-values, kind="stable")
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, j] = -col
    k = retained_components(values, alpha)
    return PcaParams(mean, vectors[:, :k].copy(), values, k, alpha)


def fit_angle_scaler(projected) -> AngleScalerParams:
    x = _as_matrix(projected, min_rows=2)
    mins, maxs = x.min(axis=0), x.max(axis=0)
    if np.any(maxs <= mins):
        raise DegenerateFeatureError("a projected feature is constant on the training split")
    return AngleScalerParams(mins, maxs)


@dataclass(frozen=True)
class Pipeline:
    """Standardize, then optionally project with PCA and rescale to [-pi, pi]."""

    standardizer: StandardizerParams
    pca: Optional[PcaParams] = None
    scaler: Optional[AngleScalerParams] = None

    @property
    def num_inputs(self) -> int:
        return self.standardizer.means.size

    @property
    def num_outputs(self) -> int:
        return self.pca.retained if self.pca is not None else self.num_inputs

    def transform(self, raw) -> np.ndarray:
        x = np.asarray(raw, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.num_inputs:
            raise ShapeError(f"pipeline expects {self.num_inputs} columns, got {x.shape[1]}")
        out = self.standardizer.transform(x)
        if self.pca is not None:
            out = self.pca.project(out)
        if self.scaler is not None:
            out = self.scaler.transform(out)
        return out[0] if single else out

    def to_dict(self) -> dict:
        out = {
            "version": PIPELINE_VERSION,
            "standardizer": {
                "means": self.standardizer.means.tolist(),
                "stds": self.standardizer.stds.tolist(),
            },
            "pca": None,
            "angle_scaler": None,
        }
        if self.pca is not None:
            out["pca"] = {
                "mean": self.pca.mean.tolist(),
                "components": self.pca.components.tolist(),
                "eigenvalues": self.pca.eigenvalues.tolist(),
                "retained": self.pca.retained,
                "alpha": self.pca.alpha,
            }
        if self.scaler is not None:
            out["angle_scaler"] = {"mins": self.scaler.mins.tolist(), "maxs": self.scaler.maxs.tolist()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Pipeline":
        if data.get("version") != PIPELINE_VERSION:
            raise ConfigurationError(f"unsupported pipeline version {data.get('version')!r}")
        st = data["standardizer"]
        standardizer = StandardizerParams(np.array(st["means"]), np.array(st["stds"]))
        pca = scaler = None
        if data.get("pca") is not None:
            p = data["pca"]
            pca = PcaParams(
                np.array(p["mean"]),
                np.array(p["components"], dtype=float).reshape(len(p["mean"]), p["retained"]),
                np.array(p["eigenvalues"]),
                int(p["retained"]),
                float(p["alpha"]),
            )
        if data.get("angle_scaler") is not None:
            a = data["angle_scaler"]
            scaler = AngleScalerParams(np.array(a["mins"]), np.array(a["maxs"]))
        return cls(standardizer, pca, scaler)


def fit_pipeline(raw, alpha: Optional[float] = DEFAULT_ALPHA, names: Optional[list] = None) -> Pipeline:
    """Fit on training rows only. ``alpha=None`` gives a standardize-only pipeline."""
    x = _as_matrix(raw, min_rows=2)
    standardizer = fit_standardizer(x, names)
    if alpha is None:
        return Pipeline(standardizer)
    z = standardizer.transform(x)
    pca = fit_pca(z, alpha)
    scaler = fit_angle_scaler(pca.project(z))
    return Pipeline(standardizer, pca, scaler)
