"""Synthetic urinary-biomarker data, CSV I/O and train/test splits.

The generator draws one latent hydration level h ~ U(0, 1) per sample and
derives three targets from it:

    usg_points   = 40 (1 - h)        USG expressed as (USG - 1) * 1000
    conductivity = 5 + 20 (1 - h)    mS/cm
    volume       = 50 + 400 h        mL

Sensor channels are fixed functions of the targets: eight optical bands
follow saturating absorbance curves of ``usg_points``, the electrode signal
is the conductivity scaled by a per-sample immersion-depth factor, and the
temperature is an uninformative N(34, 2) reading. Every channel and target
gets Gaussian noise with standard deviation ``noise_level * <scale>``. All
constants live in ``GENERATOR_CONSTANTS``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, ParseError, SchemaError

NUM_BANDS = 8
BAND_COLUMNS = [f"band_{i}" for i in range(NUM_BANDS)]
FEATURE_COLUMNS = BAND_COLUMNS + ["conductivity_signal", "temperature"]
TARGET_COLUMNS = {"usg": "usg_points", "conductivity": "conductivity", "volume": "volume"}
TASKS = tuple(TARGET_COLUMNS)
CSV_COLUMNS = ["timestamp"] + FEATURE_COLUMNS + ["usg_points", "conductivity", "volume"]

GENERATOR_CONSTANTS = {
    # targets: value = intercept + slope * h, noise sd = noise_level * noise
    "usg_points": {"intercept": 40.0, "slope": -40.0, "noise": 4.0, "range": (0.0, 40.0)},
    "conductivity": {"intercept": 25.0, "slope": -20.0, "noise": 2.0},
    "volume": {"intercept": 50.0, "slope": 400.0, "noise": 40.0},
    # band_i = floor_i + amplitude_i * (1 - exp(-usg_points / tau_i))
    "band_floor": (0.05, 0.08, 0.10, 0.12, 0.06, 0.04, 0.09, 0.07),
    "band_amplitude": (0.85, 0.80, 0.70, 0.60, 0.75, 0.88, 0.50, 0.65),
    "band_tau": (8.0, 12.0, 16.0, 20.0, 26.0, 32.0, 40.0, 55.0),
    "band_noise": 0.05,
    # conductivity_signal = conductivity * depth, depth ~ U(low, high)
    "depth_range": (0.85, 1.15),
    "signal_noise": 1.0,
    "temperature_mean": 34.0,
    "temperature_sd": 2.0,
    "temperature_noise": 0.5,
    "timestamp_start": 1_700_000_000,
    "timestamp_gap": (600, 14_400),
    "min_volume": 1.0,
}


@dataclass(frozen=True)
class SensorSample:
    timestamp: int
    spectral_bands: tuple
    conductivity_signal: float
    temperature: float


@dataclass(frozen=True)
class TargetRecord:
    usg_points: float
    conductivity: float
    volume: float


@dataclass
class Dataset:
    """Column-oriented sample table; rows line up across all arrays."""

    timestamp: np.ndarray
    bands: np.ndarray
    conductivity_signal: np.ndarray
    temperature: np.ndarray
    usg_points: np.ndarray
    conductivity: np.ndarray
    volume: np.ndarray

    def __len__(self) -> int:
        return self.timestamp.size

    def features(self) -> np.ndarray:
        return np.column_stack([self.bands, self.conductivity_signal, self.temperature])

    def target(self, task: str) -> np.ndarray:
        if task not in TARGET_COLUMNS:
            raise ConfigurationError(f"unknown task {task!r}; expected one of {TASKS}")
        return getattr(self, TARGET_COLUMNS[task])

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(**{f.name: getattr(self, f.name)[index] for f in fields(self)})

    def samples(self) -> list[SensorSample]:
        return [
            SensorSample(int(t), tuple(float(v) for v in b), float(c), float(temp))
            for t, b, c, temp in zip(self.timestamp, self.bands, self.conductivity_signal, self.temperature)
        ]

    def targets(self) -> list[TargetRecord]:
        return [
            TargetRecord(float(u), float(c), float(v))
            for u, c, v in zip(self.usg_points, self.conductivity, self.volume)
        ]

    @classmethod
    def from_records(cls, samples, targets) -> "Dataset":
        if len(samples) != len(targets):
            raise DataError("sample and target lists differ in length")
        return cls(
            np.array([s.timestamp for s in samples], dtype=np.int64),
            np.array([s.spectral_bands for s in samples], dtype=float).reshape(-1, NUM_BANDS),
            np.array([s.conductivity_signal for s in samples], dtype=float),
            np.array([s.temperature for s in samples], dtype=float),
            np.array([t.usg_points for t in targets], dtype=float),
            np.array([t.conductivity for t in targets], dtype=float),
            np.array([t.volume for t in targets], dtype=float),
        )


def generate(n: int, seed: int = 0, noise_level: float = 0.05, hydration=None) -> Dataset:
    """Draw ``n`` synthetic samples. ``hydration`` overrides the latent h draw."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if noise_level < 0:
        raise ConfigurationError("noise_level must be >= 0")
    k = GENERATOR_CONSTANTS
    rng = np.random.default_rng(seed)
    h = rng.uniform(0.0, 1.0, n)
    if hydration is not None:
        h = np.broadcast_to(np.asarray(hydration, dtype=float), (n,)).copy()

    def target(name):
        spec = k[name]
        return spec["intercept"] + spec["slope"] * h + noise_level * spec["noise"] * rng.standard_normal(n)

    usg = np.clip(target("usg_points"), *k["usg_points"]["range"])
    conductivity = np.maximum(target("conductivity"), 0.0)
    volume = np.maximum(target("volume"), k["min_volume"])

    floor = np.array(k["band_floor"])
    amp = np.array(k["band_amplitude"])
    tau = np.array(k["band_tau"])
    bands = floor + amp * (1.0 - np.exp(-usg[:, None] / tau))
    bands = np.clip(bands + noise_level * k["band_noise"] * rng.standard_normal((n, NUM_BANDS)), 0.0, 1.0)

    depth = rng.uniform(*k["depth_range"], n)
    signal = np.maximum(conductivity * depth + noise_level * k["signal_noise"] * rng.standard_normal(n), 0.0)
    temperature = (
        k["temperature_mean"]
        + k["temperature_sd"] * rng.standard_normal(n)
        + noise_level * k["temperature_noise"] * rng.standard_normal(n)
    )
    gaps = rng.integers(*k["timestamp_gap"], n)
    timestamp = k["timestamp_start"] + np.cumsum(gaps).astype(np.int64)
    return Dataset(timestamp, bands, signal, temperature, usg, conductivity, volume)


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(len(dataset)):
            row = [str(int(dataset.timestamp[i]))]
            row += [repr(float(v)) for v in dataset.bands[i]]
            row += [
                repr(float(dataset.conductivity_signal[i])),
                repr(float(dataset.temperature[i])),
                repr(float(dataset.usg_points[i])),
                repr(float(dataset.conductivity[i])),
                repr(float(dataset.volume[i])),
            ]
            writer.writerow(row)


def load_csv(path) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise DataError(f"{path}: file is empty")
        for name in CSV_COLUMNS:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name}")
        columns: dict[str, list] = {name: [] for name in CSV_COLUMNS}
        for row_no, row in enumerate(reader, start=1):
            for name in CSV_COLUMNS:
                cell = row[name]
                try:
                    value = int(cell) if name == "timestamp" else float(cell)
                except (TypeError, ValueError):
                    raise ParseError(f"{path}: row {row_no}, column {name}: cannot parse {cell!r}") from None
                if not math.isfinite(value):
                    raise ParseError(f"{path}: row {row_no}, column {name}: non-finite value {cell!r}")
                columns[name].append(value)
    if not columns["timestamp"]:
        raise DataError(f"{path}: no data rows")
    bands = np.column_stack([np.array(columns[c], dtype=float) for c in BAND_COLUMNS])
    return Dataset(
        np.array(columns["timestamp"], dtype=np.int64),
        bands,
        np.array(columns["conductivity_signal"], dtype=float),
        np.array(columns["temperature"], dtype=float),
        np.array(columns["usg_points"], dtype=float),
        np.array(columns["conductivity"], dtype=float),
        np.array(columns["volume"], dtype=float),
    )


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    test: np.ndarray
    test_fraction: float
    seed: int


def split(n: int, test_fraction: float = 0.2, seed: int = 0) -> DatasetSplit:
    if not 0 < test_fraction < 1:
        raise ConfigurationError("test_fraction must lie in (0, 1)")
    if n < 2:
        raise ConfigurationError("need at least two samples to split")
    n_test = int(round(n * test_fraction))
    if not 1 <= n_test <= n - 1:
        raise ConfigurationError(f"test_fraction {test_fraction} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return DatasetSplit(np.sort(perm[n_test:]), np.sort(perm[:n_test]), test_fraction, seed)
