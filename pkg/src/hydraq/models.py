"""Regressor facade: one train/predict/serialize contract for all model kinds.

A ``ModelBundle`` carries everything needed to turn raw sensor features
into a prediction in target units: the fitted preprocessing, then either a
circuit with its trained parameters and head, or a boosted ensemble.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import baseline
from .circuit import ENTANGLER_PATTERNS, CircuitSpec, build_qsm, build_su_symmetric
from .datasets import FEATURE_COLUMNS, TARGET_COLUMNS, Dataset, DatasetSplit, split
from .errors import ConfigurationError, IntegrityError, ShapeError
from .head import HeadSpec
from .learn import QuantumModel, TrainConfig, train
from .preprocess import DEFAULT_ALPHA, Pipeline, fit_pipeline

log = logging.getLogger(__name__)

MODEL_KINDS = ("boosted", "qsm", "su_symmetric")
BUNDLE_FORMAT = "hydraq-bundle"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    seed: int = 7
    test_fraction: float = 0.2
    alpha: float = DEFAULT_ALPHA
    # quantum models
    head: str = "linear"
    min_qubits: int = 2
    qsm_layers: int = 3
    qsm_reuploads: int = 2
    qsm_entangler: str = "ring_cnot"
    su_reuploads: int = 3
    su_blocks: int = 2
    epochs: int = 80
    batch_size: int = 32
    learning_rate: float = 0.02
    patience: int = 0
    # boosted baseline
    search_budget: int = 40
    validation_fraction: float = 0.2
    n_trees: tuple = (50, 400)
    max_depth: tuple = (2, 6)
    shrinkage: tuple = (0.03, 0.3)
    min_samples_leaf: tuple = (1, 8)
    subsample: tuple = (0.6, 1.0)

    def problems(self) -> list[tuple[str, str]]:
        """(field, message) for every value outside its valid range."""
        out = []
        if not 0 < self.test_fraction < 1:
            out.append(("test_fraction", "must lie in (0, 1)"))
        if not 0 < self.alpha <= 1:
            out.append(("alpha", "must lie in (0, 1]"))
        if self.head not in ("identity", "linear"):
            out.append(("head", f"unknown head {self.head!r}"))
        if self.qsm_entangler not in ENTANGLER_PATTERNS:
            out.append(("qsm_entangler", f"unknown pattern {self.qsm_entangler!r}; expected one of {ENTANGLER_PATTERNS}"))
        for name in ("min_qubits", "qsm_layers", "qsm_reuploads", "su_reuploads", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                out.append((name, "must be >= 1"))
        if self.su_blocks < 0 or self.patience < 0:
            out.append(("su_blocks" if self.su_blocks < 0 else "patience", "must be >= 0"))
        if not self.learning_rate > 0:
            out.append(("learning_rate", "must be > 0"))
        if not 0 < self.validation_fraction < 1:
            out.append(("validation_fraction", "must lie in (0, 1)"))
        return out

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.seed, self.patience)

    def search_space(self) -> baseline.SearchSpace:
        return baseline.SearchSpace(
            tuple(self.n_trees),
            tuple(self.max_depth),
            tuple(self.shrinkage),
            tuple(self.min_samples_leaf),
            tuple(self.subsample),
            self.search_budget,
            self.seed,
        )

    def digest(self) -> str:
        text = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ModelBundle:
    kind: str
    task: str
    pipeline: Pipeline
    circuit: Optional[CircuitSpec] = None
    params: Optional[np.ndarray] = None
    head: Optional[HeadSpec] = None
    ensemble: Optional[baseline.BoostedEnsemble] = None
    feature_names: list = field(default_factory=lambda: list(FEATURE_COLUMNS))
    metadata: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise IntegrityError(f"unknown model kind {self.kind!r}")
        if self.task not in TARGET_COLUMNS:
            raise IntegrityError(f"unknown task {self.task!r}")
        if self.pipeline is None:
            raise IntegrityError("bundle has no preprocessing")
        if self.kind == "boosted":
            if self.ensemble is None:
                raise IntegrityError("boosted bundle has no ensemble")
        else:
            if self.circuit is None or self.params is None or self.head is None:
                raise IntegrityError(f"{self.kind} bundle is missing its circuit, parameters or head")
            if self.params.shape != (self.circuit.num_parameters,):
                raise IntegrityError("parameter count does not match the circuit")

    def latent(self, raw) -> np.ndarray:
        """Quantum latent vectors z(x) for raw feature rows."""
        from .circuit import evaluate_batch

        self.check()
        if self.kind == "boosted":
            raise IntegrityError("boosted bundles have no quantum latent")
        return evaluate_batch(self.circuit, self._features(raw), self.params)

    def _features(self, raw) -> np.ndarray:
        x = np.atleast_2d(np.asarray(raw, dtype=float))
        if x.shape[1] != len(self.feature_names):
            raise ShapeError(f"bundle expects {len(self.feature_names)} features, got {x.shape[1]}")
        return self.pipeline.transform(x)

    def predict(self, raw) -> np.ndarray:
        self.check()
        x = self._features(raw)
        if self.kind == "boosted":
            return self.ensemble.predict(x)
        return self.head(self.latent(raw))

    def to_dict(self) -> dict:
        self.check()
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "kind": self.kind,
            "task": self.task,
            "target_column": TARGET_COLUMNS[self.task],
            "feature_names": list(self.feature_names),
            "pipeline": self.pipeline.to_dict(),
            "circuit": None if self.circuit is None else self.circuit.to_dict(),
            "params": None if self.params is None else self.params.tolist(),
            "head": None if self.head is None else self.head.to_dict(),
            "ensemble": None if self.ensemble is None else self.ensemble.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelBundle":
        if data.get("format") != BUNDLE_FORMAT:
            raise IntegrityError("not a model bundle")
        if data.get("version") != BUNDLE_VERSION:
            raise IntegrityError(f"unsupported bundle version {data.get('version')!r}")
        try:
            bundle = cls(
                kind=data["kind"],
                task=data["task"],
                pipeline=Pipeline.from_dict(data["pipeline"]),
                circuit=None if data["circuit"] is None else CircuitSpec.from_dict(data["circuit"]),
                params=None if data["params"] is None else np.array(data["params"], dtype=float),
                head=None if data["head"] is None else HeadSpec.from_dict(data["head"]),
                ensemble=None
                if data["ensemble"] is None
                else baseline.BoostedEnsemble.from_dict(data["ensemble"]),
                feature_names=list(data["feature_names"]),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError, AttributeError, ValueError, ConfigurationError) as exc:
            raise IntegrityError(f"incomplete bundle: {exc}") from exc
        bundle.check()
        return bundle

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ModelBundle":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def output_scaling(targets: np.ndarray, bound: float) -> tuple[float, float]:
    """Affine map sending [-bound, bound] onto [min(targets), max(targets)]."""
    lo, hi = float(np.min(targets)), float(np.max(targets))
    return (hi - lo) / (2 * bound), (hi + lo) / 2


def build_circuit(kind: str, num_features: int, config: ModelConfig) -> CircuitSpec:
    if kind == "qsm":
        qubits = max(num_features, config.min_qubits)
        return build_qsm(qubits, config.qsm_layers, config.qsm_reuploads, config.qsm_entangler)
    if kind == "su_symmetric":
        return build_su_symmetric(num_features, config.su_reuploads, config.su_blocks)
    raise ConfigurationError(f"{kind!r} is not a circuit model")


def make_head(kind: str, circuit: CircuitSpec, targets: np.ndarray) -> HeadSpec:
    observables = circuit.observables
    if kind == "identity":
        if len(observables) != 1:
            raise ConfigurationError("identity head needs exactly one observable")
        return HeadSpec.identity(*output_scaling(targets, observables[0].bound()))
    if kind == "linear":
        bound = sum(o.bound() for o in observables)
        return HeadSpec.linear(len(observables), *output_scaling(targets, bound))
    raise ConfigurationError(f"unknown head {kind!r}")


def build_and_train(
    kind: str,
    dataset: Dataset,
    task: str,
    config: ModelConfig = ModelConfig(),
    data_split: Optional[DatasetSplit] = None,
) -> ModelBundle:
    if kind not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    for name, message in config.problems():
        raise ConfigurationError(f"{name}: {message}")
    if data_split is None:
        data_split = split(len(dataset), config.test_fraction, config.seed)
    train_rows = dataset.subset(data_split.train)
    raw = train_rows.features()
    y = train_rows.target(task)
    metadata = {
        "seed": config.seed,
        "config_hash": config.digest(),
        "config": asdict(config),
        "train_size": int(y.size),
    }
    if kind == "boosted":
        pipeline = fit_pipeline(raw, alpha=None, names=FEATURE_COLUMNS)
        x = pipeline.transform(raw)
        search = baseline.random_search(config.search_space(), x, y, config.validation_fraction)
        ensemble = baseline.fit_boosted(x, y, search.best, seed=config.seed)
        metadata["best_hyperparameters"] = asdict(search.best)
        metadata["search_trials"] = search.trials
        return ModelBundle(kind, task, pipeline, ensemble=ensemble, metadata=metadata)

    pipeline = fit_pipeline(raw, alpha=config.alpha, names=FEATURE_COLUMNS)
    x = pipeline.transform(raw)
    circuit = build_circuit(kind, x.shape[1], config)
    head = make_head(config.head, circuit, y)
    model = QuantumModel(circuit, head)
    log.info("training %s on %s: %d qubits, %d parameters", kind, task, circuit.num_qubits, model.num_parameters)
    result = train(model, x, y, config.train_config())
    params, trained_head = model.with_params(result.params)
    metadata["loss_history"] = [float(v) for v in result.loss_history]
    return ModelBundle(kind, task, pipeline, circuit, np.array(params), trained_head, metadata=metadata)
