"""Benchmark harness: INI config, task x model runs and report files.

Report layout (all inside the output directory)::

    metrics.csv                     Task,Model,R2,MAE,Acc_delta1..3 at full precision
    metrics.txt                     aligned table, tolerance footnote, ordering check, reference values
    residual_summary.csv            mean, std and quantiles of y - y_hat per cell
    <task>_<model>_residuals.csv    row,y_true,y_pred,residual
    <task>_<model>_loss.csv         epoch,train_mse (quantum models)
    <task>_scatter.svg              true vs predicted, one colour per model
    <task>_errors.svg / .csv        residual histograms on shared bins
    reference_table3.csv            published reference values
"""

from __future__ import annotations

import configparser
import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import plots
from .datasets import TASKS, Dataset, generate, load_csv, split
from .errors import ConfigurationError, DivergenceError, UndefinedVarianceError
from .learn import write_loss_history
from .metrics import MetricRow, ResidualSet, failed_row, metric_row
from .models import MODEL_KINDS, ModelBundle, ModelConfig, build_and_train
from .reference import REFERENCE_VALUES

log = logging.getLogger(__name__)

MODEL_ORDER = ("boosted", "su_symmetric", "qsm")
MODEL_LABELS = {"boosted": "Classical Regression", "su_symmetric": "QML SU Model", "qsm": "QSM Model"}
TASK_LABELS = {"usg": "USG Prediction", "conductivity": "Urine Conductivity", "volume": "Urine Volume"}
TASK_UNITS = {"usg": "points", "conductivity": "mS/cm", "volume": "mL"}
CSV_HEADER = ["Task", "Model", "R2", "MAE", "Acc_delta1", "Acc_delta2", "Acc_delta3"]
ORDERING_SLACK = 0.05

_QUANTUM_KEYS = {
    "alpha": float,
    "head": str,
    "min_qubits": int,
    "qsm_layers": int,
    "qsm_reuploads": int,
    "qsm_entangler": str,
    "su_reuploads": int,
    "su_blocks": int,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "patience": int,
}
_BOOSTED_KEYS = {
    "search_budget": int,
    "validation_fraction": float,
    "n_trees": (int, int),
    "max_depth": (int, int),
    "shrinkage": (float, float),
    "min_samples_leaf": (int, int),
    "subsample": (float, float),
}


@dataclass(frozen=True)
class BenchConfig:
    data_csv: Optional[str] = None
    n: int = 500
    data_seed: int = 7
    noise_level: float = 0.05
    tasks: tuple = TASKS
    models: tuple = MODEL_ORDER
    model: ModelConfig = field(default_factory=ModelConfig)

    @property
    def seed(self) -> int:
        return self.model.seed

    def with_seed(self, seed: int) -> "BenchConfig":
        return replace(self, model=replace(self.model, seed=seed))

    def dataset(self, base_dir: Optional[Path] = None) -> Dataset:
        if self.data_csv:
            path = Path(self.data_csv)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return load_csv(path)
        return generate(self.n, seed=self.data_seed, noise_level=self.noise_level)


def _convert(source: str, section: str, key: str, raw: str, kind):
    where = f"{source}: [{section}] {key}"
    try:
        if isinstance(kind, tuple):
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != len(kind):
                raise ValueError(f"expected {len(kind)} comma-separated values")
            return tuple(k(p) for k, p in zip(kind, parts))
        return kind(raw.strip())
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse {raw!r} ({exc})") from None


def _names(source: str, section: str, key: str, raw: str, allowed) -> tuple:
    names = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not names:
        raise ConfigurationError(f"{source}: [{section}] {key}: empty list")
    for name in names:
        if name not in allowed:
            raise ConfigurationError(f"{source}: [{section}] {key}: unknown entry {name!r}; expected {allowed}")
    if len(set(names)) != len(names):
        raise ConfigurationError(f"{source}: [{section}] {key}: duplicate entries")
    return names


def parse_config(text: str, source: str = "<config>") -> BenchConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}".replace("\n", " ")) from None
    known = {"data", "run", "quantum", "boosted"}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"{source}: unknown section [{section}]")

    def take(section: str, allowed: set) -> dict:
        if not parser.has_section(section):
            return {}
        items = dict(parser.items(section))
        for key in items:
            if key not in allowed:
                raise ConfigurationError(f"{source}: [{section}] {key}: unknown field")
        return items

    cfg = BenchConfig()
    data = take("data", {"csv", "n", "seed", "noise_level"})
    updates = {}
    if data.get("csv"):
        updates["data_csv"] = data["csv"].strip()
    if "n" in data:
        updates["n"] = _convert(source, "data", "n", data["n"], int)
    if "seed" in data:
        updates["data_seed"] = _convert(source, "data", "seed", data["seed"], int)
    if "noise_level" in data:
        updates["noise_level"] = _convert(source, "data", "noise_level", data["noise_level"], float)

    run = take("run", {"tasks", "models", "seed", "test_fraction"})
    model_updates = {}
    if "tasks" in run:
        updates["tasks"] = _names(source, "run", "tasks", run["tasks"], TASKS)
    if "models" in run:
        updates["models"] = _names(source, "run", "models", run["models"], MODEL_KINDS)
    if "seed" in run:
        model_updates["seed"] = _convert(source, "run", "seed", run["seed"], int)
    if "test_fraction" in run:
        model_updates["test_fraction"] = _convert(source, "run", "test_fraction", run["test_fraction"], float)
    for section, keys in (("quantum", _QUANTUM_KEYS), ("boosted", _BOOSTED_KEYS)):
        for key, raw in take(section, set(keys)).items():
            model_updates[key] = _convert(source, section, key, raw, keys[key])
    model = replace(cfg.model, **model_updates)
    for key, message in model.problems():
        section = "run" if key in ("seed", "test_fraction") else "quantum" if key in _QUANTUM_KEYS else "boosted"
        raise ConfigurationError(f"{source}: [{section}] {key}: {message}")
    try:
        model.train_config()
        model.search_space()
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: [boosted] {exc}") from None
    if updates.get("n", cfg.n) < 2:
        raise ConfigurationError(f"{source}: [data] n: need at least 2 samples")
    return replace(cfg, model=model, **updates)


def load_config(path) -> BenchConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def config_text(cfg: BenchConfig) -> str:
    """Render a config back to INI text that ``parse_config`` accepts."""
    m = cfg.model
    lines = ["[data]"]
    if cfg.data_csv:
        lines.append(f"csv = {cfg.data_csv}")
    lines += [f"n = {cfg.n}", f"seed = {cfg.data_seed}", f"noise_level = {cfg.noise_level}", ""]
    lines += [
        "[run]",
        f"tasks = {', '.join(cfg.tasks)}",
        f"models = {', '.join(cfg.models)}",
        f"seed = {m.seed}",
        f"test_fraction = {m.test_fraction}",
        "",
        "[quantum]",
    ]
    lines += [f"{k} = {getattr(m, k)}" for k in _QUANTUM_KEYS]
    lines += ["", "[boosted]"]
    for k, kind in _BOOSTED_KEYS.items():
        value = getattr(m, k)
        lines.append(f"{k} = {', '.join(str(v) for v in value)}" if isinstance(kind, tuple) else f"{k} = {value}")
    return "\n".join(lines) + "\n"


# --- ordering check ---------------------------------------------------------


@dataclass(frozen=True)
class OrderingCheck:
    """Expected R2 ordering classical >= qsm >= su_symmetric on one task."""

    task: str
    inversion: float  # largest amount by which a pair is out of order, 0 if none
    compared: tuple

    @property
    def ordered(self) -> bool:
        return self.inversion <= 0.0

    @property
    def within_slack(self) -> bool:
        return self.inversion <= ORDERING_SLACK


def ordering_checks(rows: list[MetricRow]) -> list[OrderingCheck]:
    out = []
    tasks = list(dict.fromkeys(r.task for r in rows))
    for task in tasks:
        r2 = {r.model: r.r2 for r in rows if r.task == task and not r.failed}
        pairs = [(a, b) for a, b in (("boosted", "qsm"), ("qsm", "su_symmetric")) if a in r2 and b in r2]
        inversion = max([r2[b] - r2[a] for a, b in pairs] + [0.0])
        out.append(OrderingCheck(task, inversion, tuple(pairs)))
    return out


# --- benchmark run ----------------------------------------------------------


@dataclass
class CellResult:
    row: MetricRow
    test_rows: np.ndarray
    residuals: Optional[ResidualSet] = None
    bundle: Optional[ModelBundle] = None


@dataclass
class BenchmarkReport:
    rows: list
    ordering: list
    directory: Path
    files: list
    cells: dict = field(default_factory=dict)

    def row(self, task: str, model: str) -> MetricRow:
        for r in self.rows:
            if r.task == task and r.model == model:
                return r
        raise KeyError((task, model))


def run_cell(kind: str, dataset: Dataset, task: str, config: ModelConfig, data_split) -> CellResult:
    test = dataset.subset(data_split.test)
    y = test.target(task)
    try:
        bundle = build_and_train(kind, dataset, task, config, data_split)
        pred = bundle.predict(test.features())
        if not np.all(np.isfinite(pred)):
            raise DivergenceError("non-finite test predictions")
        row = metric_row(task, kind, y, pred)
    except DivergenceError as exc:
        log.warning("%s on %s diverged: %s", kind, task, exc)
        return CellResult(failed_row(task, kind, y.size, f"diverged: {exc}"), data_split.test)
    except UndefinedVarianceError as exc:
        return CellResult(failed_row(task, kind, y.size, str(exc)), data_split.test)
    return CellResult(row, data_split.test, ResidualSet.from_predictions(y, pred), bundle)


def run_benchmark(config: BenchConfig, out_dir, base_dir: Optional[Path] = None) -> BenchmarkReport:
    dataset = config.dataset(base_dir)
    data_split = split(len(dataset), config.model.test_fraction, config.model.seed)
    models = [m for m in MODEL_ORDER if m in config.models]
    cells = {}
    for task in config.tasks:
        for kind in models:
            log.info("training %s on %s", kind, task)
            cells[(task, kind)] = run_cell(kind, dataset, task, config.model, data_split)
    rows = [cells[(t, m)].row for t in config.tasks for m in models]
    ordering = ordering_checks(rows)
    for check in ordering:
        if not check.ordered:
            log.warning("R2 ordering violated on %s by %.4f", check.task, check.inversion)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = write_report(out, config, cells, rows, ordering)
    return BenchmarkReport(rows, ordering, out, files, cells)


# --- report writing ---------------------------------------------------------


def _num(v: Optional[float]) -> str:
    return "-" if v is None else repr(float(v))


def _csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def metrics_csv_rows(rows: list[MetricRow]) -> list[list[str]]:
    out = []
    for r in rows:
        cells = [TASK_LABELS[r.task], MODEL_LABELS[r.model]]
        if r.failed:
            cells += ["-"] * 5
        else:
            cells += [_num(r.r2), _num(r.mae)] + [_num(a) for a in r.acc]
        out.append(cells)
    return out


def _aligned(header: list[str], body: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = []
    for row in [header] + body:
        text = [row[0].ljust(widths[0]), row[1].ljust(widths[1])]
        text += [c.rjust(w) for c, w in zip(row[2:], widths[2:])]
        lines.append("  ".join(text).rstrip())
    return lines


def metrics_text(rows: list[MetricRow], ordering: list[OrderingCheck]) -> str:
    header = ["Task", "Model", "R2", "MAE", "Acc_d1", "Acc_d2", "Acc_d3", "n_test"]
    body = []
    for r in rows:
        label = TASK_LABELS[r.task] + ("*" if r.task == "volume" else "")
        if r.failed:
            body.append([label, MODEL_LABELS[r.model], "-", "-", "-", "-", "-", str(r.n_test)])
        else:
            body.append(
                [label, MODEL_LABELS[r.model], f"{r.r2:.4f}", f"{r.mae:.4f}"]
                + [f"{a:.4f}" for a in r.acc]
                + [str(r.n_test)]
            )
    lines = ["Synthetic benchmark (held-out test split)", ""] + _aligned(header, body) + [""]
    tasks = list(dict.fromkeys(r.task for r in rows))
    for task in tasks:
        d = next(r.deltas for r in rows if r.task == task)
        lines.append(f"Acc_d1..d3 for {TASK_LABELS[task]}: |y - y_hat| <= {', '.join(f'{v:g}' for v in d)} {TASK_UNITS[task]}")
    if "volume" in tasks:
        lines.append("* volume tolerances are wider because of the wide target range.")
    for r in rows:
        if r.failed:
            lines.append(f"- {TASK_LABELS[r.task]} / {MODEL_LABELS[r.model]}: {r.note}")
    lines += ["", "R2 ordering check (expected Classical >= QSM >= SU):"]
    for c in ordering:
        if not c.compared:
            status = "not checked (missing models)"
        elif c.ordered:
            status = "ok"
        elif c.within_slack:
            status = f"WARNING: inverted by {c.inversion:.4f} (within {ORDERING_SLACK} slack)"
        else:
            status = f"FAILED: inverted by {c.inversion:.4f} (exceeds {ORDERING_SLACK} slack)"
        lines.append(f"  {TASK_LABELS[c.task]}: {status}")
    lines += ["", "Published reference values (clinical dataset, not comparable; context only):", ""]
    ref_body = [row for row in reference_rows() if row[0].rstrip("*") in [TASK_LABELS[t] for t in tasks]]
    lines += _aligned(CSV_HEADER[:2] + ["R2", "MAE", "Acc_d1", "Acc_d2", "Acc_d3"], ref_body)
    return "\n".join(lines) + "\n"


def reference_rows() -> list[list[str]]:
    out = []
    for task, by_model in REFERENCE_VALUES.items():
        for model in MODEL_ORDER:
            values = by_model[model]
            label = TASK_LABELS[task] + ("*" if task == "volume" else "")
            cells = ["-"] * 5 if values is None else [f"{v:.2f}" for v in values]
            out.append([label, MODEL_LABELS[model]] + cells)
    return out


def write_report(out: Path, config: BenchConfig, cells: dict, rows: list, ordering: list) -> list[Path]:
    written = []

    def emit(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    _csv(emit("metrics.csv"), CSV_HEADER, metrics_csv_rows(rows))
    emit("metrics.txt").write_text(metrics_text(rows, ordering))
    _csv(emit("reference_table3.csv"), CSV_HEADER, reference_rows())

    summary_rows = []
    for task in config.tasks:
        scatter, errors = [], []
        for kind in [m for m in MODEL_ORDER if m in config.models]:
            cell = cells[(task, kind)]
            if cell.residuals is None:
                continue
            res = cell.residuals
            _csv(
                emit(f"{task}_{kind}_residuals.csv"),
                ["row", "y_true", "y_pred", "residual"],
                [[int(i), repr(float(a)), repr(float(b)), repr(float(e))]
                 for i, a, b, e in zip(cell.test_rows, res.targets, res.predictions, res.residuals)],
            )
            history = cell.bundle.metadata.get("loss_history") if cell.bundle else None
            if history:
                write_loss_history(emit(f"{task}_{kind}_loss.csv"), history)
            s = res.summary()
            summary_rows.append([task, kind] + [repr(v) for v in s.values()])
            scatter.append((MODEL_LABELS[kind], res.targets, res.predictions))
            errors.append((MODEL_LABELS[kind], res.residuals))
        title = TASK_LABELS[task]
        emit(f"{task}_scatter.svg").write_text(plots.scatter_svg(title, scatter, TASK_UNITS[task]))
        edges = plots.histogram_bins(errors)
        emit(f"{task}_errors.svg").write_text(plots.histogram_svg(title, errors, edges, TASK_UNITS[task]))
        hist_rows = []
        for name, e in errors:
            counts = np.histogram(e, bins=edges)[0]
            hist_rows += [[name, repr(float(lo)), repr(float(hi)), int(c)] for lo, hi, c in zip(edges, edges[1:], counts)]
        _csv(emit(f"{task}_errors.csv"), ["model", "bin_low", "bin_high", "count"], hist_rows)
    _csv(
        emit("residual_summary.csv"),
        ["task", "model", "mean", "std", "q05", "q25", "q50", "q75", "q95"],
        summary_rows,
    )
    return written
