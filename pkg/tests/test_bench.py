import csv
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from hydraq import bench
from hydraq.bench import (
    CSV_HEADER,
    BenchConfig,
    config_text,
    load_config,
    metrics_text,
    ordering_checks,
    parse_config,
    run_benchmark,
)
from hydraq.datasets import generate, save_csv
from hydraq.errors import ConfigurationError, DivergenceError
from hydraq.metrics import metric_row
from hydraq.reference import REFERENCE_VALUES
from small_config import SMALL_INI

REPO = Path(__file__).resolve().parents[1]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_example_config_is_the_default():
    assert load_config(REPO / "configs" / "bench.ini") == BenchConfig()


def test_config_text_round_trip():
    cfg = parse_config(SMALL_INI)
    assert parse_config(config_text(cfg)) == cfg
    assert parse_config(config_text(BenchConfig())) == BenchConfig()


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[model]\nx = 1\n", "unknown section [model]"),
        ("[quantum]\nepoch = 3\n", "[quantum] epoch: unknown field"),
        ("[quantum]\nepochs = many\n", "[quantum] epochs"),
        ("[boosted]\nmax_depth = 3\n", "[boosted] max_depth"),
        ("[run]\ntasks = usg, mood\n", "[run] tasks: unknown entry 'mood'"),
        ("[run]\nmodels = qsm, qsm\n", "[run] models: duplicate"),
        ("[run]\ntest_fraction = 1.5\n", "[run] test_fraction"),
        ("[data]\nn = 1\n", "[data] n"),
        ("[quantum]\nqsm_entangler = star\n", "[quantum] qsm_entangler"),
        ("[data\n", "cfg.ini"),
    ],
)
def test_config_errors_name_source_and_field(text, fragment):
    with pytest.raises(ConfigurationError) as info:
        parse_config(text, "cfg.ini")
    message = str(info.value)
    assert message.startswith("cfg.ini")
    assert fragment in message
    assert "\n" not in message


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="nope.ini"):
        load_config(tmp_path / "nope.ini")


def row(task, model, r2):
    # a two-point row with the requested R^2: y = [0, 1], p = [a, 1 - a], R^2 = 1 - 4a^2
    a = np.sqrt((1 - r2) / 4)
    return metric_row(task, model, [0.0, 1.0], [a, 1 - a])


def test_ordering_checks():
    rows = [row("usg", "boosted", 0.9), row("usg", "su_symmetric", 0.5), row("usg", "qsm", 0.8)]
    rows += [row("volume", "boosted", 0.9), row("volume", "su_symmetric", 0.62), row("volume", "qsm", 0.6)]
    rows += [row("conductivity", "boosted", 0.7), row("conductivity", "su_symmetric", 0.5), row("conductivity", "qsm", 0.8)]
    checks = {c.task: c for c in ordering_checks(rows)}
    assert checks["usg"].ordered
    assert not checks["volume"].ordered and checks["volume"].within_slack
    assert abs(checks["volume"].inversion - 0.02) < 1e-12
    assert not checks["conductivity"].within_slack
    text = metrics_text(rows, list(checks.values()))
    assert "WARNING" in text and "FAILED" in text


def test_reference_values():
    assert REFERENCE_VALUES["usg"]["boosted"] == (0.91, 1.69, 0.41, 0.75, 0.80)
    assert REFERENCE_VALUES["usg"]["qsm"] == (0.84, 2.35, 0.29, 0.54, 0.75)
    assert REFERENCE_VALUES["conductivity"]["su_symmetric"] == (0.49, 4.78, 0.16, 0.28, 0.42)
    assert REFERENCE_VALUES["volume"]["su_symmetric"] is None


@pytest.fixture(scope="module")
def small_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    return run_benchmark(parse_config(SMALL_INI), out)


def test_report_layout(small_report):
    out = small_report.directory
    names = {p.name for p in out.iterdir()}
    expected = {"metrics.csv", "metrics.txt", "reference_table3.csv", "residual_summary.csv"}
    for task in ("usg", "conductivity", "volume"):
        expected |= {f"{task}_scatter.svg", f"{task}_errors.svg", f"{task}_errors.csv"}
        for model in ("boosted", "su_symmetric", "qsm"):
            expected.add(f"{task}_{model}_residuals.csv")
        expected |= {f"{task}_qsm_loss.csv", f"{task}_su_symmetric_loss.csv"}
    assert names == expected
    assert sorted(p.name for p in small_report.files) == sorted(expected)


def test_metric_table_schema(small_report):
    table = read_csv(small_report.directory / "metrics.csv")
    assert table[0] == CSV_HEADER
    assert len(table) == 10
    assert [(r[0], r[1]) for r in table[1:]] == [
        (t, m) for t in ("USG Prediction", "Urine Conductivity", "Urine Volume")
        for m in ("Classical Regression", "QML SU Model", "QSM Model")
    ]
    for r in table[1:]:
        acc = [float(v) for v in r[4:]]
        assert float(r[2]) <= 1 and float(r[3]) >= 0
        assert acc == sorted(acc) and all(0 <= a <= 1 for a in acc)
    reference = read_csv(small_report.directory / "reference_table3.csv")
    assert reference[0] == CSV_HEADER and len(reference) == 10


def test_residuals_agree_with_metric_table(small_report):
    out = small_report.directory
    table = {(r[0], r[1]): r for r in read_csv(out / "metrics.csv")[1:]}
    for (task, model), cell in small_report.cells.items():
        rows = read_csv(out / f"{task}_{model}_residuals.csv")
        assert rows[0] == ["row", "y_true", "y_pred", "residual"]
        residuals = np.array([float(r[3]) for r in rows[1:]])
        assert residuals.size == cell.row.n_test
        label = (bench.TASK_LABELS[task], bench.MODEL_LABELS[model])
        assert abs(np.mean(np.abs(residuals)) - float(table[label][3])) <= 1e-12
        for r in rows[1:]:
            assert float(r[1]) - float(r[2]) == float(r[3])


def test_svgs_are_well_formed(small_report):
    for path in small_report.directory.glob("*.svg"):
        root = ET.fromstring(path.read_text())
        assert root.tag.endswith("svg")


def test_metrics_text_mentions_reference_values(small_report):
    text = (small_report.directory / "metrics.txt").read_text()
    assert "Published reference values" in text
    assert "0.91" in text and "1.69" in text
    assert "R2 ordering check" in text


def test_report_is_deterministic(small_report, tmp_path):
    run_benchmark(parse_config(SMALL_INI), tmp_path)
    first = {p.name: p.read_bytes() for p in small_report.directory.iterdir()}
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert first == second


def test_divergent_cell_becomes_dash_row(tmp_path, monkeypatch):
    real = bench.build_and_train

    def flaky(kind, dataset, task, config, data_split):
        if kind == "su_symmetric" and task == "volume":
            raise DivergenceError("loss became non-finite", epoch=1)
        return real(kind, dataset, task, config, data_split)

    monkeypatch.setattr(bench, "build_and_train", flaky)
    report = run_benchmark(parse_config(SMALL_INI), tmp_path)
    table = read_csv(tmp_path / "metrics.csv")
    assert len(table) == 10
    dash = [r for r in table if r[:2] == ["Urine Volume", "QML SU Model"]][0]
    assert dash[2:] == ["-"] * 5
    assert report.row("volume", "su_symmetric").failed
    assert not (tmp_path / "volume_su_symmetric_residuals.csv").exists()
    assert (tmp_path / "volume_scatter.svg").exists()


def test_csv_data_source_resolves_against_config(tmp_path):
    save_csv(generate(40, seed=1), tmp_path / "data.csv")
    cfg = parse_config(SMALL_INI.replace("n = 60", "csv = data.csv"))
    assert cfg.data_csv == "data.csv"
    assert len(cfg.dataset(tmp_path)) == 40
