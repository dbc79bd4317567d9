import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydraq.errors import ConfigurationError, ShapeError, UndefinedVarianceError
from hydraq.metrics import (
    TASK_DELTAS,
    ResidualSet,
    failed_row,
    mae,
    metric_row,
    r_squared,
    tolerance_accuracy,
)


def test_r_squared_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(3, y.mean())) == 0.0
    assert abs(r_squared(y, [1.5, 2.0, 2.5]) - 0.75) < 1e-15
    assert r_squared(y, [3.0, 2.0, 1.0]) < 0


def test_r_squared_errors():
    with pytest.raises(UndefinedVarianceError):
        r_squared([2.0, 2.0], [1.0, 3.0])
    with pytest.raises(ShapeError):
        r_squared([1.0], [1.0])
    with pytest.raises(ShapeError):
        r_squared([1.0, 2.0], [1.0])


def test_mae_examples():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae([0, 0], [1, -1]) == 1.0
    assert mae([10], [7.5]) == 2.5
    with pytest.raises(ShapeError):
        mae([1, 2], [1])
    with pytest.raises(ShapeError):
        mae([], [])


def test_tolerance_examples():
    acc = tolerance_accuracy([10, 20, 30], [10.5, 22.5, 27.0], (1, 2, 3))
    assert acc == (1 / 3, 1 / 3, 1.0)
    assert tolerance_accuracy([1, 2], [1, 2], (1, 2, 3)) == (1.0, 1.0, 1.0)


def test_task_tolerances():
    assert TASK_DELTAS["volume"] == (25.0, 50.0, 75.0)
    assert TASK_DELTAS["usg"] == TASK_DELTAS["conductivity"] == (1.0, 2.0, 3.0)


@pytest.mark.parametrize("deltas", [(2, 1, 3), (1, 1, 2), (0, 1, 2), (-1, 1, 2), ()])
def test_bad_tolerances(deltas):
    with pytest.raises(ConfigurationError):
        tolerance_accuracy([1, 2], [1, 2], deltas)


def random_case(rng):
    """A target/prediction pair, with exact hits and exact boundary residuals mixed in."""
    n = int(rng.integers(2, 40))
    deltas = tuple(np.cumsum(rng.integers(1, 4, 3)).astype(float))
    y = rng.integers(-50, 50, n).astype(float)
    if np.all(y == y[0]):
        y[0] += 1
    kind = rng.integers(4)
    if kind == 0:
        p = y.copy()
    elif kind == 1:
        # integer offsets hit |e| = delta exactly
        p = y + rng.choice([-1, 1], n) * rng.choice(np.r_[0, deltas], n)
    elif kind == 2:
        p = y + rng.normal(0, deltas[-1], n)
    else:
        p = y.copy()
        p[rng.integers(n)] += rng.choice([-1, 1]) * rng.uniform(1e-9, 1e-3)
    return y, p, deltas


def identity_violations(y, p, deltas):
    """Empty when R^2/MAE/Acc agree with each other and with direct counts."""
    problems = []
    r2, m, acc = r_squared(y, p), mae(y, p), tolerance_accuracy(y, p, deltas)
    perfect = np.array_equal(y, p)
    if (r2 == 1.0) != perfect or (m == 0.0) != perfect:
        problems.append("perfect-fit equivalence")
    if perfect and acc != (1.0,) * len(deltas):
        problems.append("perfect fit must give full accuracy")
    if any(b < a for a, b in zip(acc, acc[1:])):
        problems.append("accuracy not monotone in delta")
    err = np.abs(y - p)
    direct = tuple(sum(1 for e in err if e <= d) / y.size for d in deltas)
    if acc != direct:
        problems.append("accuracy disagrees with direct count")
    if not (r2 <= 1.0 and m >= 0 and all(0 <= a <= 1 for a in acc)):
        problems.append("range")
    if abs(m - np.mean(np.abs(ResidualSet.from_predictions(y, p).residuals))) > 1e-12:
        problems.append("mae vs residuals")
    return problems


def test_metric_identities_on_random_vectors():
    rng = np.random.default_rng(8)
    failures = []
    boundary_hits = 0
    for i in range(1000):
        y, p, deltas = random_case(rng)
        boundary_hits += int(np.any(np.isin(np.abs(y - p), deltas)))
        failures += [(i, msg) for msg in identity_violations(y, p, deltas)]
    assert failures == []
    assert boundary_hits > 100


def test_boundary_residual_counts():
    for delta in (1.0, 2.0, 3.0, 25.0):
        assert tolerance_accuracy([0.0], [delta], (delta, delta + 1)) == (1.0, 1.0)
        below = np.nextafter(delta, 0)
        assert tolerance_accuracy([0.0], [np.nextafter(delta, np.inf)], (below, delta + 1)) == (0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(
    y=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30),
    noise=st.floats(0, 10),
    seed=st.integers(0, 1000),
)
def test_residual_summary_consistency(y, noise, seed):
    y = np.array(y)
    p = y + np.random.default_rng(seed).normal(0, noise, y.size)
    rs = ResidualSet.from_predictions(y, p)
    summary = rs.summary()
    assert abs(mae(y, p) - np.mean(np.abs(rs.residuals))) <= 1e-12 * max(1.0, mae(y, p))
    assert summary["q05"] <= summary["q25"] <= summary["q50"] <= summary["q75"] <= summary["q95"]
    assert rs.residuals.size == y.size


def test_metric_rows():
    row = metric_row("volume", "qsm", [100.0, 200.0, 300.0], [110.0, 150.0, 375.0])
    assert row.deltas == (25.0, 50.0, 75.0)
    assert row.acc == (1 / 3, 2 / 3, 1.0)
    assert row.n_test == 3 and not row.failed
    bad = failed_row("usg", "su_symmetric", 7, "diverged")
    assert bad.failed and bad.n_test == 7 and bad.note == "diverged"
