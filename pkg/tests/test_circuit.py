import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hydraq.circuit import (
    CircuitSpec,
    Encoding,
    Measurement,
    Variational,
    build_qsm,
    build_su_symmetric,
    evaluate,
    evaluate_batch,
    final_state,
    layer_states,
)
from hydraq.errors import ConfigurationError, ShapeError
from hydraq.statevector import Observable, swap_qubits


def coaxial_ry(num_reuploads):
    """One qubit: (RY(x) then trainable RY) repeated, measured in Z."""
    layers = []
    for l in range(num_reuploads):
        layers += [Encoding(upload=l), Variational(l, rotations=("RY",))]
    layers.append(Measurement((Observable.z(0),)))
    return CircuitSpec(1, tuple(layers), num_reuploads)


def slot_count_oracle(num_qubits, num_layers, num_reuploads, pattern):
    per_layer = num_qubits * 3 + (1 if pattern == "symmetric_zz" else 0)
    return num_reuploads * num_layers * per_layer


def test_minimal_qsm_layout():
    c = build_qsm(1, 1, 1, "none", [Observable.z(0)])
    assert c.num_parameters == 3
    assert c.layer_kinds() == ["encoding", "variational", "measurement"]


def test_eight_qubit_parameter_count():
    c = build_qsm(8, 3, 2, "ring_cnot", [Observable.z(q) for q in range(8)])
    assert c.num_parameters == slot_count_oracle(8, 3, 2, "ring_cnot") == 144


@pytest.mark.parametrize("pattern", ["none", "ring_cnot", "full_cnot", "symmetric_zz"])
def test_parameter_count_matches_slot_oracle(pattern):
    for n in (1, 2, 3, 5):
        for layers in (1, 2, 3):
            for reuploads in (1, 2, 3):
                c = build_qsm(n, layers, reuploads, pattern)
                assert c.num_parameters == slot_count_oracle(n, layers, reuploads, pattern)


def test_qsm_block_order():
    c = build_qsm(2, 2, 2, "ring_cnot")
    block = ["encoding"] + ["variational", "entangler"] * 2
    assert c.layer_kinds() == block * 2 + ["measurement"]


def test_empty_observables_rejected():
    with pytest.raises(ConfigurationError):
        build_qsm(2, 1, 1, "ring_cnot", [])


def test_measurement_must_be_last_and_unique():
    meas = Measurement((Observable.z(0),))
    with pytest.raises(ConfigurationError):
        CircuitSpec(1, (meas, Encoding()))
    with pytest.raises(ConfigurationError):
        CircuitSpec(1, (Encoding(), meas, meas))
    with pytest.raises(ConfigurationError):
        CircuitSpec(1, (Encoding(),))


def test_parameter_slots_must_be_contiguous():
    meas = Measurement((Observable.z(0),))
    with pytest.raises(ConfigurationError):
        CircuitSpec(1, (Variational(1), meas))
    with pytest.raises(ConfigurationError):
        CircuitSpec(1, (Variational(0), Variational(0), meas))


def test_su_parameter_counts():
    assert build_su_symmetric(3, 1, 1).num_parameters == 4
    assert build_su_symmetric(3, 2, 2).num_parameters == 16
    c = build_su_symmetric(2, 3, 2)
    assert c.num_qubits == 2
    assert c.num_parameters == 3 * 2 * 4


def test_su_pure_encoding_is_cosine():
    c = build_su_symmetric(1, 1, 0)
    for x in np.linspace(-np.pi, np.pi, 17):
        assert abs(evaluate(c, [x], [])[0] - np.cos(x)) < 1e-12


def test_su_cycles_features_across_uploads():
    # with zero parameters every gate left is a coaxial RY, so angles add per qubit
    c = build_su_symmetric(2, 3, 1)
    x = np.array([0.3, -1.1])
    z = evaluate(c, x, np.zeros(c.num_parameters))[0]
    assert abs(z - np.cos(x[0] + x[1] + x[0])) < 1e-12


def test_single_encoding_example():
    c = CircuitSpec(1, (Encoding(), Measurement((Observable.z(0),))))
    assert evaluate(c, [0.0], []).tolist() == [1.0]


def test_two_upload_coaxial_example():
    c = coaxial_ry(2)
    assert abs(evaluate(c, [np.pi / 4], [0.0, 0.0])[0]) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, t1, t2 = rng.uniform(-np.pi, np.pi, 3)
        assert abs(evaluate(c, [x], [t1, t2])[0] - np.cos(t1 + t2 + 2 * x)) < 1e-12


@pytest.mark.parametrize("pattern", ["none", "ring_cnot", "full_cnot", "symmetric_zz"])
def test_qsm_matches_dense_oracle(pattern):
    rng = np.random.default_rng(len(pattern))
    for _ in range(5):
        n = int(rng.integers(1, 4)) if pattern in ("none", "ring_cnot") else int(rng.integers(2, 4))
        layers, reuploads = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        k = int(rng.integers(1, n + 1))
        c = build_qsm(n, layers, reuploads, pattern)
        x = rng.uniform(-np.pi, np.pi, k)
        params = rng.uniform(-np.pi, np.pi, c.num_parameters)
        expected = oracles.qsm_dense_state(n, layers, reuploads, pattern, x, params)
        np.testing.assert_allclose(final_state(c, x, params).amplitudes, expected, atol=1e-10, rtol=0)
        dense_z = [np.real(np.conj(expected) @ oracles.embed(n, {q: oracles.Z}) @ expected) for q in range(n)]
        np.testing.assert_allclose(evaluate(c, x, params), dense_z, atol=1e-10)


def test_ring_on_two_qubits_uses_both_directions():
    c = build_qsm(2, 1, 1, "ring_cnot")
    x = np.array([0.7, -0.4])
    params = np.linspace(-1, 1, c.num_parameters)
    expected = oracles.qsm_dense_state(2, 1, 1, "ring_cnot", x, params)
    np.testing.assert_allclose(final_state(c, x, params).amplitudes, expected, atol=1e-12)


def test_shape_errors():
    c = build_qsm(2, 1, 1)
    with pytest.raises(ShapeError):
        evaluate(c, [0.1, 0.2, 0.3], np.zeros(c.num_parameters))
    with pytest.raises(ShapeError):
        evaluate(c, [0.1], np.zeros(c.num_parameters + 1))
    with pytest.raises(ShapeError):
        evaluate(build_su_symmetric(1, 1, 1), [], np.zeros(4))


def test_fewer_features_than_qubits_leaves_rest_unencoded():
    c = build_qsm(3, 1, 1, "none")
    params = np.zeros(c.num_parameters)
    z = evaluate(c, [np.pi], params)
    np.testing.assert_allclose(z, [-1.0, 1.0, 1.0], atol=1e-12)


def test_single_reupload_is_plain_vqc():
    c = build_qsm(3, 2, 1, "full_cnot")
    plain = CircuitSpec(3, c.layers, 1)
    rng = np.random.default_rng(5)
    x = rng.uniform(-np.pi, np.pi, 3)
    p = rng.uniform(-np.pi, np.pi, c.num_parameters)
    assert evaluate(c, x, p).tobytes() == evaluate(plain, x, p).tobytes()


def test_repeated_evaluation_bit_identical():
    rng = np.random.default_rng(6)
    c = build_qsm(3, 2, 2, "ring_cnot")
    x = rng.uniform(-np.pi, np.pi, 3)
    p = rng.uniform(-np.pi, np.pi, c.num_parameters)
    first = evaluate(c, x, p).tobytes()
    assert all(evaluate(c, x, p).tobytes() == first for _ in range(100))


def test_batch_matches_single_rows():
    rng = np.random.default_rng(7)
    c = build_qsm(3, 2, 2, "symmetric_zz")
    X = rng.uniform(-np.pi, np.pi, (9, 3))
    p = rng.uniform(-np.pi, np.pi, c.num_parameters)
    batch = evaluate_batch(c, X, p)
    for i in range(9):
        np.testing.assert_allclose(batch[i], evaluate(c, X[i], p), atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    d=st.integers(1, 4),
    reuploads=st.integers(1, 3),
    blocks=st.integers(0, 3),
)
def test_su_state_stays_swap_symmetric(seed, d, reuploads, blocks):
    rng = np.random.default_rng(seed)
    c = build_su_symmetric(d, reuploads, blocks)
    x = rng.uniform(-np.pi, np.pi, d)
    p = rng.uniform(-np.pi, np.pi, c.num_parameters)
    for state in layer_states(c, x, p):
        diff = swap_qubits(state, 0, 1).amplitudes - state.amplitudes
        assert np.linalg.norm(diff) < 1e-10


@pytest.mark.parametrize("L", [1, 2, 3])
def test_reuploading_highest_frequency(L):
    c = coaxial_ry(L)
    rng = np.random.default_rng(L)
    params = rng.uniform(-np.pi, np.pi, L)
    grid = np.linspace(-np.pi, np.pi, 256, endpoint=False)
    z = evaluate_batch(c, grid[:, None], params)[:, 0]
    spectrum = np.abs(np.fft.rfft(z)) / grid.size
    nonzero = np.nonzero(spectrum > 1e-9)[0]
    assert nonzero.max() == L


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_latent_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    obs = [Observable.z(*[q for q in range(n) if rng.random() < 0.6] or [0]) for _ in range(3)]
    c = build_qsm(n, 2, 2, "ring_cnot", obs)
    X = rng.uniform(-np.pi, np.pi, (20, n))
    z = evaluate_batch(c, X, rng.uniform(-np.pi, np.pi, c.num_parameters))
    assert np.all(np.abs(z) <= 1.0 + 1e-12)


def test_circuit_serialization_round_trip():
    for c in (build_qsm(3, 2, 2, "symmetric_zz"), build_su_symmetric(4, 3, 2), coaxial_ry(2)):
        again = CircuitSpec.from_dict(c.to_dict())
        assert again == c
    with pytest.raises(ConfigurationError):
        CircuitSpec.from_dict({"qubits": 2})
