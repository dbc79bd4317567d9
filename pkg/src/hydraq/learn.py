"""Losses, circuit gradients, Adam and the hybrid training loop."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import CircuitSpec, angle_matrix, compile_circuit, evaluate_batch, measure, run_program
from .errors import ConfigurationError, DataError, DivergenceError, ShapeError
from .head import HeadSpec

log = logging.getLogger(__name__)

SHIFT = np.pi / 2
INIT_HALF_WIDTH = np.pi / 100
# rows x amplitudes per simulator call; keeps the shifted batches a few tens of MB
_CHUNK_AMPLITUDES = 1 << 21


def mse_loss(targets, predictions) -> float:
    y = np.asarray(targets, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if y.size == 0 or y.shape != p.shape:
        raise ShapeError(f"mse_loss needs equal nonzero lengths, got {y.size} and {p.size}")
    return float(np.mean((y - p) ** 2))


def _run_chunked(circuit: CircuitSpec, program, angles: np.ndarray) -> np.ndarray:
    rows = max(1, _CHUNK_AMPLITUDES // 2**circuit.num_qubits)
    if angles.shape[0] <= rows:
        return measure(circuit, run_program(program, angles))
    parts = [
        measure(circuit, run_program(program, angles[i : i + rows]))
        for i in range(0, angles.shape[0], rows)
    ]
    return np.concatenate(parts, axis=0)


def latent_and_jacobian(circuit: CircuitSpec, features, params):
    """Latent vectors and their exact parameter-shift Jacobian.

    Returns ``z`` of shape (B, m) and ``J`` of shape (B, m, p). A parameter
    feeding several gates gets the sum of the per-gate shift terms.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_parameters,):
        raise ShapeError(f"expected {circuit.num_parameters} parameters, got {params.shape}")
    program = compile_circuit(circuit, x.shape[1])
    base = angle_matrix(program, x, params)
    shifted = program.param_columns()
    b, k = x.shape[0], len(shifted)
    stack = np.repeat(base[None], 1 + 2 * k, axis=0)
    for i, (col, _) in enumerate(shifted):
        stack[1 + 2 * i, :, col] += SHIFT
        stack[2 + 2 * i, :, col] -= SHIFT
    z_all = _run_chunked(circuit, program, stack.reshape((1 + 2 * k) * b, -1))
    z_all = z_all.reshape(1 + 2 * k, b, -1)
    m = z_all.shape[2]
    jac = np.zeros((b, m, circuit.num_parameters))
    for i, (_, slot) in enumerate(shifted):
        jac[:, :, slot] += 0.5 * (z_all[1 + 2 * i] - z_all[2 + 2 * i])
    return z_all[0], jac


def expectation_jacobian(circuit: CircuitSpec, features, params) -> np.ndarray:
    """d<O_j>/d theta_i for a single input, shape (m, p)."""
    return latent_and_jacobian(circuit, np.asarray(features, dtype=float)[None, :], params)[1][0]


def _split(circuit: CircuitSpec, head: HeadSpec, theta):
    theta = np.asarray(theta, dtype=float)
    p = circuit.num_parameters
    if theta.shape != (p + head.num_parameters,):
        raise ShapeError(f"expected {p + head.num_parameters} parameters, got {theta.shape}")
    return theta[:p], head.with_params(theta[p:])


def parameter_shift_gradient(circuit: CircuitSpec, features, params, head: HeadSpec, target) -> np.ndarray:
    """Gradient of ``(target - prediction)**2`` for one sample.

    ``params`` holds only the circuit parameters; the head's trainable values
    are taken from ``head``. The result is ordered circuit-first, then head.
    """
    theta = np.concatenate([np.asarray(params, dtype=float), head.params()])
    return batch_gradient(circuit, head, theta, np.atleast_2d(features), np.atleast_1d(target))[1]


def batch_gradient(circuit: CircuitSpec, head: HeadSpec, theta, features, targets):
    """Mean squared error over a batch and its parameter-shift gradient."""
    cparams, head = _split(circuit, head, theta)
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] != y.size:
        raise ShapeError("features and targets disagree on sample count")
    z, jac = latent_and_jacobian(circuit, x, cparams)
    head.check(z.shape[1])
    resid = head(z) - y
    dpred_dtheta = np.einsum("bm,bmp->bp", head.grad_latent(z), jac)
    grad = np.concatenate([dpred_dtheta, head.grad_params(z)], axis=1)
    return float(np.mean(resid**2)), 2.0 * np.mean(resid[:, None] * grad, axis=0)


def finite_difference_gradient(
    circuit: CircuitSpec, features, params, head: HeadSpec, target, h: float = 1e-4
) -> np.ndarray:
    """Central-difference gradient, computed only from forward evaluations."""
    if h <= 0:
        raise ConfigurationError("finite-difference step must be positive")
    theta = np.concatenate([np.asarray(params, dtype=float), head.params()])
    p = circuit.num_parameters
    n = theta.size
    shifted = np.repeat(theta[None], 2 * n, axis=0)
    shifted[np.arange(n), np.arange(n)] += h
    shifted[n + np.arange(n), np.arange(n)] -= h
    z = evaluate_batch(circuit, np.asarray(features, dtype=float), shifted[:, :p])
    preds = np.array([head.with_params(row[p:])(z[i : i + 1])[0] for i, row in enumerate(shifted)])
    losses = (float(target) - preds) ** 2
    return (losses[:n] - losses[n:]) / (2 * h)


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0

    @classmethod
    def create(cls, size: int, learning_rate: float = 0.01, **kwargs) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), learning_rate, **kwargs)


def adam_step(state: AdamState, params, gradient):
    params = np.asarray(params, dtype=float)
    g = np.asarray(gradient, dtype=float)
    if params.shape != g.shape or params.shape != state.first_moment.shape:
        raise ShapeError("Adam parameters, gradient and moments must share a shape")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1 - state.beta2) * g * g
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return replace(state, first_moment=m, second_moment=v, step_count=t), new_params


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0
    patience: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")


@dataclass
class QuantumModel:
    """A circuit plus head whose parameters are trained as one vector."""

    circuit: CircuitSpec
    head: HeadSpec

    def __post_init__(self):
        self.head.check(len(self.circuit.observables))

    @property
    def num_parameters(self) -> int:
        return self.circuit.num_parameters + self.head.num_parameters

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        circuit = rng.uniform(-INIT_HALF_WIDTH, INIT_HALF_WIDTH, self.circuit.num_parameters)
        return np.concatenate([circuit, self.head.params()])

    def predict(self, features, theta) -> np.ndarray:
        cparams, head = _split(self.circuit, self.head, theta)
        x = np.atleast_2d(np.asarray(features, dtype=float))
        program = compile_circuit(self.circuit, x.shape[1])
        return head(_run_chunked(self.circuit, program, angle_matrix(program, x, cparams)))

    def loss_and_grad(self, features, targets, theta):
        return batch_gradient(self.circuit, self.head, theta, features, targets)

    def with_params(self, theta):
        """Circuit parameters and a head carrying its trained values."""
        return _split(self.circuit, self.head, theta)


@dataclass
class TrainResult:
    params: np.ndarray
    loss_history: list = field(default_factory=list)


def train(model: QuantumModel, features, targets, config: TrainConfig, init=None) -> TrainResult:
    """Mini-batch Adam over shuffled batches; records full-set MSE per epoch."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if y.size == 0:
        raise DataError("cannot train on an empty dataset")
    if x.shape[0] != y.size:
        raise ShapeError("features and targets disagree on sample count")
    rng = np.random.default_rng(config.seed)
    theta = model.init_params(rng) if init is None else np.array(init, dtype=float)
    adam = AdamState.create(theta.size, config.learning_rate)
    batch = min(config.batch_size, y.size)
    history: list[float] = []
    best, stale = np.inf, 0
    for epoch in range(config.epochs):
        order = rng.permutation(y.size)
        for start in range(0, y.size, batch):
            idx = order[start : start + batch]
            _, grad = model.loss_and_grad(x[idx], y[idx], theta)
            adam, theta = adam_step(adam, theta, grad)
        loss = mse_loss(y, model.predict(x, theta))
        if not np.isfinite(loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch}", epoch=epoch)
        history.append(loss)
        log.debug("epoch %d mse %.6g", epoch, loss)
        if config.patience:
            if loss < best:
                best, stale = loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return TrainResult(theta, history)


def write_loss_history(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_mse"])
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, repr(float(loss))])


@dataclass(frozen=True)
class GradientCheck:
    num_circuits: int
    draws: int
    max_deviation: float
    worst: str  # description of the circuit with the largest deviation

    @property
    def passed(self) -> bool:
        return self.max_deviation < GRADCHECK_TOL


GRADCHECK_TOL = 1e-6


def random_circuit(rng: np.random.Generator) -> CircuitSpec:
    """QSM-style circuit with 2-4 qubits, 1-3 layers, 1-3 re-uploads, random entangler and observables."""
    from .circuit import ENTANGLER_PATTERNS, build_qsm
    from .statevector import Observable

    n = int(rng.integers(2, 5))
    layers = int(rng.integers(1, 4))
    reuploads = int(rng.integers(1, 4))
    pattern = str(rng.choice(ENTANGLER_PATTERNS))
    observables = []
    for _ in range(int(rng.integers(1, 3))):
        support = [q for q in range(n) if rng.random() < 0.5] or [int(rng.integers(n))]
        observables.append(Observable.z(*support, coefficient=float(rng.uniform(0.5, 1.5))))
    return build_qsm(n, layers, reuploads, pattern, observables)


def gradient_check(num_circuits: int = 50, draws: int = 5, seed: int = 0, h: float = 1e-4) -> GradientCheck:
    """Largest |parameter shift - central difference| over random circuits and parameter draws."""
    if num_circuits < 1 or draws < 1:
        raise ConfigurationError("gradient check needs at least one circuit and one draw")
    rng = np.random.default_rng(seed)
    worst, label = 0.0, ""
    for c in range(num_circuits):
        circuit = random_circuit(rng)
        m = len(circuit.observables)
        k = int(rng.integers(1, circuit.num_qubits + 1))
        for _ in range(draws):
            x = rng.uniform(-np.pi, np.pi, k)
            params = rng.uniform(-np.pi, np.pi, circuit.num_parameters)
            head = HeadSpec.linear(m).with_params(rng.normal(size=m + 1))
            target = float(rng.normal())
            exact = parameter_shift_gradient(circuit, x, params, head, target)
            approx = finite_difference_gradient(circuit, x, params, head, target, h)
            dev = float(np.max(np.abs(exact - approx)))
            if dev > worst:
                worst = dev
                label = f"circuit {c}: {circuit.num_qubits} qubits, {circuit.num_parameters} parameters"
    return GradientCheck(num_circuits, draws, worst, label)
