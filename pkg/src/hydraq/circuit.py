"""Layered circuit description and exact forward evaluation.

A circuit is an ordered tuple of layers. Each re-upload block is an
``Encoding`` followed by ``num_layers`` pairs of ``Variational`` and
``Entangler`` layers; a single ``Measurement`` layer closes the circuit.

Evaluation compiles the layers once per feature count into a flat op list
whose angles come from three sources: a feature column, a parameter slot or
nothing (CNOT). Batched evaluation then runs every row of an angle matrix
as an independent statevector, which is what the gradient code relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, ShapeError
from .statevector import (
    MAX_QUBITS,
    ROTATIONS,
    Observable,
    StateVector,
    apply_1q_batch,
    cnot_batch,
    expectation_batch,
    rotation_matrices,
    zz_batch,
)

ENTANGLER_PATTERNS = ("none", "ring_cnot", "full_cnot", "symmetric_zz")


@dataclass(frozen=True)
class Encoding:
    """RY angle embedding.

    Per-qubit mode sends feature j to qubit j. Symmetric mode applies the same
    RY(x_j) to every qubit, with j = upload mod feature count, so successive
    uploads cycle through the features (consecutive coaxial RY gates would
    otherwise merge into a single RY of the feature sum).
    """

    symmetric: bool = False
    upload: int = 0
    kind = "encoding"


@dataclass(frozen=True)
class Variational:
    offset: int
    rotations: tuple[str, ...] = ROTATIONS
    shared: bool = False
    kind = "variational"

    def num_parameters(self, num_qubits: int) -> int:
        per = len(self.rotations)
        return per if self.shared else per * num_qubits

    def slot(self, qubit: int, rotation: int) -> int:
        per = len(self.rotations)
        return self.offset + rotation + (0 if self.shared else qubit * per)


@dataclass(frozen=True)
class Entangler:
    pattern: str
    offset: Optional[int] = None
    kind = "entangler"

    def num_parameters(self, num_qubits: int) -> int:
        return 1 if self.pattern == "symmetric_zz" else 0


@dataclass(frozen=True)
class Measurement:
    observables: tuple[Observable, ...]
    kind = "measurement"


LayerSpec = Union[Encoding, Variational, Entangler, Measurement]


@dataclass(frozen=True)
class CircuitSpec:
    num_qubits: int
    layers: tuple
    num_reuploads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"num_qubits must be in [1, {MAX_QUBITS}]")
        if self.num_reuploads < 1:
            raise ConfigurationError("num_reuploads must be >= 1")
        kinds = [layer.kind for layer in self.layers]
        if kinds.count("measurement") != 1 or kinds[-1] != "measurement":
            raise ConfigurationError("circuit needs exactly one measurement layer, placed last")
        if not self.layers[-1].observables:
            raise ConfigurationError("measurement layer has no observables")
        for obs in self.layers[-1].observables:
            if any(q >= self.num_qubits for q in obs.support):
                raise ConfigurationError("observable acts outside the register")
        slots = []
        for layer in self.layers:
            if layer.kind == "variational":
                for r in layer.rotations:
                    if r not in ROTATIONS:
                        raise ConfigurationError(f"unknown rotation {r!r}")
                n = layer.num_parameters(self.num_qubits)
                slots.extend(range(layer.offset, layer.offset + n))
            elif layer.kind == "entangler":
                if layer.pattern not in ENTANGLER_PATTERNS:
                    raise ConfigurationError(f"unknown entangler {layer.pattern!r}")
                if layer.pattern == "symmetric_zz":
                    if layer.offset is None:
                        raise ConfigurationError("symmetric_zz needs a parameter slot")
                    slots.append(layer.offset)
        if sorted(slots) != list(range(len(slots))):
            raise ConfigurationError("parameter slots must be unique and contiguous from 0")

    @property
    def num_parameters(self) -> int:
        total = 0
        for layer in self.layers:
            if layer.kind in ("variational", "entangler"):
                total += layer.num_parameters(self.num_qubits)
        return total

    @property
    def observables(self) -> tuple[Observable, ...]:
        return self.layers[-1].observables

    @property
    def symmetric_encoding(self) -> bool:
        return any(l.kind == "encoding" and l.symmetric for l in self.layers)

    def layer_kinds(self) -> list[str]:
        return [layer.kind for layer in self.layers]

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            if layer.kind == "encoding":
                layers.append({"kind": "encoding", "symmetric": layer.symmetric, "upload": layer.upload})
            elif layer.kind == "variational":
                layers.append(
                    {
                        "kind": "variational",
                        "offset": layer.offset,
                        "rotations": list(layer.rotations),
                        "shared": layer.shared,
                    }
                )
            elif layer.kind == "entangler":
                layers.append({"kind": "entangler", "pattern": layer.pattern, "offset": layer.offset})
            else:
                layers.append(
                    {"kind": "measurement", "observables": [o.to_dict() for o in layer.observables]}
                )
        return {"qubits": self.num_qubits, "reuploads": self.num_reuploads, "layers": layers}

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitSpec":
        try:
            layers = []
            for item in data["layers"]:
                kind = item["kind"]
                if kind == "encoding":
                    layers.append(Encoding(bool(item["symmetric"]), int(item["upload"])))
                elif kind == "variational":
                    layers.append(
                        Variational(int(item["offset"]), tuple(item["rotations"]), bool(item["shared"]))
                    )
                elif kind == "entangler":
                    layers.append(Entangler(item["pattern"], item["offset"]))
                elif kind == "measurement":
                    layers.append(
                        Measurement(tuple(Observable.from_dict(o) for o in item["observables"]))
                    )
                else:
                    raise ConfigurationError(f"unknown layer kind {kind!r}")
            return cls(int(data["qubits"]), tuple(layers), int(data["reuploads"]))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed circuit description: {exc}") from exc


def _entangler_layer(pattern: str, offset: int) -> Optional[Entangler]:
    if pattern == "none":
        return None
    if pattern == "symmetric_zz":
        return Entangler(pattern, offset)
    return Entangler(pattern)


def build_qsm(
    num_qubits: int,
    num_layers: int,
    num_reuploads: int,
    entangler_pattern: str = "ring_cnot",
    observables=None,
) -> CircuitSpec:
    if num_qubits < 1 or num_layers < 1:
        raise ConfigurationError("num_qubits and num_layers must be >= 1")
    if entangler_pattern not in ENTANGLER_PATTERNS:
        raise ConfigurationError(f"unknown entangler {entangler_pattern!r}")
    if observables is None:
        observables = [Observable.z(q) for q in range(num_qubits)]
    if not observables:
        raise ConfigurationError("at least one observable is required")
    layers: list = []
    offset = 0
    for upload in range(num_reuploads):
        layers.append(Encoding(upload=upload))
        for _ in range(num_layers):
            var = Variational(offset)
            layers.append(var)
            offset += var.num_parameters(num_qubits)
            ent = _entangler_layer(entangler_pattern, offset)
            if ent is not None:
                layers.append(ent)
                offset += ent.num_parameters(num_qubits)
    layers.append(Measurement(tuple(observables)))
    return CircuitSpec(num_qubits, tuple(layers), num_reuploads)


def build_su_symmetric(num_features: int, num_reuploads: int, num_blocks: int) -> CircuitSpec:
    """Two-qubit regressor built only from SWAP-invariant operations.

    Every gate acts identically on both qubits (or symmetrically, for ZZ), so
    the state stays in the three-dimensional symmetric subspace.
    """
    if num_features < 1:
        raise ConfigurationError("num_features must be >= 1")
    if num_reuploads < 1 or num_blocks < 0:
        raise ConfigurationError("num_reuploads must be >= 1 and num_blocks >= 0")
    layers: list = []
    offset = 0
    for upload in range(num_reuploads):
        layers.append(Encoding(symmetric=True, upload=upload))
        for _ in range(num_blocks):
            layers.append(Variational(offset, shared=True))
            layers.append(Entangler("symmetric_zz", offset + 3))
            offset += 4
    layers.append(Measurement((Observable.mean_z([0, 1]),)))
    return CircuitSpec(2, tuple(layers), num_reuploads)


# --- compilation ------------------------------------------------------------

# op = (kind, qubits, source_kind, source_index, layer_index)
# source_kind: 0 none, 1 feature column, 2 parameter slot


@dataclass(frozen=True)
class Program:
    num_qubits: int
    ops: tuple
    num_layers: int

    @property
    def angle_ops(self) -> list[int]:
        return [i for i, op in enumerate(self.ops) if op[2] != 0]

    def param_columns(self) -> list[tuple[int, int]]:
        """(angle column, parameter slot) for every parameterised gate."""
        out = []
        col = 0
        for op in self.ops:
            if op[2] == 0:
                continue
            if op[2] == 2:
                out.append((col, op[3]))
            col += 1
        return out


@lru_cache(maxsize=256)
def compile_circuit(circuit: CircuitSpec, num_features: int) -> Program:
    n = circuit.num_qubits
    if circuit.symmetric_encoding:
        if num_features < 1:
            raise ShapeError("symmetric encoding needs at least one feature")
    elif num_features > n:
        raise ShapeError(f"{num_features} features exceed {n} qubits")
    ops = []
    for li, layer in enumerate(circuit.layers):
        if layer.kind == "encoding":
            if layer.symmetric:
                j = layer.upload % num_features
                ops.extend(("RY", (q,), 1, j, li) for q in range(n))
            else:
                ops.extend(("RY", (j,), 1, j, li) for j in range(num_features))
        elif layer.kind == "variational":
            for q in range(n):
                for r, rot in enumerate(layer.rotations):
                    ops.append((rot, (q,), 2, layer.slot(q, r), li))
        elif layer.kind == "entangler":
            if layer.pattern == "ring_cnot" and n > 1:
                ops.extend(("CNOT", (q, (q + 1) % n), 0, 0, li) for q in range(n))
            elif layer.pattern == "full_cnot":
                ops.extend(("CNOT", (i, j), 0, 0, li) for i in range(n) for j in range(i + 1, n))
            elif layer.pattern == "symmetric_zz":
                ops.extend(
                    ("ZZ", (i, j), 2, layer.offset, li) for i in range(n) for j in range(i + 1, n)
                )
    return Program(n, tuple(ops), len(circuit.layers))


def _as_batch(circuit: CircuitSpec, features, params):
    x = np.asarray(features, dtype=float)
    p = np.asarray(params, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError("features must be a vector or a matrix")
    if p.shape[-1:] != (circuit.num_parameters,) or p.ndim > 2:
        raise ShapeError(f"expected {circuit.num_parameters} parameters, got shape {p.shape}")
    if p.ndim == 2 and p.shape[0] != x.shape[0]:
        if x.shape[0] == 1:
            x = np.repeat(x, p.shape[0], axis=0)
        else:
            raise ShapeError("per-row parameters must match the feature rows")
    return x, p


def angle_matrix(program: Program, features: np.ndarray, params: np.ndarray) -> np.ndarray:
    """One row of gate angles per batch row; ``params`` is (p,) or (B, p)."""
    b = features.shape[0]
    cols = []
    for op in program.ops:
        if op[2] == 1:
            cols.append(features[:, op[3]])
        elif op[2] == 2:
            cols.append(np.broadcast_to(params[..., op[3]], (b,)))
    if not cols:
        return np.zeros((b, 0))
    return np.stack(cols, axis=1)


def run_program(program: Program, angles: np.ndarray, record_layers: bool = False):
    """Simulate every row of ``angles`` from |0...0>.

    Returns the final states as columns of a (2**n, B) array, plus the states
    after each layer when ``record_layers`` is set. Runs of single-qubit
    rotations are multiplied into one 2x2 matrix per qubit before touching
    the state.
    """
    n = program.num_qubits
    b = angles.shape[0]
    states = np.zeros((2**n, b), dtype=np.complex128)
    states[0] = 1.0
    pending: dict[int, np.ndarray] = {}
    history = []

    def flush(qubits):
        nonlocal states
        for q in qubits:
            mats = pending.pop(q, None)
            if mats is not None:
                states = apply_1q_batch(states, n, q, mats)

    col = 0
    current_layer = 0
    for kind, qubits, source, _, layer in program.ops:
        if record_layers:
            while current_layer < layer:
                flush(sorted(pending))
                history.append(states.copy())
                current_layer += 1
        if kind == "CNOT":
            flush(qubits)
            states = cnot_batch(states, n, qubits[0], qubits[1])
            continue
        theta = angles[:, col]
        col += 1
        if kind == "ZZ":
            flush(qubits)
            states = zz_batch(states, n, qubits[0], qubits[1], theta)
        else:
            q = qubits[0]
            pending[q] = rotation_matrices(kind, theta, pending.get(q))
    flush(sorted(pending))
    if record_layers:
        while current_layer < program.num_layers:
            history.append(states.copy())
            current_layer += 1
        return states, history
    return states


def measure(circuit: CircuitSpec, states: np.ndarray) -> np.ndarray:
    n = circuit.num_qubits
    return np.stack([expectation_batch(states, n, o) for o in circuit.observables], axis=1)


def evaluate_batch(circuit: CircuitSpec, features, params) -> np.ndarray:
    """Latent vectors for a batch: features (B, d), params (p,) or (B, p) -> (B, m)."""
    x, p = _as_batch(circuit, features, params)
    program = compile_circuit(circuit, x.shape[1])
    return measure(circuit, run_program(program, angle_matrix(program, x, p)))


def evaluate(circuit: CircuitSpec, features, params) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 1:
        raise ShapeError("evaluate takes a single feature vector")
    return evaluate_batch(circuit, features, params)[0]


def final_state(circuit: CircuitSpec, features, params) -> StateVector:
    x, p = _as_batch(circuit, np.asarray(features, dtype=float), params)
    program = compile_circuit(circuit, x.shape[1])
    return StateVector(circuit.num_qubits, run_program(program, angle_matrix(program, x, p))[:, 0])


def layer_states(circuit: CircuitSpec, features, params) -> list[StateVector]:
    """State after each layer (the measurement layer repeats the last state)."""
    x, p = _as_batch(circuit, np.asarray(features, dtype=float), params)
    program = compile_circuit(circuit, x.shape[1])
    _, history = run_program(program, angle_matrix(program, x, p), record_layers=True)
    return [StateVector(circuit.num_qubits, h[:, 0]) for h in history]
