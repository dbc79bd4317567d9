"""Dense statevector simulation.

Qubit 0 is the most significant bit of a basis index, so the ket |10>
(qubit 0 in state 1) is amplitude index 2. Rotations follow the half-angle
convention R_G(theta) = exp(-i theta G / 2); ZZ(theta) = exp(-i theta Z Z / 2).

The module-level ``*_batch`` kernels act on arrays of shape (2**n, B) holding
B independent states as columns and accept one angle per column; ``StateVector`` and
``apply_gate`` are the single-state interface built on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .errors import CapacityError, QubitIndexError

MAX_QUBITS = 16
NORM_TOL = 1e-10

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT", "ZZ")


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    partner: Optional[int] = None  # CNOT control, or the second ZZ qubit
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("CNOT", "ZZ"):
            if self.partner is None:
                raise ValueError(f"{self.kind} needs a second qubit")
            if self.partner == self.target:
                raise ValueError(f"{self.kind} qubits must differ")
        if self.kind != "CNOT" and self.angle is None:
            raise ValueError(f"{self.kind} needs an angle")

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.partner is None:
            return (self.target,)
        return (self.target, self.partner)


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        n = int(round(np.log2(amplitudes.size)))
        if amplitudes.ndim != 1 or 2**n != amplitudes.size:
            raise ValueError("amplitude count must be a power of two")
        if abs(np.vdot(amplitudes, amplitudes).real - 1.0) > NORM_TOL:
            raise ValueError("amplitudes are not normalized")
        return cls(n, amplitudes.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class Observable:
    """Real linear combination of Pauli-Z strings.

    ``terms`` holds ``(coefficient, support)`` pairs; an empty support is the
    identity.
    """

    terms: tuple[tuple[float, frozenset], ...] = field(default=())

    def __post_init__(self):
        normalized = tuple((float(c), frozenset(int(q) for q in s)) for c, s in self.terms)
        object.__setattr__(self, "terms", normalized)

    @classmethod
    def z(cls, *qubits: int, coefficient: float = 1.0) -> "Observable":
        return cls(((coefficient, frozenset(qubits)),))

    @classmethod
    def mean_z(cls, qubits: Iterable[int]) -> "Observable":
        qubits = list(qubits)
        return cls(tuple((1.0 / len(qubits), frozenset([q])) for q in qubits))

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(self.terms + other.terms)

    def __mul__(self, scalar: float) -> "Observable":
        return Observable(tuple((scalar * c, s) for c, s in self.terms))

    __rmul__ = __mul__

    @property
    def support(self) -> frozenset:
        out = frozenset()
        for _, s in self.terms:
            out = out | s
        return out

    def bound(self) -> float:
        """Largest possible |<O>|: the sum of absolute coefficients."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_dict(self) -> list:
        return [[c, sorted(s)] for c, s in self.terms]

    @classmethod
    def from_dict(cls, data) -> "Observable":
        return cls(tuple((c, frozenset(s)) for c, s in data))


def init_zero_state(num_qubits: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    if not 1 <= num_qubits <= max_qubits:
        raise CapacityError(f"num_qubits must be in [1, {max_qubits}], got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


# --- index tables -----------------------------------------------------------


def _bit(num_qubits: int, qubit: int) -> int:
    return 1 << (num_qubits - 1 - qubit)


@lru_cache(maxsize=None)
def z_diagonal(num_qubits: int, support: frozenset) -> np.ndarray:
    """Eigenvalues (+1/-1) of the Z-string on ``support`` over the basis."""
    idx = np.arange(2**num_qubits)
    mask = 0
    for q in support:
        mask |= _bit(num_qubits, q)
    parity = np.zeros_like(idx)
    m = idx & mask
    while np.any(m):
        parity ^= m & 1
        m = m >> 1
    out = 1.0 - 2.0 * parity
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _cnot_perm(num_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    flip = np.where(idx & _bit(num_qubits, control), _bit(num_qubits, target), 0)
    return idx ^ flip


@lru_cache(maxsize=None)
def _swap_perm(num_qubits: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    ba, bb = _bit(num_qubits, a), _bit(num_qubits, b)
    differ = ((idx & ba) > 0) != ((idx & bb) > 0)
    return np.where(differ, idx ^ (ba | bb), idx)


# --- batched kernels --------------------------------------------------------
# Batched states are stored column-wise, shape (2**n, B): amplitude index
# first, so every gate touches contiguous runs of B values.


def rotation_matrices(kind: str, angles, previous: Optional[np.ndarray] = None) -> np.ndarray:
    """Stack of R_kind(angle) matrices, shape (2, 2, B).

    With ``previous`` the result is R_kind(angle) @ previous, i.e. the
    rotation applied after the gates already folded into ``previous``.
    """
    angles = np.asarray(angles, dtype=float)
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    if previous is None:
        previous = np.zeros((2, 2) + angles.shape, dtype=np.complex128)
        previous[0, 0] = 1.0
        previous[1, 1] = 1.0
    r0, r1 = previous
    out = np.empty_like(previous)
    if kind == "RX":
        ms = -1j * s
        out[0] = c * r0 + ms * r1
        out[1] = c * r1 + ms * r0
    elif kind == "RY":
        out[0] = c * r0 - s * r1
        out[1] = s * r0 + c * r1
    elif kind == "RZ":
        phase = c - 1j * s
        out[0] = phase * r0
        out[1] = phase.conj() * r1
    else:
        raise ValueError(f"not a rotation: {kind!r}")
    return out


def apply_1q_batch(states: np.ndarray, num_qubits: int, qubit: int, mats: np.ndarray) -> np.ndarray:
    """Apply one 2x2 matrix per column; ``mats`` has shape (2, 2, B)."""
    b = states.shape[1]
    view = states.reshape(2**qubit, 2, 2 ** (num_qubits - qubit - 1), b)
    a0 = view[:, 0]
    a1 = view[:, 1]
    out = np.empty_like(view)
    np.multiply(mats[0, 0], a0, out=out[:, 0])
    out[:, 0] += mats[0, 1] * a1
    np.multiply(mats[1, 0], a0, out=out[:, 1])
    out[:, 1] += mats[1, 1] * a1
    return out.reshape(2**num_qubits, b)


def rotate_batch(states: np.ndarray, num_qubits: int, kind: str, qubit: int, angles) -> np.ndarray:
    """Apply R_kind(angle_b) on ``qubit`` of every column b of ``states``."""
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (states.shape[1],))
    return apply_1q_batch(states, num_qubits, qubit, rotation_matrices(kind, angles))


def zz_batch(states: np.ndarray, num_qubits: int, a: int, b: int, angles) -> np.ndarray:
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (states.shape[1],))
    zz = z_diagonal(num_qubits, frozenset([a, b]))
    phase = np.exp(-0.5j * angles)
    return states * np.where(zz[:, None] > 0, phase, phase.conj())


def cnot_batch(states: np.ndarray, num_qubits: int, control: int, target: int) -> np.ndarray:
    return states[_cnot_perm(num_qubits, control, target)]


def swap_batch(states: np.ndarray, num_qubits: int, a: int, b: int) -> np.ndarray:
    return states[_swap_perm(num_qubits, a, b)]


def expectation_batch(states: np.ndarray, num_qubits: int, obs: Observable) -> np.ndarray:
    probs = states.real**2 + states.imag**2
    out = np.zeros(states.shape[1])
    for coef, support in obs.terms:
        out += coef * (z_diagonal(num_qubits, support) @ probs)
    return out


# --- single-state interface -------------------------------------------------


def _check_qubits(num_qubits: int, qubits: Iterable[int]) -> None:
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise QubitIndexError(f"qubit {q} out of range for {num_qubits} qubits")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.num_qubits
    _check_qubits(n, gate.qubits)
    amps = state.amplitudes[:, None]
    if gate.kind in ROTATIONS:
        out = rotate_batch(amps, n, gate.kind, gate.target, gate.angle)
    elif gate.kind == "CNOT":
        out = cnot_batch(amps, n, gate.partner, gate.target)
    else:
        out = zz_batch(amps, n, gate.target, gate.partner, gate.angle)
    return StateVector(n, out[:, 0])


def swap_qubits(state: StateVector, a: int, b: int) -> StateVector:
    n = state.num_qubits
    _check_qubits(n, (a, b))
    if a == b:
        raise QubitIndexError("swap needs two distinct qubits")
    return StateVector(n, state.amplitudes[_swap_perm(n, a, b)])


def expectation(state: StateVector, obs: Observable) -> float:
    _check_qubits(state.num_qubits, obs.support)
    if not obs.terms:
        return 0.0
    return float(expectation_batch(state.amplitudes[:, None], state.num_qubits, obs)[0])
