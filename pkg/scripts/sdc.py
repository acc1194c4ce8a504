"""Qubit superdense coding, the discrete counterpart of the B_SI lidar.

Correspondence with the continuous-variable scheme:

    CNOT_AB                    <->  B_SI
    Z_A^b2 X_A^b1 on Alice     <->  Doppler and delay displacements on the signal
    A in the +/- basis, B in   <->  signal frequency and idler time measurements
    the computational basis

Basis order is |00>, |01>, |10>, |11> with qubit A first.
"""

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np
import pandas as pd

from scripts import config

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2.0)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2.0)
ZERO = np.array([1, 0], dtype=complex)
ONE = np.array([0, 1], dtype=complex)


class NotUnitary(ValueError):
    pass


class NotNormalized(ValueError):
    pass


@dataclass(frozen=True)
class TwoQubitState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != (4,):
            raise NotNormalized(f"expected 4 amplitudes, got shape {amplitudes.shape}")
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > config.STRUCTURAL_TOL:
            raise NotNormalized(f"state norm is {norm!r}")
        object.__setattr__(self, "amplitudes", amplitudes)


@dataclass(frozen=True)
class TwoQubitGate:
    unitary: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.unitary, dtype=complex)
        if U.shape != (4, 4):
            raise NotUnitary(f"expected a 4x4 matrix, got shape {U.shape}")
        residual = np.max(np.abs(U.conj().T @ U - np.eye(4)))
        if residual > config.STRUCTURAL_TOL:
            raise NotUnitary(f"U^dagger U differs from I by {residual:.3g}")
        object.__setattr__(self, "unitary", U)

    def __call__(self, state: TwoQubitState) -> TwoQubitState:
        return TwoQubitState(self.unitary @ state.amplitudes)

    def __matmul__(self, other: "TwoQubitGate") -> "TwoQubitGate":
        return TwoQubitGate(self.unitary @ other.unitary)


def local(op_a: np.ndarray = I2, op_b: np.ndarray = I2) -> TwoQubitGate:
    return TwoQubitGate(np.kron(op_a, op_b))


CNOT = TwoQubitGate(
    np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
)


def _check_bits(*bits):
    for bit in bits:
        if bit not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {bit!r}")


def encoding(b1: int, b2: int) -> np.ndarray:
    """Alice's local operator Z^b2 X^b1"""
    _check_bits(b1, b2)
    return np.linalg.matrix_power(Z, b2) @ np.linalg.matrix_power(X, b1)


def initial_state() -> TwoQubitState:
    """(|0> + |1>)/sqrt(2) on A, |0> on B"""
    return TwoQubitState(np.kron(PLUS, ZERO))


def _probability(state: TwoQubitState, projector: np.ndarray) -> float:
    amplitudes = state.amplitudes
    return float(np.real(amplitudes.conj() @ projector @ amplitudes))


def decode_probabilities(state: TwoQubitState) -> dict:
    """Probabilities of the two local readouts on the final state."""
    minus_a = np.kron(np.outer(MINUS, MINUS.conj()), I2)
    one_b = np.kron(I2, np.outer(ONE, ONE.conj()))
    return {"b1": _probability(state, one_b), "b2": _probability(state, minus_a)}


def _as_bit(probability: float) -> int:
    if min(probability, 1.0 - probability) > config.STRUCTURAL_TOL:
        raise RuntimeError(f"readout is not deterministic: p = {probability!r}")
    return int(round(probability))


def sdc_encode_decode(b1: int, b2: int) -> tuple[int, int]:
    """Prepare, CNOT, encode, CNOT, then read B for b1 and A (in +/-) for b2."""
    state = initial_state()
    state = CNOT(state)
    state = local(encoding(b1, b2))(state)
    state = CNOT(state)
    probs = decode_probabilities(state)
    return _as_bit(probs["b1"]), _as_bit(probs["b2"])


def _phase_aligned_difference(left: np.ndarray, right: np.ndarray) -> float:
    k = np.unravel_index(np.argmax(np.abs(left)), left.shape)
    if abs(right[k]) == 0.0:
        return float(np.max(np.abs(left - right)))
    phase = right[k] / left[k]
    phase /= abs(phase)
    return float(np.max(np.abs(phase * left - right)))


def sdc_operator_identity(b1: int, b2: int) -> float:
    """max |CNOT (E x I) CNOT - E x X^b1| after global phase alignment"""
    E = encoding(b1, b2)
    left = (CNOT @ local(E) @ CNOT).unitary
    right = local(E, np.linalg.matrix_power(X, b1)).unitary
    return _phase_aligned_difference(left, right)


def truth_table() -> pd.DataFrame:
    rows = []
    for b1, b2 in product((0, 1), repeat=2):
        d1, d2 = sdc_encode_decode(b1, b2)
        rows.append(
            {
                "b1": b1,
                "b2": b2,
                "decoded_b1": d1,
                "decoded_b2": d2,
                "correct": (d1, d2) == (b1, b2),
                "identity_residual": sdc_operator_identity(b1, b2),
            }
        )
    table = pd.DataFrame(rows)
    logger.info("superdense coding: %d/4 decoded", int(table["correct"].sum()))
    return table
