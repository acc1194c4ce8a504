from itertools import product

import numpy as np
import pytest

from scripts.sdc import (
    CNOT,
    I2,
    X,
    Z,
    NotNormalized,
    NotUnitary,
    TwoQubitGate,
    TwoQubitState,
    encoding,
    local,
    sdc_encode_decode,
    sdc_operator_identity,
    truth_table,
)

bits = list(product((0, 1), repeat=2))


@pytest.mark.parametrize("b1,b2", bits)
def test_encode_decode(b1, b2):
    assert sdc_encode_decode(b1, b2) == (b1, b2)


@pytest.mark.parametrize("b1,b2", bits)
def test_operator_identity(b1, b2):
    assert sdc_operator_identity(b1, b2) < 1e-12


def test_bit_flip_spreads_to_both_qubits():
    U = (CNOT @ local(X) @ CNOT).unitary
    np.testing.assert_allclose(U, np.kron(X, X), atol=1e-12)


def test_phase_flip_stays_local():
    U = (CNOT @ local(Z) @ CNOT).unitary
    np.testing.assert_allclose(U, np.kron(Z, I2), atol=1e-12)


def test_encoding_order():
    np.testing.assert_allclose(encoding(1, 1), Z @ X)


def test_truth_table():
    table = truth_table()
    assert len(table) == 4
    assert table["correct"].all()
    assert (table["identity_residual"] < 1e-12).all()


@pytest.mark.parametrize("b1,b2", [(2, 0), (0, -1)])
def test_invalid_bits(b1, b2):
    with pytest.raises(ValueError):
        sdc_encode_decode(b1, b2)


def test_gate_must_be_unitary():
    with pytest.raises(NotUnitary):
        TwoQubitGate(2 * np.eye(4))
    with pytest.raises(NotUnitary):
        TwoQubitGate(np.eye(2))


def test_state_must_be_normalised():
    with pytest.raises(NotNormalized):
        TwoQubitState(np.ones(4))
    with pytest.raises(NotNormalized):
        TwoQubitState(np.array([1.0, 0.0]))
