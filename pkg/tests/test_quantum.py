import numpy as np
import pytest
import scipy.linalg as sla

from conftest import PAULI, kron_1q, kron_label, random_state
from heati.pauli import PauliString, PauliSum
from heati.quantum import (ConfigurationError, StateVector, apply_1q, apply_pauli_exponential, apply_rotation,
                           bits_to_index, computational_basis_state, expectation, fidelity, index_to_bits,
                           rotation_matrix, sample_bitstrings)


def test_bit_ordering_convention():
    # Qubit 0 is the leftmost character and the least significant index bit.
    assert bits_to_index("100") == 1
    assert bits_to_index("001") == 4
    assert index_to_bits(6, 3) == "011"
    psi = computational_basis_state(3, "100")
    assert psi.amplitudes[1] == 1 and np.count_nonzero(psi.amplitudes) == 1


def test_basis_state_validation():
    with pytest.raises(ConfigurationError):
        computational_basis_state(3, "10")
    with pytest.raises(ConfigurationError):
        computational_basis_state(2, "12")


def test_state_vector_validation():
    with pytest.raises(ConfigurationError):
        StateVector([1, 0, 0])
    with pytest.raises(ConfigurationError):
        StateVector([1, 1])
    with pytest.raises(ConfigurationError):
        StateVector([1, 0, 0, 0], n_qubits=3)
    StateVector([1, 1], check_norm=False)


@pytest.mark.parametrize("axis", ["X", "Y", "Z"])
def test_rotation_matches_matrix_exponential(axis):
    for angle in (0.0, 0.37, -2.1, np.pi):
        np.testing.assert_allclose(rotation_matrix(axis, angle), sla.expm(-0.5j * angle * PAULI[axis]), atol=1e-14)


def test_apply_1q_matches_kronecker(rng):
    n = 4
    psi = random_state(n, rng)
    u = sla.expm(-1j * (0.3 * PAULI["X"] + 0.8 * PAULI["Y"]))
    for q in range(n):
        np.testing.assert_allclose(apply_1q(psi, n, q, u), kron_1q(u, q, n) @ psi, atol=1e-14)
    batch = np.stack([psi, random_state(n, rng)])
    np.testing.assert_allclose(apply_1q(batch, n, 2, u), batch @ kron_1q(u, 2, n).T, atol=1e-14)


def test_apply_rotation_bad_qubit():
    with pytest.raises(IndexError):
        apply_rotation(computational_basis_state(2, "00"), 2, "X", 0.1)


def test_pauli_exponential_matches_expm(rng):
    psi = StateVector(random_state(3, rng))
    out = apply_pauli_exponential(psi, PauliString.from_label("XYZ"), 0.41)
    np.testing.assert_allclose(out.amplitudes, sla.expm(-0.41j * kron_label("XYZ")) @ psi.amplitudes, atol=1e-14)


def test_expectation_and_fidelity(rng):
    psi = StateVector(random_state(3, rng))
    obs = PauliSum.from_labels({"ZZI": 0.4, "XIY": -1.1, "III": 2.0})
    assert expectation(psi, obs) == pytest.approx(np.vdot(psi.amplitudes, obs.to_dense() @ psi.amplitudes).real)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    assert fidelity(computational_basis_state(2, "00"), computational_basis_state(2, "11")) == 0.0


def test_sampling_is_deterministic_and_respects_basis():
    plus = StateVector(np.ones(4) / 2)
    counts = sample_bitstrings(plus, "XX", 500, rng_seed=3)
    assert counts == {"00": 500}
    assert sample_bitstrings(plus, "ZZ", 500, rng_seed=3) == sample_bitstrings(plus, "ZZ", 500, rng_seed=3)
    assert sum(sample_bitstrings(plus, "ZZ", 500, rng_seed=4).values()) == 500
    # |1> measured in Z always gives outcome 1.
    assert sample_bitstrings(computational_basis_state(1, "1"), "Z", 10, 0) == {"1": 10}


def test_sampling_y_basis_eigenstate():
    y_plus = StateVector(np.array([1, 1j]) / np.sqrt(2))
    assert sample_bitstrings(y_plus, "Y", 100, 0) == {"0": 100}


def test_sampling_errors():
    psi = computational_basis_state(2, "00")
    with pytest.raises(ConfigurationError):
        sample_bitstrings(psi, "ZZ", 0)
    with pytest.raises(ConfigurationError):
        sample_bitstrings(psi, "Z", 10)
