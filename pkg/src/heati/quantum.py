"""Dense state vectors and the gate kernels every other module runs on.

Bit ordering: qubit 0 is the leftmost character of a bitstring literal and the
least-significant bit of the amplitude index, so ``"100"`` is index 1.
Rotations follow ``R_a(theta) = exp(-i theta sigma_a / 2)``.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .pauli import PauliString, PauliSum

MAX_QUBITS = 16
NORM_ATOL = 1e-10


class ConfigurationError(ValueError):
    """Inputs are inconsistent with each other (shapes, widths, counts)."""


class StateVector:
    """Normalized vector of ``2**n_qubits`` complex amplitudes."""

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, n_qubits: int | None = None, *, check_norm: bool = True):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ConfigurationError("amplitudes must be one-dimensional")
        n = amps.size.bit_length() - 1
        if amps.size != 1 << n:
            raise ConfigurationError(f"length {amps.size} is not a power of two")
        if n_qubits is not None and n_qubits != n:
            raise ConfigurationError(f"{amps.size} amplitudes do not describe {n_qubits} qubits")
        if not 1 <= n <= MAX_QUBITS:
            raise ConfigurationError(f"{n} qubits outside supported range 1..{MAX_QUBITS}")
        if check_norm and abs(np.vdot(amps, amps).real - 1.0) > NORM_ATOL:
            raise ConfigurationError("state is not normalized")
        self.amplitudes = amps
        self.n_qubits = n

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), check_norm=False)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def bits_to_index(bits: str) -> int:
    return sum(1 << q for q, b in enumerate(bits) if b == "1")


def index_to_bits(index: int, n_qubits: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n_qubits))


def hamming_weights(n_qubits: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n_qubits))


def computational_basis_state(n_qubits: int, bits: str) -> StateVector:
    if len(bits) != n_qubits:
        raise ConfigurationError(f"bitstring {bits!r} has length {len(bits)}, expected {n_qubits}")
    if set(bits) - {"0", "1"}:
        raise ConfigurationError(f"bitstring {bits!r} contains characters other than 0/1")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[bits_to_index(bits)] = 1.0
    return StateVector(amps)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([np.exp(-0.5j * angle), 0, 0, np.exp(0.5j * angle)]).reshape(2, 2)
    raise ValueError(f"unknown rotation axis {axis!r}")


PAULI_MATRICES = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def apply_1q(psi: np.ndarray, n_qubits: int, qubit: int, u: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to ``qubit`` of amplitudes stored along the last axis."""
    lead = psi.shape[:-1]
    view = psi.reshape(*lead, 1 << (n_qubits - 1 - qubit), 2, 1 << qubit)
    return np.matmul(u, view).reshape(psi.shape)


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def apply_rotation(state: StateVector, qubit: int, axis: str, angle: float) -> StateVector:
    _check_qubit(state, qubit)
    out = apply_1q(state.amplitudes, state.n_qubits, qubit, rotation_matrix(axis.upper(), angle))
    return StateVector(out, check_norm=False)


def apply_pauli_exponential(state: StateVector, string: PauliString, angle: float) -> StateVector:
    """``exp(-i angle P)|psi> = cos(angle)|psi> - i sin(angle) P|psi>``."""
    if string.n_qubits != state.n_qubits:
        raise ConfigurationError("Pauli string width does not match the state")
    psi = state.amplitudes
    return StateVector(np.cos(angle) * psi - 1j * np.sin(angle) * string.apply(psi), check_norm=False)


def pauli_exponential_array(psi: np.ndarray, string: PauliString, angle: float) -> np.ndarray:
    return np.cos(angle) * psi - 1j * np.sin(angle) * string.apply(psi)


def expectation(state: StateVector, observable: PauliSum) -> float:
    if observable.n_qubits != state.n_qubits:
        raise ConfigurationError(
            f"observable acts on {observable.n_qubits} qubits, state has {state.n_qubits}")
    psi = state.amplitudes
    return float(np.vdot(psi, observable.apply(psi)).real)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.n_qubits != b.n_qubits:
        raise ConfigurationError("states have different widths")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# Rotate the measurement basis onto Z: H for X, H S^dagger for Y.
_BASIS_CHANGE = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]]) / np.sqrt(2),
}


def rotate_to_basis(psi: np.ndarray, n_qubits: int, basis: Sequence[str]) -> np.ndarray:
    for q, b in enumerate(basis):
        b = b.upper()
        if b in _BASIS_CHANGE:
            psi = apply_1q(psi, n_qubits, q, _BASIS_CHANGE[b])
        elif b not in ("Z", "I"):
            raise ValueError(f"unknown measurement basis {b!r} on qubit {q}")
    return psi


def sample_bitstrings(state: StateVector, basis_rotations: Sequence[str] | str, shots: int,
                      rng_seed: int | np.random.Generator | None = None) -> dict[str, int]:
    """Projective measurement of every qubit in the given per-qubit Pauli basis.

    Outcome ``"0"`` on a qubit means the +1 eigenvalue of that qubit's basis Pauli.
    """
    if shots < 1:
        raise ConfigurationError("shots must be at least 1")
    if len(basis_rotations) != state.n_qubits:
        raise ConfigurationError("need one basis letter per qubit")
    rng = np.random.default_rng(rng_seed)
    probs = np.abs(rotate_to_basis(state.amplitudes, state.n_qubits, basis_rotations)) ** 2
    probs /= probs.sum()
    counts = rng.multinomial(shots, probs)
    return {index_to_bits(int(i), state.n_qubits): int(counts[i]) for i in np.flatnonzero(counts)}
