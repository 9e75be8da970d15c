import functools

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    """Dense matrix of a Pauli label; qubit 0 is the least significant bit, so it goes last in the Kronecker product."""
    return functools.reduce(np.kron, [PAULI[c] for c in reversed(label)])


def kron_1q(u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [np.eye(2)] * n
    mats[qubit] = u
    return functools.reduce(np.kron, list(reversed(mats)))


def taylor_expm(h: np.ndarray, t: float, terms: int = 20) -> np.ndarray:
    """``exp(-i h t)`` from a truncated power series applied in steps with ``|h| dt <= 0.5``."""
    steps = max(1, int(np.ceil(np.linalg.norm(h, 2) * abs(t) / 0.5)))
    dt = t / steps
    step = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ (-1j * dt * h) / k
        step = step + term
    return np.linalg.matrix_power(step, steps)


def random_state(n: int, rng) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
