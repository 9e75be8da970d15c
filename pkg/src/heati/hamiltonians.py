"""Trapped-ion resource Hamiltonians, the cluster-state observable and exact evolution.

Energies are in units of ``J0`` (hbar = 1) and times are dimensionless ``J0 * t``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse.linalg as spla

from .pauli import PauliString, PauliSum, total_z
from .quantum import ConfigurationError, StateVector, apply_1q, hamming_weights

DENSE_DIAG_MAX_QUBITS = 10
EXACT_MAX_QUBITS = 14
# Below this width one dense block is faster than per-sector blocks.
SECTOR_BLOCK_MIN_QUBITS = 7


class CapabilityError(RuntimeError):
    """Request exceeds what the dense simulator is budgeted for."""


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric spin-spin coupling matrix with zero diagonal."""

    J: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ConfigurationError("coupling matrix must be square")
        if not np.array_equal(J, J.T):
            raise ConfigurationError("coupling matrix must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ConfigurationError("coupling matrix must have a zero diagonal")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def pairs(self):
        """Yield ``(i, j, J_ij)`` for ``i < j``."""
        for i in range(self.n):
            for j in range(i + 1, self.n):
                yield i, j, float(self.J[i, j])

    def scaled(self, factor: float) -> CouplingMatrix:
        return CouplingMatrix(self.J * factor)


def power_law_couplings(n: int, J0: float = 1.0, alpha: float = 1.5) -> CouplingMatrix:
    """``J_ij = J0 / |i - j|**alpha``."""
    if n < 2:
        raise ConfigurationError("need at least two ions")
    if alpha <= 0:
        raise ConfigurationError("alpha must be positive")
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    J = np.zeros((n, n))
    off = d > 0
    J[off] = J0 / d[off] ** alpha
    return CouplingMatrix(J)


def _pair(n: int, i: int, a: str, j: int, b: str) -> PauliString:
    return PauliString.from_ops({i: a, j: b}, n)


class GlobalHamiltonian:
    """A fixed global Hamiltonian with a lazily computed, cached spectral decomposition.

    When the Pauli form commutes with ``sum_i Z_i`` and the register is wide
    enough, the decomposition is stored per Hamming-weight sector.
    """

    def __init__(self, kind: str, couplings: CouplingMatrix | None, field_B: float, pauli_form: PauliSum):
        self.kind = kind
        self.couplings = couplings
        self.field_B = float(field_B)
        self.pauli_form = pauli_form
        self.n_qubits = pauli_form.n_qubits
        self._lock = threading.Lock()
        self._blocks = None

    def __repr__(self) -> str:
        return f"GlobalHamiltonian(kind={self.kind!r}, n_qubits={self.n_qubits}, B={self.field_B})"

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lock"] = None
        state["_blocks"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @cached_property
    def charge_conserving(self) -> bool:
        return self.pauli_form.commutes_with(total_z(self.n_qubits))

    @property
    def terms(self) -> tuple[tuple[float, PauliString], ...]:
        return self.pauli_form.terms

    def dense(self) -> np.ndarray:
        m = self.pauli_form.to_dense()
        return m.real if not np.iscomplexobj(m) or not np.any(m.imag) else m

    def _blocks_cached(self):
        if self._blocks is None:
            with self._lock:
                if self._blocks is None:
                    self._blocks = self._diagonalize()
        return self._blocks

    def _diagonalize(self):
        h = self.dense()
        n = self.n_qubits
        if self.charge_conserving and n >= SECTOR_BLOCK_MIN_QUBITS:
            w = hamming_weights(n)
            blocks = []
            for k in range(n + 1):
                idx = np.flatnonzero(w == k)
                evals, evecs = np.linalg.eigh(h[np.ix_(idx, idx)])
                blocks.append((idx, evals, evecs))
            return blocks
        evals, evecs = np.linalg.eigh(h)
        return [(None, evals, evecs)]

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Full ``(eigenvalues, eigenvectors)`` with columns as eigenvectors."""
        blocks = self._blocks_cached()
        if blocks[0][0] is None:
            return blocks[0][1], blocks[0][2]
        dim = 1 << self.n_qubits
        evals = np.concatenate([b[1] for b in blocks])
        vecs = np.zeros((dim, dim), dtype=np.result_type(*[b[2] for b in blocks]))
        col = 0
        for idx, ev, v in blocks:
            vecs[np.ix_(idx, np.arange(col, col + len(ev)))] = v
            col += len(ev)
        return evals, vecs

    def evolve_array(self, psi: np.ndarray, t: float) -> np.ndarray:
        """``exp(-iHt)`` applied to amplitudes along the last axis."""
        if t == 0.0:
            return psi.copy()
        out = np.empty_like(psi, dtype=complex)
        for idx, evals, vecs in self._blocks_cached():
            sub = psi if idx is None else psi[..., idx]
            if idx is not None and not sub.any():
                out[..., idx] = 0.0
                continue
            coef = (sub @ vecs.conj()) * np.exp(-1j * t * evals)
            res = coef @ vecs.T
            if idx is None:
                return res
            out[..., idx] = res
        return out

    def rescaled_couplings(self, factor: float) -> GlobalHamiltonian:
        """Same kind and field with every coupling multiplied by ``factor``."""
        if self.couplings is None:
            raise ConfigurationError("Hamiltonian has no coupling matrix to rescale")
        if self.kind == "TFIM":
            return build_tfim(self.couplings.scaled(factor), self.field_B)
        if self.kind == "XY":
            return build_xy(self.couplings.scaled(factor))
        raise ConfigurationError(f"cannot rescale Hamiltonian of kind {self.kind!r}")

    @property
    def homogeneous_in_couplings(self) -> bool:
        """True when scaling all couplings scales H itself (no coupling-independent part)."""
        return self.couplings is not None and (self.kind == "XY" or self.field_B == 0.0)


def build_tfim(couplings: CouplingMatrix, B: float) -> GlobalHamiltonian:
    """``sum_{i<j} J_ij X_i X_j + B sum_i Z_i``."""
    n = couplings.n
    terms = [(Jij, _pair(n, i, "X", j, "X")) for i, j, Jij in couplings.pairs()]
    terms += [(B, PauliString(0, 1 << q, n)) for q in range(n)]
    return GlobalHamiltonian("TFIM", couplings, B, PauliSum(n, terms))


def build_xy(couplings: CouplingMatrix) -> GlobalHamiltonian:
    """``sum_{i<j} J_ij (s+_i s-_j + s-_i s+_j) = sum_{i<j} (J_ij/2)(X_i X_j + Y_i Y_j)``."""
    n = couplings.n
    terms = []
    for i, j, Jij in couplings.pairs():
        terms.append((Jij / 2, _pair(n, i, "X", j, "X")))
        terms.append((Jij / 2, _pair(n, i, "Y", j, "Y")))
    return GlobalHamiltonian("XY", couplings, 0.0, PauliSum(n, terms))


def evolve(state: StateVector, H: GlobalHamiltonian, t: float) -> StateVector:
    if state.n_qubits != H.n_qubits:
        raise ConfigurationError("state and Hamiltonian widths differ")
    if not np.isfinite(t):
        raise ConfigurationError("evolution time must be finite")
    return StateVector(H.evolve_array(state.amplitudes, float(t)), check_norm=False)


def cluster_observable(n: int) -> PauliSum:
    """Negative sum of the 1D cluster-state stabilizers (open chain)."""
    if n < 3:
        raise ConfigurationError("cluster observable needs at least 3 qubits")
    terms = []
    for i in range(n):
        ops = {i: "X"}
        if i > 0:
            ops[i - 1] = "Z"
        if i < n - 1:
            ops[i + 1] = "Z"
        terms.append((-1.0, PauliString.from_ops(ops, n)))
    return PauliSum(n, terms)


def exact_cluster_state(n: int) -> StateVector:
    """Hadamard on every qubit, then controlled-Z on each neighbouring pair."""
    if n < 2:
        raise ConfigurationError("cluster state needs at least 2 qubits")
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    had = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    for q in range(n):
        psi = apply_1q(psi, n, q, had)
    idx = np.arange(1 << n)
    for q in range(n - 1):
        both = ((idx >> q) & 1) & ((idx >> (q + 1)) & 1)
        psi = psi * (1 - 2 * both)
    return StateVector(psi)


def exact_ground_state(observable: PauliSum, sector: int | None = None) -> tuple[float, StateVector]:
    """Lowest eigenpair, optionally restricted to a fixed Hamming weight ``sector``.

    Dense diagonalization up to 10 qubits, sparse Lanczos up to 14.
    """
    n = observable.n_qubits
    if n > EXACT_MAX_QUBITS:
        raise CapabilityError(f"{n} qubits exceeds the exact-diagonalization budget of {EXACT_MAX_QUBITS}")
    dim = 1 << n
    mat = observable.to_sparse()
    if sector is not None:
        if not 0 <= sector <= n:
            raise ConfigurationError(f"sector {sector} invalid for {n} qubits")
        idx = np.flatnonzero(hamming_weights(n) == sector)
        mat = mat[idx][:, idx]
    else:
        idx = np.arange(dim)
    size = mat.shape[0]
    if n <= DENSE_DIAG_MAX_QUBITS or size <= 1 << DENSE_DIAG_MAX_QUBITS:
        evals, evecs = np.linalg.eigh(mat.toarray())
        energy, vec = evals[0], evecs[:, 0]
    else:
        evals, evecs = spla.eigsh(mat, k=1, which="SA", tol=1e-12)
        energy, vec = evals[0], evecs[:, 0]
    psi = np.zeros(dim, dtype=complex)
    psi[idx] = vec / np.linalg.norm(vec)
    return float(energy), StateVector(psi)
