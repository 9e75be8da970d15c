"""Layered trapped-ion ansatz: per-qubit rotations followed by a global evolution.

Each of the ``D`` layers applies single-qubit rotations to every qubit and then
``exp(-i H t_d)``. There is no trailing rotation layer.

* general variant: rotations ``R_x, R_y, R_x`` applied in that time order with
  angles ``angles[d, q, 0..2]``, global TFIM evolution.
* symmetric variant: one ``R_z(angles[d, q])`` per qubit, charge-conserving
  global evolution (XY by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import hadamard

from .hamiltonians import (CouplingMatrix, GlobalHamiltonian, build_tfim, build_xy,
                           power_law_couplings)
from .pauli import PauliString
from .quantum import ConfigurationError, StateVector, apply_1q, pauli_exponential_array

GENERAL = "general"
SYMMETRIC = "symmetric"
FIXED = "fixed"
VARIATIONAL = "variational"
GENERAL_AXES = ("X", "Y", "X")


@dataclass(frozen=True, eq=False)
class AnsatzConfig:
    n_qubits: int
    depth: int
    variant: str
    hamiltonian: GlobalHamiltonian
    time_mode: str = FIXED
    t0: float = 0.4
    t_max: float = 1.0

    def __post_init__(self):
        if self.variant not in (GENERAL, SYMMETRIC):
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.time_mode not in (FIXED, VARIATIONAL):
            raise ConfigurationError(f"unknown time mode {self.time_mode!r}")
        if self.depth < 1:
            raise ConfigurationError("depth must be at least 1")
        if self.hamiltonian.n_qubits != self.n_qubits:
            raise ConfigurationError("Hamiltonian width does not match n_qubits")
        if self.variant == GENERAL and self.hamiltonian.kind != "TFIM":
            raise ConfigurationError("the general variant evolves under a TFIM Hamiltonian")
        if self.variant == SYMMETRIC and not self.hamiltonian.charge_conserving:
            raise ConfigurationError("the symmetric variant needs a charge-conserving Hamiltonian")
        if self.time_mode == FIXED and self.t0 < 0:
            raise ConfigurationError("fixed evolution time must be non-negative")
        if self.t_max <= 0:
            raise ConfigurationError("t_max must be positive")

    @classmethod
    def general(cls, n_qubits: int, depth: int, *, couplings: CouplingMatrix | None = None,
                B: float = 1.0, time_mode: str = VARIATIONAL, t0: float = 0.4,
                t_max: float = 1.0) -> AnsatzConfig:
        couplings = couplings or power_law_couplings(n_qubits)
        return cls(n_qubits, depth, GENERAL, build_tfim(couplings, B), time_mode, t0, t_max)

    @classmethod
    def symmetric(cls, n_qubits: int, depth: int, *, couplings: CouplingMatrix | None = None,
                  hamiltonian: GlobalHamiltonian | None = None, time_mode: str = FIXED,
                  t0: float = 0.4, t_max: float = 1.0) -> AnsatzConfig:
        if hamiltonian is None:
            hamiltonian = build_xy(couplings or power_law_couplings(n_qubits))
        return cls(n_qubits, depth, SYMMETRIC, hamiltonian, time_mode, t0, t_max)

    @property
    def angle_shape(self) -> tuple[int, ...]:
        if self.variant == GENERAL:
            return (self.depth, self.n_qubits, 3)
        return (self.depth, self.n_qubits)

    @property
    def n_angles(self) -> int:
        return int(np.prod(self.angle_shape))

    @property
    def trains_times(self) -> bool:
        return self.time_mode == VARIATIONAL

    def n_params(self, include_times: bool | None = None) -> int:
        if include_times is None:
            include_times = self.trains_times
        return self.n_angles + (self.depth if include_times else 0)


@dataclass
class ParameterVector:
    """Rotation angles shaped like ``AnsatzConfig.angle_shape`` plus one time per layer.

    The flat layout is ``angles.ravel()`` (layer, qubit, rotation order)
    followed by the ``D`` times when they are trained.
    """

    angles: np.ndarray
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        self.angles = np.array(self.angles, dtype=float)
        if self.times is None:
            self.times = np.zeros(self.angles.shape[0])
        self.times = np.array(self.times, dtype=float).reshape(-1)
        if self.times.shape[0] != self.angles.shape[0]:
            raise ConfigurationError("need exactly one evolution time per layer")
        if not (np.all(np.isfinite(self.angles)) and np.all(np.isfinite(self.times))):
            raise ConfigurationError("parameters must be finite")

    def flat(self, include_times: bool) -> np.ndarray:
        if include_times:
            return np.concatenate([self.angles.ravel(), self.times])
        return self.angles.ravel().copy()

    @classmethod
    def from_flat(cls, config: AnsatzConfig, flat, times=None, include_times: bool | None = None) -> ParameterVector:
        if include_times is None:
            include_times = config.trains_times
        flat = np.asarray(flat, dtype=float)
        if flat.size != config.n_params(include_times):
            raise ConfigurationError(f"expected {config.n_params(include_times)} parameters, got {flat.size}")
        angles = flat[:config.n_angles].reshape(config.angle_shape)
        if include_times:
            times = flat[config.n_angles:]
        elif times is None:
            times = np.full(config.depth, config.t0)
        return cls(angles, np.array(times, dtype=float))

    def copy(self) -> ParameterVector:
        return ParameterVector(self.angles.copy(), self.times.copy())

    def check(self, config: AnsatzConfig) -> None:
        if self.angles.shape != config.angle_shape:
            raise ConfigurationError(f"angles have shape {self.angles.shape}, expected {config.angle_shape}")
        if self.times.shape != (config.depth,):
            raise ConfigurationError(f"times have shape {self.times.shape}, expected ({config.depth},)")


@lru_cache(maxsize=32)
def z_signs(n_qubits: int) -> np.ndarray:
    """``(2**n, n)`` matrix of Z eigenvalues: entry ``[k, q] = 1 - 2*bit_q(k)``."""
    idx = np.arange(1 << n_qubits)
    return (1 - 2 * ((idx[:, None] >> np.arange(n_qubits)) & 1)).astype(float)


def general_layer_unitaries(layer_angles: np.ndarray) -> np.ndarray:
    """``(N, 2, 2)`` stack of ``R_x(a2) R_y(a1) R_x(a0)`` per qubit."""
    h = 0.5 * layer_angles
    c, s = np.cos(h), np.sin(h)
    n = layer_angles.shape[0]
    mats = []
    for k, axis in enumerate(GENERAL_AXES):
        m = np.empty((n, 2, 2), dtype=complex)
        ck, sk = c[:, k], s[:, k]
        if axis == "X":
            m[:, 0, 0] = m[:, 1, 1] = ck
            m[:, 0, 1] = m[:, 1, 0] = -1j * sk
        else:
            m[:, 0, 0] = m[:, 1, 1] = ck
            m[:, 0, 1] = -sk
            m[:, 1, 0] = sk
        mats.append(m)
    return mats[2] @ mats[1] @ mats[0]


def apply_rotation_layer(psi: np.ndarray, config: AnsatzConfig, layer_angles: np.ndarray) -> np.ndarray:
    n = config.n_qubits
    if config.variant == SYMMETRIC:
        return psi * np.exp(-0.5j * (z_signs(n) @ layer_angles))
    for q, u in enumerate(general_layer_unitaries(layer_angles)):
        psi = apply_1q(psi, n, q, u)
    return psi


def evolve_layer(psi: np.ndarray, hamiltonian: GlobalHamiltonian, t: float, j_scale: float = 1.0) -> np.ndarray:
    """Global evolution, with couplings optionally rescaled by ``j_scale``."""
    if j_scale == 1.0:
        return hamiltonian.evolve_array(psi, t)
    if hamiltonian.homogeneous_in_couplings:
        return hamiltonian.evolve_array(psi, t * j_scale)
    return hamiltonian.rescaled_couplings(j_scale).evolve_array(psi, t)


def simulate(config: AnsatzConfig, params: ParameterVector, psi0: np.ndarray, *,
             insertions: dict[int, list[tuple[PauliString, float]]] | None = None,
             j_scale: float = 1.0) -> np.ndarray:
    """Run the circuit on raw amplitudes.

    ``insertions`` maps a layer index to Pauli exponentials ``exp(-i a P)``
    applied right after that layer's global evolution.
    """
    psi = np.asarray(psi0, dtype=complex)
    ham = config.hamiltonian
    if j_scale != 1.0 and not ham.homogeneous_in_couplings:
        ham = ham.rescaled_couplings(j_scale)
        j_scale = 1.0
    for d in range(config.depth):
        psi = apply_rotation_layer(psi, config, params.angles[d])
        psi = evolve_layer(psi, ham, params.times[d], j_scale)
        if insertions and d in insertions:
            for string, angle in insertions[d]:
                psi = pauli_exponential_array(psi, string, angle)
    return psi


def build_state(config: AnsatzConfig, params: ParameterVector, initial: StateVector) -> StateVector:
    params.check(config)
    if initial.n_qubits != config.n_qubits:
        raise ConfigurationError("initial state width does not match the ansatz")
    return StateVector(simulate(config, params, initial.amplitudes), check_norm=False)


def random_init(config: AnsatzConfig, rng_seed: int | np.random.Generator | None) -> ParameterVector:
    """Angles uniform on [0, 2pi); times ``t0`` (fixed) or uniform on (0, t_max]."""
    rng = np.random.default_rng(rng_seed)
    angles = rng.uniform(0.0, 2 * np.pi, size=config.angle_shape)
    if config.trains_times:
        times = config.t_max - rng.uniform(0.0, config.t_max, size=config.depth)
    else:
        times = np.full(config.depth, config.t0)
    return ParameterVector(angles, times)


def total_evolution_time(params: ParameterVector) -> float:
    return float(np.sum(params.times))


class ScheduleSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EchoSchedule:
    """Spin-echo sequence realizing ``exp(-i theta X_i X_j)`` from B=0 Ising evolution.

    Segment ``s`` evolves for ``segment_duration`` with qubits in ``flips[s]``
    conjugated by Z, which flips the sign of every coupling touching exactly one
    of them. ``signs[q, s]`` is the resulting X-frame sign of qubit ``q``.
    """

    n: int
    i: int
    j: int
    theta: float
    signs: np.ndarray
    segment_duration: float

    @property
    def order(self) -> int:
        return self.signs.shape[1]

    @property
    def segments(self) -> tuple[tuple[float, frozenset[int]], ...]:
        return tuple((self.segment_duration, frozenset(int(q) for q in np.flatnonzero(col < 0)))
                     for col in self.signs.T)

    @property
    def total_duration(self) -> float:
        return self.order * self.segment_duration

    def signed_time_sums(self) -> np.ndarray:
        """Integer matrix of ``sum_s signs[k,s] signs[l,s]``, in units of one segment."""
        return self.signs.astype(np.int64) @ self.signs.T.astype(np.int64)

    def net_unitary(self, couplings: CouplingMatrix) -> np.ndarray:
        """Dense product of the conjugated segment evolutions."""
        dim = 1 << self.n
        u = np.eye(dim, dtype=complex)
        if not self.order:
            return u
        ham = build_tfim(couplings, 0.0)
        seg = ham.evolve_array(np.eye(dim, dtype=complex), self.segment_duration).T
        idx = np.arange(dim)
        for _, flips in self.segments:
            mask = sum(1 << q for q in flips)
            z = 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)
            u = (z[:, None] * seg * z[None, :]) @ u
        return u


def synthesize_pairwise_xx(n: int, i: int, j: int, theta: float, couplings: CouplingMatrix, *,
                           max_order: int = 1024) -> EchoSchedule:
    """Refocus every coupling except ``(i, j)`` using Walsh sign patterns.

    Qubits ``i`` and ``j`` share Hadamard row 0, every other qubit gets its own
    row (1, 2, ... in index order), so orthogonality cancels every unwanted
    pair exactly. ``theta`` is reduced modulo pi (a global phase); a negative
    remainder is realized by giving ``j`` the negated row.
    """
    if couplings.n != n:
        raise ConfigurationError("coupling matrix size does not match n")
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ConfigurationError(f"invalid pair ({i}, {j}) for {n} qubits")
    Jij = couplings.J[i, j]
    if Jij == 0:
        raise ConfigurationError(f"pair ({i}, {j}) has no direct coupling")
    reduced = float(np.mod(theta + np.pi / 2, np.pi) - np.pi / 2)
    if reduced == -np.pi / 2:
        reduced = np.pi / 2
    if reduced == 0.0:
        return EchoSchedule(n, i, j, theta, np.zeros((n, 0), dtype=np.int8), 0.0)
    order = 1
    while order < n - 1:
        order *= 2
    if order > max_order:
        raise ScheduleSizeError(f"{n} qubits need a Hadamard matrix of order {order} > {max_order}")
    walsh = hadamard(order).astype(np.int8)
    signs = np.empty((n, order), dtype=np.int8)
    row = 1
    for q in range(n):
        if q in (i, j):
            signs[q] = walsh[0]
        else:
            signs[q] = walsh[row]
            row += 1
    ratio = reduced / Jij
    if ratio < 0:
        signs[j] = -signs[j]
    return EchoSchedule(n, i, j, theta, signs, abs(ratio) / order)
