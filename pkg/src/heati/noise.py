"""Shot-sampling and parameter-drift noise, plus the experiment wall-clock model.

Sampling noise follows a per-term shot allocation ``M_i = |c_i| / sum|c| * M``.
The default estimator is a Gaussian surrogate ``N(mu, sigma^2)`` with
``sigma^2 = sum_i c_i^2 / M_i * (1 - <P_i>^2)``, halved when qubit-wise grouping
is enabled. Bitstring sampling measures each group (or term) for real and is
meant for validation.

Drift multiplies each affected control parameter by ``1 + N(0, eps)`` with
``eps`` the standard deviation.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .ansatz import ParameterVector
from .pauli import PauliString, PauliSum
from .quantum import ConfigurationError, rotate_to_basis

GAUSSIAN = "gaussian"
BITSTRING = "bitstring"
PER_ESTIMATION = "per_estimation"
PER_GROUP = "per_group"


@dataclass(frozen=True)
class SamplingConfig:
    M0: int = 1000
    grouping: bool = True
    estimator_kind: str = GAUSSIAN

    def __post_init__(self):
        if self.M0 < 1:
            raise ConfigurationError("M0 must be at least 1")
        if self.estimator_kind not in (GAUSSIAN, BITSTRING):
            raise ConfigurationError(f"unknown estimator kind {self.estimator_kind!r}")


@dataclass(frozen=True)
class DriftConfig:
    epsilon: float = 0.01
    drift_j0: bool = True
    drift_times: bool = True
    drift_angles: bool = True
    granularity: str = PER_ESTIMATION

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigurationError("drift epsilon must be non-negative")
        if self.granularity not in (PER_ESTIMATION, PER_GROUP):
            raise ConfigurationError(f"unknown drift granularity {self.granularity!r}")


@dataclass(frozen=True)
class WallclockModel:
    J0_physical: float = 2 * np.pi * 500.0  # rad/s
    shot_overhead: float = 4.5e-3  # s per shot: cooling, pulses, readout

    def __post_init__(self):
        if self.J0_physical <= 0 or self.shot_overhead <= 0:
            raise ConfigurationError("wall-clock model fields must be positive")

    def physical_time(self, dimensionless_t: float) -> float:
        """Seconds of evolution corresponding to ``J0 * t``."""
        return dimensionless_t / self.J0_physical


@dataclass(frozen=True)
class MeasurementGroup:
    """Terms measurable together in one per-qubit Pauli basis."""

    basis: str
    members: tuple[int, ...]
    x: int = field(repr=False, default=0)
    z: int = field(repr=False, default=0)


def group_pauli_terms(observable: PauliSum) -> list[MeasurementGroup]:
    """Greedy first-fit grouping by qubit-wise compatibility, largest ``|c|`` first.

    Identity terms need no measurement and are left out. The result is cached
    on the observable.
    """
    cached = observable.__dict__.get("_measurement_groups")
    if cached is not None:
        return list(cached)
    order = sorted((i for i, p in enumerate(observable.strings) if not p.is_identity()),
                   key=lambda i: -abs(observable.coeffs[i]))
    groups: list[tuple[int, int, list[int]]] = []
    for i in order:
        p = observable.strings[i]
        for g, (gx, gz, members) in enumerate(groups):
            both = (gx | gz) & p.support
            if ((gx ^ p.x) & both) == 0 and ((gz ^ p.z) & both) == 0:
                members.append(i)
                groups[g] = (gx | p.x, gz | p.z, members)
                break
        else:
            groups.append((p.x, p.z, [i]))
    n = observable.n_qubits
    out = []
    for gx, gz, members in groups:
        basis = PauliString(gx, gz, n).label.replace("I", "Z")
        out.append(MeasurementGroup(basis, tuple(members), gx, gz))
    observable.__dict__["_measurement_groups"] = tuple(out)
    return out


def allocate_shots(weights, shots: int) -> np.ndarray:
    """Integer shots proportional to ``weights``; every positive weight gets at least one.

    Raises when ``shots`` is below the number of positive weights.
    """
    w = np.abs(np.asarray(weights, dtype=float))
    active = w > 0
    if shots < int(active.sum()):
        raise ConfigurationError(f"{shots} shots cannot cover {int(active.sum())} measurement settings")
    alloc = np.floor(w / w.sum() * shots).astype(np.int64)
    alloc[active & (alloc == 0)] = 1
    while alloc.sum() > shots:
        alloc[np.argmax(alloc)] -= 1
    return alloc


def _wrap_angles(angles: np.ndarray) -> np.ndarray:
    # R(theta + 2pi) = -R(theta): the hardware implements the equivalent angle in [-pi, pi).
    return np.mod(angles + np.pi, 2 * np.pi) - np.pi


def apply_drift(params: ParameterVector, J0: float, drift: DriftConfig | None,
                rng: np.random.Generator) -> tuple[ParameterVector, float]:
    """Independent multiplicative Gaussian fluctuation of ``J0``, every ``t_d`` and every angle."""
    if drift is None or drift.epsilon == 0:
        return params, J0
    eps = drift.epsilon
    if drift.drift_j0:
        J0 = J0 * (1.0 + eps * rng.standard_normal())
    times = params.times
    if drift.drift_times:
        times = times * (1.0 + eps * rng.standard_normal(times.shape))
    angles = params.angles
    if drift.drift_angles:
        angles = angles * (1.0 + eps * rng.standard_normal(angles.shape))
    return ParameterVector(angles, times), J0


def _parities(n_qubits: int, support: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return 1.0 - 2.0 * (np.bitwise_count(idx & support) & 1)


def _measure_means(psi: np.ndarray, n: int, basis: str, shots: int, supports: Iterable[int],
                   rng: np.random.Generator) -> list[float]:
    probs = np.abs(rotate_to_basis(psi, n, basis)) ** 2
    counts = rng.multinomial(shots, probs / probs.sum())
    return [float(counts @ _parities(n, s)) / shots for s in supports]


def surrogate_variance(observable: PauliSum, term_expectations: np.ndarray, shots: float,
                       grouping: bool) -> float:
    """Model variance of one expectation estimate from ``shots`` samples."""
    mask = np.array([not p.is_identity() for p in observable.strings], dtype=bool)
    c = np.abs(observable.coeffs[mask])
    if not c.size:
        return 0.0
    per_term = c / c.sum() * shots
    var = np.sum(c ** 2 / per_term * np.clip(1.0 - term_expectations[mask] ** 2, 0.0, None))
    return 0.5 * var if grouping else var


Prepare = Callable[[ParameterVector, float], np.ndarray]


def estimate_expectation(prepare: Prepare, params: ParameterVector, observable: PauliSum, shots: int,
                         sampling: SamplingConfig | None, drift: DriftConfig | None = None,
                         rng: np.random.Generator | int | None = None) -> tuple[float, float]:
    """Noisy estimate of ``<O>`` and its model standard deviation.

    ``prepare(params, j_scale)`` returns amplitudes for (possibly drifted)
    parameters with couplings scaled by ``j_scale``. With ``sampling=None`` only
    drift acts and the drifted state's exact expectation is returned.
    """
    rng = np.random.default_rng(rng)
    n = observable.n_qubits
    nominal = params
    if drift is not None and drift.epsilon > 0:
        nominal = ParameterVector(_wrap_angles(params.angles), params.times)
    kind = sampling.estimator_kind if sampling else GAUSSIAN
    grouping = bool(sampling and sampling.grouping)
    groups = group_pauli_terms(observable) if (grouping or (drift and drift.granularity == PER_GROUP)) else None
    if sampling is not None:
        needed = len(groups) if grouping else sum(1 for p in observable.strings if not p.is_identity())
        if shots < needed:
            raise ConfigurationError(f"{shots} shots cannot cover {needed} measurement settings")

    def draw_state() -> np.ndarray:
        p, j = apply_drift(nominal, 1.0, drift, rng)
        return prepare(p, j)

    per_group_drift = drift is not None and drift.epsilon > 0 and drift.granularity == PER_GROUP
    const = observable.constant()
    coeffs = observable.coeffs

    if kind == GAUSSIAN:
        if per_group_drift:
            expect = np.zeros(len(coeffs))
            for g in groups:
                vals = observable.term_expectations(draw_state())
                expect[list(g.members)] = vals[list(g.members)]
        else:
            expect = observable.term_expectations(draw_state())
        mask = np.array([not p.is_identity() for p in observable.strings], dtype=bool)
        mu = const + float(coeffs[mask] @ expect[mask])
        if sampling is None:
            return mu, 0.0
        sigma = float(np.sqrt(surrogate_variance(observable, expect, shots, grouping)))
        return mu + sigma * rng.standard_normal(), sigma

    # bitstring sampling
    shared = None if per_group_drift else draw_state()
    estimate, var = const, 0.0
    if grouping:
        weights = [sum(abs(coeffs[i]) for i in g.members) for g in groups]
        alloc = allocate_shots(weights, shots)
        for g, m in zip(groups, alloc):
            psi = draw_state() if per_group_drift else shared
            means = _measure_means(psi, n, g.basis, int(m), [observable.strings[i].support for i in g.members], rng)
            exact = observable.term_expectations(psi)
            for i, mean in zip(g.members, means):
                estimate += coeffs[i] * mean
                var += coeffs[i] ** 2 * max(1.0 - exact[i] ** 2, 0.0) / m
    else:
        idx = [i for i, p in enumerate(observable.strings) if not p.is_identity()]
        alloc = allocate_shots([coeffs[i] for i in idx], shots)
        exact = observable.term_expectations(shared)
        for i, m in zip(idx, alloc):
            p = observable.strings[i]
            basis = p.label.replace("I", "Z")
            (mean,) = _measure_means(shared, n, basis, int(m), [p.support], rng)
            estimate += coeffs[i] * mean
            var += coeffs[i] ** 2 * max(1.0 - exact[i] ** 2, 0.0) / m
    return float(estimate), float(np.sqrt(var))


@dataclass
class NoisyEstimator:
    """Estimator handle consumed by the gradient module in sampled mode.

    ``shots`` is the per-expectation budget and is updated by the optimizer
    each step according to the shot schedule.
    """

    observable: PauliSum
    sampling: SamplingConfig | None = None
    drift: DriftConfig | None = None
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    shots: int = 1000

    def __post_init__(self):
        if self.sampling is None and self.drift is None:
            raise ConfigurationError("a noisy estimator needs sampling and/or drift")
        self.rng = np.random.default_rng(self.rng)
        self.evaluations = 0

    def estimate(self, prepare: Prepare, params: ParameterVector) -> float:
        self.evaluations += 1
        value, _ = estimate_expectation(prepare, params, self.observable, self.shots,
                                        self.sampling, self.drift, self.rng)
        return value


def estimate_wallclock(n_params: int, schedule: Iterable[int], model: WallclockModel = WallclockModel()) -> float:
    """Seconds for ``n_params * sum_k 2 M_k`` shots at ``model.shot_overhead`` each."""
    schedule = list(schedule)
    if n_params < 1 or not schedule or min(schedule) < 1:
        raise ConfigurationError("wall-clock estimate needs positive parameter and shot counts")
    return n_params * sum(2 * m for m in schedule) * model.shot_overhead
