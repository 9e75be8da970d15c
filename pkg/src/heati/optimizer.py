"""Adam minimization of ``<O>`` over ansatz parameters, with restarts and shot schedules."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzConfig, ParameterVector, random_init
from .gradient import EXACT, GradientRequest, energy_and_gradient, full_gradient, objective
from .noise import DriftConfig, NoisyEstimator, SamplingConfig
from .pauli import PauliSum
from .quantum import ConfigurationError, StateVector

MIN = "min"
MEAN = "mean"
GRAD_NORM_FLOOR = 1e-8


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stability: float = 1e-8
    max_steps: int = 120
    restarts: int = 20
    # Optional geometric decay from learning_rate to this value at max_steps.
    learning_rate_final: float | None = None

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("Adam betas must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning rate must be positive")
        if self.max_steps < 1 or self.restarts < 1:
            raise ConfigurationError("max_steps and restarts must be at least 1")
        if self.learning_rate_final is not None and self.learning_rate_final <= 0:
            raise ConfigurationError("final learning rate must be positive")

    def rate(self, k: int) -> float:
        """Learning rate used at step ``k``."""
        if self.learning_rate_final is None or self.max_steps == 1:
            return self.learning_rate
        frac = (k - 1) / (self.max_steps - 1)
        return self.learning_rate * (self.learning_rate_final / self.learning_rate) ** frac


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size))


def adam_step(x: np.ndarray, state: AdamState, grad: np.ndarray, k: int,
              cfg: AdamConfig) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update at step ``k >= 1``. Inputs are not modified."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != x.shape or state.m.shape != x.shape:
        raise ValueError("parameter, gradient and moment shapes differ")
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * grad ** 2
    m_hat = m / (1 - cfg.beta1 ** k)
    v_hat = v / (1 - cfg.beta2 ** k)
    return x - cfg.rate(k) * m_hat / (np.sqrt(v_hat) + cfg.eps_stability), AdamState(m, v)


def shot_schedule(k: int, M0: int) -> int:
    """``M_k = round(M0 k^2 / (1 + k)^2)``, never below one shot."""
    if k < 1 or M0 < 1:
        raise ConfigurationError("shot schedule needs k >= 1 and M0 >= 1")
    return max(1, int(round(M0 * k * k / (1 + k) ** 2)))


@dataclass(frozen=True)
class StepRecord:
    step: int
    energy: float
    grad_norm: float
    shots: int


@dataclass
class OptimizationTrace:
    """History of one optimization run.

    ``energy`` of each step is the noiseless objective at the parameters the
    gradient was taken at; in sampled mode it is a diagnostic only and the
    optimizer never sees it.
    """

    steps: list[StepRecord]
    final_params: ParameterVector
    final_energy: float
    seed: int | None = None
    stop_reason: str = "max_steps"
    best_of_restarts: bool = False

    @property
    def wall_steps(self) -> int:
        return len(self.steps)

    @property
    def total_shots(self) -> int:
        return sum(s.shots for s in self.steps)


def optimize(config: AnsatzConfig, observable: PauliSum, initial: StateVector, cfg: AdamConfig = AdamConfig(),
             mode=EXACT, rng_seed=None, *, target_energy: float | None = None,
             init_params: ParameterVector | None = None, M0: int | None = None) -> OptimizationTrace:
    """Random initialization followed by at most ``cfg.max_steps`` Adam steps.

    ``mode`` is ``"exact"`` or a ``NoisyEstimator``; in the latter case its
    ``shots`` is set to ``shot_schedule(k, M0)`` before each step (``M0``
    defaults to the estimator's sampling config). Variational times are kept
    non-negative. With ``target_energy`` the run stops once the noiseless
    energy is at or below it.
    """
    params = random_init(config, rng_seed) if init_params is None else init_params.copy()
    include = config.trains_times
    exact = isinstance(mode, str) and mode == EXACT
    if not exact and M0 is None:
        M0 = mode.sampling.M0 if mode.sampling is not None else 1000
    x = params.flat(include)
    state = AdamState.zeros(x.size)
    records: list[StepRecord] = []
    reason = "max_steps"
    n_angles = config.n_angles
    for k in range(1, cfg.max_steps + 1):
        req = GradientRequest(config, params, observable, initial, mode, include)
        if exact:
            energy, grad = energy_and_gradient(req)
            shots = 0
        else:
            shots = shot_schedule(k, M0)
            mode.shots = shots
            energy = objective(req)
            grad = full_gradient(req, method="shift")
        gnorm = float(np.linalg.norm(grad))
        records.append(StepRecord(k, energy, gnorm, shots))
        if target_energy is not None and energy <= target_energy:
            reason = "target"
            break
        if exact and gnorm < GRAD_NORM_FLOOR:
            reason = "grad_floor"
            break
        x, state = adam_step(x, state, grad, k, cfg)
        if include:
            np.clip(x[n_angles:], 0.0, None, out=x[n_angles:])
        params = ParameterVector.from_flat(config, x, params.times, include)
    final = objective(GradientRequest(config, params, observable, initial, EXACT, include))
    if reason == "max_steps" and target_energy is not None and final <= target_energy:
        reason = "target"
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return OptimizationTrace(records, params, final, seed, reason)


def restart_seeds(master_seed: int, restarts: int) -> list[int]:
    """Per-restart seeds: the first word of ``SeedSequence([master_seed, trial])``."""
    return [int(np.random.SeedSequence([master_seed, trial]).generate_state(1, np.uint64)[0])
            for trial in range(restarts)]


@dataclass
class RestartSummary:
    traces: list[OptimizationTrace]
    aggregation: str
    finals: np.ndarray = field(init=False)
    aggregate: float = field(init=False)
    best_index: int = field(init=False)

    def __post_init__(self):
        self.finals = np.array([t.final_energy for t in self.traces])
        self.best_index = int(np.argmin(self.finals))
        self.aggregate = float(self.finals.min() if self.aggregation == MIN else self.finals.mean())
        self.traces[self.best_index].best_of_restarts = True

    @property
    def best(self) -> OptimizationTrace:
        return self.traces[self.best_index]


def _one_restart(args) -> OptimizationTrace:
    config, observable, initial, cfg, sampling, drift, seed, target, M0 = args
    if sampling is None and drift is None:
        mode = EXACT
    else:
        noise_seed = np.random.SeedSequence([seed, 1])
        mode = NoisyEstimator(observable, sampling, drift, np.random.default_rng(noise_seed))
    return optimize(config, observable, initial, cfg, mode, seed, target_energy=target, M0=M0)


def multi_restart(config: AnsatzConfig, observable: PauliSum, initial: StateVector, cfg: AdamConfig = AdamConfig(),
                  *, sampling: SamplingConfig | None = None, drift: DriftConfig | None = None,
                  master_seed: int = 0, restarts: int | None = None, aggregation: str = MIN,
                  target_energy: float | None = None, workers: int = 1) -> RestartSummary:
    """Independent runs from derived seeds, aggregated by ``min`` or ``mean`` of the final energies.

    Each restart owns its initialization seed and, in noisy mode, a separate
    noise stream derived from it, so results do not depend on ``workers``.
    """
    restarts = cfg.restarts if restarts is None else restarts
    if restarts < 1:
        raise ConfigurationError("restarts must be at least 1")
    if aggregation not in (MIN, MEAN):
        raise ConfigurationError(f"unknown aggregation {aggregation!r}")
    M0 = sampling.M0 if sampling is not None else None
    jobs = [(config, observable, initial, cfg, sampling, drift, s, target_energy, M0)
            for s in restart_seeds(master_seed, restarts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_one_restart, jobs))
    else:
        traces = [_one_restart(j) for j in jobs]
    return RestartSummary(traces, aggregation)
