"""Parameter-shift gradients of ``f = <psi0| U^dag O U |psi0>``.

For a gate ``exp(-i a G)`` with ``G^2 = I``, inserting ``U_pm = exp(-+i pi/4 G)``
right after it gives ``df/da = f(U_+) - f(U_-)``. Stored rotation angles use
``R(theta) = exp(-i theta sigma/2)``, so ``df/dtheta = (f(theta + pi/2) - f(theta - pi/2)) / 2``.
For an evolution time ``t_d`` with ``H = sum_m a_m P_m`` the same insertion is
done for every term ``P_m`` after the layer's evolution and weighted by ``a_m``.

``full_gradient`` in exact mode uses a reverse sweep that evaluates the
identical shift differences, ``f(U_+) - f(U_-) = -2 Im <P phi|lam>``, from one
forward and one backward pass instead of two circuits per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import GENERAL_AXES, SYMMETRIC, AnsatzConfig, ParameterVector, simulate, z_signs
from .pauli import PauliString, PauliSum
from .quantum import PAULI_MATRICES, ConfigurationError, StateVector, apply_1q, rotation_matrix

EXACT = "exact"
QUARTER_PI = np.pi / 4


class GradientUsageError(ValueError):
    pass


@dataclass
class GradientRequest:
    """Everything needed to differentiate one objective.

    ``mode`` is ``"exact"`` or an estimator object exposing
    ``estimate(prepare, params) -> float`` (see ``noise.NoisyEstimator``).
    """

    config: AnsatzConfig
    params: ParameterVector
    observable: PauliSum
    initial: StateVector
    mode: object = EXACT
    include_times: bool | None = None

    def __post_init__(self):
        if self.include_times is None:
            self.include_times = self.config.trains_times
        if self.include_times and not self.config.trains_times:
            raise GradientUsageError("time gradients require variational evolution times")
        self.params.check(self.config)
        if self.observable.n_qubits != self.config.n_qubits or self.initial.n_qubits != self.config.n_qubits:
            raise ConfigurationError("observable, initial state and ansatz widths differ")

    @property
    def exact(self) -> bool:
        return isinstance(self.mode, str) and self.mode == EXACT

    def with_params(self, params: ParameterVector) -> GradientRequest:
        return GradientRequest(self.config, params, self.observable, self.initial, self.mode, self.include_times)


def _exact_value(req: GradientRequest, params: ParameterVector, insertions=None) -> float:
    psi = simulate(req.config, params, req.initial.amplitudes, insertions=insertions)
    return float(np.vdot(psi, req.observable.apply(psi)).real)


def evaluate(req: GradientRequest, params: ParameterVector | None = None, insertions=None) -> float:
    """One objective evaluation, exact or routed through the request's estimator."""
    params = req.params if params is None else params
    if req.exact:
        return _exact_value(req, params, insertions)

    def prepare(p: ParameterVector, j_scale: float = 1.0) -> np.ndarray:
        return simulate(req.config, p, req.initial.amplitudes, insertions=insertions, j_scale=j_scale)

    return float(req.mode.estimate(prepare, params))


def objective(req: GradientRequest, params: ParameterVector | None = None) -> float:
    """Noiseless ``<psi(params)|O|psi(params)>``."""
    return _exact_value(req, req.params if params is None else params)


def _angle_flat_index(config: AnsatzConfig, which) -> int:
    if isinstance(which, (tuple, list)):
        return int(np.ravel_multi_index(tuple(which), config.angle_shape))
    which = int(which)
    if which >= config.n_angles:
        if which < config.n_angles + config.depth:
            raise GradientUsageError(f"index {which} addresses an evolution time, not an angle")
        raise IndexError(f"parameter index {which} out of range")
    if which < 0:
        raise IndexError(f"parameter index {which} out of range")
    return which


def _shifted(params: ParameterVector, flat_index: int, delta: float) -> ParameterVector:
    p = params.copy()
    p.angles.reshape(-1)[flat_index] += delta
    return p


def angle_gradient(req: GradientRequest, which) -> float:
    """Derivative with respect to one rotation angle (flat index or ``(d, q[, k])``).

    Inserting ``exp(-+i pi/4 sigma)`` after ``R(theta) = exp(-i theta sigma/2)``
    is the same gate sequence as shifting ``theta`` by ``+-pi/2``.
    """
    idx = _angle_flat_index(req.config, which)
    f_plus = evaluate(req, _shifted(req.params, idx, np.pi / 2))
    f_minus = evaluate(req, _shifted(req.params, idx, -np.pi / 2))
    return 0.5 * (f_plus - f_minus)


def generator_terms(req_or_config) -> tuple[tuple[float, PauliString], ...]:
    config = req_or_config.config if isinstance(req_or_config, GradientRequest) else req_or_config
    return config.hamiltonian.terms


def _check_layer(config: AnsatzConfig, layer: int) -> None:
    if not 0 <= layer < config.depth:
        raise IndexError(f"layer {layer} out of range for depth {config.depth}")


def term_shift_difference(req: GradientRequest, layer: int, string: PauliString) -> float:
    """``f(U_+) - f(U_-)`` for ``U_pm = exp(-+i pi/4 P)`` inserted after layer ``layer``'s evolution."""
    f_plus = evaluate(req, insertions={layer: [(string, QUARTER_PI)]})
    f_minus = evaluate(req, insertions={layer: [(string, -QUARTER_PI)]})
    return f_plus - f_minus


def time_gradient_exact(req: GradientRequest, layer: int) -> float:
    """Deterministic sum over every generator term of the shift differences."""
    _check_layer(req.config, layer)
    return float(sum(a * term_shift_difference(req, layer, p) for a, p in generator_terms(req)))


def sampled_time_gradient_draws(req: GradientRequest, layer: int, n_draws: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Per-draw single-term estimates ``sign(a) * sum|a| * (f+ - f-)``."""
    _check_layer(req.config, layer)
    if n_draws < 1:
        raise ConfigurationError("n_draws must be at least 1")
    terms = generator_terms(req)
    weights = np.array([abs(a) for a, _ in terms])
    norm = weights.sum()
    picks = rng.choice(len(terms), size=n_draws, p=weights / norm)
    cache: dict[int, float] = {}
    out = np.empty(n_draws)
    for n, m in enumerate(picks):
        a, string = terms[m]
        if req.exact:
            if m not in cache:
                cache[m] = term_shift_difference(req, layer, string)
            diff = cache[m]
        else:
            diff = term_shift_difference(req, layer, string)
        out[n] = np.sign(a) * norm * diff
    return out


def time_gradient_sampled(req: GradientRequest, layer: int, n_draws: int | None = None,
                          rng_seed: int | np.random.Generator | None = None) -> float:
    """Unbiased estimate of ``time_gradient_exact`` drawing terms with probability ``|a|/sum|a|``.

    ``n_draws`` defaults to the number of generator terms.
    """
    if n_draws is None:
        n_draws = len(generator_terms(req))
    rng = np.random.default_rng(rng_seed)
    return float(sampled_time_gradient_draws(req, layer, n_draws, rng).mean())


def _sweep(req: GradientRequest) -> tuple[float, np.ndarray]:
    """Energy and exact shift-rule gradient from a forward and a reverse pass."""
    config, params = req.config, req.params
    n = config.n_qubits
    ham = config.hamiltonian
    psi = simulate(config, params, req.initial.amplitudes)
    lam = req.observable.apply(psi)
    energy = float(np.vdot(psi, lam).real)
    pair = np.stack([psi, lam])
    g_angles = np.zeros(config.angle_shape)
    g_times = np.zeros(config.depth)
    for d in reversed(range(config.depth)):
        if req.include_times:
            h_phi = ham.pauli_form.apply(pair[0])
            g_times[d] = -2.0 * np.vdot(h_phi, pair[1]).imag
        pair = ham.evolve_array(pair, -params.times[d])
        angles = params.angles[d]
        if config.variant == SYMMETRIC:
            overlaps = z_signs(n).T @ (np.conj(pair[0]) * pair[1])
            g_angles[d] = -overlaps.imag
            pair = pair * np.exp(0.5j * (z_signs(n) @ angles))
            continue
        for q in range(n):
            for k in reversed(range(3)):
                axis = GENERAL_AXES[k]
                sigma_phi = apply_1q(pair[0], n, q, PAULI_MATRICES[axis])
                g_angles[d, q, k] = -np.vdot(sigma_phi, pair[1]).imag
                pair = apply_1q(pair, n, q, rotation_matrix(axis, -angles[q, k]))
    grad = np.concatenate([g_angles.ravel(), g_times]) if req.include_times else g_angles.ravel()
    return energy, grad


def full_gradient(req: GradientRequest, method: str = "sweep") -> np.ndarray:
    """Gradient aligned with ``ParameterVector.flat(include_times)``.

    Exact mode: ``method="sweep"`` (default) or ``"shift"`` for two explicit
    circuit evaluations per angle and per generator term. With an estimator,
    every expectation goes through it and time derivatives use
    ``time_gradient_sampled``.
    """
    if req.exact and method == "sweep":
        return _sweep(req)[1]
    if method not in ("sweep", "shift"):
        raise ValueError(f"unknown gradient method {method!r}")
    grads = [angle_gradient(req, i) for i in range(req.config.n_angles)]
    if req.include_times:
        for d in range(req.config.depth):
            if req.exact:
                grads.append(time_gradient_exact(req, d))
            else:
                grads.append(time_gradient_sampled(req, d, rng_seed=req.mode.rng))
    return np.array(grads)


def energy_and_gradient(req: GradientRequest) -> tuple[float, np.ndarray]:
    """Exact energy and exact gradient in one pass (exact mode only)."""
    if not req.exact:
        raise GradientUsageError("energy_and_gradient is exact-mode only")
    return _sweep(req)


def finite_difference_gradient(req: GradientRequest, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(x+h) - f(x-h)) / 2h`` of the noiseless objective."""
    if h <= 0:
        raise ValueError("h must be positive")
    include = req.include_times
    x = req.params.flat(include)
    out = np.empty_like(x)
    for i in range(x.size):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        f_up = _exact_value(req, ParameterVector.from_flat(req.config, up, req.params.times, include))
        f_down = _exact_value(req, ParameterVector.from_flat(req.config, down, req.params.times, include))
        out[i] = (f_up - f_down) / (2 * h)
    return out
