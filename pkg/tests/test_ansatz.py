import itertools

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import PAULI, kron_1q, kron_label, random_state
from heati.ansatz import (FIXED, GENERAL, SYMMETRIC, VARIATIONAL, AnsatzConfig, ParameterVector,
                          ScheduleSizeError, build_state, random_init, simulate, synthesize_pairwise_xx,
                          total_evolution_time)
from heati.hamiltonians import CouplingMatrix, build_tfim, power_law_couplings
from heati.quantum import ConfigurationError, StateVector, computational_basis_state, hamming_weights


def _rot(axis, angle):
    return sla.expm(-0.5j * angle * PAULI[axis])


@pytest.mark.parametrize("n, depth", [(2, 1), (4, 3), (6, 5)])
def test_parameter_counts(n, depth):
    gen = AnsatzConfig.general(n, depth)
    sym = AnsatzConfig.symmetric(n, depth)
    assert gen.n_params() == depth * (3 * n + 1)
    assert gen.n_params(include_times=False) == 3 * n * depth
    assert sym.n_params() == n * depth
    assert sym.n_params(include_times=True) == (n + 1) * depth
    assert gen.angle_shape == (depth, n, 3) and sym.angle_shape == (depth, n)


def test_zero_parameters_give_identity(rng):
    psi = random_state(3, rng)
    for cfg in (AnsatzConfig.general(3, 2), AnsatzConfig.symmetric(3, 2)):
        params = ParameterVector(np.zeros(cfg.angle_shape), np.zeros(2))
        np.testing.assert_allclose(simulate(cfg, params, psi), psi, atol=1e-14)


def test_general_single_layer_matches_hand_built_circuit(rng):
    J = np.array([[0.0, 0.8], [0.8, 0.0]])
    cfg = AnsatzConfig.general(2, 1, couplings=CouplingMatrix(J), B=0.6)
    angles = rng.uniform(-3, 3, size=(1, 2, 3))
    t = 0.37
    h = 0.8 * kron_label("XX") + 0.6 * (kron_label("ZI") + kron_label("IZ"))
    rot = np.eye(4, dtype=complex)
    for q in range(2):
        a = angles[0, q]
        rot = kron_1q(_rot("X", a[2]) @ _rot("Y", a[1]) @ _rot("X", a[0]), q, 2) @ rot
    psi = random_state(2, rng)
    expected = sla.expm(-1j * t * h) @ rot @ psi
    got = simulate(cfg, ParameterVector(angles, [t]), psi)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_symmetric_two_layers_match_hand_built_circuit(rng):
    J = np.array([[0.0, 1.1], [1.1, 0.0]])
    cfg = AnsatzConfig.symmetric(2, 2, couplings=CouplingMatrix(J), time_mode=VARIATIONAL)
    angles = rng.uniform(-3, 3, size=(2, 2))
    times = [0.2, 0.9]
    h = 0.55 * (kron_label("XX") + kron_label("YY"))
    psi = random_state(2, rng)
    expected = psi
    for d in range(2):
        rz = kron_1q(_rot("Z", angles[d, 1]), 1, 2) @ kron_1q(_rot("Z", angles[d, 0]), 0, 2)
        expected = sla.expm(-1j * times[d] * h) @ rz @ expected
    np.testing.assert_allclose(simulate(cfg, ParameterVector(angles, times), psi), expected, atol=1e-12)


def test_symmetric_variant_conserves_excitations(rng):
    cfg = AnsatzConfig.symmetric(6, 4)
    psi = build_state(cfg, random_init(cfg, 3), computational_basis_state(6, "100100"))
    weights = hamming_weights(6)
    assert np.sum(np.abs(psi.amplitudes[weights != 2]) ** 2) < 1e-24
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-12)


def test_general_circuit_leaves_sector(rng):
    cfg = AnsatzConfig.general(4, 1)
    psi = build_state(cfg, random_init(cfg, 0), computational_basis_state(4, "0000"))
    assert np.sum(np.abs(psi.amplitudes[hamming_weights(4) != 0]) ** 2) > 1e-3


def test_random_init_deterministic_and_in_range():
    cfg = AnsatzConfig.general(3, 4, t_max=0.7)
    a, b = random_init(cfg, 11), random_init(cfg, 11)
    np.testing.assert_array_equal(a.angles, b.angles)
    np.testing.assert_array_equal(a.times, b.times)
    assert not np.array_equal(a.angles, random_init(cfg, 12).angles)
    assert np.all((a.angles >= 0) & (a.angles < 2 * np.pi))
    assert np.all((a.times > 0) & (a.times <= 0.7))
    fixed = random_init(AnsatzConfig.symmetric(3, 4, t0=0.4), 11)
    np.testing.assert_array_equal(fixed.times, [0.4] * 4)


def test_total_evolution_time():
    assert total_evolution_time(ParameterVector(np.zeros((3, 2)), [0.1, 0.2, 0.4])) == pytest.approx(0.7)
    cfg = AnsatzConfig.symmetric(4, 5, t0=0.4)
    assert total_evolution_time(random_init(cfg, 0)) == pytest.approx(2.0)


def test_flat_round_trip():
    cfg = AnsatzConfig.general(3, 2)
    p = random_init(cfg, 5)
    q = ParameterVector.from_flat(cfg, p.flat(True))
    np.testing.assert_array_equal(q.angles, p.angles)
    np.testing.assert_array_equal(q.times, p.times)
    with pytest.raises(ConfigurationError):
        ParameterVector.from_flat(cfg, np.zeros(3))


def test_configuration_errors():
    tfim = build_tfim(power_law_couplings(3), 1.0)
    with pytest.raises(ConfigurationError):
        AnsatzConfig(3, 1, SYMMETRIC, tfim)
    with pytest.raises(ConfigurationError):
        AnsatzConfig(3, 0, GENERAL, tfim)
    with pytest.raises(ConfigurationError):
        AnsatzConfig(4, 1, GENERAL, tfim)
    with pytest.raises(ConfigurationError):
        AnsatzConfig(3, 1, "other", tfim)
    with pytest.raises(ConfigurationError):
        AnsatzConfig(3, 1, GENERAL, tfim, time_mode=FIXED, t0=-1.0)
    with pytest.raises(ConfigurationError):
        ParameterVector(np.zeros((2, 3)), [0.1])
    with pytest.raises(ConfigurationError):
        ParameterVector(np.full((1, 3), np.nan))
    cfg = AnsatzConfig.general(3, 1)
    with pytest.raises(ConfigurationError):
        build_state(cfg, random_init(cfg, 0), computational_basis_state(2, "00"))


def _xx_target(n, i, j, theta):
    return sla.expm(-1j * theta * kron_label("".join("X" if q in (i, j) else "I" for q in range(n))))


def _equal_up_to_phase(u, v, atol):
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    phase = u[k] / v[k]
    return abs(abs(phase) - 1) < atol and np.max(np.abs(u - phase * v)) < atol


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("theta", [0.3, 0.7, 1.9])
def test_echo_synthesis_all_pairs(n, theta):
    couplings = power_law_couplings(n, 1.0, 1.0)
    for i, j in itertools.combinations(range(n), 2):
        sched = synthesize_pairwise_xx(n, i, j, theta, couplings)
        sums = sched.signed_time_sums()
        for k, l in itertools.combinations(range(n), 2):
            if {k, l} != {i, j}:
                assert sums[k, l] == 0
        assert abs(sums[i, j]) == sched.order
        assert _equal_up_to_phase(sched.net_unitary(couplings), _xx_target(n, i, j, theta), 1e-8)


def test_echo_zero_angle_and_period():
    couplings = power_law_couplings(4)
    assert synthesize_pairwise_xx(4, 0, 2, 0.0, couplings).order == 0
    assert synthesize_pairwise_xx(4, 0, 2, np.pi, couplings).order == 0
    sched = synthesize_pairwise_xx(4, 1, 3, -0.4, couplings)
    assert _equal_up_to_phase(sched.net_unitary(couplings), _xx_target(4, 1, 3, -0.4), 1e-8)


def test_echo_errors():
    couplings = power_law_couplings(4)
    with pytest.raises(ConfigurationError):
        synthesize_pairwise_xx(4, 1, 1, 0.3, couplings)
    with pytest.raises(ConfigurationError):
        synthesize_pairwise_xx(5, 0, 1, 0.3, couplings)
    with pytest.raises(ConfigurationError):
        synthesize_pairwise_xx(2, 0, 1, 0.3, CouplingMatrix(np.zeros((2, 2))))
    with pytest.raises(ScheduleSizeError):
        synthesize_pairwise_xx(10, 0, 1, 0.3, power_law_couplings(10), max_order=8)


def test_build_state_returns_normalized_state():
    cfg = AnsatzConfig.general(3, 2)
    out = build_state(cfg, random_init(cfg, 1), StateVector(computational_basis_state(3, "000").amplitudes))
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)
