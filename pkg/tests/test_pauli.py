import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kron_label, random_state
from heati import pauli
from heati.pauli import PauliString, PauliSum, number_operator, total_z

labels = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_label_roundtrip_and_bit_layout():
    p = PauliString.from_label("XIZY")
    assert p.label == "XIZY"
    assert p.x == 0b1001 and p.z == 0b1100
    assert p.letter(0) == "X" and p.letter(3) == "Y"
    assert p.weight == 3 and p.support == 0b1101 and p.y_count == 1


def test_from_ops_matches_label():
    assert PauliString.from_ops({0: "Z", 2: "X"}, 3) == PauliString.from_label("ZIX")


def test_bad_label_rejected():
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")


@given(labels)
def test_to_dense_matches_kronecker(label):
    np.testing.assert_allclose(PauliString.from_label(label).to_dense(), kron_label(label), atol=1e-15)


@given(labels, st.data())
@settings(max_examples=80)
def test_compose_matches_matrix_product(a, data):
    b = data.draw(st.text("IXYZ", min_size=len(a), max_size=len(a)))
    pa, pb = PauliString.from_label(a), PauliString.from_label(b)
    phase, prod = pa.compose(pb)
    np.testing.assert_allclose(phase * prod.to_dense(), kron_label(a) @ kron_label(b), atol=1e-14)
    ma, mb = kron_label(a), kron_label(b)
    assert pa.commutes(pb) == np.allclose(ma @ mb, mb @ ma)


def test_qubitwise_compatibility():
    x0z1 = PauliString.from_label("XZ")
    assert x0z1.qubitwise_compatible(PauliString.from_label("XI"))
    assert x0z1.qubitwise_compatible(PauliString.from_label("IZ"))
    assert not PauliString.from_label("XI").qubitwise_compatible(PauliString.from_label("ZI"))
    # XX and YY commute but are not qubit-wise compatible.
    assert PauliString.from_label("XX").commutes(PauliString.from_label("YY"))
    assert not PauliString.from_label("XX").qubitwise_compatible(PauliString.from_label("YY"))


@given(labels)
@settings(max_examples=40)
def test_apply_matches_dense(label):
    rng = np.random.default_rng(len(label))
    psi = random_state(len(label), rng)
    np.testing.assert_allclose(PauliString.from_label(label).apply(psi), kron_label(label) @ psi, atol=1e-14)


def test_sum_merges_duplicates_and_prunes():
    s = PauliSum.from_labels([("ZI", 0.5), ("ZI", 0.25), ("XX", 1e-15), ("II", -1.0)])
    assert s.as_dict() == {"ZI": 0.75, "II": -1.0}
    assert s.constant() == -1.0


def test_sum_rejects_imaginary_residue():
    with pytest.raises(ValueError):
        PauliSum(1, [(1j, PauliString.from_label("Z"))])
    # A small residue below the tolerance is dropped.
    s = PauliSum(1, [(1 + 1e-14j, PauliString.from_label("Z"))])
    assert s.coeffs[0] == 1.0


def test_sum_arithmetic_matches_dense():
    a = PauliSum.from_labels({"XY": 0.3, "ZZ": -1.2})
    b = PauliSum.from_labels({"XY": 0.7, "IZ": 2.0})
    np.testing.assert_allclose((a + b).to_dense(), a.to_dense() + b.to_dense())
    np.testing.assert_allclose((a - b).to_dense(), a.to_dense() - b.to_dense())
    np.testing.assert_allclose((2.5 * a).to_dense(), 2.5 * a.to_dense())
    np.testing.assert_allclose((-a).to_dense(), -a.to_dense())


def test_commutator_terms_match_dense():
    a = PauliSum.from_labels({"XX": 1.0, "ZI": 0.5})
    b = PauliSum.from_labels({"ZZ": 1.0, "YI": 0.3})
    comm = a.commutator_terms(b)
    dense = sum(c * p.to_dense() for p, c in comm.items())
    ma, mb = a.to_dense(), b.to_dense()
    np.testing.assert_allclose(dense, ma @ mb - mb @ ma, atol=1e-14)


def test_total_z_and_number_operator():
    n = 3
    np.testing.assert_allclose(np.diag(total_z(n).to_dense()).real,
                               [n - 2 * bin(k).count("1") for k in range(8)])
    np.testing.assert_allclose(np.diag(number_operator(n).to_dense()).real, [bin(k).count("1") for k in range(8)])
    assert PauliSum.from_labels({"XX": 1, "YY": 1}).commutes_with(total_z(2))
    assert not PauliSum.from_labels({"XI": 1}).commutes_with(total_z(2))
    assert total_z(2).is_diagonal() and not PauliSum.from_labels({"XI": 1}).is_diagonal()


def _random_sum(n, rng, k=12):
    labs = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(k)]
    return PauliSum.from_labels([(lab, float(rng.normal())) for lab in labs])


@pytest.mark.parametrize("n", [1, 3, 5])
def test_apply_and_term_expectations_match_dense(n, rng):
    obs = _random_sum(n, rng)
    psi = random_state(n, rng)
    dense = obs.to_dense()
    np.testing.assert_allclose(obs.apply(psi), dense @ psi, atol=1e-13)
    batch = np.stack([psi, random_state(n, rng)])
    np.testing.assert_allclose(obs.apply(batch), batch @ dense.T, atol=1e-13)
    per_term = obs.term_expectations(psi)
    expected = [np.vdot(psi, p.to_dense() @ psi).real for p in obs.strings]
    np.testing.assert_allclose(per_term, expected, atol=1e-13)


def test_term_expectations_fallback_path_agrees(monkeypatch, rng):
    obs = _random_sum(4, rng)
    psi = random_state(4, rng)
    fast = obs.term_expectations(psi)
    monkeypatch.setattr(pauli, "_PLAN_MAX_ENTRIES", 0)
    fresh = PauliSum(4, obs.terms)
    np.testing.assert_allclose(fresh.term_expectations(psi, chunk=3), fast, atol=1e-14)


def test_sparse_matrix_is_real_when_possible():
    assert not np.iscomplexobj(PauliSum.from_labels({"XX": 1.0, "ZZ": 1.0}).to_sparse().data)
    assert np.iscomplexobj(PauliSum.from_labels({"XY": 1.0}).to_sparse().data)
