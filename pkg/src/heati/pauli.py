"""Pauli strings stored as a pair of bitmasks, and real-weighted Pauli sums.

Qubit ``q`` corresponds to bit ``q`` of both masks and to bit ``q`` of a
computational-basis index (qubit 0 is the least significant bit). Labels are
written with qubit 0 as the leftmost character, so ``PauliString.from_label("XZ")``
is X on qubit 0 and Z on qubit 1.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_MASKS = {v: k for k, v in _LETTERS.items()}
_I_POWERS = (1, 1j, -1, -1j)
# Largest (terms x dimension) sign table cached for expectation values.
_PLAN_MAX_ENTRIES = 1 << 22

COEFF_ATOL = 1e-12


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, encoded as ``i^{|x&z|} X^x Z^z``."""

    x: int
    z: int
    n_qubits: int

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(0, 0, n_qubits)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _MASKS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(x, z, len(label))

    @classmethod
    def from_ops(cls, ops: Mapping[int, str], n_qubits: int) -> PauliString:
        """Build from a sparse ``{qubit: letter}`` mapping."""
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _MASKS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(x, z, n_qubits)

    @property
    def label(self) -> str:
        return "".join(_LETTERS[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(self.n_qubits))

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def y_count(self) -> int:
        return _popcount(self.x & self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"

    def compose(self, other: PauliString) -> tuple[complex, PauliString]:
        """Return ``(phase, R)`` such that ``self @ other == phase * R``."""
        self._check_width(other)
        x, z = self.x ^ other.x, self.z ^ other.z
        k = self.y_count + other.y_count + 2 * _popcount(self.z & other.x) - _popcount(x & z)
        return _I_POWERS[k % 4], PauliString(x, z, self.n_qubits)

    def commutes(self, other: PauliString) -> bool:
        self._check_width(other)
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def qubitwise_compatible(self, other: PauliString) -> bool:
        """True when the two strings agree on every qubit where both act nontrivially."""
        self._check_width(other)
        both = self.support & other.support
        return (self.x ^ other.x) & both == 0 and (self.z ^ other.z) & both == 0

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        m = np.zeros((dim, dim), dtype=complex)
        m[idx ^ self.x, idx] = self.phase_vector()
        return m

    def phase_vector(self) -> np.ndarray:
        """Amplitude factor picked up by ``|k>`` under ``P|k> = f_k |k ^ x>``."""
        idx = np.arange(1 << self.n_qubits)
        signs = 1 - 2 * (np.bitwise_count(idx & self.z) & 1).astype(np.int8)
        return _I_POWERS[self.y_count % 4] * signs

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply to amplitudes along the last axis."""
        dim = psi.shape[-1]
        idx = np.arange(dim)
        return (psi * self.phase_vector())[..., idx ^ self.x]

    def _check_width(self, other: PauliString) -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError(f"width mismatch: {self.n_qubits} vs {other.n_qubits}")


class PauliSum:
    """Hermitian observable ``sum_i c_i P_i`` with real coefficients.

    Duplicate strings are merged, terms with ``|c| < 1e-12`` are pruned and an
    imaginary residue above ``1e-12`` on any merged coefficient is rejected.
    """

    def __init__(self, n_qubits: int, terms: Iterable[tuple[complex, PauliString]] = (), *,
                 imag_atol: float = COEFF_ATOL):
        merged: dict[PauliString, complex] = {}
        for coeff, string in terms:
            if string.n_qubits != n_qubits:
                raise ValueError(f"term {string} does not act on {n_qubits} qubits")
            merged[string] = merged.get(string, 0.0) + coeff
        kept = []
        for string, coeff in merged.items():
            coeff = complex(coeff)
            if abs(coeff.imag) >= imag_atol:
                raise ValueError(f"non-Hermitian coefficient {coeff} on {string.label}")
            if abs(coeff.real) >= COEFF_ATOL:
                kept.append((coeff.real, string))
        self.n_qubits = n_qubits
        self.terms: tuple[tuple[float, PauliString], ...] = tuple(kept)

    @classmethod
    def from_labels(cls, pairs: Mapping[str, float] | Iterable[tuple[str, float]]) -> PauliSum:
        items = list(pairs.items()) if isinstance(pairs, Mapping) else list(pairs)
        if not items:
            raise ValueError("cannot infer width of an empty PauliSum")
        n = len(items[0][0])
        return cls(n, ((c, PauliString.from_label(lab)) for lab, c in items))

    @classmethod
    def from_complex_terms(cls, n_qubits: int, terms: Mapping[PauliString, complex], *,
                           imag_atol: float = COEFF_ATOL) -> PauliSum:
        return cls(n_qubits, ((c, p) for p, c in terms.items()), imag_atol=imag_atol)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g}*{p.label}" for c, p in self.terms[:6])
        more = f" + ... ({len(self)} terms)" if len(self) > 6 else ""
        return f"PauliSum({body or '0'}{more})"

    def as_dict(self) -> dict[str, float]:
        return {p.label: c for c, p in self.terms}

    @cached_property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @cached_property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(p for _, p in self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return PauliSum(self.n_qubits, [*self.terms, *other.terms])

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum(self.n_qubits, ((scalar * c, p) for c, p in self.terms))

    __rmul__ = __mul__

    def __neg__(self) -> PauliSum:
        return -1.0 * self

    def constant(self) -> float:
        """Coefficient of the identity term."""
        return sum(c for c, p in self.terms if p.is_identity())

    def product_terms(self, other: PauliSum) -> dict[PauliString, complex]:
        """Mask-algebra product ``self @ other`` as a complex term dictionary."""
        out: dict[PauliString, complex] = {}
        for ca, pa in self.terms:
            for cb, pb in other.terms:
                phase, r = pa.compose(pb)
                out[r] = out.get(r, 0.0) + ca * cb * phase
        return out

    def commutator_terms(self, other: PauliSum, atol: float = COEFF_ATOL) -> dict[PauliString, complex]:
        """Nonzero terms of ``[self, other]`` computed purely in the Pauli algebra."""
        out: dict[PauliString, complex] = {}
        for ca, pa in self.terms:
            for cb, pb in other.terms:
                if pa.commutes(pb):
                    continue
                phase, r = pa.compose(pb)
                out[r] = out.get(r, 0.0) + 2.0 * ca * cb * phase
        return {p: c for p, c in out.items() if abs(c) >= atol}

    def commutes_with(self, other: PauliSum) -> bool:
        return not self.commutator_terms(other)

    def is_diagonal(self) -> bool:
        return all(p.x == 0 for p in self.strings)

    def to_sparse(self) -> sp.csr_matrix:
        return self._sparse

    @cached_property
    def _sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        if not self.terms:
            return sp.csr_matrix((dim, dim), dtype=complex)
        rows, cols, vals = [], [], []
        for c, p in self.terms:
            rows.append(idx ^ p.x)
            cols.append(idx)
            vals.append(c * p.phase_vector())
        m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(dim, dim)).tocsr()
        m.sum_duplicates()
        if not np.iscomplexobj(m.data) or np.abs(m.data.imag).max(initial=0.0) == 0.0:
            m = m.real.tocsr()
        return m

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``O @ psi`` for amplitudes along the last axis."""
        if psi.ndim == 1:
            return self._sparse @ psi
        return (self._sparse @ psi.T).T

    @cached_property
    def _expectation_plan(self):
        """Terms batched by X mask with their Z-sign rows, so each batch is one matrix product."""
        dim = 1 << self.n_qubits
        if len(self.terms) * dim > _PLAN_MAX_ENTRIES:
            return None
        idx = np.arange(dim)
        xs = np.array([p.x for p in self.strings], dtype=np.int64)
        plan = []
        for x in np.unique(xs):
            members = np.flatnonzero(xs == x)
            zs = np.array([self.strings[i].z for i in members], dtype=np.int64)
            signs = 1.0 - 2.0 * (np.bitwise_count(idx[None, :] & zs[:, None]) & 1)
            phase = np.asarray(_I_POWERS)[[self.strings[i].y_count % 4 for i in members]]
            plan.append((idx ^ x, members, signs, phase))
        return plan

    def term_expectations(self, psi: np.ndarray, chunk: int = 512) -> np.ndarray:
        """Per-term expectation values ``<psi|P_i|psi>`` for a normalized 1-D state."""
        out = np.empty(len(self.terms))
        plan = self._expectation_plan
        if plan is not None:
            for flip, members, signs, phase in plan:
                w = np.conj(psi[flip]) * psi
                out[members] = (phase * (signs @ w)).real
            return out
        dim = psi.shape[0]
        idx = np.arange(dim)
        xs = np.array([p.x for p in self.strings], dtype=np.int64)
        zs = np.array([p.z for p in self.strings], dtype=np.int64)
        ys = np.array([p.y_count % 4 for p in self.strings])
        for lo in range(0, len(xs), chunk):
            x = xs[lo:lo + chunk, None]
            z = zs[lo:lo + chunk, None]
            w = np.conj(psi[idx[None, :] ^ x]) * psi[None, :]
            signs = 1.0 - 2.0 * (np.bitwise_count(idx[None, :] & z) & 1)
            vals = (w * signs).sum(axis=1) * np.asarray(_I_POWERS)[ys[lo:lo + chunk]]
            out[lo:lo + chunk] = vals.real
        return out


def total_z(n_qubits: int) -> PauliSum:
    """``sum_i Z_i``, the charge (excitation number) generator up to an affine shift."""
    return PauliSum(n_qubits, ((1.0, PauliString(0, 1 << q, n_qubits)) for q in range(n_qubits)))


def number_operator(n_qubits: int) -> PauliSum:
    """``sum_i (I - Z_i)/2``: counts qubits in state 1."""
    ident = PauliString.identity(n_qubits)
    terms = [(n_qubits / 2, ident)]
    terms += [(-0.5, PauliString(0, 1 << q, n_qubits)) for q in range(n_qubits)]
    return PauliSum(n_qubits, terms)
