"""Molecular integrals, the second-quantized Hamiltonian and its Jordan-Wigner image.

Spin orbitals use block ordering: spatial orbital ``p`` with spin alpha is mode
``p`` and with spin beta is mode ``p + M`` for ``M`` spatial orbitals. An
occupied mode is qubit value 1.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .pauli import PauliString, PauliSum, total_z
from .quantum import StateVector, computational_basis_state

CREATE, ANNIHILATE = 1, 0


class FcidumpError(ValueError):
    """Malformed FCIDUMP input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnsupportedInputError(ValueError):
    """Well-formed input outside what the artifact handles (e.g. open shells)."""


class InternalConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MolecularIntegrals:
    """Spatial-orbital integrals: ``one_body[i, j] = h_ij`` and
    ``two_body[i, j, k, l] = (ij|kl)`` in chemists' notation (Hartree)."""

    n_spatial_orbitals: int
    n_electrons: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    ms2: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.n_spatial_orbitals
        if self.one_body.shape != (m, m) or self.two_body.shape != (m,) * 4:
            raise ValueError("integral shapes do not match the orbital count")
        if self.n_electrons % 2:
            raise UnsupportedInputError(f"odd electron count {self.n_electrons}: closed shells only")
        if self.ms2 != 0:
            raise UnsupportedInputError(f"MS2={self.ms2}: closed shells only")
        if not np.allclose(self.one_body, self.one_body.T, atol=1e-10, rtol=0):
            raise ValueError("one-body integrals are not symmetric")
        g = self.two_body
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(g, g.transpose(perm), atol=1e-10, rtol=0):
                raise ValueError("two-body integrals lack 8-fold permutational symmetry")

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial_orbitals

    def reference_energy(self, key: str = "reference_fci_energy") -> float | None:
        value = self.metadata.get(key)
        return None if value is None else float(value)


_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(text: str, line_no: int) -> dict[str, str]:
    body = re.sub(r"&FCI", " ", text, count=1, flags=re.IGNORECASE)
    body = re.sub(r"(&END|/)\s*$", " ", body.strip(), flags=re.IGNORECASE)
    matches = list(_KEY_RE.finditer(body))
    if not matches:
        raise FcidumpError("header has no KEY=value entries", line_no)
    out = {}
    lead = body[:matches[0].start()].strip(" ,")
    if lead:
        raise FcidumpError(f"unexpected header text {lead!r}", line_no)
    for m, nxt in zip(matches, [*matches[1:], None]):
        value = body[m.end(): nxt.start() if nxt else len(body)]
        out[m.group(1).upper()] = value.strip().strip(",").strip()
    return out


def _header_int(header: dict[str, str], key: str, line_no: int, default: int | None = None) -> int:
    if key not in header:
        if default is not None:
            return default
        raise FcidumpError(f"header is missing {key}", line_no)
    try:
        return int(header[key])
    except ValueError:
        raise FcidumpError(f"{key}={header[key]!r} is not an integer", line_no) from None


def parse_fcidump(text: str | bytes) -> MolecularIntegrals:
    """Parse FCIDUMP text into full (symmetry-expanded) integral tensors.

    Lines starting with ``!`` are comments; ``key=value`` tokens inside them are
    kept as metadata. Records of the form ``e i 0 0 0`` (orbital energies) are
    ignored.
    """
    if isinstance(text, bytes):
        text = text.decode()
    lines = text.splitlines()
    metadata: dict[str, str] = {}
    pos = 0
    header_lines: list[str] = []
    header_start = None
    while pos < len(lines):
        raw = lines[pos].strip()
        pos += 1
        if not raw:
            continue
        if raw.startswith("!"):
            for tok in raw[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    metadata[k] = v
            continue
        if header_start is None:
            if not raw.upper().startswith("&FCI"):
                raise FcidumpError("expected '&FCI' header", pos)
            header_start = pos
        header_lines.append(raw)
        if re.search(r"(&END|/)\s*$", raw, flags=re.IGNORECASE):
            break
    else:
        raise FcidumpError("header is not terminated by &END or '/'", header_start)
    header = _parse_header(" ".join(header_lines), header_start)
    norb = _header_int(header, "NORB", header_start)
    nelec = _header_int(header, "NELEC", header_start)
    ms2 = _header_int(header, "MS2", header_start, default=0)
    if norb < 1:
        raise FcidumpError("NORB must be positive", header_start)
    if header.get("UHF", "").strip(".").upper() in ("TRUE", "T", "1"):
        raise UnsupportedInputError("unrestricted integrals are not supported")
    if nelec % 2:
        raise UnsupportedInputError(f"odd electron count NELEC={nelec}: closed shells only")

    h = np.zeros((norb, norb))
    g = np.zeros((norb,) * 4)
    core = 0.0
    for line_no in range(pos + 1, len(lines) + 1):
        raw = lines[line_no - 1].strip()
        if not raw or raw.startswith("!"):
            continue
        fields = raw.split()
        if len(fields) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {raw!r}", line_no)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FcidumpError(f"non-numeric field in {raw!r}", line_no) from None
        if min(i, j, k, l) < 0 or max(i, j, k, l) > norb:
            raise FcidumpError(f"orbital index out of range 0..{norb} in {raw!r}", line_no)
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0 and i > 0 and j > 0:
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif i > 0 and j > 0 and k > 0 and l > 0:
            a, b, c, d = i - 1, j - 1, k - 1, l - 1
            for p, q, r, s in ((a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c)):
                g[p, q, r, s] = g[r, s, p, q] = value
        elif i > 0 and j == k == l == 0:
            continue
        else:
            raise FcidumpError(f"unrecognized index pattern in {raw!r}", line_no)
    return MolecularIntegrals(norb, nelec, core, h, g, ms2, metadata)


def load_fcidump(path: str | Path) -> MolecularIntegrals:
    path = Path(path)
    try:
        return parse_fcidump(path.read_text())
    except FcidumpError as exc:
        raise FcidumpError(f"{path}: {exc}") from exc


def write_fcidump(ints: MolecularIntegrals, tol: float = 0.0) -> str:
    """Emit unique integrals (``i>=j, k>=l, ij>=kl``) with round-trippable floats."""
    out = [f"! {k}={v}" for k, v in ints.metadata.items()]
    m = ints.n_spatial_orbitals
    out.append(f" &FCI NORB={m},NELEC={ints.n_electrons},MS2={ints.ms2},")
    out.append(" &END")
    g, h = ints.two_body, ints.one_body
    for i in range(m):
        for j in range(i + 1):
            for k in range(m):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    if abs(g[i, j, k, l]) > tol:
                        out.append(f"{float(g[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(m):
        for j in range(i + 1):
            if abs(h[i, j]) > tol:
                out.append(f"{float(h[i, j])!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(ints.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


class FermionTermSum:
    """Sum of products of ladder operators; ``ops`` is a tuple of ``(mode, kind)``
    read left to right, with kind 1 for creation and 0 for annihilation."""

    def __init__(self, n_modes: int, terms):
        self.n_modes = n_modes
        self.terms: list[tuple[complex, tuple[tuple[int, int], ...]]] = [
            (complex(c), tuple((int(m), int(k)) for m, k in ops)) for c, ops in terms
        ]
        for _, ops in self.terms:
            for mode, _ in ops:
                if not 0 <= mode < n_modes:
                    raise ValueError(f"mode {mode} out of range for {n_modes} modes")

    def __len__(self) -> int:
        return len(self.terms)

    def hermitian_conjugate(self) -> FermionTermSum:
        return FermionTermSum(self.n_modes, (
            (np.conj(c), tuple((m, 1 - k) for m, k in reversed(ops))) for c, ops in self.terms))

    def normal_ordered(self, atol: float = 1e-14) -> dict[tuple, complex]:
        """Canonical form: creators left of annihilators, each group by descending mode."""
        out: dict[tuple, complex] = {}
        stack = [(c, list(ops)) for c, ops in self.terms]
        while stack:
            coeff, ops = stack.pop()
            swapped = False
            for pos in range(len(ops) - 1):
                (m1, k1), (m2, k2) = ops[pos], ops[pos + 1]
                if k1 == k2 and m1 == m2:
                    swapped = True
                    break  # a_i a_i = 0
                if (k1, m1) < (k2, m2):
                    rest = ops[:pos] + [ops[pos + 1], ops[pos]] + ops[pos + 2:]
                    stack.append((-coeff, rest))
                    if m1 == m2:
                        stack.append((coeff, ops[:pos] + ops[pos + 2:]))
                    swapped = True
                    break
            if not swapped:
                key = tuple(ops)
                out[key] = out.get(key, 0.0) + coeff
        return {k: v for k, v in out.items() if abs(v) > atol}

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        a = self.normal_ordered()
        b = self.hermitian_conjugate().normal_ordered()
        return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= atol for k in set(a) | set(b))


def spin_orbital(p: int, spin: int, n_spatial: int) -> int:
    return p + spin * n_spatial


def second_quantized_hamiltonian(ints: MolecularIntegrals, atol: float = 1e-14) -> FermionTermSum:
    """``sum h_ij a+_i a_j + 1/2 sum g_ijkl a+_i a+_j a_k a_l + E_core`` over spin orbitals.

    The spin-orbital two-body coefficient is ``g_ijkl = (il|jk)`` with spin
    conserved along ``i-l`` and ``j-k``.
    """
    m = ints.n_spatial_orbitals
    h, g = ints.one_body, ints.two_body
    terms: list = [(ints.core_energy, ())]
    for p, q in itertools.product(range(m), repeat=2):
        if abs(h[p, q]) > atol:
            for s in (0, 1):
                terms.append((h[p, q], ((spin_orbital(p, s, m), CREATE), (spin_orbital(q, s, m), ANNIHILATE))))
    for p, q, r, s in itertools.product(range(m), repeat=4):
        v = g[p, q, r, s]
        if abs(v) <= atol:
            continue
        for sig, tau in itertools.product((0, 1), repeat=2):
            i, l = spin_orbital(p, sig, m), spin_orbital(q, sig, m)
            j, k = spin_orbital(r, tau, m), spin_orbital(s, tau, m)
            if i == j or k == l:
                continue
            terms.append((0.5 * v, ((i, CREATE), (j, CREATE), (k, ANNIHILATE), (l, ANNIHILATE))))
    return FermionTermSum(2 * m, terms)


@lru_cache(maxsize=None)
def _ladder_image(mode: int, kind: int, n_modes: int) -> tuple[tuple[PauliString, complex], ...]:
    zstring = (1 << mode) - 1
    bit = 1 << mode
    x_term = PauliString(bit, zstring, n_modes)
    y_term = PauliString(bit, zstring | bit, n_modes)
    sign = -1 if kind == CREATE else 1
    return ((x_term, 0.5), (y_term, 0.5j * sign))


def jordan_wigner_terms(terms: FermionTermSum) -> dict[PauliString, complex]:
    """Complex Pauli expansion of every fermionic product, summed."""
    n = terms.n_modes
    total: dict[PauliString, complex] = {}
    ident = PauliString.identity(n)
    for coeff, ops in terms.terms:
        current = {ident: coeff}
        for mode, kind in ops:
            nxt: dict[PauliString, complex] = {}
            for p, c in current.items():
                for q, d in _ladder_image(mode, kind, n):
                    phase, r = p.compose(q)
                    nxt[r] = nxt.get(r, 0.0) + c * d * phase
            current = nxt
        for p, c in current.items():
            total[p] = total.get(p, 0.0) + c
    return total


def jordan_wigner(terms: FermionTermSum, imag_atol: float = 1e-10) -> PauliSum:
    """Map ``a_j -> (X_j + i Y_j)/2 * Z_0 ... Z_{j-1}`` and collect a Hermitian PauliSum."""
    total = jordan_wigner_terms(terms)
    worst = max((abs(c.imag) for c in total.values()), default=0.0)
    if worst > imag_atol:
        raise InternalConsistencyError(f"Jordan-Wigner image has imaginary coefficient residue {worst:.3e}")
    return PauliSum(terms.n_modes, ((c.real, p) for p, c in total.items()))


def ladder_operator(mode: int, kind: int, n_modes: int) -> dict[PauliString, complex]:
    """Jordan-Wigner image of a single ladder operator (not Hermitian)."""
    return dict(_ladder_image(mode, kind, n_modes))


def molecular_hamiltonian(ints: MolecularIntegrals) -> PauliSum:
    return jordan_wigner(second_quantized_hamiltonian(ints))


def hartree_fock_bits(n_spatial: int, n_electrons: int) -> str:
    if n_electrons % 2:
        raise UnsupportedInputError(f"odd electron count {n_electrons}: closed shells only")
    occ = n_electrons // 2
    if occ > n_spatial:
        raise UnsupportedInputError(f"{n_electrons} electrons do not fit in {n_spatial} spatial orbitals")
    block = "1" * occ + "0" * (n_spatial - occ)
    return block + block


def hartree_fock_state(n_spatial: int, n_electrons: int) -> StateVector:
    """Lowest ``n_e/2`` orbitals filled in both the alpha and beta blocks."""
    return computational_basis_state(2 * n_spatial, hartree_fock_bits(n_spatial, n_electrons))


def verify_charge_symmetry(H: PauliSum) -> bool:
    """Whether ``[H, sum_i Z_i] = 0`` in the Pauli algebra."""
    return H.commutes_with(total_z(H.n_qubits))
