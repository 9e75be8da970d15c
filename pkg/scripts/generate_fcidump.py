"""Regenerate the committed FCIDUMP files under src/heati/data/fcidump.

Requires PySCF (not a runtime dependency of heati)::

    pip install pyscf
    python scripts/generate_fcidump.py

Every file carries ``!`` comment lines recording the geometry, basis, active
space and the reference energies computed here (RHF and FCI within the
active space, including the frozen-core energy).
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "heati" / "data" / "fcidump"

# (atoms, basis, n_active_orbitals, n_active_electrons, active MO indices or None, distances in angstrom)
MOLECULES = {
    "H2": ("H", "H", "sto-3g", 2, 2, None,
           [0.3, 0.5, 0.6, 0.7414, 0.9, 1.1, 1.3, 1.5, 1.8, 2.1]),
    # Li 1s frozen; the three sigma (A1) valence orbitals span the active space.
    "LiH": ("Li", "H", "sto-3g", 3, 2, "sigma",
            [1.0, 1.3, 1.5, 1.6, 2.0, 2.5, 3.0]),
    # F 1s and 2s-derived sigma orbitals frozen; the six 2p-derived orbitals are active.
    "F2": ("F", "F", "sto-3g", 6, 10, None,
           [1.2, 1.412, 1.6, 2.0]),
}


def _sigma_orbitals(mol, mf, ncore, ncas):
    """Pick the lowest ``ncas`` A1 (sigma) orbitals above the core."""
    from pyscf import symm

    labels = symm.label_orb_symm(mol, mol.irrep_name, mol.symm_orb, mf.mo_coeff)
    picked = [i for i, lab in enumerate(labels) if i >= ncore and lab == "A1"][:ncas]
    if len(picked) != ncas:
        raise RuntimeError(f"only found {picked} sigma orbitals")
    return picked


def generate(name: str) -> None:
    a, b, basis, ncas, nelecas, select, distances = MOLECULES[name]
    for d in distances:
        mol = gto.M(atom=f"{a} 0 0 0; {b} 0 0 {d}", basis=basis, unit="Angstrom",
                    symmetry="C2v" if select else False, verbose=0)
        mf = scf.RHF(mol).run()
        mc = mcscf.CASCI(mf, ncas, nelecas)
        mo = mf.mo_coeff
        if select == "sigma":
            ncore = (mol.nelectron - nelecas) // 2
            mo = mc.sort_mo(_sigma_orbitals(mol, mf, ncore, ncas), base=0)
        h1, ecore = mc.get_h1eff(mo)
        h2 = ao2mo.restore(1, mc.get_h2eff(mo), ncas)
        e_fci, _ = fci.direct_spin1.FCI().kernel(h1, h2, ncas, nelecas, ecore=ecore)
        occ = nelecas // 2
        e_hf = (ecore + 2 * np.trace(h1[:occ, :occ])
                + sum(2 * h2[i, i, j, j] - h2[i, j, j, i] for i in range(occ) for j in range(occ)))
        path = OUT / f"{name}_{d:.4f}.FCIDUMP"
        fcidump.from_integrals(str(path), h1, h2, ncas, nelecas, nuc=ecore, ms=0, tol=1e-12)
        body = path.read_text()
        header = (
            f"! molecule={name} bond_length_angstrom={d} basis={basis}\n"
            f"! active_space orbitals={ncas} electrons={nelecas}\n"
            f"! reference_hf_energy={e_hf:.12f}\n"
            f"! reference_fci_energy={e_fci:.12f}\n"
        )
        path.write_text(header + body)
        print(f"{path.name}: HF {e_hf:.8f}  FCI {e_fci:.8f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("molecules", nargs="*", default=list(MOLECULES))
    args = parser.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    for name in args.molecules:
        generate(name)
