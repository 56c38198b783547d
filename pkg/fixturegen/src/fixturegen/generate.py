"""Build molecular FCIDUMP fixtures plus metadata from first principles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .integrals import ANGSTROM_TO_BOHR, build_ao_basis
from .basis import NUCLEAR_CHARGE
from .scf import run_rhf


@dataclass(frozen=True)
class MoleculeSpec:
    name: str
    symbols: tuple[str, ...]
    coords_angstrom: tuple[tuple[float, float, float], ...]
    basis: str
    charge: int = 0
    multiplicity: int = 1


FIXTURES: dict[str, MoleculeSpec] = {
    "h2": MoleculeSpec(
        name="h2",
        symbols=("H", "H"),
        coords_angstrom=((0.0, 0.0, 0.0), (0.0, 0.0, 0.735)),
        basis="6-31g",
    ),
    "h4": MoleculeSpec(
        name="h4",
        symbols=("H", "H", "H", "H"),
        coords_angstrom=(
            (0.0, 0.0, 0.0),
            (1.23, 0.0, 0.0),
            (1.23, 1.23, 0.0),
            (0.0, 1.23, 0.0),
        ),
        basis="cc-pvdz",
    ),
    "lih": MoleculeSpec(
        name="lih",
        symbols=("Li", "H"),
        coords_angstrom=((0.0, 0.0, 0.0), (0.0, 0.0, 1.595)),
        basis="cc-pvdz",
    ),
}


def write_fcidump(path: Path, norb: int, nelec: int, ms2: int,
                  h_mo: np.ndarray, eri_mo: np.ndarray, e_core: float,
                  tol: float = 1e-12) -> None:
    """Write integrals in FCIDUMP format, one entry per 8-fold-unique index."""
    with open(path, "w") as f:
        f.write(f" &FCI NORB={norb},NELEC={nelec},MS2={ms2},\n")
        f.write("  ORBSYM=" + "1," * norb + "\n")
        f.write("  ISYM=1,\n")
        f.write(" &END\n")
        for i in range(norb):
            for j in range(i + 1):
                ij = i * (i + 1) // 2 + j
                for k in range(i + 1):
                    for l in range(k + 1):
                        kl = k * (k + 1) // 2 + l
                        if ij < kl:
                            continue
                        val = eri_mo[i, j, k, l]
                        if abs(val) > tol:
                            f.write(f"{val:23.16e} {i+1:3d} {j+1:3d} {k+1:3d} {l+1:3d}\n")
        for i in range(norb):
            for j in range(i + 1):
                val = h_mo[i, j]
                if abs(val) > tol:
                    f.write(f"{val:23.16e} {i+1:3d} {j+1:3d}   0   0\n")
        f.write(f"{e_core:23.16e}   0   0   0   0\n")


def generate(spec: MoleculeSpec, out_dir: Path | str) -> dict:
    """Run RHF for the molecule and emit <name>.fcidump and <name>.meta.json.

    Returns the metadata dict. Canonical restricted HF orbitals define the
    FCIDUMP basis; integrals are in chemist convention and the core constant
    is the nuclear repulsion energy.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    coords = np.asarray(spec.coords_angstrom, dtype=float) * ANGSTROM_TO_BOHR
    charges = np.asarray([NUCLEAR_CHARGE[s] for s in spec.symbols], dtype=float)
    n_electrons = int(charges.sum()) - spec.charge
    if spec.multiplicity != 1:
        raise ValueError("only closed-shell singlet references are supported")

    basis = build_ao_basis(list(spec.symbols), coords, spec.basis)
    scf = run_rhf(basis, charges, coords, n_electrons)

    c = scf.mo_coeff
    h_mo = c.T @ scf.hcore @ c
    tmp = np.einsum("pqrs,sl->pqrl", scf.eri, c)
    tmp = np.einsum("pqrl,rk->pqkl", tmp, c)
    tmp = np.einsum("pqkl,qj->pjkl", tmp, c)
    eri_mo = np.einsum("pjkl,pi->ijkl", tmp, c)

    norb = c.shape[1]
    fcidump_path = out_dir / f"{spec.name}.fcidump"
    write_fcidump(fcidump_path, norb, n_electrons, 0, h_mo, eri_mo, scf.e_nuclear)

    meta = {
        "name": spec.name,
        "basis": spec.basis,
        "symbols": list(spec.symbols),
        "coords_angstrom": [list(row) for row in spec.coords_angstrom],
        "n_orbitals": norb,
        "n_electrons": n_electrons,
        "hf_total_energy": scf.e_total,
        "hf_electronic_energy": scf.e_electronic,
        "nuclear_repulsion": scf.e_nuclear,
        "orbital_energies": scf.mo_energy.tolist(),
        "degenerate_mo_groups": scf.degenerate_groups,
        "notes": "canonical RHF orbitals, energy-ordered; degenerate blocks "
                 "diagonalize the x+2y+3z moment; largest MO coefficient positive",
    }
    with open(out_dir / f"{spec.name}.meta.json", "w") as f:
        json.dump(meta, f, indent=2)
    return meta
