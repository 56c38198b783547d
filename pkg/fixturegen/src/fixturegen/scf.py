"""Restricted Hartree-Fock in a given AO basis, with DIIS acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrals import (
    AOBasis,
    eri_tensor,
    kinetic_matrix,
    moment_matrix,
    nuclear_attraction_matrix,
    overlap_matrix,
)


class ScfConvergenceError(RuntimeError):
    """SCF failed to converge within the iteration cap."""


@dataclass
class ScfResult:
    e_total: float
    e_electronic: float
    e_nuclear: float
    mo_coeff: np.ndarray       # (nao, nmo), columns energy-ordered
    mo_energy: np.ndarray
    hcore: np.ndarray
    eri: np.ndarray            # chemist (mu nu|lam sig)
    overlap: np.ndarray
    degenerate_groups: list[list[int]]


def nuclear_repulsion(charges: np.ndarray, xyz: np.ndarray) -> float:
    e = 0.0
    for i in range(len(charges)):
        for j in range(i):
            e += charges[i] * charges[j] / np.linalg.norm(xyz[i] - xyz[j])
    return e


def run_rhf(basis: AOBasis, charges: np.ndarray, nuc_xyz: np.ndarray, n_electrons: int,
            max_cycles: int = 200, conv_tol: float = 1e-11) -> ScfResult:
    """Closed-shell RHF with canonical, deterministically ordered orbitals."""
    if n_electrons % 2:
        raise ValueError("restricted HF needs an even electron count")
    nocc = n_electrons // 2

    s = overlap_matrix(basis)
    hcore = kinetic_matrix(basis) + nuclear_attraction_matrix(basis, charges, nuc_xyz)
    eri = eri_tensor(basis)
    e_nuc = nuclear_repulsion(charges, nuc_xyz)

    sval, svec = np.linalg.eigh(s)
    if sval.min() < 1e-10:
        raise ValueError(f"AO overlap is near-singular (min eigenvalue {sval.min():.3e})")
    x = svec @ np.diag(sval ** -0.5) @ svec.T

    def fock(dm):
        j = np.einsum("pqrs,rs->pq", eri, dm)
        k = np.einsum("prqs,rs->pq", eri, dm)
        return hcore + j - 0.5 * k

    # superposition-of-atomic-densities guess (reaches the lowest SCF
    # solution for the stretched H4 square, where the core guess does not)
    dm = _sad_guess(basis, charges, s)

    diis_errs: list[np.ndarray] = []
    diis_focks: list[np.ndarray] = []
    e_old = 0.0
    for cycle in range(max_cycles):
        f = fock(dm)
        err = x.T @ (f @ dm @ s - s @ dm @ f) @ x
        diis_errs.append(err)
        diis_focks.append(f)
        if len(diis_errs) > 8:
            diis_errs.pop(0)
            diis_focks.pop(0)
        if len(diis_errs) > 1:
            n = len(diis_errs)
            bmat = -np.ones((n + 1, n + 1))
            bmat[n, n] = 0.0
            for i in range(n):
                for j in range(n):
                    bmat[i, j] = np.sum(diis_errs[i] * diis_errs[j])
            rhs = np.zeros(n + 1)
            rhs[n] = -1.0
            try:
                coeffs = np.linalg.solve(bmat, rhs)[:n]
                f = sum(ci * fi for ci, fi in zip(coeffs, diis_focks))
            except np.linalg.LinAlgError:
                pass
        eps, cprime = np.linalg.eigh(x.T @ f @ x)
        c = x @ cprime
        dm = 2.0 * c[:, :nocc] @ c[:, :nocc].T
        f_true = fock(dm)
        e_elec = 0.5 * np.sum(dm * (hcore + f_true))
        de = abs(e_elec - e_old)
        err_norm = np.linalg.norm(x.T @ (f_true @ dm @ s - s @ dm @ f_true) @ x)
        if de < conv_tol and err_norm < 1e-8 and cycle > 1:
            eps, cprime = np.linalg.eigh(x.T @ f_true @ x)
            c = x @ cprime
            c, groups = _canonicalize_degenerate(basis, c, eps)
            return ScfResult(
                e_total=e_elec + e_nuc,
                e_electronic=e_elec,
                e_nuclear=e_nuc,
                mo_coeff=c,
                mo_energy=eps,
                hcore=hcore,
                eri=eri,
                overlap=s,
                degenerate_groups=groups,
            )
        e_old = e_elec
    raise ScfConvergenceError(f"SCF not converged in {max_cycles} cycles (dE={de:.3e})")


def _sad_guess(basis: AOBasis, charges: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Diagonal atomic-density guess: fill each center's s-type AOs in order."""
    dm = np.zeros((basis.nao, basis.nao))
    filled = np.zeros(len(charges))
    atom_xyz = _unique_rows(basis.centers)
    for mu in range(basis.nao):
        center = basis.centers[mu]
        atom = -1
        for a, xyz in enumerate(atom_xyz):
            if np.allclose(center, xyz):
                atom = a
                break
        if atom < 0:
            continue
        if not _is_s_type(basis, mu):
            continue
        remaining = charges[atom] - filled[atom]
        if remaining <= 0:
            continue
        n = min(2.0, remaining)
        dm[mu, mu] = n / s[mu, mu]
        filled[atom] += n
    return dm


def _unique_rows(arr: np.ndarray) -> np.ndarray:
    out = []
    for row in arr:
        if not any(np.allclose(row, r) for r in out):
            out.append(row)
    return np.asarray(out)


def _is_s_type(basis: AOBasis, mu: int) -> bool:
    sl = slice(basis.ao_start[mu], basis.ao_start[mu] + basis.ao_nterm[mu])
    return bool(np.all(basis.powers[sl] == 0))


def _canonicalize_degenerate(basis: AOBasis, c: np.ndarray, eps: np.ndarray,
                             tol: float = 1e-8) -> tuple[np.ndarray, list[list[int]]]:
    """Fix the arbitrary rotation inside degenerate MO blocks.

    Within each group of equal orbital energies the MOs are rotated to
    diagonalize the moment operator x + 2y + 3z, then every orbital gets its
    largest-magnitude coefficient made positive.
    """
    r = moment_matrix(basis, 0) + 2.0 * moment_matrix(basis, 1) + 3.0 * moment_matrix(basis, 2)
    c = c.copy()
    groups: list[list[int]] = []
    start = 0
    nmo = c.shape[1]
    while start < nmo:
        stop = start + 1
        while stop < nmo and abs(eps[stop] - eps[start]) < tol:
            stop += 1
        if stop - start > 1:
            block = c[:, start:stop]
            rb = block.T @ r @ block
            _, w = np.linalg.eigh(0.5 * (rb + rb.T))
            c[:, start:stop] = block @ w
            groups.append(list(range(start, stop)))
        start = stop
    for j in range(nmo):
        i = np.argmax(np.abs(c[:, j]))
        if c[i, j] < 0:
            c[:, j] = -c[:, j]
    return c, groups
