"""Randomized verification suites: analytic gradients against central finite
differences, and the exterior-algebra operator identities against direct
expansion. Shared by the CLI subcommands and the acceptance tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fockspace import (
    FockVector,
    apply_annihilator,
    apply_creator,
    apply_exterior_transform,
    basis_state,
    inner,
    sector_indices,
    transition_matrix,
)
from .hamio import MolecularIntegrals
from .orbopt import (
    PartialUnitary,
    measure_rdms,
    orth,
    overlap,
    overlap_gradient,
    rotated_energy,
    rotated_energy_gradient,
)

FD_STEP = 1e-5
REL_TOL = 1e-6


@dataclass
class CheckResult:
    name: str
    passed: bool
    n_instances: int
    max_err: float

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.max_err = float(self.max_err)

    def line(self) -> str:
        flag = "pass" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: n={self.n_instances} max_err={self.max_err:.3e}"


def random_symmetric_integrals(rng: np.random.Generator, m: int) -> MolecularIntegrals:
    """Random Hermitian one-body and 8-fold-symmetric two-body tensors."""
    h = rng.standard_normal((m, m))
    h = 0.5 * (h + h.T)
    v = rng.standard_normal((m,) * 4)
    acc = np.zeros_like(v)
    for perm in [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
                 (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]:
        acc += v.transpose(perm)
    return MolecularIntegrals(m, 2, 0, h, acc / 8.0, 0.0)


def random_sector_state(rng: np.random.Generator, n_orbitals: int,
                        n_alpha: int, n_beta: int) -> FockVector:
    sec = sector_indices(n_orbitals, n_alpha, n_beta)
    amps = np.zeros(1 << n_orbitals)
    amps[sec] = rng.standard_normal(len(sec))
    amps /= np.linalg.norm(amps)
    return FockVector(n_orbitals, amps)


def _fd_grad(fun, b: np.ndarray, step: float) -> np.ndarray:
    out = np.zeros_like(b)
    for i in range(b.shape[0]):
        for j in range(b.shape[1]):
            bp = b.copy()
            bp[i, j] += step
            bm = b.copy()
            bm[i, j] -= step
            out[i, j] = (fun(bp) - fun(bm)) / (2.0 * step)
    return out


def check_energy_gradient(seed: int = 0, n_instances: int = 100, m: int = 6,
                          n: int = 3) -> CheckResult:
    """rotated_energy_gradient vs central differences on random instances."""
    rng = np.random.default_rng(seed)
    sectors = [(1, 1), (2, 1), (2, 2)]
    worst = 0.0
    for t in range(n_instances):
        ints = random_symmetric_integrals(rng, m)
        psi = random_sector_state(rng, 2 * n, *sectors[t % len(sectors)])
        rdms = measure_rdms(psi)
        u = PartialUnitary(orth(rng.standard_normal((m, n))))
        grad = rotated_energy_gradient(u, rdms, ints)
        fd = _fd_grad(lambda b: rotated_energy(PartialUnitary(b), rdms, ints),
                      u.b, FD_STEP)
        scale = max(np.abs(fd).max(), 1.0)
        worst = max(worst, np.abs(grad - fd).max() / scale)
    return CheckResult("rotated_energy_gradient vs FD", worst < REL_TOL, n_instances, worst)


def check_overlap_gradient(seed: int = 1, n_instances: int = 100, m: int = 6,
                           n: int = 3) -> CheckResult:
    """overlap_gradient vs central differences of the squared overlap."""
    rng = np.random.default_rng(seed)
    sectors = [(1, 1), (2, 1), (1, 2)]
    worst = 0.0
    for t in range(n_instances):
        na, nb = sectors[t % len(sectors)]
        psi_j = random_sector_state(rng, 2 * n, na, nb)
        psi_k = random_sector_state(rng, 2 * n, na, nb)
        u_j = PartialUnitary(orth(rng.standard_normal((m, n))))
        u_k = PartialUnitary(orth(rng.standard_normal((m, n))))
        grad = overlap_gradient(u_j, u_k, psi_j, psi_k)
        fd = _fd_grad(
            lambda b: overlap(u_j, PartialUnitary(b), psi_j, psi_k) ** 2,
            u_k.b, FD_STEP)
        scale = max(np.abs(fd).max(), 1.0)
        worst = max(worst, np.abs(grad - fd).max() / scale)
    return CheckResult("overlap_gradient vs FD", worst < REL_TOL, n_instances, worst)


def check_orthogonal_state_gradient(seed: int = 2, n_instances: int = 20,
                                    m: int = 6, n: int = 3) -> CheckResult:
    """Zero-overlap edge case: orthogonal states, identical rotations."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        psi_j = random_sector_state(rng, 2 * n, 1, 1)
        raw = random_sector_state(rng, 2 * n, 1, 1)
        amps = raw.amps - inner(psi_j, raw) * psi_j.amps
        amps /= np.linalg.norm(amps)
        psi_k = FockVector(2 * n, amps)
        u = PartialUnitary.padded_identity(m, n)
        grad = overlap_gradient(u, u, psi_j, psi_k)
        fd = _fd_grad(
            lambda b: overlap(u, PartialUnitary(b), psi_j, psi_k) ** 2,
            u.b, FD_STEP)
        worst = max(worst, np.abs(grad - fd).max())
    return CheckResult("overlap_gradient at zero overlap (abs err)",
                       worst < 1e-8, n_instances, worst)


def check_derivative_identity(seed: int = 3, n_instances: int = 50,
                              n: int = 5) -> CheckResult:
    """dU = sum_ij (dm)_ij a_i^dag U(m) a_j against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        m_mat = rng.standard_normal((n, n))
        dm = rng.standard_normal((n, n))
        w = FockVector(n, rng.standard_normal(1 << n))
        v = FockVector(n, rng.standard_normal(1 << n))
        w.amps /= np.linalg.norm(w.amps)
        v.amps /= np.linalg.norm(v.amps)
        tmat = transition_matrix(w, m_mat, v)
        analytic = float(np.sum(dm * tmat))
        plus = inner(w, apply_exterior_transform(m_mat + FD_STEP * dm, v))
        minus = inner(w, apply_exterior_transform(m_mat - FD_STEP * dm, v))
        fd = (plus - minus) / (2.0 * FD_STEP)
        worst = max(worst, abs(analytic - fd) / max(abs(fd), 1.0))
    return CheckResult("operator derivative identity", worst < REL_TOL, n_instances, worst)


def check_anticommutation(n_max: int = 6) -> CheckResult:
    """{a_i, a_j} = 0, {a_i+, a_j+} = 0, {a_i, a_j+} = delta_ij exhaustively."""
    worst = 0.0
    count = 0
    for n in range(2, n_max + 1):
        for b in range(1 << n):
            e = basis_state(n, b)
            for i in range(n):
                for j in range(n):
                    aa = apply_annihilator(i, apply_annihilator(j, e)).amps \
                        + apply_annihilator(j, apply_annihilator(i, e)).amps
                    cc = apply_creator(i, apply_creator(j, e)).amps \
                        + apply_creator(j, apply_creator(i, e)).amps
                    ac = apply_annihilator(i, apply_creator(j, e)).amps \
                        + apply_creator(j, apply_annihilator(i, e)).amps
                    target = e.amps if i == j else 0.0
                    worst = max(worst, np.abs(aa).max(), np.abs(cc).max(),
                                np.abs(ac - target).max())
                    count += 1
    return CheckResult("canonical anticommutation relations", worst == 0.0, count, worst)


def check_functoriality(seed: int = 4, n_instances: int = 200) -> CheckResult:
    """U(A B) v == U(A) U(B) v for random rectangular maps."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n_in, n_mid, n_out = rng.integers(2, 7, size=3)
        a = rng.standard_normal((n_out, n_mid))
        b = rng.standard_normal((n_mid, n_in))
        v = FockVector(int(n_in), rng.standard_normal(1 << int(n_in)))
        v.amps /= np.linalg.norm(v.amps)
        lhs = apply_exterior_transform(a @ b, v)
        rhs = apply_exterior_transform(a, apply_exterior_transform(b, v))
        worst = max(worst, np.abs(lhs.amps - rhs.amps).max())
    return CheckResult("functoriality U(AB) = U(A)U(B)", worst < 1e-12, n_instances, worst)


def _minor_by_permutation_sum(m: np.ndarray, rows, cols) -> float:
    """Leibniz expansion oracle, independent of any determinant routine."""
    k = len(rows)
    total = 0.0
    for perm in itertools.permutations(range(k)):
        sign = 1.0
        for x in range(k):
            for y in range(x + 1, k):
                if perm[x] > perm[y]:
                    sign = -sign
        prod = sign
        for x in range(k):
            prod *= m[rows[perm[x]], cols[x]]
        total += prod
    return total


def check_minor_matrix_elements(seed: int = 5, n_instances: int = 200,
                                n: int = 6, k_max: int = 3) -> CheckResult:
    """<D_J| U(m) |D_I> equals the signed permutation sum of the JxI minor."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    for _ in range(n_instances):
        m_mat = rng.standard_normal((n, n))
        k = int(rng.integers(1, k_max + 1))
        rows = tuple(sorted(rng.permutation(n)[:k].tolist()))
        cols = tuple(sorted(rng.permutation(n)[:k].tolist()))
        ket = basis_state(n, sum(1 << c for c in cols))
        out = apply_exterior_transform(m_mat, ket)
        got = out.amps[sum(1 << r for r in rows)]
        want = _minor_by_permutation_sum(m_mat, rows, cols)
        worst = max(worst, abs(got - want))
        count += 1
    return CheckResult("minor-determinant matrix elements", worst < 1e-10, count, worst)


def check_overlap_embedding(seed: int = 6, n_instances: int = 50, m: int = 5,
                            n: int = 2) -> CheckResult:
    """Active-space overlap equals the full-space overlap of embedded states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        u_j = PartialUnitary(orth(rng.standard_normal((m, n))))
        u_k = PartialUnitary(orth(rng.standard_normal((m, n))))
        psi_j = random_sector_state(rng, 2 * n, 1, 1)
        psi_k = random_sector_state(rng, 2 * n, 1, 1)
        active = overlap(u_j, u_k, psi_j, psi_k)
        big_j = apply_exterior_transform(u_j.spin_block(), psi_j)
        big_k = apply_exterior_transform(u_k.spin_block(), psi_k)
        worst = max(worst, abs(active - inner(big_j, big_k)))
    return CheckResult("overlap embedding oracle", worst < 1e-12, n_instances, worst)


def run_gradient_checks(seed: int = 0, n_instances: int = 100) -> list[CheckResult]:
    return [
        check_energy_gradient(seed, n_instances),
        check_overlap_gradient(seed + 1, n_instances),
        check_orthogonal_state_gradient(seed + 2),
        check_derivative_identity(seed + 3),
    ]


def run_overlap_checks(seed: int = 0) -> list[CheckResult]:
    return [
        check_anticommutation(),
        check_functoriality(seed + 4),
        check_minor_matrix_elements(seed + 5),
        check_overlap_embedding(seed + 6),
    ]
