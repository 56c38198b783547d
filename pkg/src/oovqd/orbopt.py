"""Orbital rotation machinery: RDM measurement, the rotated-basis energy and
its analytic gradient, the inter-basis overlap and its analytic gradient, and
the SVD-projected gradient step.

The rotation is one spatial block b (m_spatial x n_spatial) repeated for both
spins; gradients live in the ambient matrix space and feasibility is restored
by projection, so none of the evaluation routines require b to be orthonormal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fockspace import (
    FockVector,
    apply_annihilator,
    apply_exterior_transform,
    inner,
    transition_matrix,
)
from .hamio import MolecularIntegrals


class OrthRankError(ValueError):
    """Projection target is numerically rank-deficient."""


@dataclass
class PartialUnitary:
    """Per-state orbital rotation: spatial block b with b^T b = I when feasible."""

    b: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.ndim != 2:
            raise ValueError("rotation block must be a matrix")

    @property
    def m_spatial(self) -> int:
        return self.b.shape[0]

    @property
    def n_spatial(self) -> int:
        return self.b.shape[1]

    def spin_block(self) -> np.ndarray:
        """Block-diagonal (alpha, beta) expansion, shape (2m, 2n)."""
        return np.kron(np.eye(2), self.b)

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        gram = self.b.T @ self.b
        return bool(np.max(np.abs(gram - np.eye(self.n_spatial))) < tol)

    @staticmethod
    def padded_identity(m_spatial: int, n_spatial: int) -> "PartialUnitary":
        return PartialUnitary(np.eye(m_spatial, n_spatial))

    @staticmethod
    def from_columns(m_spatial: int, columns) -> "PartialUnitary":
        """Unit column selection: b[:, j] = e_{columns[j]} (0-based)."""
        cols = list(columns)
        if len(set(cols)) != len(cols):
            raise ValueError("init columns must be distinct")
        b = np.zeros((m_spatial, len(cols)))
        for j, c in enumerate(cols):
            if not 0 <= c < m_spatial:
                raise ValueError(f"init column {c} out of range")
            b[c, j] = 1.0
        return PartialUnitary(b)


@dataclass
class RDMPair:
    """Spin-orbital 1- and 2-body RDMs of one state.

    one_body[p, q] = <a_p^dag a_q>; two_body[p, q, r, s] = <a_p^dag a_q^dag a_s a_r>.
    """

    one_body: np.ndarray
    two_body: np.ndarray
    _spatial: dict = field(default_factory=dict, repr=False)

    @property
    def n_spin_orbitals(self) -> int:
        return self.one_body.shape[0]


def measure_rdms(psi: FockVector) -> RDMPair:
    """Exact RDMs via annihilated-state Gram matrices."""
    n = psi.n_orbitals
    singles = np.stack([apply_annihilator(p, psi).amps for p in range(n)])
    one_body = singles @ singles.T
    pairs = np.empty((n * n, singles.shape[1]))
    for p in range(n):
        ap = FockVector(n, singles[p])
        for q in range(n):
            # row p*n+q holds a_q a_p |psi>
            pairs[p * n + q] = apply_annihilator(q, ap).amps
    two_body = (pairs @ pairs.T).reshape(n, n, n, n)
    return RDMPair(one_body=one_body, two_body=two_body)


def _spatial_rdms(rdms: RDMPair) -> tuple[np.ndarray, np.ndarray]:
    """Spin-summed spatial (d1, gamma) with gamma[P,R,Q,S] paired for chemist
    integrals: E2 = 1/2 sum (PR|QS) gamma[P,R,Q,S]."""
    if "d1" not in rdms._spatial:
        n2 = rdms.n_spin_orbitals
        n = n2 // 2
        r1 = rdms.one_body
        d1 = r1[:n, :n] + r1[n:, n:]
        r2 = rdms.two_body.reshape(2, n, 2, n, 2, n, 2, n)
        gamma = np.einsum("aAbBaCbD->ACBD", r2)
        rdms._spatial["d1"] = d1
        rdms._spatial["gamma"] = gamma
    return rdms._spatial["d1"], rdms._spatial["gamma"]


def _gradient_gamma_kernel(rdms: RDMPair) -> np.ndarray:
    """Sum of the four product-rule images of gamma, fixed per state.

    With w3[m,a,b,c] = sum_{jkl} v_mjkl b_ja b_kb b_lc, the 8-fold symmetry
    of v collapses all four derivative terms of the two-electron energy to
    w3 contracted against one (n^3, n) kernel built from gamma.
    """
    if "g4" not in rdms._spatial:
        _, gamma = _spatial_rdms(rdms)
        n = gamma.shape[0]
        g4 = (gamma.transpose(1, 2, 3, 0) + gamma.transpose(0, 2, 3, 1)
              + gamma.transpose(3, 0, 1, 2) + gamma.transpose(2, 0, 1, 3))
        rdms._spatial["g4"] = np.ascontiguousarray(g4.reshape(n ** 3, n))
    return rdms._spatial["g4"]


def rotated_integrals(u: PartialUnitary, ints: MolecularIntegrals) -> MolecularIntegrals:
    """Integrals in the rotated active basis (chemist convention preserved)."""
    b = u.b
    h = b.T @ ints.h @ b
    w = np.tensordot(ints.v, b, axes=([3], [0]))
    w = np.tensordot(w, b, axes=([2], [0]))
    w = np.tensordot(w, b, axes=([1], [0]))
    v = np.tensordot(w, b, axes=([0], [0]))  # axes now (l', k', j', i') reversed
    v = v.transpose(3, 2, 1, 0)
    return MolecularIntegrals(
        m_spatial=u.n_spatial, n_electrons=ints.n_electrons, ms2=ints.ms2,
        h=h, v=v, e_core=0.0)


def rotated_energy(u: PartialUnitary, rdms: RDMPair, ints: MolecularIntegrals) -> float:
    """Electronic energy as an explicit degree-4 polynomial in the block b."""
    b = u.b
    d1, gamma = _spatial_rdms(rdms)
    e1 = float(np.sum((b.T @ ints.h @ b) * d1))
    w = np.tensordot(ints.v, b, axes=([3], [0]))   # (i,j,k,S)
    w = np.tensordot(w, b, axes=([2], [0]))        # (i,j,S,Q)
    w = np.tensordot(w, b, axes=([1], [0]))        # (i,S,Q,R)
    w = np.tensordot(b, w, axes=([0], [0]))        # (P,S,Q,R)
    e2 = 0.5 * float(np.sum(w.transpose(0, 3, 2, 1) * gamma))  # (P,R,Q,S)
    return e1 + e2


def rotated_energy_gradient(u: PartialUnitary, rdms: RDMPair,
                            ints: MolecularIntegrals) -> np.ndarray:
    """d(rotated_energy)/d b, alpha and beta branches summed into the block."""
    b = u.b
    m, n = b.shape
    d1, _ = _spatial_rdms(rdms)
    grad = ints.h @ b @ (d1 + d1.T)

    w1 = np.tensordot(ints.v, b, axes=([3], [0]))             # (i,j,k,c)
    w2 = np.tensordot(w1, b, axes=([2], [0]))                 # (i,j,c,b)
    w3 = np.tensordot(w2, b, axes=([1], [0]))                 # (i,c,b,a)
    w3 = w3.transpose(0, 3, 2, 1).reshape(m, n ** 3)          # (i, a*b*c)
    grad += 0.5 * (w3 @ _gradient_gamma_kernel(rdms))
    return grad


def overlap(u_j: PartialUnitary, u_k: PartialUnitary,
            psi_j: FockVector, psi_k: FockVector) -> float:
    """<Psi_j| U(u_j^T u_k) |Psi_k> through the spin-expanded product map."""
    if u_j.n_spatial != u_k.n_spatial or u_j.m_spatial != u_k.m_spatial:
        raise ValueError("rotation shapes differ")
    prod = u_j.b.T @ u_k.b
    spin = np.kron(np.eye(2), prod)
    return inner(psi_j, apply_exterior_transform(spin, psi_k))


def overlap_gradient(u_j: PartialUnitary, u_k: PartialUnitary,
                     psi_j: FockVector, psi_k: FockVector) -> np.ndarray:
    """d |<Psi_j|U(u_j^T u_k)|Psi_k>|^2 / d b_k (spatial block of u_k).

    The two conjugate branches coincide in real arithmetic, contributing the
    factor 2; alpha and beta spin entries fold into the shared block.
    """
    m, n = u_k.m_spatial, u_k.n_spatial
    prod = u_j.b.T @ u_k.b
    spin = np.kron(np.eye(2), prod)
    s = inner(psi_j, apply_exterior_transform(spin, psi_k))
    tmat = transition_matrix(psi_j, spin, psi_k)      # (N, N) spin-orbital
    grad_spin = 2.0 * s * (np.kron(np.eye(2), u_j.b) @ tmat)
    return grad_spin[:m, :n] + grad_spin[m:, n:]


def orth(a: np.ndarray) -> np.ndarray:
    """Nearest orthonormal frame U V^T from the thin SVD, sign-canonicalized.

    Each right singular vector gets its largest-magnitude entry made
    positive (compensated in U), so the output is deterministic.
    """
    a = np.asarray(a, dtype=float)
    uu, sv, vt = np.linalg.svd(a, full_matrices=False)
    if sv.min() <= 1e-12:
        raise OrthRankError(f"projection target rank-deficient (sigma_min={sv.min():.3e})")
    for j in range(vt.shape[0]):
        i = np.argmax(np.abs(vt[j]))
        if vt[j, i] < 0:
            vt[j] = -vt[j]
            uu[:, j] = -uu[:, j]
    return uu @ vt


def projected_gd_step(u: PartialUnitary, grad: np.ndarray, eta: float) -> PartialUnitary:
    """One projected descent step: orth(b - eta * grad)."""
    return PartialUnitary(orth(u.b - eta * grad))
