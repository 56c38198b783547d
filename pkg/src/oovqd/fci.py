"""Sector-restricted sparse exact diagonalization over the full orbital space.

The sector basis is a tensor product of alpha and beta occupation strings
over the spatial orbitals. The Hamiltonian acts through spin-summed
excitation operators E_pq with the same ascending-order sign convention as
fockspace, so matrix elements follow the Slater-Condon rules without ever
forming the matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fockspace import FockVector, _minor_determinants, _sector_tables
from .hamio import MolecularIntegrals


class EigensolverError(RuntimeError):
    """Davidson failed to reach the residual tolerance."""

    def __init__(self, message, residual_norms=None):
        super().__init__(message)
        self.residual_norms = residual_norms


@dataclass
class DeterminantBasis:
    """All determinants of one (n_alpha, n_beta) sector, sorted ascending.

    A determinant is alpha_bits | beta_bits << m_spatial; the flat amplitude
    index is ib * len(alpha_strings) + ia, which matches that sort order.
    """

    n_spin_orbitals: int
    n_alpha: int
    n_beta: int
    alpha_strings: np.ndarray
    beta_strings: np.ndarray
    _links: dict = field(default_factory=dict, repr=False)

    @property
    def m_spatial(self) -> int:
        return self.n_spin_orbitals // 2

    @property
    def size(self) -> int:
        return len(self.alpha_strings) * len(self.beta_strings)

    @property
    def dets(self) -> np.ndarray:
        grid = self.alpha_strings[None, :] | (self.beta_strings[:, None] << self.m_spatial)
        return grid.ravel()

    def __len__(self) -> int:
        return self.size


def build_basis(n_spin_orbitals: int, n_alpha: int, n_beta: int) -> DeterminantBasis:
    if n_spin_orbitals % 2:
        raise ValueError("spin-orbital count must be even")
    m = n_spin_orbitals // 2
    if not (0 <= n_alpha <= m and 0 <= n_beta <= m):
        raise ValueError(f"sector ({n_alpha},{n_beta}) infeasible for {m} spatial orbitals")
    strings = {}
    for n in {n_alpha, n_beta}:
        s = sorted(sum(1 << o for o in occ) for occ in itertools.combinations(range(m), n))
        strings[n] = np.array(s, dtype=np.int64)
    return DeterminantBasis(
        n_spin_orbitals=n_spin_orbitals,
        n_alpha=n_alpha,
        n_beta=n_beta,
        alpha_strings=strings[n_alpha],
        beta_strings=strings[n_beta],
    )


def _string_links(strings: np.ndarray, m: int):
    """Per (p,q) excitation: (source idx, target idx, sign) arrays with
    J = sign * E_pq I, where E_pq removes q and creates p."""
    index = {int(s): i for i, s in enumerate(strings)}
    by_pq: list[list[tuple[int, int, int]]] = [[] for _ in range(m * m)]
    for i, s in enumerate(strings):
        s = int(s)
        occ = [o for o in range(m) if s >> o & 1]
        for q in occ:
            s1 = s & ~(1 << q)
            sign_q = -1 if bin(s & ((1 << q) - 1)).count("1") % 2 else 1
            for p in range(m):
                if s1 >> p & 1:
                    continue
                s2 = s1 | (1 << p)
                sign_p = -1 if bin(s1 & ((1 << p) - 1)).count("1") % 2 else 1
                by_pq[p * m + q].append((i, index[s2], sign_q * sign_p))
    packed = []
    for entries in by_pq:
        if entries:
            arr = np.array(entries, dtype=np.int64)
            packed.append((arr[:, 0], arr[:, 1], arr[:, 2].astype(float)))
        else:
            packed.append(None)
    return packed


def _links(basis: DeterminantBasis):
    key = "links"
    if key not in basis._links:
        m = basis.m_spatial
        alpha = _string_links(basis.alpha_strings, m)
        same = basis.n_alpha == basis.n_beta
        beta = alpha if same else _string_links(basis.beta_strings, m)
        basis._links[key] = (alpha, beta)
    return basis._links[key]


def _apply_excitations(cmat: np.ndarray, links_a, links_b, m: int) -> np.ndarray:
    """D[pq] = (E^alpha_pq + E^beta_pq) c for every ordered pair."""
    nb, na = cmat.shape
    d = np.zeros((m * m, nb, na))
    for pq in range(m * m):
        if links_a[pq] is not None:
            ii, jj, sg = links_a[pq]
            d[pq][:, jj] += cmat[:, ii] * sg
        if links_b[pq] is not None:
            ii, jj, sg = links_b[pq]
            d[pq][jj, :] += sg[:, None] * cmat[ii, :]
    return d


def _contract_excitations(gstack: np.ndarray, links_a, links_b, m: int) -> np.ndarray:
    """sum_pq E_pq g_pq for a stack of matrices g."""
    out = np.zeros_like(gstack[0])
    for pq in range(m * m):
        g = gstack[pq]
        if links_a[pq] is not None:
            ii, jj, sg = links_a[pq]
            out[:, jj] += g[:, ii] * sg
        if links_b[pq] is not None:
            ii, jj, sg = links_b[pq]
            out[jj, :] += sg[:, None] * g[ii, :]
    return out


def hamiltonian_matvec(ints: MolecularIntegrals, basis: DeterminantBasis,
                       x: np.ndarray) -> np.ndarray:
    """y = H x with the core constant included.

    Spin-summed form H = sum h'_pq E_pq + 1/2 sum (pq|rs) E_pq E_rs with
    h' = h - 1/2 sum_r (pr|rq); the (rs) contraction runs over unique pairs
    using the permutation symmetry of the integrals.
    """
    if x.shape != (basis.size,):
        raise ValueError(f"expected vector of length {basis.size}, got {x.shape}")
    m = basis.m_spatial
    if m != ints.m_spatial:
        raise ValueError("integral and basis orbital counts differ")
    na, nb = len(basis.alpha_strings), len(basis.beta_strings)
    links_a, links_b = _links(basis)
    cmat = x.reshape(nb, na)

    d = _apply_excitations(cmat, links_a, links_b, m)
    hmod = ints.h - 0.5 * np.einsum("prrq->pq", ints.v)
    sigma = np.tensordot(hmod.reshape(m * m), d, axes=(0, 0))

    # two-electron part over unique index pairs on both sides, using
    # (pq|rs) = (qp|rs) = (pq|sr)
    tri_r, tri_s = np.tril_indices(m)
    d_pairs = d.reshape(m, m, nb, na)
    d_sym = d_pairs[tri_r, tri_s].copy()
    off = tri_r != tri_s
    d_sym[off] += d_pairs[tri_s[off], tri_r[off]]
    v_uniq = ints.v[tri_r[:, None], tri_s[:, None], tri_r[None, :], tri_s[None, :]]
    f_uniq = (v_uniq @ d_sym.reshape(len(tri_r), -1)).reshape(len(tri_r), nb, na)
    p_idx, q_idx = np.divmod(np.arange(m * m), m)
    hi, lo = np.maximum(p_idx, q_idx), np.minimum(p_idx, q_idx)
    f = f_uniq[hi * (hi + 1) // 2 + lo]
    sigma += 0.5 * _contract_excitations(f, links_a, links_b, m)

    sigma += ints.e_core * cmat
    return sigma.ravel()


def hamiltonian_diagonal(ints: MolecularIntegrals, basis: DeterminantBasis) -> np.ndarray:
    """<D|H|D> for every determinant, including the core constant."""
    m = basis.m_spatial
    occ_a = _occupancy_matrix(basis.alpha_strings, m)
    occ_b = _occupancy_matrix(basis.beta_strings, m)
    hdiag = np.diag(ints.h)
    jmat = np.einsum("ppqq->pq", ints.v)
    kmat = np.einsum("pqqp->pq", ints.v)

    def same_spin(occ):
        # the p == q term of J - K vanishes identically
        return occ @ hdiag + 0.5 * np.einsum("ip,pq,iq->i", occ, jmat - kmat, occ)

    e_a = same_spin(occ_a)
    e_b = same_spin(occ_b)
    cross = occ_b @ jmat @ occ_a.T  # [ib, ia]
    diag = e_a[None, :] + e_b[:, None] + cross + ints.e_core
    return diag.ravel()


def _occupancy_matrix(strings: np.ndarray, m: int) -> np.ndarray:
    return ((strings[:, None] >> np.arange(m)[None, :]) & 1).astype(float)


@dataclass
class EigenResult:
    energies: np.ndarray        # ascending, including the core constant
    vectors: np.ndarray         # (dim, k) orthonormal columns
    residual_norms: np.ndarray
    e_core: float = 0.0

    @property
    def electronic_energies(self) -> np.ndarray:
        return self.energies - self.e_core


def lowest_eigenpairs(ints: MolecularIntegrals, basis: DeterminantBasis, k: int,
                      tol: float = 1e-8, max_iter: int = 500,
                      force_davidson: bool = False) -> EigenResult:
    """Block Davidson with diagonal preconditioning.

    Start vectors are unit vectors on the k lowest-diagonal determinants;
    the subspace restarts at dimension 8k. Exactly degenerate groups are
    rotated to a deterministic staircase over determinant indices and then
    ordered by the index of their largest-magnitude determinant. Small
    sectors fall back to a dense solve unless force_davidson is set.
    """
    dim = basis.size
    if k > dim:
        raise ValueError(f"requested {k} roots from a {dim}-dimensional sector")
    diag = hamiltonian_diagonal(ints, basis)

    if dim <= 400 and not force_davidson:
        dense = np.column_stack([
            hamiltonian_matvec(ints, basis, np.eye(dim)[:, i]) for i in range(dim)])
        vals, vecs = np.linalg.eigh(0.5 * (dense + dense.T))
        energies, vectors = vals[:k], vecs[:, :k]
        residuals = np.array([
            np.linalg.norm(hamiltonian_matvec(ints, basis, vectors[:, i])
                           - energies[i] * vectors[:, i]) for i in range(k)])
        vectors = _canonicalize_degenerate_vectors(energies, vectors)
        return EigenResult(energies, vectors, residuals, ints.e_core)

    start = np.argsort(diag, kind="stable")[:k]
    v = np.zeros((dim, k))
    v[start, np.arange(k)] = 1.0
    w = np.column_stack([hamiltonian_matvec(ints, basis, v[:, i]) for i in range(k)])

    best_res = np.full(k, np.inf)
    for _ in range(max_iter):
        s = v.T @ w
        theta, y = np.linalg.eigh(0.5 * (s + s.T))
        theta, y = theta[:k], y[:, :k]
        ritz = v @ y
        wy = w @ y
        residuals = wy - ritz * theta
        res_norms = np.linalg.norm(residuals, axis=0)
        best_res = np.minimum(best_res, res_norms)
        if np.all(res_norms < tol):
            vectors = _canonicalize_degenerate_vectors(theta, ritz)
            return EigenResult(theta, vectors, res_norms, ints.e_core)

        if v.shape[1] + k > 8 * k:
            v, w = ritz, wy
            # re-orthonormalize the restarted block
            q, r = np.linalg.qr(v)
            v = q
            w = w @ np.linalg.inv(r)
        new_dirs = []
        for i in range(k):
            if res_norms[i] < tol:
                continue
            denom = diag - theta[i]
            denom = np.where(np.abs(denom) < 1e-10, 1e-10, denom)
            t = residuals[:, i] / denom
            for _ in range(2):
                t -= v @ (v.T @ t)
                if new_dirs:
                    block = np.column_stack(new_dirs)
                    t -= block @ (block.T @ t)
            nrm = np.linalg.norm(t)
            if nrm > 1e-10:
                new_dirs.append(t / nrm)
        if not new_dirs:
            vectors = _canonicalize_degenerate_vectors(theta, ritz)
            return EigenResult(theta, vectors, res_norms, ints.e_core)
        block = np.column_stack(new_dirs)
        wnew = np.column_stack([hamiltonian_matvec(ints, basis, block[:, i])
                                for i in range(block.shape[1])])
        v = np.column_stack([v, block])
        w = np.column_stack([w, wnew])
    raise EigensolverError(
        f"Davidson did not converge {k} roots in {max_iter} iterations "
        f"(best residuals {best_res})", residual_norms=best_res)


def _canonicalize_degenerate_vectors(energies: np.ndarray, vectors: np.ndarray,
                                     degeneracy_tol: float = 1e-9) -> np.ndarray:
    """Deterministic representatives inside exactly degenerate groups.

    Each group is rotated so that successive vectors are supported on
    successively later determinant indices (a staircase), then the group is
    ordered by ascending index of the largest-magnitude amplitude. Every
    vector finally gets its largest-magnitude amplitude made positive.
    """
    vectors = vectors.copy()
    k = len(energies)
    start = 0
    while start < k:
        stop = start + 1
        while stop < k and energies[stop] - energies[stop - 1] < degeneracy_tol:
            stop += 1
        g = stop - start
        if g > 1:
            block = vectors[:, start:stop]
            col = 0
            row = 0
            dim = block.shape[0]
            while col < g - 1 and row < dim:
                a = block[row, col:]
                nrm = np.linalg.norm(a)
                if nrm > 1e-8:
                    # rotate trailing columns so only column `col` hits this det
                    q = _householder_first(a / nrm)
                    block[:, col:] = block[:, col:] @ q
                    col += 1
                row += 1
            order = np.argsort([np.argmax(np.abs(block[:, j])) for j in range(g)],
                               kind="stable")
            vectors[:, start:stop] = block[:, order]
        start = stop
    for j in range(k):
        i = np.argmax(np.abs(vectors[:, j]))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return vectors


def _householder_first(w: np.ndarray) -> np.ndarray:
    """Orthogonal q with q^T w = e_1, i.e. first column of q equals w."""
    n = len(w)
    e1 = np.zeros(n)
    e1[0] = 1.0
    u = w - e1
    nrm = np.linalg.norm(u)
    if nrm < 1e-14:
        return np.eye(n)
    u /= nrm
    return np.eye(n) - 2.0 * np.outer(u, u)


def fci_overlap_with_active(fci_vec: np.ndarray, basis: DeterminantBasis,
                            u, psi: FockVector) -> float:
    """<fci_vec | U(u_spin) | psi> with psi embedded from the active space.

    u carries the spatial block mapping n_spatial active orbitals into
    m_spatial full ones; the block-diagonal spin structure factorizes the
    embedding into per-spin minor-determinant matrices.
    """
    b = np.asarray(getattr(u, "b", u), dtype=float)
    m, n = b.shape
    if m != basis.m_spatial:
        raise ValueError("rotation rows do not match the full orbital count")
    if psi.n_orbitals != 2 * n:
        raise ValueError("active state size does not match the rotation columns")
    if fci_vec.shape != (basis.size,):
        raise ValueError("FCI vector does not match the basis")

    act_tables = _sector_tables(n)
    alpha_sel, alpha_bits = act_tables[basis.n_alpha]
    beta_sel, beta_bits = act_tables[basis.n_beta]
    psi_mat = psi.amps[alpha_bits[None, :] | (beta_bits[:, None] << n)]

    full_alpha = _occupied_lists(basis.alpha_strings, m, basis.n_alpha)
    full_beta = _occupied_lists(basis.beta_strings, m, basis.n_beta)
    d_alpha = _minor_determinants(b, full_alpha, alpha_sel)
    d_beta = _minor_determinants(b, full_beta, beta_sel)

    embedded = d_beta @ psi_mat @ d_alpha.T
    return float(np.sum(fci_vec.reshape(embedded.shape) * embedded))


def _occupied_lists(strings: np.ndarray, m: int, n_occ: int) -> np.ndarray:
    out = np.empty((len(strings), n_occ), dtype=np.int64)
    for i, s in enumerate(strings):
        s = int(s)
        out[i] = [o for o in range(m) if s >> o & 1]
    return out
