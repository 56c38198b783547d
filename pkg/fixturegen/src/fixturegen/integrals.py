"""Gaussian integrals over contracted Cartesian/spherical AOs.

McMurchie-Davidson scheme: Hermite expansion of orbital products plus
Hermite Coulomb integrals. Every AO is stored as a flat list of primitive
monomial Gaussians c * x^i y^j z^k exp(-a r^2) around one center, which
makes spherical-harmonic d combinations and general contractions uniform.
Hot loops are numba-compiled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .basis import shells_for

ANGSTROM_TO_BOHR = 1.0 / 0.529177210903

# spherical d components as raw-monomial combinations, order m = -2..2
_SPHERICAL_D = [
    [(1.0, (1, 1, 0))],
    [(1.0, (0, 1, 1))],
    [(2.0, (0, 0, 2)), (-1.0, (2, 0, 0)), (-1.0, (0, 2, 0))],
    [(1.0, (1, 0, 1))],
    [(1.0, (2, 0, 0)), (-1.0, (0, 2, 0))],
]

_CARTESIAN = {
    0: [(0, 0, 0)],
    1: [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
}


def _double_factorial(n: int) -> float:
    out = 1.0
    while n > 1:
        out *= n
        n -= 2
    return out


def _primitive_norm(alpha: float, powers: tuple[int, int, int]) -> float:
    i, j, k = powers
    l = i + j + k
    pref = (2.0 * alpha / math.pi) ** 0.75 * (4.0 * alpha) ** (l / 2.0)
    return pref / math.sqrt(
        _double_factorial(2 * i - 1) * _double_factorial(2 * j - 1) * _double_factorial(2 * k - 1)
    )


@dataclass
class AOBasis:
    """Flattened primitive data for a molecule's AO basis.

    Arrays are laid out so numba kernels can slice one AO's primitive terms
    via [ao_start[mu] : ao_start[mu] + ao_nterm[mu]].
    """

    centers: np.ndarray        # (nao, 3) bohr
    ao_start: np.ndarray       # (nao,) int
    ao_nterm: np.ndarray       # (nao,) int
    alphas: np.ndarray         # (nterms,)
    coefs: np.ndarray          # (nterms,)
    powers: np.ndarray         # (nterms, 3) int
    shell_labels: list[str] = field(default_factory=list)

    @property
    def nao(self) -> int:
        return len(self.ao_start)


def build_ao_basis(symbols: list[str], coords_bohr: np.ndarray, basis: str) -> AOBasis:
    """Assemble the AO list for a molecule; AOs are unit-normalized."""
    centers, starts, nterms = [], [], []
    alphas, coefs, powers = [], [], []
    labels = []

    def add_ao(center, terms, label):
        starts.append(len(alphas))
        nterms.append(len(terms))
        centers.append(center)
        for c, a, pw in terms:
            coefs.append(c)
            alphas.append(a)
            powers.append(pw)
        labels.append(label)

    for sym, xyz in zip(symbols, coords_bohr):
        for l, prims in shells_for(sym, basis):
            if l in _CARTESIAN:
                for pw in _CARTESIAN[l]:
                    terms = [(c * _primitive_norm(a, pw), a, pw) for a, c in prims]
                    add_ao(xyz, terms, f"{sym} l={l}{pw}")
            elif l == 2:
                for comb in _SPHERICAL_D:
                    terms = []
                    for a, c in prims:
                        # weight raw monomials; overall scale fixed by the
                        # numeric unit-normalization below
                        for w, pw in comb:
                            terms.append((w * c * _primitive_norm(a, (2, 0, 0)), a, pw))
                    add_ao(xyz, terms, f"{sym} d{comb}")
            else:
                raise NotImplementedError(f"angular momentum l={l} not supported")

    basis_arrays = AOBasis(
        centers=np.asarray(centers, dtype=float),
        ao_start=np.asarray(starts, dtype=np.int64),
        ao_nterm=np.asarray(nterms, dtype=np.int64),
        alphas=np.asarray(alphas, dtype=float),
        coefs=np.asarray(coefs, dtype=float),
        powers=np.asarray(powers, dtype=np.int64),
        shell_labels=labels,
    )
    s = overlap_matrix(basis_arrays)
    scale = 1.0 / np.sqrt(np.diag(s))
    for mu in range(basis_arrays.nao):
        sl = slice(starts[mu], starts[mu] + nterms[mu])
        basis_arrays.coefs[sl] *= scale[mu]
    return basis_arrays


# ----------------------------------------------------------------------
# numba kernels
# ----------------------------------------------------------------------

@njit(cache=True)
def _boys(m_max, t, out):
    # series + downward recursion for small t, erf + upward for large t
    if t < 1e-13:
        for m in range(m_max + 1):
            out[m] = 1.0 / (2 * m + 1) - t / (2 * m + 3)
        return
    if t < 35.0:
        em = math.exp(-t)
        term = 1.0 / (2 * m_max + 1)
        acc = term
        k = 1
        while term > 1e-17 * acc:
            term *= 2.0 * t / (2 * m_max + 2 * k + 1)
            acc += term
            k += 1
        out[m_max] = em * acc
        for m in range(m_max - 1, -1, -1):
            out[m] = (2.0 * t * out[m + 1] + em) / (2 * m + 1)
    else:
        out[0] = 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))
        em = math.exp(-t)
        for m in range(1, m_max + 1):
            out[m] = ((2 * m - 1) * out[m - 1] - em) / (2.0 * t)


@njit(cache=True)
def _hermite_e(la, lb, a, b, ax, bx, out):
    # out[i, j, t] Hermite expansion coefficients, zero-filled beyond t = i + j
    p = a + b
    mu = a * b / p
    qx = ax - bx
    px = (a * ax + b * bx) / p
    out[:, :, :] = 0.0
    out[0, 0, 0] = math.exp(-mu * qx * qx)
    for i in range(la + 1):
        for j in range(lb + 1):
            if i == 0 and j == 0:
                continue
            if j == 0:
                xp = px - ax
                ii, jj = i - 1, 0
            else:
                xp = px - bx
                ii, jj = i, j - 1
            for t in range(i + j + 1):
                val = xp * out[ii, jj, t]
                if t > 0:
                    val += out[ii, jj, t - 1] / (2.0 * p)
                if t + 1 <= ii + jj:
                    val += (t + 1) * out[ii, jj, t + 1]
                out[i, j, t] = val


@njit(cache=True)
def _hermite_r(lmax, p, dx, dy, dz, out):
    # out[t, u, v] = R^0_{tuv}(p, D); auxiliary index folded in-place
    t2 = dx * dx + dy * dy + dz * dz
    fm = np.empty(lmax + 1)
    _boys(lmax, p * t2, fm)
    aux = np.zeros((lmax + 1, lmax + 1, lmax + 1, lmax + 1))
    for n in range(lmax + 1):
        aux[n, 0, 0, 0] = (-2.0 * p) ** n * fm[n]
    for total in range(1, lmax + 1):
        for t in range(total + 1):
            for u in range(total - t + 1):
                v = total - t - u
                for n in range(lmax - total + 1):
                    if t > 0:
                        val = dx * aux[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * aux[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = dy * aux[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * aux[n + 1, t, u - 2, v]
                    else:
                        val = dz * aux[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * aux[n + 1, t, u, v - 2]
                    aux[n, t, u, v] = val
    out[: lmax + 1, : lmax + 1, : lmax + 1] = aux[0]


@njit(cache=True)
def _overlap_1d(i, j, a, b, ax, bx, eij):
    _hermite_e(i, j, a, b, ax, bx, eij)
    return eij[i, j, 0] * math.sqrt(math.pi / (a + b))


@njit(cache=True)
def _overlap_kernel(centers, ao_start, ao_nterm, alphas, coefs, powers, shift):
    """Overlap-type matrix with the ket's Cartesian powers raised by `shift`.

    Bra index is always the larger of (mu, nu); both triangle slots receive
    that one value, so with a nonzero shift the caller must account for the
    ket being the smaller index.
    """
    nao = len(ao_start)
    smat = np.zeros((nao, nao))
    ebuf = np.zeros((5, 7, 12))
    for mu in range(nao):
        for nu in range(mu + 1):
            acc = 0.0
            for ta in range(ao_start[mu], ao_start[mu] + ao_nterm[mu]):
                for tb in range(ao_start[nu], ao_start[nu] + ao_nterm[nu]):
                    a, b = alphas[ta], alphas[tb]
                    pref = coefs[ta] * coefs[tb]
                    s = pref
                    for d in range(3):
                        s *= _overlap_1d(
                            powers[ta, d], powers[tb, d] + shift[d],
                            a, b, centers[mu, d], centers[nu, d], ebuf,
                        )
                    acc += s
            smat[mu, nu] = acc
            smat[nu, mu] = acc
    return smat


@njit(cache=True)
def _kinetic_kernel(centers, ao_start, ao_nterm, alphas, coefs, powers):
    nao = len(ao_start)
    tmat = np.zeros((nao, nao))
    ebuf = np.zeros((5, 7, 12))
    for mu in range(nao):
        for nu in range(mu + 1):
            acc = 0.0
            for ta in range(ao_start[mu], ao_start[mu] + ao_nterm[mu]):
                for tb in range(ao_start[nu], ao_start[nu] + ao_nterm[nu]):
                    a, b = alphas[ta], alphas[tb]
                    pref = coefs[ta] * coefs[tb]
                    s1 = np.empty(3)
                    k1 = np.empty(3)
                    for d in range(3):
                        i, j = powers[ta, d], powers[tb, d]
                        ax, bx = centers[mu, d], centers[nu, d]
                        s1[d] = _overlap_1d(i, j, a, b, ax, bx, ebuf)
                        term = 4.0 * b * b * _overlap_1d(i, j + 2, a, b, ax, bx, ebuf)
                        term -= 2.0 * b * (2 * j + 1) * s1[d]
                        if j >= 2:
                            term += j * (j - 1) * _overlap_1d(i, j - 2, a, b, ax, bx, ebuf)
                        k1[d] = -0.5 * term
                    acc += pref * (k1[0] * s1[1] * s1[2] + s1[0] * k1[1] * s1[2] + s1[0] * s1[1] * k1[2])
            tmat[mu, nu] = acc
            tmat[nu, mu] = acc
    return tmat


@njit(cache=True)
def _nuclear_kernel(centers, ao_start, ao_nterm, alphas, coefs, powers, charges, nuc_xyz):
    nao = len(ao_start)
    vmat = np.zeros((nao, nao))
    ex = np.zeros((5, 7, 12))
    ey = np.zeros((5, 7, 12))
    ez = np.zeros((5, 7, 12))
    rbuf = np.zeros((13, 13, 13))
    for mu in range(nao):
        for nu in range(mu + 1):
            acc = 0.0
            for ta in range(ao_start[mu], ao_start[mu] + ao_nterm[mu]):
                for tb in range(ao_start[nu], ao_start[nu] + ao_nterm[nu]):
                    a, b = alphas[ta], alphas[tb]
                    p = a + b
                    pref = coefs[ta] * coefs[tb] * 2.0 * math.pi / p
                    i1, j1, k1 = powers[ta, 0], powers[ta, 1], powers[ta, 2]
                    i2, j2, k2 = powers[tb, 0], powers[tb, 1], powers[tb, 2]
                    _hermite_e(i1, i2, a, b, centers[mu, 0], centers[nu, 0], ex)
                    _hermite_e(j1, j2, a, b, centers[mu, 1], centers[nu, 1], ey)
                    _hermite_e(k1, k2, a, b, centers[mu, 2], centers[nu, 2], ez)
                    px = (a * centers[mu, 0] + b * centers[nu, 0]) / p
                    py = (a * centers[mu, 1] + b * centers[nu, 1]) / p
                    pz = (a * centers[mu, 2] + b * centers[nu, 2]) / p
                    lmax = i1 + i2 + j1 + j2 + k1 + k2
                    for nucleus in range(len(charges)):
                        _hermite_r(lmax, p,
                                   px - nuc_xyz[nucleus, 0],
                                   py - nuc_xyz[nucleus, 1],
                                   pz - nuc_xyz[nucleus, 2], rbuf)
                        val = 0.0
                        for t in range(i1 + i2 + 1):
                            for u in range(j1 + j2 + 1):
                                for v in range(k1 + k2 + 1):
                                    val += ex[i1, i2, t] * ey[j1, j2, u] * ez[k1, k2, v] * rbuf[t, u, v]
                        acc -= charges[nucleus] * pref * val
            vmat[mu, nu] = acc
            vmat[nu, mu] = acc
    return vmat


@njit(cache=True)
def _eri_kernel(centers, ao_start, ao_nterm, alphas, coefs, powers):
    nao = len(ao_start)
    eri = np.zeros((nao, nao, nao, nao))
    exb = np.zeros((5, 7, 12))
    eyb = np.zeros((5, 7, 12))
    ezb = np.zeros((5, 7, 12))
    exk = np.zeros((5, 7, 12))
    eyk = np.zeros((5, 7, 12))
    ezk = np.zeros((5, 7, 12))
    rbuf = np.zeros((13, 13, 13))
    for mu in range(nao):
        for nu in range(mu + 1):
            ij = mu * (mu + 1) // 2 + nu
            for lam in range(nao):
                for sig in range(lam + 1):
                    kl = lam * (lam + 1) // 2 + sig
                    if ij < kl:
                        continue
                    acc = 0.0
                    for ta in range(ao_start[mu], ao_start[mu] + ao_nterm[mu]):
                        for tb in range(ao_start[nu], ao_start[nu] + ao_nterm[nu]):
                            a, b = alphas[ta], alphas[tb]
                            p = a + b
                            i1, j1, k1 = powers[ta, 0], powers[ta, 1], powers[ta, 2]
                            i2, j2, k2 = powers[tb, 0], powers[tb, 1], powers[tb, 2]
                            _hermite_e(i1, i2, a, b, centers[mu, 0], centers[nu, 0], exb)
                            _hermite_e(j1, j2, a, b, centers[mu, 1], centers[nu, 1], eyb)
                            _hermite_e(k1, k2, a, b, centers[mu, 2], centers[nu, 2], ezb)
                            px = (a * centers[mu, 0] + b * centers[nu, 0]) / p
                            py = (a * centers[mu, 1] + b * centers[nu, 1]) / p
                            pz = (a * centers[mu, 2] + b * centers[nu, 2]) / p
                            lb_tot = i1 + i2 + j1 + j2 + k1 + k2
                            cab = coefs[ta] * coefs[tb]
                            for tc in range(ao_start[lam], ao_start[lam] + ao_nterm[lam]):
                                for td in range(ao_start[sig], ao_start[sig] + ao_nterm[sig]):
                                    c, dd = alphas[tc], alphas[td]
                                    q = c + dd
                                    i3, j3, k3 = powers[tc, 0], powers[tc, 1], powers[tc, 2]
                                    i4, j4, k4 = powers[td, 0], powers[td, 1], powers[td, 2]
                                    _hermite_e(i3, i4, c, dd, centers[lam, 0], centers[sig, 0], exk)
                                    _hermite_e(j3, j4, c, dd, centers[lam, 1], centers[sig, 1], eyk)
                                    _hermite_e(k3, k4, c, dd, centers[lam, 2], centers[sig, 2], ezk)
                                    qx = (c * centers[lam, 0] + dd * centers[sig, 0]) / q
                                    qy = (c * centers[lam, 1] + dd * centers[sig, 1]) / q
                                    qz = (c * centers[lam, 2] + dd * centers[sig, 2]) / q
                                    lk_tot = i3 + i4 + j3 + j4 + k3 + k4
                                    alpha = p * q / (p + q)
                                    _hermite_r(lb_tot + lk_tot, alpha, px - qx, py - qy, pz - qz, rbuf)
                                    pref = (cab * coefs[tc] * coefs[td]
                                            * 2.0 * math.pi ** 2.5
                                            / (p * q * math.sqrt(p + q)))
                                    val = 0.0
                                    for t in range(i1 + i2 + 1):
                                        for u in range(j1 + j2 + 1):
                                            for v in range(k1 + k2 + 1):
                                                e_bra = exb[i1, i2, t] * eyb[j1, j2, u] * ezb[k1, k2, v]
                                                if e_bra == 0.0:
                                                    continue
                                                for tt in range(i3 + i4 + 1):
                                                    for uu in range(j3 + j4 + 1):
                                                        for vv in range(k3 + k4 + 1):
                                                            e_ket = exk[i3, i4, tt] * eyk[j3, j4, uu] * ezk[k3, k4, vv]
                                                            if e_ket == 0.0:
                                                                continue
                                                            sign = -1.0 if (tt + uu + vv) % 2 else 1.0
                                                            val += e_bra * e_ket * sign * rbuf[t + tt, u + uu, v + vv]
                                    acc += pref * val
                    eri[mu, nu, lam, sig] = acc
                    eri[nu, mu, lam, sig] = acc
                    eri[mu, nu, sig, lam] = acc
                    eri[nu, mu, sig, lam] = acc
                    eri[lam, sig, mu, nu] = acc
                    eri[sig, lam, mu, nu] = acc
                    eri[lam, sig, nu, mu] = acc
                    eri[sig, lam, nu, mu] = acc
    return eri


# ----------------------------------------------------------------------
# public matrix builders
# ----------------------------------------------------------------------

def overlap_matrix(basis: AOBasis) -> np.ndarray:
    return _overlap_kernel(basis.centers, basis.ao_start, basis.ao_nterm,
                           basis.alphas, basis.coefs, basis.powers, np.zeros(3, dtype=np.int64))


def kinetic_matrix(basis: AOBasis) -> np.ndarray:
    return _kinetic_kernel(basis.centers, basis.ao_start, basis.ao_nterm,
                           basis.alphas, basis.coefs, basis.powers)


def nuclear_attraction_matrix(basis: AOBasis, charges: np.ndarray, nuc_xyz: np.ndarray) -> np.ndarray:
    return _nuclear_kernel(basis.centers, basis.ao_start, basis.ao_nterm,
                           basis.alphas, basis.coefs, basis.powers,
                           charges.astype(float), nuc_xyz)


def eri_tensor(basis: AOBasis) -> np.ndarray:
    """Two-electron integrals in chemist (mu nu | lam sig) convention."""
    return _eri_kernel(basis.centers, basis.ao_start, basis.ao_nterm,
                       basis.alphas, basis.coefs, basis.powers)


def moment_matrix(basis: AOBasis, direction: int) -> np.ndarray:
    """<mu| r_d |nu> about the origin, used only to canonicalize degenerate MOs.

    Uses r_d g_B = g_B(power_d + 1) + B_d g_B; the kernel always treats the
    smaller AO index as the ket, so the B_d term reads that AO's center.
    """
    shift = np.zeros(3, dtype=np.int64)
    shift[direction] = 1
    raised = _overlap_kernel(basis.centers, basis.ao_start, basis.ao_nterm,
                             basis.alphas, basis.coefs, basis.powers, shift)
    s = overlap_matrix(basis)
    idx = np.arange(basis.nao)
    ket = np.minimum(idx[:, None], idx[None, :])
    return raised + basis.centers[ket, direction] * s
