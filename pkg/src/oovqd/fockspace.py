"""Occupation-number Fock space with signed ladder operators and the
exterior-algebra extension U(m) of a single-particle linear map.

Basis states are N-bit masks, bit i set iff spin-orbital i is occupied;
alpha spin-orbitals occupy the low N/2 bits, beta the high N/2. Wedge
products are ordered by ascending orbital index, so matrix elements of
U(m) between basis states are minor determinants of m. Amplitudes are
real throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# a single-particle map is just its (rows x cols) matrix
LinearOrbitalMap = np.ndarray


@dataclass
class FockVector:
    """Amplitude vector over all 2^N occupation basis states."""

    n_orbitals: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.n_orbitals,):
            raise ValueError(
                f"need 2^{self.n_orbitals} amplitudes, got shape {self.amps.shape}")

    def copy(self) -> "FockVector":
        return FockVector(self.n_orbitals, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def zero_vector(n_orbitals: int) -> FockVector:
    return FockVector(n_orbitals, np.zeros(1 << n_orbitals))


def basis_state(n_orbitals: int, bits: int) -> FockVector:
    v = zero_vector(n_orbitals)
    v.amps[bits] = 1.0
    return v


def inner(v: FockVector, w: FockVector) -> float:
    if v.n_orbitals != w.n_orbitals:
        raise ValueError("orbital counts differ")
    return float(v.amps @ w.amps)


def hf_reference(n_orbitals: int, n_alpha: int, n_beta: int) -> FockVector:
    """Single determinant occupying the lowest alpha and beta orbitals."""
    half = n_orbitals // 2
    if n_orbitals % 2 or n_alpha > half or n_beta > half or min(n_alpha, n_beta) < 0:
        raise ValueError(f"sector ({n_alpha},{n_beta}) impossible for N={n_orbitals}")
    bits = ((1 << n_alpha) - 1) | (((1 << n_beta) - 1) << half)
    return basis_state(n_orbitals, bits)


@lru_cache(maxsize=64)
def _ladder_tables(n_orbitals: int, i: int):
    """Index/sign arrays for the creator on orbital i.

    source bits have bit i clear; target = source | 1<<i;
    sign = (-1)^(number of occupied orbitals below i).
    """
    idx = np.arange(1 << n_orbitals, dtype=np.uint64)
    src = idx[(idx >> np.uint64(i)) & np.uint64(1) == 0]
    dst = src | np.uint64(1 << i)
    below = src & np.uint64((1 << i) - 1)
    sign = np.where(np.bitwise_count(below) % 2 == 0, 1.0, -1.0)
    return src.astype(np.int64), dst.astype(np.int64), sign


def apply_creator(i: int, v: FockVector) -> FockVector:
    if not 0 <= i < v.n_orbitals:
        raise IndexError(f"orbital index {i} out of range for N={v.n_orbitals}")
    src, dst, sign = _ladder_tables(v.n_orbitals, i)
    out = zero_vector(v.n_orbitals)
    out.amps[dst] = sign * v.amps[src]
    return out


def apply_annihilator(i: int, v: FockVector) -> FockVector:
    if not 0 <= i < v.n_orbitals:
        raise IndexError(f"orbital index {i} out of range for N={v.n_orbitals}")
    src, dst, sign = _ladder_tables(v.n_orbitals, i)
    out = zero_vector(v.n_orbitals)
    out.amps[src] = sign * v.amps[dst]
    return out


@lru_cache(maxsize=64)
def _sector_tables(n_orbitals: int):
    """Per particle number k: (subset index array (count,k), basis indices)."""
    tables = []
    for k in range(n_orbitals + 1):
        subsets = list(itertools.combinations(range(n_orbitals), k))
        sel = np.array(subsets, dtype=np.int64).reshape(len(subsets), k)
        bits = np.array([sum(1 << o for o in s) for s in subsets], dtype=np.int64)
        tables.append((sel, bits))
    return tables


def sector_indices(n_orbitals: int, n_alpha: int, n_beta: int) -> np.ndarray:
    """Basis indices of the (n_alpha, n_beta) sector, ascending."""
    half = n_orbitals // 2
    alpha_sel, alpha_bits = _sector_tables(half)[n_alpha]
    beta_sel, beta_bits = _sector_tables(half)[n_beta]
    grid = alpha_bits[None, :] | (beta_bits[:, None] << half)
    return np.sort(grid.ravel())


def _minor_determinants(m: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """dets of m[rows[j], cols[i]] for all j, i; chunked to bound memory."""
    n_j, k = rows.shape
    n_i = cols.shape[0]
    if k == 0:
        return np.ones((n_j, n_i))
    out = np.empty((n_j, n_i))
    chunk = max(1, int(2e7 / max(1, n_i * k * k)))
    for start in range(0, n_j, chunk):
        stop = min(start + chunk, n_j)
        blocks = m[rows[start:stop, None, :, None], cols[None, :, None, :]]
        out[start:stop] = np.linalg.det(blocks)
    return out


def apply_exterior_transform(m: LinearOrbitalMap, v: FockVector) -> FockVector:
    """Apply U(m): each k-form is pushed through m on every tensor slot.

    Output amplitudes are sums of minor determinants times input amplitudes;
    generally unnormalized when m is not an isometry. The vacuum maps to the
    vacuum (empty minor has determinant 1).
    """
    m = np.asarray(m, dtype=float)
    n_out, n_in = m.shape
    if v.n_orbitals != n_in:
        raise ValueError(f"map has {n_in} columns but vector has {v.n_orbitals} orbitals")
    in_tables = _sector_tables(n_in)
    out_tables = _sector_tables(n_out)
    out = zero_vector(n_out)
    for k in range(min(n_in, n_out) + 1):
        in_sel, in_bits = in_tables[k]
        amps = v.amps[in_bits]
        if not np.any(amps):
            continue
        out_sel, out_bits = out_tables[k]
        dets = _minor_determinants(m, out_sel, in_sel)
        out.amps[out_bits] += dets @ amps
    return out


def transition_element(bra: FockVector, i: int, m: LinearOrbitalMap,
                       q: int, ket: FockVector) -> float:
    """<bra| a_i^dag U(m) a_q |ket>."""
    moved = apply_creator(i, apply_exterior_transform(m, apply_annihilator(q, ket)))
    return inner(bra, moved)


def transition_matrix(bra: FockVector, m: LinearOrbitalMap, ket: FockVector) -> np.ndarray:
    """All <bra| a_l^dag U(m) a_q |ket> at once, shape (N_bra, N_ket).

    Uses <bra| a_l^dag X = <a_l bra| X, so only N_ket exterior transforms
    are needed.
    """
    m = np.asarray(m, dtype=float)
    n_out, n_in = m.shape
    bra_rows = np.stack([apply_annihilator(l, bra).amps for l in range(bra.n_orbitals)])
    ket_cols = np.stack([
        apply_exterior_transform(m, apply_annihilator(q, ket)).amps
        for q in range(ket.n_orbitals)
    ])
    return bra_rows @ ket_cols.T
