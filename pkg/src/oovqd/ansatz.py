"""UCCSD-style state preparation applied exactly on Fock-space vectors.

Each excitation generator K = G - G^T satisfies K^3 = -K on the occupation
basis, so every product factor exp(t K) is evaluated in closed form as
1 + sin(t) K + (1 - cos t) K^2; the circuit is the ordered product of these
factors. Amplitudes stay real and the particle-number sector is preserved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fockspace import FockVector


@dataclass(frozen=True, order=True)
class ExcitationOp:
    """Spin-conserving single or double excitation (spin-orbital indices)."""

    kind: str                 # "single" | "double"
    occupied: tuple[int, ...]
    virtual: tuple[int, ...]

    def __post_init__(self):
        n = {"single": 1, "double": 2}[self.kind]
        if len(self.occupied) != n or len(self.virtual) != n:
            raise ValueError(f"{self.kind} excitation needs {n} occupied and virtual indices")
        if len(set(self.occupied) | set(self.virtual)) != 2 * n:
            raise ValueError("excitation indices must be distinct")


@dataclass
class AnsatzCircuit:
    """Ordered excitation list repeated `reps` times, one angle per factor."""

    n_orbitals: int
    ops: list[ExcitationOp]
    reps: int
    _tables: dict = field(default_factory=dict, repr=False)

    @property
    def n_params(self) -> int:
        return self.reps * len(self.ops)

    @property
    def factors(self) -> list[ExcitationOp]:
        return list(self.ops) * self.reps


def build_uccsd(n_orbitals: int, n_alpha: int, n_beta: int, reps: int) -> AnsatzCircuit:
    """All spin-conserving singles and doubles out of the HF determinant.

    Singles stay within one spin block; doubles conserve both n_alpha and
    n_beta (alpha-alpha, beta-beta and mixed). Ops are sorted for a
    deterministic parameter order, singles first.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    half = n_orbitals // 2
    occ_a = list(range(n_alpha))
    vir_a = list(range(n_alpha, half))
    occ_b = [half + i for i in range(n_beta)]
    vir_b = [half + i for i in range(n_beta, half)]
    if (occ_a and not vir_a) or (occ_b and not vir_b):
        raise ValueError("no virtual orbitals available for excitations")

    singles = [ExcitationOp("single", (o,), (v,))
               for occ, vir in ((occ_a, vir_a), (occ_b, vir_b))
               for o in occ for v in vir]
    doubles = []
    for occ, vir in ((occ_a, vir_a), (occ_b, vir_b)):
        for o1, o2 in itertools.combinations(occ, 2):
            for v1, v2 in itertools.combinations(vir, 2):
                doubles.append(ExcitationOp("double", (o1, o2), (v1, v2)))
    for oa in occ_a:
        for ob in occ_b:
            for va in vir_a:
                for vb in vir_b:
                    doubles.append(ExcitationOp("double", (oa, ob), (va, vb)))
    ops = sorted(singles) + sorted(doubles)
    return AnsatzCircuit(n_orbitals=n_orbitals, ops=ops, reps=reps)


def _excitation_table(circuit: AnsatzCircuit, op: ExcitationOp):
    """(src, dst, sign) arrays for G = prod a_v^dag prod a_o on basis states."""
    if op not in circuit._tables:
        n = circuit.n_orbitals
        occ_mask = sum(1 << o for o in op.occupied)
        vir_mask = sum(1 << v for v in op.virtual)
        idx = np.arange(1 << n, dtype=np.int64)
        valid = (idx & occ_mask) == occ_mask
        valid &= (idx & vir_mask) == 0
        src = idx[valid]
        signs = np.ones(len(src))
        cur = src.copy()
        # apply annihilators right-to-left, then creators right-to-left
        for o in reversed(op.occupied):
            below = cur & ((1 << o) - 1)
            signs *= np.where(np.bitwise_count(below.astype(np.uint64)) % 2 == 0, 1.0, -1.0)
            cur = cur & ~(1 << o)
        for v in reversed(op.virtual):
            below = cur & ((1 << v) - 1)
            signs *= np.where(np.bitwise_count(below.astype(np.uint64)) % 2 == 0, 1.0, -1.0)
            cur = cur | (1 << v)
        circuit._tables[op] = (src, cur, signs)
    return circuit._tables[op]


def _apply_generator(table, amps: np.ndarray) -> np.ndarray:
    """K x with K = G - G^T."""
    src, dst, sign = table
    out = np.zeros_like(amps)
    out[dst] += sign * amps[src]
    out[src] -= sign * amps[dst]
    return out


def apply_ansatz(circuit: AnsatzCircuit, theta: np.ndarray, ref: FockVector) -> FockVector:
    """Apply the factor product to the reference, first factor first."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {theta.shape}")
    if ref.n_orbitals != circuit.n_orbitals:
        raise ValueError("reference state size does not match the circuit")
    amps = ref.amps.copy()
    for t, op in zip(theta, circuit.factors):
        if t == 0.0:
            continue
        table = _excitation_table(circuit, op)
        k1 = _apply_generator(table, amps)
        k2 = _apply_generator(table, k1)
        amps = amps + np.sin(t) * k1 + (1.0 - np.cos(t)) * k2
    return FockVector(circuit.n_orbitals, amps)
