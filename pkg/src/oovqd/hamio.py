"""FCIDUMP ingestion: molecular integrals with their index symmetries.

Two-electron integrals are stored in chemist (ij|kl) convention exactly as
they appear on disk; consumers convert to physicist ordering where needed.
Spin-orbital indexing downstream is alpha block first, then beta block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class FcidumpError(ValueError):
    """Base class for FCIDUMP ingestion failures."""


class FcidumpParseError(FcidumpError):
    """Malformed header or body line."""


class FcidumpRangeError(FcidumpError):
    """Orbital index outside [1, NORB]."""


class FcidumpConsistencyError(FcidumpError):
    """Duplicate entries that disagree beyond tolerance."""


@dataclass(frozen=True)
class MolecularIntegrals:
    """One-/two-electron integrals (Hartree) plus the scalar core shift.

    h is symmetric; v carries the full 8-fold (ij|kl) permutation symmetry.
    """

    m_spatial: int
    n_electrons: int
    ms2: int
    h: np.ndarray
    v: np.ndarray
    e_core: float

    def __post_init__(self):
        m = self.m_spatial
        if self.h.shape != (m, m) or self.v.shape != (m, m, m, m):
            raise ValueError("integral array shapes inconsistent with m_spatial")

    def validate_symmetries(self, tol: float = 1e-12) -> None:
        if not np.allclose(self.h, self.h.T, atol=tol):
            raise FcidumpConsistencyError("one-electron integrals not symmetric")
        v = self.v
        for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
            if not np.allclose(v, v.transpose(perm), atol=tol):
                raise FcidumpConsistencyError(f"two-electron integrals break {perm} symmetry")


def spin_orbital_count(ints: MolecularIntegrals) -> int:
    """Total spin-orbital count: alpha indices [0, M/2), beta [M/2, M)."""
    return 2 * ints.m_spatial


_EIGHTFOLD = [
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
]


def parse_fcidump(text: str) -> MolecularIntegrals:
    """Parse FCIDUMP text into fully symmetrized integrals.

    Header is the &FCI namelist up to &END or /; body lines are
    "value i j k l" with 1-based indices. i=j=k=l=0 carries the core
    energy, k=l=0 a one-electron entry, anything else a two-electron entry
    whose 8 permutation images are all populated.
    """
    lines = text.splitlines()
    header_lines = []
    body_start = None
    for n, line in enumerate(lines):
        header_lines.append(line)
        if "&END" in line.upper() or line.strip() == "/" or line.strip().endswith("/"):
            body_start = n + 1
            break
    if body_start is None:
        raise FcidumpParseError("no &END (or /) terminating the namelist header")
    header = " ".join(header_lines)

    def header_int(key: str) -> int:
        match = re.search(rf"{key}\s*=\s*(-?\d+)", header, re.IGNORECASE)
        if match is None:
            raise FcidumpParseError(f"header is missing {key}")
        return int(match.group(1))

    norb = header_int("NORB")
    nelec = header_int("NELEC")
    ms2 = header_int("MS2")
    if norb <= 0:
        raise FcidumpParseError(f"NORB must be positive, got {norb}")

    h = np.zeros((norb, norb))
    v = np.zeros((norb, norb, norb, norb))
    h_seen = np.zeros((norb, norb), dtype=bool)
    v_seen = np.zeros((norb, norb, norb, norb), dtype=bool)
    e_core = 0.0
    core_seen = False

    for n in range(body_start, len(lines)):
        line = lines[n].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpParseError(f"line {n + 1}: expected 'value i j k l', got {line!r}")
        try:
            val = float(parts[0])
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpParseError(f"line {n + 1}: {exc}") from exc
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FcidumpRangeError(f"line {n + 1}: index {idx} exceeds NORB={norb}")
        if i == j == k == l == 0:
            if core_seen and abs(val - e_core) > 1e-12:
                raise FcidumpConsistencyError(f"line {n + 1}: conflicting core energies")
            e_core = val
            core_seen = True
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpParseError(f"line {n + 1}: one-electron entry with zero index")
            a, b = i - 1, j - 1
            if h_seen[a, b] and abs(h[a, b] - val) > 1e-12:
                raise FcidumpConsistencyError(
                    f"line {n + 1}: h[{i},{j}] conflicts with earlier value by "
                    f"{abs(h[a, b] - val):.2e}")
            h[a, b] = h[b, a] = val
            h_seen[a, b] = h_seen[b, a] = True
        elif 0 in (i, j, k, l):
            raise FcidumpParseError(f"line {n + 1}: mixed zero/nonzero indices")
        else:
            idx = (i - 1, j - 1, k - 1, l - 1)
            if v_seen[idx] and abs(v[idx] - val) > 1e-12:
                raise FcidumpConsistencyError(
                    f"line {n + 1}: v[{i},{j},{k},{l}] conflicts with earlier value by "
                    f"{abs(v[idx] - val):.2e}")
            for perm in _EIGHTFOLD:
                image = tuple(idx[p] for p in perm)
                v[image] = val
                v_seen[image] = True

    ints = MolecularIntegrals(
        m_spatial=norb, n_electrons=nelec, ms2=ms2, h=h, v=v, e_core=e_core)
    ints.validate_symmetries()
    return ints


def load_fcidump(path: str | Path) -> MolecularIntegrals:
    return parse_fcidump(Path(path).read_text())


def write_fcidump(ints: MolecularIntegrals, path: str | Path, tol: float = 0.0) -> None:
    """Serialize back to FCIDUMP with one entry per 8-fold-unique index."""
    m = ints.m_spatial
    with open(path, "w") as f:
        f.write(f" &FCI NORB={m},NELEC={ints.n_electrons},MS2={ints.ms2},\n")
        f.write("  ORBSYM=" + "1," * m + "\n")
        f.write("  ISYM=1,\n")
        f.write(" &END\n")
        for i in range(m):
            for j in range(i + 1):
                ij = i * (i + 1) // 2 + j
                for k in range(i + 1):
                    for l in range(k + 1):
                        if ij < k * (k + 1) // 2 + l:
                            continue
                        val = ints.v[i, j, k, l]
                        if abs(val) > tol:
                            f.write(f"{val:23.16e} {i+1:3d} {j+1:3d} {k+1:3d} {l+1:3d}\n")
        for i in range(m):
            for j in range(i + 1):
                val = ints.h[i, j]
                if abs(val) > tol:
                    f.write(f"{val:23.16e} {i+1:3d} {j+1:3d}   0   0\n")
        f.write(f"{ints.e_core:23.16e}   0   0   0   0\n")
