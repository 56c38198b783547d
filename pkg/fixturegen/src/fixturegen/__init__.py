"""Molecular FCIDUMP fixture generator (self-contained RHF integral engine)."""

from .basis import BasisUnavailableError
from .generate import FIXTURES, MoleculeSpec, generate, write_fcidump
from .scf import ScfConvergenceError

__all__ = [
    "FIXTURES",
    "MoleculeSpec",
    "generate",
    "write_fcidump",
    "BasisUnavailableError",
    "ScfConvergenceError",
]
