"""Orbital-optimized excited-state solvers (state-specific and state-averaged
deflation) on exact statevectors, with a sparse FCI reference solver."""

__version__ = "0.1.0"
