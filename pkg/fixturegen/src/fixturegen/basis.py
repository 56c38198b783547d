"""Gaussian basis set data for the shipped molecular fixtures.

Only the element/basis combinations needed by the fixture set are included.
Exponents and contraction coefficients follow the standard published values;
contraction coefficients refer to normalized Cartesian primitives.
"""

from __future__ import annotations

# shell: (angular momentum l, [(exponent, coefficient), ...])
_BASIS_SETS: dict[str, dict[str, list[tuple[int, list[tuple[float, float]]]]]] = {
    "6-31g": {
        "H": [
            (0, [(18.7311370, 0.03349460),
                 (2.8253937, 0.23472695),
                 (0.6401217, 0.81375733)]),
            (0, [(0.1612778, 1.0)]),
        ],
    },
    "cc-pvdz": {
        "H": [
            (0, [(13.0100000, 0.0196850),
                 (1.9620000, 0.1379770),
                 (0.4446000, 0.4781480),
                 (0.1220000, 0.5012400)]),
            (0, [(0.1220000, 1.0)]),
            (1, [(0.7270000, 1.0)]),
        ],
        "Li": [
            (0, [(1469.0000000, 0.0007660),
                 (220.5000000, 0.0058920),
                 (50.2600000, 0.0296710),
                 (14.2400000, 0.1091800),
                 (4.5810000, 0.2827890),
                 (1.5800000, 0.4531230),
                 (0.5640000, 0.2747740),
                 (0.0734500, 0.0097510)]),
            (0, [(1469.0000000, -0.0001200),
                 (220.5000000, -0.0009230),
                 (50.2600000, -0.0046890),
                 (14.2400000, -0.0176820),
                 (4.5810000, -0.0489020),
                 (1.5800000, -0.0960090),
                 (0.5640000, -0.1363800),
                 (0.0734500, 0.5751020)]),
            (0, [(0.0280500, 1.0)]),
            (1, [(1.5340000, 0.0227840),
                 (0.2749000, 0.1391070),
                 (0.0736200, 0.5003750)]),
            (1, [(0.0240300, 1.0)]),
            (2, [(0.1239000, 1.0)]),
        ],
    },
}

NUCLEAR_CHARGE = {"H": 1, "Li": 3}


class BasisUnavailableError(ValueError):
    """Requested element/basis combination is not in the local registry."""


def shells_for(element: str, basis: str) -> list[tuple[int, list[tuple[float, float]]]]:
    """Return the shell list (l, primitives) for one element in a basis set."""
    key = basis.lower()
    if key not in _BASIS_SETS:
        raise BasisUnavailableError(f"basis set {basis!r} not available")
    table = _BASIS_SETS[key]
    if element not in table:
        raise BasisUnavailableError(f"element {element!r} not available in basis {basis!r}")
    return table[element]
