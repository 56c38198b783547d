"""CLI: python -m fixturegen [--out DIR] [names ...]"""

import argparse
import sys

from .generate import FIXTURES, generate


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="generate molecular FCIDUMP fixtures")
    parser.add_argument("names", nargs="*", default=[],
                        help=f"molecules to generate (default: all of {sorted(FIXTURES)})")
    parser.add_argument("--out", default="fixtures", help="output directory")
    args = parser.parse_args(argv)

    names = args.names or sorted(FIXTURES)
    for name in names:
        if name not in FIXTURES:
            print(f"unknown molecule {name!r}; known: {sorted(FIXTURES)}", file=sys.stderr)
            return 2
        meta = generate(FIXTURES[name], args.out)
        print(f"{name}: norb={meta['n_orbitals']} "
              f"E_HF={meta['hf_total_energy']:.8f} "
              f"(electronic {meta['hf_electronic_energy']:.8f}, "
              f"nuclear {meta['nuclear_repulsion']:.8f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
