#!/usr/bin/env python3
"""Run the full experiment set (FCI reference, state-specific, state-averaged)
for every shipped config and drop results under runs/.

Usage: python scripts/run_paper_experiments.py [config names ...]
Defaults to h2, h4, lih, lih_five_states. Expect the cc-pVDZ molecules to
take tens of minutes each.
"""

import sys
from pathlib import Path

from oovqd.cli import main as oovqd_main

ROOT = Path(__file__).resolve().parent.parent
DEFAULT = ["h2", "h4", "lih", "lih_five_states"]


def run(name: str) -> None:
    config = ROOT / "configs" / f"{name}.yaml"
    if not config.exists():
        raise SystemExit(f"no such config: {config}")
    for sub in ("fci", "ssvqd", "savqd"):
        out = ROOT / "runs" / name / sub
        print(f"=== {name} :: {sub} -> {out}")
        code = oovqd_main([sub, "--config", str(config), "--output", str(out)])
        if code != 0:
            print(f"    exited with code {code}")


if __name__ == "__main__":
    for name in sys.argv[1:] or DEFAULT:
        run(name)
