"""Run the bound checks and the scalar LQR-versus-goal study, writing CSVs under OUT.

    python3 scripts/theory_checks.py [OUT]
"""

import sys
from pathlib import Path

from goalctl.cli import main


def run(out):
    out = Path(out)
    steps = [
        ["verify-thm1", "--seeds", "0..99", "--out", str(out / "thm1")],
        ["verify-cor2", "--seeds", "0..99", "--out", str(out / "cor2")],
        ["corollary1-study", "--seeds", "0", "--out", str(out / "corollary1")],
        ["filter-demo", "--seeds", "0..4", "--particles", "10000", "--out", str(out / "filter")],
    ]
    for argv in steps:
        print("$ goalctl", " ".join(argv), flush=True)
        code = main(argv)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "runs/theory"))
