"""Swing-up study on the double pendulum: goal/classical objective x SOAP/Adam, five seeds
each, then one learning-curve and one profile figure per cell.

    python3 scripts/dpc_pendulum.py [OUT] [ITERATIONS]

Roughly 25 s per seed at 2000 iterations on one core.
"""

import sys
from pathlib import Path

from goalctl.cli import main
from goalctl.plotting import plot

CELLS = [("goal", "soap"), ("goal", "adam"), ("classical", "soap"), ("classical", "adam")]
SEEDS = range(5)


def run(out, iterations=2000):
    out = Path(out)
    for objective, optimizer in CELLS:
        cell = out / f"{objective}_{optimizer}"
        code = main(["dpc", "--objective", objective, "--optimizer", optimizer,
                     "--iterations", str(iterations), "--seeds", f"0..{len(SEEDS) - 1}", "--out", str(cell)])
        if code:
            return code
        tags = [f"{objective}_{optimizer}_seed{s}" for s in SEEDS]
        labels = [f"seed {s}" for s in SEEDS]
        plot("learning-curve", [cell / f"curve_{t}.csv" for t in tags], cell / "curves.svg", labels)
        plot("dip-profile", [cell / f"rollout_{t}.csv" for t in tags], cell / "profiles.svg", labels)
    return 0


if __name__ == "__main__":
    args = sys.argv[1:]
    sys.exit(run(args[0] if args else "runs/dpc", int(args[1]) if len(args) > 1 else 2000))
