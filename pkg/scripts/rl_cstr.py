"""Six-agent reactor study: train, evaluate, and draw the time-near-goal and trace figures.

    python3 scripts/rl_cstr.py [CONFIG] [OUT]

The default config is the desk-scale one in configs/rl_desk.toml.
"""

import sys
from pathlib import Path

from goalctl import config
from goalctl.cli import main
from goalctl.plotting import plot
from goalctl.rl.train import agent_name


def run(cfg_path, out):
    out = Path(out)
    code = main(["rl-train", "--config", str(cfg_path), "--out", str(out)])
    if code:
        return code
    cfg = config.load(cfg_path)
    plot("time-near-goal", [out / "eval.csv"], out / "time_near_goal.svg")
    seed = cfg.run.seeds[0]
    for regime, kind in cfg.rl.agents:
        name = agent_name(regime, kind)
        traces = sorted(out.glob(f"trace_{name}_seed{seed}_p*.csv"))
        plot("cstr-trace", traces, out / f"trace_{name}.svg", [t.stem.rsplit("_", 1)[-1] for t in traces])
    return 0


if __name__ == "__main__":
    args = sys.argv[1:]
    sys.exit(run(args[0] if args else "configs/rl_desk.toml", args[1] if len(args) > 1 else "runs/rl"))
