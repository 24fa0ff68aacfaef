"""Text checkpoints for :class:`MLP` parameters.

Format (version 1)::

    # goalctl-checkpoint v1
    # {"sizes": [8, 64, 64, 1], "meta": {...}}
    name,rows,cols,values...
    W0,8,64,<row-major floats>

Floats are written with ``repr`` so a save/load round trip is bit exact.
"""

import json

import numpy as np

from goalctl.nnopt.mlp import MLP

MAGIC = "# goalctl-checkpoint v1"


def save(path, net, meta=None):
    lines = [MAGIC, "# " + json.dumps({"sizes": list(net.sizes), "meta": meta or {}}, sort_keys=True),
             "name,rows,cols,values"]
    for i, layer in enumerate(net.params):
        for key in ("W", "b"):
            arr = np.atleast_2d(layer[key]) if key == "W" else layer[key].reshape(1, -1)
            vals = ",".join(repr(float(v)) for v in arr.ravel())
            lines.append(f"{key}{i},{arr.shape[0]},{arr.shape[1]},{vals}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path):
    """Return ``(net, meta)``."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path}: not a goalctl checkpoint (v1)")
    header = json.loads(lines[1][2:])
    sizes = tuple(header["sizes"])
    net = MLP.zeros(sizes)
    for line in lines[3:]:
        name, rows, cols, *vals = line.split(",")
        arr = np.array([float(v) for v in vals]).reshape(int(rows), int(cols))
        idx = int(name[1:])
        net.params[idx][name[0]] = arr if name[0] == "W" else arr.ravel()
    net.check()
    return net, header.get("meta", {})
