"""CSV artifacts and run manifests.

Floats are written with ``repr`` so a CSV round-trips exactly and reruns with the
same seed are byte-identical.
"""

from dataclasses import dataclass, field, asdict
import csv
import json
import os
from pathlib import Path

OUT_ENV = "GOALCTL_OUT"


def output_root():
    return Path(os.environ.get(OUT_ENV, "runs"))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item"):
        return _fmt(value.item())
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """``(header, rows)`` with cells left as strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = [row for row in reader if row]
    return header, rows


def columns(header, rows, names, cast=float):
    idx = [header.index(n) for n in names]
    return {n: [cast(r[i]) for r in rows] for n, i in zip(names, idx)}


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seeds: list
    version: str
    files: list = field(default_factory=list)
    wall_clock: float = 0.0

    def add(self, path, root):
        rel = Path(path).relative_to(root).as_posix()
        if rel not in self.files:
            self.files.append(rel)

    def write(self, root):
        path = Path(root) / "manifest.json"
        data = asdict(self)
        data["files"] = sorted(self.files)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))
