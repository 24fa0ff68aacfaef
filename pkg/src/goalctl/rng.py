"""Named random sub-streams derived from one master seed."""

import zlib

import numpy as np

STREAMS = ("env", "filter", "net-init", "exploration", "eval", "analysis")


def stream(seed, name):
    """Independent generator for ``name`` under master ``seed``.

    The stream key is a CRC of the name, so adding streams never shifts existing ones.
    """
    key = zlib.crc32(name.encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))


def streams(seed, names=STREAMS):
    return {name: stream(seed, name) for name in names}


def parse_seeds(text):
    """Parse ``"0..4"``, ``"3"`` or ``"1,5,7"`` (ranges inclusive)."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds
