"""Time-indexed rollout record consumed by the objective evaluators."""

from dataclasses import dataclass

import numpy as np


@dataclass
class Trajectory:
    states: np.ndarray
    actions: np.ndarray = None
    observations: np.ndarray = None
    rewards: np.ndarray = None
    gamma: float = 0.99

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        for name in ("actions", "observations", "rewards"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, np.asarray(val, dtype=float))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie strictly inside (0, 1)")

    def __len__(self):
        return len(self.states)
