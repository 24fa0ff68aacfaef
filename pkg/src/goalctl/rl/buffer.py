"""Fixed-capacity FIFO replay of belief transitions."""

from dataclasses import dataclass

import numpy as np


@dataclass
class BeliefTransition:
    states: np.ndarray
    weights: np.ndarray
    action: np.ndarray
    reward: float
    next_states: np.ndarray
    next_weights: np.ndarray
    next_obs: np.ndarray
    done: bool

    def __post_init__(self):
        if len(self.states) != len(self.next_states):
            raise ValueError("particle counts differ between b and b'")


class ReplayBuffer:
    """Ring buffer; once full, the oldest transition is overwritten first."""

    def __init__(self, capacity, particles, state_dim, action_dim):
        self.capacity = int(capacity)
        self.particles = int(particles)
        self.states = np.zeros((capacity, particles, state_dim))
        self.weights = np.zeros((capacity, particles))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, particles, state_dim))
        self.next_weights = np.zeros((capacity, particles))
        self.dones = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, tr):
        if len(tr.states) != self.particles:
            raise ValueError(f"buffer stores {self.particles} particles, got {len(tr.states)}")
        i = self.ptr
        self.states[i] = tr.states
        self.weights[i] = tr.weights
        self.actions[i] = tr.action
        self.rewards[i] = tr.reward
        self.next_states[i] = tr.next_states
        self.next_weights[i] = tr.next_weights
        self.dones[i] = float(tr.done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, idx):
        """Arrays for the given slots (slot order, not insertion order)."""
        return dict(states=self.states[idx], weights=self.weights[idx], actions=self.actions[idx],
                    rewards=self.rewards[idx], next_states=self.next_states[idx],
                    next_weights=self.next_weights[idx], dones=self.dones[idx])

    def oldest_first(self):
        start = self.ptr if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def sample(self, batch_size, rng):
        return self.get(rng.integers(0, self.size, size=batch_size))
