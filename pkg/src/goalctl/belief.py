"""Particle approximation of the recursive Bayesian state estimator.

A :class:`ParticleBelief` is an immutable snapshot; every operation returns a new
belief. Scenario parameters ``psi`` ride along with each particle and are resampled
jointly with the states.
"""

from dataclasses import dataclass, field
import csv

import numpy as np
from scipy.special import logsumexp

from goalctl.errors import DegenerateWeights


@dataclass(frozen=True, eq=False)
class ParticleBelief:
    states: np.ndarray
    psi: np.ndarray
    weights: np.ndarray
    ess: float = field(init=False)

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if len(states) != len(w) or len(psi) != len(w):
            raise ValueError("states, psi and weights must have one row per particle")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to one")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ess", float(1.0 / np.sum(w * w)))

    @property
    def size(self):
        return len(self.weights)

    @classmethod
    def uniform(cls, states, psi):
        n = len(states)
        return cls(states, psi, np.full(n, 1.0 / n))


def init_from_prior(model, p, rng):
    if p < 1:
        raise ValueError("need at least one particle")
    states = model.sample_states(rng, p)
    psi = model.sample_psi(rng, p)
    return ParticleBelief.uniform(states, psi)


def predict(b, model, u, rng, psi_jitter=0.0):
    """Push every particle through the transition with its own ``psi``.

    ``psi_jitter`` adds Gaussian roughening to the scenario parameters (clipped to the
    prior support); it is zero unless the caller opts in.
    """
    states = model.transition(b.states, u, b.psi, rng)
    psi = b.psi
    if psi_jitter > 0 and hasattr(model, "psi_low"):
        psi = np.clip(psi + psi_jitter * rng.standard_normal(psi.shape), model.psi_low, model.psi_high)
    return ParticleBelief(states, psi, b.weights)


def update(b, model, y):
    """Reweight by the measurement likelihood, normalising in log space."""
    with np.errstate(divide="ignore"):
        logw = np.log(b.weights) + model.measurement_logpdf(b.states, y)
    if not np.any(np.isfinite(logw)) or np.any(np.isnan(logw)):
        raise DegenerateWeights("all particle likelihoods vanished")
    logw = logw - logsumexp(logw)
    w = np.exp(logw)
    return ParticleBelief(b.states, b.psi, w / w.sum())


def systematic_indices(weights, rng):
    p = len(weights)
    positions = (rng.random() + np.arange(p)) / p
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def resample(b, rng):
    idx = systematic_indices(b.weights, rng)
    return ParticleBelief.uniform(b.states[idx], b.psi[idx])


def needs_resample(b, threshold=0.5):
    return b.ess < threshold * b.size


def expectation(b, f=None):
    """``sum_i w_i f(x_i)``; ``f`` maps the (p, n) state array to (p, ...) values."""
    values = b.states if f is None else np.asarray(f(b.states), dtype=float)
    # centred on the first particle: exact when every particle agrees
    ref = values[0]
    return ref + np.tensordot(b.weights, values - ref, axes=(0, 0))


def to_rows(b):
    header = ["weight"] + [f"x{i}" for i in range(b.states.shape[1])] + ["alpha", "beta"]
    rows = [[w, *x, *psi] for w, x, psi in zip(b.weights, b.states, b.psi)]
    return header, rows


def write_csv(path, b):
    header, rows = to_rows(b)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([[repr(float(v)) for v in row] for row in rows])


def read_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    w = data[:, 0]
    return ParticleBelief(data[:, 1:-2], data[:, -2:], w / w.sum())
