"""Stage rewards compared throughout the package.

Every variant is maximised; the quadratic variant is stored as a negative cost.
"""

from dataclasses import dataclass

import numpy as np

from goalctl import belief as bf

QUADRATIC = "quadratic"
GAUSSIAN = "gaussian"
GOAL_DENSITY = "goal_density"
INDICATOR = "indicator"
MEASUREMENT = "measurement_conditioned"
VARIANTS = (QUADRATIC, GAUSSIAN, GOAL_DENSITY, INDICATOR, MEASUREMENT)


def _spd(mat, name):
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if not np.allclose(mat, mat.T) or np.linalg.eigvalsh(mat).min() <= 0:
        raise ValueError(f"{name} must be symmetric positive definite")
    return mat


@dataclass(frozen=True, eq=False)
class RewardSpec:
    """Reward variant plus parameters.

    ``dims`` restricts the goal residual to a subset of state coordinates (``None``
    means all); ``goal`` is always a full state vector.
    """

    variant: str
    goal: np.ndarray
    M: np.ndarray = None
    R: np.ndarray = None
    epsilon: float = None
    dims: tuple = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown reward variant {self.variant!r}")
        object.__setattr__(self, "goal", np.atleast_1d(np.asarray(self.goal, dtype=float)))
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.variant in (QUADRATIC, GAUSSIAN):
            object.__setattr__(self, "M", _spd(self.M, "M"))
        if self.variant == QUADRATIC and self.R is not None:
            R = np.atleast_2d(np.asarray(self.R, dtype=float))
            if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() < 0:
                raise ValueError("R must be symmetric positive semidefinite")
            object.__setattr__(self, "R", R)
        if self.variant in (INDICATOR, MEASUREMENT):
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError("epsilon must be positive")


def quadratic(M, goal, R=None, dims=None):
    return RewardSpec(QUADRATIC, goal, M=M, R=R, dims=dims)


def gaussian_shaped(M, goal, dims=None):
    return RewardSpec(GAUSSIAN, goal, M=M, dims=dims)


def goal_density(goal):
    return RewardSpec(GOAL_DENSITY, goal)


def indicator(epsilon, goal, dims=None):
    return RewardSpec(INDICATOR, goal, epsilon=epsilon, dims=dims)


def measurement_conditioned(epsilon, goal, dims):
    return RewardSpec(MEASUREMENT, goal, epsilon=epsilon, dims=dims)


def residual(spec, x, model=None):
    """Goal residual; for the pendulum this is ``1 - cos th`` on both links."""
    x = np.asarray(x, dtype=float)
    if model is not None and getattr(model, "kind", None) == "double_pendulum":
        return 1.0 - np.cos(x[..., :2])
    r = x - spec.goal
    return r if spec.dims is None else r[..., list(spec.dims)]


def _quad_form(M, r):
    return np.einsum("...i,ij,...j->...", r, M, r)


def stage_reward(spec, x, u, x_next=None, model=None):
    """Fully observed stage reward ``r(x, u)`` (batched over leading axes)."""
    if spec.variant == MEASUREMENT:
        raise ValueError("measurement-conditioned rewards need a belief; use measurement_conditioned_reward")
    if spec.variant == GOAL_DENSITY:
        psi = np.ones(np.shape(x)[:-1] + (2,))
        return np.exp(model.transition_logpdf(x, u, psi, spec.goal))
    r = residual(spec, x, model)
    if spec.variant == GAUSSIAN:
        return np.exp(-0.5 * _quad_form(spec.M, r))
    if spec.variant == INDICATOR:
        return (np.linalg.norm(r, axis=-1) < spec.epsilon).astype(float)
    cost = _quad_form(spec.M, r)
    if spec.R is not None and u is not None:
        cost = cost + _quad_form(spec.R, np.asarray(u, dtype=float))
    return -0.5 * cost


def histogram_density(spec, b):
    """Box-histogram estimate of the belief density at the goal on ``spec.dims``."""
    r = residual(spec, b.states)
    inside = np.all(np.abs(r) < spec.epsilon, axis=-1)
    mass = float(np.sum(b.weights * inside))
    return mass / (2.0 * spec.epsilon) ** r.shape[-1]


def belief_reward(spec, b, u=None, model=None):
    """Reward of a posterior belief: histogram density for the measurement-conditioned
    variant, otherwise the particle expectation of the stage reward."""
    if spec.variant == MEASUREMENT:
        return histogram_density(spec, b)
    return float(bf.expectation(b, lambda xs: stage_reward(spec, xs, u, model=model)))


def measurement_conditioned_reward(spec, b, u, y_next, model, rng, psi_jitter=0.0):
    """Estimate ``p(x' = goal | b, u, y')``: predict, update on ``y'``, then histogram."""
    if spec.variant != MEASUREMENT:
        raise ValueError("spec must be measurement-conditioned")
    posterior = bf.update(bf.predict(b, model, u, rng, psi_jitter), model, y_next)
    return histogram_density(spec, posterior)


def time_near_goal(states, sigma, goal=0.6, index=1):
    """``sum_t exp(-(goal - x_t[index])^2 / (2 sigma^2))`` over true states."""
    states = np.asarray(getattr(states, "states", states), dtype=float)
    if states.size == 0:
        return 0.0
    vals = states[:, index] if states.ndim == 2 else states
    return float(np.sum(np.exp(-((goal - vals) ** 2) / (2.0 * sigma**2))))
