"""Classical versus goal-oriented objectives and Monte-Carlo checks of their ordering."""

from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import logsumexp

from goalctl.errors import DensityUnavailable


def discount_weights(gamma, horizon):
    """Normalised discount weights ``gamma^t (1-gamma)/(1-gamma^(T+1))`` for t = 0..T."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly inside (0, 1)")
    t = np.arange(horizon + 1)
    return gamma**t * (1.0 - gamma) / (1.0 - gamma ** (horizon + 1))


def jensen_sides(weights, log_densities):
    """``(sum w log p, log sum w p)`` along the last axis, computed in log space."""
    weights = np.asarray(weights, dtype=float)
    logp = np.asarray(log_densities, dtype=float)
    lhs = np.sum(weights * logp, axis=-1)
    rhs = logsumexp(logp, b=weights, axis=-1)
    return lhs, rhs


def score_trajectory(traj, hold_last=False):
    """Both objectives for one trajectory with goal at the origin.

    classical = exp(-0.5 sum_t gamma^t |x_t|^2),  goal = sum_t gamma^t exp(-0.5 |x_t|^2).
    With ``hold_last`` the final state is assumed to persist forever (geometric tail).
    """
    x = np.asarray(traj.states, dtype=float)
    gamma = traj.gamma
    sq = np.sum(x * x, axis=-1)
    disc = gamma ** np.arange(len(sq))
    if hold_last and len(sq):
        disc[-1] = disc[-1] / (1.0 - gamma)
    classical = float(np.exp(-0.5 * np.sum(disc * sq)))
    goal = float(np.sum(disc * np.exp(-0.5 * sq)))
    return classical, goal


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    n: int
    horizon: int
    gamma: float
    tail: float
    r_max: float
    holds: bool
    gap: float

    FIELDS = ("lhs", "rhs", "lhs_se", "rhs_se", "n", "horizon", "gamma", "tail", "r_max", "holds", "gap")

    def row(self):
        d = asdict(self)
        return [d[k] for k in self.FIELDS]

    def __str__(self):
        verdict = "holds" if self.holds else "VIOLATED"
        return (f"lhs={self.lhs:.6g} (se {self.lhs_se:.2g})  rhs={self.rhs:.6g} (se {self.rhs_se:.2g})  "
                f"gap={self.gap:.3g}  N={self.n} T={self.horizon} gamma={self.gamma} "
                f"tail<={self.tail:.2g} r_max={self.r_max:.4g}: {verdict}")


@dataclass
class LinearPolicy:
    """``u = offset - K x``."""

    K: np.ndarray
    offset: np.ndarray = None

    def __post_init__(self):
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if self.offset is None:
            self.offset = np.zeros(self.K.shape[0])
        self.offset = np.asarray(self.offset, dtype=float)

    def __call__(self, x):
        return self.offset - x @ self.K.T


def rollout(policy, model, n, horizon, rng, deterministic=False, x0=None):
    """``n`` rollouts of ``horizon + 1`` steps: states x_0..x_{T+1}, actions u_0..u_T."""
    x = model.sample_states(rng, n) if x0 is None else np.tile(np.asarray(x0, float), (n, 1))
    states, actions = [x], []
    for _ in range(horizon + 1):
        u = model.clip_action(policy(x))
        x = model.mean_step(x, u) if deterministic else model.transition(x, u, None, rng)
        actions.append(u)
        states.append(x)
    return np.stack(states, axis=1), np.stack(actions, axis=1)


def _mean_se(values):
    n = len(values)
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(values)), se


def _report(per_lhs, per_rhs_terms, gamma, horizon, r_max):
    """Aggregate per-trajectory left sides and right-side sums into a report."""
    lhs, lhs_se = _mean_se(per_lhs)
    mean_c, c_se = _mean_se(per_rhs_terms)
    rhs = float(np.log(mean_c))
    rhs_se = c_se / mean_c
    tail = r_max * gamma ** (horizon + 1) / (1.0 - gamma)
    tol = 3.0 * np.hypot(lhs_se, rhs_se) + (1.0 - gamma) * tail
    return BoundReport(lhs, rhs, lhs_se, rhs_se, len(per_lhs), horizon, gamma, tail, r_max,
                       bool(lhs <= rhs + tol), rhs - lhs)


def goal_log_densities(model, xs, us, goal=None):
    """``log p(x_{t+1} = goal | x_t, u_t)`` along rollouts (time on axis 1)."""
    n_state = model.state_dim
    goal = np.zeros(n_state) if goal is None else goal
    psi = np.ones(xs.shape[:-1] + (2,))
    return model.transition_logpdf(xs, us, psi, goal)


def verify_prob_bound(policy, model, gamma, n, horizon, rng, deterministic=False, x0=None):
    """Monte-Carlo check of the log-probability bound.

    Both sides use the normalised weights of :func:`discount_weights`, which tend to
    ``(1-gamma) gamma^t`` as the truncation grows.
    """
    if not hasattr(model, "density_bound"):
        raise DensityUnavailable(f"{model.kind} has no transition density")
    lam = discount_weights(gamma, horizon)
    xs, us = rollout(policy, model, n, horizon, rng, deterministic, x0)
    logp = goal_log_densities(model, xs[:, :-1], us)
    per_lhs = np.sum(lam * logp, axis=1)
    per_c = np.sum(lam * np.exp(logp), axis=1)
    return _report(per_lhs, per_c, gamma, horizon, model.density_bound())


def verify_lqr_bound(policy, model, M, R, gamma, n, horizon, rng, deterministic=False, x0=None):
    """Monte-Carlo check of the quadratic-versus-Gaussian-shaped bound."""
    M = np.atleast_2d(M)
    R = np.atleast_2d(R)
    lam = discount_weights(gamma, horizon)
    xs, us = rollout(policy, model, n, horizon, rng, deterministic, x0)
    xs = xs[:, :-1]
    qx = np.einsum("nti,ij,ntj->nt", xs, M, xs)
    qu = np.einsum("nti,ij,ntj->nt", us, R, us)
    per_lhs = -0.5 * np.sum(lam * (qx + qu), axis=1)
    per_c = np.sum(lam * np.exp(-0.5 * qx), axis=1)
    return _report(per_lhs, per_c, gamma, horizon, 1.0)


def discounted_returns(policy, model, gamma, n, horizon, rng, reward=None, x0=None):
    """Per-rollout ``sum_{t<T} gamma^t r_t``; ``reward(x, u, x_next)`` defaults to the
    goal density at the origin."""
    xs, us = rollout(policy, model, n, horizon - 1, rng, x0=x0)
    if reward is None:
        r = np.exp(goal_log_densities(model, xs[:, :-1], us))
    else:
        r = np.asarray(reward(xs[:, :-1], us, xs[:, 1:]), dtype=float)
    return np.sum(gamma ** np.arange(horizon) * r, axis=1)


def policy_eval_goal_objective(policy, model, gamma, n, horizon, rng, reward=None, x0=None, r_max=None):
    """Monte-Carlo estimate of the goal objective: ``(estimate, stderr, tail_bound)``."""
    returns = discounted_returns(policy, model, gamma, n, horizon, rng, reward, x0)
    est, se = _mean_se(returns)
    if r_max is None:
        r_max = model.density_bound() if reward is None else 0.0
    return est, se, r_max * gamma**horizon / (1.0 - gamma)
