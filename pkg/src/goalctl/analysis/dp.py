"""Grid dynamic programming for scalar linear-Gaussian systems.

Both solvers use Gauss-Hermite quadrature for Gaussian expectations and linear
interpolation (clamped at the grid edges) for values off the grid.
"""

from dataclasses import dataclass

import numpy as np

from goalctl import reward as rw
from goalctl.errors import NonConvergence


def gauss_hermite(order):
    """Nodes and weights for ``E[f(Z)]``, ``Z ~ N(0, 1)``."""
    z, w = np.polynomial.hermite.hermgauss(order)
    return np.sqrt(2.0) * z, w / np.sqrt(np.pi)


def _normal_pdf(x, var):
    return np.exp(-0.5 * x * x / var) / np.sqrt(2.0 * np.pi * var)


def _scalar(model):
    if model.state_dim != 1 or model.action_dim != 1:
        raise ValueError("grid solvers need a scalar state and action")
    return float(model.A[0, 0]), float(model.B[0, 0]), float(model.Q[0, 0])


@dataclass
class GridSpec:
    half_width: float = 5.0
    n_states: int = 201
    action_half_width: float = None
    n_actions: int = 201
    gh_order: int = 16
    tol: float = 1e-8
    max_iter: int = 20000

    def states(self):
        return np.linspace(-self.half_width, self.half_width, self.n_states)

    def actions(self):
        half = self.half_width if self.action_half_width is None else self.action_half_width
        return np.linspace(-half, half, self.n_actions)


@dataclass
class GridSolution:
    states: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    greedy: np.ndarray
    sweeps: int

    def policy(self, x):
        """Greedy action at arbitrary states by interpolating the policy table."""
        x = np.asarray(x, dtype=float)
        return np.interp(x[..., 0], self.states, self.greedy)[..., None]

    def value(self, x):
        return np.interp(x, self.states, self.values)


def _iterate(backup, shape, tol, max_iter):
    values = np.zeros(shape)
    for sweep in range(1, max_iter + 1):
        q = backup(values)
        new = q.max(axis=-1)
        if np.max(np.abs(new - values)) <= tol:
            return new, q, sweep
        values = new
    raise NonConvergence(f"value iteration did not reach {tol} in {max_iter} sweeps")


def grid_value_iteration(model, spec, gamma, grid=None):
    """Fully observed value iteration on a state grid for ``x' = a x + b u + w``."""
    grid = grid or GridSpec()
    a, b, q = _scalar(model)
    xs, us = grid.states(), grid.actions()
    z, wz = gauss_hermite(grid.gh_order)
    means = a * xs[:, None] + b * us[None, :]
    if spec is None:
        reward = np.zeros_like(means)
    elif spec.variant == rw.GOAL_DENSITY:
        reward = _normal_pdf(means - spec.goal[0], q)
    else:
        X, U = np.meshgrid(xs, us, indexing="ij")
        reward = rw.stage_reward(spec, X[..., None], U[..., None], model=model)
    nxt = means[..., None] + np.sqrt(q) * z

    def backup(values):
        return reward + gamma * np.interp(nxt, xs, values) @ wz

    values, qtab, sweeps = _iterate(backup, len(xs), grid.tol, grid.max_iter)
    greedy = us[np.argmax(qtab, axis=-1)]
    return GridSolution(xs, us, values, greedy, sweeps)


@dataclass
class BeliefGridSpec:
    half_width: float = 5.0
    n_means: int = 101
    logvar_min: float = np.log(1e-4)
    logvar_max: float = np.log(25.0)
    n_logvars: int = 51
    action_half_width: float = None
    n_actions: int = 61
    gh_order: int = 16
    tol: float = 1e-8
    max_iter: int = 20000

    def means(self):
        return np.linspace(-self.half_width, self.half_width, self.n_means)

    def logvars(self):
        return np.linspace(self.logvar_min, self.logvar_max, self.n_logvars)

    def actions(self):
        half = self.half_width if self.action_half_width is None else self.action_half_width
        return np.linspace(-half, half, self.n_actions)


@dataclass
class BeliefGridSolution:
    means: np.ndarray
    logvars: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    sweeps: int


def belief_rewards(model, grid, placement):
    """Goal-density reward on the (mean, log-variance, action) grid.

    ``"prior"`` is ``E_{x~b} p(x' = 0 | x, u)`` in closed form; ``"observation"`` is
    the posterior density at the goal after the next measurement, averaged over that
    measurement by quadrature.
    """
    a, b, q = _scalar(model)
    c, rv = float(model.C[0, 0]), float(model.Rv[0, 0])
    m, lv, us = grid.means(), grid.logvars(), grid.actions()
    z, wz = gauss_hermite(grid.gh_order)
    p_pred = a * a * np.exp(lv) + q
    gain = p_pred * c / (c * c * p_pred + rv)
    p_post = (1.0 - gain * c) * p_pred
    spread = np.sqrt(np.maximum(p_pred - p_post, 0.0))
    m_pred = a * m[:, None, None] + b * us[None, None, :]
    if placement == "prior":
        return _normal_pdf(m_pred, p_pred[None, :, None]), p_post, spread
    if placement != "observation":
        raise ValueError(f"unknown reward placement {placement!r}")
    m_post = m_pred[..., None] + spread[None, :, None, None] * z
    r = _normal_pdf(m_post, p_post[None, :, None, None]) @ wz
    return r, p_post, spread


def belief_grid_value_iteration(model, gamma, grid=None, placement="prior"):
    """Value iteration over Gaussian beliefs ``(mean, log variance)``.

    The variance recursion is deterministic, so each log-variance row maps to a fixed
    interpolation between two rows; the mean moves by the predicted mean plus the
    innovation spread, integrated with Gauss-Hermite nodes.
    """
    grid = grid or BeliefGridSpec()
    a, b, _ = _scalar(model)
    m, lv, us = grid.means(), grid.logvars(), grid.actions()
    z, wz = gauss_hermite(grid.gh_order)
    reward, p_post, spread = belief_rewards(model, grid, placement)
    nxt_lv = np.clip(np.log(p_post), lv[0], lv[-1])
    hi = np.clip(np.searchsorted(lv, nxt_lv, side="right"), 1, len(lv) - 1)
    lo = hi - 1
    frac = (nxt_lv - lv[lo]) / (lv[hi] - lv[lo])
    m_pred = a * m[:, None] + b * us[None, :]

    def backup(values):
        q = np.empty((len(m), len(lv), len(us)))
        for j in range(len(lv)):
            pts = m_pred[..., None] + spread[j] * z
            v_lo = np.interp(pts, m, values[:, lo[j]])
            v_hi = np.interp(pts, m, values[:, hi[j]])
            q[:, j, :] = ((1.0 - frac[j]) * v_lo + frac[j] * v_hi) @ wz
        return reward + gamma * q

    values, _, sweeps = _iterate(backup, (len(m), len(lv)), grid.tol, grid.max_iter)
    return BeliefGridSolution(m, lv, us, values, reward, sweeps)
