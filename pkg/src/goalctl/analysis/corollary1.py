"""Goal-objective comparison of the grid-DP policy against an LQR gain."""

from dataclasses import dataclass

import numpy as np

from goalctl import reward as rw
from goalctl.analysis.dp import GridSpec, grid_value_iteration
from goalctl.analysis.objectives import LinearPolicy, discounted_returns
from goalctl.analysis.oracles import dlqr
from goalctl.env import LinearGaussian


@dataclass
class StudyResult:
    j_dp: float
    j_lqr: float
    gap: float
    gap_se: float
    dp_se: float
    lqr_se: float
    lqr_gain: float
    n: int
    horizon: int
    sweeps: int

    @property
    def significant(self):
        return self.gap > 3.0 * self.gap_se

    FIELDS = ("j_dp", "j_lqr", "gap", "gap_se", "dp_se", "lqr_se", "lqr_gain", "n", "horizon", "sweeps")

    def row(self):
        return [getattr(self, k) for k in self.FIELDS]


def corollary1_study(a=1.05, b=1.0, noise_var=1.0, gamma=0.95, lqr_q=1.0, lqr_r=1.0,
                     n=2000, horizon=200, seed=0, grid=None, x0_std=2.0):
    """Both policies are evaluated on identical noise (common random numbers), so the
    gap's standard error comes from paired differences."""
    model = LinearGaussian(A=[[a]], B=[[b]], Q=[[noise_var]], x0_mean=[0.0], x0_cov=[[x0_std**2]])
    grid = grid or GridSpec(half_width=8.0, n_states=321, action_half_width=8.0 * abs(a / b), n_actions=321)
    sol = grid_value_iteration(model, rw.goal_density([0.0]), gamma, grid)
    gain = dlqr(model.A, model.B, [[lqr_q]], [[lqr_r]], gamma)
    lqr = LinearPolicy(gain)
    ret_dp = discounted_returns(sol.policy, model, gamma, n, horizon, np.random.default_rng(seed))
    ret_lqr = discounted_returns(lqr, model, gamma, n, horizon, np.random.default_rng(seed))
    diff = ret_dp - ret_lqr
    se = lambda v: float(np.std(v, ddof=1) / np.sqrt(len(v)))
    return StudyResult(float(ret_dp.mean()), float(ret_lqr.mean()), float(diff.mean()), se(diff),
                       se(ret_dp), se(ret_lqr), float(gain[0, 0]), n, horizon, sol.sweeps)
