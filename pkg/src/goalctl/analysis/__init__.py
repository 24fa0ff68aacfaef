from goalctl.analysis.corollary1 import StudyResult, corollary1_study
from goalctl.analysis.dp import (BeliefGridSpec, GridSpec, belief_grid_value_iteration, belief_rewards,
                                 gauss_hermite, grid_value_iteration)
from goalctl.analysis.objectives import (BoundReport, LinearPolicy, discount_weights, discounted_returns,
                                         jensen_sides, policy_eval_goal_objective, rollout, score_trajectory,
                                         verify_lqr_bound, verify_prob_bound)
from goalctl.analysis.oracles import dlqr, filter_riccati_fixed_point, kalman_filter, riccati
