import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from goalctl import reward as rw
from goalctl.analysis import (BeliefGridSpec, GridSpec, LinearPolicy, belief_grid_value_iteration,
                              belief_rewards, discount_weights, dlqr, filter_riccati_fixed_point,
                              gauss_hermite, grid_value_iteration, jensen_sides, kalman_filter,
                              policy_eval_goal_objective, score_trajectory, verify_lqr_bound,
                              verify_prob_bound)
from goalctl.env import LinearGaussian
from goalctl.errors import NonConvergence
from goalctl.trajectory import Trajectory


def test_trajectory_rejects_bad_gamma():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((3, 1)), gamma=1.0)


def test_score_at_origin():
    classical, goal = score_trajectory(Trajectory(np.zeros((500, 2)), gamma=0.9), hold_last=True)
    assert classical == 1.0
    assert goal == pytest.approx(10.0, rel=1e-12)


def test_far_then_goal_is_sparse_for_classical():
    states = np.zeros((400, 2))
    states[:5, 0] = 10.0
    classical, goal = score_trajectory(Trajectory(states, gamma=0.9), hold_last=True)
    assert goal == pytest.approx(0.9**5 / 0.1, abs=1e-6)
    assert classical <= np.exp(-50)


def test_discount_weights_sum_to_one():
    w = discount_weights(0.9, 30)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert w[1] / w[0] == pytest.approx(0.9)


def test_jensen_convex_combination_example():
    lhs, rhs = jensen_sides([2 / 3, 1 / 3], np.log([0.2, 0.8]))
    assert lhs == pytest.approx(-1.1473, abs=1e-4)
    assert rhs == pytest.approx(np.log(0.4), abs=1e-12)
    assert lhs <= rhs


@given(st.floats(0.01, 0.99), st.lists(st.floats(-30, 5), min_size=1, max_size=60))
def test_jensen_invariant(gamma, logp):
    w = discount_weights(gamma, len(logp) - 1)
    lhs, rhs = jensen_sides(w, logp)
    assert lhs <= rhs + 1e-12


@given(st.floats(0.01, 0.99), st.floats(-30, 5), st.integers(1, 60))
def test_jensen_equality_on_constants(gamma, lp, n):
    lhs, rhs = jensen_sides(discount_weights(gamma, n - 1), [lp] * n)
    assert abs(lhs - rhs) < 1e-9


def small_model():
    return LinearGaussian(A=[[1.0, 0.1], [0.0, 0.95]], B=[[0.0], [0.1]], Q=np.eye(2) * 0.04,
                          x0_mean=[0.0, 0.0], x0_cov=np.eye(2))


def test_constant_trajectory_gives_equality():
    # A = I with u = 0 holds the state; deterministic mode removes the noise
    model = LinearGaussian(A=np.eye(2), B=np.ones((2, 1)), Q=np.eye(2) * 0.5)
    rep = verify_prob_bound(LinearPolicy(np.zeros((1, 2))), model, 0.9, 1, 100, np.random.default_rng(0),
                            deterministic=True, x0=[0.3, -0.4])
    assert abs(rep.gap) < 1e-9 and rep.holds


def test_prob_bound_holds_for_lqr_policy():
    model = small_model()
    K = dlqr(model.A, model.B, np.eye(2), [[1.0]], 0.95)
    rep = verify_prob_bound(LinearPolicy(K), model, 0.95, 500, 300, np.random.default_rng(1))
    assert rep.holds and rep.gap > 0


def test_lqr_bound_origin_equality():
    model = LinearGaussian(A=np.eye(1) * 0.5, B=[[1.0]], Q=[[1.0]])
    rep = verify_lqr_bound(LinearPolicy([[0.0]]), model, [[1.0]], [[1.0]], 0.9, 1, 100,
                           np.random.default_rng(0), deterministic=True, x0=[0.0])
    assert rep.lhs == 0.0 and rep.rhs == pytest.approx(0.0, abs=1e-15)


def test_scaling_r_leaves_right_side_alone():
    model = small_model()
    policy = LinearPolicy(dlqr(model.A, model.B, np.eye(2), [[1.0]], 0.9))
    a = verify_lqr_bound(policy, model, np.eye(2), [[1.0]], 0.9, 300, 150, np.random.default_rng(2))
    b = verify_lqr_bound(policy, model, np.eye(2), [[10.0]], 0.9, 300, 150, np.random.default_rng(2))
    assert b.rhs == a.rhs
    assert b.lhs < a.lhs and b.gap > a.gap


def test_kalman_exact_measurement_limit():
    model = LinearGaussian(A=np.eye(2), B=np.zeros((2, 1)), Q=np.eye(2), Rv=np.eye(2) * 1e-14, x0_cov=np.eye(2))
    y = np.array([0.7, -1.3])
    (m, _), = kalman_filter(model, [y], [])
    np.testing.assert_allclose(m, y, atol=1e-6)


def test_kalman_open_loop_covariance():
    model = small_model()
    out = kalman_filter(model, [None] * 5, np.zeros((4, 1)))
    P = model.x0_cov.copy()
    for _, cov in out[1:]:
        P = model.A @ P @ model.A.T + model.Q
        np.testing.assert_allclose(cov, P, rtol=1e-14)


def test_kalman_steady_state_matches_riccati():
    model = small_model()
    out = kalman_filter(model, [np.zeros(2)] * 400, np.zeros((399, 1)))
    P_pred = filter_riccati_fixed_point(model.A, model.C, model.Q, model.Rv)
    S = model.C @ P_pred @ model.C.T + model.Rv
    P_post = P_pred - P_pred @ model.C.T @ np.linalg.solve(S, model.C @ P_pred)
    np.testing.assert_allclose(out[-1][1], P_post, atol=1e-10)


def test_dlqr_golden_ratio():
    K = dlqr([[1.0]], [[1.0]], [[1.0]], [[1.0]], 1.0)
    phi = (1 + np.sqrt(5)) / 2
    assert K[0, 0] == pytest.approx(phi / (1 + phi), abs=1e-10)


def test_dlqr_without_actuation_is_zero():
    K = dlqr([[0.5, 0.1], [0.0, 0.3]], np.zeros((2, 1)), np.eye(2), [[1.0]], 0.9)
    assert np.all(K == 0)


def test_dlqr_myopic_limit():
    A, B, Q, R = np.array([[1.2]]), np.array([[0.7]]), np.array([[2.0]]), np.array([[0.5]])
    K = dlqr(A, B, Q, R, 1e-8)
    assert np.abs(K).max() <= 1e-6
    one_step = 1e-8 * np.linalg.solve(R + 1e-8 * B.T @ Q @ B, B.T @ Q @ A)
    np.testing.assert_allclose(K, one_step, rtol=1e-6)


def test_riccati_nonconvergence():
    with pytest.raises(NonConvergence):
        dlqr([[2.0]], [[0.0]], [[1.0]], [[1.0]], 1.0, max_iter=50)


def test_gauss_hermite_moments():
    z, w = gauss_hermite(16)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert w @ z**2 == pytest.approx(1.0, abs=1e-13)
    assert w @ z**4 == pytest.approx(3.0, abs=1e-12)


SCALAR = LinearGaussian(A=[[1.0]], B=[[1.0]], Q=[[1.0]])


def test_zero_reward_gives_zero_value():
    sol = grid_value_iteration(SCALAR, None, 0.9, GridSpec(n_states=41, n_actions=41))
    assert np.all(sol.values == 0.0)


def test_myopic_greedy_cancels_state():
    grid = GridSpec(half_width=4.0, n_states=81, n_actions=81)
    sol = grid_value_iteration(SCALAR, rw.goal_density([0.0]), 0.0, grid)
    np.testing.assert_allclose(sol.greedy, -sol.states, atol=1e-12)


def test_grid_dp_beats_lqr_in_goal_objective():
    from goalctl.analysis import corollary1_study
    res = corollary1_study(n=400, horizon=120,
                           grid=GridSpec(half_width=8.0, n_states=161, action_half_width=8.4, n_actions=161))
    assert res.gap > 0


def test_policy_eval_constant_reward():
    est, se, _ = policy_eval_goal_objective(LinearPolicy([[0.0]]), SCALAR, 0.9, 5, 40, np.random.default_rng(0),
                                            reward=lambda x, u, xn: np.ones(x.shape[:-1]))
    assert est == pytest.approx((1 - 0.9**40) / 0.1, rel=1e-14)
    assert se == 0.0


def test_policy_eval_zero_reward():
    est, se, _ = policy_eval_goal_objective(LinearPolicy([[0.0]]), SCALAR, 0.9, 5, 40, np.random.default_rng(0),
                                            reward=lambda x, u, xn: np.zeros(x.shape[:-1]))
    assert est == 0.0 and se == 0.0


def test_goal_objective_grows_with_gamma():
    vals = [policy_eval_goal_objective(LinearPolicy([[1.0]]), SCALAR, g, 200, 300, np.random.default_rng(3))[0]
            for g in (0.5, 0.9, 0.99)]
    assert vals[0] < vals[1] < vals[2]


def test_uninformative_beliefs_flatten_variance_axis():
    # process noise swamps the belief variance and measurements carry nothing
    model = LinearGaussian(A=[[0.8]], B=[[1.0]], Q=[[100.0]], Rv=[[1e12]])
    grid = BeliefGridSpec(half_width=4.0, n_means=41, logvar_min=np.log(1e-3), logvar_max=np.log(1.0),
                          n_logvars=9, n_actions=21, tol=1e-10)
    sol = belief_grid_value_iteration(model, 0.5, grid)
    spread = np.ptp(sol.values, axis=1)
    assert spread.max() < 1e-2 * sol.values.min()


def test_observation_reward_matches_prior_reward():
    model = LinearGaussian(A=[[0.9]], B=[[1.0]], Q=[[1.0]], Rv=[[4.0]])
    grid = BeliefGridSpec(half_width=4.0, n_means=21, logvar_max=np.log(4.0), n_logvars=7, n_actions=11)
    prior, *_ = belief_rewards(model, grid, "prior")
    obs, *_ = belief_rewards(model, grid, "observation")
    assert np.max(np.abs(prior - obs)) < 1e-6
