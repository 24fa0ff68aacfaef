"""Closed-form ground truth for linear-Gaussian systems."""

import numpy as np

from goalctl.errors import NonConvergence, SingularInnovation


def kalman_filter(model, observations, actions, mean0=None, cov0=None):
    """Posterior ``(mean, cov)`` after each observation.

    Step ``t`` predicts with ``actions[t-1]`` (for t >= 1) and then updates with
    ``observations[t]``; a ``None`` observation skips the update.
    """
    A, B, Q, C, Rv = model.A, model.B, model.Q, model.C, model.Rv
    m = model.x0_mean.copy() if mean0 is None else np.asarray(mean0, float)
    P = model.x0_cov.copy() if cov0 is None else np.asarray(cov0, float)
    out = []
    for t, y in enumerate(observations):
        if t > 0:
            m = A @ m + B @ np.atleast_1d(actions[t - 1])
            P = A @ P @ A.T + Q
        if y is not None:
            S = C @ P @ C.T + Rv
            if np.linalg.cond(S) > 1e14:
                raise SingularInnovation("innovation covariance is singular")
            gain = np.linalg.solve(S, C @ P).T
            m = m + gain @ (np.asarray(y, float) - C @ m)
            P = P - gain @ S @ gain.T
            P = 0.5 * (P + P.T)
        out.append((m.copy(), P.copy()))
    return out


def riccati(A, B, Q, R, gamma=1.0, tol=1e-12, max_iter=200000):
    """Discounted Riccati iteration ``P = Q + g A'PA - g^2 A'PB (R + g B'PB)^-1 B'PA``."""
    A, B, Q, R = (np.atleast_2d(np.asarray(M, float)) for M in (A, B, Q, R))
    P = Q.copy()
    for _ in range(max_iter):
        BtPA = B.T @ P @ A
        nxt = Q + gamma * A.T @ P @ A - gamma**2 * BtPA.T @ np.linalg.solve(R + gamma * B.T @ P @ B, BtPA)
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > 1e150:
            raise NonConvergence("Riccati iteration diverged (pair not stabilizable?)")
        if np.max(np.abs(nxt - P)) <= tol * max(1.0, np.max(np.abs(nxt))):
            return nxt
        P = nxt
    raise NonConvergence("Riccati iteration did not converge")


def dlqr(A, B, Q, R, gamma=1.0, tol=1e-12, max_iter=200000):
    """Gain ``K`` of the discounted LQR, ``u = -K x``."""
    A, B, R = (np.atleast_2d(np.asarray(M, float)) for M in (A, B, R))
    P = riccati(A, B, Q, R, gamma, tol, max_iter)
    return gamma * np.linalg.solve(R + gamma * B.T @ P @ B, B.T @ P @ A)


def filter_riccati_fixed_point(A, C, Q, Rv, tol=1e-12, max_iter=200000):
    """Steady-state predicted covariance of the Kalman filter by fixed-point iteration."""
    P = np.atleast_2d(Q).copy()
    for _ in range(max_iter):
        S = C @ P @ C.T + Rv
        nxt = A @ (P - P @ C.T @ np.linalg.solve(S, C @ P)) @ A.T + Q
        if np.max(np.abs(nxt - P)) <= tol:
            return nxt
        P = nxt
    raise NonConvergence("filter Riccati iteration did not converge")
