"""Linear system with additive Gaussian process and measurement noise."""

from dataclasses import dataclass, field

import numpy as np

from goalctl.env import gaussian
from goalctl.errors import DensityUnavailable


def _mat(a, rows=None):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return a


@dataclass(frozen=True, eq=False)
class LinearGaussian:
    """``x' = A x + B u + w``, ``y = C x + v`` with ``w ~ N(0, Q)``, ``v ~ N(0, Rv)``.

    ``x0_cov`` may be all zeros for a point-mass initial distribution, and ``Q`` or
    ``Rv`` may be zero for noise-free variants (those variants have no density).
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    C: np.ndarray = None
    Rv: np.ndarray = None
    x0_mean: np.ndarray = None
    x0_cov: np.ndarray = None
    u_low: np.ndarray = None
    u_high: np.ndarray = None
    kind: str = field(default="linear_gaussian", init=False)

    def __post_init__(self):
        A = _mat(self.A)
        n = A.shape[0]
        B = _mat(self.B)
        if B.shape[0] != n:
            B = B.reshape(n, -1)
        m = B.shape[1]
        C = np.eye(n) if self.C is None else _mat(self.C)
        k = C.shape[0]
        Rv = np.zeros((k, k)) if self.Rv is None else _mat(self.Rv)
        x0_mean = np.zeros(n) if self.x0_mean is None else np.asarray(self.x0_mean, float).reshape(n)
        x0_cov = np.zeros((n, n)) if self.x0_cov is None else _mat(self.x0_cov)
        u_low = np.full(m, -np.inf) if self.u_low is None else np.asarray(self.u_low, float).reshape(m)
        u_high = np.full(m, np.inf) if self.u_high is None else np.asarray(self.u_high, float).reshape(m)
        for name, val in dict(A=A, B=B, Q=_mat(self.Q), C=C, Rv=Rv, x0_mean=x0_mean,
                              x0_cov=x0_cov, u_low=u_low, u_high=u_high).items():
            object.__setattr__(self, name, val)
        for name in ("Q", "Rv", "x0_cov"):
            cov = getattr(self, name)
            if not np.allclose(cov, cov.T):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(cov).min() < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")

    @property
    def state_dim(self):
        return self.A.shape[0]

    @property
    def action_dim(self):
        return self.B.shape[1]

    @property
    def obs_dim(self):
        return self.C.shape[0]

    @property
    def action_low(self):
        return self.u_low

    @property
    def action_high(self):
        return self.u_high

    def clip_action(self, u):
        return np.clip(u, self.u_low, self.u_high)

    def sample_psi(self, rng, size=None):
        shape = (2,) if size is None else (size, 2)
        return np.ones(shape)

    def sample_states(self, rng, size=None):
        n = self.state_dim
        count = 1 if size is None else size
        z = rng.standard_normal((count, n))
        x = self.x0_mean + z @ gaussian.psd_sqrt(self.x0_cov).T
        return x[0] if size is None else x

    def sample_initial(self, rng):
        return self.sample_states(rng), self.sample_psi(rng)

    def mean_step(self, x, u, psi=None, xp=np):
        return x @ xp.asarray(self.A).T + u @ xp.asarray(self.B).T

    def transition(self, x, u, psi, rng):
        x = np.asarray(x, dtype=float)
        u = self.clip_action(np.asarray(u, dtype=float))
        mean = self.mean_step(x, u)
        w = rng.standard_normal(mean.shape) @ gaussian.psd_sqrt(self.Q).T
        return mean + w

    def measure(self, x, rng):
        x = np.asarray(x, dtype=float)
        mean = x @ self.C.T
        v = rng.standard_normal(mean.shape) @ gaussian.psd_sqrt(self.Rv).T
        return mean + v

    def transition_logpdf(self, x, u, psi, x_next):
        if not gaussian.is_pd(self.Q):
            raise DensityUnavailable("process noise covariance is singular")
        mean = self.mean_step(np.asarray(x, float), self.clip_action(np.asarray(u, float)))
        return gaussian.logpdf(np.asarray(x_next, float) - mean, self.Q)

    def measurement_logpdf(self, x, y):
        if not gaussian.is_pd(self.Rv):
            raise DensityUnavailable("measurement noise covariance is singular")
        resid = np.asarray(y, float) - np.asarray(x, float) @ self.C.T
        return gaussian.logpdf(resid, self.Rv)

    def density_bound(self):
        """Maximum of the transition density (needed for truncation tails)."""
        return float(np.exp(gaussian.peak_logpdf(self.Q)))

    @classmethod
    def from_params(cls, params):
        return cls(**{k: np.asarray(v, dtype=float) for k, v in params.items()})
