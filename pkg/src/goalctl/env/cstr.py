"""Van de Vusse CSTR with uncertain kinetics.

The scenario multipliers ``psi = [alpha, beta]`` scale the A->D activation energy
and the A->B pre-exponential factor. Given ``psi`` the transition is deterministic.
"""

from dataclasses import dataclass, field

import numpy as np

from goalctl.env import gaussian
from goalctl.errors import DensityUnavailable, NonFiniteState

KELVIN = 273.15
STATE_NAMES = ("c_A", "c_B", "T_R", "T_K")
CB_INDEX = 1


def rhs(x, u, psi, c, xp=np):
    ca, cb, tr, tk = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    flow, qdot = u[..., 0], u[..., 1]
    alpha, beta = psi[..., 0], psi[..., 1]
    t_abs = tr + KELVIN
    k1 = beta * c["k0_ab"] * xp.exp(-c["ea_ab"] / t_abs)
    k2 = c["k0_bc"] * xp.exp(-c["ea_bc"] / t_abs)
    k3 = c["k0_ad"] * xp.exp(-alpha * c["ea_ad"] / t_abs)
    rho_cp = c["rho"] * c["cp"]
    transfer = c["k_w"] * c["area"] * (tr - tk)
    dca = flow * (c["c_a0"] - ca) - k1 * ca - k3 * ca**2
    dcb = -flow * cb + k1 * ca - k2 * cb
    heat = k1 * ca * c["h_ab"] + k2 * cb * c["h_bc"] + k3 * ca**2 * c["h_ad"]
    dtr = heat / (-rho_cp) + flow * (c["t_in"] - tr) - transfer / (rho_cp * c["volume"])
    dtk = (qdot + transfer) / (c["m_k"] * c["cp_k"])
    return xp.stack([dca, dcb, dtr, dtk], axis=-1)


def rk4(f, x, h, substeps):
    for _ in range(substeps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


@dataclass(frozen=True, eq=False)
class Cstr:
    constants: dict
    dt: float = 0.005
    substeps: int = 10
    u_low: np.ndarray = None
    u_high: np.ndarray = None
    x0_low: np.ndarray = None
    x0_high: np.ndarray = None
    alpha_range: tuple = (0.85, 1.15)
    beta_range: tuple = (0.85, 1.15)
    noise_std: np.ndarray = None
    kind: str = field(default="cstr", init=False)

    state_dim = 4
    action_dim = 2
    obs_dim = 4

    def __post_init__(self):
        if self.dt <= 0 or self.substeps < 1:
            raise ValueError("dt must be positive and substeps >= 1")
        defaults = dict(u_low=[5.0, -8500.0], u_high=[100.0, 0.0],
                        x0_low=[0.5, 0.3, 125.0, 120.0], x0_high=[1.5, 0.8, 140.0, 135.0],
                        noise_std=[0.02, 0.02, 0.5, 0.5])
        for name, default in defaults.items():
            val = getattr(self, name)
            object.__setattr__(self, name, np.asarray(default if val is None else val, float))
        if np.any(self.noise_std <= 0):
            raise ValueError("measurement noise must be positive")

    @property
    def action_low(self):
        return self.u_low

    @property
    def action_high(self):
        return self.u_high

    @property
    def psi_low(self):
        return np.array([self.alpha_range[0], self.beta_range[0]])

    @property
    def psi_high(self):
        return np.array([self.alpha_range[1], self.beta_range[1]])

    @property
    def nominal_psi(self):
        return 0.5 * (self.psi_low + self.psi_high)

    @property
    def noise_cov(self):
        return np.diag(self.noise_std**2)

    def clip_action(self, u):
        return np.clip(u, self.u_low, self.u_high)

    def sample_psi(self, rng, size=None):
        shape = (2,) if size is None else (size, 2)
        return rng.uniform(self.psi_low, self.psi_high, size=shape)

    def sample_states(self, rng, size=None):
        shape = (4,) if size is None else (size, 4)
        return rng.uniform(self.x0_low, self.x0_high, size=shape)

    def sample_initial(self, rng):
        return self.sample_states(rng), self.sample_psi(rng)

    def mean_step(self, x, u, psi, xp=np, substeps=None):
        c = self.constants
        h = self.dt / (substeps or self.substeps)
        x = xp.asarray(x)
        for _ in range(substeps or self.substeps):
            x = rk4(lambda s: rhs(s, u, psi, c, xp), x, h, 1)
            x = xp.concatenate([xp.maximum(x[..., :2], 0.0), x[..., 2:]], axis=-1)
        return x

    def transition(self, x, u, psi, rng=None):
        u = self.clip_action(np.asarray(u, float))
        x_next = self.mean_step(np.asarray(x, float), u, np.asarray(psi, float))
        if not np.all(np.isfinite(x_next)):
            raise NonFiniteState("CSTR integration diverged")
        return x_next

    def measure(self, x, rng):
        x = np.asarray(x, float)
        return x + rng.standard_normal(x.shape) * self.noise_std

    def transition_logpdf(self, x, u, psi, x_next):
        raise DensityUnavailable("CSTR transition is deterministic given psi")

    def measurement_logpdf(self, x, y):
        return gaussian.logpdf(np.asarray(y, float) - np.asarray(x, float), self.noise_cov)

    @classmethod
    def from_params(cls, params):
        return cls(
            constants=dict(params["constants"]),
            dt=float(params.get("dt", 0.005)),
            substeps=int(params.get("substeps", 10)),
            u_low=params.get("action", {}).get("low"),
            u_high=params.get("action", {}).get("high"),
            x0_low=params.get("initial", {}).get("low"),
            x0_high=params.get("initial", {}).get("high"),
            alpha_range=tuple(params.get("scenario", {}).get("alpha", (0.85, 1.15))),
            beta_range=tuple(params.get("scenario", {}).get("beta", (0.85, 1.15))),
            noise_std=params.get("measurement", {}).get("std"),
        )
