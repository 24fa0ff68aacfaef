"""Double pendulum on a cart driven by a horizontal force.

State ``[th1, th2, dth1, dth2, x, dx]`` with angles measured from upright, so the
hanging rest state is ``th1 = th2 = pi``. Link masses sit at the link tips.
"""

from dataclasses import dataclass, field

import numpy as np

from goalctl.errors import DensityUnavailable, NonFiniteState


@dataclass(frozen=True, eq=False)
class DoublePendulum:
    cart_mass: float = 1.0
    m1: float = 0.1
    m2: float = 0.1
    l1: float = 0.5
    l2: float = 0.5
    gravity: float = 9.81
    dt: float = 0.02
    substeps: int = 2
    force_limit: float = 20.0
    kind: str = field(default="double_pendulum", init=False)

    state_dim = 6
    action_dim = 1
    obs_dim = 6

    def __post_init__(self):
        if self.dt <= 0 or self.substeps < 1:
            raise ValueError("dt must be positive and substeps >= 1")

    @property
    def action_low(self):
        return np.array([-self.force_limit])

    @property
    def action_high(self):
        return np.array([self.force_limit])

    def clip_action(self, u):
        return np.clip(u, -self.force_limit, self.force_limit)

    def rest_state(self):
        return np.array([np.pi, np.pi, 0.0, 0.0, 0.0, 0.0])

    def sample_psi(self, rng, size=None):
        shape = (2,) if size is None else (size, 2)
        return np.ones(shape)

    def sample_states(self, rng, size=None):
        x = self.rest_state()
        return x if size is None else np.tile(x, (size, 1))

    def sample_initial(self, rng):
        return self.sample_states(rng), self.sample_psi(rng)

    def accelerations(self, s, force, xp=np):
        """Solve the 3x3 Lagrangian mass-matrix system for ``(ddx, ddth1, ddth2)``."""
        th1, th2, w1, w2 = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
        m0, m1, m2, l1, l2, g = self.cart_mass, self.m1, self.m2, self.l1, self.l2, self.gravity
        s1, c1, s2, c2 = xp.sin(th1), xp.cos(th1), xp.sin(th2), xp.cos(th2)
        s12, c12 = xp.sin(th1 - th2), xp.cos(th1 - th2)
        a = m0 + m1 + m2
        b = (m1 + m2) * l1 * c1
        c = m2 * l2 * c2
        d = (m1 + m2) * l1**2
        e = m2 * l1 * l2 * c12
        f = m2 * l2**2
        r1 = force + (m1 + m2) * l1 * s1 * w1**2 + m2 * l2 * s2 * w2**2
        r2 = -m2 * l1 * l2 * s12 * w2**2 + (m1 + m2) * g * l1 * s1
        r3 = m2 * l1 * l2 * s12 * w1**2 + m2 * g * l2 * s2
        # symmetric [[a, b, c], [b, d, e], [c, e, f]] inverse by cofactors
        i11 = d * f - e * e
        i12 = c * e - b * f
        i13 = b * e - c * d
        i22 = a * f - c * c
        i23 = b * c - a * e
        i33 = a * d - b * b
        det = a * i11 + b * i12 + c * i13
        ddx = (i11 * r1 + i12 * r2 + i13 * r3) / det
        dd1 = (i12 * r1 + i22 * r2 + i23 * r3) / det
        dd2 = (i13 * r1 + i23 * r2 + i33 * r3) / det
        return ddx, dd1, dd2

    def rhs(self, s, force, xp=np):
        ddx, dd1, dd2 = self.accelerations(s, force, xp)
        return xp.stack([s[..., 2], s[..., 3], dd1, dd2, s[..., 5], ddx], axis=-1)

    def mean_step(self, x, u, psi=None, xp=np):
        force = u[..., 0]
        h = self.dt / self.substeps
        for _ in range(self.substeps):
            k1 = self.rhs(x, force, xp)
            k2 = self.rhs(x + 0.5 * h * k1, force, xp)
            k3 = self.rhs(x + 0.5 * h * k2, force, xp)
            k4 = self.rhs(x + h * k3, force, xp)
            x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    def transition(self, x, u, psi=None, rng=None):
        u = self.clip_action(np.asarray(u, float))
        x_next = self.mean_step(np.asarray(x, float), u)
        if not np.all(np.isfinite(x_next)):
            raise NonFiniteState("pendulum integration diverged")
        return x_next

    def measure(self, x, rng=None):
        return np.array(x, dtype=float, copy=True)

    def transition_logpdf(self, x, u, psi, x_next):
        raise DensityUnavailable("pendulum transition is deterministic")

    def measurement_logpdf(self, x, y):
        raise DensityUnavailable("pendulum is observed without noise")

    def energy(self, s):
        """Total mechanical energy (kinetic + potential)."""
        th1, th2, w1, w2, dx = s[..., 0], s[..., 1], s[..., 2], s[..., 3], s[..., 5]
        m0, m1, m2, l1, l2, g = self.cart_mass, self.m1, self.m2, self.l1, self.l2, self.gravity
        v1x = dx + l1 * np.cos(th1) * w1
        v1y = -l1 * np.sin(th1) * w1
        v2x = v1x + l2 * np.cos(th2) * w2
        v2y = v1y - l2 * np.sin(th2) * w2
        kinetic = 0.5 * (m0 * dx**2 + m1 * (v1x**2 + v1y**2) + m2 * (v2x**2 + v2y**2))
        potential = g * (m1 * l1 * np.cos(th1) + m2 * (l1 * np.cos(th1) + l2 * np.cos(th2)))
        return kinetic + potential

    @classmethod
    def from_params(cls, params):
        keys = ("cart_mass", "m1", "m2", "l1", "l2", "gravity", "dt", "substeps", "force_limit")
        return cls(**{k: params[k] for k in keys if k in params})
