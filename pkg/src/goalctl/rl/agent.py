"""Actor and twin critics acting on particle beliefs.

Both networks see single particle states. The belief-level critic is the weighted
mean of per-particle critic values; the belief-level action is the weighted mean of
per-particle actions. Network inputs are affine-normalised states, and actions are
handled internally in ``[-1, 1]`` and mapped to the physical bounds at the edge.
"""

from dataclasses import dataclass, field

import jax.numpy as jnp
import numpy as np

from goalctl.nnopt import MLP, AdamState, apply

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0


@dataclass
class AgentBundle:
    actor: MLP
    critics: list
    targets: list
    log_alpha: float
    state_center: np.ndarray
    state_scale: np.ndarray
    action_low: np.ndarray
    action_high: np.ndarray
    learn_alpha: bool = True
    target_entropy: float = None
    optim: dict = field(default_factory=dict)

    @property
    def state_dim(self):
        return self.actor.in_dim

    @property
    def action_dim(self):
        return self.actor.out_dim // 2

    @property
    def alpha(self):
        return float(np.exp(self.log_alpha))

    def normalize(self, states):
        return (np.asarray(states, dtype=float) - self.state_center) / self.state_scale

    def to_unit(self, u):
        return 2.0 * (np.asarray(u, float) - self.action_low) / (self.action_high - self.action_low) - 1.0

    def to_physical(self, a):
        return self.action_low + 0.5 * (np.asarray(a, float) + 1.0) * (self.action_high - self.action_low)


def create_bundle(state_dim, action_dim, rng, hidden=(64, 64), twin=True, state_center=None,
                  state_scale=None, action_low=None, action_high=None, init_alpha=0.1,
                  learn_alpha=True, lr=3e-4):
    actor = MLP.create((state_dim, *hidden, 2 * action_dim), rng)
    n_critics = 2 if twin else 1
    critics = [MLP.create((state_dim + action_dim, *hidden, 1), rng) for _ in range(n_critics)]
    bundle = AgentBundle(
        actor=actor,
        critics=critics,
        targets=[c.copy() for c in critics],
        log_alpha=float(np.log(init_alpha)) if init_alpha > 0 else -np.inf,
        state_center=np.zeros(state_dim) if state_center is None else np.asarray(state_center, float),
        state_scale=np.ones(state_dim) if state_scale is None else np.asarray(state_scale, float),
        action_low=-np.ones(action_dim) if action_low is None else np.asarray(action_low, float),
        action_high=np.ones(action_dim) if action_high is None else np.asarray(action_high, float),
        learn_alpha=learn_alpha and init_alpha > 0,
        target_entropy=-float(action_dim),
    )
    bundle.optim = {"actor": AdamState(lr=lr), "critic": AdamState(lr=lr), "alpha": AdamState(lr=lr)}
    return bundle


# -- per-particle heads (xp-generic so the same code is traced by jax) ---------------

def actor_heads(params, xn, xp=np):
    out = apply(params, xn, xp)
    k = out.shape[-1] // 2
    return out[..., :k], xp.clip(out[..., k:], LOG_STD_MIN, LOG_STD_MAX)


def critic_values(params, xn, a, xp=np):
    """Per-particle critic values for ``xn`` (..., p, n) and unit action ``a`` (..., m)."""
    a = xp.broadcast_to(a[..., None, :], xn.shape[:-1] + (a.shape[-1],))
    return apply(params, xp.concatenate([xn, a], axis=-1), xp)[..., 0]


def min_critic(critic_params, xn, a, xp=np):
    vals = [critic_values(p, xn, a, xp) for p in critic_params]
    out = vals[0]
    for v in vals[1:]:
        out = xp.minimum(out, v)
    return out


def belief_gaussian(params, xn, w, xp=np):
    """Pre-squash Gaussian of the belief policy: weighted means of particle heads."""
    mean, log_std = actor_heads(params, xn, xp)
    return (w[..., None] * mean).sum(axis=-2), (w[..., None] * log_std).sum(axis=-2)


def squashed_sample(mean, log_std, eps, xp=np):
    """Unit-box action and its log density under the tanh-squashed Gaussian."""
    std = xp.exp(log_std)
    pre = mean + std * eps
    a = xp.tanh(pre)
    logp = -0.5 * eps * eps - log_std - 0.5 * np.log(2.0 * np.pi)
    logp = logp - xp.log(1.0 - a * a + 1e-6)
    return a, logp.sum(axis=-1)


# -- belief-level operations --------------------------------------------------------

def particle_critic(bundle, b, u):
    """``sum_i w_i min_k Q_k(x_i, u)``.

    The weighted terms are summed in sorted order, so permuting the particles leaves
    the result bit-identical.
    """
    xn = bundle.normalize(b.states)
    a = bundle.to_unit(np.clip(u, bundle.action_low, bundle.action_high))
    vals = min_critic([c.params for c in bundle.critics], xn, a)
    return float(np.sum(np.sort(b.weights * vals)))


def particle_actor(bundle, b):
    """Weighted mean of the per-particle deterministic actions, clipped to bounds."""
    mean, _ = actor_heads(bundle.actor.params, bundle.normalize(b.states))
    per = bundle.to_physical(np.tanh(mean))
    u = np.sum(b.weights[:, None] * per, axis=0)
    return np.clip(u, bundle.action_low, bundle.action_high)


def sample_action(bundle, b, rng):
    """Exploratory action from the belief-averaged squashed Gaussian."""
    mean, log_std = belief_gaussian(bundle.actor.params, bundle.normalize(b.states), b.weights)
    a, _ = squashed_sample(mean, log_std, rng.standard_normal(mean.shape))
    return bundle.to_physical(a)


def jnp_tree(tree):
    return [{k: jnp.asarray(v) for k, v in layer.items()} for layer in tree]
