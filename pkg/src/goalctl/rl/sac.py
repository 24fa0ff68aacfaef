"""Soft actor-critic update over belief transitions.

The whole step (critic regression, actor ascent, temperature, Adam moments and the
Polyak target update) is one jitted function. :class:`SacLearner` keeps that state
on the jax side across many updates; :func:`sac_update` is the one-shot wrapper that
reads from and writes back to an :class:`AgentBundle`.
"""

from functools import lru_cache, partial

import jax
import jax.numpy as jnp
import numpy as np

from goalctl.rl.agent import belief_gaussian, critic_values, jnp_tree, min_critic, squashed_sample

_tmap = jax.tree_util.tree_map


def _critic_loss(critic_params, target_params, actor_params, log_alpha, gamma, batch, eps):
    mean2, ls2 = belief_gaussian(actor_params, batch["next_states"], batch["next_weights"], jnp)
    a2, logp2 = squashed_sample(mean2, ls2, eps, jnp)
    q_next = jnp.sum(batch["next_weights"] * min_critic(target_params, batch["next_states"], a2, jnp), axis=-1)
    alpha = jnp.exp(log_alpha)
    soft = q_next - jnp.where(alpha > 0, alpha * logp2, 0.0)
    target = jax.lax.stop_gradient(batch["rewards"] + gamma * (1.0 - batch["dones"]) * soft)
    loss = 0.0
    for params in critic_params:
        q = jnp.sum(batch["weights"] * critic_values(params, batch["states"], batch["actions"], jnp), axis=-1)
        loss = loss + jnp.mean((q - target) ** 2)
    return loss, jnp.mean(target)


def _actor_loss(actor_params, critic_params, log_alpha, states, weights, eps):
    mean, ls = belief_gaussian(actor_params, states, weights, jnp)
    a, logp = squashed_sample(mean, ls, eps, jnp)
    q = jnp.sum(weights * min_critic(critic_params, states, a, jnp), axis=-1)
    alpha = jnp.exp(log_alpha)
    return jnp.mean(jnp.where(alpha > 0, alpha * logp, 0.0) - q), jnp.mean(logp)


def _adam(params, grads, opt, hyper):
    lr, b1, b2, eps = hyper
    m, v, t = opt
    t = t + 1
    m = _tmap(lambda a, g: b1 * a + (1.0 - b1) * g, m, grads)
    v = _tmap(lambda a, g: b2 * a + (1.0 - b2) * g * g, v, grads)
    c1, c2 = 1.0 - b1**t, 1.0 - b2**t
    params = _tmap(lambda p, a, b: p - lr * (a / c1) / (jnp.sqrt(b / c2) + eps), params, m, v)
    return params, (m, v, t)


def _step(state, batch, eps, gamma, polyak, hyper, update_actor, learn_alpha):
    (c_loss, target_mean), c_grads = jax.value_and_grad(_critic_loss, has_aux=True)(
        state["critics"], state["targets"], state["actor"], state["log_alpha"], gamma, batch, eps[0])
    critics, c_opt = _adam(state["critics"], c_grads, state["opt"]["critic"], hyper["critic"])
    new = dict(state, critics=critics, opt=dict(state["opt"], critic=c_opt))
    diag = {"critic_loss": c_loss, "target_mean": target_mean}
    if update_actor:
        (a_loss, logp_mean), a_grads = jax.value_and_grad(_actor_loss, has_aux=True)(
            state["actor"], critics, state["log_alpha"], batch["states"], batch["weights"], eps[1])
        actor, a_opt = _adam(state["actor"], a_grads, state["opt"]["actor"], hyper["actor"])
        new["actor"] = actor
        new["opt"]["actor"] = a_opt
        diag.update(actor_loss=a_loss, entropy=-logp_mean)
        if learn_alpha:
            # d/dlog_alpha of -log_alpha * (log pi + target_entropy)
            grad = -(logp_mean + state["target_entropy"])
            log_alpha, al_opt = _adam(state["log_alpha"], grad, state["opt"]["alpha"], hyper["alpha"])
            new["log_alpha"] = log_alpha
            new["opt"]["alpha"] = al_opt
        diag["alpha"] = jnp.exp(new["log_alpha"])
    new["targets"] = _tmap(lambda tg, s: polyak * tg + (1.0 - polyak) * s, state["targets"], critics)
    return new, diag


@lru_cache(maxsize=None)
def _compiled(update_actor, learn_alpha):
    return jax.jit(partial(_step, update_actor=update_actor, learn_alpha=learn_alpha),
                   static_argnames=("hyper",))


def prepare_batch(bundle, batch):
    """Normalise a replay sample into the arrays the jitted losses expect."""
    return {
        "states": bundle.normalize(batch["states"]),
        "weights": np.asarray(batch["weights"], float),
        "actions": bundle.to_unit(batch["actions"]),
        "rewards": np.asarray(batch["rewards"], float),
        "next_states": bundle.normalize(batch["next_states"]),
        "next_weights": np.asarray(batch["next_weights"], float),
        "dones": np.asarray(batch["dones"], float),
    }


def _opt_tree(state, params):
    if state.m is None:
        zeros = _tmap(jnp.zeros_like, params)
        return (zeros, zeros, jnp.asarray(0.0))
    treedef = jax.tree_util.tree_structure(params)
    m = jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in state.m])
    v = jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in state.v])
    return (m, v, jnp.asarray(float(state.t)))


def _hyper(state):
    return (float(state.lr), float(state.beta1), float(state.beta2), float(state.eps))


class SacLearner:
    """Device-side copy of a bundle's trainable state for repeated updates."""

    def __init__(self, bundle, gamma, polyak=0.995):
        self.bundle = bundle
        self.gamma = float(gamma)
        self.polyak = float(polyak)
        critics = [jnp_tree(c.params) for c in bundle.critics]
        actor = jnp_tree(bundle.actor.params)
        log_alpha = jnp.asarray(bundle.log_alpha)
        opt = bundle.optim
        self.hyper = (("critic", _hyper(opt["critic"])), ("actor", _hyper(opt["actor"])),
                      ("alpha", _hyper(opt["alpha"])))
        self.state = {
            "critics": critics,
            "targets": [jnp_tree(c.params) for c in bundle.targets],
            "actor": actor,
            "log_alpha": log_alpha,
            "target_entropy": jnp.asarray(float(bundle.target_entropy)),
            "opt": {"critic": _opt_tree(opt["critic"], critics), "actor": _opt_tree(opt["actor"], actor),
                    "alpha": _opt_tree(opt["alpha"], log_alpha)},
        }

    def update(self, batch, rng, update_actor=True):
        data = prepare_batch(self.bundle, batch)
        n, m = data["actions"].shape
        eps = rng.standard_normal((2, n, m))
        fn = _compiled(bool(update_actor), bool(update_actor and self.bundle.learn_alpha))
        self.state, diag = fn(self.state, data, eps, self.gamma, self.polyak, _Hyper(self.hyper))
        return diag

    def write_back(self):
        """Copy parameters, optimizer moments and temperature into the bundle."""
        b, s = self.bundle, self.state
        for net, params in zip(b.critics, s["critics"]):
            net.params = _np_tree(params)
        for net, params in zip(b.targets, s["targets"]):
            net.params = _np_tree(params)
        b.actor.params = _np_tree(s["actor"])
        b.log_alpha = float(s["log_alpha"])
        for name in ("critic", "actor", "alpha"):
            m, v, t = s["opt"][name]
            if int(t) == 0:
                continue
            opt = b.optim[name]
            opt.m = [np.asarray(a) for a in jax.tree_util.tree_leaves(m)]
            opt.v = [np.asarray(a) for a in jax.tree_util.tree_leaves(v)]
            opt.t = int(t)
        return b


class _Hyper(dict):
    """Hashable view of per-optimizer hyperparameters (a static jit argument)."""

    def __init__(self, items):
        super().__init__(items)
        self._key = tuple(items)

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, _Hyper) and self._key == other._key


def _np_tree(tree):
    return _tmap(lambda a: np.array(a), tree)


def sac_update(bundle, batch, gamma, rng, polyak=0.995, update_actor=True):
    """One gradient step on critics, actor and temperature; targets track by Polyak averaging.

    ``batch`` is a replay sample (dict of arrays). The bundle is updated in place and
    returned together with scalar diagnostics.
    """
    learner = SacLearner(bundle, gamma, polyak)
    diag = learner.update(batch, rng, update_actor)
    learner.write_back()
    return bundle, {k: float(v) for k, v in diag.items()}
