"""Differentiable predictive control on the double pendulum.

The policy is unrolled through the exact model from the hanging rest state and the
horizon-averaged objective is minimised end to end.

GoalOriented:  -log( mean_t exp(-0.5 * |1 - cos th_t|^2) )
Classical:      mean_t 0.5 * |1 - cos th_t|^2

The classical objective is usually written as ``exp(-Classical)``; the exponential
is monotone so its argument is optimised directly (both are logged).
"""

from dataclasses import dataclass, field
import logging

import jax
import jax.numpy as jnp
import numpy as np
from jax.scipy.special import logsumexp

from goalctl import rng as rngs
from goalctl.errors import NonFiniteState
from goalctl.nnopt import MLP, apply, make_optimizer, record
from goalctl.trajectory import Trajectory

log = logging.getLogger(__name__)

GOAL = "goal"
CLASSICAL = "classical"
FEATURES = 8


@dataclass(frozen=True)
class DpcObjective:
    variant: str = GOAL
    horizon: int = 75

    def __post_init__(self):
        if self.variant not in (GOAL, CLASSICAL):
            raise ValueError(f"unknown objective {self.variant!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass
class DpcRun:
    policy: MLP
    seed: int
    objective: str
    optimizer: str
    losses: list = field(default_factory=list)
    mean_cos: list = field(default_factory=list)
    raw_classical: list = field(default_factory=list)
    final: Trajectory = None
    failures: int = 0


def features(x, xp=np):
    th1, th2 = x[..., 0], x[..., 1]
    return xp.stack([xp.sin(th1), xp.cos(th1), xp.sin(th2), xp.cos(th2),
                     x[..., 2], x[..., 3], x[..., 4], x[..., 5]], axis=-1)


def policy_force(params, x, force_limit, xp=np):
    return force_limit * xp.tanh(apply(params, features(x, xp), xp))


def stage_terms(states, xp=np):
    """``0.5 * |1 - cos th|^2`` per step, over both links."""
    resid = 1.0 - xp.cos(states[..., :2])
    return 0.5 * xp.sum(resid * resid, axis=-1)


def goal_loss(q, xp=np):
    if xp is np:
        from scipy.special import logsumexp as lse
    else:
        lse = logsumexp
    return -(lse(-q) - np.log(q.shape[-1]))


def classical_loss(q, xp=np):
    return xp.mean(q)


def objective_value(variant, q, xp=np):
    return goal_loss(q, xp) if variant == GOAL else classical_loss(q, xp)


def _unroll(params, model, horizon, x0):
    """States ``x_0 .. x_{T-1}`` and actions ``u_0 .. u_{T-1}`` under the policy."""
    limit = model.force_limit

    def step(x, _):
        u = policy_force(params, x, limit, jnp)
        return model.mean_step(x, u, xp=jnp), (x, u)

    _, (xs, us) = jax.lax.scan(step, x0, None, length=horizon)
    return xs, us


def make_loss(model, objective):
    x0 = jnp.asarray(model.rest_state())

    def loss(params):
        xs, _ = _unroll(params, model, objective.horizon, x0)
        return objective_value(objective.variant, stage_terms(xs, jnp), jnp)

    return loss


def rollout_loss(policy, model, objective):
    """Loss of the unrolled policy and the tape for its gradient."""
    tape = record(make_loss(model, objective), policy.params)
    value = float(tape.value)
    if not np.isfinite(value):
        raise NonFiniteState("rollout produced a non-finite loss")
    return value, tape


def simulate(policy, model, horizon):
    """Numpy rollout returning a :class:`Trajectory` (states x_0..x_T, actions u_0..u_{T-1})."""
    x = model.rest_state()
    states, actions = [x], []
    for _ in range(horizon):
        u = policy_force(policy.params, x, model.force_limit)
        x = model.transition(x, u)
        states.append(x)
        actions.append(u)
    return Trajectory(np.array(states), np.array(actions))


def mean_cos_tail(states, tail=25):
    """Mean of ``cos th`` over both links and the last ``tail`` states."""
    return float(np.mean(np.cos(states[-tail:, :2])))


@dataclass
class DpcSettings:
    objective: str = GOAL
    optimizer: str = "soap"
    iterations: int = 2000
    horizon: int = 75
    hidden: tuple = (64, 64)
    lr: float = 3e-3
    precondition_frequency: int = 10  # 0 disables the eigenbasis refresh
    shampoo_beta: float = 0.95
    init_scale: float = 1.0
    max_failures: int = 3


def train_dpc(settings, model, seed):
    """Optimise a fresh policy; returns a :class:`DpcRun` with the learning curve."""
    objective = DpcObjective(settings.objective, settings.horizon)
    net = MLP.create((FEATURES, *settings.hidden, 1), rngs.stream(seed, "net-init"), settings.init_scale)
    kwargs = dict(lr=settings.lr)
    if settings.optimizer == "soap":
        kwargs.update(precondition_frequency=settings.precondition_frequency or None,
                      shampoo_beta=settings.shampoo_beta)
    state, step = make_optimizer(settings.optimizer, **kwargs)
    x0 = jnp.asarray(model.rest_state())

    def metrics(params):
        xs, _ = _unroll(params, model, objective.horizon + 1, x0)
        q = stage_terms(xs[:-1], jnp)
        return objective_value(objective.variant, q, jnp), jnp.mean(jnp.cos(xs[-25:, :2])), jnp.mean(q)

    loss_fn = make_loss(model, objective)
    grad_fn = jax.jit(jax.value_and_grad(loss_fn))
    metric_fn = jax.jit(metrics)
    run = DpcRun(policy=net, seed=seed, objective=settings.objective, optimizer=settings.optimizer)
    params = net.params
    streak = 0
    for it in range(settings.iterations):
        value, grads = grad_fn(params)
        grads = jax.tree_util.tree_map(np.asarray, grads)
        finite = np.isfinite(float(value)) and all(np.all(np.isfinite(g)) for g in jax.tree_util.tree_leaves(grads))
        if not finite:
            run.failures += 1
            streak += 1
            log.warning("seed %d iteration %d: non-finite loss or gradient, step skipped", seed, it)
            if streak >= settings.max_failures:
                raise NonFiniteState(f"{streak} consecutive non-finite iterations at {it}")
            continue
        streak = 0
        params = step(state, params, grads)
        loss, cos_tail, raw = (float(v) for v in metric_fn(params))
        run.losses.append(loss)
        run.mean_cos.append(cos_tail)
        run.raw_classical.append(float(np.exp(-raw)))
    run.policy = MLP(net.sizes, [{k: np.asarray(v) for k, v in layer.items()} for layer in params])
    run.final = simulate(run.policy, model, settings.horizon)
    return run
