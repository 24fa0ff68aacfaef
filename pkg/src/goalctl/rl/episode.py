"""Closed-loop episodes of an agent acting on a particle belief.

Regimes
-------
``full``     one scenario per episode drawn from the prior; the agent acts on a filter.
``partial``  the true scenario is redrawn every ``psi_period`` steps.
``minimal``  one fixed scenario for all training episodes and direct state access.
"""

from dataclasses import dataclass
import logging

import numpy as np

from goalctl import belief as bf
from goalctl import reward as rw
from goalctl.errors import DegenerateWeights
from goalctl.rl.agent import particle_actor, sample_action
from goalctl.rl.buffer import BeliefTransition
from goalctl.trajectory import Trajectory

log = logging.getLogger(__name__)

FULL, PARTIAL, MINIMAL = "full", "partial", "minimal"
REGIMES = (FULL, PARTIAL, MINIMAL)

TRACE_FIELDS = ("t", "true_cb", "est_cb", "min_cb", "max_cb", "reward")


@dataclass
class EpisodeResult:
    trajectory: Trajectory
    transitions: list
    trace: list
    resets: int = 0


def _fresh_belief(model, p, rng, y=None):
    """Prior belief, conditioned on ``y`` when possible."""
    b = bf.init_from_prior(model, p, rng)
    if y is None:
        return b
    try:
        return bf.update(b, model, y)
    except DegenerateWeights:
        return b


def _singleton(x, psi):
    return bf.ParticleBelief.uniform(np.asarray(x)[None, :], np.asarray(psi)[None, :])


def run_episode(bundle, model, regime, reward_spec, p, rng, train=True, length=100,
                gamma=0.99, psi_period=20, psi_jitter=0.01, fixed_psi=None,
                observe_state=None, index=1):
    """Roll one episode and return the true trajectory plus belief transitions.

    ``observe_state`` (default: ``regime == minimal``) bypasses the filter and feeds the
    true state to the agent as a one-particle belief. ``fixed_psi`` pins the true
    scenario; otherwise it is drawn from the prior.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if observe_state is None:
        observe_state = regime == MINIMAL
    x, psi = model.sample_initial(rng)
    if fixed_psi is not None:
        psi = np.asarray(fixed_psi, float)

    y = model.measure(x, rng)
    b = _singleton(x, psi) if observe_state else _fresh_belief(model, p, rng, y)
    if not observe_state and bf.needs_resample(b):
        b = bf.resample(b, rng)

    states, actions, observations, rewards = [x], [], [y], []
    transitions, trace = [], []
    resets = 0
    for t in range(length):
        if regime == PARTIAL and t > 0 and t % psi_period == 0:
            psi = model.sample_psi(rng)
        u = sample_action(bundle, b, rng) if train else particle_actor(bundle, b)
        u = model.clip_action(u)
        x = model.transition(x, u, psi, rng)
        y = model.measure(x, rng)

        if observe_state:
            post = _singleton(x, psi)
            r = float(rw.stage_reward(reward_spec, x, u, model=model))
        else:
            prior = bf.predict(b, model, u, rng, psi_jitter)
            try:
                post = bf.update(prior, model, y)
            except DegenerateWeights:
                log.warning("weights degenerate at t=%d; resetting belief to the prior", t)
                resets += 1
                post = _fresh_belief(model, p, rng, y)
            r = rw.belief_reward(reward_spec, post, u, model)

        transitions.append(BeliefTransition(b.states, b.weights, u, r, post.states, post.weights,
                                            y, False))
        cb = post.states[:, index]
        trace.append((t, float(x[index]), float(np.sum(post.weights * cb)), float(cb.min()),
                      float(cb.max()), r))
        b = bf.resample(post, rng) if (not observe_state and bf.needs_resample(post)) else post
        states.append(x)
        actions.append(u)
        observations.append(y)
        rewards.append(r)

    traj = Trajectory(np.array(states), np.array(actions), np.array(observations),
                      np.array(rewards), gamma)
    return EpisodeResult(traj, transitions, trace, resets)
