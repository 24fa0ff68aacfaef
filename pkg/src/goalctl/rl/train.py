"""Six-agent study: {full, partial, minimal} x {goal-conditioned, quadratic}."""

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from goalctl import reward as rw
from goalctl.env import make_model
from goalctl.rl.agent import create_bundle
from goalctl.rl.buffer import ReplayBuffer
from goalctl.rl.episode import FULL, MINIMAL, PARTIAL, run_episode
from goalctl.rl.sac import SacLearner
from goalctl.rng import stream

log = logging.getLogger(__name__)

GOAL_REWARD, QUAD_REWARD = "goal", "quadratic"
AGENTS = tuple((reg, rew) for rew in (GOAL_REWARD, QUAD_REWARD) for reg in (FULL, PARTIAL, MINIMAL))
EVAL_FIELDS = ("agent", "regime", "reward", "seed", "episode", "time_near_goal")


@dataclass
class RlSettings:
    episodes: int = 300
    length: int = 100
    particles: int = 100
    eval_particles: int = 100
    eval_episodes: int = 1000
    batch: int = 256
    buffer: int = 100_000
    warmup: int = 1000
    updates_per_step: float = 1.0
    gamma: float = 0.99
    polyak: float = 0.995
    lr: float = 3e-4
    hidden: tuple = (64, 64)
    init_alpha: float = 0.1
    twin: bool = True
    goal: float = 0.6
    epsilon: float = 0.05
    sigma: float = 0.05
    quad_weight: float = 100.0
    psi_period: int = 20
    psi_jitter: float = 0.01
    agents: tuple = field(default=AGENTS)


def agent_name(regime, reward):
    return f"{reward}-{regime}"


def make_reward(settings, regime, kind, model):
    goal = np.zeros(model.state_dim)
    goal[1] = settings.goal
    if kind == QUAD_REWARD:
        return rw.quadratic([[settings.quad_weight]], goal, dims=(1,))
    if regime == MINIMAL:
        return rw.gaussian_shaped([[1.0 / settings.epsilon**2]], goal, dims=(1,))
    return rw.measurement_conditioned(settings.epsilon, goal, dims=(1,))


def _state_box(model):
    center = 0.5 * (model.x0_low + model.x0_high)
    scale = np.maximum(0.5 * (model.x0_high - model.x0_low), 1e-6)
    return center, scale


def train_agent(settings, model, regime, kind, seed):
    """Train one agent; returns ``(bundle, per-episode returns)``."""
    name = agent_name(regime, kind)
    rng_net = stream(seed, f"net-init/{name}")
    rng_env = stream(seed, f"env/{name}")
    rng_upd = stream(seed, f"exploration/{name}")
    center, scale = _state_box(model)
    bundle = create_bundle(model.state_dim, model.action_dim, rng_net, hidden=tuple(settings.hidden),
                           twin=settings.twin, state_center=center, state_scale=scale,
                           action_low=model.action_low, action_high=model.action_high,
                           init_alpha=settings.init_alpha, lr=settings.lr)
    spec = make_reward(settings, regime, kind, model)
    p = 1 if regime == MINIMAL else settings.particles
    buf = ReplayBuffer(settings.buffer, p, model.state_dim, model.action_dim)
    fixed = model.nominal_psi if regime == MINIMAL else None
    learner = SacLearner(bundle, settings.gamma, settings.polyak)
    returns = []
    credit = 0.0
    for ep in range(settings.episodes):
        res = run_episode(bundle, model, regime, spec, p, rng_env, train=True, length=settings.length,
                          gamma=settings.gamma, psi_period=settings.psi_period,
                          psi_jitter=settings.psi_jitter, fixed_psi=fixed)
        for tr in res.transitions:
            buf.add(tr)
        returns.append(float(np.sum(res.trajectory.rewards)))
        if len(buf) < settings.warmup:
            continue
        credit += settings.updates_per_step * len(res.transitions)
        while credit >= 1.0:
            learner.update(buf.sample(settings.batch, rng_upd), rng_upd)
            credit -= 1.0
        # the next episode acts with the updated networks
        learner.write_back()
        log.info("%s episode %d return %.3f", name, ep, returns[-1])
    return bundle, returns


def evaluate_agent(bundle, settings, model, regime, kind, seed, episodes=None):
    """Deterministic evaluation on random fixed-scenario episodes (time-varying for partial).

    Every agent sees the same initial states and scenarios for a given ``seed``.
    """
    name = agent_name(regime, kind)
    spec = make_reward(settings, FULL if regime == MINIMAL else regime, kind, model)
    eval_regime = PARTIAL if regime == PARTIAL else FULL
    rows = []
    for ep in range(settings.eval_episodes if episodes is None else episodes):
        rng = stream(seed, f"eval/{ep}")
        res = run_episode(bundle, model, eval_regime, spec, settings.eval_particles, rng, train=False,
                          length=settings.length, gamma=settings.gamma, psi_period=settings.psi_period,
                          psi_jitter=settings.psi_jitter, observe_state=False)
        tng = rw.time_near_goal(res.trajectory.states[1:], settings.sigma, settings.goal)
        rows.append((name, regime, kind, seed, ep, tng))
    return rows


def train_agents(settings, seed, model=None, on_agent=None):
    """Train and evaluate every configured agent.

    Returns ``(bundles, rows)`` with ``bundles`` keyed by agent name and ``rows``
    matching :data:`EVAL_FIELDS`.
    """
    model = model or make_model("cstr")
    bundles, rows = {}, []
    for regime, kind in settings.agents:
        t0 = time.perf_counter()
        bundle, _ = train_agent(settings, model, regime, kind, seed)
        bundles[agent_name(regime, kind)] = bundle
        rows.extend(evaluate_agent(bundle, settings, model, regime, kind, seed))
        log.info("%s done in %.1fs", agent_name(regime, kind), time.perf_counter() - t0)
        if on_agent is not None:
            on_agent(agent_name(regime, kind), bundle)
    return bundles, rows
