from goalctl.rl.agent import AgentBundle, create_bundle, particle_actor, particle_critic, sample_action
from goalctl.rl.buffer import BeliefTransition, ReplayBuffer
from goalctl.rl.episode import FULL, MINIMAL, PARTIAL, REGIMES, EpisodeResult, run_episode
from goalctl.rl.sac import sac_update
from goalctl.rl.train import AGENTS, EVAL_FIELDS, RlSettings, evaluate_agent, train_agent, train_agents
