"""Command-line runner: ``goalctl <subcommand> [options]``.

Every subcommand writes CSV artifacts, the resolved config and a ``manifest.json``
into its output directory (``--out``, else ``run.out_dir``, else
``$GOALCTL_OUT/<subcommand>``). Exit status: 0 success, 1 invalid input, 2 runtime
failure.
"""

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

import goalctl
from goalctl import belief as bf
from goalctl import config as cfgmod
from goalctl import plotting
from goalctl import reward as rw
from goalctl.analysis import (GridSpec, LinearPolicy, corollary1_study, dlqr, kalman_filter,
                              verify_lqr_bound, verify_prob_bound)
from goalctl.analysis.objectives import BoundReport
from goalctl.analysis.corollary1 import StudyResult
from goalctl.env import default_params, load_params, make_model
from goalctl.errors import ConfigError, GoalCtlError, SchemaMismatch
from goalctl.nnopt import checkpoint
from goalctl.rng import parse_seeds, stream
from goalctl.runio import RunManifest, output_root, write_csv

log = logging.getLogger("goalctl")

COMMANDS = ("verify-thm1", "verify-cor2", "corollary1-study", "dpc", "rl-train", "rl-eval",
            "filter-demo", "plot")
NATURAL_ENV = {"verify-thm1": "linear_gaussian", "verify-cor2": "linear_gaussian",
               "dpc": "double_pendulum", "rl-train": "cstr", "rl-eval": "cstr",
               "filter-demo": "linear_gaussian"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([message])


def build_parser():
    parser = _Parser(prog="goalctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name in COMMANDS[:-1]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--seeds", help='seed list, e.g. "0..99" or "1,5,7"')
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "dpc":
            p.add_argument("--objective", choices=("goal", "classical"))
            p.add_argument("--optimizer", choices=("adam", "soap"))
            p.add_argument("--iterations", type=int)
        if name in ("rl-train", "rl-eval"):
            p.add_argument("--episodes", type=int, help="evaluation episodes")
        if name == "rl-eval":
            p.add_argument("--checkpoints", required=True, help="output directory of rl-train")
        if name == "filter-demo":
            p.add_argument("--particles", type=int)
    p = sub.add_parser("plot")
    p.add_argument("--kind", required=True, choices=plotting.KINDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--label", action="append", help="panel label per input (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _resolve(args):
    data = cfgmod.load_dict(args.config) if args.config else {}
    cfg = cfgmod.from_dict(data)
    if args.seeds is not None:
        seeds = parse_seeds(args.seeds)
        if not seeds:
            raise ConfigError(["--seeds: empty seed list"])
        cfg.run.seeds = seeds
    if not cfg.env.kind:
        cfg.env.kind = NATURAL_ENV.get(args.command, "linear_gaussian")
    if args.command == "dpc":
        over = {k: getattr(args, k) for k in ("objective", "optimizer", "iterations") if getattr(args, k) is not None}
        cfg.dpc = replace(cfg.dpc, **over)
    if args.command in ("rl-train", "rl-eval") and args.episodes is not None:
        cfg.rl = replace(cfg.rl, eval_episodes=args.episodes)
    if args.command == "filter-demo" and args.particles is not None:
        cfg.filter.particles = args.particles
    return cfg


def _model(cfg):
    params = load_params(cfg.env.path) if cfg.env.path else default_params(cfg.env.kind)
    params = cfgmod.merge_tables(params, cfg.env.params)
    params["kind"] = cfg.env.kind
    try:
        return make_model(params=params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"env: {exc}"]) from None


def _random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T / n + 0.1 * np.eye(n))


def _stabilizing_policy(model, rng):
    """LQR gain for random SPD weights (stabilizing for a stabilizable pair)."""
    n, m = model.state_dim, model.action_dim
    return LinearPolicy(dlqr(model.A, model.B, _random_spd(rng, n), _random_spd(rng, m)))


class Run:
    def __init__(self, command, cfg, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, cfgmod.config_hash(cfg), list(cfg.run.seeds), goalctl.__version__)
        (self.out / "config.toml").write_text(cfgmod.dumps(cfg))
        self.manifest.add(self.out / "config.toml", self.out)
        self.t0 = time.perf_counter()

    def csv(self, name, header, rows):
        path = write_csv(self.out / name, header, rows)
        self.manifest.add(path, self.out)
        return path

    def file(self, path):
        self.manifest.add(path, self.out)

    def close(self):
        self.manifest.wall_clock = round(time.perf_counter() - self.t0, 3)
        return self.manifest.write(self.out)


def cmd_verify(run, cfg, which):
    model = _model(cfg)
    if not hasattr(model, "density_bound"):
        raise ConfigError([f"env.kind: {cfg.env.kind} has no transition density"])
    v = cfg.verify
    rows = []
    for seed in cfg.run.seeds:
        rng = stream(seed, "analysis")
        policy = _stabilizing_policy(model, rng)
        if which == "thm1":
            rep = verify_prob_bound(policy, model, v.gamma, v.n, v.horizon, rng, v.deterministic)
        else:
            M = np.asarray(cfg.reward.M, float) if cfg.reward.M else _random_spd(rng, model.state_dim)
            R = np.asarray(cfg.reward.R, float) if cfg.reward.R else _random_spd(rng, model.action_dim)
            rep = verify_lqr_bound(policy, model, M, R, v.gamma, v.n, v.horizon, rng, v.deterministic)
        rows.append([seed, *rep.row()])
        log.info("seed %d: %s", seed, rep)
    run.csv("bound_report.csv", ["seed", *BoundReport.FIELDS], rows)
    held = sum(r[BoundReport.FIELDS.index("holds") + 1] for r in rows)
    print(f"{held}/{len(rows)} seeds satisfy the bound")


def cmd_corollary1(run, cfg):
    c = cfg.corollary1
    grid = GridSpec(half_width=c.half_width, n_states=c.n_states,
                    action_half_width=c.half_width * abs(c.a / c.b), n_actions=c.n_actions)
    rows = []
    for seed in cfg.run.seeds:
        res = corollary1_study(a=c.a, b=c.b, noise_var=c.noise_var, gamma=c.gamma, lqr_q=c.lqr_q,
                               lqr_r=c.lqr_r, n=c.n, horizon=c.horizon, seed=seed, grid=grid, x0_std=c.x0_std)
        rows.append([seed, *res.row(), res.significant])
        print(f"seed {seed}: J_dp={res.j_dp:.6f} J_lqr={res.j_lqr:.6f} gap={res.gap:.4g} "
              f"(se {res.gap_se:.2g})")
    run.csv("corollary1.csv", ["seed", *StudyResult.FIELDS, "significant"], rows)


def cmd_dpc(run, cfg):
    from goalctl.dpc import mean_cos_tail, train_dpc

    model = _model(cfg)
    if cfg.env.kind != "double_pendulum":
        raise ConfigError(["env.kind: dpc needs the double_pendulum environment"])
    s = cfg.dpc
    summary = []
    for seed in cfg.run.seeds:
        res = train_dpc(s, model, seed)
        tag = f"{s.objective}_{s.optimizer}_seed{seed}"
        run.csv(f"curve_{tag}.csv", ["iteration", "loss", "mean_cos", "raw_classical"],
                [[i, l, c, r] for i, (l, c, r) in enumerate(zip(res.losses, res.mean_cos, res.raw_classical))])
        x = res.final.states
        u = np.append(res.final.actions, np.nan)
        run.csv(f"rollout_{tag}.csv", ["t", "theta1", "theta2", "cos_theta1", "cos_theta2", "u"],
                [[t, x[t, 0], x[t, 1], np.cos(x[t, 0]), np.cos(x[t, 1]), u[t]] for t in range(len(x))])
        path = run.out / f"policy_{tag}.ckpt"
        checkpoint.save(path, res.policy, {"objective": s.objective, "optimizer": s.optimizer, "seed": seed})
        run.file(path)
        tail = mean_cos_tail(x)
        summary.append([seed, s.objective, s.optimizer, res.losses[-1] if res.losses else np.nan, tail,
                        res.failures])
        print(f"seed {seed}: mean cos (last 25 steps) = {tail:.3f}")
    run.csv(f"summary_{s.objective}_{s.optimizer}.csv",
            ["seed", "objective", "optimizer", "final_loss", "mean_cos_tail", "failures"], summary)


def _bundle_meta(bundle, name):
    return {"agent": name, "state_center": bundle.state_center.tolist(),
            "state_scale": bundle.state_scale.tolist(), "action_low": bundle.action_low.tolist(),
            "action_high": bundle.action_high.tolist()}


def _write_traces(run, bundle, model, settings, name, regime, kind, seed):
    from goalctl.rl.episode import run_episode
    from goalctl.rl.train import FULL, PARTIAL, make_reward

    eval_regime = PARTIAL if regime == PARTIAL else FULL
    spec = make_reward(settings, eval_regime, kind, model)
    for p in sorted({10, settings.eval_particles}):
        res = run_episode(bundle, model, eval_regime, spec, p, stream(seed, "eval/0"), train=False,
                          length=settings.length, gamma=settings.gamma, psi_period=settings.psi_period,
                          psi_jitter=settings.psi_jitter, observe_state=False)
        run.csv(f"trace_{name}_seed{seed}_p{p}.csv",
                ["t", "true_cb", "est_cb", "min_cb", "max_cb", "reward"], res.trace)


def cmd_rl_train(run, cfg):
    from goalctl.rl.train import EVAL_FIELDS, agent_name, train_agents

    model = _model(cfg)
    if cfg.env.kind != "cstr":
        raise ConfigError(["env.kind: the six-agent study runs on the cstr environment"])
    rows = []
    for seed in cfg.run.seeds:
        def save(name, bundle, seed=seed):
            path = run.out / f"actor_{name}_seed{seed}.ckpt"
            checkpoint.save(path, bundle.actor, _bundle_meta(bundle, name))
            run.file(path)

        bundles, seed_rows = train_agents(cfg.rl, seed, model, on_agent=save)
        rows.extend(seed_rows)
        for regime, kind in cfg.rl.agents:
            name = agent_name(regime, kind)
            _write_traces(run, bundles[name], model, cfg.rl, name, regime, kind, seed)
    run.csv("eval.csv", EVAL_FIELDS, rows)
    _print_medians(rows)


def cmd_rl_eval(run, cfg, ckpt_dir):
    from goalctl.rl.agent import create_bundle
    from goalctl.rl.train import EVAL_FIELDS, agent_name, evaluate_agent

    model = _model(cfg)
    rows = []
    for seed in cfg.run.seeds:
        for regime, kind in cfg.rl.agents:
            name = agent_name(regime, kind)
            path = Path(ckpt_dir) / f"actor_{name}_seed{seed}.ckpt"
            if not path.exists():
                raise ConfigError([f"--checkpoints: missing {path.name}"])
            actor, meta = checkpoint.load(path)
            bundle = create_bundle(model.state_dim, model.action_dim, np.random.default_rng(0),
                                   hidden=tuple(actor.sizes[1:-1]), state_center=meta["state_center"],
                                   state_scale=meta["state_scale"], action_low=meta["action_low"],
                                   action_high=meta["action_high"])
            bundle.actor = actor
            rows.extend(evaluate_agent(bundle, cfg.rl, model, regime, kind, seed))
            _write_traces(run, bundle, model, cfg.rl, name, regime, kind, seed)
    run.csv("eval.csv", EVAL_FIELDS, rows)
    _print_medians(rows)


def _print_medians(rows):
    agents = sorted({r[0] for r in rows})
    for a in agents:
        vals = [r[-1] for r in rows if r[0] == a]
        print(f"{a:>18}: median time near goal {np.median(vals):8.3f} over {len(vals)} episodes")


def cmd_filter_demo(run, cfg):
    model = _model(cfg)
    f = cfg.filter
    for seed in cfg.run.seeds:
        rng_env, rng_pf = stream(seed, "env"), stream(seed, "filter")
        if model.kind == "linear_gaussian":
            _filter_linear(run, model, f, seed, rng_env, rng_pf)
        elif model.kind == "cstr":
            _filter_cstr(run, model, f, seed, rng_env, rng_pf)
        else:
            raise ConfigError([f"env.kind: no filter demo for {model.kind}"])


def _filter_linear(run, model, f, seed, rng_env, rng_pf):
    x = model.sample_states(rng_env)
    u = np.zeros(model.action_dim)
    ys, xs = [], []
    b = bf.init_from_prior(model, f.particles, rng_pf)
    rows = []
    for t in range(f.steps):
        if t > 0:
            x = model.transition(x, u, None, rng_env)
            b = bf.predict(b, model, u, rng_pf, f.psi_jitter)
        y = model.measure(x, rng_env)
        xs.append(x)
        ys.append(y)
        b = bf.update(b, model, y)
        mean = bf.expectation(b)
        if bf.needs_resample(b):
            b = bf.resample(b, rng_pf)
        rows.append((t, mean))
    kf = kalman_filter(model, ys, [u] * f.steps)
    out = []
    for (t, mean), (m, _), x in zip(rows, kf, xs):
        for d in range(model.state_dim):
            out.append([t, d, x[d], mean[d], m[d]])
    err = np.array([[r[3] - r[4] for r in out if r[0] == t] for t in range(f.steps)])
    rmse = float(np.sqrt(np.mean(np.sum(err**2, axis=1))))
    run.csv(f"filter_seed{seed}.csv", ["t", "dim", "true", "pf_mean", "kf_mean"], out)
    print(f"seed {seed}: particle vs Kalman posterior-mean RMSE {rmse:.4g}")


def _filter_cstr(run, model, f, seed, rng_env, rng_pf):
    x, psi = model.sample_initial(rng_env)
    u = 0.5 * (model.action_low + model.action_high)
    goal = np.zeros(model.state_dim)
    goal[1] = 0.6
    spec = rw.measurement_conditioned(0.05, goal, dims=(1,))
    b = bf.update(bf.init_from_prior(model, f.particles, rng_pf), model, model.measure(x, rng_env))
    rows = []
    for t in range(f.steps):
        if bf.needs_resample(b):
            b = bf.resample(b, rng_pf)
        x = model.transition(x, u, psi, rng_env)
        b = bf.update(bf.predict(b, model, u, rng_pf, f.psi_jitter), model, model.measure(x, rng_env))
        cb = b.states[:, 1]
        rows.append([t, x[1], float(np.sum(b.weights * cb)), cb.min(), cb.max(), rw.belief_reward(spec, b)])
    run.csv(f"trace_seed{seed}.csv", ["t", "true_cb", "est_cb", "min_cb", "max_cb", "reward"], rows)
    print(f"seed {seed}: final c_B {x[1]:.4f}, estimate {rows[-1][2]:.4f}")


def cmd_plot(args):
    out = plotting.plot(args.kind, args.inputs, args.out, args.label)
    print(out)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            cmd_plot(args)
            return 0
        cfg = _resolve(args)
        out = args.out or cfg.run.out_dir or output_root() / args.command
        run = Run(args.command, cfg, out)
        if args.command == "verify-thm1":
            cmd_verify(run, cfg, "thm1")
        elif args.command == "verify-cor2":
            cmd_verify(run, cfg, "cor2")
        elif args.command == "corollary1-study":
            cmd_corollary1(run, cfg)
        elif args.command == "dpc":
            cmd_dpc(run, cfg)
        elif args.command == "rl-train":
            cmd_rl_train(run, cfg)
        elif args.command == "rl-eval":
            cmd_rl_eval(run, cfg, args.checkpoints)
        elif args.command == "filter-demo":
            cmd_filter_demo(run, cfg)
        run.close()
    except (ConfigError, SchemaMismatch, FileNotFoundError) as exc:
        problems = getattr(exc, "problems", None) or [str(exc)]
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    except (GoalCtlError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
