"""Experiment runner: seed sweeps, persistence, evaluation, cross-checks.

Directory layout per experiment:

    out/<name>/config.json
    out/<name>/seed-<s>/curve.csv           (append-only during training)
    out/<name>/seed-<s>/checkpoint_best.json
    out/<name>/seed-<s>/checkpoint_final.json
    out/<name>/seed-<s>/summary.json
    out/<name>/aggregate.json
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .bridge import BridgeClient, BridgeEnv
from .curves import CurveWriter, LearningCurve, aggregate_mean_band, read_curve
from .dense import DenseNet
from .envs import env_spec, episodes_to_threshold, is_solved, make_env
from .errors import BridgeError, ConfigError
from .heads import softmax
from .noise import EXACT, NoiseModel
from .policy import QuantumPolicy
from .ppo import train
from .presets import ExperimentConfig

XCHECK_RANGES = {
    "cartpole-v1": [(-2.3, 2.3), (-2.0, 2.0), (-0.2, 0.2), (-2.0, 2.0)],
    "cartpole-v0": [(-2.3, 2.3), (-2.0, 2.0), (-0.2, 0.2), (-2.0, 2.0)],
    "acrobot-v1": [
        (-2.9, 2.9),
        (-2.9, 2.9),
        (-4 * np.pi * 0.9, 4 * np.pi * 0.9),
        (-9 * np.pi * 0.9, 9 * np.pi * 0.9),
    ],
}


def _model_from_doc(doc: dict):
    info = doc["model"]
    if info["kind"] == "svqc":
        return QuantumPolicy.from_dict(info, doc["actor"])
    return DenseNet.from_dict(info, doc["actor"])


def make_checkpoint(config: ExperimentConfig, model_info: dict,
                    actor_params: dict, critic_params: dict, episode,
                    train_state=None, trailing=None) -> dict:
    return {
        "version": ckpt.CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "fingerprint": config.fingerprint(),
        "model": model_info,
        "actor": {k: np.asarray(v) for k, v in actor_params.items()},
        "critic": {k: np.asarray(v) for k, v in critic_params.items()},
        "episode": episode,
        "trailing": trailing,
        "train_state": train_state,
    }


def run_seed(config: ExperimentConfig, seed: int, out_dir=None,
             bridge_command=None) -> dict:
    """Train one seed, persist curve + checkpoints, return the summary."""
    spec = env_spec(config.env_id)
    trainer_cfg = replace(config.trainer, seed=seed)
    env = make_env(config.env_id, bridge_command or config.bridge_command)
    actor, critic = config.build_models(seed)

    writer = None
    seed_dir = None
    if out_dir is not None:
        seed_dir = Path(out_dir) / config.name / f"seed-{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        writer = CurveWriter(seed_dir / "curve.csv")
    try:
        result = train(
            env, actor, critic, trainer_cfg,
            freeze_threshold=config.freeze_threshold,
            freeze_window=config.freeze_window,
            on_episode=writer,
        )
    finally:
        if writer is not None:
            writer.close()
        if hasattr(env, "close"):
            env.close()

    rewards = result.episode_rewards
    summary = {
        "config": config.name,
        "fingerprint": config.fingerprint(),
        "seed": seed,
        "episodes": len(rewards),
        "solved": is_solved(rewards, spec),
        "episodes_to_threshold": episodes_to_threshold(rewards, spec),
        "best_trailing": None if result.best is None else result.best["trailing"],
        "final_avg20": float(np.mean(rewards[-20:])) if rewards else None,
        "actor_params": actor.param_count(),
        "total_params": actor.param_count() + critic.param_count(),
    }
    if seed_dir is not None:
        final_doc = make_checkpoint(config, actor.to_dict(), actor.params,
                                    critic.params, len(rewards),
                                    train_state=result.state)
        ckpt.save(final_doc, seed_dir / "checkpoint_final.json")
        if result.best is not None:
            best_doc = make_checkpoint(config, actor.to_dict(),
                                       result.best["actor"], result.best["critic"],
                                       result.best["episode"],
                                       trailing=result.best["trailing"])
            ckpt.save(best_doc, seed_dir / "checkpoint_best.json")
        (seed_dir / "summary.json").write_text(json.dumps(summary, indent=1))
    return summary


def _run_seed_worker(config_dict, seed, out_dir, bridge_command):
    config = ExperimentConfig.from_dict(config_dict)
    return run_seed(config, seed, out_dir=out_dir, bridge_command=bridge_command)


def run_experiment(config: ExperimentConfig, seeds, out_dir=None, workers=1,
                   bridge_command=None) -> dict:
    """One training run per seed plus the aggregate report."""
    seeds = list(seeds)
    if out_dir is not None:
        exp_dir = Path(out_dir) / config.name
        exp_dir.mkdir(parents=True, exist_ok=True)
        (exp_dir / "config.json").write_text(
            ckpt.dumps({"config": config.to_dict(),
                        "fingerprint": config.fingerprint()})
        )
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_seed_worker, config.to_dict(), s,
                            None if out_dir is None else str(out_dir),
                            bridge_command)
                for s in seeds
            ]
            summaries = [f.result() for f in futures]
    else:
        summaries = [
            run_seed(config, s, out_dir=out_dir, bridge_command=bridge_command)
            for s in seeds
        ]
    etts = [s["episodes_to_threshold"] for s in summaries]
    finite = sorted(e for e in etts if e is not None)
    aggregate = {
        "config": config.name,
        "fingerprint": config.fingerprint(),
        "seeds": seeds,
        "summaries": summaries,
        "n_solved": sum(1 for s in summaries if s["episodes_to_threshold"] is not None),
        "median_episodes_to_threshold": _median_with_unreached(etts),
        "best_seed": None if not finite else
            summaries[etts.index(finite[0])]["seed"],
    }
    if out_dir is not None:
        curves = [
            read_curve(Path(out_dir) / config.name / f"seed-{s}" / "curve.csv")
            for s in seeds
        ]
        aggregate["band"] = aggregate_mean_band(curves)
        (Path(out_dir) / config.name / "aggregate.json").write_text(
            json.dumps(aggregate, indent=1)
        )
    return aggregate


def _median_with_unreached(etts):
    """Median where unreached runs count as +inf; None if the median itself
    is unreached."""
    vals = sorted((float("inf") if e is None else e) for e in etts)
    mid = vals[len(vals) // 2] if len(vals) % 2 else (
        (vals[len(vals) // 2 - 1] + vals[len(vals) // 2]) / 2
    )
    return None if mid == float("inf") else mid


def resume_seed(checkpoint_path, max_episodes=None, out_dir=None,
                bridge_command=None):
    """Continue training from a final checkpoint; bit-exact in exact mode.

    Returns (summary, result) so callers can compare against an
    uninterrupted run.
    """
    doc = ckpt.load(checkpoint_path)
    config = ExperimentConfig.from_dict(doc["config"])
    if doc.get("train_state") is None:
        raise ConfigError("checkpoint has no optimizer/rng state to resume from")
    spec = env_spec(config.env_id)
    actor = _model_from_doc(doc)
    if config.model == "svqc":
        critic = QuantumPolicy(config.circuit, 1, config.reuse, params=doc["critic"])
    else:
        critic = DenseNet((spec.obs_dim, *config.hidden, 1),
                          activation=config.activation, params=doc["critic"])
    trainer_cfg = config.trainer
    if max_episodes is not None:
        trainer_cfg = replace(trainer_cfg, max_episodes=max_episodes)
    env = make_env(config.env_id, bridge_command or config.bridge_command)
    writer = None
    if out_dir is not None:
        seed_dir = Path(out_dir)
        seed_dir.mkdir(parents=True, exist_ok=True)
        writer = CurveWriter(seed_dir / "curve_resumed.csv")
    try:
        result = train(
            env, actor, critic, trainer_cfg,
            freeze_threshold=config.freeze_threshold,
            freeze_window=config.freeze_window,
            on_episode=writer,
            resume=doc["train_state"],
        )
    finally:
        if writer is not None:
            writer.close()
        if hasattr(env, "close"):
            env.close()
    rewards = result.episode_rewards
    summary = {
        "config": config.name,
        "episodes": len(rewards),
        "solved": is_solved(rewards, spec),
        "episodes_to_threshold": episodes_to_threshold(rewards, spec),
    }
    return summary, result


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(checkpoint_path_or_doc, episodes=20, noise: NoiseModel = EXACT,
             greedy=True, seed=1234, bridge_command=None) -> dict:
    """Roll out a trained checkpoint; greedy argmax by default.

    Shot/readout/gate noise applies to the circuit readouts of svqc models;
    classical baselines always evaluate exactly.
    """
    doc = (checkpoint_path_or_doc if isinstance(checkpoint_path_or_doc, dict)
           else ckpt.load(checkpoint_path_or_doc))
    config = ExperimentConfig.from_dict(doc["config"])
    model = _model_from_doc(doc)
    spec = env_spec(config.env_id)
    rng = np.random.default_rng(seed)
    env = make_env(config.env_id, bridge_command or config.bridge_command)
    rewards = []
    try:
        for _ in range(episodes):
            obs = np.asarray(env.reset(seed=int(rng.integers(1 << 31))), dtype=np.float64)
            done = False
            total = 0.0
            while not done:
                if isinstance(model, QuantumPolicy) and not noise.is_exact:
                    logits = model.forward_noisy(obs, noise, rng)
                else:
                    logits = model.forward(obs[None])[0]
                if greedy:
                    action = int(np.argmax(logits))
                else:
                    probs = softmax(logits[None])[0]
                    action = int(rng.choice(len(probs), p=probs))
                obs, reward, done = env.step(action)
                obs = np.asarray(obs, dtype=np.float64)
                total += reward
            rewards.append(total)
    finally:
        if hasattr(env, "close"):
            env.close()
    rewards = np.asarray(rewards)
    return {
        "env_id": config.env_id,
        "episodes": int(episodes),
        "noise": noise.to_dict(),
        "greedy": bool(greedy),
        "rewards": rewards.tolist(),
        "mean": float(rewards.mean()),
        "stddev": float(rewards.std()),
        "first5_mean": float(rewards[:5].mean()),
        "first5_stddev": float(rewards[:5].std()),
    }


# ---------------------------------------------------------------------------
# environment cross-check
# ---------------------------------------------------------------------------

def xcheck(env_id: str, steps: int, bridge_command: str, seed=20240901) -> dict:
    """Drive the native and reference environments through identical
    injected states and actions; report the worst disagreement."""
    if env_id not in XCHECK_RANGES:
        raise ConfigError(f"xcheck does not support {env_id!r}")
    native = make_env(env_id)
    remote_id = {"cartpole-v0": "CartPole-v0", "cartpole-v1": "CartPole-v1",
                 "acrobot-v1": "Acrobot-v1"}[env_id]
    rng = np.random.default_rng(seed)
    ranges = XCHECK_RANGES[env_id]
    spec = env_spec(env_id)
    client = BridgeClient(bridge_command)
    try:
        remote = BridgeEnv(remote_id, client)
        if (remote.obs_dim, remote.n_actions) != (spec.obs_dim, spec.n_actions):
            raise BridgeError(
                f"bridge reports dims {(remote.obs_dim, remote.n_actions)}, "
                f"expected {(spec.obs_dim, spec.n_actions)}"
            )
        native.reset(seed=seed)
        remote.reset(seed=seed)
        max_dev = 0.0
        reward_mismatch = 0
        done_mismatch = 0
        for _ in range(steps):
            raw = [float(rng.uniform(lo, hi)) for lo, hi in ranges]
            action = int(rng.integers(spec.n_actions))
            native.inject_state(raw)
            native.steps = 0
            remote.inject_state(raw)
            obs_n, r_n, d_n = native.step(action)
            obs_r, r_r, d_r = remote.step(action)
            max_dev = max(max_dev, float(np.max(np.abs(obs_n - np.asarray(obs_r)))))
            reward_mismatch += int(r_n != r_r)
            done_mismatch += int(bool(d_n) != bool(d_r))
    finally:
        client.close()
    return {
        "env_id": env_id,
        "steps": int(steps),
        "max_abs_deviation": max_dev,
        "reward_mismatches": reward_mismatch,
        "done_mismatches": done_mismatch,
        "passed": max_dev < 1e-6 and reward_mismatch == 0 and done_mismatch == 0,
    }


def xcheck_fixture(env_id: str, fixture_path) -> dict:
    """Same report as xcheck, replayed against a recorded reference trace."""
    trace = json.loads(Path(fixture_path).read_text())
    native = make_env(env_id)
    native.reset(seed=0)
    max_dev = 0.0
    reward_mismatch = 0
    done_mismatch = 0
    for row in trace["injected"]:
        native.inject_state(row["state"])
        native.steps = 0
        obs, reward, done = native.step(row["action"])
        max_dev = max(max_dev, float(np.max(np.abs(obs - np.asarray(row["obs"])))))
        reward_mismatch += int(reward != row["reward"])
        done_mismatch += int(bool(done) != bool(row["done"]))
    return {
        "env_id": env_id,
        "steps": len(trace["injected"]),
        "max_abs_deviation": max_dev,
        "reward_mismatches": reward_mismatch,
        "done_mismatches": done_mismatch,
        "passed": max_dev < 1e-6 and reward_mismatch == 0 and done_mismatch == 0,
    }


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def report(in_dir) -> dict:
    """Aggregate every experiment under in_dir: episodes-to-threshold,
    parameter counts, mean/band series, and svqc-vs-fcn speedups."""
    in_dir = Path(in_dir)
    experiments = {}
    for config_file in sorted(in_dir.glob("*/config.json")):
        exp_dir = config_file.parent
        doc = ckpt.loads(config_file.read_text())
        config = ExperimentConfig.from_dict(doc["config"])
        spec = env_spec(config.env_id)
        curves = []
        seed_entries = []
        for curve_file in sorted(exp_dir.glob("seed-*/curve.csv")):
            curve = read_curve(curve_file)
            curves.append(curve)
            ett = episodes_to_threshold(curve.rewards, spec)
            seed_entries.append({
                "seed": int(curve_file.parent.name.split("-", 1)[1]),
                "episodes": len(curve),
                "episodes_to_threshold": ett,
                "final_avg20": curve.trailing_mean(20),
            })
        if not curves:
            continue
        actor, critic = config.build_models(0)
        etts = [e["episodes_to_threshold"] for e in seed_entries]
        experiments[config.name] = {
            "env_id": config.env_id,
            "model": config.model,
            "fingerprint": doc["fingerprint"],
            "actor_params": actor.param_count(),
            "actor_plus_critic_params": actor.param_count() + critic.param_count(),
            "seeds": seed_entries,
            "median_episodes_to_threshold": _median_with_unreached(etts),
            "band": aggregate_mean_band(curves),
        }
    speedups = {}
    for name, entry in experiments.items():
        if entry["model"] != "svqc":
            continue
        for other, fcn in experiments.items():
            if fcn["model"] == "fcn" and fcn["env_id"] == entry["env_id"]:
                s_med = entry["median_episodes_to_threshold"]
                f_med = fcn["median_episodes_to_threshold"]
                if s_med is None:
                    ratio = None
                elif f_med is None:
                    ratio = float("inf")
                else:
                    ratio = f_med / s_med
                speedups[f"{name}_vs_{other}"] = {
                    "svqc_median": s_med,
                    "fcn_median": "not reached" if f_med is None else f_med,
                    "speedup": "not reached" if ratio is None else ratio,
                }
    out = {"experiments": experiments, "speedups": speedups}
    path = in_dir / "report.json"
    path.write_text(json.dumps(out, indent=1, default=str))
    return out


def sweep_reuse(base: ExperimentConfig, reuse_values, seeds, out_dir=None,
                workers=1, max_episodes=None) -> dict:
    """Train the base setup at several reuse counts; one curve set per value."""
    results = {}
    for l in reuse_values:
        d = base.to_dict()
        d["name"] = f"{base.name}-reuse{l}"
        d["reuse"] = int(l)
        if max_episodes is not None:
            d["trainer"]["max_episodes"] = int(max_episodes)
        cfg = ExperimentConfig.from_dict(d)
        results[int(l)] = run_experiment(cfg, seeds, out_dir=out_dir, workers=workers)
    return results
