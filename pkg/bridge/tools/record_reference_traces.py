#!/usr/bin/env python3
"""Record reference-environment traces used as the cross-check fixture.

Produces one JSON file per environment containing injected-state single
steps plus two scripted rollouts. The primary package replays these against
its native environments when no live bridge is present.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gym_bridge.classic import VENDORED  # noqa: E402

INJECT_RANGES = {
    "CartPole-v1": [(-2.3, 2.3), (-2.0, 2.0), (-0.2, 0.2), (-2.0, 2.0)],
    "Acrobot-v1": [
        (-2.9, 2.9),
        (-2.9, 2.9),
        (-4 * np.pi * 0.9, 4 * np.pi * 0.9),
        (-9 * np.pi * 0.9, 9 * np.pi * 0.9),
    ],
}


def record_injected(env_id, steps, seed):
    env = VENDORED[env_id]()
    rng = np.random.default_rng(seed)
    ranges = INJECT_RANGES[env_id]
    env.reset(seed=seed)
    rows = []
    for _ in range(steps):
        raw = [float(rng.uniform(lo, hi)) for lo, hi in ranges]
        action = int(rng.integers(env.n_actions))
        env.set_state(raw)
        env.steps = 0  # keep the time limit out of injected single steps
        obs, reward, done = env.step(action)
        rows.append(
            {
                "state": raw,
                "action": action,
                "obs": [float(v) for v in obs],
                "reward": float(reward),
                "done": bool(done),
            }
        )
    return rows


def record_rollout(env_id, actions, start_state):
    env = VENDORED[env_id]()
    env.reset(seed=0)
    env.set_state(start_state)
    env.steps = 0
    rows = []
    for action in actions:
        obs, reward, done = env.step(action)
        rows.append(
            {
                "action": int(action),
                "obs": [float(v) for v in obs],
                "reward": float(reward),
                "done": bool(done),
            }
        )
        if done:
            break
    return {"start_state": list(map(float, start_state)), "steps": rows}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20240901)
    args = parser.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    for env_id in ("CartPole-v1", "Acrobot-v1"):
        fixture = {
            "env": env_id,
            "seed": args.seed,
            "injected": record_injected(env_id, args.steps, args.seed),
        }
        if env_id == "CartPole-v1":
            fixture["push_right_from_rest"] = record_rollout(
                env_id, [1] * 200, [0.0, 0.0, 0.0, 0.0]
            )
        else:
            fixture["coast_from_rest"] = record_rollout(
                env_id, [1] * 500, [0.01, -0.02, 0.0, 0.0]
            )
        path = outdir / f"{env_id.lower()}_reference_trace.json"
        path.write_text(json.dumps(fixture))
        print(f"wrote {path} ({len(fixture['injected'])} injected steps)")


if __name__ == "__main__":
    main()
