"""Environment backends, in preference order.

If gymnasium (or classic gym) is importable it serves the true reference
environments, including LunarLander when Box2D is present. Otherwise the
vendored classic-control ports take over; LunarLander then reports as
unavailable since its physics engine cannot be vendored.
"""

from __future__ import annotations

import numpy as np

from .classic import VENDORED

try:  # pragma: no cover - depends on host installation
    import gymnasium as _gym
    _GYM_KIND = "gymnasium"
except ImportError:  # pragma: no cover
    try:
        import gym as _gym
        _GYM_KIND = "gym"
    except ImportError:
        _gym = None
        _GYM_KIND = None

KNOWN_ENVS = {
    "CartPole-v0": (4, 2),
    "CartPole-v1": (4, 2),
    "Acrobot-v1": (6, 3),
    "LunarLander-v2": (8, 4),
}

INJECTABLE = {"CartPole-v0", "CartPole-v1", "Acrobot-v1"}


class GymAdapter:
    """Uniform reset/step/set_state facade over a gym(nasium) env."""

    def __init__(self, env_id):
        candidates = [env_id]
        if env_id == "LunarLander-v2":
            candidates.append("LunarLander-v3")  # gymnasium >= 1.0 rename
        err = None
        self.env = None
        for cand in candidates:
            try:
                self.env = _gym.make(cand)
                break
            except Exception as e:  # noqa: BLE001 - backend-specific failures
                err = e
        if self.env is None:
            raise RuntimeError(f"backend cannot build {env_id}: {err}")
        self.env_id = env_id
        self.obs_dim = int(np.prod(self.env.observation_space.shape))
        self.n_actions = int(self.env.action_space.n)

    def reset(self, seed=None):
        out = self.env.reset(seed=seed)
        obs = out[0] if isinstance(out, tuple) else out
        return np.asarray(obs, dtype=np.float64), False

    def step(self, action):
        out = self.env.step(int(action))
        if len(out) == 5:
            obs, reward, terminated, truncated, _ = out
            done = bool(terminated or truncated)
        else:
            obs, reward, done, info = out
            truncated = bool(info.get("TimeLimit.truncated", False))
        return np.asarray(obs, dtype=np.float64), float(reward), bool(done), bool(truncated)

    def set_state(self, raw):
        if self.env_id not in INJECTABLE:
            raise RuntimeError(f"{self.env_id} does not support state injection")
        self.env.unwrapped.state = np.asarray(raw, dtype=np.float64)
        if hasattr(self.env, "_elapsed_steps") and self.env._elapsed_steps is not None:
            self.env._elapsed_steps = 0

    def close(self):
        self.env.close()


class VendoredAdapter:
    def __init__(self, env_id):
        if env_id not in VENDORED:
            raise RuntimeError(
                f"{env_id} needs the gymnasium backend (not installed)"
            )
        self.env = VENDORED[env_id]()
        self.env_id = env_id
        self.obs_dim = self.env.obs_dim
        self.n_actions = self.env.n_actions

    def reset(self, seed=None):
        return self.env.reset(seed=seed), False

    def step(self, action):
        obs, reward, done = self.env.step(int(action))
        truncated = done and self.env.steps >= self.env.max_episode_steps
        return obs, reward, done, truncated

    def set_state(self, raw):
        self.env.set_state(raw)
        self.env.steps = 0

    def close(self):
        pass


def backend_name() -> str:
    return _GYM_KIND or "vendored"


def spec_for(env_id):
    """(obs_dim, n_actions) if this process can serve env_id, else raise."""
    if env_id not in KNOWN_ENVS:
        raise RuntimeError(f"unknown environment {env_id!r}")
    if _gym is None and env_id not in VENDORED:
        raise RuntimeError(
            f"{env_id} needs gymnasium with Box2D, which is not installed"
        )
    return KNOWN_ENVS[env_id]


def make_adapter(env_id):
    if env_id not in KNOWN_ENVS:
        raise RuntimeError(f"unknown environment {env_id!r}")
    if _gym is not None:
        return GymAdapter(env_id)
    return VendoredAdapter(env_id)
