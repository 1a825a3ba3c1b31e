"""Native control environments behind one tiny interface.

Both tasks follow the published benchmark dynamics: an Euler-integrated
cart-pole (force +-10 N, 0.02 s steps, terminate beyond 12 degrees or
+-2.4 m) and an RK4-integrated two-link acrobot (torque in {-1,0,+1},
0.2 s steps, terminate when the lower tip swings above link height).
Correctness is pinned by cross-checking against the reference
implementations through the bridge, not by the constants themselves;
`inject_state` exists exactly for that cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin

import numpy as np

from .errors import ConfigError, StateError


@dataclass(frozen=True)
class EnvSpec:
    id: str
    obs_dim: int
    n_actions: int
    max_steps: int
    solve_threshold: float
    solve_window: int

    def to_dict(self):
        return {
            "id": self.id, "obs_dim": self.obs_dim, "n_actions": self.n_actions,
            "max_steps": self.max_steps, "solve_threshold": self.solve_threshold,
            "solve_window": self.solve_window,
        }


ENV_SPECS = {
    "cartpole-v0": EnvSpec("cartpole-v0", 4, 2, 200, 195.0, 100),
    "cartpole-v1": EnvSpec("cartpole-v1", 4, 2, 500, 475.0, 100),
    # no official solve condition; trailing-20 mean of -100 is the working proxy
    "acrobot-v1": EnvSpec("acrobot-v1", 6, 3, 500, -100.0, 20),
    "bridge:LunarLander-v2": EnvSpec("bridge:LunarLander-v2", 8, 4, 1000, 200.0, 100),
}


def env_spec(env_id: str) -> EnvSpec:
    if env_id in ENV_SPECS:
        return ENV_SPECS[env_id]
    if env_id.startswith("bridge:"):
        raise ConfigError(f"bridge environment {env_id!r} has no registered spec")
    raise ConfigError(f"unknown environment id {env_id!r}")


class CartPoleNative:
    """Pole balancing; +1 reward per step until the pole or cart leaves bounds."""

    GRAVITY = 9.8
    M_CART = 1.0
    M_POLE = 0.1
    HALF_LENGTH = 0.5
    FORCE = 10.0
    TAU = 0.02
    THETA_LIMIT = 12 * 2 * pi / 360
    X_LIMIT = 2.4

    def __init__(self, max_steps=500):
        self.max_steps = max_steps
        self._x = self._xd = self._th = self._thd = 0.0
        self.steps = 0
        self.done = True
        self.truncated = False
        self._rng = np.random.default_rng()

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._x, self._xd, self._th, self._thd = self._rng.uniform(-0.05, 0.05, 4)
        self.steps = 0
        self.done = False
        self.truncated = False
        return self._obs()

    def inject_state(self, raw):
        """Overwrite the physics state (oracle cross-checks only)."""
        self._x, self._xd, self._th, self._thd = (float(v) for v in raw)
        self.done = False

    def get_state(self):
        return np.array([self._x, self._xd, self._th, self._thd])

    def _obs(self):
        return np.array([self._x, self._xd, self._th, self._thd])

    def step(self, action):
        if self.done:
            raise StateError("episode is over; call reset()")
        if action not in (0, 1):
            raise ConfigError(f"action must be 0 or 1, got {action!r}")
        total_m = self.M_CART + self.M_POLE
        pm_l = self.M_POLE * self.HALF_LENGTH
        force = self.FORCE if action == 1 else -self.FORCE
        cth, sth = cos(self._th), sin(self._th)
        temp = (force + pm_l * self._thd * self._thd * sth) / total_m
        th_acc = (self.GRAVITY * sth - cth * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.M_POLE * cth * cth / total_m)
        )
        x_acc = temp - pm_l * th_acc * cth / total_m
        self._x += self.TAU * self._xd
        self._xd += self.TAU * x_acc
        self._th += self.TAU * self._thd
        self._thd += self.TAU * th_acc
        self.steps += 1
        out_of_bounds = (
            abs(self._x) > self.X_LIMIT or abs(self._th) > self.THETA_LIMIT
        )
        self.done = out_of_bounds or self.steps >= self.max_steps
        self.truncated = self.done and not out_of_bounds
        return self._obs(), 1.0, self.done


def _wrap_angle(x):
    while x > pi:
        x -= 2 * pi
    while x < -pi:
        x += 2 * pi
    return x


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


class AcrobotNative:
    """Two-link swing-up; -1 per step until the lower tip clears link height."""

    DT = 0.2
    MAX_VEL_1 = 4 * pi
    MAX_VEL_2 = 9 * pi
    TORQUES = (-1.0, 0.0, 1.0)

    def __init__(self, max_steps=500):
        self.max_steps = max_steps
        self._s = (0.0, 0.0, 0.0, 0.0)  # theta1, theta2, omega1, omega2
        self.steps = 0
        self.done = True
        self.truncated = False
        self._rng = np.random.default_rng()

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._s = tuple(self._rng.uniform(-0.1, 0.1, 4))
        self.steps = 0
        self.done = False
        self.truncated = False
        return self._obs()

    def inject_state(self, raw):
        self._s = tuple(float(v) for v in raw)
        self.done = False

    def get_state(self):
        return np.array(self._s)

    def _obs(self):
        t1, t2, w1, w2 = self._s
        return np.array([cos(t1), sin(t1), cos(t2), sin(t2), w1, w2])

    @staticmethod
    def _derivs(t1, t2, w1, w2, torque):
        # masses, lengths, centers of mass and inertias are all 1.0/0.5/1.0
        g = 9.8
        d1 = 1.0 * 0.25 + 1.0 * (1.0 + 0.25 + 2 * 0.5 * cos(t2)) + 2.0
        d2 = 1.0 * (0.25 + 0.5 * cos(t2)) + 1.0
        phi2 = 0.5 * g * cos(t1 + t2 - pi / 2.0)
        phi1 = (
            -0.5 * w2 * w2 * sin(t2)
            - 2 * 0.5 * w2 * w1 * sin(t2)
            + (0.5 + 1.0) * g * cos(t1 - pi / 2.0)
            + phi2
        )
        dd2 = (torque + d2 / d1 * phi1 - 0.5 * w1 * w1 * sin(t2) - phi2) / (
            0.25 + 1.0 - d2 * d2 / d1
        )
        dd1 = -(d2 * dd2 + phi1) / d1
        return w1, w2, dd1, dd2

    def step(self, action):
        if self.done:
            raise StateError("episode is over; call reset()")
        if action not in (0, 1, 2):
            raise ConfigError(f"action must be in 0..2, got {action!r}")
        torque = self.TORQUES[action]
        y = self._s
        dt = self.DT

        def f(s):
            return self._derivs(s[0], s[1], s[2], s[3], torque)

        k1 = f(y)
        k2 = f(tuple(y[i] + 0.5 * dt * k1[i] for i in range(4)))
        k3 = f(tuple(y[i] + 0.5 * dt * k2[i] for i in range(4)))
        k4 = f(tuple(y[i] + dt * k3[i] for i in range(4)))
        ns = tuple(
            y[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)
        )
        self._s = (
            _wrap_angle(ns[0]),
            _wrap_angle(ns[1]),
            _clamp(ns[2], -self.MAX_VEL_1, self.MAX_VEL_1),
            _clamp(ns[3], -self.MAX_VEL_2, self.MAX_VEL_2),
        )
        t1, t2 = self._s[0], self._s[1]
        at_goal = -cos(t1) - cos(t2 + t1) > 1.0
        reward = 0.0 if at_goal else -1.0
        self.steps += 1
        self.done = at_goal or self.steps >= self.max_steps
        self.truncated = self.done and not at_goal
        return self._obs(), reward, self.done


def make_env(env_id: str, bridge_command=None):
    """Instantiate a native environment, or a bridge client for bridge: ids."""
    if env_id == "cartpole-v0":
        return CartPoleNative(max_steps=200)
    if env_id == "cartpole-v1":
        return CartPoleNative(max_steps=500)
    if env_id == "acrobot-v1":
        return AcrobotNative(max_steps=500)
    if env_id.startswith("bridge:"):
        from .bridge import BridgeEnv

        if bridge_command is None:
            raise ConfigError(f"{env_id!r} needs a bridge command")
        return BridgeEnv(env_id.split(":", 1)[1], bridge_command)
    raise ConfigError(f"unknown environment id {env_id!r}")


def is_solved(rewards, spec: EnvSpec) -> bool:
    """True when any full solve_window of consecutive episodes averages at
    or above the threshold (inclusive)."""
    rewards = list(rewards)
    w = spec.solve_window
    if len(rewards) < w:
        return False
    acc = np.cumsum([0.0] + rewards)
    window_means = (acc[w:] - acc[:-w]) / w
    return bool(np.any(window_means >= spec.solve_threshold))


def episodes_to_threshold(rewards, spec: EnvSpec):
    """1-based episode index where the window-mean first meets the threshold,
    or None if it never does."""
    rewards = list(rewards)
    w = spec.solve_window
    if len(rewards) < w:
        return None
    acc = np.cumsum([0.0] + rewards)
    window_means = (acc[w:] - acc[:-w]) / w
    hits = np.nonzero(window_means >= spec.solve_threshold)[0]
    if hits.size == 0:
        return None
    return int(hits[0]) + w
