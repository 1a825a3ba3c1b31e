"""Hybrid PPO trainer.

One trainer owns an environment, an actor model, a critic model, a master
random generator and two Adam optimizers. Rollouts are collected one step
at a time; an update runs when the buffer reaches the horizon or the
episode ends, doing `epochs` passes of clipped-objective ascent for the
actor and squared-error descent for the critic, then the buffer is cleared.
Everything is deterministic given the seed when expectations are exact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .heads import softmax


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    action_prob: float  # recorded at collection time, never recomputed
    value: float
    done: bool


class TrajectoryBuffer:
    """Ordered transitions of the current rollout segment."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list[Transition] = []

    def append(self, t: Transition):
        self.items.append(t)

    def clear(self):
        self.items = []

    def full(self) -> bool:
        return len(self.items) >= self.capacity

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class TrainerConfig:
    actor_lr: float
    critic_lr: float
    gamma: float
    epochs: int = 4
    clip_eps: float = 0.1
    update_horizon: int = 128
    max_episodes: int = 1000
    seed: int = 0
    # off-by-default extras, absent from the reference recipe
    normalize_advantages: bool = False
    entropy_coef: float = 0.0
    gae_lambda: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        if self.clip_eps <= 0.0:
            raise ConfigError("clip_eps must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.update_horizon < 1:
            raise ConfigError("update_horizon must be >= 1")

    def to_dict(self) -> dict:
        return {
            "actor_lr": self.actor_lr, "critic_lr": self.critic_lr,
            "gamma": self.gamma, "epochs": self.epochs,
            "clip_eps": self.clip_eps, "update_horizon": self.update_horizon,
            "max_episodes": self.max_episodes, "seed": self.seed,
            "normalize_advantages": self.normalize_advantages,
            "entropy_coef": self.entropy_coef, "gae_lambda": self.gae_lambda,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainerConfig":
        return TrainerConfig(**d)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def discounted_returns(rewards, gamma: float, tail: float = 0.0) -> np.ndarray:
    """Backward pass R_t = r_t + gamma * R_{t+1}, seeded with the bootstrap
    value at a horizon cut (0 at true episode ends)."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if not np.all(np.isfinite(rewards)):
        raise ValueError("non-finite rewards")
    out = np.empty_like(rewards)
    acc = tail
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def advantages(returns, values) -> np.ndarray:
    returns = np.asarray(returns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if returns.shape != values.shape:
        raise ConfigError("returns and values must have equal length")
    return returns - values


def gae_advantages(rewards, values, tail, gamma, lam) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    next_values = np.append(values[1:], tail)
    deltas = rewards + gamma * next_values - values
    out = np.empty_like(deltas)
    acc = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        out[t] = acc
    return out


def ppo_clip_objective(ratio, advantage, clip_eps: float):
    """min(r*A, clip(r, 1-eps, 1+eps)*A), elementwise."""
    ratio = np.asarray(ratio, dtype=np.float64)
    advantage = np.asarray(advantage, dtype=np.float64)
    if np.any(ratio <= 0.0):
        raise ValueError("probability ratio must be positive")
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage
    out = np.minimum(ratio * advantage, clipped)
    return float(out) if out.ndim == 0 else out


def value_loss(values, returns) -> float:
    values = np.asarray(values, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty buffer")
    if values.shape != returns.shape:
        raise ConfigError("values and returns must have equal length")
    return float(np.mean((values - returns) ** 2))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def adam_step(param, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update. Returns (param, m, v) for step t>=1."""
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    return param - lr * mhat / (np.sqrt(vhat) + eps), m, v


class Adam:
    """Adam over a dict of named arrays, tracking moments per entry."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict, grads: dict):
        self.t += 1
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            params[name], self.m[name], self.v[name] = adam_step(
                params[name], g, self.m[name], self.v[name], self.t,
                self.lr, self.beta1, self.beta2, self.eps,
            )

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict):
        self.t = state["t"]
        self.m = {k: np.array(v, dtype=np.float64) for k, v in state["m"].items()}
        self.v = {k: np.array(v, dtype=np.float64) for k, v in state["v"].items()}


# ---------------------------------------------------------------------------
# freeze/resume policy manager
# ---------------------------------------------------------------------------

@dataclass
class FreezeState:
    frozen: bool = False
    count: int = 0
    best: int = 0
    saved: dict | None = None


def freeze_callback(episode_reward, trailing_avg, state: FreezeState,
                    threshold: float = 200.0, snapshot=None) -> FreezeState:
    """Suspend updates above the solve threshold; snapshot the best streak.

    A qualifying episode freezes training and extends the streak; when the
    trailing average drops below the threshold, updates resume and the
    streak resets.
    """
    if episode_reward >= threshold:
        state.frozen = True
        state.count += 1
        if state.count > state.best:
            state.best = state.count
            if snapshot is not None:
                state.saved = snapshot()
    if trailing_avg < threshold:
        state.frozen = False
        state.count = 0
    return state


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainResult:
    rows: list
    episode_rewards: list
    best: dict | None
    state: dict
    freeze: FreezeState | None = None


def _policy_update(actor, opt_a, X, actions, old_probs, adv, cfg: TrainerConfig):
    B = X.shape[0]
    idx = np.arange(B)
    logits, cache = actor.forward(X, need_cache=True)
    probs = softmax(logits)
    pa = probs[idx, actions]
    ratio = pa / old_probs
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv
    take_unclipped = unclipped <= clipped
    clip_inactive = np.abs(ratio - 1.0) <= cfg.clip_eps
    live = np.where(take_unclipped, 1.0, clip_inactive.astype(np.float64))
    coef = live * adv / old_probs / B
    s = coef * pa
    dlogits = -probs * s[:, None]
    dlogits[idx, actions] += s
    if cfg.entropy_coef:
        logp = np.log(probs)
        ent = -(probs * logp).sum(axis=1, keepdims=True)
        dlogits += cfg.entropy_coef / B * (-probs * (logp + ent))
    # ascent on the objective = descent on its negation
    grads = actor.backward(cache, -dlogits)
    opt_a.step(actor.params, grads)
    return float(np.mean(np.minimum(unclipped, clipped)))


def _critic_update(critic, opt_c, X, returns):
    B = X.shape[0]
    out, cache = critic.forward(X, need_cache=True)
    v = out[:, 0]
    dv = (2.0 / B) * (v - returns)
    grads = critic.backward(cache, dv[:, None])
    opt_c.step(critic.params, grads)
    return float(np.mean((v - returns) ** 2))


def run_update(actor, critic, opt_a, opt_c, buffer: TrajectoryBuffer,
               tail_value: float, cfg: TrainerConfig):
    """One update trigger: epochs of critic descent + actor ascent, then clear."""
    items = buffer.items
    X = np.stack([t.state for t in items])
    actions = np.array([t.action for t in items], dtype=np.intp)
    rewards = [t.reward for t in items]
    old_probs = np.array([t.action_prob for t in items])
    values = np.array([t.value for t in items])
    returns = discounted_returns(rewards, cfg.gamma, tail=tail_value)
    if cfg.gae_lambda is not None:
        adv = gae_advantages(rewards, values, tail_value, cfg.gamma, cfg.gae_lambda)
    else:
        adv = advantages(returns, values)
    if cfg.normalize_advantages:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    for _ in range(cfg.epochs):
        _critic_update(critic, opt_c, X, returns)
        _policy_update(actor, opt_a, X, actions, old_probs, adv, cfg)
    buffer.clear()


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))


def train(env, actor, critic, cfg: TrainerConfig, *, freeze_threshold=None,
          freeze_window=100, on_episode=None, resume=None) -> TrainResult:
    """Run PPO episodes until max_episodes.

    freeze_threshold enables the stop-update/snapshot-best manager with the
    given reward threshold over a trailing `freeze_window` episode mean.
    `resume` takes the `state` dict of a previous TrainResult to continue a
    run bit-exactly. Models are updated in place.
    """
    rng = np.random.default_rng(cfg.seed)
    opt_a = Adam(cfg.actor_lr)
    opt_c = Adam(cfg.critic_lr)
    episode_rewards: list[float] = []
    start_episode = 0
    freeze = FreezeState() if freeze_threshold is not None else None
    best = None
    if resume is not None:
        rng.bit_generator.state = resume["rng_state"]
        opt_a.load_state_dict(resume["opt_a"])
        opt_c.load_state_dict(resume["opt_c"])
        episode_rewards = list(resume["episode_rewards"])
        start_episode = resume["episode"]
        best = resume.get("best")
        if resume.get("freeze") is not None:
            f = resume["freeze"]
            freeze = FreezeState(f["frozen"], f["count"], f["best"], f.get("saved"))

    buffer = TrajectoryBuffer(cfg.update_horizon)
    rows = []

    def snapshot():
        return {
            "actor": actor.clone_params(),
            "critic": critic.clone_params(),
            "episode": len(episode_rewards),
        }

    for episode in range(start_episode, cfg.max_episodes):
        t_start = time.perf_counter()
        frozen_now = freeze.frozen if freeze is not None else False
        obs = np.asarray(env.reset(seed=int(rng.integers(2**63 - 1))), dtype=np.float64)
        done = False
        ep_reward = 0.0
        steps = 0
        while not done:
            probs = softmax(actor.forward(obs[None]))[0]
            value = float(critic.forward(obs[None])[0, 0])
            action = sample_action(probs, rng)
            next_obs, reward, done = env.step(action)
            next_obs = np.asarray(next_obs, dtype=np.float64)
            buffer.append(Transition(obs, action, float(reward),
                                     float(probs[action]), value, done))
            ep_reward += reward
            steps += 1
            if done or buffer.full():
                # a horizon cut or a time-limit truncation bootstraps with the
                # critic's estimate; only a true terminal state is worth 0
                truncated = done and bool(getattr(env, "truncated", False))
                if done and not truncated:
                    tail = 0.0
                else:
                    tail = float(critic.forward(next_obs[None])[0, 0])
                if not frozen_now:
                    run_update(actor, critic, opt_a, opt_c, buffer, tail, cfg)
                else:
                    buffer.clear()
            obs = next_obs
        episode_rewards.append(ep_reward)
        avg20 = float(np.mean(episode_rewards[-20:]))
        wall_ms = (time.perf_counter() - t_start) * 1e3
        row = {
            "episode": len(episode_rewards),
            "reward": ep_reward,
            "avg20": avg20,
            "steps": steps,
            "wall_ms": wall_ms,
        }
        rows.append(row)
        trailing = float(np.mean(episode_rewards[-freeze_window:]))
        if freeze is not None:
            freeze = freeze_callback(ep_reward, trailing, freeze,
                                     threshold=freeze_threshold, snapshot=snapshot)
        if best is None or trailing > best["trailing"]:
            best = {"trailing": trailing, **snapshot()}
        if on_episode is not None:
            on_episode(row)

    state = {
        "rng_state": rng.bit_generator.state,
        "opt_a": opt_a.state_dict(),
        "opt_c": opt_c.state_dict(),
        "episode": len(episode_rewards),
        "episode_rewards": list(episode_rewards),
        "best": best,
        "freeze": None if freeze is None else {
            "frozen": freeze.frozen, "count": freeze.count,
            "best": freeze.best, "saved": freeze.saved,
        },
    }
    return TrainResult(rows=rows, episode_rewards=list(episode_rewards),
                       best=best, state=state, freeze=freeze)
