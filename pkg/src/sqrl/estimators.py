"""Scikit-learn style front end.

The agents are estimators: constructor keyword args are hyperparameters
(get_params/set_params work, clone works), fit(env) runs PPO training, and
predict/predict_proba map observations to greedy actions / action
probabilities. `env` is a native environment id ("cartpole-v1", ...) or any
object with reset(seed)/step(action).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .circuits import rotation_block
from .dense import DenseNet, HIDDEN_SIZES
from .envs import env_spec, episodes_to_threshold, is_solved, make_env
from .errors import ConfigError
from .heads import softmax
from .policy import QuantumPolicy
from .ppo import TrainerConfig, train


def check_observations(X, obs_dim: int) -> np.ndarray:
    """Validate and shape observations into a float64 (n, obs_dim) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != obs_dim:
        raise ConfigError(f"expected observations of width {obs_dim}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite observation values")
    return X


class _PPOAgentBase(BaseEstimator):
    def _resolve_env(self, env):
        if isinstance(env, str):
            spec = env_spec(env)
            return make_env(env), spec.obs_dim, spec.n_actions
        return env, env.obs_dim, env.n_actions

    def _trainer_config(self):
        return TrainerConfig(
            actor_lr=self.actor_lr, critic_lr=self.critic_lr, gamma=self.gamma,
            epochs=self.epochs, clip_eps=self.clip_eps,
            update_horizon=self.update_horizon, max_episodes=self.max_episodes,
            seed=self.seed, entropy_coef=self.entropy_coef,
        )

    def _check_fitted(self):
        if not hasattr(self, "actor_"):
            raise NotFittedError("call fit(env) first")

    def fit(self, env, y=None):
        env, obs_dim, n_actions = self._resolve_env(env)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xE5]))
        self.actor_, self.critic_ = self._build_models(obs_dim, n_actions, rng)
        self.obs_dim_ = obs_dim
        self.n_actions_ = n_actions
        result = train(env, self.actor_, self.critic_, self._trainer_config())
        self.result_ = result
        self.episode_rewards_ = result.episode_rewards
        return self

    def predict(self, X):
        self._check_fitted()
        X = check_observations(X, self.obs_dim_)
        return np.argmax(self.actor_.forward(X), axis=1)

    def predict_proba(self, X):
        self._check_fitted()
        X = check_observations(X, self.obs_dim_)
        return softmax(self.actor_.forward(X))

    def value(self, X):
        """Critic estimate of the discounted return."""
        self._check_fitted()
        X = check_observations(X, self.obs_dim_)
        return self.critic_.forward(X)[:, 0]

    def score(self, env, y=None):
        """Fraction of the solve threshold achieved by the trailing window."""
        self._check_fitted()
        spec = env_spec(env) if isinstance(env, str) else None
        if spec is None:
            raise ConfigError("score needs a registered environment id")
        rewards = self.episode_rewards_
        w = min(len(rewards), spec.solve_window)
        return float(np.mean(rewards[-w:]) / spec.solve_threshold)


class QuantumPPOAgent(_PPOAgentBase):
    """Single-qubit circuit policy trained with PPO."""

    def __init__(self, reuse=16, temporal_repeats=1, spatial_copies=1,
                 actor_lr=0.001, critic_lr=0.01, gamma=0.99, epochs=4,
                 clip_eps=0.1, update_horizon=128, max_episodes=500,
                 entropy_coef=0.0, seed=0):
        self.reuse = reuse
        self.temporal_repeats = temporal_repeats
        self.spatial_copies = spatial_copies
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.epochs = epochs
        self.clip_eps = clip_eps
        self.update_horizon = update_horizon
        self.max_episodes = max_episodes
        self.entropy_coef = entropy_coef
        self.seed = seed

    def _build_models(self, obs_dim, n_actions, rng):
        circuit = rotation_block(
            obs_dim,
            temporal_repeats=self.temporal_repeats,
            spatial_copies=self.spatial_copies,
        )
        actor = QuantumPolicy(circuit, n_actions, self.reuse, rng=rng)
        critic = QuantumPolicy(circuit, 1, self.reuse, rng=rng)
        return actor, critic


class ClassicalPPOAgent(_PPOAgentBase):
    """Fully-connected baseline under the identical trainer."""

    def __init__(self, hidden=HIDDEN_SIZES, activation="tanh",
                 actor_lr=0.0003, critic_lr=0.001, gamma=0.98, epochs=4,
                 clip_eps=0.1, update_horizon=128, max_episodes=500,
                 entropy_coef=0.0, seed=0):
        self.hidden = hidden
        self.activation = activation
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.epochs = epochs
        self.clip_eps = clip_eps
        self.update_horizon = update_horizon
        self.max_episodes = max_episodes
        self.entropy_coef = entropy_coef
        self.seed = seed

    def _build_models(self, obs_dim, n_actions, rng):
        actor = DenseNet((obs_dim, *self.hidden, n_actions),
                         activation=self.activation, rng=rng)
        critic = DenseNet((obs_dim, *self.hidden, 1),
                          activation=self.activation, rng=rng)
        return actor, critic
