"""Experiment configurations and the pinned presets.

Three training setups (cartpole/acrobot/lunarlander), three compact
architectures for hardware-style noisy evaluation, and the matching
fully-connected baselines. Model layout, reuse counts, learning rates,
discount, epochs and clip are pinned per preset; knobs outside that set
(update horizon, entropy, encoding scale) carry the values that made
desk-scale training reliable. Every value feeds the config fingerprint, so
any change is visible in run outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .checkpoint import fingerprint
from .circuits import CircuitSpec, Gate, rotation_block
from .dense import HIDDEN_SIZES, DenseNet, baseline_fcn
from .envs import env_spec
from .errors import ConfigError
from .noise import NoiseModel
from .policy import QuantumPolicy
from .ppo import TrainerConfig


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    env_id: str
    model: str  # "svqc" | "fcn"
    trainer: TrainerConfig
    reuse: int = 1
    circuit: CircuitSpec | None = None
    hidden: tuple = HIDDEN_SIZES
    activation: str = "tanh"
    eval_noise: NoiseModel = NoiseModel()
    freeze_threshold: float | None = None
    freeze_window: int = 100
    bridge_command: str | None = None

    def __post_init__(self):
        if self.model not in ("svqc", "fcn"):
            raise ConfigError(f"unknown model kind {self.model!r}")
        if self.model == "svqc" and self.circuit is None:
            raise ConfigError("svqc config needs a circuit")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "env_id": self.env_id,
            "model": self.model,
            "trainer": self.trainer.to_dict(),
            "reuse": self.reuse,
            "circuit": None if self.circuit is None else self.circuit.to_dict(),
            "hidden": list(self.hidden),
            "activation": self.activation,
            "eval_noise": self.eval_noise.to_dict(),
            "freeze_threshold": self.freeze_threshold,
            "freeze_window": self.freeze_window,
            "bridge_command": self.bridge_command,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            name=d["name"],
            env_id=d["env_id"],
            model=d["model"],
            trainer=TrainerConfig.from_dict(d["trainer"]),
            reuse=d.get("reuse", 1),
            circuit=None if d.get("circuit") is None else CircuitSpec.from_dict(d["circuit"]),
            hidden=tuple(d.get("hidden", HIDDEN_SIZES)),
            activation=d.get("activation", "tanh"),
            eval_noise=NoiseModel.from_dict(d.get("eval_noise", {})),
            freeze_threshold=d.get("freeze_threshold"),
            freeze_window=d.get("freeze_window", 100),
            bridge_command=d.get("bridge_command"),
        )

    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())

    def build_models(self, seed: int):
        """Actor and critic for one seed; the critic shares layout but owns
        its parameters."""
        spec = env_spec(self.env_id)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5]))
        if self.model == "svqc":
            actor = QuantumPolicy(self.circuit, spec.n_actions, self.reuse, rng=rng)
            critic = QuantumPolicy(self.circuit, 1, self.reuse, rng=rng)
        else:
            actor = DenseNet((spec.obs_dim, *self.hidden, spec.n_actions),
                             activation=self.activation, rng=rng)
            critic = DenseNet((spec.obs_dim, *self.hidden, 1),
                              activation=self.activation, rng=rng)
        return actor, critic


def _acrobot_circuit():
    # raw angular velocities span +-4pi and +-9pi; as rotation angles they
    # alias, so the encoding map compresses them into one monotone branch
    base = rotation_block(6)
    fmap = tuple(
        tuple(row)
        for row in np.diag([1.0, 1.0, 1.0, 1.0, 1.0 / 6.0, 1.0 / 12.0]).tolist()
    )
    return CircuitSpec(n_qubits=6, gates=base.gates, n_features=6, feature_map=fmap)


def _one_qubit_cartpole_circuit():
    # compact single-qubit layout: H, Rz/Ry/Rz encoding triple, trainable Rx.
    # Four features feed three angles through an explicit (arbitrary but
    # pinned) mapping; no default mapping is claimed correct.
    fmap = ((1.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0), (0.0, 0.0, 1.0, 1.0))
    gates = ((
        Gate("h"),
        Gate("rz", "feature", 0),
        Gate("ry", "feature", 1),
        Gate("rz", "feature", 2),
        Gate("rx", "param", 0),
    ),)
    return CircuitSpec(n_qubits=1, gates=gates, n_features=4, feature_map=fmap)


def _lunarlander_circuit():
    return rotation_block(8, spatial_copies=3)


def _presets() -> dict:
    cartpole_trainer = TrainerConfig(
        actor_lr=0.001, critic_lr=0.01, gamma=0.99, epochs=4, clip_eps=0.1,
        update_horizon=192, max_episodes=600,
    )
    acrobot_trainer = TrainerConfig(
        actor_lr=0.004, critic_lr=0.04, gamma=0.98, epochs=4, clip_eps=0.1,
        update_horizon=512, max_episodes=300, entropy_coef=0.02,
    )
    lunar_trainer = TrainerConfig(
        actor_lr=0.002, critic_lr=0.02, gamma=0.98, epochs=4, clip_eps=0.1,
        update_horizon=1024, max_episodes=2000, entropy_coef=0.01,
    )
    # baselines share each task's unpinned update-time/entropy knobs so the
    # comparison differs only in the model and its tabled hyperparameters
    fcn_trainer = TrainerConfig(
        actor_lr=0.0003, critic_lr=0.001, gamma=0.98, epochs=4, clip_eps=0.1,
        update_horizon=192, max_episodes=1500,
    )
    return {
        "cartpole-table3": ExperimentConfig(
            name="cartpole-table3", env_id="cartpole-v1", model="svqc",
            circuit=rotation_block(4), reuse=16, trainer=cartpole_trainer,
        ),
        "acrobot-table3": ExperimentConfig(
            name="acrobot-table3", env_id="acrobot-v1", model="svqc",
            circuit=_acrobot_circuit(), reuse=8, trainer=acrobot_trainer,
        ),
        "lunarlander-table3": ExperimentConfig(
            name="lunarlander-table3", env_id="bridge:LunarLander-v2",
            model="svqc", circuit=_lunarlander_circuit(), reuse=8,
            trainer=lunar_trainer, freeze_threshold=200.0,
        ),
        "cartpole-ibm": ExperimentConfig(
            name="cartpole-ibm", env_id="cartpole-v0", model="svqc",
            circuit=_one_qubit_cartpole_circuit(), reuse=1,
            trainer=replace(cartpole_trainer, actor_lr=0.004, critic_lr=0.04),
            eval_noise=NoiseModel(p_readout=1.16e-2, p_gate=3.11e-4, shots=1024),
        ),
        "acrobot-ibm": ExperimentConfig(
            name="acrobot-ibm", env_id="acrobot-v1", model="svqc",
            circuit=_acrobot_circuit(), reuse=1, trainer=acrobot_trainer,
            eval_noise=NoiseModel(p_readout=2.46e-2, p_gate=2.33e-4, shots=1024),
        ),
        "lunarlander-ibm": ExperimentConfig(
            name="lunarlander-ibm", env_id="bridge:LunarLander-v2",
            model="svqc", circuit=_lunarlander_circuit(), reuse=1,
            trainer=lunar_trainer, freeze_threshold=200.0,
            eval_noise=NoiseModel(p_readout=2.49e-2, p_gate=5.31e-4, shots=8192),
        ),
        "cartpole-fcn": ExperimentConfig(
            name="cartpole-fcn", env_id="cartpole-v1", model="fcn",
            trainer=fcn_trainer,
        ),
        "acrobot-fcn": ExperimentConfig(
            name="acrobot-fcn", env_id="acrobot-v1", model="fcn",
            trainer=replace(fcn_trainer, update_horizon=512, entropy_coef=0.02,
                            max_episodes=900),
        ),
        "lunarlander-fcn": ExperimentConfig(
            name="lunarlander-fcn", env_id="bridge:LunarLander-v2", model="fcn",
            trainer=replace(fcn_trainer, update_horizon=1024, max_episodes=2000),
            freeze_threshold=200.0,
        ),
    }


PRESETS = _presets()


def get_preset(preset: str, **overrides) -> ExperimentConfig:
    if preset not in PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r}; have {sorted(PRESETS)}"
        )
    cfg = PRESETS[preset]
    if not overrides:
        return cfg
    d = cfg.to_dict()
    for key, value in overrides.items():
        if key == "trainer":
            d["trainer"].update(value)
        elif key not in d:
            raise ConfigError(f"unknown config field {key!r}")
        else:
            d[key] = value
    return ExperimentConfig.from_dict(d)
