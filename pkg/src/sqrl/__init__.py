"""Single-qubit variational circuit policies trained with PPO.

Product-state circuit simulation with exact analytic and parameter-shift
gradients, an output-reuse scaling head, a hybrid PPO trainer, native
CartPole/Acrobot environments, a fully-connected baseline, and an
experiment harness (seed sweeps, checkpoints, noisy evaluation, reference
cross-checks).
"""

from .circuits import (
    CircuitSpec,
    Gate,
    QubitState,
    apply_gate,
    circuit_jacobian,
    expectation_z,
    grad_angles,
    rotation_block,
    run_circuit,
    run_circuit_batch,
)
from .dense import DenseNet, baseline_fcn
from .envs import EnvSpec, env_spec, episodes_to_threshold, is_solved, make_env
from .errors import BridgeError, ConfigError, StateError
from .estimators import ClassicalPPOAgent, QuantumPPOAgent
from .heads import reuse_expand, scale_outputs, softmax
from .noise import NoiseModel, sample_expectation
from .policy import QuantumPolicy, param_count
from .ppo import (
    Adam,
    FreezeState,
    TrainerConfig,
    advantages,
    discounted_returns,
    freeze_callback,
    ppo_clip_objective,
    train,
    value_loss,
)
from .presets import PRESETS, ExperimentConfig, get_preset

__version__ = "0.1.0"

__all__ = [
    "Adam", "BridgeError", "CircuitSpec", "ClassicalPPOAgent", "ConfigError",
    "DenseNet", "EnvSpec", "ExperimentConfig", "FreezeState", "Gate",
    "NoiseModel", "PRESETS", "QuantumPPOAgent", "QuantumPolicy", "QubitState",
    "StateError", "TrainerConfig", "advantages", "apply_gate", "baseline_fcn",
    "circuit_jacobian", "discounted_returns", "env_spec",
    "episodes_to_threshold", "expectation_z", "freeze_callback", "get_preset",
    "grad_angles", "is_solved", "make_env", "param_count",
    "ppo_clip_objective", "reuse_expand", "rotation_block", "run_circuit",
    "run_circuit_batch", "sample_expectation", "scale_outputs", "softmax",
    "train", "value_loss",
]
