"""Finite-shot sampling, readout bit flips and per-gate depolarizing noise.

The exact simulator hands back Z expectations; this module turns them into
the estimates a hardware run would produce. Readout error flips each
measured bit with probability p_readout, which scales the estimator mean by
(1 - 2 p_readout). Gate error is modelled as a single-qubit depolarizing
channel: after every gate the Bloch vector shrinks by (1 - p_gate). Since
the circuits are entanglement-free, evolving the 3-component Bloch vector
per qubit is an exact density-matrix simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import CircuitSpec, QubitState, _compile, _forward, _op_angles
from .errors import ConfigError


@dataclass(frozen=True)
class NoiseModel:
    """shots=None means exact expectations (the noiseless limit)."""

    p_readout: float = 0.0
    p_gate: float = 0.0
    shots: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_readout <= 0.5:
            raise ConfigError(f"p_readout must be in [0, 0.5], got {self.p_readout}")
        if not 0.0 <= self.p_gate <= 1.0:
            raise ConfigError(f"p_gate must be in [0, 1], got {self.p_gate}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")

    @property
    def is_exact(self) -> bool:
        return self.shots is None and self.p_readout == 0.0 and self.p_gate == 0.0

    def to_dict(self) -> dict:
        return {"p_readout": self.p_readout, "p_gate": self.p_gate, "shots": self.shots}

    @staticmethod
    def from_dict(d) -> "NoiseModel":
        return NoiseModel(d.get("p_readout", 0.0), d.get("p_gate", 0.0), d.get("shots"))


EXACT = NoiseModel()


def sample_expectation(state: QubitState, shots: int, rng: np.random.Generator) -> float:
    """(n0 - n1)/shots estimate of <Z> from `shots` projective measurements."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    n1 = rng.binomial(shots, state.prob1)
    return 1.0 - 2.0 * n1 / shots


def sample_z_estimates(z: np.ndarray, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Shot + readout channel applied to a vector of exact Z expectations."""
    z = np.asarray(z, dtype=np.float64)
    p1 = np.clip((1.0 - z) / 2.0, 0.0, 1.0)
    p = model.p_readout
    p1_reported = p1 * (1.0 - p) + (1.0 - p1) * p
    if model.shots is None:
        return 1.0 - 2.0 * p1_reported
    n1 = rng.binomial(model.shots, p1_reported)
    return 1.0 - 2.0 * n1 / model.shots


def _bloch_apply(kind, ang, v, p_gate):
    """Rotate Bloch vectors (3, n) and shrink toward the mixed state."""
    x, y, z = v
    if kind == "h":
        x, y, z = z, -y, x
    else:
        c = np.cos(ang)
        s = np.sin(ang)
        if kind == "rx":
            x, y, z = x, c * y - s * z, s * y + c * z
        elif kind == "ry":
            x, y, z = c * x + s * z, y, -s * x + c * z
        else:  # rz
            x, y, z = c * x - s * y, s * x + c * y, z
    if p_gate > 0.0:
        shrink = 1.0 - p_gate
        x, y, z = shrink * x, shrink * y, shrink * z
    return np.stack([x, y, z])


def run_circuit_bloch(spec: CircuitSpec, features, angles, p_gate=0.0) -> np.ndarray:
    """Z expectations via Bloch-vector propagation (supports depolarizing)."""
    program = _compile(spec)
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    angles = np.asarray(angles, dtype=np.float64)
    if features.shape[1] != spec.n_features or angles.shape != (spec.n_params,):
        raise ConfigError("dimension mismatch in run_circuit_bloch")
    enc = program.encode(features)
    n = program.n_eff
    v = np.zeros((3, n))
    v[2] = 1.0  # |0> points at the north pole
    for op in program.ops:
        ang = _op_angles(op, enc, angles, 1)
        if ang is not None:
            ang = np.asarray(ang, dtype=np.float64).reshape(-1)
        if op.idx is None:
            v = _bloch_apply(op.kind, ang, v, p_gate)
        else:
            sub = _bloch_apply(op.kind, ang, v[:, op.idx], p_gate)
            v = v.copy()
            v[:, op.idx] = sub
    return v[2].copy()


def run_circuit_noisy(spec: CircuitSpec, features, angles, model: NoiseModel,
                      rng: np.random.Generator) -> np.ndarray:
    """Per-qubit Z estimates under the full noise model.

    With the all-zero model this returns the exact expectations, so callers
    can use it unconditionally.
    """
    if model.p_gate > 0.0:
        z = run_circuit_bloch(spec, features, angles, p_gate=model.p_gate)
    else:
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        th = np.asarray(angles, dtype=np.float64)
        if X.shape[1] != spec.n_features or th.shape != (spec.n_params,):
            raise ConfigError("dimension mismatch in run_circuit_noisy")
        z, _ = _forward(_compile(spec), X, th)
        z = z[0]
    if model.shots is None and model.p_readout == 0.0:
        return z
    return sample_z_estimates(z, model, rng)


def readout_mean(z: float, p_readout: float) -> float:
    """Analytic mean of the readout-flipped estimator."""
    return (1.0 - 2.0 * p_readout) * z


def shot_sigma(shots: int) -> float:
    """Worst-case standard deviation of the shot estimator (at z = 0)."""
    return 1.0 / math.sqrt(shots)
