"""Quantum policy/value model: product circuit plus reuse-and-scale head.

A model owns trainable rotation angles and the affine head. The critic is
the same class with a single output. Forward/backward run whole observation
batches; backward needs the cache returned by forward.
"""

from __future__ import annotations

import numpy as np

from .circuits import CircuitSpec, CircuitTape
from .errors import ConfigError
from .heads import reuse_collapse, reuse_expand, scale_outputs
from .noise import NoiseModel, run_circuit_noisy


def init_affine(rng: np.random.Generator, k: int, fan_in: int):
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(k, fan_in))
    b = rng.uniform(-bound, bound, size=k)
    return w, b


class QuantumPolicy:
    """Trainable map observation -> k logits through per-qubit Z readouts."""

    kind = "svqc"

    def __init__(self, circuit: CircuitSpec, n_outputs: int, reuse: int,
                 rng: np.random.Generator | None = None,
                 params: dict | None = None):
        if reuse < 1:
            raise ConfigError("reuse must be >= 1")
        self.circuit = circuit
        self.n_outputs = n_outputs
        self.reuse = reuse
        self.n_inputs = circuit.n_outputs
        fan_in = self.n_inputs * reuse
        if params is not None:
            self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        else:
            if rng is None:
                raise ConfigError("need rng or params")
            w, b = init_affine(rng, n_outputs, fan_in)
            # small-angle start keeps the per-qubit readout monotone in its
            # feature over the working range; broad inits stall training
            self.params = {
                "angles": rng.uniform(-0.1, 0.1, size=circuit.n_params),
                "weights": w,
                "biases": b,
            }
        if self.params["weights"].shape != (n_outputs, fan_in):
            raise ConfigError(
                f"weights shape {self.params['weights'].shape} != {(n_outputs, fan_in)}"
            )
        if self.params["angles"].shape != (circuit.n_params,):
            raise ConfigError("angle vector does not match circuit")

    def forward(self, X, need_cache=False):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        tape = CircuitTape(self.circuit, X, self.params["angles"])
        expanded = reuse_expand(tape.outputs, self.reuse)
        logits = scale_outputs(expanded, self.params["weights"], self.params["biases"])
        if need_cache:
            return logits, {"tape": tape, "expanded": expanded}
        return logits

    def backward(self, cache, dlogits) -> dict:
        dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
        expanded = cache["expanded"]
        tape: CircuitTape = cache["tape"]
        dw = dlogits.T @ expanded
        db = dlogits.sum(axis=0)
        dy = reuse_collapse(dlogits @ self.params["weights"], self.n_inputs, self.reuse)
        dangles = tape.vjp(dy)
        return {"angles": dangles, "weights": dw, "biases": db}

    def forward_noisy(self, x, model: NoiseModel, rng) -> np.ndarray:
        """Single-observation logits with shot/readout/gate noise applied."""
        y = run_circuit_noisy(self.circuit, x, self.params["angles"], model, rng)
        expanded = reuse_expand(y[None, :], self.reuse)
        return scale_outputs(expanded, self.params["weights"], self.params["biases"])[0]

    def param_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def head_param_count(self) -> int:
        return self.params["weights"].size + self.params["biases"].size

    def clone_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict):
        for k, v in params.items():
            self.params[k] = np.array(v, dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "circuit": self.circuit.to_dict(),
            "n_outputs": self.n_outputs,
            "reuse": self.reuse,
        }

    @staticmethod
    def from_dict(d: dict, params: dict) -> "QuantumPolicy":
        return QuantumPolicy(
            CircuitSpec.from_dict(d["circuit"]), d["n_outputs"], d["reuse"],
            params=params,
        )


def param_count(model) -> int:
    """Trainable scalars of any model exposing a params dict."""
    return sum(np.asarray(v).size for v in model.params.values())
