"""Fully-connected baseline trained by the same PPO loop.

The comparison network is FCN(16, 32, 64, 32, k): four hidden layers with a
bounded activation by default so its output range is comparable to the
[-1, 1] circuit readouts.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .policy import init_affine

HIDDEN_SIZES = (16, 32, 64, 32)


class DenseNet:
    """Plain MLP with exact hand-rolled backprop."""

    kind = "fcn"

    def __init__(self, sizes, activation="tanh",
                 rng: np.random.Generator | None = None,
                 params: dict | None = None):
        if len(sizes) < 2:
            raise ConfigError("need at least input and output sizes")
        if activation not in ("tanh", "relu"):
            raise ConfigError(f"unknown activation {activation!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.activation = activation
        self.n_layers = len(sizes) - 1
        if params is not None:
            self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        else:
            if rng is None:
                raise ConfigError("need rng or params")
            self.params = {}
            for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                w, b = init_affine(rng, fan_out, fan_in)
                self.params[f"w{i}"] = w
                self.params[f"b{i}"] = b
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            if self.params[f"w{i}"].shape != (fan_out, fan_in):
                raise ConfigError(f"layer {i} weight shape mismatch")

    def _act(self, z):
        return np.tanh(z) if self.activation == "tanh" else np.maximum(z, 0.0)

    def _act_grad(self, z, a):
        if self.activation == "tanh":
            return 1.0 - a * a
        return (z > 0.0).astype(np.float64)

    def forward(self, X, need_cache=False):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.sizes[0]:
            raise ConfigError(f"expected {self.sizes[0]} inputs, got {X.shape[1]}")
        h = X
        pre, post = [], [X]
        for i in range(self.n_layers):
            z = h @ self.params[f"w{i}"].T + self.params[f"b{i}"]
            if i < self.n_layers - 1:
                h = self._act(z)
            else:
                h = z
            pre.append(z)
            post.append(h)
        if need_cache:
            return h, {"pre": pre, "post": post}
        return h

    def backward(self, cache, dout) -> dict:
        dout = np.atleast_2d(np.asarray(dout, dtype=np.float64))
        pre, post = cache["pre"], cache["post"]
        grads = {}
        d = dout
        for i in range(self.n_layers - 1, -1, -1):
            grads[f"w{i}"] = d.T @ post[i]
            grads[f"b{i}"] = d.sum(axis=0)
            if i > 0:
                d = (d @ self.params[f"w{i}"]) * self._act_grad(pre[i - 1], post[i])
        return grads

    def param_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def clone_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict):
        for k, v in params.items():
            self.params[k] = np.array(v, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sizes": list(self.sizes), "activation": self.activation}

    @staticmethod
    def from_dict(d: dict, params: dict) -> "DenseNet":
        return DenseNet(d["sizes"], activation=d.get("activation", "tanh"), params=params)


def baseline_fcn(obs_dim: int, n_outputs: int, rng, activation="tanh") -> DenseNet:
    return DenseNet((obs_dim, *HIDDEN_SIZES, n_outputs), activation=activation, rng=rng)
