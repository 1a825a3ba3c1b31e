"""Classical post-processing of circuit outputs.

Each qubit's Z expectation is duplicated `reuse` times, the expanded vector
goes through one affine layer, and a softmax turns action logits into a
policy. Duplication buys nothing in function space (summing the per-copy
weight blocks gives an equivalent single layer) but changes the gradient
geometry: every copy owns an independent weight slot.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, StateError


def reuse_expand(y: np.ndarray, reuse: int) -> np.ndarray:
    """Concatenate y with itself `reuse` times along the last axis."""
    if reuse < 1:
        raise ConfigError(f"reuse count must be >= 1, got {reuse}")
    y = np.asarray(y, dtype=np.float64)
    return np.tile(y, (1,) * (y.ndim - 1) + (reuse,))


def reuse_collapse(dy_expanded: np.ndarray, n: int, reuse: int) -> np.ndarray:
    """Fold gradients on the expanded vector back onto the n raw outputs."""
    lead = dy_expanded.shape[:-1]
    return dy_expanded.reshape(lead + (reuse, n)).sum(axis=-2)


def scale_outputs(y_expanded: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """Affine layer: logits = biases + weights @ y_expanded (batched)."""
    y_expanded = np.asarray(y_expanded, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    if weights.ndim != 2 or biases.shape != (weights.shape[0],):
        raise ConfigError("weights must be (k, m) with biases (k,)")
    if y_expanded.shape[-1] != weights.shape[1]:
        raise ConfigError(
            f"input width {y_expanded.shape[-1]} != weight columns {weights.shape[1]}"
        )
    return y_expanded @ weights.T + biases


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sum_weight_copies(weights: np.ndarray, n: int, reuse: int) -> np.ndarray:
    """Collapse per-copy weight blocks W^(1..reuse) into the equivalent
    single-layer matrix (the duplicated-output identity)."""
    k = weights.shape[0]
    return weights.reshape(k, reuse, n).sum(axis=1)


def split_weight_copies(weights_summed: np.ndarray, reuse: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Random per-copy blocks whose sum reproduces `weights_summed` exactly."""
    k, n = weights_summed.shape
    parts = rng.normal(size=(k, reuse, n))
    parts[:, -1, :] = weights_summed - parts[:, :-1, :].sum(axis=1)
    return parts.reshape(k, reuse * n)


class ReuseHead:
    """Stateful forward/backward pair over one expand-scale application.

    One instance serves one thread; forward caches what backward needs.
    """

    def __init__(self, weights: np.ndarray, biases: np.ndarray, n_inputs: int, reuse: int):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape[1] != n_inputs * reuse:
            raise ConfigError(
                f"weight columns {weights.shape[1]} != n_inputs*reuse {n_inputs * reuse}"
            )
        self.weights = weights
        self.biases = np.asarray(biases, dtype=np.float64)
        self.n_inputs = n_inputs
        self.reuse = reuse
        self._cached = None

    def forward(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        expanded = reuse_expand(y, self.reuse)
        self._cached = expanded
        return scale_outputs(expanded, self.weights, self.biases)

    def backward(self, dlogits: np.ndarray):
        """Returns (dweights, dbiases, dy) for the cached forward pass."""
        if self._cached is None:
            raise StateError("backward called before forward")
        dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
        expanded = self._cached
        dw = dlogits.T @ expanded
        db = dlogits.sum(axis=0)
        d_expanded = dlogits @ self.weights
        dy = reuse_collapse(d_expanded, self.n_inputs, self.reuse)
        return dw, db, dy
