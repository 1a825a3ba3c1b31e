"""Exact simulation of entanglement-free single-qubit rotation circuits.

Every qubit evolves independently under a short program of H / Rx / Ry / Rz
gates whose rotation angles come from a constant, from an encoded input
feature, or from a trainable parameter. Because the state never entangles,
the simulator keeps one two-component amplitude pair per qubit and runs
whole observation batches at once.

Rotation convention: R_a(phi) = exp(-i * phi * sigma_a / 2). Global phase is
ignored; the only observable is the per-qubit Pauli-Z expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError

GATE_KINDS = ("h", "rx", "ry", "rz")
ANGLE_SOURCES = ("const", "feature", "param")

_ISQ2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class QubitState:
    """Two complex amplitudes of a single qubit, normalized to 1."""

    amp0: complex
    amp1: complex

    def __post_init__(self):
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: |amp0|^2+|amp1|^2 = {norm!r}")

    @property
    def z_expectation(self) -> float:
        return abs(self.amp0) ** 2 - abs(self.amp1) ** 2

    @property
    def prob1(self) -> float:
        return abs(self.amp1) ** 2


ZERO = QubitState(1.0 + 0.0j, 0.0 + 0.0j)


@dataclass(frozen=True)
class Gate:
    """One gate of a per-qubit program.

    kind: "h" or a rotation "rx"/"ry"/"rz".
    source: where the rotation angle comes from. "const" uses `angle`,
        "feature" uses encoded-feature slot `index`, "param" uses trainable
        angle `index`.
    """

    kind: str
    source: str = "const"
    index: int = 0
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ConfigError(f"unknown gate kind {self.kind!r}")
        if self.source not in ANGLE_SOURCES:
            raise ConfigError(f"unknown angle source {self.source!r}")
        if self.kind == "h" and self.source != "const":
            raise ConfigError("h takes no angle")
        if self.index < 0:
            raise ConfigError("gate index must be non-negative")
        if self.source == "const" and not math.isfinite(self.angle):
            raise ValueError(f"non-finite gate angle {self.angle!r}")


def h(): return Gate("h")
def rx(angle=0.0, **kw): return Gate("rx", angle=angle, **kw)
def ry(angle=0.0, **kw): return Gate("ry", angle=angle, **kw)
def rz(angle=0.0, **kw): return Gate("rz", angle=angle, **kw)


def feature(kind, index):
    return Gate(kind, source="feature", index=index)


def param(kind, index):
    return Gate(kind, source="param", index=index)


@dataclass(frozen=True)
class CircuitSpec:
    """Gate programs for a register of independent qubits.

    gates holds one tuple of Gate per base qubit. temporal_repeats stacks the
    whole block in depth with fresh trainable angles per repeat;
    spatial_copies lays out extra physical copies of the register, again with
    fresh angles per copy. feature_map (rows x n_features) linearly maps the
    raw observation to the encoding-angle slots that "feature" gates index;
    None means the identity (slot j is feature j, so n_features slots).
    """

    n_qubits: int
    gates: tuple
    n_features: int
    temporal_repeats: int = 1
    spatial_copies: int = 1
    feature_map: tuple | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ConfigError("n_qubits must be >= 1")
        if len(self.gates) != self.n_qubits:
            raise ConfigError("need one gate list per qubit")
        if self.temporal_repeats < 1 or self.spatial_copies < 1:
            raise ConfigError("replication counts must be >= 1")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        n_slots = self.n_encoding_slots
        for qgates in self.gates:
            for g in qgates:
                if not isinstance(g, Gate):
                    raise ConfigError(f"not a Gate: {g!r}")
                if g.source == "feature" and g.index >= n_slots:
                    raise ConfigError(
                        f"feature slot {g.index} out of range (have {n_slots})"
                    )
        if self.feature_map is not None:
            for row in self.feature_map:
                if len(row) != self.n_features:
                    raise ConfigError("feature_map rows must have n_features columns")

    @property
    def n_encoding_slots(self) -> int:
        if self.feature_map is None:
            return self.n_features
        return len(self.feature_map)

    @property
    def base_params(self) -> int:
        """Trainable angles in one unreplicated block."""
        idx = [g.index for q in self.gates for g in q if g.source == "param"]
        if not idx:
            return 0
        n = max(idx) + 1
        if set(idx) != set(range(n)):
            raise ConfigError("param indices must cover 0..max without gaps")
        return n

    @property
    def n_params(self) -> int:
        return self.base_params * self.temporal_repeats * self.spatial_copies

    @property
    def n_outputs(self) -> int:
        """Measured qubits: spatial copies widen the register."""
        return self.n_qubits * self.spatial_copies

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_features": self.n_features,
            "temporal_repeats": self.temporal_repeats,
            "spatial_copies": self.spatial_copies,
            "feature_map": None
            if self.feature_map is None
            else [list(r) for r in self.feature_map],
            "gates": [
                [
                    {"kind": g.kind, "source": g.source, "index": g.index, "angle": g.angle}
                    for g in q
                ]
                for q in self.gates
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "CircuitSpec":
        gates = tuple(
            tuple(Gate(g["kind"], g["source"], g["index"], g["angle"]) for g in q)
            for q in d["gates"]
        )
        fmap = d.get("feature_map")
        return CircuitSpec(
            n_qubits=d["n_qubits"],
            gates=gates,
            n_features=d["n_features"],
            temporal_repeats=d.get("temporal_repeats", 1),
            spatial_copies=d.get("spatial_copies", 1),
            feature_map=None if fmap is None else tuple(tuple(r) for r in fmap),
        )


def rotation_block(n_qubits, n_features=None, encoding=("ry", "rz"),
                   trainable=("ry",), hadamard=True, **replication) -> CircuitSpec:
    """Standard per-qubit layout: H, encoding rotations of feature q,
    then trainable rotations with one fresh angle per (qubit, gate)."""
    n_features = n_qubits if n_features is None else n_features
    gates = []
    p = 0
    for q in range(n_qubits):
        seq = [Gate("h")] if hadamard else []
        for kind in encoding:
            seq.append(Gate(kind, source="feature", index=q))
        for kind in trainable:
            seq.append(Gate(kind, source="param", index=p))
            p += 1
        gates.append(tuple(seq))
    return CircuitSpec(n_qubits=n_qubits, gates=tuple(gates),
                       n_features=n_features, **replication)


# ---------------------------------------------------------------------------
# compiled layer program
# ---------------------------------------------------------------------------

class _Op:
    """One depth slice of the expanded register: same gate kind, vector angles."""

    __slots__ = ("kind", "idx", "mode", "const", "feat", "par")

    def __init__(self, kind, idx, const, feat, par):
        self.kind = kind
        self.idx = idx  # None = every qubit in register order
        self.const = const
        self.feat = feat
        self.par = par
        if kind == "h":
            self.mode = "none"
        elif np.all(feat >= 0):
            self.mode = "feature"
        elif np.all(par >= 0):
            self.mode = "param"
        elif np.all(feat < 0) and np.all(par < 0):
            self.mode = "const"
        else:
            self.mode = "mixed"


class _Program:
    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        self.n_eff = spec.n_outputs
        self.n_params = spec.n_params
        self.fmatrix = (
            None
            if spec.feature_map is None
            else np.asarray(spec.feature_map, dtype=np.float64)
        )
        base_p = spec.base_params
        # expand replication into one gate list per effective qubit
        per_qubit = []
        for c in range(spec.spatial_copies):
            for q in range(spec.n_qubits):
                seq = []
                for r in range(spec.temporal_repeats):
                    offset = (c * spec.temporal_repeats + r) * base_p
                    for g in spec.gates[q]:
                        if g.source == "param":
                            seq.append(Gate(g.kind, "param", g.index + offset, g.angle))
                        else:
                            seq.append(g)
                per_qubit.append(seq)
        depth = max(len(s) for s in per_qubit)
        self.ops: list[_Op] = []
        self.occurrences: dict[int, list[tuple[int, int]]] = {}
        for t in range(depth):
            by_kind: dict[str, list[int]] = {}
            for i, seq in enumerate(per_qubit):
                if t < len(seq):
                    by_kind.setdefault(seq[t].kind, []).append(i)
            for kind in GATE_KINDS:
                if kind not in by_kind:
                    continue
                qubits = by_kind[kind]
                m = len(qubits)
                const = np.zeros(m)
                feat = np.full(m, -1, dtype=np.intp)
                par = np.full(m, -1, dtype=np.intp)
                for slot, i in enumerate(qubits):
                    g = per_qubit[i][t]
                    if g.source == "const":
                        const[slot] = g.angle
                    elif g.source == "feature":
                        feat[slot] = g.index
                    else:
                        par[slot] = g.index
                idx = None if (m == self.n_eff and qubits == list(range(m))) else np.asarray(qubits)
                op = _Op(kind, idx, const, feat, par)
                t_op = len(self.ops)
                self.ops.append(op)
                for slot in range(m):
                    if par[slot] >= 0:
                        self.occurrences.setdefault(int(par[slot]), []).append((t_op, slot))

    def encode(self, X: np.ndarray) -> np.ndarray:
        return X if self.fmatrix is None else X @ self.fmatrix.T


@lru_cache(maxsize=None)
def _compile(spec: CircuitSpec) -> _Program:
    return _Program(spec)


def _op_angles(op: _Op, enc, angles, B):
    if op.mode == "none":
        return None
    if op.mode == "const":
        return op.const
    if op.mode == "param":
        return angles[op.par]
    if op.mode == "feature":
        return enc[:, op.feat]
    ang = np.broadcast_to(op.const, (B, len(op.const))).copy()
    fm = op.feat >= 0
    if fm.any():
        ang[:, fm] += enc[:, op.feat[fm]]
    pm = op.par >= 0
    if pm.any():
        ang[:, pm] += angles[op.par[pm]]
    return ang


def _apply(kind, ang, x0, x1, inverse=False):
    """Apply one gate kind with (possibly broadcast) angles to amplitude pairs."""
    if kind == "h":
        return (x0 + x1) * _ISQ2, (x0 - x1) * _ISQ2
    if inverse:
        ang = -ang
    half = 0.5 * ang
    c = np.cos(half)
    s = np.sin(half)
    if kind == "ry":
        return c * x0 - s * x1, s * x0 + c * x1
    if kind == "rx":
        return c * x0 - 1j * s * x1, -1j * s * x0 + c * x1
    # rz
    ph = np.exp(-1j * half)
    return ph * x0, np.conj(ph) * x1


class _Cache:
    __slots__ = ("states", "angles", "enc", "B")

    def __init__(self):
        self.states = []
        self.angles = []
        self.enc = None
        self.B = 0


def _forward(program: _Program, X, angles, need_cache=False, shift=None):
    B = X.shape[0]
    n = program.n_eff
    a0 = np.ones((B, n), dtype=np.complex128)
    a1 = np.zeros((B, n), dtype=np.complex128)
    enc = program.encode(X)
    cache = _Cache() if need_cache else None
    if need_cache:
        cache.B = B
        cache.enc = enc
        cache.states.append((a0.copy(), a1.copy()))
    for t, op in enumerate(program.ops):
        ang = _op_angles(op, enc, angles, B)
        if shift is not None and shift[0] == t:
            ang = np.array(ang, dtype=np.float64, copy=True)
            ang[..., shift[1]] += shift[2]
        if op.idx is None:
            a0, a1 = _apply(op.kind, ang, a0, a1)
        else:
            n0, n1 = _apply(op.kind, ang, a0[:, op.idx], a1[:, op.idx])
            a0 = a0.copy()
            a1 = a1.copy()
            a0[:, op.idx] = n0
            a1[:, op.idx] = n1
        if need_cache:
            cache.states.append((a0.copy(), a1.copy()))
            cache.angles.append(ang)
    z = (a0.real**2 + a0.imag**2) - (a1.real**2 + a1.imag**2)
    return z, cache


def _vjp_angles(program: _Program, angles, cache: _Cache, gy):
    """Gradient of sum(gy * z) with respect to the trainable angles."""
    a0, a1 = cache.states[-1]
    l0 = (2.0 * gy) * a0
    l1 = (-2.0 * gy) * a1
    grads = np.zeros(program.n_params)
    for t in range(len(program.ops) - 1, -1, -1):
        op = program.ops[t]
        s0, s1 = cache.states[t + 1]
        if op.idx is not None:
            s0 = s0[:, op.idx]
            s1 = s1[:, op.idx]
            v0 = l0[:, op.idx]
            v1 = l1[:, op.idx]
        else:
            v0, v1 = l0, l1
        if op.kind != "h" and (op.par >= 0).any():
            # d/dphi <psi| g Z |psi> = 2 Re( psi^T.conj (i sigma/2) lambda )
            if op.kind == "rx":
                sig = np.conj(s0) * v1 + np.conj(s1) * v0
            elif op.kind == "ry":
                sig = -1j * np.conj(s0) * v1 + 1j * np.conj(s1) * v0
            else:
                sig = np.conj(s0) * v0 - np.conj(s1) * v1
            dphi = -0.5 * sig.imag
            pm = op.par >= 0
            np.add.at(grads, op.par[pm], dphi[:, pm].sum(axis=0))
        ang = cache.angles[t]
        if op.idx is None:
            l0, l1 = _apply(op.kind, ang, l0, l1, inverse=True)
        else:
            n0, n1 = _apply(op.kind, ang, v0, v1, inverse=True)
            l0 = l0.copy()
            l1 = l1.copy()
            l0[:, op.idx] = n0
            l1[:, op.idx] = n1
    return grads


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def apply_gate(state: QubitState, gate: Gate, angle: float | None = None) -> QubitState:
    """Apply one gate to a single qubit state.

    Feature/param-sourced gates need the resolved angle passed explicitly.
    """
    if gate.kind == "h":
        ang = 0.0
    elif gate.source == "const":
        ang = gate.angle if angle is None else angle
    else:
        if angle is None:
            raise ValueError(f"gate {gate} needs a resolved angle")
        ang = angle
    if not math.isfinite(ang):
        raise ValueError(f"non-finite angle {ang!r}")
    x0 = np.asarray([[state.amp0]], dtype=np.complex128)
    x1 = np.asarray([[state.amp1]], dtype=np.complex128)
    y0, y1 = _apply(gate.kind, np.asarray([ang]), x0, x1)
    return QubitState(complex(y0[0, 0]), complex(y1[0, 0]))


def expectation_z(state: QubitState) -> float:
    return state.z_expectation


def _check_run_args(spec, features, angles):
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    th = np.asarray(angles, dtype=np.float64)
    if X.shape[1] != spec.n_features:
        raise ConfigError(
            f"expected {spec.n_features} features, got {X.shape[1]}"
        )
    if th.shape != (spec.n_params,):
        raise ConfigError(
            f"expected {spec.n_params} trainable angles, got {th.shape}"
        )
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(th)):
        raise ValueError("non-finite inputs to run_circuit")
    return X, th


def run_circuit(spec: CircuitSpec, features, angles) -> np.ndarray:
    """Exact per-qubit Z expectations for one observation."""
    X, th = _check_run_args(spec, features, angles)
    z, _ = _forward(_compile(spec), X, th)
    return z[0]


def run_circuit_batch(spec: CircuitSpec, X, angles) -> np.ndarray:
    """Exact per-qubit Z expectations, one row per observation."""
    X, th = _check_run_args(spec, X, angles)
    z, _ = _forward(_compile(spec), X, th)
    return z


class CircuitTape:
    """Forward pass with cached intermediates for one batch, reusable for
    a single reverse pass. Not thread-shared."""

    def __init__(self, spec: CircuitSpec, X, angles):
        self.program = _compile(spec)
        self.X, self.angles = _check_run_args(spec, X, angles)
        self.outputs, self._cache = _forward(
            self.program, self.X, self.angles, need_cache=True
        )

    def vjp(self, gy) -> np.ndarray:
        """Gradient of sum(gy * outputs) w.r.t. the trainable angles."""
        gy = np.asarray(gy, dtype=np.float64)
        if gy.shape != self.outputs.shape:
            raise ConfigError(f"gy shape {gy.shape} != outputs {self.outputs.shape}")
        return _vjp_angles(self.program, self.angles, self._cache, gy)


def circuit_jacobian(spec: CircuitSpec, features, angles) -> np.ndarray:
    """Analytic d<Z_q>/d theta_p, shape (n_outputs, n_params)."""
    X, th = _check_run_args(spec, features, angles)
    program = _compile(spec)
    jac = np.zeros((program.n_eff, program.n_params))
    tape = CircuitTape(spec, X, th)
    for q in range(program.n_eff):
        gy = np.zeros((X.shape[0], program.n_eff))
        gy[:, q] = 1.0
        jac[q] = _vjp_angles(program, th, tape._cache, gy)
    return jac


def grad_angles(spec: CircuitSpec, features, angles, index: int,
                mode: str = "shift") -> np.ndarray:
    """Derivative of every <Z_q> w.r.t. trainable angle `index`.

    "shift" evaluates the circuit at +-pi/2 around each occurrence of the
    angle (exact for rotation gates); "analytic" uses the reverse-mode pass.
    """
    X, th = _check_run_args(spec, features, angles)
    program = _compile(spec)
    if not 0 <= index < program.n_params:
        raise ConfigError(f"no trainable angle with index {index}")
    if mode == "analytic":
        return circuit_jacobian(spec, features, angles)[:, index]
    if mode != "shift":
        raise ConfigError(f"unknown gradient mode {mode!r}")
    occ = program.occurrences.get(index)
    if not occ:
        raise ConfigError(f"angle {index} is not attached to any gate")
    total = np.zeros(program.n_eff)
    for t_op, slot in occ:
        plus, _ = _forward(program, X, th, shift=(t_op, slot, +0.5 * math.pi))
        minus, _ = _forward(program, X, th, shift=(t_op, slot, -0.5 * math.pi))
        total += (plus[0] - minus[0]) / 2.0
    return total
