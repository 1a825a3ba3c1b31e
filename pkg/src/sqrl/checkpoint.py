"""Versioned checkpoint documents with byte-exact round-trips.

Checkpoints are canonical JSON (sorted keys, fixed separators). Every float
is written as its hexadecimal representation ("~f" tag) and every array as
a shape-tagged flat hex list ("~nd"), so save -> load -> save is
byte-identical and resumed runs replay bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError

CHECKPOINT_VERSION = 1


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return {
            "~nd": list(obj.shape),
            "data": [float.hex(float(v)) for v in obj.ravel().tolist()],
        }
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return {"~f": float.hex(float(obj))}
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise ConfigError(f"cannot encode {type(obj).__name__} into a checkpoint")


def _decode(obj):
    if isinstance(obj, dict):
        if "~f" in obj and len(obj) == 1:
            return float.fromhex(obj["~f"])
        if "~nd" in obj and len(obj) == 2:
            data = np.array([float.fromhex(h) for h in obj["data"]], dtype=np.float64)
            return data.reshape(obj["~nd"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dumps(document: dict) -> str:
    return json.dumps(_encode(document), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> dict:
    return _decode(json.loads(text))


def save(document: dict, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(document))


def load(path) -> dict:
    doc = loads(Path(path).read_text())
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"checkpoint version {version!r}, expected {CHECKPOINT_VERSION}")
    return doc


def fingerprint(config_dict: dict) -> str:
    """Stable hash of a config; any changed value changes the fingerprint."""
    return hashlib.sha256(dumps(config_dict).encode()).hexdigest()[:16]
