"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: dimension mismatches, bad indices, bad presets."""


class StateError(RuntimeError):
    """Operation called in the wrong order (step after done, backward before forward)."""


class BridgeError(RuntimeError):
    """Bridge subprocess failed to launch, handshake, or answer a request."""
