"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, shape mismatch, or malformed input (exit code 2)."""


class NumericsError(RuntimeError):
    """Non-finite values encountered during training (exit code 3)."""
