"""Reversible KV-cache soft freezing on a deterministic toy transformer."""

from ._softfreeze import (
    InputError,
    InvariantError,
    PolicyError,
    PolicyParams,
    cli,
    compression_ratio,
    config_keys,
    freeze_duration,
    generate,
    passkey,
    replay_synthetic,
)

__all__ = [
    "InputError",
    "InvariantError",
    "PolicyError",
    "PolicyParams",
    "cli",
    "compression_ratio",
    "config_keys",
    "freeze_duration",
    "generate",
    "passkey",
    "replay_synthetic",
]
