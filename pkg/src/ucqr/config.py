"""Plain-text key-value config files mirroring the CLI flags; explicit flags
override file values."""

from __future__ import annotations

from pathlib import Path

from .core import ConfigError


def read_config_file(path) -> dict[str, str]:
    """One `key = value` per line; '#' starts a comment; keys use the long
    flag names (hyphen or underscore spelling)."""
    out: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def merge_config(args, parser, file_values: dict[str, str]):
    """Apply file values for options the user did not set explicitly.

    Works off argparse defaults: a flag whose parsed value differs from the
    parser default was set on the command line and wins.
    """
    for key, text in file_values.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}")
        default = parser.get_default(key)
        current = getattr(args, key)
        if current != default:
            continue  # explicitly set on the command line
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"config key {key!r}: expected a boolean, got {text!r}")
            setattr(args, key, lowered in ("true", "1", "yes"))
        elif isinstance(default, int) and not isinstance(default, bool):
            setattr(args, key, int(text))
        elif isinstance(default, float):
            setattr(args, key, float(text))
        else:
            setattr(args, key, text)
    return args
