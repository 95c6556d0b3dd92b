"""Shared plumbing: error types, quantile grids, deterministic seed derivation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


class SamplerFailure(RuntimeError):
    """A rejection sampler exceeded its iteration cap."""


class NumericalError(RuntimeError):
    """A numerical failure (non-finite covariance, failed factorization) with location info."""


class ConfigError(ValueError):
    """Invalid configuration, CLI arguments or config file contents."""


#: Iteration cap for rejection loops before raising SamplerFailure.
REJECTION_CAP = 10_000

#: Lower clamp applied to auxiliary mixture draws before reweighting.
V_FLOOR = 1e-12

#: Lower clamp for scale paths.
SCALE_FLOOR = 1e-10


@dataclass(frozen=True)
class QuantileGrid:
    """Ordered set of target quantile levels."""

    levels: np.ndarray = field(default_factory=lambda: default_levels())

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size < 1:
            raise ValueError("levels must be a nonempty 1-d array")
        if np.any(lv <= 0.0) or np.any(lv >= 1.0):
            raise ValueError("levels must lie strictly inside (0, 1)")
        if np.any(np.diff(lv) <= 0.0):
            raise ValueError("levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)

    def __len__(self) -> int:
        return int(self.levels.size)

    def __iter__(self):
        return iter(self.levels)

    @classmethod
    def from_spec(cls, text: str) -> "QuantileGrid":
        """Parse "lo:hi:step" (e.g. "0.05:0.95:0.05") or a comma list of levels."""
        text = text.strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ConfigError(f"bad quantile spec {text!r}: expected lo:hi:step")
            lo, hi, step = (float(p) for p in parts)
            if step <= 0 or hi < lo:
                raise ConfigError(f"bad quantile spec {text!r}")
            n = int(round((hi - lo) / step)) + 1
            return cls(lo + step * np.arange(n))
        return cls(np.array([float(p) for p in text.split(",")]))


def default_levels() -> np.ndarray:
    """The 19-point grid 0.05, 0.10, ..., 0.95."""
    return np.round(0.05 * np.arange(1, 20), 10)


def derive_seed(master_seed: int, *parts: object) -> np.random.SeedSequence:
    """Deterministic, order-independent seed for a (model, quantile, origin, ...) task.

    Hash-based so the stream is identical no matter how tasks are scheduled
    across workers.
    """
    key = "|".join([str(int(master_seed))] + [str(p) for p in parts])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return np.random.SeedSequence(int.from_bytes(digest, "little"))


def derive_rng(master_seed: int, *parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *parts))


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, SeedSequence or int and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
