"""Series ingestion, the annualized log-difference transform and synthetic
data generators used by the CLI and the test suite."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .core import ConfigError, as_generator
from .distributions import sample_al_mixture

TRANSFORMS = ("none", "log-diff-annualized")

_QUARTER_RE = re.compile(r"^(\d{4})[-:\s]?[Qq](\d)$")
_MONTH_RE = re.compile(r"^(\d{4})[-/](\d{1,2})$")


@dataclass
class SeriesData:
    """A univariate series with ordered period labels."""

    timestamps: list[str]
    values: np.ndarray
    transform: str = "none"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size != len(self.timestamps):
            raise ValueError("timestamps and values must align")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series contains missing or non-finite values")

    def __len__(self) -> int:
        return int(self.values.size)


def _period_key(label: str):
    """Best-effort sortable key for common period formats; None if unknown."""
    label = label.strip()
    m = _QUARTER_RE.match(label)
    if m:
        return (int(m.group(1)), int(m.group(2)) * 3)
    m = _MONTH_RE.match(label)
    if m:
        return (int(m.group(1)), int(m.group(2)))
    try:
        d = date.fromisoformat(label)
        return (d.year, d.month * 100 + d.day)
    except ValueError:
        pass
    try:
        return (float(label), 0.0)
    except ValueError:
        return None


def _check_order(labels: list[str]):
    seen = set()
    for i, lab in enumerate(labels):
        if lab in seen:
            raise ConfigError(f"duplicate period {lab!r} at row {i + 2}")
        seen.add(lab)
    keys = [_period_key(lab) for lab in labels]
    if all(k is not None for k in keys):
        for i in range(1, len(keys)):
            if keys[i] <= keys[i - 1]:
                raise ConfigError(
                    f"timestamps must be strictly increasing: row {i + 2} "
                    f"({labels[i]!r} after {labels[i - 1]!r})"
                )


def apply_log_diff(timestamps: list[str], levels: np.ndarray):
    """400 * log(P_t / P_{t-1}); drops the first observation."""
    for i, p in enumerate(levels):
        if p <= 0.0:
            raise ConfigError(
                f"nonpositive price level {p!r} at row {i + 2}: cannot take logs"
            )
    values = 400.0 * np.diff(np.log(levels))
    return timestamps[1:], values


def ingest_csv(path, transform: str = "none") -> SeriesData:
    """Parse a two-column (period, value) CSV with a header row."""
    if transform not in TRANSFORMS:
        raise ConfigError(f"unknown transform {transform!r}: expected one of {TRANSFORMS}")
    path = Path(path)
    labels: list[str] = []
    raw: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ConfigError(f"{path}: expected a header row with two columns")
        for i, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2 or not row[1].strip():
                raise ConfigError(f"{path}: missing value at row {i + 2}")
            labels.append(row[0].strip())
            try:
                raw.append(float(row[1]))
            except ValueError:
                raise ConfigError(
                    f"{path}: unparseable value {row[1]!r} at row {i + 2}"
                ) from None
    if len(raw) < 2:
        raise ConfigError(f"{path}: need at least two observations")
    _check_order(labels)
    values = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ConfigError(f"{path}: non-finite value at row {bad + 2}")
    if transform == "log-diff-annualized":
        labels, values = apply_log_diff(labels, values)
    return SeriesData(timestamps=labels, values=values, transform=transform)


def write_series_csv(series: SeriesData, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "value"])
        for lab, val in zip(series.timestamps, series.values):
            writer.writerow([lab, f"{val:.10g}"])


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------

DGPS = ("iid-normal", "al-constant", "ucsv", "level-shift", "price-index")


def simulate_series(dgp: str, length: int, seed=0, *, level: float = 0.0,
                    scale: float = 1.0, p: float = 0.5,
                    omega: float = 0.02, varsigma: float = 0.1) -> SeriesData:
    """Named test DGPs.

    iid-normal: level + scale * N(0,1).
    al-constant: level + asymmetric-Laplace(p, scale) noise.
    ucsv: random-walk trend (innovation variance omega) plus Gaussian noise
      with a random-walk log variance (innovation sd varsigma).
    level-shift: three-regime piecewise-constant mean with N(0, scale) noise.
    price-index: a price level whose annualized log-difference follows the
      ucsv design around `level` (inflation-like fixture).
    """
    if dgp not in DGPS:
        raise ConfigError(f"unknown dgp {dgp!r}: expected one of {DGPS}")
    rng = as_generator(seed)
    T = int(length)
    if T < 2:
        raise ConfigError("length must be >= 2")
    if dgp == "iid-normal":
        values = level + scale * rng.standard_normal(T)
    elif dgp == "al-constant":
        values = level + sample_al_mixture(p, scale, rng, size=T)
    elif dgp == "ucsv":
        values = _ucsv_path(rng, T, level, scale, omega, varsigma)
    elif dgp == "level-shift":
        means = np.concatenate([
            np.full(T // 3, level),
            np.full(T // 3, level + 4.0 * scale),
            np.full(T - 2 * (T // 3), level - 2.0 * scale),
        ])
        values = means + scale * rng.standard_normal(T)
    else:  # price-index
        pi = _ucsv_path(rng, T - 1, level, scale, omega, varsigma)
        logp = math.log(100.0) + np.concatenate([[0.0], np.cumsum(pi / 400.0)])
        values = np.exp(logp)
    labels = [f"{1900 + (i // 4)}Q{(i % 4) + 1}" for i in range(T)]
    return SeriesData(timestamps=labels, values=values, transform="none")


def _ucsv_path(rng, T, level, scale, omega, varsigma):
    alpha = level + np.cumsum(math.sqrt(omega) * rng.standard_normal(T))
    h = math.log(scale ** 2) + np.cumsum(varsigma * rng.standard_normal(T))
    return alpha + np.exp(0.5 * h) * rng.standard_normal(T)
