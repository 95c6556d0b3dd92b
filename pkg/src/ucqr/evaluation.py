"""Forecast scoring: quantile scores, quantile-weighted CRPS, kernel-smoothed
predictive densities and log scores, bootstrap moment bands and scenario
probabilities, plus benchmark-relative metric tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: CRPS weighting schemes on the quantile grid.
CRPS_SCHEMES = ("none", "tails", "left", "right")

LPS_FLOOR = 1e-10


@dataclass(frozen=True)
class QuantileForecast:
    """A quantile curve for one (origin, horizon) cell."""

    levels: np.ndarray
    values: np.ndarray
    origin: int = -1
    horizon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.levels.shape != self.values.shape or self.levels.ndim != 1:
            raise ValueError("levels and values must be matching vectors")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("forecast values must be finite")

    @property
    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0.0))


@dataclass(frozen=True)
class PredictiveDensity:
    """Density values on a support grid, normalized to integrate to one."""

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if g.ndim != 1 or g.shape != d.shape or g.size < 8:
            raise ValueError("grid and density must be matching vectors")
        if np.any(np.diff(g) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if np.any(d < 0.0) or not np.all(np.isfinite(d)):
            raise ValueError("density must be finite and nonnegative")
        total = np.trapezoid(d, g)
        if not (abs(total - 1.0) <= 1e-3):
            raise ValueError(f"density must integrate to 1 (+-1e-3), got {total:.6f}")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", d)

    def _cdf_grid(self) -> np.ndarray:
        inc = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.grid)
        cdf = np.concatenate([[0.0], np.cumsum(inc)])
        return cdf / cdf[-1]

    def cdf(self, x) -> np.ndarray | float:
        out = np.interp(x, self.grid, self._cdf_grid(), left=0.0, right=1.0)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, levels) -> np.ndarray | float:
        out = np.interp(levels, self._cdf_grid(), self.grid)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling through the trapezoid CDF."""
        return np.interp(rng.random(n), self._cdf_grid(), self.grid)

    @classmethod
    def from_values(cls, grid, raw_density) -> "PredictiveDensity":
        d = np.asarray(raw_density, dtype=float)
        g = np.asarray(grid, dtype=float)
        total = np.trapezoid(d, g)
        if total <= 0.0 or not np.isfinite(total):
            raise ValueError("density values do not normalize")
        return cls(grid=g, density=d / total)

    @classmethod
    def from_gaussian_mixture(cls, means, variances, n_grid: int = 2048,
                              span: float = 6.0) -> "PredictiveDensity":
        """Equal-weight normal mixture over posterior draws (the mean-based
        baseline's exact predictive density, tabulated)."""
        mu = np.asarray(means, dtype=float)
        sd = np.sqrt(np.asarray(variances, dtype=float))
        lo = float(np.min(mu - span * sd))
        hi = float(np.max(mu + span * sd))
        g = np.linspace(lo, hi, n_grid)
        z = (g[:, None] - mu[None, :]) / sd[None, :]
        d = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sd[None, :])
        return cls.from_values(g, d.mean(axis=1))


def quantile_score(realization: float, forecast: float, p: float) -> float:
    """QS = (r - f) * (p - 1{r < f}); nonnegative by construction."""
    if not (np.isfinite(realization) and np.isfinite(forecast)):
        raise ValueError("realization and forecast must be finite")
    return (realization - forecast) * (p - (realization < forecast))


def crps_weights(levels: np.ndarray, scheme: str) -> np.ndarray:
    levels = np.asarray(levels, dtype=float)
    if scheme == "none":
        return np.ones_like(levels)
    if scheme == "tails":
        return (2.0 * levels - 1.0) ** 2
    if scheme == "left":
        return (1.0 - levels) ** 2
    if scheme == "right":
        return levels ** 2
    raise ValueError(f"unknown CRPS weighting scheme {scheme!r}")


def weighted_crps(qf: QuantileForecast, realization: float, scheme: str = "none") -> float:
    """Discretized quantile-weighted CRPS: the mean of w_p * QS_p over the grid
    (the grid is uniform, so the constant spacing cancels in model ratios)."""
    w = crps_weights(qf.levels, scheme)
    qs = np.array([quantile_score(realization, f, p)
                   for p, f in zip(qf.levels, qf.values)])
    return float(np.mean(w * qs))


def silverman_bandwidth(values: np.ndarray, floor: float = 1e-3) -> float:
    v = np.asarray(values, dtype=float)
    n = v.size
    sd = float(np.std(v, ddof=1))
    iqr = float(np.quantile(v, 0.75) - np.quantile(v, 0.25))
    spread = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return max(0.9 * spread * n ** (-0.2), floor)


def smooth_to_density(qf: QuantileForecast, n_grid: int = 512) -> PredictiveDensity:
    """Gaussian-kernel density on the quantile values, each treated as an
    equal-mass representative of its level's neighborhood; renormalized on
    [min - 4 bw, max + 4 bw]."""
    if not qf.is_monotone:
        raise ValueError("smooth_to_density requires strictly increasing quantiles")
    v = qf.values
    bw = silverman_bandwidth(v)
    g = np.linspace(float(v.min() - 4.0 * bw), float(v.max() + 4.0 * bw),
                    max(int(n_grid), 512))
    z = (g[:, None] - v[None, :]) / bw
    d = np.exp(-0.5 * z * z).mean(axis=1) / (math.sqrt(2.0 * math.pi) * bw)
    return PredictiveDensity.from_values(g, d)


def log_predictive_score(density: PredictiveDensity, realization: float) -> float:
    """Log of the linearly interpolated density at the realization, floored at
    log(1e-10) outside the support."""
    val = float(np.interp(realization, density.grid, density.density,
                          left=0.0, right=0.0))
    return math.log(max(val, LPS_FLOOR))


def _sample_moments(x: np.ndarray) -> tuple[float, float, float, float]:
    m = float(x.mean())
    c = x - m
    m2 = float(np.mean(c * c))
    m3 = float(np.mean(c ** 3))
    m4 = float(np.mean(c ** 4))
    var = float(x.var(ddof=1))
    skew = m3 / m2 ** 1.5 if m2 > 0 else 0.0
    exkurt = m4 / (m2 * m2) - 3.0 if m2 > 0 else 0.0
    return m, var, exkurt, skew


@dataclass(frozen=True)
class MomentBands:
    """Point estimate with numerical 5th/95th percentile bands per moment."""

    point: dict[str, float]
    lo: dict[str, float]
    hi: dict[str, float]


MOMENT_NAMES = ("mean", "variance", "excess_kurtosis", "skewness")


def bootstrap_moments(density: PredictiveDensity, rng: np.random.Generator,
                      n_sample: int = 3000, n_rep: int = 1000) -> MomentBands:
    """Replicate-based moment bands: per replicate draw n_sample values by
    inverse-CDF sampling, compute mean/variance/excess kurtosis/skewness, then
    take the 5th and 95th percentiles over replicates."""
    stats = np.empty((n_rep, 4))
    for r in range(n_rep):
        stats[r] = _sample_moments(density.sample(n_sample, rng))
    point = dict(zip(MOMENT_NAMES, stats.mean(axis=0)))
    lo = dict(zip(MOMENT_NAMES, np.percentile(stats, 5.0, axis=0)))
    hi = dict(zip(MOMENT_NAMES, np.percentile(stats, 95.0, axis=0)))
    return MomentBands(point=point, lo=lo, hi=hi)


SCENARIO_NAMES = ("deflation", "target", "excessive")


@dataclass(frozen=True)
class ScenarioProbabilities:
    """Pr(pi < 0), Pr(1 <= pi <= 3), Pr(pi > 4) with replicate bands."""

    point: dict[str, float]
    lo: dict[str, float]
    hi: dict[str, float]


def scenario_probabilities(density: PredictiveDensity, rng: np.random.Generator,
                           n_sample: int = 3000, n_rep: int = 1000,
                           bounds=(0.0, 1.0, 3.0, 4.0)) -> ScenarioProbabilities:
    """Point probabilities from the density CDF; bands from empirical
    probabilities over replicate samples."""
    z, lo1, hi1, z4 = bounds
    point = {
        "deflation": float(density.cdf(z)),
        "target": float(density.cdf(hi1) - density.cdf(lo1)),
        "excessive": float(1.0 - density.cdf(z4)),
    }
    stats = np.empty((n_rep, 3))
    for r in range(n_rep):
        x = density.sample(n_sample, rng)
        stats[r, 0] = np.mean(x < z)
        stats[r, 1] = np.mean((x >= lo1) & (x <= hi1))
        stats[r, 2] = np.mean(x > z4)
    lo = dict(zip(SCENARIO_NAMES, np.percentile(stats, 5.0, axis=0)))
    hi = dict(zip(SCENARIO_NAMES, np.percentile(stats, 95.0, axis=0)))
    return ScenarioProbabilities(point=point, lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# Metric tables (rows = model variants, columns = metric/scheme/horizon)
# ---------------------------------------------------------------------------

#: Headline quantile levels reported in the CSV tables.
QS_REPORT_LEVELS = (0.05, 0.1, 0.5, 0.9, 0.95)


@dataclass
class MetricTable:
    """Average scores per (model, metric key, horizon), plus the
    benchmark-relative view: ratios for CRPS/QS, differences for LPS."""

    models: list[str]
    horizons: list[int]
    values: dict[tuple[str, str, int], float] = field(default_factory=dict)
    benchmark: str | None = None
    meta: dict = field(default_factory=dict)

    def metric_keys(self) -> list[str]:
        keys = [f"crps_{s}" for s in CRPS_SCHEMES] + ["lps"]
        keys += [f"qs_{lv:g}" for lv in QS_REPORT_LEVELS]
        return keys

    def relative_value(self, model: str, key: str, h: int) -> float:
        raw = self.values.get((model, key, h), float("nan"))
        if self.benchmark is None or model == self.benchmark:
            return raw
        bench = self.values.get((self.benchmark, key, h), float("nan"))
        if key == "lps":
            return raw - bench
        return raw / bench if bench != 0.0 else float("nan")

    def write_csv(self, path, relative: bool = True):
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["model"] + [f"{k}_h{h}" for k in self.metric_keys()
                                  for h in self.horizons]
            writer.writerow(header)
            for model in self.models:
                row = [model]
                for k in self.metric_keys():
                    for h in self.horizons:
                        val = (self.relative_value(model, k, h) if relative
                               else self.values.get((model, k, h), float("nan")))
                        row.append(f"{val:.6f}")
                writer.writerow(row)

    def write_json(self, path):
        per_model: dict[str, dict] = {model: {} for model in self.models}
        for (model, key, h), val in sorted(self.values.items()):
            per_model[model][f"{key}_h{h}"] = {
                "value": val,
                "relative": self.relative_value(model, key, h),
            }
        payload = {
            "benchmark": self.benchmark,
            "horizons": self.horizons,
            "meta": self.meta,
            "models": per_model,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))
