"""Post-processing of per-quantile estimates into monotone quantile curves via
Gaussian-process regression on the matrix of induced quantiles, with a fixed
(GP) or per-period (GPt) bandwidth, plus the raw pass-through."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import NumericalError, QuantileGrid
from .distributions import al_quantile_slopes
from .sampler import PosteriorDraws

#: Strict-monotonicity margin required between adjacent quantiles
#: (downstream density reconstruction divides by quantile gaps).
MONOTONE_MARGIN = 1e-8

#: Floor applied to the noise variances of the induced-quantile observations.
SIGMA_FLOOR = 1e-10


@dataclass(frozen=True)
class GPConfig:
    """Squared-exponential kernel variance and the bandwidth search window."""

    s_sq: float = 100.0
    bandwidth_lo: float = 1e-4
    bandwidth_hi: float = 10.0
    bandwidth_emergency_hi: float = 1e3
    bandwidth_rel_tol: float = 1e-3
    scan_points: int = 25

    def __post_init__(self):
        if self.s_sq <= 0.0:
            raise ValueError("s_sq must be > 0")
        if not (0.0 < self.bandwidth_lo < self.bandwidth_hi):
            raise ValueError("need 0 < bandwidth_lo < bandwidth_hi")
        if self.bandwidth_emergency_hi < self.bandwidth_hi:
            raise ValueError("bandwidth_emergency_hi must be >= bandwidth_hi")
        if self.scan_points < 2:
            raise ValueError("scan_points must be >= 2")


@dataclass
class InducedQuantileMatrix:
    """P x P matrix of induced quantiles for one period: entry (i, j) is the
    quantile function of the model fitted at level p_i, evaluated at level
    p_j. Raw estimates sit on the diagonal. diag_var holds the posterior
    variance of each entry divided by the retained-draw count."""

    levels: np.ndarray
    q: np.ndarray
    diag_var: np.ndarray

    def __post_init__(self):
        P = self.levels.size
        if self.q.shape != (P, P) or self.diag_var.shape != (P, P):
            raise ValueError("q and diag_var must be P x P")


def build_induced_matrix(beta_hat, sigma_hat, grid: QuantileGrid,
                         var_mu=None, var_sigma=None, cov_mu_sigma=None,
                         n_draws: int = 1) -> InducedQuantileMatrix:
    """Induced-quantile matrix from per-level posterior means of the fitted
    quantile (beta_hat) and scale (sigma_hat) at one period.

    Each entry is linear in (mean, scale) so its posterior variance follows
    from the per-level variances/covariance of the two; when those are not
    supplied the noise matrix is the floor.
    """
    levels = grid.levels
    P = levels.size
    mu = np.asarray(beta_hat, dtype=float)
    sg = np.asarray(sigma_hat, dtype=float)
    if mu.shape != (P,) or sg.shape != (P,):
        raise ValueError("beta_hat and sigma_hat must have one entry per level")
    if np.any(sg <= 0.0):
        raise ValueError("scale estimates must be > 0")
    slopes = np.empty((P, P))
    for i in range(P):
        slopes[i] = al_quantile_slopes(levels, levels[i])
    q = mu[:, None] + sg[:, None] * slopes
    if var_mu is None:
        dv = np.full((P, P), SIGMA_FLOOR)
    else:
        var_mu = np.asarray(var_mu, dtype=float)
        var_sigma = np.asarray(var_sigma, dtype=float)
        cov = np.zeros(P) if cov_mu_sigma is None else np.asarray(cov_mu_sigma, float)
        ent = var_mu[:, None] + slopes ** 2 * var_sigma[:, None] \
            + 2.0 * slopes * cov[:, None]
        dv = np.maximum(ent / max(int(n_draws), 1), SIGMA_FLOOR)
    return InducedQuantileMatrix(levels=levels, q=q, diag_var=dv)


def _kernel_gram(levels: np.ndarray, w: float, s_sq: float) -> np.ndarray:
    d = levels[:, None] - levels[None, :]
    return s_sq * np.exp(-0.5 * d * d / (w * w))


def _spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with a 1e-10 -> 1e-6 multiplicative jitter ladder."""
    scale = float(np.max(np.diag(a)))
    jitter = 0.0
    while True:
        try:
            lo = np.linalg.cholesky(a + jitter * scale * np.eye(a.shape[0]))
            break
        except np.linalg.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 100.0
            if jitter > 1e-6:
                raise NumericalError(
                    "kernel matrix not positive definite within the jitter ladder"
                ) from None
    x = np.linalg.solve(lo, b)
    return np.linalg.solve(lo.T, x)


def gp_fit(matrix: InducedQuantileMatrix, w: float,
           config: GPConfig = GPConfig()) -> np.ndarray:
    """Adjusted quantiles: for each target level, the GP posterior mean fitted
    to that level's column of induced estimates (observations indexed by the
    source level) and evaluated at the target level.

    A weighted average of the induced quantiles: bandwidth -> 0 weights only
    the raw diagonal estimate, bandwidth -> infinity tends to equal weights.
    """
    if w <= 0.0:
        raise ValueError("bandwidth must be > 0")
    levels = matrix.levels
    P = levels.size
    gram = _kernel_gram(levels, w, config.s_sq)
    out = np.empty(P)
    for j in range(P):
        noise = np.maximum(matrix.diag_var[:, j], SIGMA_FLOOR)
        alpha = _spd_solve(gram + np.diag(noise), matrix.q[:, j])
        out[j] = float(gram[j] @ alpha)
    return out


def _is_strictly_increasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) > MONOTONE_MARGIN))


def minimal_bandwidth(matrix: InducedQuantileMatrix,
                      config: GPConfig = GPConfig()) -> float:
    """Smallest bandwidth (within the search tolerance) whose fit is strictly
    increasing across the grid.

    Monotonicity of the fit is not monotone in the bandwidth (noisy estimates
    can cross again as the fit approaches the precision-weighted column
    averages), so a log-spaced scan locates the first increasing fit and
    bisection refines against the last crossing bandwidth below it.
    """
    lo, hi = config.bandwidth_lo, config.bandwidth_hi
    if _is_strictly_increasing(gp_fit(matrix, lo, config)):
        return lo
    scans = [np.geomspace(lo, hi, config.scan_points)]
    if config.bandwidth_emergency_hi > hi:
        # extreme-noise curves can need bandwidths above the nominal window
        scans.append(np.geomspace(hi, config.bandwidth_emergency_hi,
                                  config.scan_points))
    prev = lo
    for grid in scans:
        for w in grid[1:]:
            if _is_strictly_increasing(gp_fit(matrix, float(w), config)):
                a, b = prev, float(w)
                while (b - a) > config.bandwidth_rel_tol * b:
                    mid = math.sqrt(a * b)
                    if _is_strictly_increasing(gp_fit(matrix, mid, config)):
                        b = mid
                    else:
                        a = mid
                return b
            prev = float(w)
    raise NumericalError(
        "no bandwidth in the search window yields noncrossing quantiles"
    )


def select_bandwidth(matrices: Sequence[InducedQuantileMatrix], mode: str,
                     config: GPConfig = GPConfig()):
    """GPt: per-period minimal bandwidths. GP: their maximum, applied uniformly
    (escalated along the scan grid in the rare case the maximum of the minimal
    values re-introduces a crossing somewhere)."""
    if mode not in ("gp", "gpt"):
        raise ValueError(f"bandwidth mode must be 'gp' or 'gpt', got {mode!r}")
    per_t = np.array([minimal_bandwidth(m, config) for m in matrices])
    if mode == "gpt":
        return per_t
    w = float(per_t.max())

    def all_monotone(width: float) -> bool:
        return all(_is_strictly_increasing(gp_fit(m, width, config))
                   for m in matrices)

    if all_monotone(w):
        return w
    for cand in np.geomspace(w, config.bandwidth_emergency_hi,
                             2 * config.scan_points):
        if cand > w and all_monotone(float(cand)):
            return float(cand)
    raise NumericalError(
        "no common bandwidth in the search window yields noncrossing quantiles"
    )


@dataclass
class AdjustedQuantiles:
    """Monotone (or raw) quantile curves per period and per forecast horizon."""

    levels: np.ndarray
    mode: str
    in_sample: np.ndarray | None            # (T, P)
    forecasts: dict[int, np.ndarray] = field(default_factory=dict)  # h -> (P,)
    bandwidths: np.ndarray | float | None = None


def adjust(fits: Sequence[PosteriorDraws], mode: str,
           config: GPConfig = GPConfig(), include_in_sample: bool = True,
           horizons: Sequence[int] = ()) -> AdjustedQuantiles:
    """Post-process a set of per-quantile chains (fitted on the same data)
    into per-period quantile curves.

    raw returns posterior means untouched (crossings possible); gp/gpt return
    curves that are strictly increasing at every period and horizon. The GP
    bandwidth is common across all curves in scope; GPt selects one per curve.
    """
    if mode not in ("raw", "gp", "gpt"):
        raise ValueError(f"adjustment mode must be raw, gp or gpt, got {mode!r}")
    fits = sorted(fits, key=lambda f: f.level)
    levels = np.array([f.level for f in fits])
    grid = QuantileGrid(levels)
    horizons = tuple(int(h) for h in horizons)
    n_draws = fits[0].n_retained

    in_mu = np.stack([f.path_draws.mean(axis=0) for f in fits])  # (P, T)
    if mode == "raw":
        fc = {h: np.array([float(f.forecast_path[h].mean()) for f in fits])
              for h in horizons}
        return AdjustedQuantiles(levels=levels, mode=mode,
                                 in_sample=in_mu.T if include_in_sample else None,
                                 forecasts=fc, bandwidths=None)

    matrices: list[InducedQuantileMatrix] = []
    tags: list[tuple[str, int]] = []
    if include_in_sample:
        moms = [f.moments_in_sample() for f in fits]
        T = in_mu.shape[1]
        for t in range(T):
            matrices.append(build_induced_matrix(
                beta_hat=np.array([m[0][t] for m in moms]),
                sigma_hat=np.array([m[2][t] for m in moms]),
                grid=grid,
                var_mu=np.array([m[1][t] for m in moms]),
                var_sigma=np.array([m[3][t] for m in moms]),
                cov_mu_sigma=np.array([m[4][t] for m in moms]),
                n_draws=n_draws,
            ))
            tags.append(("t", t))
    for h in horizons:
        fmoms = [f.moments_forecast(h) for f in fits]
        matrices.append(build_induced_matrix(
            beta_hat=np.array([m[0] for m in fmoms]),
            sigma_hat=np.array([m[2] for m in fmoms]),
            grid=grid,
            var_mu=np.array([m[1] for m in fmoms]),
            var_sigma=np.array([m[3] for m in fmoms]),
            cov_mu_sigma=np.array([m[4] for m in fmoms]),
            n_draws=n_draws,
        ))
        tags.append(("h", h))

    bw = select_bandwidth(matrices, mode, config)
    widths = bw if np.ndim(bw) else np.full(len(matrices), float(bw))
    curves = [gp_fit(m, float(widths[i]), config) for i, m in enumerate(matrices)]
    for i, c in enumerate(curves):
        if not _is_strictly_increasing(c):
            raise NumericalError(f"adjusted curve not monotone for {tags[i]}")

    in_sample = None
    if include_in_sample:
        T = in_mu.shape[1]
        in_sample = np.stack(curves[:T])
    fc = {h: curves[tags.index(("h", h))] for h in horizons}
    return AdjustedQuantiles(levels=levels, mode=mode, in_sample=in_sample,
                             forecasts=fc, bandwidths=bw)
