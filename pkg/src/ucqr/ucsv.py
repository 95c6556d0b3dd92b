"""The mean-based baseline: an unobserved-component model with stochastic
volatility. Random-walk trend with dynamically shrunk innovation variances,
random-walk log variance sampled site-by-site, forecasts by forward simulation.
Composed from the state-space and shrinkage building blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SCALE_FLOOR, NumericalError, as_generator
from .evaluation import PredictiveDensity
from .sampler import GIBBS_STEP_ORDER, Hyperparams, McmcConfig
from .shrinkage import (
    DhsState,
    ShrinkageKind,
    ShsState,
    simulate_dhs_forward,
    update_dhs,
    update_ig,
    update_shs,
)
from .state_space import sample_innovation_variance


@dataclass(frozen=True)
class UcsvSpec:
    shrinkage: ShrinkageKind = ShrinkageKind.DHS
    hyper: Hyperparams = field(default_factory=Hyperparams)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    mh_tuning_c: float = 0.1
    mh_adapt: bool = True

    def __post_init__(self):
        if isinstance(self.shrinkage, str):
            object.__setattr__(self, "shrinkage", ShrinkageKind.from_string(self.shrinkage))


@dataclass
class UcsvDraws:
    """Retained trend/log-variance paths and per-horizon predictive draws."""

    trend_draws: np.ndarray                    # (D, T)
    logvar_draws: np.ndarray                   # (D, T)
    forecast_mean: dict[int, np.ndarray]       # h -> (D,) trend draws
    forecast_logvar: dict[int, np.ndarray]     # h -> (D,)
    forecast_y: dict[int, np.ndarray]          # h -> (D,) predictive draws
    accept_rate: float
    step_order: tuple[str, ...]
    mcmc: McmcConfig

    @property
    def n_retained(self) -> int:
        return self.trend_draws.shape[0]

    def predictive_density(self, horizon: int, n_grid: int = 2048) -> PredictiveDensity:
        """Exact normal-mixture predictive density over retained draws."""
        return PredictiveDensity.from_gaussian_mixture(
            self.forecast_mean[horizon], np.exp(self.forecast_logvar[horizon]),
            n_grid=n_grid,
        )

    def predictive_quantiles(self, horizon: int, levels) -> np.ndarray:
        return np.asarray(self.predictive_density(horizon).quantile(levels))


def run_ucsv(data, spec: UcsvSpec = UcsvSpec(), horizons=(), seed=0) -> UcsvDraws:
    """Gibbs sampler for the trend/volatility baseline."""
    y = np.asarray(getattr(data, "values", data), dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("series must be a vector with at least 2 observations")
    T = y.size
    horizons = tuple(int(h) for h in horizons)
    rng = as_generator(seed)
    mc = spec.mcmc

    alpha = np.full(T, float(np.mean(y)))
    s0 = max(float(np.std(y)), SCALE_FLOOR)
    h = np.full(T, math.log(s0 ** 2))
    omega = np.full((T, 1), 0.01)
    if spec.shrinkage is ShrinkageKind.DHS:
        shrink = DhsState.initial(T, 1)
    elif spec.shrinkage is ShrinkageKind.SHS:
        shrink = ShsState.initial(T, 1)
    else:
        shrink = None
    varsigma_sq = 0.1
    tuning_c = spec.mh_tuning_c

    n_keep = mc.retained
    trend_draws = np.empty((n_keep, T))
    logvar_draws = np.empty((n_keep, T))
    fc_mean = {hh: np.empty(n_keep) for hh in horizons}
    fc_logvar = {hh: np.empty(n_keep) for hh in horizons}
    fc_y = {hh: np.empty(n_keep) for hh in horizons}

    accept_acc = 0.0
    accept_n = 0
    adapt_acc = 0.0
    adapt_n = 0
    kept = 0
    ones = np.ones((T, 1))
    alpha_mat = np.empty((T, 1))
    alpha0 = np.empty(1)
    init_mean = np.zeros(1)
    init_var = np.full(1, spec.hyper.beta_init_var)
    for sweep in range(1, mc.burn_in + mc.post_burn + 1):
        # trend path given the volatility path
        status = _kernels.ffbs_kernel(rng, y, ones, np.exp(h), omega,
                                      init_mean, init_var, alpha_mat, alpha0)
        if status != _kernels.OK:
            raise NumericalError(
                f"sweep {sweep}: non-finite filter covariance at period {status}"
            )
        alpha = alpha_mat[:, 0].copy()
        # trend innovation variances
        increments = np.diff(np.concatenate([alpha0, alpha]))[:, None]
        if spec.shrinkage is ShrinkageKind.DHS:
            shrink, omega = update_dhs(increments, shrink, rng)
        elif spec.shrinkage is ShrinkageKind.SHS:
            shrink, omega = update_shs(increments, shrink, rng)
        else:
            omega = update_ig(increments, spec.hyper.m, spec.hyper.n, rng)
        # log-variance path and its innovation variance
        h0, rate = _kernels.sv_mh_sweep(
            rng, h, y - alpha, varsigma_sq, spec.hyper.scale_init_mean,
            spec.hyper.scale_init_var, tuning_c,
        )
        varsigma_sq = sample_innovation_variance(
            np.concatenate([[h0], h]), spec.hyper.e, spec.hyper.f, rng
        )
        if sweep <= mc.burn_in and spec.mh_adapt:
            adapt_acc += rate
            adapt_n += 1
            if adapt_n == 100:
                mean_rate = adapt_acc / adapt_n
                if mean_rate < 0.25:
                    tuning_c /= 1.5
                elif mean_rate > 0.45:
                    tuning_c *= 1.5
                adapt_acc = 0.0
                adapt_n = 0
        elif sweep > mc.burn_in:
            accept_acc += rate
            accept_n += 1
        if sweep > mc.burn_in and (sweep - mc.burn_in) % mc.thin == 0:
            trend_draws[kept] = alpha
            logvar_draws[kept] = h
            if horizons:
                max_h = max(horizons)
                if spec.shrinkage is ShrinkageKind.DHS:
                    om_fwd = simulate_dhs_forward(shrink, max_h, rng)[:, 0]
                else:
                    om_fwd = np.full(max_h, omega[-1, 0])
                a = alpha[-1]
                hh_ = h[-1]
                sd_vs = math.sqrt(varsigma_sq)
                for j in range(max_h):
                    a = a + math.sqrt(om_fwd[j]) * rng.standard_normal()
                    hh_ = hh_ + sd_vs * rng.standard_normal()
                    step = j + 1
                    if step in fc_mean:
                        fc_mean[step][kept] = a
                        fc_logvar[step][kept] = hh_
                        fc_y[step][kept] = a + math.exp(0.5 * hh_) * rng.standard_normal()
            kept += 1
    return UcsvDraws(
        trend_draws=trend_draws,
        logvar_draws=logvar_draws,
        forecast_mean=fc_mean,
        forecast_logvar=fc_logvar,
        forecast_y=fc_y,
        accept_rate=(accept_acc / accept_n) if accept_n else float("nan"),
        step_order=GIBBS_STEP_ORDER,
        mcmc=mc,
    )
