"""The full time-varying-parameter quantile-regression Gibbs sampler for one
quantile level: mixture auxiliaries, coefficient paths by FFBS, shrinkage
updates, time-invariant or time-varying scale, and simulation-based forecasts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SCALE_FLOOR, V_FLOOR, NumericalError, SamplerFailure, as_generator
from .distributions import ALParams, sample_gig_half, sample_inverse_gamma
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

#: Gibbs step order, recorded in the output for audit.
GIBBS_STEP_ORDER = ("coefficients", "innovation_variances", "auxiliaries",
                    "scale", "forecast")


@dataclass(frozen=True)
class McmcConfig:
    burn_in: int = 3000
    post_burn: int = 9000
    thin: int = 3

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not (self.post_burn >= self.thin >= 1):
            raise ValueError("need post_burn >= thin >= 1")

    @property
    def retained(self) -> int:
        return self.post_burn // self.thin

    def desk_scale(self) -> "McmcConfig":
        """Scaled-down settings for CI-style runs."""
        return McmcConfig(burn_in=500, post_burn=1500, thin=3)


@dataclass(frozen=True)
class Hyperparams:
    """Weakly informative defaults: iG shrinkage m = n = 0.1; scale priors
    a = b = 0.1 (time-invariant) and e = 3, f = 0.3 (innovation variance of the
    time-varying log scale); standard-normal prior on the pre-sample log scale;
    N(0, 10) prior per coefficient on the pre-sample states."""

    m: float = 0.1
    n: float = 0.1
    a: float = 0.1
    b: float = 0.1
    e: float = 3.0
    f: float = 0.3
    scale_init_mean: float = 0.0
    scale_init_var: float = 1.0
    beta_init_var: float = 10.0


@dataclass(frozen=True)
class ModelSpec:
    """Configuration of one quantile-specific chain."""

    quantile_p: float
    scale_mode: str = "tis"                # "tis" | "tvs"
    shrinkage: ShrinkageKind = ShrinkageKind.DHS
    hyper: Hyperparams = field(default_factory=Hyperparams)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    mh_tuning_c: float = 0.1
    mh_adapt: bool = True

    def __post_init__(self):
        if not (0.0 < self.quantile_p < 1.0):
            raise ValueError("quantile_p must lie strictly inside (0,1)")
        if self.scale_mode not in ("tis", "tvs"):
            raise ValueError(f"scale_mode must be 'tis' or 'tvs', got {self.scale_mode!r}")
        if isinstance(self.shrinkage, str):
            object.__setattr__(self, "shrinkage", ShrinkageKind.from_string(self.shrinkage))
        if self.mh_tuning_c <= 0.0:
            raise ValueError("mh_tuning_c must be > 0")

    @property
    def al(self) -> ALParams:
        return ALParams.from_level(self.quantile_p)


@dataclass
class ChainState:
    """All latent quantities of one quantile-specific chain."""

    beta: np.ndarray              # (T, K)
    beta0: np.ndarray             # (K,) pre-sample coefficient draw
    v: np.ndarray                 # (T,) mixture auxiliaries
    scale: np.ndarray             # (T,) sigma path (constant under TIS)
    omega: np.ndarray             # (T, K) state innovation variances
    shrink: ShsState | DhsState | None
    varsigma_sq: float            # TVS log-scale innovation variance
    h0: float = 0.0               # pre-sample log scale (TVS)
    tuning_c: float = 0.1
    accept_rate: float = float("nan")

    def validate(self):
        if np.any(self.v <= 0.0) or np.any(self.scale <= 0.0) or np.any(self.omega <= 0.0):
            raise ValueError("v, scale and omega must stay strictly positive")


@dataclass
class PosteriorDraws:
    """Retained draws of one chain plus per-horizon forecast simulations."""

    level: float
    beta_draws: np.ndarray                   # (D, T, K)
    path_draws: np.ndarray                   # (D, T) fitted quantile path x_t'b_t
    scale_draws: np.ndarray                  # (D, T)
    forecast_path: dict[int, np.ndarray]     # h -> (D,) x_{T+h}'b_{T+h}
    forecast_scale: dict[int, np.ndarray]    # h -> (D,) sigma_{T+h}
    accept_rate: float
    tuning_c: float
    step_order: tuple[str, ...]
    mcmc: McmcConfig
    scale_mode: str
    shrinkage: ShrinkageKind

    @property
    def n_retained(self) -> int:
        return self.beta_draws.shape[0]

    def path_summary(self):
        """Posterior mean/sd and 5/95 posterior quantiles of the fitted path."""
        mean = self.path_draws.mean(axis=0)
        sd = self.path_draws.std(axis=0, ddof=1)
        q05 = np.quantile(self.path_draws, 0.05, axis=0)
        q95 = np.quantile(self.path_draws, 0.95, axis=0)
        return mean, sd, q05, q95

    def moments_in_sample(self):
        """Per-period mean/var of (path, scale) and their covariance, as needed
        by the noncrossing adjustment."""
        mu = self.path_draws
        sg = self.scale_draws
        mu_mean = mu.mean(axis=0)
        sg_mean = sg.mean(axis=0)
        mu_var = mu.var(axis=0, ddof=1)
        sg_var = sg.var(axis=0, ddof=1)
        cov = ((mu - mu_mean) * (sg - sg_mean)).sum(axis=0) / (mu.shape[0] - 1)
        return mu_mean, mu_var, sg_mean, sg_var, cov

    def moments_forecast(self, horizon: int):
        mu = self.forecast_path[horizon]
        sg = self.forecast_scale[horizon]
        n = mu.size
        cov = float(((mu - mu.mean()) * (sg - sg.mean())).sum() / (n - 1))
        return (float(mu.mean()), float(mu.var(ddof=1)),
                float(sg.mean()), float(sg.var(ddof=1)), cov)


def _as_design(y: np.ndarray, x) -> np.ndarray:
    if x is None:
        return np.ones((y.size, 1))
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.size:
        raise ValueError("regressor matrix row count must match series length")
    return x


def initial_state(spec: ModelSpec, y: np.ndarray, x=None) -> ChainState:
    """Neutral starting values; burn-in absorbs them."""
    X = _as_design(y, x)
    T, K = X.shape
    s0 = float(np.std(y))
    if not np.isfinite(s0) or s0 < SCALE_FLOOR:
        s0 = SCALE_FLOOR
    if spec.shrinkage is ShrinkageKind.DHS:
        shrink = DhsState.initial(T, K)
    elif spec.shrinkage is ShrinkageKind.SHS:
        shrink = ShsState.initial(T, K)
    else:
        shrink = None
    return ChainState(
        beta=np.zeros((T, K)),
        beta0=np.zeros(K),
        v=np.ones(T),
        scale=np.full(T, s0),
        omega=np.full((T, K), 0.01),
        shrink=shrink,
        varsigma_sq=0.1,
        h0=math.log(s0),
        tuning_c=spec.mh_tuning_c,
    )


def step_draw_beta(state: ChainState, y: np.ndarray, X: np.ndarray,
                   al: ALParams, beta_init_var: float,
                   rng: np.random.Generator) -> ChainState:
    """Draw the coefficient path: reweight observations with the current
    auxiliaries/scales so the model is a unit-variance Gaussian TVP regression,
    then one FFBS pass.

    Calls the filter kernel directly (this runs every sweep; the validating
    GaussianStateModel wrapper is for library use).
    """
    T, K = X.shape
    tau = math.sqrt(al.tau_sq)
    w = tau * np.sqrt(state.scale * state.v)
    ytil = (y - al.theta * state.v) / w
    xtil = X / w[:, None]
    beta = np.empty((T, K))
    beta0 = np.empty(K)
    status = _kernels.ffbs_kernel(
        rng, ytil, np.ascontiguousarray(xtil), np.ones(T),
        np.ascontiguousarray(state.omega), np.zeros(K),
        np.full(K, float(beta_init_var)), beta, beta0,
    )
    if status != _kernels.OK:
        raise NumericalError(f"non-finite filter covariance at period {status}")
    state.beta = beta
    state.beta0 = beta0
    return state


def step_update_shrinkage(state: ChainState, spec: ModelSpec,
                          rng: np.random.Generator) -> ChainState:
    increments = np.diff(np.vstack([state.beta0[None, :], state.beta]), axis=0)
    if spec.shrinkage is ShrinkageKind.IG:
        state.omega = update_ig(increments, spec.hyper.m, spec.hyper.n, rng)
    elif spec.shrinkage is ShrinkageKind.SHS:
        state.shrink, state.omega = update_shs(increments, state.shrink, rng)
    else:
        state.shrink, state.omega = update_dhs(increments, state.shrink, rng)
    return state


def step_draw_v(state: ChainState, y: np.ndarray, X: np.ndarray, al: ALParams,
                rng: np.random.Generator) -> ChainState:
    """Mixture auxiliaries from their generalized-inverse-Gaussian conditional
    GIG(1/2, resid^2/(tau^2 sigma), 2/sigma + theta^2/(tau^2 sigma))."""
    resid = y - np.einsum("tk,tk->t", X, state.beta)
    chi = resid * resid / (al.tau_sq * state.scale)
    psi = 2.0 / state.scale + al.theta * al.theta / (al.tau_sq * state.scale)
    try:
        v = sample_gig_half(chi, psi, rng)
    except SamplerFailure as exc:  # pragma: no cover - defensive
        raise SamplerFailure(f"auxiliary draw failed: {exc}") from exc
    state.v = np.maximum(v, V_FLOOR)
    return state


def step_draw_scale(state: ChainState, y: np.ndarray, X: np.ndarray,
                    al: ALParams, spec: ModelSpec,
                    rng: np.random.Generator) -> ChainState:
    """Time-invariant: one inverse-gamma draw filling the path. Time-varying:
    an MH sweep over the log-scale path followed by the innovation-variance
    update (pre-sample state included in the sum of squares)."""
    resid = y - np.einsum("tk,tk->t", X, state.beta)
    if spec.scale_mode == "tis":
        T = y.size
        dev = resid - al.theta * state.v
        shape = 0.5 * (spec.hyper.a + 3.0 * T)
        rate = 0.5 * (spec.hyper.b + 2.0 * state.v.sum()) \
            + float((dev * dev / state.v).sum()) / (2.0 * al.tau_sq)
        sigma = max(sample_inverse_gamma(shape, rate, rng), SCALE_FLOOR)
        state.scale = np.full(T, sigma)
        return state
    h = np.log(state.scale)
    h0, rate = _kernels.al_scale_mh_sweep(
        rng, h, resid, state.v, al.theta, al.tau_sq, state.varsigma_sq,
        spec.hyper.scale_init_mean, spec.hyper.scale_init_var, state.tuning_c,
    )
    state.accept_rate = float(rate)
    state.h0 = float(h0)
    state.scale = np.maximum(np.exp(h), SCALE_FLOOR)
    state.varsigma_sq = sample_innovation_variance(
        np.concatenate([[state.h0], h]), spec.hyper.e, spec.hyper.f, rng
    )
    return state


def _forecast_draw(state: ChainState, spec: ModelSpec, x_future: np.ndarray,
                   horizons: tuple[int, ...], rng: np.random.Generator):
    """Simulate coefficients, shrinkage process and scale forward for one
    retained draw; returns per-horizon fitted quantile and scale."""
    max_h = max(horizons)
    K = state.beta.shape[1]
    if spec.shrinkage is ShrinkageKind.DHS:
        omega_fwd = simulate_dhs_forward(state.shrink, max_h, rng)
    else:
        omega_fwd = np.broadcast_to(state.omega[-1], (max_h, K))
    beta = state.beta[-1].copy()
    h = math.log(state.scale[-1])
    sd_vs = math.sqrt(state.varsigma_sq)
    out_path = np.empty(max_h)
    out_scale = np.empty(max_h)
    for j in range(max_h):
        beta = beta + np.sqrt(omega_fwd[j]) * rng.standard_normal(K)
        if spec.scale_mode == "tvs":
            h = h + sd_vs * rng.standard_normal()
            out_scale[j] = max(math.exp(h), SCALE_FLOOR)
        else:
            out_scale[j] = state.scale[-1]
        out_path[j] = float(x_future[j] @ beta)
    return out_path, out_scale


def run_chain(spec: ModelSpec, y, x=None, horizons=(), seed=0,
              x_future=None) -> PosteriorDraws:
    """Run the full Gibbs sampler for one quantile level.

    y is the series; x an optional T x K regressor matrix (intercept-only when
    omitted). For each retained draw the quantile path is simulated forward at
    every horizon (direct forecasts require x_future rows when regressors are
    supplied).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("series must be a vector with at least 2 observations")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    X = _as_design(y, x)
    T, K = X.shape
    horizons = tuple(int(h) for h in horizons)
    if any(h < 1 for h in horizons):
        raise ValueError("horizons must be >= 1")
    if horizons:
        if x_future is None:
            if x is not None and not np.allclose(X, 1.0):
                raise ValueError("x_future is required for forecasts with regressors")
            x_future = np.ones((max(horizons), K))
        else:
            x_future = np.asarray(x_future, dtype=float).reshape(max(horizons), K)

    rng = as_generator(seed)
    al = spec.al
    state = initial_state(spec, y, x)
    mc = spec.mcmc
    n_keep = mc.retained
    beta_draws = np.empty((n_keep, T, K))
    scale_draws = np.empty((n_keep, T))
    fc_path = {h: np.empty(n_keep) for h in horizons}
    fc_scale = {h: np.empty(n_keep) for h in horizons}

    accept_acc = 0.0
    accept_n = 0
    adapt_acc = 0.0
    adapt_n = 0
    kept = 0
    total = mc.burn_in + mc.post_burn
    for sweep in range(1, total + 1):
        try:
            state = step_draw_beta(state, y, X, al, spec.hyper.beta_init_var, rng)
            state = step_update_shrinkage(state, spec, rng)
            state = step_draw_v(state, y, X, al, rng)
            state = step_draw_scale(state, y, X, al, spec, rng)
        except (NumericalError, SamplerFailure) as exc:
            raise type(exc)(f"sweep {sweep}: {exc}") from exc
        if spec.scale_mode == "tvs":
            if sweep <= mc.burn_in and spec.mh_adapt:
                adapt_acc += state.accept_rate
                adapt_n += 1
                if adapt_n == 100:
                    mean_rate = adapt_acc / adapt_n
                    if mean_rate < 0.25:
                        state.tuning_c /= 1.5
                    elif mean_rate > 0.45:
                        state.tuning_c *= 1.5
                    adapt_acc = 0.0
                    adapt_n = 0
            elif sweep > mc.burn_in:
                accept_acc += state.accept_rate
                accept_n += 1
        if sweep > mc.burn_in and (sweep - mc.burn_in) % mc.thin == 0:
            beta_draws[kept] = state.beta
            scale_draws[kept] = state.scale
            if horizons:
                path_fwd, scale_fwd = _forecast_draw(state, spec, x_future,
                                                     horizons, rng)
                for h in horizons:
                    fc_path[h][kept] = path_fwd[h - 1]
                    fc_scale[h][kept] = scale_fwd[h - 1]
            kept += 1
    assert kept == n_keep
    path_draws = np.einsum("dtk,tk->dt", beta_draws, X)
    return PosteriorDraws(
        level=spec.quantile_p,
        beta_draws=beta_draws,
        path_draws=path_draws,
        scale_draws=scale_draws,
        forecast_path=fc_path,
        forecast_scale=fc_scale,
        accept_rate=(accept_acc / accept_n) if accept_n else float("nan"),
        tuning_c=state.tuning_c,
        step_order=GIBBS_STEP_ORDER,
        mcmc=mc,
        scale_mode=spec.scale_mode,
        shrinkage=spec.shrinkage,
    )
