"""Gaussian state-space kernels: forward-filtering backward-sampling for
random-walk coefficient paths, and single-site random-walk Metropolis-Hastings
for log-scale processes."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import NumericalError
from .distributions import ALParams, sample_inverse_gamma


@dataclass
class GaussianStateModel:
    """Linear-Gaussian model with scalar observations and random-walk states.

    obs_var may be a scalar (fixed observation variance, 1 for the reweighted
    quantile regression) or a per-period vector. state_innovation_vars holds
    the diagonal innovation variances per period and coefficient; row t applies
    to the increment between t-1 and t (row 0 against the initial state).
    """

    obs: np.ndarray
    design: np.ndarray
    obs_var: np.ndarray | float
    state_innovation_vars: np.ndarray
    init_mean: np.ndarray
    init_var: np.ndarray

    def __post_init__(self):
        self.obs = np.ascontiguousarray(self.obs, dtype=float)
        self.design = np.ascontiguousarray(self.design, dtype=float)
        if self.design.ndim == 1:
            self.design = self.design[:, None]
        T, K = self.design.shape
        if self.obs.shape != (T,):
            raise ValueError("obs length must equal design row count")
        self.obs_var = np.ascontiguousarray(
            np.broadcast_to(np.asarray(self.obs_var, dtype=float), (T,))
        )
        self.state_innovation_vars = np.ascontiguousarray(
            self.state_innovation_vars, dtype=float
        )
        if self.state_innovation_vars.ndim == 1:
            self.state_innovation_vars = self.state_innovation_vars[:, None]
        if self.state_innovation_vars.shape != (T, K):
            raise ValueError("state_innovation_vars must be T x K")
        self.init_mean = np.ascontiguousarray(
            np.broadcast_to(np.asarray(self.init_mean, dtype=float), (K,))
        )
        self.init_var = np.ascontiguousarray(
            np.broadcast_to(np.asarray(self.init_var, dtype=float), (K,))
        )
        if np.any(self.obs_var <= 0.0) or np.any(self.init_var <= 0.0):
            raise ValueError("observation and initial-state variances must be > 0")
        if np.any(self.state_innovation_vars < 0.0):
            raise ValueError("state innovation variances must be >= 0")
        for name, arr in (("obs", self.obs), ("design", self.design),
                          ("obs_var", self.obs_var),
                          ("state_innovation_vars", self.state_innovation_vars)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def T(self) -> int:
        return self.design.shape[0]

    @property
    def K(self) -> int:
        return self.design.shape[1]


@dataclass
class LogScalePath:
    """Random-walk path of log-scales with its innovation variance and
    initial-state prior. ``init_draw`` carries the most recent draw of the
    pre-sample state (needed for the innovation-variance update)."""

    h: np.ndarray
    innovation_var: float
    init_mean: float = 0.0
    init_var: float = 1.0
    init_draw: float | None = None

    def __post_init__(self):
        self.h = np.ascontiguousarray(self.h, dtype=float)
        if self.h.ndim != 1 or self.h.size < 1:
            raise ValueError("h must be a nonempty vector")
        if not np.all(np.isfinite(np.exp(self.h))):
            raise ValueError("exp(h) must be finite")
        if not (np.isfinite(self.innovation_var) and self.innovation_var > 0.0):
            raise ValueError("innovation_var must be > 0")
        if not (np.isfinite(self.init_var) and self.init_var > 0.0):
            raise ValueError("init_var must be > 0")


def ffbs(model: GaussianStateModel, rng: np.random.Generator,
         return_initial: bool = False):
    """One joint draw of the state path from its smoothing distribution.

    Returns the T x K path, or (path, initial_state_draw) when
    ``return_initial`` is set.
    """
    T, K = model.T, model.K
    states = np.empty((T, K))
    init_draw = np.empty(K)
    status = _kernels.ffbs_kernel(
        rng, model.obs, model.design, model.obs_var,
        model.state_innovation_vars, model.init_mean, model.init_var,
        states, init_draw,
    )
    if status != _kernels.OK:
        raise NumericalError(f"non-finite filter covariance at period {status}")
    if return_initial:
        return states, init_draw
    return states


def joint_posterior_moments(model: GaussianStateModel):
    """Exact joint-Gaussian posterior mean/covariance of the stacked state path
    by a dense solve. Brute-force oracle for small T*K; independent of the
    sequential filter.
    """
    T, K = model.T, model.K
    n = T * K
    # prior: b_t = b0 + sum_{u<=t} eta_u with b0 ~ N(m0, diag(P0))
    mean_prior = np.tile(model.init_mean, T)
    cov_prior = np.zeros((n, n))
    for k in range(K):
        cum = np.cumsum(model.state_innovation_vars[:, k])
        for t in range(T):
            for s in range(T):
                cov_prior[t * K + k, s * K + k] = model.init_var[k] + cum[min(t, s)]
    H = np.zeros((T, n))
    for t in range(T):
        H[t, t * K:(t + 1) * K] = model.design[t]
    R_inv = 1.0 / model.obs_var
    prec = np.linalg.inv(cov_prior) + H.T @ (R_inv[:, None] * H)
    cov_post = np.linalg.inv(prec)
    mean_post = cov_post @ (
        np.linalg.solve(cov_prior, mean_prior) + H.T @ (R_inv * model.obs)
    )
    return mean_post.reshape(T, K), cov_post


def sample_log_scale_path(current: LogScalePath, residuals: np.ndarray,
                          v: np.ndarray, al: ALParams, tuning_c: float,
                          rng: np.random.Generator):
    """One full t-by-t MH sweep over the asymmetric-Laplace log-scale path.

    residuals are y_t - x_t'b_t; v the mixture auxiliaries. z_t = v_t/exp(h_t)
    is computed once from the incoming path and held fixed during the sweep.
    The pre-sample state is refreshed from its exact Gaussian conditional.
    Returns (updated path, acceptance_rate).
    """
    if tuning_c <= 0.0:
        raise ValueError("tuning_c must be > 0")
    residuals = np.ascontiguousarray(residuals, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("v must be > 0")
    h = current.h.copy()
    h0, rate = _kernels.al_scale_mh_sweep(
        rng, h, residuals, v, al.theta, al.tau_sq,
        current.innovation_var, current.init_mean, current.init_var, tuning_c,
    )
    out = replace(current, h=h, init_draw=float(h0))
    return out, float(rate)


def sample_sv_log_variance_path(current: LogScalePath, residuals: np.ndarray,
                                tuning_c: float, rng: np.random.Generator):
    """Same MH sweep for a Gaussian likelihood N(resid_t; 0, exp(h_t))
    (the stochastic-volatility block of the mean-based baseline)."""
    if tuning_c <= 0.0:
        raise ValueError("tuning_c must be > 0")
    residuals = np.ascontiguousarray(residuals, dtype=float)
    h = current.h.copy()
    h0, rate = _kernels.sv_mh_sweep(
        rng, h, residuals, current.innovation_var,
        current.init_mean, current.init_var, tuning_c,
    )
    out = replace(current, h=h, init_draw=float(h0))
    return out, float(rate)


def sample_innovation_variance(state_path: np.ndarray, prior_shape: float,
                               prior_rate: float, rng: np.random.Generator) -> float:
    """Inverse-gamma draw for a random-walk innovation variance given the path.

    Shape prior_shape + (len-1)/2, rate prior_rate + sum(diff^2)/2. Prepend the
    sampled pre-sample state to the path to include the first increment.
    """
    path = np.asarray(state_path, dtype=float)
    if path.ndim != 1 or path.size < 2:
        raise ValueError("state_path must be a vector with at least 2 entries")
    d = np.diff(path)
    shape = prior_shape + 0.5 * (path.size - 1)
    rate = prior_rate + 0.5 * float(d @ d)
    return float(sample_inverse_gamma(shape, rate, rng))
