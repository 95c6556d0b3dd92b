"""Priors on the state-innovation variances of the coefficient paths:
constant inverse-gamma, static horseshoe (global-local half-Cauchy, no
persistence) and dynamic horseshoe (AR(1) log-variance process with
Z-distributed innovations, made conditionally Gaussian by Polya-Gamma
augmentation and a log-chi-square normal mixture).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .core import REJECTION_CAP, NumericalError, SamplerFailure
from .distributions import sample_inverse_gamma

# Pseudo-observation offset guarding log(0) in the log-increment link.
LOG_OFFSET = 1e-10

# Floors keeping scales strictly positive under total shrinkage.
_SCALE2_FLOOR = 1e-100
_SCALE2_CEIL = 1e100
_PSI_CLIP = 300.0

# 10-component normal mixture approximating the log chi-square(1) density
# (Omori, Chib, Shephard & Nakajima 2007).
_MIX_PROB = np.array([
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
    0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
])
_MIX_MEAN = np.array([
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
    -1.97278, -3.46788, -5.55246, -8.68384, -14.65000,
])
_MIX_VAR = np.array([
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
    0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
])


class ShrinkageKind(str, Enum):
    IG = "ig"
    SHS = "shs"
    DHS = "dhs"

    @classmethod
    def from_string(cls, text: str) -> "ShrinkageKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown shrinkage prior {text!r}: expected one of ig, shs, dhs"
            ) from None


@dataclass
class ShsState:
    """Latent scales of the static horseshoe: omega = lambda_k^2 * phi_{k,t}^2."""

    lambda_k: np.ndarray       # (K,) global scale per coefficient
    phi_local: np.ndarray      # (T, K) local scales
    aux_local: np.ndarray      # (T, K) inverse-gamma auxiliaries for phi
    aux_global: np.ndarray     # (K,) inverse-gamma auxiliaries for lambda

    @classmethod
    def initial(cls, T: int, K: int) -> "ShsState":
        return cls(
            lambda_k=np.ones(K),
            phi_local=np.ones((T, K)),
            aux_local=np.ones((T, K)),
            aux_global=np.ones(K),
        )


@dataclass
class DhsState:
    """Latent state of the dynamic horseshoe.

    psi is the log innovation-variance path; its unconditional level decomposes
    additively as log(lambda0) + log(lambda_k), sampled as intercept components
    with exact Polya-Gamma augmentation of the log half-Cauchy priors
    (lambda0 ~ C+(0, 1/(T K)), lambda_k ~ C+(0, 1)).
    """

    psi: np.ndarray            # (T, K)
    phi: np.ndarray            # (K,) AR coefficients in (-1, 1)
    lambda0: float             # global scale
    lambda_k: np.ndarray       # (K,) coefficient-specific scales
    pg_aux: np.ndarray         # (T, K) PG auxiliaries for the innovations
    zc: float = 0.5
    zd: float = 0.5
    phi_fixed: bool = False    # freeze the AR coefficient (testing hook)

    @property
    def mu_psi(self) -> np.ndarray:
        return math.log(self.lambda0) + np.log(self.lambda_k)

    @classmethod
    def initial(cls, T: int, K: int, psi0: float = math.log(0.01),
                phi0: float = 0.9) -> "DhsState":
        lam0 = 1.0 / (T * K)
        lam_k = np.full(K, math.exp(psi0) / lam0)
        return cls(
            psi=np.full((T, K), psi0),
            phi=np.full(K, phi0),
            lambda0=lam0,
            lambda_k=lam_k,
            pg_aux=np.full((T, K), 0.25),
        )


def _check_increments(increments: np.ndarray) -> np.ndarray:
    eta = np.asarray(increments, dtype=float)
    if eta.ndim == 1:
        eta = eta[:, None]
    if eta.ndim != 2 or eta.shape[0] < 1:
        raise ValueError("increments must be a T x K matrix")
    return eta


def update_ig(increments, prior_m: float, prior_n: float,
              rng: np.random.Generator) -> np.ndarray:
    """Conjugate update of a time-constant innovation variance per coefficient;
    IG(m + T/2, n + sum(eta^2)/2), broadcast to all periods."""
    eta = _check_increments(increments)
    T, K = eta.shape
    shape = prior_m + 0.5 * T
    rate = prior_n + 0.5 * (eta * eta).sum(axis=0)
    omega_k = np.array([sample_inverse_gamma(shape, rate[k], rng) for k in range(K)])
    return np.broadcast_to(omega_k, (T, K)).copy()


def update_shs(increments, state: ShsState,
               rng: np.random.Generator) -> tuple[ShsState, np.ndarray]:
    """One Gibbs sweep of the static horseshoe via the inverse-gamma
    auxiliary representation of the half-Cauchy."""
    eta = _check_increments(increments)
    T, K = eta.shape
    eta2 = eta * eta
    lam2 = np.clip(state.lambda_k ** 2, _SCALE2_FLOOR, _SCALE2_CEIL)
    c = state.aux_local
    d = state.aux_global

    # local scales and their auxiliaries
    rate_phi = 1.0 / c + eta2 / (2.0 * lam2)
    g = np.maximum(rng.gamma(1.0, 1.0, size=(T, K)), 1e-300)
    phi2 = np.clip(rate_phi / g, _SCALE2_FLOOR, _SCALE2_CEIL)
    g = np.maximum(rng.gamma(1.0, 1.0, size=(T, K)), 1e-300)
    c = (1.0 + 1.0 / phi2) / g

    # global scales and their auxiliaries
    rate_lam = 1.0 / d + (eta2 / (2.0 * phi2)).sum(axis=0)
    g = np.maximum(rng.gamma(0.5 * (T + 1.0), 1.0, size=K), 1e-300)
    lam2 = np.clip(rate_lam / g, _SCALE2_FLOOR, _SCALE2_CEIL)
    g = np.maximum(rng.gamma(1.0, 1.0, size=K), 1e-300)
    d = (1.0 + 1.0 / lam2) / g

    omega = np.clip(lam2 * phi2, _SCALE2_FLOOR ** 2, _SCALE2_CEIL)
    new = ShsState(lambda_k=np.sqrt(lam2), phi_local=np.sqrt(phi2),
                   aux_local=c, aux_global=d)
    return new, omega


def update_dhs(increments, state: DhsState,
               rng: np.random.Generator) -> tuple[DhsState, np.ndarray]:
    """One Gibbs sweep of the dynamic horseshoe.

    (i) PG auxiliaries from the current AR(1) innovations, (ii) the log-variance
    path by FFBS on the log-squared-increment pseudo-observations (normal
    mixture indicators for the log chi-square error), (iii) AR coefficient,
    then the global and coefficient-specific intercept scales via the exact PG
    augmentation of their log half-Cauchy priors. Fused into one compiled
    sweep; this is the sampler's hottest block.
    """
    eta = _check_increments(increments)
    T, K = eta.shape
    if state.psi.shape != (T, K):
        raise ValueError("state shape does not match increments")
    psi = np.ascontiguousarray(state.psi, dtype=float).copy()
    phi = state.phi.astype(float).copy()
    intercepts = np.empty(K + 1)
    intercepts[0] = math.log(max(state.lambda0, 1e-300))
    intercepts[1:] = np.log(np.maximum(state.lambda_k, 1e-300))
    xi = np.empty((T, K))
    status = _kernels.dhs_sweep_kernel(
        rng, np.ascontiguousarray(eta), psi, phi, intercepts, xi,
        REJECTION_CAP, math.log(1.0 / (T * K)), LOG_OFFSET,
        _MIX_PROB, _MIX_MEAN, _MIX_VAR, bool(state.phi_fixed), 0.1, _PSI_CLIP,
    )
    if status != _kernels.OK:
        raise NumericalError(f"dynamic-shrinkage update failed at index {status}")
    omega = np.exp(psi)
    new = DhsState(psi=psi, phi=phi, lambda0=math.exp(intercepts[0]),
                   lambda_k=np.exp(intercepts[1:]), pg_aux=xi,
                   zc=state.zc, zd=state.zd, phi_fixed=state.phi_fixed)
    return new, omega


def _pg_one(z: float, rng: np.random.Generator) -> float:
    x = _kernels.pg_draw_one(rng, 1, z, REJECTION_CAP)
    if x < 0.0:
        raise SamplerFailure("PG rejection sampler exceeded its iteration cap")
    return max(x, 1e-12)


def simulate_dhs_forward(state: DhsState, steps: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Simulate the log-variance process forward from its last state; exact
    Z innovations via the PG mixture. Returns (steps, K) innovation variances."""
    K = state.psi.shape[1]
    mu = state.mu_psi
    psi = state.psi[-1].copy()
    out = np.empty((steps, K))
    for j in range(steps):
        for k in range(K):
            xi = _pg_one(0.0, rng)
            nu = rng.standard_normal() / math.sqrt(xi)
            psi[k] = mu[k] + state.phi[k] * (psi[k] - mu[k]) + nu
            out[j, k] = math.exp(min(max(psi[k], -_PSI_CLIP), _PSI_CLIP))
    return out


def log_half_cauchy_prior_chain(scale: float, n_sweeps: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Prior-only Gibbs chain for lambda ~ C+(0, scale) through the PG
    augmentation of 2 log(lambda); used to verify the intercept machinery."""
    m = 2.0 * math.log(scale)
    u = 0.0
    out = np.empty(n_sweeps)
    for i in range(n_sweeps):
        xi = _pg_one(u, rng)
        u = rng.standard_normal() / math.sqrt(xi)
        out[i] = math.exp(0.5 * (u + m))
    return out
