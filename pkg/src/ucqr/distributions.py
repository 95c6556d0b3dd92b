"""Samplers and density/quantile evaluators for the non-Gaussian families the
Gibbs sampler needs: asymmetric Laplace, generalized inverse Gaussian,
Polya-Gamma, exponential, inverse gamma and half-Cauchy.

All samplers are pure given an explicit ``np.random.Generator``; with a fixed
seed the draw sequence is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import REJECTION_CAP, SamplerFailure
from . import _kernels


@dataclass(frozen=True)
class ALParams:
    """Quantile level with the location/variance multipliers of the
    exponential-normal mixture representation of the asymmetric Laplace."""

    p: float
    theta: float
    tau_sq: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"quantile level must be in (0,1), got {self.p}")
        pq = self.p * (1.0 - self.p)
        if self.theta != (1.0 - 2.0 * self.p) / pq:
            raise ValueError("theta inconsistent with p")
        if self.tau_sq != 2.0 / pq:
            raise ValueError("tau_sq inconsistent with p")

    @classmethod
    def from_level(cls, p: float) -> "ALParams":
        p = float(p)
        if not (0.0 < p < 1.0):
            raise ValueError(f"quantile level must be in (0,1), got {p}")
        pq = p * (1.0 - p)
        return cls(p=p, theta=(1.0 - 2.0 * p) / pq, tau_sq=2.0 / pq)


@dataclass(frozen=True)
class GIGParams:
    """Arguments of GIG(lam, chi, psi) with density ~ x^(lam-1) exp(-(chi/x + psi*x)/2)."""

    lam: float
    chi: float
    psi: float

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ValueError("lam must be finite")
        if not (np.isfinite(self.chi) and self.chi >= 0.0):
            raise ValueError(f"chi must be finite and >= 0, got {self.chi}")
        if not (np.isfinite(self.psi) and self.psi > 0.0):
            raise ValueError(f"psi must be finite and > 0, got {self.psi}")
        if self.lam <= 0.0 and self.chi <= 0.0:
            raise ValueError("chi must be > 0 when lam <= 0")


def check_loss(x, p: float):
    """rho_p(x) = x (p - 1{x < 0})."""
    x = np.asarray(x, dtype=float)
    return x * (p - (x < 0.0))


def al_density(x, scale, params: ALParams):
    """Asymmetric Laplace density p(1-p)/scale * exp(-rho_p(x)/scale)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    scale = float(scale)
    if not (np.isfinite(scale) and scale > 0.0):
        raise ValueError(f"scale must be > 0, got {scale}")
    p = params.p
    out = p * (1.0 - p) / scale * np.exp(-check_loss(x, p) / scale)
    return out if out.ndim else float(out)


def al_quantile_function(ptilde, mu, scale, p: float):
    """Quantile function of AL_p(mu, scale) at level(s) ptilde.

    Two branches, continuous and equal to mu at ptilde = p:
    mu + scale/(1-p) * log(ptilde/p) for ptilde <= p, else
    mu - scale/p * log((1-ptilde)/(1-p)).
    """
    pt = np.asarray(ptilde, dtype=float)
    if np.any(pt <= 0.0) or np.any(pt >= 1.0):
        raise ValueError("ptilde must lie strictly inside (0,1)")
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly inside (0,1)")
    scale = float(scale)
    if not (np.isfinite(scale) and scale > 0.0):
        raise ValueError(f"scale must be > 0, got {scale}")
    lower = mu + scale / (1.0 - p) * np.log(pt / p)
    upper = mu - scale / p * np.log((1.0 - pt) / (1.0 - p))
    out = np.where(pt <= p, lower, upper)
    return out if out.ndim else float(out)


def al_quantile_slopes(ptilde, p: float) -> np.ndarray:
    """d/d(scale) of the AL quantile function; the function is mu + scale*slope."""
    pt = np.asarray(ptilde, dtype=float)
    lower = np.log(pt / p) / (1.0 - p)
    upper = -np.log((1.0 - pt) / (1.0 - p)) / p
    return np.where(pt <= p, lower, upper)


def sample_gig(params: GIGParams, rng: np.random.Generator, size=None):
    """Draw from GIG(lam, chi, psi).

    lam = +-1/2 uses the exact inverse-Gaussian reduction; chi = 0 (with
    lam > 0) is the exact Gamma(lam, psi/2) limit; anything else goes through
    scipy's ratio-of-uniforms generator.
    """
    lam, chi, psi = params.lam, params.chi, params.psi
    n = 1 if size is None else int(size)
    if lam == 0.5:
        out = np.empty(n)
        _kernels.gig_half_vector(rng, np.full(n, chi), np.full(n, psi), out)
    elif lam == -0.5:
        out = np.empty(n)
        _kernels.gig_half_vector(rng, np.full(n, psi), np.full(n, chi), out)
        out = 1.0 / out
    elif chi == 0.0:
        out = rng.gamma(lam, 2.0 / psi, size=n)
    else:
        from scipy.stats import geninvgauss

        omega = math.sqrt(chi * psi)
        z = geninvgauss.rvs(lam, omega, size=n, random_state=rng)
        out = np.sqrt(chi / psi) * np.asarray(z, dtype=float)
    if size is None:
        return float(out[0])
    return out


def sample_gig_half(chi, psi, rng: np.random.Generator) -> np.ndarray:
    """Vectorized GIG(1/2, chi_i, psi_i) draws (the sampler's hot path)."""
    chi = np.ascontiguousarray(chi, dtype=float)
    psi = np.ascontiguousarray(psi, dtype=float)
    if np.any(chi < 0.0) or np.any(~np.isfinite(chi)):
        raise ValueError("chi must be finite and >= 0")
    if np.any(psi <= 0.0) or np.any(~np.isfinite(psi)):
        raise ValueError("psi must be finite and > 0")
    out = np.empty(chi.shape[0])
    _kernels.gig_half_vector(rng, chi, psi, out)
    return out


def sample_polya_gamma(b, c, rng: np.random.Generator, size=None):
    """Draw from PG(b, c).

    Integer b uses the exact Devroye alternating-series sampler; non-integer b
    falls back to the 200-term sum-of-gammas truncation.
    """
    b = float(b)
    if not (np.isfinite(b) and b > 0.0):
        raise ValueError(f"b must be > 0, got {b}")
    c = float(c)
    n = 1 if size is None else int(size)
    if b == int(b):
        out = np.empty(n)
        for i in range(n):
            x = _kernels.pg_draw_one(rng, int(b), c, REJECTION_CAP)
            if x < 0.0:
                raise SamplerFailure("PG rejection sampler exceeded its iteration cap")
            out[i] = x
    else:
        k = np.arange(1, 201)
        denom = (k - 0.5) ** 2 + c * c / (4.0 * math.pi * math.pi)
        g = rng.gamma(b, 1.0, size=(n, 200))
        out = (g / denom).sum(axis=1) / (2.0 * math.pi * math.pi)
    if size is None:
        return float(out[0])
    return out


def sample_polya_gamma_vector(c, rng: np.random.Generator) -> np.ndarray:
    """PG(1, c_i) draws for an array of tilts (the dhs hot path)."""
    c = np.ascontiguousarray(c, dtype=float)
    out = np.empty(c.shape[0])
    status = _kernels.pg_draw_vector(rng, c, REJECTION_CAP, out)
    if status != _kernels.OK:
        raise SamplerFailure(
            f"PG rejection sampler exceeded its iteration cap at index {status}"
        )
    return out


def sample_exponential(scale, rng: np.random.Generator, size=None):
    """Exponential draw(s) with mean ``scale``."""
    scale = np.asarray(scale, dtype=float)
    if np.any(scale <= 0.0) or np.any(~np.isfinite(scale)):
        raise ValueError("scale must be finite and > 0")
    out = rng.exponential(scale, size=size)
    return float(out) if size is None and out.ndim == 0 else out


def sample_inverse_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Inverse-gamma draw(s): density ~ x^(-shape-1) exp(-rate/x)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0.0) or np.any(~np.isfinite(shape)):
        raise ValueError("shape must be finite and > 0")
    if np.any(rate <= 0.0) or np.any(~np.isfinite(rate)):
        raise ValueError("rate must be finite and > 0")
    g = rng.gamma(shape, 1.0, size=size)
    g = np.maximum(g, 1e-300)
    out = rate / g
    return float(out) if size is None and np.ndim(out) == 0 else out


def sample_half_cauchy(scale, rng: np.random.Generator, size=None):
    """|scale * standard Cauchy| draw(s)."""
    scale = float(scale)
    if not (np.isfinite(scale) and scale > 0.0):
        raise ValueError(f"scale must be > 0, got {scale}")
    u = rng.random(size=size)
    out = scale * np.abs(np.tan(math.pi * (np.asarray(u) - 0.5)))
    return float(out) if size is None else out


def sample_al_mixture(p: float, scale, rng: np.random.Generator, size=None):
    """AL_p(scale) noise via its exponential-normal mixture:
    theta*v + tau*sqrt(scale*v)*u with v ~ Exp(scale), u ~ N(0,1)."""
    al = ALParams.from_level(p)
    v = rng.exponential(scale, size=size)
    u = rng.standard_normal(size=size)
    out = al.theta * v + math.sqrt(al.tau_sq) * np.sqrt(scale * v) * u
    return float(out) if size is None else out
