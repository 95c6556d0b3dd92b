import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ucqr.distributions import (
    ALParams,
    GIGParams,
    al_density,
    al_quantile_function,
    sample_al_mixture,
    sample_exponential,
    sample_gig,
    sample_gig_half,
    sample_half_cauchy,
    sample_inverse_gamma,
    sample_polya_gamma,
    sample_polya_gamma_vector,
)


def al_cdf(x, p, scale=1.0):
    # closed-form CDF used as the independent oracle for the mixture check
    x = np.asarray(x, dtype=float)
    lo = p * np.exp((1.0 - p) * x / scale)
    hi = 1.0 - (1.0 - p) * np.exp(-p * x / scale)
    return np.where(x <= 0.0, lo, hi)


class TestALParams:
    def test_from_level_identities(self):
        al = ALParams.from_level(0.05)
        assert al.theta == (1 - 2 * 0.05) / (0.05 * 0.95)
        assert al.tau_sq == 2 / (0.05 * 0.95)
        assert al.tau_sq > 0

    def test_median_has_zero_theta(self):
        assert ALParams.from_level(0.5).theta == 0.0

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.7])
    def test_level_domain(self, p):
        with pytest.raises(ValueError):
            ALParams.from_level(p)

    def test_inconsistent_fields_rejected(self):
        with pytest.raises(ValueError):
            ALParams(p=0.5, theta=1.0, tau_sq=8.0)


class TestALDensity:
    def test_value_at_zero_median(self):
        assert al_density(0.0, 1.0, ALParams.from_level(0.5)) == 0.25

    def test_normalization(self):
        # right tail decays at rate p/scale, so the domain must extend far past
        # 1/p to capture the mass; quadrature over the two half-lines
        al = ALParams.from_level(0.05)
        left, _ = integrate.quad(lambda x: al_density(x, 1.0, al), -np.inf, 0.0)
        right, _ = integrate.quad(lambda x: al_density(x, 1.0, al), 0.0, np.inf)
        assert abs(left + right - 1.0) < 1e-6

    @pytest.mark.parametrize("p", [0.05, 0.5, 0.95])
    def test_p_quantile_is_zero(self, p):
        # numeric CDF inversion; the quadrature runs from -inf so neither tail
        # is truncated whatever the asymmetry
        al = ALParams.from_level(p)

        def cdf(x):
            val, _ = integrate.quad(lambda u: al_density(u, 1.0, al),
                                    -np.inf, x, limit=400)
            return val

        from scipy.optimize import brentq

        root = brentq(lambda x: cdf(x) - p, -30, 30, xtol=1e-10)
        assert abs(root) < 1e-6

    def test_domain_errors(self):
        al = ALParams.from_level(0.5)
        with pytest.raises(ValueError):
            al_density(np.nan, 1.0, al)
        with pytest.raises(ValueError):
            al_density(0.0, 0.0, al)


class TestALQuantileFunction:
    def test_at_own_level_returns_location(self):
        for p in (0.1, 0.5, 0.9):
            assert al_quantile_function(p, 3.7, 2.0, p) == pytest.approx(3.7)

    def test_branch_value(self):
        # first branch: mu + scale/(1-p) log(ptilde/p)
        assert al_quantile_function(0.25, 0.0, 1.0, 0.5) == pytest.approx(
            2.0 * math.log(0.5), abs=1e-12)

    def test_monotone_on_grid(self):
        grid = np.arange(0.05, 0.951, 0.05)
        vals = al_quantile_function(grid, 1.2, 0.7, 0.1)
        assert np.all(np.diff(vals) > 0)

    def test_boundary_levels_rejected(self):
        with pytest.raises(ValueError):
            al_quantile_function(0.0, 0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            al_quantile_function(1.0, 0.0, 1.0, 0.5)

    @given(p=st.floats(0.02, 0.98), mu=st.floats(-5, 5), scale=st.floats(0.1, 5))
    @settings(max_examples=50, deadline=None)
    def test_branches_agree_at_p(self, p, mu, scale):
        eps = 1e-9
        below = al_quantile_function(p - eps, mu, scale, p)
        above = al_quantile_function(p + eps, mu, scale, p)
        assert abs(above - below) < 1e-6 * max(1.0, abs(mu) + scale)


class TestGIG:
    def test_param_validation(self):
        with pytest.raises(ValueError):
            GIGParams(lam=0.5, chi=-1.0, psi=1.0)
        with pytest.raises(ValueError):
            GIGParams(lam=0.5, chi=1.0, psi=0.0)
        with pytest.raises(ValueError):
            GIGParams(lam=-0.5, chi=0.0, psi=1.0)

    def test_bessel_ratio_mean(self):
        # E[X] = sqrt(chi/psi) K_{3/2}(s)/K_{1/2}(s), s = sqrt(chi psi);
        # K_{3/2}/K_{1/2} = 1 + 1/s, so GIG(1/2, 4, 1) has mean 2*(1+1/2) = 3.
        rng = np.random.default_rng(101)
        x = sample_gig(GIGParams(0.5, 4.0, 1.0), rng, size=1_000_000)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(3.0, rel=0.01)

    def test_small_chi_gamma_limit(self):
        rng = np.random.default_rng(102)
        x = sample_gig(GIGParams(0.5, 1e-10, 2.0), rng, size=1_000_000)
        assert x.mean() == pytest.approx(0.5, rel=0.02)

    def test_general_lambda_against_bessel(self):
        from scipy.special import kv

        rng = np.random.default_rng(103)
        lam, chi, psi = 1.2, 2.0, 3.0
        x = sample_gig(GIGParams(lam, chi, psi), rng, size=200_000)
        s = math.sqrt(chi * psi)
        mean = math.sqrt(chi / psi) * kv(lam + 1, s) / kv(lam, s)
        assert x.mean() == pytest.approx(mean, rel=0.01)

    def test_vector_form_validates(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_gig_half(np.array([-1.0]), np.array([1.0]), rng)
        with pytest.raises(ValueError):
            sample_gig_half(np.array([1.0]), np.array([0.0]), rng)


class TestPolyaGamma:
    def test_mean_at_zero_tilt(self):
        rng = np.random.default_rng(104)
        x = sample_polya_gamma(1, 0.0, rng, size=1_000_000)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(0.25, rel=0.01)

    def test_mean_tilted(self):
        # E[PG(b, c)] = b/(2c) tanh(c/2)
        rng = np.random.default_rng(105)
        x = sample_polya_gamma(1, 2.0, rng, size=400_000)
        assert x.mean() == pytest.approx(0.25 * math.tanh(1.0), rel=0.015)

    def test_tilt_sign_symmetric(self):
        rng = np.random.default_rng(106)
        x = sample_polya_gamma_vector(np.full(200_000, -2.0), rng)
        assert x.mean() == pytest.approx(0.25 * math.tanh(1.0), rel=0.02)

    def test_noninteger_b_gamma_sum(self):
        rng = np.random.default_rng(107)
        x = sample_polya_gamma(1.5, 0.0, rng, size=200_000)
        assert x.mean() == pytest.approx(1.5 / 4.0, rel=0.02)

    def test_b_domain(self):
        with pytest.raises(ValueError):
            sample_polya_gamma(0.0, 0.0, np.random.default_rng(0))


class TestExponential:
    def test_mean(self):
        rng = np.random.default_rng(108)
        x = sample_exponential(2.0, rng, size=1_000_000)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(2.0, rel=0.01)

    def test_cdf_at_median(self):
        rng = np.random.default_rng(109)
        x = sample_exponential(1.0, rng, size=1_000_000)
        med = np.median(x)
        assert 1.0 - math.exp(-med) == pytest.approx(0.5, abs=0.01)

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_exponential(0.0, np.random.default_rng(0))


class TestInverseGamma:
    def test_mean(self):
        rng = np.random.default_rng(110)
        x = sample_inverse_gamma(3.0, 4.0, rng, size=1_000_000)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(2.0, rel=0.01)

    def test_reciprocal_is_gamma(self):
        rng = np.random.default_rng(111)
        x = sample_inverse_gamma(3.0, 4.0, rng, size=1_000_000)
        assert (1.0 / x).mean() == pytest.approx(0.75, rel=0.01)

    def test_domain(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_inverse_gamma(0.0, 1.0, rng)
        with pytest.raises(ValueError):
            sample_inverse_gamma(1.0, -1.0, rng)


class TestHalfCauchy:
    def test_median_equals_scale(self):
        rng = np.random.default_rng(112)
        x = sample_half_cauchy(1.0, rng, size=1_000_000)
        assert np.all(x > 0)
        assert np.median(x) == pytest.approx(1.0, rel=0.02)

    def test_small_scale_median(self):
        rng = np.random.default_rng(113)
        x = sample_half_cauchy(1.0 / (100 * 1), rng, size=1_000_000)
        assert np.median(x) == pytest.approx(0.01, rel=0.05)

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_half_cauchy(-1.0, np.random.default_rng(0))


class TestMixtureRepresentation:
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.95])
    def test_empirical_quantile_is_zero(self, p):
        rng = np.random.default_rng(114)
        n = 1_000_000
        draws = sample_al_mixture(p, 1.0, rng, size=n)
        # MC error of the p-quantile estimate: sqrt(p(1-p)/n)/f(0)
        se = math.sqrt(p * (1 - p) / n) / (p * (1 - p))
        assert abs(np.quantile(draws, p)) < 3.0 * se

    def test_ks_distance_against_density(self):
        p = 0.2
        rng = np.random.default_rng(115)
        draws = sample_al_mixture(p, 1.0, rng, size=1_000_000)
        res = stats.kstest(draws, lambda x: al_cdf(x, p))
        assert res.statistic < 0.005


class TestReproducibility:
    def test_fixed_seed_bit_identical(self):
        for fn in (
            lambda r: sample_gig(GIGParams(0.5, 4.0, 1.0), r, size=100),
            lambda r: sample_polya_gamma(1, 1.3, r, size=100),
            lambda r: sample_exponential(2.0, r, size=100),
            lambda r: sample_inverse_gamma(3.0, 4.0, r, size=100),
            lambda r: sample_half_cauchy(1.0, r, size=100),
            lambda r: sample_al_mixture(0.3, 1.0, r, size=100),
        ):
            a = fn(np.random.default_rng(42))
            b = fn(np.random.default_rng(42))
            np.testing.assert_array_equal(a, b)
