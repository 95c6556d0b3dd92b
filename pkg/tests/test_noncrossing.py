import math

import numpy as np
import pytest

from ucqr.core import QuantileGrid
from ucqr.distributions import al_quantile_function
from ucqr.noncrossing import (
    GPConfig,
    InducedQuantileMatrix,
    adjust,
    build_induced_matrix,
    gp_fit,
    minimal_bandwidth,
    select_bandwidth,
)
from ucqr.sampler import McmcConfig, PosteriorDraws, GIBBS_STEP_ORDER


def _matrix(levels, q, noise=1e-8):
    levels = np.asarray(levels, dtype=float)
    P = levels.size
    return InducedQuantileMatrix(levels=levels, q=np.asarray(q, dtype=float),
                                 diag_var=np.full((P, P), noise))


def _fixture_matrix(seed=0, P=19, mu_spread=1.0, sigma=0.6, noise=1e-6):
    rng = np.random.default_rng(seed)
    grid = QuantileGrid() if P == 19 else QuantileGrid(np.linspace(0.1, 0.9, P))
    levels = grid.levels
    from scipy.stats import norm

    mu = mu_spread * norm.ppf(levels) + 0.05 * rng.standard_normal(P)
    sg = np.full(P, sigma)
    return build_induced_matrix(mu, sg, grid,
                                var_mu=np.full(P, noise),
                                var_sigma=np.full(P, noise),
                                cov_mu_sigma=np.zeros(P),
                                n_draws=1)


def _synthetic_fits(levels, centers, n_draws=400, noise_sd=0.02, T=6, seed=0,
                    horizons=(1,)):
    """PosteriorDraws stand-ins with controlled posterior means."""
    rng = np.random.default_rng(seed)
    fits = []
    for level, c in zip(levels, centers):
        path = np.tile(np.linspace(c, c + 0.1, T), (n_draws, 1))
        path = path + noise_sd * rng.standard_normal((n_draws, T))
        scale = 0.5 + 0.01 * np.abs(rng.standard_normal((n_draws, T)))
        fits.append(PosteriorDraws(
            level=float(level),
            beta_draws=path[:, :, None],
            path_draws=path,
            scale_draws=scale,
            forecast_path={h: c + 0.2 + noise_sd * rng.standard_normal(n_draws)
                           for h in horizons},
            forecast_scale={h: 0.5 + 0.01 * np.abs(rng.standard_normal(n_draws))
                            for h in horizons},
            accept_rate=float("nan"),
            tuning_c=0.1,
            step_order=GIBBS_STEP_ORDER,
            mcmc=McmcConfig(10, n_draws, 1),
            scale_mode="tis",
            shrinkage="dhs",
        ))
    return fits


class TestInducedMatrix:
    def test_diagonal_holds_raw_estimates(self):
        grid = QuantileGrid()
        mu = np.linspace(-1, 1, 19)
        sg = np.linspace(0.5, 1.5, 19)
        mat = build_induced_matrix(mu, sg, grid)
        np.testing.assert_allclose(np.diag(mat.q), mu, atol=1e-12)

    def test_off_diagonal_closed_form(self):
        grid = QuantileGrid(np.array([0.25, 0.75]))
        mat = build_induced_matrix(np.array([0.0, 1.0]), np.array([1.0, 1.0]),
                                   grid)
        # entry (p=0.25 source, ptilde=0.75): second branch
        assert mat.q[0, 1] == pytest.approx(4.0 * math.log(3.0), abs=1e-12)
        assert mat.q[0, 1] == pytest.approx(
            al_quantile_function(0.75, 0.0, 1.0, 0.25), abs=1e-12)

    def test_rows_strictly_increasing(self):
        rng = np.random.default_rng(1)
        grid = QuantileGrid()
        mu = rng.standard_normal(19)
        sg = 0.2 + np.abs(rng.standard_normal(19))
        mat = build_induced_matrix(mu, sg, grid)
        assert np.all(np.diff(mat.q, axis=1) > 0)

    def test_nonpositive_scale_rejected(self):
        grid = QuantileGrid(np.array([0.25, 0.75]))
        with pytest.raises(ValueError):
            build_induced_matrix(np.zeros(2), np.array([1.0, 0.0]), grid)


class TestGPFit:
    def test_identical_observations_recovered(self):
        # all induced quantiles equal: the fit returns the common value up to
        # the shrinkage toward the zero prior mean; verified against a dense
        # solve built independently here
        levels = QuantileGrid().levels
        P = levels.size
        q_star = 10.0
        noise = 1e-6
        mat = _matrix(levels, np.full((P, P), q_star), noise=noise)
        out = gp_fit(mat, 0.2)
        assert np.max(np.abs(out - q_star)) < 0.05
        # independent dense computation for one target level
        j = 7
        d = levels[:, None] - levels[None, :]
        gram = 100.0 * np.exp(-0.5 * d * d / 0.2 ** 2)
        alpha = np.linalg.solve(gram + noise * np.eye(P), np.full(P, q_star))
        assert out[j] == pytest.approx(float(gram[j] @ alpha), rel=1e-6)

    def test_small_bandwidth_recovers_diagonal(self):
        mat = _fixture_matrix(seed=2)
        out = gp_fit(mat, 1e-4)
        np.testing.assert_allclose(out, np.diag(mat.q), atol=1e-3)

    def test_large_bandwidth_near_weighted_column_average(self):
        mat = _fixture_matrix(seed=3)
        out = gp_fit(mat, 500.0)
        w = 1.0 / mat.diag_var
        weighted = (w * mat.q).sum(axis=0) / w.sum(axis=0)
        spread = mat.q.max() - mat.q.min()
        assert np.max(np.abs(out - weighted)) < 0.05 * spread

    def test_linearity_in_observations(self):
        mat = _fixture_matrix(seed=4)
        out1 = gp_fit(mat, 0.15)
        mat2 = InducedQuantileMatrix(levels=mat.levels, q=2.0 * mat.q,
                                     diag_var=mat.diag_var)
        out2 = gp_fit(mat2, 0.15)
        np.testing.assert_allclose(out2, 2.0 * out1, rtol=1e-10, atol=1e-10)

    def test_bandwidth_domain(self):
        with pytest.raises(ValueError):
            gp_fit(_fixture_matrix(), 0.0)


class TestBandwidthSelection:
    def test_monotone_input_returns_lower_bound(self):
        mat = _fixture_matrix(seed=5)
        assert np.all(np.diff(np.diag(mat.q)) > 0)
        cfg = GPConfig()
        assert minimal_bandwidth(mat, cfg) == cfg.bandwidth_lo

    def test_injected_crossing_needs_larger_bandwidth(self):
        mats = [_fixture_matrix(seed=s) for s in (6, 7, 8)]
        # corrupt one period's location estimates to force a crossing
        q = mats[1].q.copy()
        q[9, :] = q[10, :] + 0.8
        for j in range(19):
            q[9, j] = q[10, j] + 0.8  # source row shifted above its neighbor
        bad = InducedQuantileMatrix(levels=mats[1].levels, q=q,
                                    diag_var=mats[1].diag_var)
        mats[1] = bad
        assert not np.all(np.diff(np.diag(bad.q)) > 0)
        cfg = GPConfig()
        per_t = select_bandwidth(mats, "gpt", cfg)
        assert per_t[1] > cfg.bandwidth_lo
        assert per_t[0] == cfg.bandwidth_lo and per_t[2] == cfg.bandwidth_lo

    def test_gp_is_max_of_gpt(self):
        mats = [_fixture_matrix(seed=s) for s in (9, 10, 11)]
        q = mats[2].q.copy()
        q[4, :] = q[5, :] + 0.5
        mats[2] = InducedQuantileMatrix(levels=mats[2].levels, q=q,
                                        diag_var=mats[2].diag_var)
        cfg = GPConfig()
        per_t = select_bandwidth(mats, "gpt", cfg)
        w = select_bandwidth(mats, "gp", cfg)
        assert w == pytest.approx(float(per_t.max()))
        assert np.all(per_t <= w)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            select_bandwidth([_fixture_matrix()], "sorted")


class TestAdjust:
    def test_raw_is_identity_on_posterior_means(self):
        levels = np.array([0.25, 0.5, 0.75])
        fits = _synthetic_fits(levels, centers=[-0.7, 0.0, 0.7], seed=12)
        res = adjust(fits, "raw", horizons=(1,))
        expect = np.stack([f.path_draws.mean(axis=0) for f in fits]).T
        np.testing.assert_allclose(res.in_sample, expect, atol=1e-12)
        np.testing.assert_allclose(
            res.forecasts[1],
            [float(f.forecast_path[1].mean()) for f in fits], atol=1e-12)

    def test_monotone_input_is_near_fixed_point(self):
        levels = np.array([0.25, 0.5, 0.75])
        fits = _synthetic_fits(levels, centers=[-0.7, 0.0, 0.7], seed=13,
                               noise_sd=0.01)
        res = adjust(fits, "gpt", horizons=(1,))
        raw = np.stack([f.path_draws.mean(axis=0) for f in fits]).T
        assert np.max(np.abs(res.in_sample - raw)) < 1e-3

    def test_crossing_input_comes_out_strictly_monotone(self):
        # local inversions on the full grid, the realistic crossing pattern
        from scipy.stats import norm

        levels = QuantileGrid().levels
        centers = norm.ppf(levels)
        centers[9], centers[10] = centers[10] + 0.1, centers[9] - 0.1
        centers[3] = centers[4] + 0.05
        fits = _synthetic_fits(levels, centers=centers, seed=14, noise_sd=0.05)
        raw = np.stack([f.path_draws.mean(axis=0) for f in fits]).T
        assert not np.all(np.diff(raw, axis=1) > 0)
        for mode in ("gp", "gpt"):
            res = adjust(fits, mode, horizons=(1,))
            assert np.all(np.diff(res.in_sample, axis=1) > 0)
            assert np.all(np.diff(res.forecasts[1]) > 0)

    def test_mode_validation(self):
        fits = _synthetic_fits(np.array([0.4, 0.6]), centers=[0.0, 0.5])
        with pytest.raises(ValueError):
            adjust(fits, "sort")
