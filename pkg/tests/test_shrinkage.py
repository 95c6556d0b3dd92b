import numpy as np
import pytest

from ucqr.shrinkage import (
    DhsState,
    ShrinkageKind,
    ShsState,
    log_half_cauchy_prior_chain,
    simulate_dhs_forward,
    update_dhs,
    update_ig,
    update_shs,
)


def _run_shs(increments, n_sweeps, seed):
    T, K = increments.shape
    state = ShsState.initial(T, K)
    rng = np.random.default_rng(seed)
    omegas = np.empty((n_sweeps, T, K))
    for i in range(n_sweeps):
        state, omega = update_shs(increments, state, rng)
        omegas[i] = omega
    return omegas


def _run_dhs(increments, n_sweeps, seed, phi_fixed=False, phi0=0.9):
    T, K = increments.shape
    state = DhsState.initial(T, K, phi0=phi0)
    state.phi_fixed = phi_fixed
    rng = np.random.default_rng(seed)
    omegas = np.empty((n_sweeps, T, K))
    psis = np.empty((n_sweeps, T, K))
    for i in range(n_sweeps):
        state, omega = update_dhs(increments, state, rng)
        omegas[i] = omega
        psis[i] = state.psi
    return omegas, psis, state


class TestShrinkageKind:
    def test_parse(self):
        assert ShrinkageKind.from_string("dHs") is ShrinkageKind.DHS
        with pytest.raises(ValueError):
            ShrinkageKind.from_string("lasso")


class TestIG:
    def test_zero_increments_posterior_mean(self):
        rng = np.random.default_rng(1)
        draws = np.array([
            update_ig(np.zeros((10, 1)), 0.1, 0.1, rng)[0, 0]
            for _ in range(40_000)
        ])
        assert draws.mean() == pytest.approx(0.1 / 4.1, rel=0.02)

    def test_single_increment(self):
        rng = np.random.default_rng(2)
        draws = np.array([
            update_ig(np.ones((1, 1)), 0.1, 0.1, rng)[0, 0] for _ in range(5000)
        ])
        assert np.all(draws > 0)
        assert np.isfinite(np.median(draws))

    def test_rate_scales_quadratically(self):
        rng = np.random.default_rng(3)
        eta = np.random.default_rng(9).standard_normal((12, 1))
        m1 = np.mean([update_ig(eta, 2.0, 1e-12, rng)[0, 0] for _ in range(30_000)])
        m2 = np.mean([update_ig(2 * eta, 2.0, 1e-12, rng)[0, 0] for _ in range(30_000)])
        assert m2 / m1 == pytest.approx(4.0, rel=0.05)

    def test_constant_across_periods(self):
        omega = update_ig(np.random.default_rng(0).standard_normal((7, 2)),
                          0.1, 0.1, np.random.default_rng(1))
        assert omega.shape == (7, 2)
        assert np.all(omega == omega[0])


class TestSHS:
    def test_zero_increments_shrink_below_prior_median(self):
        # prior median of lambda^2 phi^2 is 1 (both log-symmetric around 0);
        # with nothing to fit the posterior collapses toward the floor
        omegas = _run_shs(np.zeros((10, 1)), 10_000, seed=4)
        assert np.median(omegas) < 1.0
        assert np.all(omegas > 0)

    def test_local_adaptivity_at_single_break(self):
        eta = np.full((20, 1), 0.01)
        eta[7, 0] = 100.0
        n = 10_000
        state = ShsState.initial(20, 1)
        rng = np.random.default_rng(5)
        phis = np.empty((n, 20))
        for i in range(n):
            state, _ = update_shs(eta, state, rng)
            phis[i] = state.phi_local[:, 0]
        med = np.median(phis, axis=0)
        others = np.delete(med, 7)
        assert med[7] >= 10.0 * np.median(others)

    def test_positive_and_finite(self):
        omegas = _run_shs(np.random.default_rng(0).standard_normal((15, 2)),
                          200, seed=6)
        assert np.all(omegas > 0)
        assert np.all(np.isfinite(omegas))

    def test_seed_determinism(self):
        eta = np.random.default_rng(0).standard_normal((8, 1))
        a = _run_shs(eta, 50, seed=7)
        b = _run_shs(eta, 50, seed=7)
        np.testing.assert_array_equal(a, b)


class TestDHS:
    def test_pg_moment_at_flat_path(self):
        # a state whose path sits exactly at its level has zero innovations,
        # so the auxiliaries are PG(1, 0) draws with mean 1/4
        T = 10_000
        state = DhsState.initial(T, 1)
        state.psi[:] = state.mu_psi[None, :]
        state.phi_fixed = True
        eta = np.exp(state.psi[:, :1] / 2) * 0.0 + 0.01
        new, _ = update_dhs(eta, state, np.random.default_rng(8))
        assert new.pg_aux.mean() == pytest.approx(0.25, rel=0.02)

    def test_nested_consistency_with_shs(self):
        # phi fixed at 0 removes persistence; with informative identical
        # increments both priors track eta^2, agreeing within a small factor
        # (parameterizations differ; exact zero increments would make the shs
        # posterior improper)
        eta = np.full((50, 1), 0.1)
        omegas_dhs, _, _ = _run_dhs(eta, 10_000, seed=9, phi_fixed=True, phi0=0.0)
        omegas_shs = _run_shs(eta, 10_000, seed=10)
        burn = 2000
        med_dhs = float(np.median(omegas_dhs[burn:]))
        med_shs = float(np.median(omegas_shs[burn:]))
        assert med_dhs == pytest.approx(med_shs, rel=0.20)

    def test_persistence_at_sustained_block(self):
        rng = np.random.default_rng(11)
        T = 100
        eta = 0.01 * rng.standard_normal((T, 1))
        eta[40:60, 0] = 2.0 + 0.1 * rng.standard_normal(20)
        omegas_dhs, psis, _ = _run_dhs(eta, 3000, seed=12)
        burn = 500
        psi_mean = psis[burn:].mean(axis=0)[:, 0]
        inside = psi_mean[40:60]
        outside = np.concatenate([psi_mean[:40], psi_mean[60:]])
        # elevated contiguously over the block
        assert inside.min() > np.median(outside)
        # and more persistent than the static prior on the same data
        omegas_shs = _run_shs(eta, 3000, seed=13)
        log_shs = np.log(omegas_shs[burn:]).mean(axis=0)[:, 0]

        def lag1(x):
            x = x - x.mean()
            return float((x[1:] @ x[:-1]) / (x @ x))

        assert lag1(psi_mean) > lag1(log_shs)

    def test_positive_and_shapes(self):
        eta = np.random.default_rng(1).standard_normal((30, 2))
        omegas, _, state = _run_dhs(eta, 100, seed=14)
        assert omegas.shape == (100, 30, 2)
        assert np.all(omegas > 0)
        assert np.all(np.abs(state.phi) < 1.0)
        assert np.all(state.pg_aux > 0)

    def test_seed_determinism(self):
        eta = np.random.default_rng(2).standard_normal((12, 1))
        a, _, _ = _run_dhs(eta, 40, seed=15)
        b, _, _ = _run_dhs(eta, 40, seed=15)
        np.testing.assert_array_equal(a, b)

    def test_forward_simulation_positive(self):
        eta = np.random.default_rng(3).standard_normal((20, 1))
        _, _, state = _run_dhs(eta, 50, seed=16)
        omega_fwd = simulate_dhs_forward(state, 12, np.random.default_rng(17))
        assert omega_fwd.shape == (12, 1)
        assert np.all(omega_fwd > 0)


class TestPriorMachinery:
    def test_global_scale_prior_median(self):
        # the PG-augmented chain for lambda ~ C+(0, 1/(T K)) has its prior
        # median at the scale
        T, K = 100, 1
        draws = log_half_cauchy_prior_chain(1.0 / (T * K), 10_000,
                                            np.random.default_rng(18))
        assert np.median(draws) == pytest.approx(1.0 / (T * K), rel=0.10)

    def test_unit_scale_prior_median(self):
        draws = log_half_cauchy_prior_chain(1.0, 10_000, np.random.default_rng(19))
        assert np.median(draws) == pytest.approx(1.0, rel=0.10)
