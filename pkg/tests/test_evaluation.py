import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from ucqr.core import QuantileGrid
from ucqr.evaluation import (
    CRPS_SCHEMES,
    MetricTable,
    PredictiveDensity,
    QuantileForecast,
    bootstrap_moments,
    crps_weights,
    log_predictive_score,
    quantile_score,
    scenario_probabilities,
    smooth_to_density,
    weighted_crps,
)

GRID = QuantileGrid().levels


def normal_density(mean=0.0, sd=1.0, span=8.0, n=2001):
    g = np.linspace(mean - span * sd, mean + span * sd, n)
    return PredictiveDensity.from_values(g, norm.pdf(g, mean, sd))


def exponential_density(scale=1.0, n=4001, hi=16.0):
    g = np.linspace(0.0, hi * scale, n)
    return PredictiveDensity.from_values(g, np.exp(-g / scale) / scale)


class TestQuantileScore:
    def test_hand_examples_exact(self):
        assert quantile_score(2.0, 1.5, 0.9) == pytest.approx(0.45, abs=1e-12)
        assert quantile_score(1.0, 1.5, 0.9) == pytest.approx(0.05, abs=1e-12)
        assert quantile_score(1.5, 1.5, 0.42) == 0.0

    @given(r=st.floats(-50, 50), f=st.floats(-50, 50), p=st.floats(0.01, 0.99))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, r, f, p):
        assert quantile_score(r, f, p) >= 0.0

    def test_median_score_is_half_absolute_error(self):
        r, f = 2.7, -0.4
        assert quantile_score(r, f, 0.5) == pytest.approx(0.5 * abs(r - f), abs=1e-12)


class TestWeightedCRPS:
    def test_unit_weights_equal_mean_qs(self):
        rng = np.random.default_rng(0)
        qf = QuantileForecast(levels=GRID, values=np.sort(rng.standard_normal(19)))
        r = 0.3
        qs = [quantile_score(r, float(f), float(p))
              for p, f in zip(qf.levels, qf.values)]
        assert weighted_crps(qf, r, "none") == pytest.approx(np.mean(qs), abs=1e-14)

    def test_constant_qs_passthrough(self):
        # all quantile scores equal: unit-weight CRPS returns that value
        r = 0.0
        values = np.zeros(19)
        qf = QuantileForecast(levels=GRID, values=values)
        assert weighted_crps(qf, r, "none") == 0.0

    def test_tails_weight_vanishes_at_median(self):
        w = crps_weights(GRID, "tails")
        assert w[GRID.tolist().index(0.5)] == 0.0

    def test_left_right_symmetry(self):
        # a QS profile symmetric under p -> 1-p scores equally under the two
        # tail schemes because (1-p)^2 and p^2 swap
        sym_qs = (GRID - 0.5) ** 2 + 0.1
        left = np.mean(crps_weights(GRID, "left") * sym_qs)
        right = np.mean(crps_weights(GRID, "right") * sym_qs)
        assert left == pytest.approx(right, abs=1e-14)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            crps_weights(GRID, "center")


class TestSmoothing:
    def test_normal_round_trip(self):
        qf = QuantileForecast(levels=GRID, values=norm.ppf(GRID))
        dens = smooth_to_density(qf)
        back = np.asarray(dens.quantile(GRID))
        assert np.max(np.abs(back - norm.ppf(GRID))) < 0.08

    def test_integral_is_one(self):
        qf = QuantileForecast(levels=GRID, values=norm.ppf(GRID))
        dens = smooth_to_density(qf)
        assert abs(np.trapezoid(dens.density, dens.grid) - 1.0) <= 1e-3

    def test_translation_equivariance(self):
        qf0 = QuantileForecast(levels=GRID, values=norm.ppf(GRID))
        qf3 = QuantileForecast(levels=GRID, values=norm.ppf(GRID) + 3.0)
        d0 = smooth_to_density(qf0)
        d3 = smooth_to_density(qf3)
        m0 = d0.grid[np.argmax(d0.density)]
        m3 = d3.grid[np.argmax(d3.density)]
        step = d3.grid[1] - d3.grid[0]
        assert m3 - m0 == pytest.approx(3.0, abs=2 * step)

    def test_requires_monotone_values(self):
        bad = norm.ppf(GRID)
        bad[7], bad[8] = bad[8], bad[7]
        with pytest.raises(ValueError):
            smooth_to_density(QuantileForecast(levels=GRID, values=bad))


class TestLogPredictiveScore:
    def test_standard_normal_at_zero(self):
        assert log_predictive_score(normal_density(), 0.0) == pytest.approx(
            math.log(1.0 / math.sqrt(2 * math.pi)), abs=0.02)

    def test_far_outside_support_floors(self):
        assert log_predictive_score(normal_density(), 1e6) == math.log(1e-10)

    def test_grid_refinement_stable(self):
        qf = QuantileForecast(levels=GRID, values=norm.ppf(GRID))
        lps1 = log_predictive_score(smooth_to_density(qf, n_grid=512), 0.35)
        lps2 = log_predictive_score(smooth_to_density(qf, n_grid=4096), 0.35)
        assert abs(lps1 - lps2) < 1e-3


class TestPredictiveDensity:
    def test_validation(self):
        g = np.linspace(-1, 1, 64)
        with pytest.raises(ValueError):
            PredictiveDensity(grid=g, density=np.full(64, 10.0))  # integral 20
        with pytest.raises(ValueError):
            PredictiveDensity(grid=g, density=-np.ones(64))

    def test_quantile_cdf_round_trip(self):
        dens = normal_density()
        for p in (0.05, 0.5, 0.95):
            assert dens.cdf(dens.quantile(p)) == pytest.approx(p, abs=1e-3)

    def test_mixture_constructor_matches_normal(self):
        dens = PredictiveDensity.from_gaussian_mixture(
            np.zeros(50), np.ones(50))
        assert dens.quantile(0.5) == pytest.approx(0.0, abs=1e-3)
        assert dens.quantile(0.95) == pytest.approx(norm.ppf(0.95), abs=5e-3)


class TestBootstrapMoments:
    def test_normal_bands_contain_zero(self):
        dens = normal_density()
        for seed in range(5):
            mb = bootstrap_moments(dens, np.random.default_rng(seed))
            assert mb.lo["skewness"] <= 0.0 <= mb.hi["skewness"]
            assert mb.lo["excess_kurtosis"] <= 0.0 <= mb.hi["excess_kurtosis"]

    def test_exponential_skewness(self):
        mb = bootstrap_moments(exponential_density(), np.random.default_rng(3))
        width = mb.hi["skewness"] - mb.lo["skewness"]
        assert mb.lo["skewness"] - width <= 2.0 <= mb.hi["skewness"] + width

    def test_band_width_clt_scaling(self):
        dens = normal_density()
        mb1 = bootstrap_moments(dens, np.random.default_rng(4),
                                n_sample=3000, n_rep=400)
        mb4 = bootstrap_moments(dens, np.random.default_rng(5),
                                n_sample=12000, n_rep=400)
        w1 = mb1.hi["mean"] - mb1.lo["mean"]
        w4 = mb4.hi["mean"] - mb4.lo["mean"]
        assert w4 / w1 == pytest.approx(0.5, rel=0.5)


class TestScenarios:
    def test_target_probability_normal(self):
        dens = normal_density(mean=2.0, sd=0.5)
        sc = scenario_probabilities(dens, np.random.default_rng(6))
        assert sc.point["target"] == pytest.approx(
            norm.cdf(2.0) - norm.cdf(-2.0), abs=0.01)

    def test_probabilities_sum_below_one(self):
        dens = normal_density(mean=2.0, sd=1.5)
        sc = scenario_probabilities(dens, np.random.default_rng(7))
        assert sum(sc.point.values()) <= 1.0

    def test_symmetric_center_tail_balance(self):
        dens = normal_density(mean=2.0, sd=1.2)
        sc = scenario_probabilities(dens, np.random.default_rng(8))
        band = max(sc.hi["deflation"] - sc.lo["deflation"],
                   sc.hi["excessive"] - sc.lo["excessive"])
        assert abs(sc.point["deflation"] - sc.point["excessive"]) <= band + 5e-3


class TestRankingEquivalence:
    def test_median_qs_ranks_like_absolute_error(self):
        rng = np.random.default_rng(9)
        realizations = rng.standard_normal(40)
        model_a = realizations + 0.3 * rng.standard_normal(40)
        model_b = realizations + 0.8 * rng.standard_normal(40)
        qs = {m: np.mean([quantile_score(r, f, 0.5)
                          for r, f in zip(realizations, fc)])
              for m, fc in (("a", model_a), ("b", model_b))}
        mae = {m: np.mean(np.abs(realizations - fc))
               for m, fc in (("a", model_a), ("b", model_b))}
        assert (qs["a"] < qs["b"]) == (mae["a"] < mae["b"])


class TestMetricTable:
    def _table(self):
        t = MetricTable(models=["bench", "alt"], horizons=[1], benchmark="bench")
        for k in [f"crps_{s}" for s in CRPS_SCHEMES] + ["lps"] + \
                 [f"qs_{lv:g}" for lv in (0.05, 0.1, 0.5, 0.9, 0.95)]:
            t.values[("bench", k, 1)] = 0.5
            t.values[("alt", k, 1)] = 0.6
        return t

    def test_benchmark_row_shows_actuals_and_self_ratio(self):
        t = self._table()
        assert t.relative_value("bench", "crps_none", 1) == 0.5
        assert t.relative_value("alt", "crps_none", 1) == pytest.approx(1.2)
        assert t.relative_value("alt", "lps", 1) == pytest.approx(0.1)

    def test_csv_json_round_trip(self, tmp_path):
        import csv
        import json

        t = self._table()
        t.write_csv(tmp_path / "m.csv")
        t.write_json(tmp_path / "m.json")
        with open(tmp_path / "m.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["model"] == "bench"
        assert float(rows[1]["crps_none_h1"]) == pytest.approx(1.2)
        payload = json.loads((tmp_path / "m.json").read_text())
        assert payload["models"]["alt"]["crps_none_h1"]["value"] == 0.6
