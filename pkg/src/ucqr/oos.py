"""Expanding-window pseudo-out-of-sample driver: fits every configured model
variant at each origin, produces per-horizon quantile forecasts (raw or
GP-adjusted), scores them against the held-out realizations and aggregates a
benchmark-relative report. Work is a deterministic queue over
(model group, origin, quantile) tasks; the reduction is keyed by identifiers,
never by completion order, so reports are byte-identical for a fixed master
seed regardless of worker count."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, NumericalError, QuantileGrid, SamplerFailure, derive_seed
from .data import SeriesData
from .evaluation import (
    CRPS_SCHEMES,
    MetricTable,
    QuantileForecast,
    bootstrap_moments,
    crps_weights,
    log_predictive_score,
    quantile_score,
    scenario_probabilities,
    smooth_to_density,
)
from .noncrossing import (
    GPConfig,
    _is_strictly_increasing as _monotone,
    build_induced_matrix,
    gp_fit,
    minimal_bandwidth,
)
from .sampler import Hyperparams, McmcConfig, ModelSpec, run_chain
from .shrinkage import ShrinkageKind
from .ucsv import UcsvSpec, run_ucsv

ADJUST_MODES = ("raw", "gp", "gpt")


@dataclass(frozen=True)
class VariantSpec:
    """One model row: the baseline or a (scale, prior, adjustment) combination."""

    model_id: str
    kind: str                      # "ucqr" | "ucsv"
    scale_mode: str | None = None
    prior: ShrinkageKind | None = None
    adjust: str | None = None

    @property
    def group(self) -> str:
        """Chains are shared across adjustment modes of one (scale, prior)."""
        if self.kind == "ucsv":
            return "ucsv"
        return f"ucqr-{self.scale_mode}-{self.prior.value}"


def parse_variant(text: str) -> VariantSpec:
    """Parse ids like "ucsv" or "ucqr-tis-dhs-gpt"."""
    t = text.strip().lower()
    if t == "ucsv":
        return VariantSpec(model_id=t, kind="ucsv")
    if t == "ucsvm":
        raise ConfigError(
            "model 'ucsvm' is delegated to an external reference implementation "
            "and is not provided here; available models: ucqr, ucsv"
        )
    parts = t.split("-")
    if len(parts) != 4 or parts[0] != "ucqr":
        raise ConfigError(
            f"bad model id {text!r}: expected 'ucsv' or 'ucqr-<tis|tvs>-<ig|shs|dhs>-<raw|gp|gpt>'"
        )
    _, scale, prior, adj = parts
    if scale not in ("tis", "tvs"):
        raise ConfigError(f"bad scale {scale!r} in model id {text!r}")
    if adj not in ADJUST_MODES:
        raise ConfigError(f"bad adjustment {adj!r} in model id {text!r}")
    return VariantSpec(model_id=t, kind="ucqr", scale_mode=scale,
                       prior=ShrinkageKind.from_string(prior), adjust=adj)


@dataclass(frozen=True)
class OOSConfig:
    initial_window: int = 50
    horizons: tuple[int, ...] = (1, 4, 12)
    models: tuple[str, ...] = ("ucsv", "ucqr-tis-dhs-raw", "ucqr-tis-dhs-gp",
                               "ucqr-tis-dhs-gpt")
    benchmark: str | None = None           # defaults to the first ucsv variant
    master_seed: int = 0
    quantiles: QuantileGrid = field(default_factory=QuantileGrid)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    hyper: Hyperparams = field(default_factory=Hyperparams)
    gp: GPConfig = field(default_factory=GPConfig)
    threads: int = 1
    moments_horizon: int | None = None     # emit moment/scenario paths at this horizon
    moments_reps: int = 1000

    def __post_init__(self):
        if self.initial_window < 2:
            raise ConfigError("initial_window must be >= 2")
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise ConfigError("horizons must be positive")
        if not self.models:
            raise ConfigError("at least one model variant is required")

    def variants(self) -> list[VariantSpec]:
        return [parse_variant(m) for m in self.models]

    def benchmark_id(self) -> str:
        if self.benchmark:
            return self.benchmark
        for v in self.variants():
            if v.kind == "ucsv":
                return v.model_id
        return self.variants()[0].model_id


@dataclass
class ChainSummary:
    """Light per-chain output a task ships back to the reducer."""

    level: float
    n_retained: int
    fc_moments: dict[int, tuple]           # h -> (mu_mean, mu_var, sg_mean, sg_var, cov)
    in_mu_mean: np.ndarray
    in_mu_var: np.ndarray
    in_sg_mean: np.ndarray
    in_sg_var: np.ndarray
    in_cov: np.ndarray


@dataclass
class CellFailure:
    group: str
    origin: int
    detail: str


@dataclass
class EvaluationReport:
    table: MetricTable
    forecasts: list[dict]                  # tidy records for forecasts.csv
    failures: list[CellFailure]
    moments: list[dict] = field(default_factory=list)
    scenarios: list[dict] = field(default_factory=list)
    config_snapshot: dict = field(default_factory=dict)


def _ucqr_task(args):
    (y, level, scale_mode, prior, hyper, mcmc, horizons, seed_entropy) = args
    spec = ModelSpec(quantile_p=level, scale_mode=scale_mode, shrinkage=prior,
                     hyper=hyper, mcmc=mcmc)
    rng = np.random.default_rng(np.random.SeedSequence(seed_entropy))
    draws = run_chain(spec, y, horizons=horizons, seed=rng)
    mu_mean, mu_var, sg_mean, sg_var, cov = draws.moments_in_sample()
    return ChainSummary(
        level=level, n_retained=draws.n_retained,
        fc_moments={h: draws.moments_forecast(h) for h in horizons},
        in_mu_mean=mu_mean, in_mu_var=mu_var, in_sg_mean=sg_mean,
        in_sg_var=sg_var, in_cov=cov,
    )


def _ucsv_task(args):
    (y, hyper, mcmc, horizons, seed_entropy) = args
    spec = UcsvSpec(hyper=hyper, mcmc=mcmc)
    rng = np.random.default_rng(np.random.SeedSequence(seed_entropy))
    draws = run_ucsv(y, spec, horizons=horizons, seed=rng)
    return {h: (draws.forecast_mean[h], draws.forecast_logvar[h]) for h in horizons}


def _run_task(task):
    kind, key, args = task
    try:
        if kind == "ucqr":
            return key, _ucqr_task(args), None
        return key, _ucsv_task(args), None
    except (NumericalError, SamplerFailure, ValueError) as exc:
        return key, None, f"{type(exc).__name__}: {exc}"


def _adjusted_curves(levels, summaries: list[ChainSummary], mode: str,
                     horizons, gp_cfg: GPConfig):
    """Forecast quantile curves for one (group, origin): raw means or the
    GP-regression fit.

    Only forecast curves are scored, so GPt selects one bandwidth per forecast
    curve. The GP-mode common bandwidth is the max of minimal bandwidths
    pooled over in-sample periods and forecast curves; in-sample periods with
    no noncrossing bandwidth are skipped from the pool (they are not part of
    the scored output), while the forecast curves must come out monotone.
    """
    grid = QuantileGrid(np.asarray(levels))
    raw = {h: np.array([s.fc_moments[h][0] for s in summaries]) for h in horizons}
    if mode == "raw":
        return raw, None
    n_draws = summaries[0].n_retained

    def fc_matrix(h):
        mm = [s.fc_moments[h] for s in summaries]
        return build_induced_matrix(
            beta_hat=np.array([m[0] for m in mm]),
            sigma_hat=np.array([m[2] for m in mm]),
            grid=grid,
            var_mu=np.array([m[1] for m in mm]),
            var_sigma=np.array([m[3] for m in mm]),
            cov_mu_sigma=np.array([m[4] for m in mm]),
            n_draws=n_draws,
        )

    fc_mats = {h: fc_matrix(h) for h in horizons}
    if mode == "gpt":
        out = {h: gp_fit(m, minimal_bandwidth(m, gp_cfg), gp_cfg)
               for h, m in fc_mats.items()}
        return out, None

    minimals = [minimal_bandwidth(m, gp_cfg) for m in fc_mats.values()]
    T = summaries[0].in_mu_mean.size
    for t in range(T):
        mat = build_induced_matrix(
            beta_hat=np.array([s.in_mu_mean[t] for s in summaries]),
            sigma_hat=np.array([s.in_sg_mean[t] for s in summaries]),
            grid=grid,
            var_mu=np.array([s.in_mu_var[t] for s in summaries]),
            var_sigma=np.array([s.in_sg_var[t] for s in summaries]),
            cov_mu_sigma=np.array([s.in_cov[t] for s in summaries]),
            n_draws=n_draws,
        )
        try:
            minimals.append(minimal_bandwidth(mat, gp_cfg))
        except NumericalError:
            continue
    w = float(max(minimals))

    def scored_monotone(width: float) -> bool:
        return all(_monotone(gp_fit(m, width, gp_cfg)) for m in fc_mats.values())

    if not scored_monotone(w):
        # The monotone bandwidth set of a noisy curve can be an interior
        # window; when the pooled maximum overshoots it, fall back to the
        # smallest common bandwidth that keeps all scored curves noncrossing.
        cands = np.unique(np.concatenate([
            np.geomspace(gp_cfg.bandwidth_lo, gp_cfg.bandwidth_emergency_hi,
                         6 * gp_cfg.scan_points),
            np.asarray(minimals, dtype=float),
        ]))
        for cand in cands:
            if scored_monotone(float(cand)):
                w = float(cand)
                break
        else:
            raise NumericalError(
                "no common bandwidth keeps the forecast curves noncrossing"
            )
    out = {h: gp_fit(m, w, gp_cfg) for h, m in fc_mats.items()}
    return out, w


def run_expanding_window(config: OOSConfig, data: SeriesData) -> EvaluationReport:
    y_full = np.asarray(data.values, dtype=float)
    T = y_full.size
    horizons = tuple(sorted(set(int(h) for h in config.horizons)))
    if config.initial_window + max(horizons) > T:
        raise ConfigError(
            f"initial_window ({config.initial_window}) plus max horizon "
            f"({max(horizons)}) exceeds the series length ({T})"
        )
    variants = config.variants()
    benchmark = config.benchmark_id()
    if benchmark not in [v.model_id for v in variants]:
        raise ConfigError(f"benchmark {benchmark!r} is not among the model variants")
    groups = {}
    for v in variants:
        groups.setdefault(v.group, v)
    levels = config.quantiles.levels
    origins = list(range(config.initial_window, T - min(horizons) + 1))

    # -- build the deterministic task queue ---------------------------------
    tasks = []
    for origin in origins:
        y_train = y_full[:origin]
        hs = tuple(h for h in horizons if origin + h <= T)
        for gname, v in sorted(groups.items()):
            if v.kind == "ucsv":
                ent = derive_seed(config.master_seed, gname, 0, origin).entropy
                tasks.append(("ucsv", (gname, origin),
                              (y_train, config.hyper, config.mcmc, hs, ent)))
            else:
                for qi, level in enumerate(levels):
                    ent = derive_seed(config.master_seed, gname, qi, origin).entropy
                    tasks.append(("ucqr", (gname, origin, qi),
                                  (y_train, float(level), v.scale_mode, v.prior,
                                   config.hyper, config.mcmc, hs, ent)))

    results = {}
    errors = {}
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            for key, res, err in pool.map(_run_task, tasks, chunksize=1):
                if err is None:
                    results[key] = res
                else:
                    errors[key] = err
    else:
        for task in tasks:
            key, res, err = _run_task(task)
            if err is None:
                results[key] = res
            else:
                errors[key] = err

    # -- reduce: curves, scores, aggregation --------------------------------
    failures = [CellFailure(group=k[0], origin=k[1], detail=v)
                for k, v in sorted(errors.items(), key=lambda kv: kv[0][:2])]
    failed_cells = {(k[0], k[1]) for k in errors}

    scores = {}     # (model_id, h) -> list of per-origin score dicts
    fc_records = []
    moment_records = []
    scenario_records = []
    for origin in origins:
        hs = tuple(h for h in horizons if origin + h <= T)
        curves_by_variant = {}
        dens_by_variant = {}
        for gname, gvar in sorted(groups.items()):
            if (gname, origin) in failed_cells:
                continue
            if gvar.kind == "ucsv":
                fc = results[(gname, origin)]
                mixtures = {h: (fc[h][0], np.exp(fc[h][1])) for h in hs}
                from .evaluation import PredictiveDensity

                for v in variants:
                    if v.group != gname:
                        continue
                    curves_by_variant[v.model_id] = {}
                    dens_by_variant[v.model_id] = {}
                    for h in hs:
                        dens = PredictiveDensity.from_gaussian_mixture(*mixtures[h])
                        curves_by_variant[v.model_id][h] = np.asarray(
                            dens.quantile(levels))
                        dens_by_variant[v.model_id][h] = dens
            else:
                summaries = [results.get((gname, origin, qi))
                             for qi in range(len(levels))]
                if any(s is None for s in summaries):
                    failed_cells.add((gname, origin))
                    continue
                modes = sorted({v.adjust for v in variants if v.group == gname})
                per_mode = {}
                for mode in modes:
                    try:
                        per_mode[mode], _ = _adjusted_curves(
                            levels, summaries, mode, hs, config.gp)
                    except NumericalError as exc:
                        failures.append(CellFailure(group=f"{gname}:{mode}",
                                                    origin=origin, detail=str(exc)))
                        per_mode[mode] = None
                for v in variants:
                    if v.group != gname or per_mode.get(v.adjust) is None:
                        continue
                    curves_by_variant[v.model_id] = per_mode[v.adjust]
                    dens_by_variant[v.model_id] = {}
        for v in variants:
            if v.model_id not in curves_by_variant:
                continue
            for h in hs:
                realization = float(y_full[origin + h - 1])
                values = curves_by_variant[v.model_id][h]
                qf = QuantileForecast(levels=levels, values=values,
                                      origin=origin, horizon=h)
                dens = dens_by_variant[v.model_id].get(h)
                if dens is None:
                    try:
                        dens = smooth_to_density(qf)
                    except ValueError:
                        dens = None  # crossing raw curve: no density-based score
                cell = {"qs": {float(p): quantile_score(realization, float(f), float(p))
                               for p, f in zip(levels, values)}}
                for scheme in CRPS_SCHEMES:
                    w = crps_weights(levels, scheme)
                    qs = np.array([cell["qs"][float(p)] for p in levels])
                    cell[f"crps_{scheme}"] = float(np.mean(w * qs))
                cell["lps"] = (log_predictive_score(dens, realization)
                               if dens is not None else float("nan"))
                scores.setdefault((v.model_id, h), []).append(cell)
                for p, f in zip(levels, values):
                    fc_records.append({
                        "model": v.model_id, "origin": origin,
                        "origin_period": data.timestamps[origin - 1],
                        "horizon": h, "level": float(p), "value": float(f),
                        "realization": realization,
                    })
                if (config.moments_horizon == h and dens is not None):
                    rng = np.random.default_rng(
                        derive_seed(config.master_seed, "moments", v.model_id,
                                    origin, h))
                    mb = bootstrap_moments(dens, rng, n_rep=config.moments_reps)
                    sc = scenario_probabilities(dens, rng, n_rep=config.moments_reps)
                    base = {"model": v.model_id, "origin": origin, "horizon": h}
                    for name in mb.point:
                        moment_records.append({**base, "moment": name,
                                               "point": mb.point[name],
                                               "lo": mb.lo[name], "hi": mb.hi[name]})
                    for name in sc.point:
                        scenario_records.append({**base, "scenario": name,
                                                 "point": sc.point[name],
                                                 "lo": sc.lo[name], "hi": sc.hi[name]})

    table = MetricTable(models=[v.model_id for v in variants],
                        horizons=list(horizons), benchmark=benchmark)
    counts = {}
    for v in variants:
        for h in horizons:
            cells = scores.get((v.model_id, h), [])
            if not cells:
                continue
            counts[(v.model_id, h)] = len(cells)
            for scheme in CRPS_SCHEMES:
                table.values[(v.model_id, f"crps_{scheme}", h)] = float(
                    np.mean([c[f"crps_{scheme}"] for c in cells]))
            lps = [c["lps"] for c in cells if np.isfinite(c["lps"])]
            table.values[(v.model_id, "lps", h)] = (
                float(np.mean(lps)) if lps else float("nan"))
            for p in levels:
                table.values[(v.model_id, f"qs_{float(p):g}", h)] = float(
                    np.mean([c["qs"][float(p)] for c in cells]))
    table.meta = {
        "initial_window": config.initial_window,
        "master_seed": config.master_seed,
        "evaluation_points": {f"{m}_h{h}": n for (m, h), n in sorted(counts.items())},
        "crps_discretization": "grid mean over the quantile levels "
                               "(uniform spacing; constant cancels in ratios)",
        "n_failures": len(failures),
    }
    return EvaluationReport(table=table, forecasts=fc_records, failures=failures,
                            moments=moment_records, scenarios=scenario_records)
