"""Command-line interface: fit, forecast, oos, score and simulate subcommands.

Every flag can also be given through a plain-text config file
(`key = value` per line, long flag names); explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import merge_config, read_config_file
from .core import ConfigError, QuantileGrid, derive_seed
from .data import DGPS, TRANSFORMS, ingest_csv, simulate_series, write_series_csv
from .evaluation import (
    CRPS_SCHEMES,
    MetricTable,
    QuantileForecast,
    crps_weights,
    log_predictive_score,
    quantile_score,
    smooth_to_density,
)
from .noncrossing import adjust
from .oos import ADJUST_MODES, OOSConfig, parse_variant, run_expanding_window
from .report import (
    prepare_out_dir,
    read_forecasts_csv,
    save_draws_npz,
    write_config_snapshot,
    write_oos_report,
    write_quantile_paths_csv,
    write_records_csv,
)
from .sampler import Hyperparams, McmcConfig, ModelSpec, run_chain
from .ucsv import UcsvSpec, run_ucsv


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="key=value config file; flags override")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="output directory (default runs/<cmd>-seed<seed>)")
    p.add_argument("--no-figures", action="store_true", dest="no_figures",
                   help="skip figure rendering")


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", required=False, default=None, help="two-column CSV (period, value)")
    p.add_argument("--transform", choices=TRANSFORMS, default="none")
    p.add_argument("--quantiles", default="0.05:0.95:0.05",
                   help="grid as lo:hi:step or a comma list")
    p.add_argument("--model", choices=("ucqr", "ucsv"), default="ucqr")
    p.add_argument("--scale", choices=("tis", "tvs"), default="tis")
    p.add_argument("--prior", choices=("ig", "shs", "dhs"), default="dhs")
    p.add_argument("--adjust", choices=ADJUST_MODES, default="gpt")
    p.add_argument("--burnin", type=int, default=3000)
    p.add_argument("--draws", type=int, default=9000,
                   help="post-burn-in sweeps (every thin-th retained)")
    p.add_argument("--thin", type=int, default=3)
    p.add_argument("--desk-scale", action="store_true", dest="desk_scale",
                   help="scale MCMC down to 500/1500 for quick runs")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucqr",
        description="Time-varying-parameter quantile regression for inflation-style series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="single estimation: quantile paths and draws")
    _add_common(p_fit)
    _add_model_flags(p_fit)
    p_fit.add_argument("--save-draws", action="store_true", dest="save_draws")

    p_fc = sub.add_parser("forecast", help="fit plus per-horizon quantile forecasts")
    _add_common(p_fc)
    _add_model_flags(p_fc)
    p_fc.add_argument("--horizons", default="1,4,12", help="comma list of steps ahead")

    p_oos = sub.add_parser("oos", help="expanding-window out-of-sample evaluation")
    _add_common(p_oos)
    _add_model_flags(p_oos)
    p_oos.add_argument("--horizons", default="1,4,12")
    p_oos.add_argument("--initial-window", type=int, default=50, dest="initial_window")
    p_oos.add_argument("--models", default=None,
                       help="comma list of variant ids, e.g. ucsv,ucqr-tis-dhs-gpt "
                            "(default: ucsv plus the single configured ucqr variant)")
    p_oos.add_argument("--benchmark", default=None)
    p_oos.add_argument("--moments-horizon", type=int, default=None, dest="moments_horizon",
                       help="emit bootstrap moment/scenario paths at this horizon")
    p_oos.add_argument("--moments-reps", type=int, default=1000, dest="moments_reps")

    p_sc = sub.add_parser("score", help="metrics from stored forecasts plus realizations")
    _add_common(p_sc)
    p_sc.add_argument("--forecasts", required=True, help="forecasts.csv from oos/forecast")
    p_sc.add_argument("--data", default=None, help="realized series CSV (optional if "
                                                   "the forecasts file stores realizations)")
    p_sc.add_argument("--transform", choices=TRANSFORMS, default="none")
    p_sc.add_argument("--benchmark", default=None)

    p_sim = sub.add_parser("simulate", help="synthetic DGP generation for tests")
    _add_common(p_sim)
    p_sim.add_argument("--dgp", choices=DGPS, required=True)
    p_sim.add_argument("--length", type=int, required=True)
    p_sim.add_argument("--level", type=float, default=0.0)
    p_sim.add_argument("--scale", type=float, default=1.0)
    p_sim.add_argument("--p", type=float, default=0.5)
    p_sim.add_argument("--omega", type=float, default=0.02)
    p_sim.add_argument("--varsigma", type=float, default=0.1)
    return parser


def _mcmc_from_args(args) -> McmcConfig:
    if args.desk_scale:
        burn = 500 if args.burnin == 3000 else args.burnin
        draws = 1500 if args.draws == 9000 else args.draws
        return McmcConfig(burn_in=burn, post_burn=draws, thin=args.thin)
    return McmcConfig(burn_in=args.burnin, post_burn=args.draws, thin=args.thin)


def _out_dir(args) -> Path:
    if args.out:
        return prepare_out_dir(args.out)
    return prepare_out_dir(Path("runs") / f"{args.command}-seed{args.seed}")


def _load_series(args):
    if not args.data:
        raise ConfigError("--data is required")
    return ingest_csv(args.data, args.transform)


def _snapshot(args, extra=None) -> dict:
    skip = {"command", "config"}
    snap = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if extra:
        snap.update(extra)
    return snap


def _fit_level(task):
    (y, level, scale_mode, prior, mcmc, horizons, entropy) = task
    spec = ModelSpec(quantile_p=level, scale_mode=scale_mode, shrinkage=prior,
                     mcmc=mcmc)
    return level, run_chain(spec, y, horizons=horizons,
                            seed=np.random.SeedSequence(entropy))


def _run_ucqr_levels(args, y, horizons=()):
    grid = QuantileGrid.from_spec(args.quantiles)
    mcmc = _mcmc_from_args(args)
    tasks = [
        (y, float(level), args.scale, args.prior, mcmc, tuple(horizons),
         derive_seed(args.seed, "fit", args.scale, args.prior, qi).entropy)
        for qi, level in enumerate(grid.levels)
    ]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            fits = dict(pool.map(_fit_level, tasks, chunksize=1))
    else:
        fits = dict(map(_fit_level, tasks))
    return grid, [fits[float(level)] for level in grid.levels]


def cmd_fit(args) -> int:
    series = _load_series(args)
    out = _out_dir(args)
    if args.model == "ucsv":
        draws = run_ucsv(series, UcsvSpec(mcmc=_mcmc_from_args(args)),
                         seed=derive_seed(args.seed, "fit", "ucsv", 0))
        _write_ucsv_paths(out, series, draws, not args.no_figures)
        write_config_snapshot(out, _snapshot(args))
        print(f"wrote {out}/trend_paths.csv")
        return 0
    grid, fits = _run_ucqr_levels(args, series.values)
    T = len(series)
    P = len(grid)
    mean = np.empty((T, P))
    sd = np.empty((T, P))
    q05 = np.empty((T, P))
    q95 = np.empty((T, P))
    for j, f in enumerate(fits):
        mean[:, j], sd[:, j], q05[:, j], q95[:, j] = f.path_summary()
    if args.adjust in ("gp", "gpt"):
        adj = adjust(fits, args.adjust)
        mean = adj.in_sample
    write_quantile_paths_csv(out / "quantile_paths.csv", series.timestamps,
                             grid.levels, mean, sd, q05, q95)
    if args.save_draws:
        save_draws_npz(out / "draws.npz", {f.level: f for f in fits})
    write_config_snapshot(out, _snapshot(args))
    if not args.no_figures:
        from . import figures

        figures.render_fan_chart(series.timestamps, grid.levels, mean,
                                 out / "quantile_paths.png", series=series.values,
                                 title=f"ucqr-{args.scale}-{args.prior}-{args.adjust}")
    print(f"wrote {out}/quantile_paths.csv")
    return 0


def _write_ucsv_paths(out, series, draws, figures_on):
    mean = draws.trend_draws.mean(axis=0)
    sd = draws.trend_draws.std(axis=0, ddof=1)
    q05 = np.quantile(draws.trend_draws, 0.05, axis=0)
    q95 = np.quantile(draws.trend_draws, 0.95, axis=0)
    vol = np.exp(0.5 * draws.logvar_draws).mean(axis=0)
    records = [
        {"period": ts, "trend_mean": float(mean[t]), "trend_sd": float(sd[t]),
         "q05": float(q05[t]), "q95": float(q95[t]), "vol_mean": float(vol[t])}
        for t, ts in enumerate(series.timestamps)
    ]
    write_records_csv(out / "trend_paths.csv", records,
                      ["period", "trend_mean", "trend_sd", "q05", "q95", "vol_mean"])
    if figures_on:
        from . import figures

        curves = np.stack([q05, mean, q95], axis=1)
        figures.render_fan_chart(series.timestamps, np.array([0.05, 0.5, 0.95]),
                                 curves, out / "trend_paths.png",
                                 series=series.values, title="ucsv trend")


def _parse_horizons(text) -> tuple[int, ...]:
    try:
        hs = tuple(sorted({int(h) for h in str(text).split(",") if str(h).strip()}))
    except ValueError:
        raise ConfigError(f"bad horizons {text!r}: expected a comma list of integers")
    if not hs or any(h < 1 for h in hs):
        raise ConfigError("horizons must be positive integers")
    return hs


def cmd_forecast(args) -> int:
    series = _load_series(args)
    horizons = _parse_horizons(args.horizons)
    out = _out_dir(args)
    origin = len(series)
    records = []
    curves = {}
    if args.model == "ucsv":
        draws = run_ucsv(series, UcsvSpec(mcmc=_mcmc_from_args(args)),
                         horizons=horizons,
                         seed=derive_seed(args.seed, "forecast", "ucsv", 0))
        grid = QuantileGrid.from_spec(args.quantiles)
        for h in horizons:
            curves[h] = draws.predictive_quantiles(h, grid.levels)
    else:
        grid, fits = _run_ucqr_levels(args, series.values, horizons)
        if args.adjust == "raw":
            for h in horizons:
                curves[h] = np.array([float(f.forecast_path[h].mean()) for f in fits])
        else:
            adj = adjust(fits, args.adjust, horizons=horizons)
            curves = adj.forecasts
    for h in horizons:
        for p, v in zip(grid.levels, curves[h]):
            records.append({"model": args.model, "origin": origin,
                            "origin_period": series.timestamps[-1], "horizon": h,
                            "level": float(p), "value": float(v),
                            "realization": ""})
    write_records_csv(out / "forecasts.csv", records,
                      ["model", "origin", "origin_period", "horizon", "level",
                       "value", "realization"])
    write_config_snapshot(out, _snapshot(args))
    if not args.no_figures:
        from . import figures

        figures.render_forecast_curves(grid.levels, curves, out / "forecasts.png",
                                       title=f"{args.model} forecast quantiles")
    print(f"wrote {out}/forecasts.csv")
    return 0


def cmd_oos(args) -> int:
    series = _load_series(args)
    horizons = _parse_horizons(args.horizons)
    if args.models:
        models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    else:
        models = ("ucsv", f"ucqr-{args.scale}-{args.prior}-{args.adjust}")
    config = OOSConfig(
        initial_window=args.initial_window,
        horizons=horizons,
        models=models,
        benchmark=args.benchmark,
        master_seed=args.seed,
        quantiles=QuantileGrid.from_spec(args.quantiles),
        mcmc=_mcmc_from_args(args),
        hyper=Hyperparams(),
        threads=args.threads,
        moments_horizon=args.moments_horizon,
        moments_reps=args.moments_reps,
    )
    report = run_expanding_window(config, series)
    report.config_snapshot = _snapshot(args, {"models": ",".join(models)})
    out = _out_dir(args)
    write_oos_report(out, report, figures=not args.no_figures)
    if report.failures:
        print(f"{len(report.failures)} cell(s) failed; see failures.csv", file=sys.stderr)
    print(f"wrote {out}/metrics.csv")
    return 0


def cmd_score(args) -> int:
    records = read_forecasts_csv(args.forecasts)
    realized = None
    if args.data:
        realized = ingest_csv(args.data, args.transform).values
    cells: dict[tuple[str, int, int], dict] = {}
    for rec in records:
        key = (rec["model"], rec["origin"], rec["horizon"])
        cell = cells.setdefault(key, {"levels": [], "values": [], "realization": None})
        cell["levels"].append(rec["level"])
        cell["values"].append(rec["value"])
        if realized is not None:
            idx = rec["origin"] + rec["horizon"] - 1
            if idx >= realized.size:
                raise ConfigError(
                    f"realization index {idx} outside the supplied series"
                )
            cell["realization"] = float(realized[idx])
        elif "realization" in rec:
            cell["realization"] = rec["realization"]
    models = sorted({k[0] for k in cells})
    horizons = sorted({k[2] for k in cells})
    benchmark = args.benchmark
    if benchmark is None:
        ucsv_like = [m for m in models if m.startswith("ucsv")]
        benchmark = ucsv_like[0] if ucsv_like else models[0]
    table = MetricTable(models=models, horizons=horizons, benchmark=benchmark)
    acc: dict[tuple[str, str, int], list[float]] = {}
    for (model, origin, h), cell in sorted(cells.items()):
        if cell["realization"] is None:
            raise ConfigError(
                "no realizations available: pass --data or store a realization column"
            )
        order = np.argsort(cell["levels"])
        levels = np.asarray(cell["levels"])[order]
        values = np.asarray(cell["values"])[order]
        r = cell["realization"]
        qs = np.array([quantile_score(r, float(f), float(p))
                       for p, f in zip(levels, values)])
        for scheme in CRPS_SCHEMES:
            acc.setdefault((model, f"crps_{scheme}", h), []).append(
                float(np.mean(crps_weights(levels, scheme) * qs)))
        for p, s in zip(levels, qs):
            acc.setdefault((model, f"qs_{float(p):g}", h), []).append(float(s))
        qf = QuantileForecast(levels=levels, values=values, origin=origin, horizon=h)
        if qf.is_monotone:
            acc.setdefault((model, "lps", h), []).append(
                log_predictive_score(smooth_to_density(qf), r))
    for key, vals in acc.items():
        table.values[key] = float(np.mean(vals))
    table.meta = {"lps_method": "kernel-smoothed quantile curves",
                  "source": str(args.forecasts)}
    out = _out_dir(args)
    table.write_csv(out / "metrics.csv", relative=True)
    table.write_csv(out / "metrics_raw.csv", relative=False)
    table.write_json(out / "metrics.json")
    write_config_snapshot(out, _snapshot(args))
    if not args.no_figures:
        from . import figures

        figures.render_metric_bars(table, out / "metrics.png")
    print(f"wrote {out}/metrics.csv")
    return 0


def cmd_simulate(args) -> int:
    series = simulate_series(args.dgp, args.length, seed=args.seed,
                             level=args.level, scale=args.scale, p=args.p,
                             omega=args.omega, varsigma=args.varsigma)
    out = _out_dir(args)
    write_series_csv(series, out / "series.csv")
    write_config_snapshot(out, _snapshot(args))
    print(f"wrote {out}/series.csv")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "oos": cmd_oos,
    "score": cmd_score,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            merge_config(args, parser, read_config_file(args.config))
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
