"""Persisted run outputs: runs/<run-id>/ holds the delimited tables, a config
snapshot and (unless disabled) the rendered figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .oos import EvaluationReport


def prepare_out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_config_snapshot(out_dir: Path, snapshot: dict):
    (out_dir / "config.snapshot").write_text(
        "".join(f"{k} = {snapshot[k]}\n" for k in sorted(snapshot))
    )


def write_records_csv(path, records: list[dict], columns: list[str]):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_fmt(rec[c]) for c in columns])


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return value


def write_quantile_paths_csv(path, timestamps, levels, mean, sd, q05, q95):
    """Per-period per-level posterior summary: (period, level, post_mean,
    post_sd, q05, q95). mean/sd/q05/q95 are (T, P)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "level", "post_mean", "post_sd", "q05", "q95"])
        for t, ts in enumerate(timestamps):
            for j, p in enumerate(levels):
                writer.writerow([ts, f"{p:g}", f"{mean[t, j]:.10g}",
                                 f"{sd[t, j]:.10g}", f"{q05[t, j]:.10g}",
                                 f"{q95[t, j]:.10g}"])


def write_oos_report(out_dir: Path, report: EvaluationReport, figures: bool = True):
    report.table.write_csv(out_dir / "metrics.csv", relative=True)
    report.table.write_csv(out_dir / "metrics_raw.csv", relative=False)
    report.table.write_json(out_dir / "metrics.json")
    write_records_csv(out_dir / "forecasts.csv", report.forecasts,
                      ["model", "origin", "origin_period", "horizon", "level",
                       "value", "realization"])
    if report.failures:
        write_records_csv(
            out_dir / "failures.csv",
            [{"group": f.group, "origin": f.origin, "detail": f.detail}
             for f in report.failures],
            ["group", "origin", "detail"],
        )
    if report.moments:
        write_records_csv(out_dir / "moments.csv", report.moments,
                          ["model", "origin", "horizon", "moment", "point",
                           "lo", "hi"])
    if report.scenarios:
        write_records_csv(out_dir / "scenarios.csv", report.scenarios,
                          ["model", "origin", "horizon", "scenario", "point",
                           "lo", "hi"])
    if report.config_snapshot:
        write_config_snapshot(out_dir, report.config_snapshot)
    if figures:
        from . import figures as fig

        fig.render_metric_bars(report.table, out_dir / "metrics.png")
        if report.moments:
            fig.render_band_paths(report.moments, "moment",
                                  out_dir / "moments.png")
        if report.scenarios:
            fig.render_band_paths(report.scenarios, "scenario",
                                  out_dir / "scenarios.png")


def read_forecasts_csv(path) -> list[dict]:
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"model", "origin", "horizon", "level", "value"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: expected columns {sorted(needed)} (plus optional realization)"
            )
        for row in reader:
            rec = {
                "model": row["model"],
                "origin": int(row["origin"]),
                "horizon": int(row["horizon"]),
                "level": float(row["level"]),
                "value": float(row["value"]),
            }
            if row.get("realization") not in (None, ""):
                rec["realization"] = float(row["realization"])
            out.append(rec)
    return out


def save_draws_npz(path, draws_by_level: dict):
    arrays = {}
    for level, d in draws_by_level.items():
        tag = f"p{level:g}".replace(".", "_")
        arrays[f"{tag}_beta"] = d.beta_draws
        arrays[f"{tag}_scale"] = d.scale_draws
        for h, v in d.forecast_path.items():
            arrays[f"{tag}_forecast_h{h}"] = v
    np.savez_compressed(Path(path), **arrays)
