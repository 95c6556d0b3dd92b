"""Figure rendering for the report paths. Everything draws to files through
the Agg backend; the delimited outputs remain the primary interface."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_BAND_COLOR = "#4878b0"
_MEDIAN_COLOR = "white"


def _tick_positions(n: int, max_ticks: int = 8) -> np.ndarray:
    step = max(1, n // max_ticks)
    return np.arange(0, n, step)


def render_fan_chart(timestamps, levels, curves, path, series=None,
                     title: str | None = None):
    """Quantile fan: shaded symmetric level pairs, white median, outer levels
    as solid lines. curves is (T, P)."""
    curves = np.asarray(curves, dtype=float)
    levels = np.asarray(levels, dtype=float)
    T, P = curves.shape
    x = np.arange(T)
    fig, ax = plt.subplots(figsize=(9.0, 4.0))
    n_pairs = P // 2
    for i in range(n_pairs):
        alpha = 0.12 + 0.5 * (i + 1) / n_pairs
        ax.fill_between(x, curves[:, i], curves[:, P - 1 - i],
                        color=_BAND_COLOR, alpha=alpha * 0.6, linewidth=0)
    if P % 2 == 1:
        ax.plot(x, curves[:, P // 2], color=_MEDIAN_COLOR, linewidth=1.4)
    ax.plot(x, curves[:, 0], color="black", linewidth=0.9)
    ax.plot(x, curves[:, -1], color="black", linewidth=0.9)
    if series is not None:
        ax.plot(x, np.asarray(series, dtype=float), color="#c44e52",
                linewidth=0.8, alpha=0.8)
    ax.axhline(0.0, color="#c44e52", linewidth=0.6, alpha=0.6)
    ticks = _tick_positions(T)
    ax.set_xticks(ticks)
    ax.set_xticklabels([str(timestamps[i]) for i in ticks], rotation=45,
                       ha="right", fontsize=8)
    ax.set_ylabel("quantile paths")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_forecast_curves(levels, curves_by_horizon, path, title=None):
    """Forecast quantile curves, one line per horizon."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for h in sorted(curves_by_horizon):
        ax.plot(levels, curves_by_horizon[h], marker="o", markersize=3,
                label=f"h={h}")
    ax.set_xlabel("quantile level")
    ax.set_ylabel("forecast")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_metric_bars(table, path):
    """One panel per metric family: benchmark-relative bars by model/horizon."""
    families = [k for k in ("crps_none", "crps_tails", "crps_left",
                            "crps_right", "lps") if any(
        key[1] == k for key in table.values)]
    if not families:
        return
    fig, axes = plt.subplots(1, len(families),
                             figsize=(3.2 * len(families), 3.6), squeeze=False)
    width = 0.8 / max(len(table.horizons), 1)
    xpos = np.arange(len(table.models))
    for ax, fam in zip(axes[0], families):
        for j, h in enumerate(table.horizons):
            vals = [table.relative_value(m, fam, h) for m in table.models]
            ax.bar(xpos + j * width, vals, width=width, label=f"h={h}")
        ref = 0.0 if fam == "lps" else 1.0
        ax.axhline(ref, color="black", linewidth=0.7)
        ax.set_xticks(xpos + width * (len(table.horizons) - 1) / 2)
        ax.set_xticklabels(table.models, rotation=60, ha="right", fontsize=7)
        ax.set_title(fam, fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0][0].set_ylabel("relative to benchmark", fontsize=8)
    axes[0][-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_band_paths(records, value_keys, path, title=None):
    """Per-model paths of banded statistics (moments or scenario probabilities):
    records carry (model, origin, point, lo, hi) plus a discriminating key."""
    kinds = sorted({r[value_keys] for r in records})
    models = sorted({r["model"] for r in records})
    if not kinds:
        return
    fig, axes = plt.subplots(len(kinds), 1, figsize=(8.0, 2.2 * len(kinds)),
                             squeeze=False, sharex=True)
    for ax, kind in zip(axes[:, 0], kinds):
        for m in models:
            rows = sorted((r for r in records
                           if r[value_keys] == kind and r["model"] == m),
                          key=lambda r: r["origin"])
            if not rows:
                continue
            x = [r["origin"] for r in rows]
            ax.plot(x, [r["point"] for r in rows], label=m, linewidth=1.0)
            ax.fill_between(x, [r["lo"] for r in rows], [r["hi"] for r in rows],
                            alpha=0.2, linewidth=0)
        ax.set_title(str(kind), fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0, 0].legend(fontsize=7)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
