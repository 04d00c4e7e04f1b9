"""Render the run directory's plot-data CSVs to PNG figures.

Each plot_*.csv produced by the report stage gets a matching .png next to
it. Rendering is best-effort per figure: a missing CSV is skipped, so a
partial run still yields whatever figures its data supports.
"""

import json
import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

_CENTRALITY_COLS = ("out_degree", "in_degree", "betweenness", "closeness")


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _investor_groups(frame: pd.DataFrame):
    return [(inv, grp) for inv, grp in frame.groupby("investor", sort=True)]


def _circular_layout(labels: list[str]) -> dict[str, tuple[float, float]]:
    n = max(len(labels), 1)
    return {
        lab: (math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n))
        for i, lab in enumerate(labels)
    }


def render_network_graphs(out: Path) -> Path | None:
    path = out / "plot_network_edges.csv"
    cent_path = out / "plot_centrality_distribution.csv"
    if not path.exists() or not cent_path.exists():
        return None
    edges = pd.read_csv(path)
    cent = pd.read_csv(cent_path)
    groups = _investor_groups(cent)
    fig, axes = plt.subplots(1, len(groups), figsize=(5 * len(groups), 5))
    axes = np.atleast_1d(axes)
    for ax, (investor, grp) in zip(axes, groups):
        labels = sorted(grp["ticker"].astype(str))
        pos = _circular_layout(labels)
        xy = np.array([pos[t] for t in labels])
        ax.scatter(xy[:, 0], xy[:, 1], s=30, color="steelblue", zorder=3)
        sub = edges[edges["investor"] == investor]
        w_max = sub["te_bits"].max() if len(sub) else 1.0
        for _, e in sub.iterrows():
            s, t = str(e["source"]), str(e["target"])
            if s not in pos or t not in pos:
                continue
            (x0, y0), (x1, y1) = pos[s], pos[t]
            ax.annotate(
                "", xy=(x1, y1), xytext=(x0, y0),
                arrowprops={
                    "arrowstyle": "-|>",
                    "color": "darkred",
                    "alpha": 0.6,
                    "lw": 0.5 + 2.0 * float(e["te_bits"]) / max(w_max, 1e-12),
                },
            )
        ax.set_title(f"{investor} ({len(sub)} edges)")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_aspect("equal")
    return _save(fig, out / "plot_network_edges.png")


def render_te_heatmaps(out: Path) -> Path | None:
    path = out / "plot_te_matrix.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    groups = _investor_groups(frame)
    fig, axes = plt.subplots(1, len(groups), figsize=(5.5 * len(groups), 4.5))
    axes = np.atleast_1d(axes)
    for ax, (investor, grp) in zip(axes, groups):
        mat = grp.pivot(index="source", columns="target", values="te_bits")
        im = ax.imshow(mat.to_numpy(), cmap="viridis", aspect="auto")
        ax.set_title(f"{investor}: pairwise TE (bits)")
        ax.set_xlabel("target")
        ax.set_ylabel("source")
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, out / "plot_te_matrix.png")


def render_centrality_distributions(out: Path) -> Path | None:
    path = out / "plot_centrality_distribution.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    investors = sorted(frame["investor"].unique())
    fig, axes = plt.subplots(
        len(investors), len(_CENTRALITY_COLS),
        figsize=(3.2 * len(_CENTRALITY_COLS), 2.6 * len(investors)),
        squeeze=False,
    )
    for r, investor in enumerate(investors):
        grp = frame[frame["investor"] == investor]
        for c, col in enumerate(_CENTRALITY_COLS):
            ax = axes[r][c]
            ax.hist(grp[col].to_numpy(), bins=20, color="steelblue", edgecolor="white")
            if r == 0:
                ax.set_title(col)
            if c == 0:
                ax.set_ylabel(investor)
    return _save(fig, out / "plot_centrality_distribution.png")


def render_ii_distributions(out: Path) -> Path | None:
    path = out / "plot_ii_distribution.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    pairs = sorted(frame["pair"].unique())
    fig, axes = plt.subplots(1, len(pairs), figsize=(4.5 * len(pairs), 3.6))
    axes = np.atleast_1d(axes)
    for ax, pair in zip(axes, pairs):
        vals = frame.loc[frame["pair"] == pair, "ii_bits"].to_numpy()
        ax.hist(vals, bins=25, color="slateblue", edgecolor="white")
        ax.axvline(0.0, color="black", lw=1, ls="--")
        ax.set_title(pair.replace("_", " "))
        ax.set_xlabel("interaction information (bits)")
    return _save(fig, out / "plot_ii_distribution.png")


def render_directionality(out: Path) -> Path | None:
    path = out / "plot_directionality.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    if frame.empty or "d_index_nats" not in frame.columns:
        return None
    fig, ax = plt.subplots(figsize=(6.5, 4))
    x = np.arange(len(frame))
    d = frame["d_index_nats"].to_numpy()
    lo = frame["ci_lo"].to_numpy()
    hi = frame["ci_hi"].to_numpy()
    ax.errorbar(x, d, yerr=[d - lo, hi - d], fmt="o", capsize=4, color="darkred")
    ax.axhline(0.0, color="black", lw=1, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels([p.replace("_", " ") for p in frame["pair"]], rotation=20)
    ax.set_ylabel("directionality index (nats)")
    return _save(fig, out / "plot_directionality.png")


def render_kelly(out: Path) -> Path | None:
    path = out / "plot_kelly_bit_yield.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    if frame.empty:
        return None
    labels = [f"{r.investor}\n{r.signal}" for r in frame.itertuples()]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    x = np.arange(len(frame))
    ax1.bar(x, frame["kelly_rate"], color="seagreen")
    ax1.set_xticks(x)
    ax1.set_xticklabels(labels, fontsize=8)
    ax1.set_ylabel("Kelly growth rate")
    ax2.bar(x, frame["bit_yield"], color="goldenrod")
    ax2.set_xticks(x)
    ax2.set_xticklabels(labels, fontsize=8)
    ax2.set_ylabel("return per bit")
    return _save(fig, out / "plot_kelly_bit_yield.png")


def render_quintiles(out: Path) -> Path | None:
    path = out / "plot_quintile_profile.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    if frame.empty:
        return None
    combos = sorted({(r.investor, r.signal) for r in frame.itertuples()})
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for investor, signal in combos:
        grp = frame[(frame["investor"] == investor) & (frame["signal"] == signal)]
        grp = grp.sort_values("quintile")
        label = f"{investor}/{signal}"
        ax1.plot(grp["quintile"], grp["mean_return"], marker="o", label=label)
        ax2.plot(grp["quintile"], grp["sharpe"], marker="s", label=label)
    ax1.set_xlabel("quintile")
    ax1.set_ylabel("mean period return")
    ax2.set_xlabel("quintile")
    ax2.set_ylabel("annualized Sharpe")
    ax1.legend(fontsize=7)
    return _save(fig, out / "plot_quintile_profile.png")


def render_lag_profile(out: Path) -> Path | None:
    path = out / "plot_lag_profile.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for investor, grp in frame.groupby("investor", sort=True):
        grp = grp.sort_values("lag")
        ax.errorbar(grp["lag"], grp["mean_te"], yerr=grp["sd_te"],
                    marker="o", capsize=3, label=investor)
    ax.set_xlabel("lag (periods)")
    ax.set_ylabel("mean TE (bits)")
    ax.legend()
    return _save(fig, out / "plot_lag_profile.png")


def render_rolling_density(out: Path) -> Path | None:
    path = out / "plot_rolling_density.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(7.5, 4))
    for investor, grp in frame.groupby("investor", sort=True):
        dates = pd.to_datetime(grp["end_date"])
        ax.plot(dates, grp["density"], label=investor)
    ax.set_ylabel("network density")
    ax.set_xlabel("window end date")
    ax.legend()
    fig.autofmt_xdate()
    return _save(fig, out / "plot_rolling_density.png")


_RENDERERS = (
    render_network_graphs,
    render_te_heatmaps,
    render_centrality_distributions,
    render_ii_distributions,
    render_directionality,
    render_kelly,
    render_quintiles,
    render_lag_profile,
    render_rolling_density,
)


def render_figures(out: Path) -> list[Path]:
    """Render every available plot-data file; returns the PNG paths."""
    out = Path(out)
    rendered: list[Path] = []
    for renderer in _RENDERERS:
        try:
            result = renderer(out)
        except Exception:
            log.exception("figure renderer %s failed", renderer.__name__)
            continue
        if result is not None:
            rendered.append(result)
    _write_manifest(out, rendered)
    return rendered


def _write_manifest(out: Path, rendered: list[Path]) -> None:
    path = out / "figures_manifest.json"
    path.write_text(json.dumps({"rendered": sorted(p.name for p in rendered)}, indent=2) + "\n")
