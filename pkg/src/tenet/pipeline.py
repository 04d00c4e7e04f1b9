"""End-to-end pipeline: config, stages, reports, and the robustness suite.

Stages write their outputs into one run directory and are independently
re-runnable: each stage reads the cleaned panel (and any upstream stage
files it needs) from that directory rather than sharing in-memory state.
A manifest records the config hash, master seed and library versions; any
stage failure leaves a FAILED marker naming the stage and cause, with all
partial outputs retained.

Determinism contract: the same config and seed produce byte-identical
numeric outputs regardless of --jobs, because every stochastic component
draws from a seed derived from (master seed, stable tags) and all rows are
emitted in sorted order with fixed float formatting.
"""

import dataclasses
import hashlib
import itertools
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .bounds import RiskFreeSpec, bounds_row
from .cross_section import FMSpec, fama_macbeth, portfolio_compare, quintile_sort
from .errors import ConfigError, SampleSizeError, StageFailure
from .estimators import KSGConfig, TEConfig, ksg_te, symbolic_te
from .higher_order import directionality_index, ii_cross_section
from .inference import BootstrapSpec, SurrogateSpec, bh_fdr
from .network import (
    bellwether_ranking,
    centralities,
    network_stats,
    rolling_density,
    scan_panel,
)
from .panel import (
    FlowPanel,
    INVESTOR_TYPES,
    MATCHED_SIGNAL,
    compute_returns,
    load_panel,
    resolve_signal_field,
    symbol_matrix,
)
from .seeding import derive_seed

log = logging.getLogger(__name__)

STAGES = ("ingest", "te-network", "higher-order", "cross-section", "bounds", "robustness", "report")

_FLOAT_FMT = "%.12g"


@dataclass
class RunConfig:
    """Flat, human-editable run configuration (YAML key-value file).

    ``subperiods`` entries are "label:YYYY-MM-DD:YYYY-MM-DD" strings. The
    ``te_method`` toggle picks the headline estimator for the robustness
    method panel; the panel always reports both families.
    """

    input: str = ""
    out_dir: str = "runs/latest"
    seed: int = 0
    jobs: int = 1
    schema: dict = field(default_factory=dict)
    derive_signals: bool = False
    strict: bool = True
    investor_types: list = field(default_factory=lambda: list(INVESTOR_TYPES))
    signal: str = "matched"
    zscore: bool = False
    n_symbols: int = 5
    te_lag: int = 1
    lag_grid: list = field(default_factory=lambda: [1, 5, 10, 20])
    min_samples: int = 50
    n_surrogates: int = 200
    block_length: int = 20
    percentile: float = 95.0
    alpha: float = 0.05
    alpha_grid: list = field(default_factory=lambda: [0.01, 0.05, 0.10])
    ksg_neighbors: int = 5
    n_boot: int = 200
    boot_block: int = 20
    ci_level: float = 0.95
    r_f: float = 0.035
    periods_per_year: float = 252.0
    min_stocks_per_period: int = 10
    nw_lags: int = 0
    ii_min_obs: int = 250
    subperiods: list = field(default_factory=list)
    size_quintiles: bool = True
    te_method: str = "symbolic"
    rolling_window: int = 60
    rolling_step: int = 5
    rolling_enabled: bool = True
    figures: bool = True

    def __post_init__(self):
        unknown = [t for t in self.investor_types if t not in INVESTOR_TYPES]
        if unknown:
            raise ConfigError(f"unknown investor types: {unknown}")
        if not self.investor_types:
            raise ConfigError("investor_types must not be empty")
        if self.signal not in ("matched", "s_mc", "s_tv", "net_flow"):
            raise ConfigError(f"unknown signal selector: {self.signal!r}")
        for a in list(self.alpha_grid) + [self.alpha]:
            if not 0 < a < 1:
                raise ConfigError(f"alpha values must lie in (0,1), got {a}")
        if self.te_method not in ("symbolic", "ksg"):
            raise ConfigError(f"te_method must be 'symbolic' or 'ksg', got {self.te_method!r}")
        bad_schema = [k for k in self.schema if k not in (
            "date", "ticker", "investor_type", "net_buy_volume", "close",
            "market_cap", "trading_volume", "s_mc", "s_tv")]
        if bad_schema:
            raise ConfigError(f"schema maps unknown canonical columns: {bad_schema}")
        self.parse_subperiods()  # validates format eagerly

    def parse_subperiods(self) -> list[tuple[str, pd.Timestamp, pd.Timestamp]]:
        out = []
        for entry in self.subperiods:
            parts = str(entry).split(":")
            if len(parts) != 3:
                raise ConfigError(
                    f"subperiod {entry!r} must be 'label:YYYY-MM-DD:YYYY-MM-DD'"
                )
            label, start, end = parts
            try:
                lo, hi = pd.Timestamp(start), pd.Timestamp(end)
            except ValueError as exc:
                raise ConfigError(f"unparseable subperiod dates in {entry!r}: {exc}") from exc
            if lo > hi:
                raise ConfigError(f"subperiod {entry!r} has start after end")
            out.append((label, lo, hi))
        return out

    # -- derived component specs -------------------------------------------

    def te_config(self, lag: int | None = None) -> TEConfig:
        return TEConfig(
            lag=self.te_lag if lag is None else lag,
            n_symbols=self.n_symbols,
            min_samples=self.min_samples,
        )

    def surrogate_spec(self) -> SurrogateSpec:
        return SurrogateSpec(
            n_surrogates=self.n_surrogates,
            block_length=self.block_length,
            percentile=self.percentile,
            alpha=self.alpha,
            seed=self.seed,
        )

    def ksg_config(self) -> KSGConfig:
        return KSGConfig(k_neighbors=self.ksg_neighbors)

    def bootstrap_spec(self) -> BootstrapSpec:
        return BootstrapSpec(
            n_boot=self.n_boot,
            block_length=self.boot_block,
            level=self.ci_level,
            seed=derive_seed(self.seed, "bootstrap"),
        )

    def fm_spec(self, signal_name: str) -> FMSpec:
        return FMSpec(
            signal_column=signal_name,
            centrality_column="out_degree",
            min_stocks_per_period=self.min_stocks_per_period,
            nw_lags=self.nw_lags,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}")
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc))


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=_FLOAT_FMT)


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n")


def _read_panel(out: Path, config: RunConfig) -> FlowPanel:
    clean = out / "panel_clean.csv"
    if not clean.exists():
        raise StageFailure(
            "ingest outputs missing: run the ingest stage first "
            f"(expected {clean})",
            stage="ingest",
        )
    return load_panel(clean)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def stage_ingest(config: RunConfig, out: Path) -> None:
    """Validate the raw CSV, write the canonical cleaned panel + summary."""
    if not config.input:
        raise ConfigError("config.input must point at a panel CSV (or use the synth command)")
    panel = load_panel(
        config.input,
        schema=config.schema or None,
        derive_signals=config.derive_signals,
        strict=config.strict,
    )
    missing_types = [t for t in config.investor_types if t not in panel.investor_types]
    if missing_types:
        raise ConfigError(
            f"investor types {missing_types} requested but absent from the data "
            f"(present: {panel.investor_types})"
        )
    panel.to_csv(out / "panel_clean.csv")
    _write_json(
        {
            "n_rows": int(len(panel.records)),
            "n_tickers": panel.n_tickers,
            "n_dates": panel.n_dates,
            "date_range": [str(panel.date_index[0].date()), str(panel.date_index[-1].date())],
            "investor_types": panel.investor_types,
            "signals_derived": panel.signals_derived,
            "n_dropped_rows": len(panel.dropped_rows),
            "dropped_rows": [[ln, why] for ln, why in panel.dropped_rows[:200]],
        },
        out / "ingest_summary.json",
    )


def _lag_profile(panel: FlowPanel, investor: str, config: RunConfig) -> pd.DataFrame:
    """Raw (pre-significance) mean/sd of pairwise TE at each configured lag."""
    sym, _ = symbol_matrix(panel, investor, signal=config.signal,
                           zscore=config.zscore, n_symbols=config.n_symbols)
    rows = []
    for lag in config.lag_grid:
        te_cfg = config.te_config(lag=lag)
        min_len = max(te_cfg.min_samples, 2) + te_cfg.lag + 1
        values = []
        for i, j in itertools.permutations(range(sym.shape[0]), 2):
            common = (sym[i] >= 0) & (sym[j] >= 0)
            if int(common.sum()) < min_len:
                continue
            values.append(symbolic_te(sym[i, common], sym[j, common], te_cfg))
        rows.append(
            {
                "investor": investor,
                "lag": int(lag),
                "mean_te": float(np.mean(values)) if values else float("nan"),
                "sd_te": float(np.std(values, ddof=1)) if len(values) > 1 else float("nan"),
                "n_pairs": len(values),
            }
        )
    return pd.DataFrame(rows)


def stage_te_network(config: RunConfig, out: Path) -> None:
    """Pairwise surrogate scans per investor type; graphs and their tables."""
    panel = _read_panel(out, config)
    te_cfg = config.te_config()
    surr = config.surrogate_spec()
    for investor in config.investor_types:
        scan = scan_panel(
            panel, investor, te_cfg, surr,
            signal=config.signal, zscore=config.zscore, jobs=config.jobs,
        )
        _write_csv(scan.edges_frame(), out / f"edges_{investor}.csv")
        graph = scan.graph()
        stats = network_stats(graph)
        _write_json(
            {
                **stats.as_dict(),
                "n_nodes": graph.n_nodes,
                "n_pairs_tested": len(scan.results),
                "n_pairs_skipped": len(scan.skipped_pairs),
                "dropped_tickers": scan.dropped_tickers,
            },
            out / f"network_stats_{investor}.json",
        )
        table = centralities(graph)
        _write_csv(table.as_frame(), out / f"centrality_{investor}.csv")
        top = bellwether_ranking(table, min(10, graph.n_nodes))
        idx = {t: k for k, t in enumerate(table.node_labels)}
        _write_csv(
            pd.DataFrame(
                {
                    "rank": np.arange(1, len(top) + 1),
                    "ticker": top,
                    "out_degree": [table.out_degree[idx[t]] for t in top],
                    "weighted_out_degree": [table.weighted_out_degree[idx[t]] for t in top],
                    "pagerank": [table.pagerank[idx[t]] for t in top],
                    "betweenness": [table.betweenness[idx[t]] for t in top],
                }
            ),
            out / f"bellwethers_{investor}.csv",
        )
        _write_csv(_lag_profile(panel, investor, config), out / f"lag_profile_{investor}.csv")
        if config.rolling_enabled and config.rolling_window <= panel.n_dates:
            rd = rolling_density(
                panel, investor, te_cfg, surr,
                window=config.rolling_window, step=config.rolling_step,
                jobs=config.jobs, signal=config.signal,
            )
            rd["end_date"] = rd["end_date"].astype(str)
            _write_csv(rd, out / f"rolling_density_{investor}.csv")


def _aggregate_series(panel: FlowPanel, investor: str, signal: str, zscore: bool) -> np.ndarray:
    """Cross-sectional mean of one investor's signal per date."""
    mat = panel.signal_matrix(investor, signal, zscore)
    return _column_mean(mat)


def _column_mean(mat: np.ndarray) -> np.ndarray:
    """Per-column mean over finite entries; NaN where a column has none."""
    mask = np.isfinite(mat)
    counts = mask.sum(axis=0)
    sums = np.where(mask, mat, 0.0).sum(axis=0)
    return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def stage_higher_order(config: RunConfig, out: Path) -> None:
    """Interaction information per investor pair; directionality on aggregates."""
    panel = _read_panel(out, config)
    rets = compute_returns(panel).next_return
    market = _column_mean(rets)

    ii_rows = []
    directionality_rows = []
    pairs = list(itertools.combinations(config.investor_types, 2))
    for inv_a, inv_b in pairs:
        label = f"{inv_a}_vs_{inv_b}"
        try:
            ii = ii_cross_section(
                panel, inv_a, inv_b, signal_a=config.signal, signal_b=config.signal,
                n_symbols=config.n_symbols, min_obs=config.ii_min_obs,
            )
        except SampleSizeError as exc:
            log.warning("II for %s unavailable: %s", label, exc)
            ii_rows.append({"pair": label, "note": str(exc)})
        else:
            _write_csv(
                pd.DataFrame({"ticker": ii.tickers, "ii_bits": ii.per_stock_ii}),
                out / f"ii_{label}.csv",
            )
            ii_rows.append(
                {
                    "pair": label,
                    "mean_ii": ii.mean_ii,
                    "median_ii": ii.median_ii,
                    "pct_synergy": ii.pct_synergy,
                    "mi_a_r": ii.mi_a_r,
                    "mi_b_r": ii.mi_b_r,
                    "t_p_value": ii.t_p_value,
                    "n_stocks": len(ii.tickers),
                    "n_skipped": len(ii.skipped),
                }
            )

        a = _aggregate_series(panel, inv_a, config.signal, config.zscore)
        b = _aggregate_series(panel, inv_b, config.signal, config.zscore)
        mask = np.isfinite(a) & np.isfinite(b) & np.isfinite(market)
        boot = dataclasses.replace(
            config.bootstrap_spec(), seed=derive_seed(config.seed, "directionality", label)
        )
        try:
            res = directionality_index(
                a[mask], b[mask], market[mask],
                config=config.ksg_config(), lag=config.te_lag, boot=boot,
            )
        except (SampleSizeError, ValueError) as exc:
            log.warning("directionality for %s unavailable: %s", label, exc)
            directionality_rows.append({"pair": label, "note": str(exc)})
            continue
        directionality_rows.append(
            {
                "pair": label,
                "investor_a": inv_a,
                "investor_b": inv_b,
                "cte_a_given_b_nats": res.cte_a_given_b,
                "cte_b_given_a_nats": res.cte_b_given_a,
                "d_index_nats": res.d_index,
                "d_index_clamped_nats": max(res.cte_a_given_b, 0.0) - max(res.cte_b_given_a, 0.0),
                "ci_lo": res.ci_lo,
                "ci_hi": res.ci_hi,
                "p_value": res.p_value,
                "ci_level": res.level,
                "n_boot": res.n_boot,
                "n_failed": res.n_failed,
            }
        )
    _write_json(ii_rows, out / "ii_summary.json")
    _write_json(directionality_rows, out / "directionality.json")


def _signal_names(config: RunConfig) -> list[str]:
    if config.signal == "matched":
        return ["s_mc", "s_tv"]
    return [config.signal]


def stage_cross_section(config: RunConfig, out: Path) -> None:
    """Per-period regressions, quintile sorts, and portfolio comparison."""
    panel = _read_panel(out, config)
    rets = compute_returns(panel).next_return
    fm_rows, quintile_rows, portfolio_rows = [], [], []
    for investor in config.investor_types:
        cent_path = out / f"centrality_{investor}.csv"
        if not cent_path.exists():
            raise StageFailure(
                f"centrality_{investor}.csv missing: run the te-network stage first",
                stage="cross-section",
            )
        cent_frame = pd.read_csv(cent_path).set_index("ticker")
        centrality = (
            cent_frame["out_degree"].reindex(panel.ticker_index).fillna(0.0).to_numpy()
        )
        for signal_name in _signal_names(config):
            sig = panel.signal_matrix(investor, signal_name, zscore=config.zscore)
            combo = {"investor": investor, "signal": signal_name}
            try:
                fm = fama_macbeth(sig, centrality, rets, config.fm_spec(signal_name))
                fm_rows.append({**combo, **fm.summary()})
            except (SampleSizeError, ValueError) as exc:
                log.warning("FM for %s/%s unavailable: %s", investor, signal_name, exc)
                fm_rows.append({**combo, "note": str(exc)})
            try:
                scores = sig * centrality[:, None]
                q = quintile_sort(scores, rets, periods_per_year=config.periods_per_year)
                for bin_i in range(q.mean_return.size):
                    quintile_rows.append(
                        {
                            **combo,
                            "quintile": bin_i + 1,
                            "mean_return": q.mean_return[bin_i],
                            "sharpe": q.sharpe[bin_i],
                            "n_periods": q.n_periods,
                        }
                    )
            except (SampleSizeError, ValueError) as exc:
                log.warning("quintiles for %s/%s unavailable: %s", investor, signal_name, exc)
            try:
                p = portfolio_compare(sig, centrality, rets, config.periods_per_year)
                portfolio_rows.append(
                    {
                        **combo,
                        "ann_return_signal_only": p.ann_return_signal_only,
                        "ann_return_network_enhanced": p.ann_return_network_enhanced,
                        "improvement_pp": p.improvement_pp,
                        "n_periods": p.n_periods,
                    }
                )
            except (SampleSizeError, ValueError) as exc:
                log.warning("portfolio for %s/%s unavailable: %s", investor, signal_name, exc)
                portfolio_rows.append({**combo, "note": str(exc)})
    _write_csv(pd.DataFrame(fm_rows), out / "fm_results.csv")
    _write_csv(pd.DataFrame(quintile_rows), out / "quintiles.csv")
    _write_csv(pd.DataFrame(portfolio_rows), out / "portfolio_compare.csv")


def stage_bounds(config: RunConfig, out: Path) -> None:
    """Information bounds per (investor, signal) on aggregate series."""
    panel = _read_panel(out, config)
    rets = compute_returns(panel).next_return
    market = _column_mean(rets)
    portfolio_path = out / "portfolio_compare.csv"
    ann_lookup: dict[tuple[str, str], float] = {}
    if portfolio_path.exists():
        pf = pd.read_csv(portfolio_path)
        if "ann_return_signal_only" in pf.columns:
            for _, row in pf.iterrows():
                val = row.get("ann_return_signal_only", float("nan"))
                ann_lookup[(row["investor"], row["signal"])] = (
                    float(val) if pd.notna(val) else float("nan")
                )
    rows = []
    for investor in config.investor_types:
        for signal_name in _signal_names(config):
            agg = _aggregate_series(panel, investor, signal_name, config.zscore)
            mask = np.isfinite(agg) & np.isfinite(market)
            ann = ann_lookup.get((investor, signal_name), float("nan"))
            try:
                row = bounds_row(
                    investor, signal_name, agg[mask], market[mask],
                    ann_return=ann if np.isfinite(ann) else 0.0,
                    risk_free=RiskFreeSpec(config.r_f),
                    periods_per_year=config.periods_per_year,
                )
            except (SampleSizeError, ValueError) as exc:
                log.warning("bounds for %s/%s unavailable: %s", investor, signal_name, exc)
                rows.append({"investor": investor, "signal": signal_name, "note": str(exc)})
                continue
            rows.append(vars(row))
    _write_csv(pd.DataFrame(rows), out / "bounds.csv")


# ---------------------------------------------------------------------------
# robustness suite
# ---------------------------------------------------------------------------


def _raw_te_stats(panel: FlowPanel, investor: str, config: RunConfig,
                  tickers: list[str] | None = None) -> dict:
    """Pre-significance TE over ordered pairs: raw density and mean TE.

    Raw density counts any strictly positive TE (floor 0), which is why it
    sits near 1 on real data; cells that cannot be estimated are skipped.
    """
    sym, _ = symbol_matrix(panel, investor, signal=config.signal,
                           zscore=config.zscore, n_symbols=config.n_symbols)
    te_cfg = config.te_config()
    keep = range(sym.shape[0])
    if tickers is not None:
        index = {t: i for i, t in enumerate(panel.ticker_index)}
        keep = [index[t] for t in tickers if t in index]
    min_len = max(te_cfg.min_samples, 2) + te_cfg.lag + 1
    values = []
    n_unavailable = 0
    for i, j in itertools.permutations(keep, 2):
        common = (sym[i] >= 0) & (sym[j] >= 0)
        if int(common.sum()) < min_len:
            n_unavailable += 1
            continue
        values.append(symbolic_te(sym[i, common], sym[j, common], te_cfg))
    if not values:
        return {"raw_density": float("nan"), "mean_te": float("nan"),
                "n_pairs": 0, "n_unavailable": n_unavailable}
    arr = np.asarray(values)
    return {
        "raw_density": float(np.mean(arr > 0)),
        "mean_te": float(arr.mean()),
        "n_pairs": int(arr.size),
        "n_unavailable": n_unavailable,
    }


def robustness_suite(config: RunConfig, out: Path) -> None:
    """Four-panel stability analysis: subperiods, size, methods, thresholds."""
    panel = _read_panel(out, config)

    # Panel A: subperiods
    sub_rows = []
    for label, lo, hi in config.parse_subperiods():
        sub = panel.slice_dates(lo, hi)
        for investor in config.investor_types:
            if sub.n_dates < config.min_samples + config.te_lag + 1:
                sub_rows.append(
                    {"subperiod": label, "investor": investor, "available": False,
                     "n_dates": sub.n_dates}
                )
                continue
            stats = _raw_te_stats(sub, investor, config)
            sub_rows.append(
                {"subperiod": label, "investor": investor, "available": True,
                 "n_dates": sub.n_dates, **stats}
            )
    _write_csv(pd.DataFrame(sub_rows), out / "robustness_subperiods.csv")

    # Panel B: size quintiles by time-average market cap
    size_rows = []
    if config.size_quintiles and panel.n_tickers >= 10:
        caps = panel.field_matrix("market_cap")
        mean_cap = _column_mean(caps.T)
        order = np.argsort(np.argsort(mean_cap, kind="stable"))
        bins = (order * 5) // panel.n_tickers
        for q in range(5):
            members = [t for t, b in zip(panel.ticker_index, bins) if b == q]
            for investor in config.investor_types:
                if len(members) < 2:
                    size_rows.append(
                        {"size_quintile": q + 1, "investor": investor, "available": False}
                    )
                    continue
                stats = _raw_te_stats(panel, investor, config, tickers=members)
                size_rows.append(
                    {"size_quintile": q + 1, "investor": investor, "available": True,
                     "n_stocks": len(members), **stats}
                )
    _write_csv(pd.DataFrame(size_rows), out / "robustness_size_quintiles.csv")

    # Panel C: estimator families on the same pairs
    method_rows = []
    for investor in config.investor_types:
        sym_stats = _raw_te_stats(panel, investor, config)
        signal_field = (
            MATCHED_SIGNAL[investor] if config.signal == "matched"
            else resolve_signal_field(investor, config.signal)
        )
        mat = panel.signal_matrix(investor, signal_field, zscore=config.zscore)
        ksg_cfg = config.ksg_config()
        values = []
        for i, j in itertools.permutations(range(mat.shape[0]), 2):
            common = np.isfinite(mat[i]) & np.isfinite(mat[j])
            if int(common.sum()) < config.min_samples + config.te_lag + 1:
                continue
            values.append(
                ksg_te(mat[i, common], mat[j, common], ksg_cfg, lag=config.te_lag)
            )
        method_rows.append(
            {
                "investor": investor,
                "headline_method": config.te_method,
                "mean_te_symbolic_bits": sym_stats["mean_te"],
                "mean_te_ksg_nats": float(np.mean(values)) if values else float("nan"),
                "n_pairs_symbolic": sym_stats["n_pairs"],
                "n_pairs_ksg": len(values),
            }
        )
    _write_csv(pd.DataFrame(method_rows), out / "robustness_methods.csv")

    # Panel D: significance thresholds on the main scan's p-values
    alpha_rows = []
    for investor in config.investor_types:
        edges_path = out / f"edges_{investor}.csv"
        if not edges_path.exists():
            raise StageFailure(
                f"edges_{investor}.csv missing: run the te-network stage first",
                stage="robustness",
            )
        edges = pd.read_csv(edges_path)
        p = edges["p_value"].to_numpy()
        # an edge is significant at alpha iff BH rejects at alpha AND the TE
        # clears the surrogate percentile; the latter is alpha-independent
        exceeds = edges["te_bits"].to_numpy() > edges["threshold"].to_numpy()
        for a in config.alpha_grid:
            reject, _ = bh_fdr(p, float(a))
            alpha_rows.append(
                {
                    "investor": investor,
                    "alpha": float(a),
                    "n_significant": int(np.sum(reject & exceeds)),
                    "n_pairs": int(p.size),
                }
            )
    _write_csv(pd.DataFrame(alpha_rows), out / "robustness_alpha.csv")


# ---------------------------------------------------------------------------
# report stage: tidy plot data + optional figure rendering
# ---------------------------------------------------------------------------


def emit_plot_data(config: RunConfig, out: Path) -> list[Path]:
    """Write the nine tidy plot-data CSVs from a completed run directory.

    Missing upstream reports are listed in plot_data_manifest.json and
    skipped rather than failing the stage.
    """
    written: list[Path] = []
    missing: list[str] = []

    def emit(name: str, frame: pd.DataFrame) -> None:
        path = out / name
        _write_csv(frame, path)
        written.append(path)

    edge_frames = []
    matrix_frames = []
    centrality_frames = []
    rolling_frames = []
    lag_frames = []
    for investor in config.investor_types:
        epath = out / f"edges_{investor}.csv"
        if epath.exists():
            edges = pd.read_csv(epath)
            edges.insert(0, "investor", investor)
            matrix_frames.append(edges[["investor", "source", "target", "te_bits"]])
            sig = edges[edges["significant"] == True]  # noqa: E712
            edge_frames.append(sig[["investor", "source", "target", "te_bits"]])
        else:
            missing.append(f"edges_{investor}.csv")
        cpath = out / f"centrality_{investor}.csv"
        if cpath.exists():
            cent = pd.read_csv(cpath)
            cent.insert(0, "investor", investor)
            centrality_frames.append(cent)
        else:
            missing.append(f"centrality_{investor}.csv")
        rpath = out / f"rolling_density_{investor}.csv"
        if rpath.exists():
            rd = pd.read_csv(rpath)
            rd.insert(0, "investor", investor)
            rolling_frames.append(rd[["investor", "end_date", "density"]])
        else:
            missing.append(f"rolling_density_{investor}.csv")
        lpath = out / f"lag_profile_{investor}.csv"
        if lpath.exists():
            lag_frames.append(pd.read_csv(lpath))
        else:
            missing.append(f"lag_profile_{investor}.csv")

    if edge_frames:
        emit("plot_network_edges.csv", pd.concat(edge_frames, ignore_index=True))
        emit("plot_te_matrix.csv", pd.concat(matrix_frames, ignore_index=True))
    if centrality_frames:
        emit("plot_centrality_distribution.csv", pd.concat(centrality_frames, ignore_index=True))
    if rolling_frames:
        emit("plot_rolling_density.csv", pd.concat(rolling_frames, ignore_index=True))
    if lag_frames:
        emit("plot_lag_profile.csv", pd.concat(lag_frames, ignore_index=True))

    ii_frames = []
    for path in sorted(out.glob("ii_*_vs_*.csv")):
        pair = path.stem.removeprefix("ii_")
        frame = pd.read_csv(path)
        frame.insert(0, "pair", pair)
        ii_frames.append(frame)
    if ii_frames:
        emit("plot_ii_distribution.csv", pd.concat(ii_frames, ignore_index=True))
    else:
        missing.append("ii_*_vs_*.csv")

    dpath = out / "directionality.json"
    if dpath.exists():
        rows = json.loads(dpath.read_text())
        rows = [r for r in rows if "d_index_nats" in r]
        emit("plot_directionality.csv", pd.DataFrame(rows))
    else:
        missing.append("directionality.json")

    bpath = out / "bounds.csv"
    if bpath.exists():
        bounds = pd.read_csv(bpath)
        cols = [c for c in ("investor", "signal", "kelly_rate", "bit_yield") if c in bounds.columns]
        emit("plot_kelly_bit_yield.csv", bounds[cols])
    else:
        missing.append("bounds.csv")

    qpath = out / "quintiles.csv"
    if qpath.exists():
        emit("plot_quintile_profile.csv", pd.read_csv(qpath))
    else:
        missing.append("quintiles.csv")

    _write_json(
        {"written": [p.name for p in written], "missing_upstream": missing},
        out / "plot_data_manifest.json",
    )
    return written


def stage_report(config: RunConfig, out: Path) -> None:
    emit_plot_data(config, out)
    if config.figures:
        from .figures import render_figures

        render_figures(out)


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "te-network": stage_te_network,
    "higher-order": stage_higher_order,
    "cross-section": stage_cross_section,
    "bounds": stage_bounds,
    "robustness": robustness_suite,
    "report": stage_report,
}


def run_pipeline(config: RunConfig, stages: list[str] | None = None) -> Path:
    """Run the pipeline (or a subset of stages) into the config's out_dir.

    Raises :class:`StageFailure` on the first failing stage after writing a
    FAILED marker; earlier stages' outputs are retained.
    """
    requested = list(stages) if stages else list(STAGES)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages: {unknown} (valid: {list(STAGES)})")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    manifest_path = out / "manifest.json"
    manifest = {
        "config": config.as_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "versions": _versions(),
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "stages_completed": [],
    }
    if manifest_path.exists():
        try:
            prior = json.loads(manifest_path.read_text())
            if prior.get("config_hash") == manifest["config_hash"]:
                manifest["stages_completed"] = [
                    s for s in prior.get("stages_completed", []) if s not in requested
                ]
        except (json.JSONDecodeError, OSError):
            pass
    _write_json(manifest, manifest_path)

    failed_marker = out / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    for stage in STAGES:
        if stage not in requested:
            continue
        log.info("stage %s starting", stage)
        t0 = time.monotonic()
        try:
            _STAGE_FUNCS[stage](config, out)
        except Exception as exc:
            failed_marker.write_text(f"stage: {stage}\ncause: {exc!r}\n")
            if isinstance(exc, StageFailure):
                raise
            raise StageFailure(f"stage {stage!r} failed: {exc}", stage=stage, cause=exc) from exc
        manifest["stages_completed"].append(stage)
        _write_json(manifest, manifest_path)
        log.info("stage %s done in %.1fs", stage, time.monotonic() - t0)
    return out


def _versions() -> dict:
    import scipy

    return {
        "tenet": __version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
    }
