"""Stock x date x investor-type flow panel: loading, validation, returns, symbolization.

The panel is the single ingestion point for the pipeline. A loaded
:class:`FlowPanel` is immutable by convention: downstream stages only read
from it, so one instance can be shared across parallel workers.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DegenerateSeriesError, IntegrityError, RowError, SchemaError

INVESTOR_TYPES = ("foreign", "institutional", "individual")

# Signal each investor type is paired with for flow-to-flow estimation.
MATCHED_SIGNAL = {"foreign": "s_tv", "institutional": "s_mc", "individual": "s_mc"}

REQUIRED_COLUMNS = (
    "date",
    "ticker",
    "investor_type",
    "net_buy_volume",
    "close",
    "market_cap",
    "trading_volume",
)
SIGNAL_COLUMNS = ("s_mc", "s_tv")
NUMERIC_COLUMNS = ("net_buy_volume", "close", "market_cap", "trading_volume") + SIGNAL_COLUMNS


@dataclass(frozen=True)
class DiscretizationSpec:
    """Per-series quantile discretization onto a finite alphabet."""

    n_symbols: int = 5
    scheme: str = "quantile"

    def __post_init__(self):
        if self.n_symbols < 2:
            raise ValueError(f"n_symbols must be >= 2, got {self.n_symbols}")
        if self.scheme != "quantile":
            raise ValueError(f"unknown discretization scheme: {self.scheme!r}")


@dataclass(frozen=True)
class SymbolSeries:
    """Quantile-discretized series over the alphabet {0, ..., n_symbols-1}."""

    symbols: np.ndarray
    n_symbols: int
    source_id: str = ""

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.int64)
        object.__setattr__(self, "symbols", sym)
        if sym.size and (sym.min() < 0 or sym.max() >= self.n_symbols):
            raise ValueError("symbols out of range for declared alphabet")

    def __len__(self) -> int:
        return self.symbols.size


def symbolize(series, spec: DiscretizationSpec = DiscretizationSpec(), source_id: str = "") -> SymbolSeries:
    """Map a numeric series to quantile-bin symbols of its own empirical distribution.

    Bins are left-closed and tied values all receive the bin of their lowest
    rank, so the mapping is deterministic and invariant under any strictly
    monotone transform of the input. Symbol counts are equal up to the tie
    mass (exactly equal when the length divides evenly and values are
    distinct).
    """
    values = np.asarray(series, dtype=float)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if values.size < spec.n_symbols:
        raise ValueError(f"series length {values.size} < n_symbols {spec.n_symbols}")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    if values.max() == values.min():
        raise DegenerateSeriesError(
            f"series {source_id or '<anonymous>'} is constant; a zero-entropy "
            "source cannot be symbolized"
        )
    sorted_vals = np.sort(values)
    min_rank = np.searchsorted(sorted_vals, values, side="left")
    symbols = (min_rank * spec.n_symbols) // values.size
    return SymbolSeries(symbols=symbols, n_symbols=spec.n_symbols, source_id=source_id)


@dataclass
class ReturnPanel:
    """Next-period simple returns per stock-date.

    ``next_return[i, t]`` is ``close[i, t+1] / close[i, t] - 1``; the last
    date of each ticker is NaN. Tickers with fewer than two observed closes
    are listed in ``degenerate_tickers`` and carry an all-NaN row.
    """

    next_return: np.ndarray
    tickers: list[str]
    dates: pd.DatetimeIndex
    degenerate_tickers: list[str] = field(default_factory=list)

    def series(self, ticker: str) -> np.ndarray:
        return self.next_return[self.tickers.index(ticker)]


@dataclass
class FlowPanel:
    """Validated, date-sorted panel of investor-type flow records.

    ``records`` is rectangular in the sense that every (date, ticker,
    investor_type) cell is either present as a row or absent, and absent
    cells surface as NaN in the matrix accessors; nothing is imputed.
    """

    records: pd.DataFrame
    date_index: pd.DatetimeIndex
    ticker_index: list[str]
    investor_types: list[str]
    dropped_rows: list[tuple[int, str]] = field(default_factory=list)
    signals_derived: bool = False

    _matrix_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_records(cls, records: pd.DataFrame, signals_derived: bool = False) -> "FlowPanel":
        """Wrap an already-clean records frame (canonical columns, parsed dates).

        Intended for generated data; file ingestion must go through
        :func:`load_panel`, which is where row validation lives.
        """
        clean = records.sort_values(["date", "ticker", "investor_type"], kind="stable")
        clean = clean.reset_index(drop=True)
        return cls(
            records=clean,
            date_index=pd.DatetimeIndex(sorted(clean["date"].unique())),
            ticker_index=sorted(clean["ticker"].unique()),
            investor_types=sorted(clean["investor_type"].unique()),
            signals_derived=signals_derived,
        )

    @property
    def n_dates(self) -> int:
        return len(self.date_index)

    @property
    def n_tickers(self) -> int:
        return len(self.ticker_index)

    def field_matrix(self, fieldname: str, investor_type: str | None = None) -> np.ndarray:
        """(n_tickers, n_dates) matrix of one field, NaN where the cell is missing.

        Per-share fields (close, market cap, trading volume) do not depend on
        the investor type and may be requested with ``investor_type=None``.
        """
        key = (fieldname, investor_type)
        if key in self._matrix_cache:
            return self._matrix_cache[key]
        if investor_type is None:
            sub = self.records.drop_duplicates(subset=["date", "ticker"], keep="first")
        else:
            if investor_type not in INVESTOR_TYPES:
                raise ValueError(f"unknown investor type: {investor_type!r}")
            sub = self.records[self.records["investor_type"] == investor_type]
        pivot = sub.pivot(index="ticker", columns="date", values=fieldname)
        pivot = pivot.reindex(index=self.ticker_index, columns=self.date_index)
        mat = pivot.to_numpy(dtype=float)
        self._matrix_cache[key] = mat
        return mat

    def signal_matrix(self, investor_type: str, signal: str = "matched", zscore: bool = False) -> np.ndarray:
        """Signal field per stock-date for one investor type.

        ``signal`` is one of ``matched`` (the investor type's designated
        signal), ``s_mc``, ``s_tv`` or ``net_flow``. With ``zscore=True`` the
        matrix is standardized cross-sectionally within each date (off by
        default).
        """
        fieldname = resolve_signal_field(investor_type, signal)
        mat = self.field_matrix(fieldname, investor_type)
        if zscore:
            mat = zscore_by_date(mat)
        return mat

    def slice_dates(self, start=None, end=None) -> "FlowPanel":
        """Sub-panel restricted to dates in [start, end] (inclusive)."""
        mask = np.ones(len(self.records), dtype=bool)
        if start is not None:
            mask &= (self.records["date"] >= pd.Timestamp(start)).to_numpy()
        if end is not None:
            mask &= (self.records["date"] <= pd.Timestamp(end)).to_numpy()
        return FlowPanel.from_records(self.records[mask], signals_derived=self.signals_derived)

    def to_csv(self, path) -> None:
        out = self.records.copy()
        out["date"] = out["date"].dt.strftime("%Y-%m-%d")
        out.to_csv(path, index=False)


def resolve_signal_field(investor_type: str, signal: str) -> str:
    if investor_type not in INVESTOR_TYPES:
        raise ValueError(f"unknown investor type: {investor_type!r}")
    if signal == "matched":
        return MATCHED_SIGNAL[investor_type]
    if signal in ("s_mc", "s_tv"):
        return signal
    if signal == "net_flow":
        return "net_buy_volume"
    raise ValueError(f"unknown signal selector: {signal!r}")


def zscore_by_date(matrix: np.ndarray) -> np.ndarray:
    """Standardize each column (date) across stocks; degenerate columns map to 0."""
    mean = np.nanmean(matrix, axis=0, keepdims=True)
    sd = np.nanstd(matrix, axis=0, ddof=0, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = (matrix - mean) / sd
    z[:, (sd == 0).ravel()] = 0.0
    z[np.isnan(matrix)] = np.nan
    return z


def load_panel(path, schema: dict[str, str] | None = None, *, derive_signals: bool = False,
               strict: bool = True) -> FlowPanel:
    """Load and validate a flow panel CSV.

    ``schema`` remaps canonical column names to the file's column names
    (canonical -> file). Field invariants are checked per row: close and
    market cap strictly positive, trading volume non-negative, investor type
    in the known set, date ISO-8601. With ``strict=True`` (default) any
    violating row raises :class:`RowError` with 1-based line numbers; with
    ``strict=False`` the offending rows are dropped and enumerated in
    ``FlowPanel.dropped_rows``.

    When the signal columns (s_mc, s_tv) are absent and ``derive_signals`` is
    set, a non-canonical fallback fills them from per-date cross-sectional
    regressions of net flow on capitalization / volume ranks; see
    :func:`derive_signal_columns`.
    """
    schema = schema or {}
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    colmap = {canonical: schema.get(canonical, canonical) for canonical in REQUIRED_COLUMNS + SIGNAL_COLUMNS}

    missing = [colmap[c] for c in REQUIRED_COLUMNS if colmap[c] not in raw.columns]
    if missing:
        raise SchemaError(f"missing required columns in {path}: {missing}")

    have_signals = all(colmap[c] in raw.columns for c in SIGNAL_COLUMNS)
    if not have_signals and not derive_signals:
        absent = [colmap[c] for c in SIGNAL_COLUMNS if colmap[c] not in raw.columns]
        raise SchemaError(
            f"missing signal columns {absent} in {path}; pass derive_signals=True "
            "to use the non-canonical rank-regression fallback"
        )

    df = pd.DataFrame(
        {c: raw[colmap[c]] for c in REQUIRED_COLUMNS}
        | {c: (raw[colmap[c]] if have_signals else "") for c in SIGNAL_COLUMNS}
    )
    # line numbers in the source file: header is line 1
    lines = df.index.to_numpy() + 2

    bad: list[tuple[int, str]] = []

    dates = pd.to_datetime(df["date"], format="ISO8601", errors="coerce")
    for i in np.flatnonzero(dates.isna().to_numpy()):
        bad.append((int(lines[i]), f"unparseable date {df['date'].iloc[i]!r}"))

    itypes = df["investor_type"].str.strip().str.lower()
    bad_type = ~itypes.isin(INVESTOR_TYPES)
    for i in np.flatnonzero(bad_type.to_numpy()):
        bad.append((int(lines[i]), f"unknown investor_type {df['investor_type'].iloc[i]!r}"))

    numeric = {}
    for c in NUMERIC_COLUMNS:
        col = df[c].str.strip()
        empty = (col == "") | col.str.lower().isin(("nan", "na"))
        parsed = pd.to_numeric(col.where(~empty, other=None), errors="coerce")
        for i in np.flatnonzero((parsed.isna() & ~empty).to_numpy()):
            bad.append((int(lines[i]), f"unparseable {c} {df[c].iloc[i]!r}"))
        numeric[c] = parsed.to_numpy(dtype=float)

    with np.errstate(invalid="ignore"):
        for i in np.flatnonzero(numeric["close"] <= 0):
            bad.append((int(lines[i]), f"close must be > 0, got {numeric['close'][i]}"))
        for i in np.flatnonzero(numeric["market_cap"] <= 0):
            bad.append((int(lines[i]), f"market_cap must be > 0, got {numeric['market_cap'][i]}"))
        for i in np.flatnonzero(numeric["trading_volume"] < 0):
            bad.append((int(lines[i]), f"trading_volume must be >= 0, got {numeric['trading_volume'][i]}"))

    if bad and strict:
        bad.sort()
        preview = "; ".join(f"line {ln}: {why}" for ln, why in bad[:10])
        more = f" (+{len(bad) - 10} more)" if len(bad) > 10 else ""
        raise RowError(f"{len(bad)} invalid rows in {path}: {preview}{more}", rows=bad)

    clean = pd.DataFrame(
        {
            "date": dates,
            "ticker": df["ticker"].str.strip(),
            "investor_type": itypes,
            **{c: numeric[c] for c in NUMERIC_COLUMNS},
        }
    )
    if bad:
        bad_lines = {ln for ln, _ in bad}
        keep = ~np.isin(lines, list(bad_lines))
        clean = clean[keep]

    dup = clean.duplicated(subset=["date", "ticker", "investor_type"], keep=False)
    if dup.any():
        first = clean[dup].iloc[0]
        raise IntegrityError(
            "duplicate (date, ticker, investor_type) key: "
            f"({first['date'].date()}, {first['ticker']}, {first['investor_type']}) "
            f"and {int(dup.sum()) - 1} further duplicated rows"
        )

    clean = clean.sort_values(["date", "ticker", "investor_type"], kind="stable").reset_index(drop=True)
    panel = FlowPanel(
        records=clean,
        date_index=pd.DatetimeIndex(sorted(clean["date"].unique())),
        ticker_index=sorted(clean["ticker"].unique()),
        investor_types=sorted(clean["investor_type"].unique()),
        dropped_rows=sorted(bad),
    )
    if not have_signals:
        derive_signal_columns(panel)
    return panel


def derive_signal_columns(panel: FlowPanel) -> None:
    """Fill s_mc / s_tv with the rank-regression fallback (non-canonical).

    For every (date, investor type) cross-section, net flow is regressed on
    the standardized rank of market cap (for s_mc) or trading volume (for
    s_tv) with an intercept; the signal is the fitted rank component
    ``slope * rank_std``. This is only a stand-in for externally supplied
    matched-filter signals and is flagged on the panel.
    """
    rec = panel.records
    for target, by in (("s_mc", "market_cap"), ("s_tv", "trading_volume")):
        out = np.full(len(rec), np.nan)
        for (_, _), idx in rec.groupby(["date", "investor_type"]).indices.items():
            flow = rec["net_buy_volume"].to_numpy()[idx]
            basis = rec[by].to_numpy()[idx]
            ok = np.isfinite(flow) & np.isfinite(basis)
            if ok.sum() < 3:
                continue
            rank = np.argsort(np.argsort(basis[ok])).astype(float)
            rank_sd = rank.std()
            if rank_sd == 0:
                continue
            rank_std = (rank - rank.mean()) / rank_sd
            slope = (rank_std * (flow[ok] - flow[ok].mean())).sum() / (rank_std**2).sum()
            vals = np.full(ok.size, np.nan)
            vals[ok] = slope * rank_std
            out[idx] = vals
        rec[target] = out
    panel.signals_derived = True
    panel._matrix_cache.clear()


def symbol_matrix(panel: FlowPanel, investor_type: str, signal: str = "matched",
                  zscore: bool = False, n_symbols: int = 5) -> tuple[np.ndarray, list[tuple[str, str]]]:
    """Per-ticker quantile symbols of one signal, as an (n_tickers, n_dates) grid.

    Missing stock-dates are coded -1. Each ticker is symbolized over its own
    observed dates, so downstream pairwise alignment subsets an already-fixed
    symbol sequence. Tickers that cannot be symbolized (constant signal, too
    few observations) come back as all -1 rows, enumerated with reasons in
    the second return value.
    """
    mat = panel.signal_matrix(investor_type, signal, zscore)
    sym = np.full(mat.shape, -1, dtype=np.int64)
    dropped: list[tuple[str, str]] = []
    for i, ticker in enumerate(panel.ticker_index):
        observed = np.isfinite(mat[i])
        values = mat[i, observed]
        if values.size < n_symbols:
            dropped.append((ticker, f"only {values.size} observations"))
            continue
        try:
            sym[i, observed] = symbolize(values, DiscretizationSpec(n_symbols), source_id=ticker).symbols
        except DegenerateSeriesError:
            dropped.append((ticker, "constant signal"))
    return sym, dropped


def compute_returns(panel: FlowPanel) -> ReturnPanel:
    """Next-period simple returns from the close matrix.

    Cumulative reconstruction from the first price recovers the price path
    exactly (up to float round-off); no smoothing or fill is applied.
    """
    close = panel.field_matrix("close")
    nxt = np.full_like(close, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        nxt[:, :-1] = close[:, 1:] / close[:, :-1] - 1.0
    degenerate = [
        t for i, t in enumerate(panel.ticker_index) if np.isfinite(close[i]).sum() < 2
    ]
    return ReturnPanel(
        next_return=nxt,
        tickers=list(panel.ticker_index),
        dates=panel.date_index,
        degenerate_tickers=degenerate,
    )
