"""Cross-sectional pricing tests: per-period regressions with
signal-centrality interactions, quintile sorts, and the signal-only versus
network-enhanced portfolio comparison.

All operations take (n_stocks, n_periods) matrices where column t holds the
signal observed at t and ``next_returns[:, t]`` the return accruing over
(t, t+1]; alignment is the caller's contract. NaN cells mark missing data
and drop row-wise per period.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SampleSizeError
from .inference import one_sample_ttest

_COND_LIMIT = 1e12

COEFFICIENT_NAMES = ("intercept", "signal", "centrality", "interaction")


@dataclass(frozen=True)
class FMSpec:
    """Per-period regression settings.

    ``nw_lags > 0`` switches the time-series t-statistics to Newey-West
    standard errors with a Bartlett kernel on the coefficient series.
    """

    signal_column: str = "signal"
    centrality_column: str = "out_degree"
    min_stocks_per_period: int = 10
    nw_lags: int = 0

    def __post_init__(self):
        if self.min_stocks_per_period < 5:
            raise ValueError("min_stocks_per_period must be >= 5 (four regressors)")
        if self.nw_lags < 0:
            raise ValueError("nw_lags must be >= 0")


@dataclass
class FMResult:
    """Per-period coefficient paths and their time-series summary.

    ``t_stats`` entries are NaN when the coefficient series has zero
    variance (the t is undefined, not infinite). Coefficient order is
    (intercept, signal, centrality, interaction).
    """

    coefficients: np.ndarray  # (n_periods, 4)
    mean_coef: np.ndarray  # (4,)
    t_stats: np.ndarray  # (4,)
    n_periods: int
    n_skipped: int
    period_positions: np.ndarray

    def summary(self) -> dict:
        out: dict = {"n_periods": self.n_periods, "n_skipped": self.n_skipped}
        for i, name in enumerate(COEFFICIENT_NAMES):
            out[f"b_{name}"] = float(self.mean_coef[i])
            out[f"t_{name}"] = float(self.t_stats[i])
        return out


def _nw_tstat(series: np.ndarray, lags: int) -> float:
    """t for the mean with Bartlett-kernel long-run variance."""
    t_n = series.size
    e = series - series.mean()
    gamma0 = float(e @ e) / t_n
    s = gamma0
    for j in range(1, min(lags, t_n - 1) + 1):
        gamma_j = float(e[j:] @ e[:-j]) / t_n
        s += 2.0 * (1.0 - j / (lags + 1.0)) * gamma_j
    if s <= 0:
        return float("nan")
    return float(series.mean() / np.sqrt(s / t_n))


def fama_macbeth(signal: np.ndarray, centrality: np.ndarray, next_returns: np.ndarray,
                 spec: FMSpec = FMSpec()) -> FMResult:
    """Period-by-period OLS of next returns on [1, signal, centrality, interaction].

    Periods with fewer than ``min_stocks_per_period`` complete rows, or with
    a design matrix whose condition number exceeds 1e12 (e.g. an all-zero
    centrality column), are skipped and counted. Coefficients are averaged
    over the surviving periods; t-statistics divide the mean by the standard
    error of the coefficient's time series.
    """
    sig = np.asarray(signal, dtype=float)
    ret = np.asarray(next_returns, dtype=float)
    if sig.shape != ret.shape or sig.ndim != 2:
        raise ValueError("signal and next_returns must share an (n_stocks, n_periods) shape")
    cent = np.asarray(centrality, dtype=float)
    if cent.ndim == 1:
        if cent.shape[0] != sig.shape[0]:
            raise ValueError("centrality length must match n_stocks")
        cent = np.broadcast_to(cent[:, None], sig.shape)
    elif cent.shape != sig.shape:
        raise ValueError("centrality must be (n_stocks,) or match the signal shape")

    kept: list[np.ndarray] = []
    positions: list[int] = []
    n_skipped = 0
    for t in range(sig.shape[1]):
        y = ret[:, t]
        x1 = sig[:, t]
        x2 = cent[:, t]
        rows = np.isfinite(y) & np.isfinite(x1) & np.isfinite(x2)
        if int(rows.sum()) < spec.min_stocks_per_period:
            n_skipped += 1
            continue
        design = np.column_stack(
            [np.ones(rows.sum()), x1[rows], x2[rows], x1[rows] * x2[rows]]
        )
        sv = np.linalg.svd(design, compute_uv=False)
        if sv[-1] <= 0 or sv[0] / sv[-1] > _COND_LIMIT:
            n_skipped += 1
            continue
        coef, *_ = np.linalg.lstsq(design, y[rows], rcond=None)
        kept.append(coef)
        positions.append(t)

    if not kept:
        raise SampleSizeError("every period was skipped; no cross-section to average")
    coefficients = np.vstack(kept)
    mean_coef = coefficients.mean(axis=0)
    n_periods = coefficients.shape[0]
    t_stats = np.full(4, np.nan)
    for i in range(4):
        series = coefficients[:, i]
        if n_periods < 2:
            continue
        if spec.nw_lags > 0:
            t_stats[i] = _nw_tstat(series, spec.nw_lags)
        else:
            sd = series.std(ddof=1)
            if sd > 0:
                t_stats[i] = series.mean() / (sd / np.sqrt(n_periods))
    return FMResult(
        coefficients=coefficients,
        mean_coef=mean_coef,
        t_stats=t_stats,
        n_periods=n_periods,
        n_skipped=n_skipped,
        period_positions=np.asarray(positions),
    )


def quintile_assign(values: np.ndarray, n_bins: int = 5) -> np.ndarray:
    """Rank-based bin labels with populations differing by at most one.

    Ranks are ordinal with stable tie order (earlier index wins the lower
    bin), so the assignment is deterministic and the bins partition the
    cross-section evenly.
    """
    v = np.asarray(values, dtype=float)
    if v.size < n_bins:
        raise ValueError(f"need at least {n_bins} values, got {v.size}")
    order = np.argsort(v, kind="stable")
    position = np.empty(v.size, dtype=np.int64)
    position[order] = np.arange(v.size)
    return (position * n_bins) // v.size


@dataclass
class QuintileReport:
    """Time-averaged returns and Sharpe ratios of rank-sorted bins."""

    mean_return: np.ndarray  # (n_bins,)
    sharpe: np.ndarray  # (n_bins,), annualized
    period_returns: np.ndarray  # (n_bins, n_periods)
    n_periods: int
    n_skipped: int
    spread_mean: float  # top bin minus bottom bin
    spread_t: float


def quintile_sort(scores: np.ndarray, next_returns: np.ndarray, n_bins: int = 5,
                  min_stocks: int = 5, periods_per_year: float = 252.0) -> QuintileReport:
    """Per-period sort of stocks into score bins; equal-weighted bin returns.

    Periods with fewer than ``min_stocks`` complete rows are skipped. Sharpe
    ratios annualize each bin's per-period mean-return series by
    sqrt(periods_per_year); zero-variance series report NaN.
    """
    sc = np.asarray(scores, dtype=float)
    ret = np.asarray(next_returns, dtype=float)
    if sc.shape != ret.shape or sc.ndim != 2:
        raise ValueError("scores and next_returns must share an (n_stocks, n_periods) shape")
    min_stocks = max(min_stocks, n_bins)
    cols: list[np.ndarray] = []
    n_skipped = 0
    for t in range(sc.shape[1]):
        rows = np.isfinite(sc[:, t]) & np.isfinite(ret[:, t])
        if int(rows.sum()) < min_stocks:
            n_skipped += 1
            continue
        bins = quintile_assign(sc[rows, t], n_bins)
        col = np.array([ret[rows, t][bins == q].mean() for q in range(n_bins)])
        cols.append(col)
    if not cols:
        raise SampleSizeError("every period was skipped; nothing to sort")
    period_returns = np.column_stack(cols)
    mean_return = period_returns.mean(axis=1)
    sd = period_returns.std(axis=1, ddof=1) if period_returns.shape[1] > 1 else np.zeros(n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        sharpe = np.where(sd > 0, mean_return / sd * np.sqrt(periods_per_year), np.nan)
    spread = period_returns[-1] - period_returns[0]
    if spread.size > 1 and spread.std(ddof=1) > 0:
        spread_t, _, _ = one_sample_ttest(spread, 0.0)
    else:
        spread_t = float("nan")
    return QuintileReport(
        mean_return=mean_return,
        sharpe=sharpe,
        period_returns=period_returns,
        n_periods=period_returns.shape[1],
        n_skipped=n_skipped,
        spread_mean=float(spread.mean()),
        spread_t=spread_t,
    )


@dataclass(frozen=True)
class PortfolioReport:
    ann_return_signal_only: float
    ann_return_network_enhanced: float
    improvement_pp: float
    n_periods: int
    n_skipped: int


def portfolio_compare(signals: np.ndarray, centralities: np.ndarray, next_returns: np.ndarray,
                      periods_per_year: float = 252.0) -> PortfolioReport:
    """Long-short signal portfolio vs the same tilted by network centrality.

    Signal-only weights are the cross-sectionally demeaned signal scaled to
    unit gross leverage. The enhanced scheme multiplies the demeaned signal
    by (1 + centrality / max centrality) before renormalizing, so all-zero
    centralities reproduce the signal-only portfolio exactly. Periods whose
    demeaned signal is identically zero are skipped (no position to take).
    Annualization compounds the period returns to a periods_per_year rate.
    """
    sig = np.asarray(signals, dtype=float)
    ret = np.asarray(next_returns, dtype=float)
    if sig.shape != ret.shape or sig.ndim != 2:
        raise ValueError("signals and next_returns must share an (n_stocks, n_periods) shape")
    cent = np.asarray(centralities, dtype=float)
    if cent.ndim == 1:
        cent = np.broadcast_to(cent[:, None], sig.shape)
    elif cent.shape != sig.shape:
        raise ValueError("centralities must be (n_stocks,) or match the signal shape")
    if np.nanmin(cent) < 0:
        raise ValueError("centralities must be non-negative")

    r_sig: list[float] = []
    r_enh: list[float] = []
    n_skipped = 0
    for t in range(sig.shape[1]):
        rows = np.isfinite(sig[:, t]) & np.isfinite(ret[:, t]) & np.isfinite(cent[:, t])
        if int(rows.sum()) < 2:
            n_skipped += 1
            continue
        s = sig[rows, t]
        demeaned = s - s.mean()
        gross = np.abs(demeaned).sum()
        if gross == 0:
            n_skipped += 1
            continue
        w_sig = demeaned / gross
        c = cent[rows, t]
        c_max = c.max()
        tilt = 1.0 + (c / c_max if c_max > 0 else np.zeros_like(c))
        raw = demeaned * tilt
        w_enh = raw / np.abs(raw).sum()
        r_sig.append(float(w_sig @ ret[rows, t]))
        r_enh.append(float(w_enh @ ret[rows, t]))

    if not r_sig:
        raise SampleSizeError("every period was skipped; no portfolio formed")
    r_sig_arr = np.asarray(r_sig)
    r_enh_arr = np.asarray(r_enh)
    if (1.0 + r_sig_arr).min() <= 0 or (1.0 + r_enh_arr).min() <= 0:
        raise ValueError("a period lost 100% or more; compounding is undefined")

    def annualize(r: np.ndarray) -> float:
        growth = float(np.prod(1.0 + r))
        return growth ** (periods_per_year / r.size) - 1.0

    ann_sig = annualize(r_sig_arr)
    ann_enh = annualize(r_enh_arr)
    return PortfolioReport(
        ann_return_signal_only=ann_sig,
        ann_return_network_enhanced=ann_enh,
        improvement_pp=(ann_enh - ann_sig) * 100.0,
        n_periods=r_sig_arr.size,
        n_skipped=n_skipped,
    )
