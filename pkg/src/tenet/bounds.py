"""Information-theoretic performance bounds: signal-return mutual
information, Kelly growth rate, realized return per bit, and the Fano
accuracy ceiling.

The unit conventions matter here and are explicit everywhere: plug-in MI and
entropies are reported in bits, the Fano inversion takes conditional entropy
in nats, and the Kelly rate annualizes per-period bits by a configurable
periods-per-year factor (so at MI = 0 every convention collapses to the
risk-free rate exactly).
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import SampleSizeError
from .estimators import plugin_entropy, plugin_mi
from .panel import DiscretizationSpec, symbolize

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class RiskFreeSpec:
    """Annualized risk-free rate used as the Kelly baseline."""

    r_f: float = 0.035

    def __post_init__(self):
        if self.r_f < -1.0:
            raise ValueError(f"r_f must be >= -1, got {self.r_f}")


@dataclass(frozen=True)
class SignalReturnMI:
    """Plug-in dependence between a signal and the next period's return."""

    mi_bits: float
    h_return_bits: float
    cond_entropy_bits: float
    cond_entropy_nats: float
    n_obs: int
    n_return_classes: int


def signal_return_mi(signal, next_returns, signal_spec: DiscretizationSpec = DiscretizationSpec(),
                     return_scheme="sign", min_obs: int = 100) -> SignalReturnMI:
    """MI between the signal at t and the return over (t, t+1], plus H(R|X).

    ``next_returns[t]`` must already be the forward return aligned at t. The
    signal is quantile-symbolized unless it is already integer-coded (then
    its values are used as symbols directly). Returns are binarized by sign
    under the default scheme (``return_scheme="sign"``), or quantile-binned
    when a :class:`~tenet.panel.DiscretizationSpec` is passed. The
    conditional entropy is H(R) - I by construction (exact on the counts).
    """
    sig = np.asarray(signal)
    ret = np.asarray(next_returns, dtype=float)
    if sig.size != ret.size:
        raise ValueError("signal and return lengths differ")
    sig_f = sig.astype(float)
    mask = np.isfinite(sig_f) & np.isfinite(ret)
    n = int(mask.sum())
    if n < max(min_obs, 2):
        raise SampleSizeError(f"only {n} aligned observations (need {max(min_obs, 2)})")
    sig_v, ret_v = sig[mask], ret[mask]

    if np.issubdtype(sig.dtype, np.integer):
        x = sig_v.astype(np.int64)
        n_x = int(x.max()) + 1
    else:
        ss = symbolize(sig_v.astype(float), signal_spec, source_id="signal")
        x, n_x = ss.symbols, ss.n_symbols

    if return_scheme == "sign":
        y = (ret_v > 0).astype(np.int64)
        n_y = 2
    elif isinstance(return_scheme, DiscretizationSpec):
        rs = symbolize(ret_v, return_scheme, source_id="next_returns")
        y, n_y = rs.symbols, rs.n_symbols
    else:
        raise ValueError("return_scheme must be 'sign' or a DiscretizationSpec")

    mi = plugin_mi(x, y, n_x=n_x, n_y=n_y)
    h_r = plugin_entropy(y, n_symbols=n_y)
    cond_bits = max(h_r - mi, 0.0)
    return SignalReturnMI(
        mi_bits=mi,
        h_return_bits=h_r,
        cond_entropy_bits=cond_bits,
        cond_entropy_nats=cond_bits * _LN2,
        n_obs=n,
        n_return_classes=n_y,
    )


def kelly_rate(mi_bits_per_period: float, risk_free: RiskFreeSpec | float = RiskFreeSpec(),
               periods_per_year: float = 252.0) -> float:
    """Growth-rate ceiling: risk-free rate plus annualized side information.

    ``mi = 0`` returns the risk-free rate exactly, whatever the
    annualization factor.
    """
    if mi_bits_per_period < 0:
        raise ValueError(f"mutual information must be >= 0, got {mi_bits_per_period}")
    r_f = risk_free.r_f if isinstance(risk_free, RiskFreeSpec) else RiskFreeSpec(float(risk_free)).r_f
    return float(r_f + mi_bits_per_period * periods_per_year)


def bit_yield(ann_return: float, mi_bits: float) -> float:
    """Realized annual return per bit of signal-return MI; 0 when MI is 0."""
    if mi_bits <= 0:
        return 0.0
    return float(ann_return) / float(mi_bits)


def _binary_entropy_nats(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log(p) - (1.0 - p) * np.log(1.0 - p))


def fano_accuracy(cond_entropy_nats: float, n_classes: int = 2) -> float:
    """Maximum achievable prediction accuracy given H(R|X).

    Binary outcomes invert the exact Fano relation H(R|X) <= H_b(P_e) by
    bisection (the generic linear bound is vacuous there); more classes use
    the linear bound P_e >= (H - 1 bit) / log2(n - 1). The result lies in
    [1/n_classes, 1].
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    h = float(cond_entropy_nats)
    limit = float(np.log(n_classes))
    if not 0.0 <= h <= limit + 1e-12:
        raise ValueError(f"cond_entropy {h} nats outside [0, ln({n_classes})]")
    h = min(h, limit)

    if n_classes == 2:
        if h <= 0.0:
            return 1.0
        # smallest P_e in [0, 1/2] with H_b(P_e) >= h; hi always satisfies it
        lo, hi = 0.0, 0.5
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if _binary_entropy_nats(mid) >= h:
                hi = mid
            else:
                lo = mid
        return 1.0 - hi

    h_bits = h / _LN2
    p_e = (h_bits - 1.0) / np.log2(n_classes - 1)
    p_e = min(max(p_e, 0.0), 1.0)
    accuracy = 1.0 - p_e
    return float(min(max(accuracy, 1.0 / n_classes), 1.0))


@dataclass(frozen=True)
class BoundsRow:
    """One investor/signal line of the bounds table."""

    investor: str
    signal: str
    mi_bits: float
    kelly_rate: float
    ann_return: float
    bit_yield: float
    fano_accuracy: float
    cond_entropy_bits: float
    cond_entropy_nats: float
    n_obs: int


@dataclass
class BoundsReport:
    rows: list[BoundsRow]
    risk_free: float
    periods_per_year: float

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in self.rows])


def bounds_row(investor: str, signal_name: str, signal, next_returns, ann_return: float,
               risk_free: RiskFreeSpec = RiskFreeSpec(), periods_per_year: float = 252.0,
               signal_spec: DiscretizationSpec = DiscretizationSpec(),
               min_obs: int = 100) -> BoundsRow:
    """Assemble one bounds-table row from aligned signal/forward-return series."""
    srm = signal_return_mi(signal, next_returns, signal_spec=signal_spec,
                           return_scheme="sign", min_obs=min_obs)
    return BoundsRow(
        investor=investor,
        signal=signal_name,
        mi_bits=srm.mi_bits,
        kelly_rate=kelly_rate(srm.mi_bits, risk_free, periods_per_year),
        ann_return=float(ann_return),
        bit_yield=bit_yield(ann_return, srm.mi_bits),
        fano_accuracy=fano_accuracy(srm.cond_entropy_nats, srm.n_return_classes),
        cond_entropy_bits=srm.cond_entropy_bits,
        cond_entropy_nats=srm.cond_entropy_nats,
        n_obs=srm.n_obs,
    )
