"""Interaction information, conditional TE and the directionality index."""

import math
from collections import Counter

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tenet import (
    BootstrapSpec,
    FlowPanel,
    KSGConfig,
    SampleSizeError,
    conditional_te,
    directionality_index,
    gen_directional_triple,
    ii_cross_section,
    interaction_information,
)


# ---------------------------------------------------------------------------
# interaction information
# ---------------------------------------------------------------------------


def test_ii_xor_is_pure_synergy():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, 20_000)
    b = rng.integers(0, 2, 20_000)
    assert interaction_information(a, b, a ^ b) == pytest.approx(1.0, abs=0.02)


def test_ii_duplication_is_pure_redundancy():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 2, 20_000)
    assert interaction_information(a, a.copy(), a.copy()) == pytest.approx(-1.0, abs=0.02)


def entropy_of(counts, n):
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log2(p)
    return h


def ii_entropy_expansion(a, b, r):
    """H(A,R)+H(B,R)+H(A,B) - H(A) - H(B) - H(R) - H(A,B,R)."""
    n = len(a)
    trips = list(zip(a.tolist(), b.tolist(), r.tolist()))
    h = {}
    h["a"] = entropy_of(Counter(t[0] for t in trips), n)
    h["b"] = entropy_of(Counter(t[1] for t in trips), n)
    h["r"] = entropy_of(Counter(t[2] for t in trips), n)
    h["ar"] = entropy_of(Counter((t[0], t[2]) for t in trips), n)
    h["br"] = entropy_of(Counter((t[1], t[2]) for t in trips), n)
    h["ab"] = entropy_of(Counter((t[0], t[1]) for t in trips), n)
    h["abr"] = entropy_of(Counter(trips), n)
    return h["ar"] + h["br"] + h["ab"] - h["a"] - h["b"] - h["r"] - h["abr"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 4), st.integers(2, 4))
def test_ii_equals_entropy_expansion(seed, na, nb, nr):
    rng = np.random.default_rng(seed)
    n = 300
    a = rng.integers(0, na, n)
    b = (a + rng.integers(0, nb, n)) % nb  # correlate a bit
    r = (a + b + rng.integers(0, nr, n)) % nr
    got = interaction_information(a, b, r)
    assert got == pytest.approx(ii_entropy_expansion(a, b, r), abs=1e-12)


def test_ii_planted_distribution_oracle():
    """Empirical sample realizing an explicit joint table -> closed-form II."""
    # p(a,b,r) over {0,1}^3 with counts summing to 1000
    table = {
        (0, 0, 0): 300, (0, 1, 1): 200, (1, 0, 1): 250, (1, 1, 0): 150,
        (0, 0, 1): 40, (1, 1, 1): 60,
    }
    a, b, r = [], [], []
    for (x, y, z), c in table.items():
        a += [x] * c
        b += [y] * c
        r += [z] * c
    a, b, r = np.array(a), np.array(b), np.array(r)
    expected = ii_entropy_expansion(a, b, r)
    assert interaction_information(a, b, r) == pytest.approx(expected, abs=1e-12)


def test_ii_length_mismatch_raises():
    with pytest.raises(ValueError):
        interaction_information(np.zeros(10, int), np.zeros(9, int), np.zeros(10, int))


# ---------------------------------------------------------------------------
# ii_cross_section
# ---------------------------------------------------------------------------


def panel_with_signals(foreign_signal, individual_signal, returns, n_stocks, seed=0):
    """Panel whose foreign s_tv / individual s_mc and next-day returns are
    given per stock as (n_stocks, T) arrays."""
    T = returns.shape[1] + 1
    dates = pd.bdate_range("2019-01-02", periods=T)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_stocks):
        close = 100.0 * np.concatenate([[1.0], np.cumprod(1 + returns[i])])
        for itype, sig in (("foreign", foreign_signal), ("individual", individual_signal)):
            pad = np.concatenate([sig[i], [sig[i, -1]]])
            rows.append(pd.DataFrame({
                "date": dates,
                "ticker": f"T{i:02d}",
                "investor_type": itype,
                "net_buy_volume": rng.normal(size=T),
                "close": close,
                "market_cap": close * 1e6,
                "trading_volume": np.full(T, 1e5),
                "s_mc": pad,
                "s_tv": pad,
            }))
    return FlowPanel.from_records(pd.concat(rows, ignore_index=True))


def test_ii_cross_section_redundant_signals_negative():
    rng = np.random.default_rng(5)
    n, T = 8, 600
    factor = rng.normal(size=(n, T - 1))
    sig_a = factor + 0.1 * rng.normal(size=(n, T - 1))
    sig_b = factor + 0.1 * rng.normal(size=(n, T - 1))
    rets = 0.05 * np.tanh(factor) + 0.002 * rng.normal(size=(n, T - 1))
    panel = panel_with_signals(sig_a, sig_b, rets, n)
    res = ii_cross_section(panel, "foreign", "individual")
    assert res.mean_ii < -0.05
    assert res.pct_synergy < 0.5
    assert res.mean_ii == pytest.approx(np.mean(res.per_stock_ii), abs=1e-12)
    assert min(res.per_stock_ii) <= res.mean_ii <= max(res.per_stock_ii)


def test_ii_cross_section_complementary_signals_positive():
    rng = np.random.default_rng(6)
    n, T = 8, 600
    f1 = np.sign(rng.normal(size=(n, T - 1)))
    f2 = np.sign(rng.normal(size=(n, T - 1)))
    rets = 0.05 * f1 * f2  # response reveals nothing marginally
    panel = panel_with_signals(f1 + 0.05 * rng.normal(size=(n, T - 1)),
                               f2 + 0.05 * rng.normal(size=(n, T - 1)), rets, n)
    res = ii_cross_section(panel, "foreign", "individual")
    assert res.mean_ii > 0.2
    assert res.pct_synergy > 0.5
    assert res.t_p_value < 0.01


def test_ii_cross_section_null_signals_near_zero():
    # Plug-in II carries a positive bias of roughly 32/(N ln 2) bits for
    # 5x5x5 symbols, so the null mean is small-positive, not zero; at
    # T=3000 the prediction is ~0.015 bits.
    rng = np.random.default_rng(7)
    n, T = 8, 3000
    sig_a = rng.normal(size=(n, T - 1))
    sig_b = rng.normal(size=(n, T - 1))
    rets = 0.01 * rng.normal(size=(n, T - 1))
    panel = panel_with_signals(sig_a, sig_b, rets, n)
    res = ii_cross_section(panel, "foreign", "individual")
    assert abs(res.mean_ii) < 0.04


def test_ii_cross_section_skips_short_stocks():
    rng = np.random.default_rng(8)
    n, T = 4, 600
    sig = rng.normal(size=(n, T - 1))
    rets = 0.01 * rng.normal(size=(n, T - 1))
    panel = panel_with_signals(sig, sig, rets, n)
    # drop most foreign rows of T00 so its aligned history is too short
    rec = panel.records
    cut = panel.date_index[100]
    keep = ~((rec.ticker == "T00") & (rec.investor_type == "foreign") & (rec.date >= cut))
    panel2 = FlowPanel.from_records(rec[keep].reset_index(drop=True))
    res = ii_cross_section(panel2, "foreign", "individual", min_obs=250)
    assert any(t == "T00" for t, _ in res.skipped)
    assert len(res.per_stock_ii) == 3


def test_ii_cross_section_needs_two_stocks():
    rng = np.random.default_rng(9)
    sig = rng.normal(size=(1, 399))
    panel = panel_with_signals(sig, sig, 0.01 * rng.normal(size=(1, 399)), 1)
    with pytest.raises(SampleSizeError):
        ii_cross_section(panel, "foreign", "individual")


# ---------------------------------------------------------------------------
# conditional TE
# ---------------------------------------------------------------------------


def test_conditional_te_duplicate_conditioner_absorbs_source():
    a, _, r = gen_directional_triple(4000, coupling_a=0.8, coupling_b=0.0, seed=3)
    res = conditional_te(a, r, b=a.copy(), config=KSGConfig())
    assert res.te_a_r > 0.15
    assert abs(res.te_a_r_given_b) < 0.03
    assert res.unique_component == res.te_a_r_given_b
    assert res.shared_component == pytest.approx(res.te_a_r - res.te_a_r_given_b)


def test_conditional_te_independent_conditioner_changes_nothing():
    rng = np.random.default_rng(4)
    a, _, r = gen_directional_triple(4000, coupling_a=0.8, coupling_b=0.0, seed=4)
    b = rng.normal(size=4000)
    res = conditional_te(a, r, b, KSGConfig())
    assert res.te_a_r_given_b == pytest.approx(res.te_a_r, abs=0.05)


def test_conditional_te_all_independent_near_zero():
    rng = np.random.default_rng(5)
    a, b, r = rng.normal(size=(3, 5000))
    res = conditional_te(a, r, b, KSGConfig())
    assert abs(res.te_a_r) < 0.02
    assert res.te_a_r_given_b > -0.02  # noise floor bound


# ---------------------------------------------------------------------------
# directionality index
# ---------------------------------------------------------------------------


def test_directionality_antisymmetry():
    a, b, r = gen_directional_triple(600, coupling_a=0.6, coupling_b=0.2, seed=6)
    boot = BootstrapSpec(n_boot=40, block_length=20, seed=3)
    d1 = directionality_index(a, b, r, KSGConfig(), boot=boot)
    d2 = directionality_index(b, a, r, KSGConfig(), boot=boot)
    # point estimate and p mirror bitwise; the CI endpoints pick up an ulp
    # or two from percentile interpolation on the negated replicates
    assert d1.d_index == -d2.d_index
    assert d1.ci_lo == pytest.approx(-d2.ci_hi, abs=1e-12)
    assert d1.ci_hi == pytest.approx(-d2.ci_lo, abs=1e-12)
    assert d1.p_value == d2.p_value
    assert d1.d_index == d1.cte_a_given_b - d1.cte_b_given_a


def test_directionality_planted_leader_detected():
    a, b, r = gen_directional_triple(1500, coupling_a=0.8, coupling_b=0.0, seed=7)
    res = directionality_index(a, b, r, KSGConfig(),
                               boot=BootstrapSpec(n_boot=80, block_length=20, seed=4))
    assert res.d_index > 0.05
    assert res.ci_lo > 0.0
    assert res.p_value < 0.05


def test_directionality_result_shape():
    a, b, r = gen_directional_triple(500, coupling_a=0.3, coupling_b=0.3, seed=8)
    res = directionality_index(a, b, r, KSGConfig(),
                               boot=BootstrapSpec(n_boot=30, block_length=10, seed=5))
    assert res.ci_lo <= res.ci_hi
    assert 0.0 <= res.p_value <= 1.0
    assert res.n_boot == 30
    assert res.level == 0.95
