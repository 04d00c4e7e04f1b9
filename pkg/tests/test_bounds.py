"""Kelly/Fano bounds and the signal-return MI table."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tenet import (
    BoundsRow,
    DiscretizationSpec,
    RiskFreeSpec,
    SampleSizeError,
    bit_yield,
    bounds_row,
    fano_accuracy,
    kelly_rate,
    signal_return_mi,
)


def binary_entropy_nats(p):
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


# ---------------------------------------------------------------------------
# kelly_rate / bit_yield
# ---------------------------------------------------------------------------


def test_kelly_zero_mi_is_riskfree_exactly():
    assert kelly_rate(0.0, RiskFreeSpec(0.035)) == 0.035
    assert kelly_rate(0.0, 0.035, periods_per_year=52.0) == 0.035


def test_kelly_formula_and_monotonicity():
    assert kelly_rate(0.01, RiskFreeSpec(0.02), periods_per_year=252.0) == pytest.approx(
        0.02 + 0.01 * 252.0, rel=1e-15
    )
    rates = [kelly_rate(mi, 0.035) for mi in (0.0, 0.001, 0.01, 0.1)]
    assert rates == sorted(rates)
    assert len(set(rates)) == 4


def test_kelly_rejects_negative_mi():
    with pytest.raises(ValueError):
        kelly_rate(-1e-9, 0.035)


def test_riskfree_spec_validation():
    with pytest.raises(ValueError):
        RiskFreeSpec(-1.5)


def test_bit_yield_conventions():
    assert bit_yield(0.2329, 0.0) == 0.0
    assert bit_yield(0.2329, -0.01) == 0.0
    assert bit_yield(0.10, 0.004) == pytest.approx(25.0, rel=1e-12)
    assert bit_yield(-0.10, 0.004) == pytest.approx(-25.0, rel=1e-12)


# ---------------------------------------------------------------------------
# fano_accuracy
# ---------------------------------------------------------------------------


def test_fano_binary_endpoints():
    assert fano_accuracy(0.0, 2) == 1.0
    # the entropy curve is flat at p = 1/2, so the inversion there is
    # ill-conditioned: sqrt(eps)-level error is the attainable precision
    assert fano_accuracy(math.log(2.0), 2) == pytest.approx(0.5, abs=1e-6)


def test_fano_binary_known_value():
    # H(R|X) = 0.6922 nats -> accuracy ceiling just above a coin flip
    assert fano_accuracy(0.6922, 2) == pytest.approx(0.5216, abs=5e-4)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.5, 1.0 - 1e-9))
def test_fano_binary_inverts_the_binary_entropy(acc):
    h = binary_entropy_nats(1.0 - acc)
    assert fano_accuracy(h, 2) == pytest.approx(acc, abs=1e-6)


def test_fano_binary_is_monotone_decreasing_in_entropy():
    hs = np.linspace(0.0, math.log(2.0), 25)
    accs = [fano_accuracy(h, 2) for h in hs]
    assert all(a >= b - 1e-12 for a, b in zip(accs, accs[1:]))


def test_fano_multiclass_linear_bound():
    # n = 4: P_e >= (H_bits - 1) / log2(3)
    h_bits = 1.7
    expected = 1.0 - (h_bits - 1.0) / math.log2(3.0)
    assert fano_accuracy(h_bits * math.log(2.0), 4) == pytest.approx(expected, rel=1e-12)
    # the linear bound is loose at max entropy: it stays above chance
    at_max = fano_accuracy(math.log(4.0), 4)
    assert at_max == pytest.approx(1.0 - 1.0 / math.log2(3.0), rel=1e-12)
    assert at_max > 0.25
    # uninformative region of the linear bound: accuracy 1 when H <= 1 bit
    assert fano_accuracy(0.5 * math.log(2.0), 4) == 1.0


def test_fano_rejects_out_of_range():
    with pytest.raises(ValueError):
        fano_accuracy(-0.01, 2)
    with pytest.raises(ValueError):
        fano_accuracy(math.log(2.0) + 0.01, 2)
    with pytest.raises(ValueError):
        fano_accuracy(0.1, 1)


# ---------------------------------------------------------------------------
# signal_return_mi
# ---------------------------------------------------------------------------


def test_perfect_sign_predictor_saturates_mi():
    rng = np.random.default_rng(0)
    rets = rng.normal(size=4000)
    sig = (rets > 0).astype(np.int64)  # integer-coded: used as symbols directly
    srm = signal_return_mi(sig, rets)
    assert srm.mi_bits == pytest.approx(srm.h_return_bits, abs=1e-12)
    assert srm.h_return_bits == pytest.approx(1.0, abs=0.01)
    assert srm.cond_entropy_bits == 0.0
    assert fano_accuracy(srm.cond_entropy_nats, srm.n_return_classes) == 1.0


def test_independent_signal_has_negligible_mi():
    rng = np.random.default_rng(1)
    sig = rng.normal(size=6000)
    rets = rng.normal(size=6000)
    srm = signal_return_mi(sig, rets)
    assert 0.0 <= srm.mi_bits < 0.005
    assert srm.cond_entropy_nats == pytest.approx(srm.cond_entropy_bits * math.log(2.0), rel=1e-15)
    assert srm.cond_entropy_bits == pytest.approx(srm.h_return_bits - srm.mi_bits, abs=1e-12)


def test_quintile_signal_mi_matches_geometry():
    # sign(ret) = sign(signal) with signal ~ U(-1, 1): the middle quintile
    # (-0.2, 0.2) is the only ambiguous bin, so I = H(R) - 0.2 bits ~ 0.8
    rng = np.random.default_rng(2)
    sig = rng.uniform(-1.0, 1.0, size=20_000)
    rets = sig.copy()
    srm = signal_return_mi(sig, rets)
    assert srm.n_return_classes == 2
    assert srm.mi_bits == pytest.approx(0.8, abs=0.03)


def test_quantile_return_scheme():
    rng = np.random.default_rng(3)
    sig = rng.normal(size=3000)
    rets = rng.normal(size=3000)
    srm = signal_return_mi(sig, rets, return_scheme=DiscretizationSpec(n_symbols=5))
    assert srm.n_return_classes == 5
    assert srm.h_return_bits == pytest.approx(math.log2(5.0), abs=0.01)


def test_signal_return_mi_errors():
    rng = np.random.default_rng(4)
    with pytest.raises(ValueError):
        signal_return_mi(rng.normal(size=100), rng.normal(size=99))
    with pytest.raises(SampleSizeError):
        signal_return_mi(rng.normal(size=50), rng.normal(size=50), min_obs=100)
    with pytest.raises(ValueError):
        signal_return_mi(rng.normal(size=200), rng.normal(size=200), return_scheme="median")


def test_signal_return_mi_masks_nonfinite_rows():
    rng = np.random.default_rng(5)
    sig = rng.normal(size=400)
    rets = rng.normal(size=400)
    rets[::7] = np.nan
    srm = signal_return_mi(sig, rets, min_obs=100)
    assert srm.n_obs == int(np.isfinite(rets).sum())


# ---------------------------------------------------------------------------
# bounds_row assembly
# ---------------------------------------------------------------------------


def test_bounds_row_composes_the_pieces():
    rng = np.random.default_rng(6)
    sig = rng.normal(size=2000)
    rets = 0.3 * sig + rng.normal(size=2000)
    row = bounds_row("foreign", "s_tv", sig, rets, ann_return=0.12,
                     risk_free=RiskFreeSpec(0.035), periods_per_year=252.0)
    srm = signal_return_mi(sig, rets)
    assert isinstance(row, BoundsRow)
    assert row.investor == "foreign" and row.signal == "s_tv"
    assert row.mi_bits == srm.mi_bits
    assert row.kelly_rate == kelly_rate(srm.mi_bits, RiskFreeSpec(0.035), 252.0)
    assert row.bit_yield == bit_yield(0.12, srm.mi_bits)
    assert row.fano_accuracy == fano_accuracy(srm.cond_entropy_nats, 2)
    assert row.n_obs == 2000
