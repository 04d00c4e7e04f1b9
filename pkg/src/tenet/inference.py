"""Significance machinery: block-permutation surrogates, BH-FDR, rank tests,
and a moving-block bootstrap.

Surrogate testing destroys the source's temporal alignment with the target
while keeping its marginal distribution and short-range structure (blocks
stay contiguous; only their order is shuffled). The target is never touched.
Each directed pair draws its surrogate randomness from a seed derived from
(master seed, source id, target id), so results do not depend on scan order
or on how work is split across processes.
"""

import itertools
from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .errors import SampleSizeError
from .estimators import TEConfig, symbolic_te, symbolic_te_batch
from .seeding import derive_seed


@dataclass(frozen=True)
class SurrogateSpec:
    """Block-permutation surrogate test settings.

    An edge is significant only if the observed TE exceeds the surrogate
    distribution's ``percentile`` AND survives BH-FDR at ``alpha`` across the
    whole scan; both checks read the same per-pair surrogate sample.
    """

    n_surrogates: int = 200
    block_length: int = 20
    percentile: float = 95.0
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_surrogates < 1:
            raise ValueError("n_surrogates must be >= 1")
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")
        if not 0 < self.percentile < 100:
            raise ValueError("percentile must be in (0, 100)")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")


def block_permute(series: np.ndarray, block_length: int, rng: np.random.Generator) -> np.ndarray:
    """One block-order permutation of a series (last block may be short)."""
    return block_permutation_batch(series, 1, block_length, rng)[0]


def block_permutation_batch(series: np.ndarray, n: int, block_length: int,
                            rng: np.random.Generator) -> np.ndarray:
    """(n, T) array of block-order permutations of one series.

    The series is cut into consecutive blocks of ``block_length`` (the final
    block keeps the remainder) and each row is an independent shuffle of the
    block order. Every row is an exact multiset copy of the input.
    """
    arr = np.asarray(series)
    total = arr.shape[-1]
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n_blocks = -(-total // block_length)
    blocks = [np.arange(s, min(s + block_length, total)) for s in range(0, total, block_length)]
    keys = rng.random((n, n_blocks))
    orders = np.argsort(keys, axis=1)
    out = np.empty((n, total), dtype=arr.dtype)
    for i in range(n):
        out[i] = arr[np.concatenate([blocks[j] for j in orders[i]])]
    return out


@dataclass
class PairTestResult:
    """Outcome of one directed surrogate test (source -> target)."""

    source_id: str
    target_id: str
    te: float
    p_value: float
    threshold: float
    surrogate_mean: float
    surrogate_sd: float
    n_surrogates: int
    exceeds_percentile: bool
    q_value: float = float("nan")
    significant: bool = False
    surrogates: np.ndarray | None = field(default=None, repr=False, compare=False)


def surrogate_test(source, target, config: TEConfig = TEConfig(),
                   spec: SurrogateSpec = SurrogateSpec(),
                   source_id: str = "source", target_id: str = "target",
                   keep_surrogates: bool = True) -> PairTestResult:
    """Test one directed pair against its block-permutation null.

    The p-value uses the add-one permutation convention
    ``(1 + #{surrogate >= observed}) / (n + 1)``, so it can never be 0.
    ``q_value``/``significant`` stay at their defaults until a scan applies
    BH across all tested pairs.
    """
    rng = np.random.default_rng(derive_seed(spec.seed, "surrogate", source_id, target_id))
    src = np.asarray(source)
    observed = symbolic_te(src, target, config)
    batch = block_permutation_batch(src, spec.n_surrogates, spec.block_length, rng)
    surr = symbolic_te_batch(batch, target, config)
    p = (1.0 + float(np.sum(surr >= observed))) / (spec.n_surrogates + 1.0)
    threshold = float(np.percentile(surr, spec.percentile))
    return PairTestResult(
        source_id=source_id,
        target_id=target_id,
        te=float(observed),
        p_value=float(p),
        threshold=threshold,
        surrogate_mean=float(surr.mean()),
        surrogate_sd=float(surr.std(ddof=1)) if surr.size > 1 else 0.0,
        n_surrogates=spec.n_surrogates,
        exceeds_percentile=bool(observed > threshold),
        surrogates=surr if keep_surrogates else None,
    )


def bh_fdr(p_values, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Benjamini-Hochberg step-up: (reject mask, monotone q-values).

    q-values are the usual running minima of p * m / rank taken from the
    largest p downward, so ``reject`` coincides with ``q <= alpha``.
    """
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise ValueError("p_values must be one-dimensional")
    if p.size == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    if np.any((p < 0) | (p > 1) | ~np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q_sorted = np.minimum(q_sorted, 1.0)
    q = np.empty(m)
    q[order] = q_sorted
    # cut on the same floats the q-values are built from, so
    # ``reject == (q <= alpha)`` holds exactly, ulp boundaries included
    passing = np.flatnonzero(ranked <= alpha)
    reject = np.zeros(m, dtype=bool)
    if passing.size:
        reject[order[: passing[-1] + 1]] = True
    return reject, q


def apply_fdr(results: list[PairTestResult], alpha: float = 0.05) -> list[PairTestResult]:
    """Fill q_value/significant across a scan's results (in place, returned)."""
    if not results:
        return results
    reject, q = bh_fdr([r.p_value for r in results], alpha)
    for r, rej, qv in zip(results, reject, q):
        r.q_value = float(qv)
        r.significant = bool(rej and r.exceeds_percentile)
    return results


def pairwise_scan(symbols: dict[str, np.ndarray], config: TEConfig = TEConfig(),
                  spec: SurrogateSpec = SurrogateSpec(), jobs: int = 1,
                  keep_surrogates: bool = False) -> list[PairTestResult]:
    """Surrogate-test every ordered pair of the given symbol series.

    Results come back sorted by (source, target) and carry BH-corrected
    q-values over the full scan. Per-pair seeding makes the output invariant
    to ``jobs``.
    """
    ids = sorted(symbols)
    pairs = [(a, b) for a, b in itertools.permutations(ids, 2)]
    runner = Parallel(n_jobs=jobs, prefer="processes" if jobs != 1 else None)
    results = runner(
        delayed(surrogate_test)(
            symbols[a], symbols[b], config, spec,
            source_id=a, target_id=b, keep_surrogates=keep_surrogates,
        )
        for a, b in pairs
    )
    return apply_fdr(list(results), spec.alpha)


# ---------------------------------------------------------------------------
# rank / location tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MannWhitneyResult:
    u_a: float
    u_b: float
    p_value: float
    method: str  # "exact" or "normal"


_EXACT_MAX_GROUP = 8
_EXACT_MAX_COMBINATIONS = 200_000


def mann_whitney_u(a, b) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U with midrank ties.

    Small samples (min group size <= 8, combination count bounded) get the
    exact conditional permutation distribution over the pooled midranks;
    larger samples use the tie-corrected normal approximation without
    continuity correction. Identical pooled values give p = 1 exactly.
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.size == 0 or bv.size == 0:
        raise SampleSizeError("both samples must be non-empty")
    n_a, n_b = av.size, bv.size
    pooled = np.concatenate([av, bv])
    ranks = stats.rankdata(pooled)
    r_a = ranks[:n_a].sum()
    u_a = r_a - n_a * (n_a + 1) / 2.0
    u_b = n_a * n_b - u_a

    total = n_a + n_b
    if min(n_a, n_b) <= _EXACT_MAX_GROUP and comb(total, n_a) <= _EXACT_MAX_COMBINATIONS:
        base = n_a * (n_a + 1) / 2.0
        count_le = 0
        count_ge = 0
        n_comb = 0
        for pick in itertools.combinations(range(total), n_a):
            u = ranks[list(pick)].sum() - base
            n_comb += 1
            if u <= u_a + 1e-9:
                count_le += 1
            if u >= u_a - 1e-9:
                count_ge += 1
        p = min(1.0, 2.0 * min(count_le, count_ge) / n_comb)
        return MannWhitneyResult(float(u_a), float(u_b), float(p), "exact")

    mu = n_a * n_b / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))
    var = n_a * n_b / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if var <= 0:
        return MannWhitneyResult(float(u_a), float(u_b), 1.0, "normal")
    z = (u_a - mu) / sqrt(var)
    p = 2.0 * stats.norm.sf(abs(z))
    return MannWhitneyResult(float(u_a), float(u_b), float(min(1.0, p)), "normal")


def one_sample_ttest(values, popmean: float = 0.0) -> tuple[float, float, int]:
    """(t, two-sided p, df) for the mean of a sample against ``popmean``."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise SampleSizeError("t-test needs at least 2 observations")
    sd = v.std(ddof=1)
    if sd == 0:
        t = 0.0 if v.mean() == popmean else float("inf") * np.sign(v.mean() - popmean)
        p = 1.0 if t == 0.0 else 0.0
        return float(t), float(p), v.size - 1
    t = (v.mean() - popmean) / (sd / sqrt(v.size))
    p = 2.0 * stats.t.sf(abs(t), df=v.size - 1)
    return float(t), float(p), v.size - 1


# ---------------------------------------------------------------------------
# moving-block bootstrap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapSpec:
    """Moving-block bootstrap settings shared by CI-producing analyses."""

    n_boot: int = 200
    block_length: int = 20
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.n_boot < 1:
            raise ValueError("n_boot must be >= 1")
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")


@dataclass
class BootstrapCI:
    estimate: float
    lo: float
    hi: float
    level: float
    estimates: np.ndarray
    n_failed: int


def block_bootstrap_ci(statistic, arrays, n_boot: int = 200, block_length: int = 20,
                       level: float = 0.95, seed: int = 0) -> BootstrapCI:
    """Moving-block bootstrap CI for ``statistic(*arrays)``.

    All arrays are resampled with the same time indices per replicate, so
    cross-series alignment is preserved. Replicates where the statistic
    raises (e.g. a degenerate resample) are dropped and counted in
    ``n_failed``.
    """
    arrs = [np.asarray(a) for a in arrays]
    total = arrs[0].shape[0]
    if any(a.shape[0] != total for a in arrs):
        raise ValueError("all arrays must share their first dimension")
    if block_length < 1 or block_length > total:
        raise ValueError("block_length must be in [1, len(series)]")
    rng = np.random.default_rng(derive_seed(seed, "block-bootstrap", total, n_boot, block_length))
    point = float(statistic(*arrs))
    n_blocks = -(-total // block_length)
    estimates = []
    n_failed = 0
    for _ in range(n_boot):
        starts = rng.integers(0, total - block_length + 1, size=n_blocks)
        idx = (starts[:, None] + np.arange(block_length)[None, :]).ravel()[:total]
        try:
            estimates.append(float(statistic(*(a[idx] for a in arrs))))
        except Exception:
            n_failed += 1
    est = np.asarray(estimates)
    if est.size == 0:
        raise SampleSizeError("every bootstrap replicate failed")
    tail = (1.0 - level) / 2.0 * 100.0
    lo, hi = np.percentile(est, [tail, 100.0 - tail])
    return BootstrapCI(point, float(lo), float(hi), level, est, n_failed)
