"""Information-theoretic estimators: plug-in entropy/MI, symbolic transfer
entropy on quantile symbols, and Kraskov-style nearest-neighbour MI / CMI for
continuous data.

Conventions
-----------
* Symbolic quantities default to bits (``log_base=2``); the nearest-neighbour
  estimators return nats, matching how they are usually reported.
* Transfer entropy at horizon ``lag`` couples the future sample ``x[t+lag]``
  with histories of both series ending at ``t``. The effective sample count is
  ``T - lag - max(k, l) + 1``.
* The batched TE path evaluates many candidate sources against one target in
  a single bincount sweep; the surrogate machinery in :mod:`tenet.inference`
  depends on it being exactly equivalent to the scalar path.
"""

import dataclasses
import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .errors import SampleSizeError
from .panel import SymbolSeries

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class TEConfig:
    """Configuration for symbolic transfer-entropy estimation.

    k, l        history lengths of the target and source
    lag         forecast horizon (future sample is x[t+lag])
    n_symbols   alphabet size of the symbolized inputs
    log_base    2.0 for bits
    min_samples minimum effective sample count; below it estimation refuses
    max_states  guard against runaway joint-alphabet sizes
    """

    k: int = 1
    l: int = 1
    lag: int = 1
    n_symbols: int = 5
    log_base: float = 2.0
    min_samples: int = 50
    max_states: int = 1_000_000

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ValueError("history lengths k, l must be >= 1")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        if self.n_symbols < 2:
            raise ValueError("n_symbols must be >= 2")
        if self.log_base <= 1:
            raise ValueError("log_base must be > 1")
        if self.n_states > self.max_states:
            raise ValueError(
                f"joint alphabet {self.n_states} exceeds max_states={self.max_states}"
            )

    @property
    def n_states(self) -> int:
        return self.n_symbols ** (1 + self.k + self.l)

    def effective_samples(self, length: int) -> int:
        return length - self.lag - max(self.k, self.l) + 1

    def with_lag(self, lag: int) -> "TEConfig":
        return dataclasses.replace(self, lag=lag)


def _xlogx_sum(counts: np.ndarray, axis=None) -> np.ndarray:
    c = counts.astype(float)
    return np.sum(c * np.log(np.maximum(c, 1.0)), axis=axis)


def _as_symbols(series, n_symbols: int) -> np.ndarray:
    if isinstance(series, SymbolSeries):
        if series.n_symbols != n_symbols:
            raise ValueError(
                f"series alphabet {series.n_symbols} != configured {n_symbols}"
            )
        return series.symbols
    arr = np.asarray(series)
    if arr.ndim != 1:
        raise ValueError("symbol series must be one-dimensional")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("symbol series must be integer-valued; symbolize first")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= n_symbols):
        raise ValueError(f"symbols out of range [0, {n_symbols})")
    return arr


def plugin_entropy(symbols, n_symbols: int | None = None, log_base: float = 2.0) -> float:
    """Plug-in (maximum likelihood) entropy of a discrete series."""
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.size == 0:
        raise SampleSizeError("cannot estimate entropy of an empty series")
    n = int(arr.max()) + 1 if n_symbols is None else n_symbols
    counts = np.bincount(arr, minlength=n)
    total = arr.size
    return float((total * np.log(total) - _xlogx_sum(counts)) / (total * np.log(log_base)))


def plugin_mi(x, y, n_x: int | None = None, n_y: int | None = None,
              log_base: float = 2.0) -> float:
    """Plug-in mutual information I(X;Y) between two discrete series."""
    xa = np.asarray(x, dtype=np.int64)
    ya = np.asarray(y, dtype=np.int64)
    if xa.size != ya.size:
        raise ValueError("series lengths differ")
    if xa.size == 0:
        raise SampleSizeError("cannot estimate MI of empty series")
    nx = int(xa.max()) + 1 if n_x is None else n_x
    ny = int(ya.max()) + 1 if n_y is None else n_y
    joint = np.bincount(xa * ny + ya, minlength=nx * ny).reshape(nx, ny)
    total = xa.size
    s_joint = _xlogx_sum(joint)
    s_x = _xlogx_sum(joint.sum(axis=1))
    s_y = _xlogx_sum(joint.sum(axis=0))
    mi = (s_joint - s_x - s_y + total * np.log(total)) / (total * np.log(log_base))
    return float(max(mi, 0.0))


def _block_ids(sym: np.ndarray, width: int, n_symbols: int) -> np.ndarray:
    """Encode rolling windows of ``width`` symbols into integer ids.

    Works on the last axis, so a (B, T) batch of series encodes in one pass.
    ``ids[..., i]`` encodes the window covering positions i .. i+width-1.
    """
    length = sym.shape[-1]
    ids = np.zeros(sym.shape[:-1] + (length - width + 1,), dtype=np.int64)
    for j in range(width):
        ids = ids * n_symbols + sym[..., j : length - width + 1 + j]
    return ids


def _te_terms(source_sym, target_sym, config: TEConfig):
    """Shared slicing for the scalar and batched TE paths.

    Returns (xf_xh_id, yh_ids, n_eff) where ``xf_xh_id`` encodes the target's
    future sample and history (1D) and ``yh_ids`` the source history windows
    (matching the source array's leading shape).
    """
    total = target_sym.shape[-1]
    if source_sym.shape[-1] != total:
        raise ValueError("source and target lengths differ")
    n_eff = config.effective_samples(total)
    if n_eff < max(config.min_samples, 2):
        raise SampleSizeError(
            f"effective sample count {n_eff} below minimum "
            f"{max(config.min_samples, 2)} (length {total}, lag {config.lag})"
        )
    s = config.n_symbols
    t0 = max(config.k, config.l) - 1
    xh_all = _block_ids(target_sym, config.k, s)
    yh_all = _block_ids(source_sym, config.l, s)
    xf = target_sym[t0 + config.lag : t0 + config.lag + n_eff]
    xh = xh_all[t0 - config.k + 1 : t0 - config.k + 1 + n_eff]
    yh = yh_all[..., t0 - config.l + 1 : t0 - config.l + 1 + n_eff]
    return xf * s**config.k + xh, yh, n_eff


def _te_from_counts(counts: np.ndarray, config: TEConfig, n_eff: int) -> np.ndarray:
    """TE per batch row from joint-state counts shaped (..., n_states).

    Uses the identity TE = H(Xf,Xh) + H(Xh,Yh) - H(Xh) - H(Xf,Xh,Yh); in
    count form all the log(n_eff) terms cancel.
    """
    s = config.n_symbols
    cube = counts.reshape(counts.shape[:-1] + (s, s**config.k, s**config.l))
    s_joint = _xlogx_sum(cube, axis=(-3, -2, -1))
    c_xfxh = cube.sum(axis=-1)
    c_xhyh = cube.sum(axis=-3)
    s_xfxh = _xlogx_sum(c_xfxh, axis=(-2, -1))
    s_xhyh = _xlogx_sum(c_xhyh, axis=(-2, -1))
    s_xh = _xlogx_sum(c_xfxh.sum(axis=-2), axis=-1)
    te = (s_joint + s_xh - s_xfxh - s_xhyh) / (n_eff * np.log(config.log_base))
    return np.maximum(te, 0.0)


def symbolic_te(source, target, config: TEConfig = TEConfig()) -> float:
    """Transfer entropy from ``source`` to ``target`` on quantile symbols.

    Plug-in estimate over the joint states (x[t+lag], target history, source
    history). Non-negative by construction; biased upward in small samples,
    which is why significance always goes through surrogates rather than the
    raw magnitude.
    """
    src = _as_symbols(source, config.n_symbols)
    tgt = _as_symbols(target, config.n_symbols)
    xfxh, yh, n_eff = _te_terms(src, tgt, config)
    joint = xfxh * config.n_symbols**config.l + yh
    counts = np.bincount(joint, minlength=config.n_states)
    return float(_te_from_counts(counts, config, n_eff))


def symbolic_te_batch(sources: np.ndarray, target, config: TEConfig = TEConfig()) -> np.ndarray:
    """TE of each row of ``sources`` (B, T) into one target, in one sweep.

    All rows share the target's future/history ids, so the joint-state counts
    for the whole batch come from a single offset bincount. Row b of the
    result equals ``symbolic_te(sources[b], target, config)`` exactly.
    """
    src = np.asarray(sources, dtype=np.int64)
    if src.ndim != 2:
        raise ValueError("sources must be a (B, T) array")
    tgt = _as_symbols(target, config.n_symbols)
    xfxh, yh, n_eff = _te_terms(src, tgt, config)
    n_rows = src.shape[0]
    joint = xfxh[None, :] * config.n_symbols**config.l + yh
    offsets = np.arange(n_rows, dtype=np.int64)[:, None] * config.n_states
    flat = (joint + offsets).ravel()
    counts = np.bincount(flat, minlength=n_rows * config.n_states)
    counts = counts.reshape(n_rows, config.n_states)
    return _te_from_counts(counts, config, n_eff)


def te_profile(source, target, config: TEConfig, lags) -> dict[int, float]:
    """TE at several forecast horizons, e.g. (1, 5, 10, 20)."""
    return {int(lag): symbolic_te(source, target, config.with_lag(int(lag))) for lag in lags}


# ---------------------------------------------------------------------------
# Kraskov-style nearest-neighbour estimators (continuous data)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSGConfig:
    """k-nearest-neighbour estimator settings (max-norm throughout).

    tie_policy: duplicated coordinates break the estimator's distinct-points
    assumption. "jitter" perturbs them deterministically (seeded from the
    data bytes); "fail" raises instead.
    """

    k_neighbors: int = 5
    tie_policy: str = "jitter"
    jitter_scale: float = 1e-10

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.tie_policy not in ("jitter", "fail"):
            raise ValueError(f"tie_policy must be 'jitter' or 'fail', got {self.tie_policy!r}")


def _column(arr) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("inputs must be 1D series or (N, d) arrays")
    if not np.all(np.isfinite(a)):
        raise ValueError("inputs contain non-finite values")
    return a


def _break_ties(a: np.ndarray, config: KSGConfig, tag: int) -> np.ndarray:
    """Deterministically jitter columns that contain duplicate values."""
    out = a.copy()
    for j in range(a.shape[1]):
        col = a[:, j]
        if np.unique(col).size == col.size:
            continue
        if config.tie_policy == "fail":
            raise ValueError(
                "duplicate values break the nearest-neighbour estimator "
                "(tie_policy='fail'); dedupe or allow jitter"
            )
        seed = int.from_bytes(
            hashlib.sha256(col.tobytes() + bytes([tag, j])).digest()[:8], "little"
        )
        rng = np.random.default_rng(seed)
        scale = np.std(col)
        scale = scale if scale > 0 else 1.0
        out[:, j] = col + rng.normal(0.0, scale * config.jitter_scale, col.size)
    return out


def ksg_mi(x, y, config: KSGConfig = KSGConfig()) -> float:
    """Mutual information I(X;Y) in nats via the joint k-NN radius.

    For each point, the max-norm distance to its k-th neighbour in the joint
    space sets a radius; counting strictly-closer neighbours in each marginal
    gives the digamma correction terms. Small negative estimates are a known
    finite-sample effect and are returned as-is.
    """
    xa = _column(x)
    ya = _column(y)
    if xa.shape[0] != ya.shape[0]:
        raise ValueError("series lengths differ")
    n = xa.shape[0]
    if n <= config.k_neighbors:
        raise SampleSizeError(
            f"need more than k_neighbors={config.k_neighbors} samples, got {n}"
        )
    xa = _break_ties(xa, config, tag=1)
    ya = _break_ties(ya, config, tag=2)
    joint = np.hstack([xa, ya])
    tree = cKDTree(joint)
    dist, _ = tree.query(joint, k=config.k_neighbors + 1, p=np.inf)
    eps = dist[:, -1]

    def marginal_counts(a: np.ndarray) -> np.ndarray:
        if a.shape[1] == 1:
            col = a[:, 0]
            order = np.sort(col)
            hi = np.searchsorted(order, col + eps, side="left")
            lo = np.searchsorted(order, col - eps, side="right")
            return hi - lo - 1
        sub = cKDTree(a)
        radii = np.nextafter(eps, -np.inf)
        return np.asarray(sub.query_ball_point(a, radii, p=np.inf, return_length=True)) - 1

    n_x = marginal_counts(xa)
    n_y = marginal_counts(ya)
    mi = (
        digamma(config.k_neighbors)
        + digamma(n)
        - np.mean(digamma(n_x + 1) + digamma(n_y + 1))
    )
    return float(mi)


def ksg_cmi(x, y, z, config: KSGConfig = KSGConfig()) -> float:
    """Conditional mutual information I(X;Y|Z) in nats (k-NN estimator).

    Same radius construction as :func:`ksg_mi`, with the marginal counts
    taken in the (X,Z), (Y,Z) and Z subspaces. ``z`` may be multi-column to
    condition on several variables jointly.
    """
    xa = _break_ties(_column(x), config, tag=1)
    ya = _break_ties(_column(y), config, tag=2)
    za = _break_ties(_column(z), config, tag=3)
    if not (xa.shape[0] == ya.shape[0] == za.shape[0]):
        raise ValueError("series lengths differ")
    n = xa.shape[0]
    if n <= config.k_neighbors:
        raise SampleSizeError(
            f"need more than k_neighbors={config.k_neighbors} samples, got {n}"
        )
    joint = np.hstack([xa, ya, za])
    tree = cKDTree(joint)
    dist, _ = tree.query(joint, k=config.k_neighbors + 1, p=np.inf)
    radii = np.nextafter(dist[:, -1], -np.inf)

    def subspace_counts(a: np.ndarray) -> np.ndarray:
        sub = cKDTree(a)
        return np.asarray(sub.query_ball_point(a, radii, p=np.inf, return_length=True)) - 1

    n_xz = subspace_counts(np.hstack([xa, za]))
    n_yz = subspace_counts(np.hstack([ya, za]))
    n_z = subspace_counts(za)
    cmi = digamma(config.k_neighbors) - np.mean(
        digamma(n_xz + 1) + digamma(n_yz + 1) - digamma(n_z + 1)
    )
    return float(cmi)


def ksg_te(source, target, config: KSGConfig = KSGConfig(), lag: int = 1) -> float:
    """Transfer entropy (nats) on raw continuous series via k-NN CMI.

    TE(source -> target) at horizon ``lag`` is I(x[t+lag]; y[t] | x[t]) with
    one-sample histories, the continuous counterpart of the symbolic
    estimator with k = l = 1.
    """
    x = np.asarray(target, dtype=float)
    y = np.asarray(source, dtype=float)
    if x.size != y.size:
        raise ValueError("source and target lengths differ")
    if lag < 1 or lag >= x.size:
        raise ValueError("lag must satisfy 1 <= lag < length")
    return ksg_cmi(x[lag:], y[:-lag], x[:-lag], config)


def nats_to_bits(value: float) -> float:
    return float(value) / _LN2


def bits_to_nats(value: float) -> float:
    return float(value) * _LN2
