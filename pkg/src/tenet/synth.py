"""Synthetic data generators with known ground truth, plus exact oracles.

Everything here exists so that the estimators can be tested against closed
forms or exhaustively computed values rather than against themselves:

* coupled symbol chains with an analytic transfer entropy,
* correlated Gaussians with analytic mutual information,
* an exact TE oracle for arbitrary first-order joint Markov chains,
* a full planted-edge flow panel whose generating parameters are returned
  as a machine-readable truth ledger.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .panel import FlowPanel, INVESTOR_TYPES
from .seeding import rng_for

# ---------------------------------------------------------------------------
# coupled symbol chains
# ---------------------------------------------------------------------------


def gen_coupled_chain(length: int, coupling: float, n_symbols: int = 5, lag: int = 1,
                      seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Source/target symbol chains where the target copies the source.

    The source is i.i.d. uniform over the alphabet; the target at t+lag
    equals the source at t with probability ``coupling`` and is an
    independent uniform draw otherwise. Returns (source, target) int arrays.
    """
    if not 0.0 <= coupling <= 1.0:
        raise ValueError("coupling must be in [0, 1]")
    if lag < 1 or lag >= length:
        raise ValueError("lag must satisfy 1 <= lag < length")
    rng = rng_for(seed, "coupled-chain", length, coupling, n_symbols, lag)
    source = rng.integers(0, n_symbols, size=length)
    noise = rng.integers(0, n_symbols, size=length)
    copy = rng.random(length) < coupling
    target = noise.copy()
    target[lag:][copy[lag:]] = source[:-lag][copy[lag:]]
    return source.astype(np.int64), target.astype(np.int64)


def coupled_chain_exact_te(coupling: float, n_symbols: int = 5) -> float:
    """Closed-form TE (bits) of the coupled chain at its generating lag.

    The source is i.i.d. and the target history is independent of the
    (source, future) pair, so TE reduces to I(target future; source) =
    log2(S) - H(target future | source).
    """
    s = n_symbols
    p_hit = coupling + (1.0 - coupling) / s
    p_miss = (1.0 - coupling) / s
    h_cond = -(p_hit * np.log2(p_hit) if p_hit > 0 else 0.0)
    if p_miss > 0:
        h_cond -= (s - 1) * p_miss * np.log2(p_miss)
    return float(np.log2(s) - h_cond)


def coupled_chain_transition(coupling: float, n_symbols: int = 5) -> np.ndarray:
    """Joint one-step transition tensor T[x, y, x', y'] of the lag-1 chain."""
    s = n_symbols
    t = np.zeros((s, s, s, s))
    for y in range(s):
        px = np.full(s, (1.0 - coupling) / s)
        px[y] += coupling
        t[:, y, :, :] = px[:, None] / s
    return t


# ---------------------------------------------------------------------------
# exact TE oracle for first-order joint Markov chains
# ---------------------------------------------------------------------------


def stationary_distribution(transition_matrix: np.ndarray, tol: float = 1e-14,
                            max_iter: int = 200_000) -> np.ndarray:
    """Stationary row vector of a stochastic matrix by power iteration."""
    n = transition_matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ transition_matrix
        if np.abs(nxt - pi).max() < tol:
            return nxt / nxt.sum()
        pi = nxt
    raise RuntimeError("stationary distribution did not converge")


def oracle_te_exact(transition: np.ndarray, log_base: float = 2.0) -> float:
    """Exact TE(Y -> X) at lag 1, k = l = 1, for a joint Markov chain.

    ``transition[x, y, x', y']`` is P(x', y' | x, y). The value is computed
    by exhaustive summation over the stationary law -- no sampling, no
    estimation -- so it can serve as an oracle for the plug-in estimator.
    """
    t = np.asarray(transition, dtype=float)
    if t.ndim != 4 or t.shape[0] != t.shape[2] or t.shape[1] != t.shape[3]:
        raise ValueError("transition must have shape (Sx, Sy, Sx, Sy)")
    sx, sy = t.shape[0], t.shape[1]
    flat = t.reshape(sx * sy, sx * sy)
    if not np.allclose(flat.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("transition rows must sum to 1")
    pi = stationary_distribution(flat).reshape(sx, sy)

    cond_xy = t.sum(axis=3)  # P(x' | x, y)
    px = pi.sum(axis=1)  # P(x)
    # P(x' | x) = sum_y P(y | x) P(x' | x, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        y_given_x = np.where(px[:, None] > 0, pi / np.maximum(px[:, None], 1e-300), 0.0)
    cond_x = np.einsum("xy,xyz->xz", y_given_x, cond_xy)

    te = 0.0
    for x in range(sx):
        for y in range(sy):
            w = pi[x, y]
            if w <= 0:
                continue
            for xn in range(sx):
                p = cond_xy[x, y, xn]
                if p <= 0:
                    continue
                te += w * p * np.log(p / cond_x[x, xn])
    return float(te / np.log(log_base))


def markov_sample(transition: np.ndarray, length: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample (x, y) paths of a joint Markov chain from its stationary start."""
    t = np.asarray(transition, dtype=float)
    sx, sy = t.shape[0], t.shape[1]
    flat = t.reshape(sx * sy, sx * sy)
    cum = np.cumsum(flat, axis=1)
    pi = stationary_distribution(flat)
    rng = rng_for(seed, "markov-sample", length)
    state = int(rng.choice(sx * sy, p=pi))
    draws = rng.random(length)
    states = np.empty(length, dtype=np.int64)
    for i in range(length):
        states[i] = state
        state = int(np.searchsorted(cum[state], draws[i], side="right"))
        state = min(state, sx * sy - 1)
    return states // sy, states % sy


# ---------------------------------------------------------------------------
# correlated Gaussians
# ---------------------------------------------------------------------------


def gen_gaussian_pair(length: int, rho: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Standard bivariate normal draws with correlation rho."""
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must be in (-1, 1)")
    rng = rng_for(seed, "gaussian-pair", length, rho)
    x = rng.standard_normal(length)
    e = rng.standard_normal(length)
    y = rho * x + np.sqrt(1.0 - rho * rho) * e
    return x, y


def gaussian_mi_exact(rho: float) -> float:
    """I(X;Y) in nats for a bivariate normal with correlation rho."""
    return float(-0.5 * np.log(1.0 - rho * rho))


def gen_directional_triple(length: int, coupling_a: float, coupling_b: float,
                           noise_sd: float = 1.0, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two continuous drivers and a response: r[t+1] = ca*a[t] + cb*b[t] + noise.

    With ``coupling_a == coupling_b`` the drivers are exchangeable with
    respect to the response; with ``coupling_b == 0`` the first driver is a
    planted leader. Returns (a, b, r), each of the given length.
    """
    rng = rng_for(seed, "directional-triple", length, coupling_a, coupling_b)
    a = rng.standard_normal(length)
    b = rng.standard_normal(length)
    r = np.zeros(length)
    r[0] = rng.standard_normal()
    r[1:] = coupling_a * a[:-1] + coupling_b * b[:-1] + noise_sd * rng.standard_normal(length - 1)
    return a, b, r


# ---------------------------------------------------------------------------
# planted-edge flow panel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedPanelSpec:
    """Parameters of the ground-truth panel generator.

    The signal of each edge's target stock copies its source stock's signal
    chain with probability ``coupling`` at horizon ``lag``; all other signal
    chains are i.i.d. Next-period returns follow
    ``r = ret_signal * signal + ret_centrality * centrality
    + ret_interaction * signal * centrality + eps`` with centrality taken as
    planted out-degree / (n_stocks - 1).
    """

    n_stocks: int = 20
    length: int = 600
    n_edges: int = 10
    coupling: float = 0.8
    lag: int = 1
    n_symbols: int = 5
    ret_signal: float = 0.5
    ret_centrality: float = 0.05
    ret_interaction: float = 0.0
    noise_sd: float = 0.02
    start_date: str = "2020-01-02"

    def __post_init__(self):
        if self.n_edges < 0:
            raise ValueError("n_edges must be non-negative")
        if self.n_edges > self.n_stocks // 2:
            raise ValueError(
                "the generator draws every source from the non-target stocks "
                "(so each planted edge is an independent-driver copy chain), "
                "which requires n_edges <= n_stocks // 2"
            )
        worst = (
            0.8 * abs(self.ret_signal)
            + abs(self.ret_centrality)
            + 0.8 * abs(self.ret_interaction)
            + 6.0 * self.noise_sd
        )
        if worst >= 0.99:
            raise ValueError("return parameters can produce prices <= 0; shrink them")


def _lift_symbols(symbols: np.ndarray, n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Map symbols to continuous values in (-0.8, 0.8) that re-symbolize back.

    Each symbol's values fill one fifth of the range uniformly, so quantile
    discretization recovers the chain up to boundary ties.
    """
    u = rng.random(symbols.size)
    return ((symbols + u) / n_symbols) * 1.6 - 0.8


def gen_planted_panel(spec: PlantedPanelSpec = PlantedPanelSpec(), seed: int = 0) -> tuple[FlowPanel, dict]:
    """Full flow panel with a known directed-edge structure and return DGP.

    Returns (panel, truth). ``truth`` is JSON-serializable and records the
    planted edges, coupling, lag, per-stock out-degree centrality and the
    return coefficients -- everything a recovery test needs.
    """
    n, length = spec.n_stocks, spec.length
    tickers = [f"S{i:03d}" for i in range(n)]
    rng = rng_for(seed, "planted-panel", n, length, spec.n_edges)

    # planted edges: distinct targets, and sources drawn only from non-target
    # stocks, so every target copies an i.i.d. driver chain (no coupling is
    # ever overwritten by a later rewrite, and the closed-form edge TE holds
    # for each edge individually)
    pairs = []
    targets = [int(t) for t in rng.permutation(n)[: spec.n_edges]]
    non_targets = sorted(set(range(n)) - set(targets))
    for tgt in targets:
        src = int(non_targets[rng.integers(0, len(non_targets))])
        pairs.append((src, tgt))
    parent = {tgt: src for src, tgt in pairs}

    # symbol chains: drivers i.i.d., targets copy their parent with coupling
    chains = np.empty((n, length), dtype=np.int64)
    for i in range(n):
        chains[i] = rng.integers(0, spec.n_symbols, size=length)
    for tgt, src in parent.items():
        copy = rng.random(length - spec.lag) < spec.coupling
        lagged_target = chains[tgt, spec.lag:]
        lagged_target[copy] = chains[src, : length - spec.lag][copy]

    signal = np.empty((n, length))
    for i in range(n):
        signal[i] = _lift_symbols(chains[i], spec.n_symbols, rng)

    out_degree = np.zeros(n, dtype=int)
    for src, _ in pairs:
        out_degree[src] += 1
    centrality = out_degree / (n - 1)

    # next-period returns and the implied price paths
    eps = np.clip(rng.normal(0.0, spec.noise_sd, size=(n, length - 1)), -6 * spec.noise_sd, 6 * spec.noise_sd)
    rets = (
        spec.ret_signal * signal[:, :-1]
        + spec.ret_centrality * centrality[:, None]
        + spec.ret_interaction * signal[:, :-1] * centrality[:, None]
        + eps
    )
    if (1.0 + rets).min() <= 0:
        raise RuntimeError("generated a non-positive gross return; spec guard failed")
    close = np.empty((n, length))
    close[:, 0] = 100.0 * (1.0 + 0.05 * np.arange(n))
    close[:, 1:] = close[:, 0:1] * np.cumprod(1.0 + rets, axis=1)

    shares = 1e6 * (1.0 + np.arange(n, dtype=float))
    volume = np.exp(rng.normal(12.0, 0.3, size=(n, length)))

    dates = pd.bdate_range(spec.start_date, periods=length)
    rows = []
    for itype in INVESTOR_TYPES:
        nbv_noise = rng.normal(0.0, 0.05, size=(n, length))
        for i in range(n):
            rows.append(
                pd.DataFrame(
                    {
                        "date": dates,
                        "ticker": tickers[i],
                        "investor_type": itype,
                        "net_buy_volume": volume[i] * 0.25 * (signal[i] + nbv_noise[i]),
                        "close": close[i],
                        "market_cap": close[i] * shares[i],
                        "trading_volume": volume[i],
                        "s_mc": signal[i],
                        "s_tv": signal[i],
                    }
                )
            )
    panel = FlowPanel.from_records(pd.concat(rows, ignore_index=True))

    truth = {
        "seed": int(seed),
        "tickers": tickers,
        "edges": [[tickers[s], tickers[t]] for s, t in sorted(pairs)],
        "coupling": spec.coupling,
        "lag": spec.lag,
        "n_symbols": spec.n_symbols,
        "exact_edge_te_bits": coupled_chain_exact_te(spec.coupling, spec.n_symbols),
        "centrality": {tickers[i]: float(centrality[i]) for i in range(n)},
        "return_coefficients": {
            "signal": spec.ret_signal,
            "centrality": spec.ret_centrality,
            "interaction": spec.ret_interaction,
            "noise_sd": spec.noise_sd,
        },
        "spec": dataclasses.asdict(spec),
    }
    return panel, truth


def gen_null_panel(n_stocks: int = 20, length: int = 600, seed: int = 0) -> tuple[FlowPanel, dict]:
    """Panel with no planted edges: every signal chain is independent."""
    spec = PlantedPanelSpec(n_stocks=n_stocks, length=length, n_edges=0)
    return gen_planted_panel(spec, seed=seed)
