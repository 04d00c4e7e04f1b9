"""Directed networks from significant TE edges: construction, topology
statistics, centralities, bellwether rankings, and rolling density.

Edges carry TE in bits as weights, but every path-based measure (betweenness,
closeness, PageRank) treats edges as unit-length links of the binary
adjacency structure: the significance filter decides topology, the TE
magnitude only decides weight-aware summaries (weighted out-degree, edge
weight comparisons).
"""

import dataclasses
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .errors import SampleSizeError
from .estimators import TEConfig
from .inference import (
    MannWhitneyResult,
    PairTestResult,
    SurrogateSpec,
    apply_fdr,
    mann_whitney_u,
    surrogate_test,
)
from .panel import FlowPanel, symbol_matrix
from .seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectedWeightedGraph:
    """Simple directed graph; edges are (source_index, target_index, weight)."""

    n_nodes: int
    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if len(self.node_labels) != self.n_nodes:
            raise ValueError("node_labels length must equal n_nodes")
        seen = set()
        for s, t, w in self.edges:
            if s == t:
                raise ValueError(f"self-loop at node {s}")
            if not (0 <= s < self.n_nodes and 0 <= t < self.n_nodes):
                raise ValueError(f"edge ({s}, {t}) out of node range")
            if (s, t) in seen:
                raise ValueError(f"duplicate edge ({s}, {t})")
            if not w > 0:
                raise ValueError(f"edge ({s}, {t}) has non-positive weight {w}")
            seen.add((s, t))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def density(self) -> float:
        if self.n_nodes < 2:
            return 0.0
        return self.n_edges / (self.n_nodes * (self.n_nodes - 1))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        for s, t, _ in self.edges:
            adj[s, t] = True
        return adj

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.n_nodes, self.n_nodes))
        for s, t, weight in self.edges:
            w[s, t] = weight
        return w

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for s, t, _ in self.edges:
            out[s].append(t)
        return [sorted(nbrs) for nbrs in out]


def build_network(te_matrix: np.ndarray, significance_mask: np.ndarray,
                  node_labels) -> DirectedWeightedGraph:
    """Graph with edge (i, j, te_matrix[i, j]) wherever the mask is true.

    The diagonal is ignored regardless of the mask.
    """
    te = np.asarray(te_matrix, dtype=float)
    mask = np.asarray(significance_mask, dtype=bool)
    if te.shape != mask.shape or te.ndim != 2 or te.shape[0] != te.shape[1]:
        raise ValueError(f"matrix/mask shape mismatch: {te.shape} vs {mask.shape}")
    labels = tuple(str(x) for x in node_labels)
    if len(labels) != te.shape[0]:
        raise ValueError("node_labels length must match matrix size")
    edges = tuple(
        (int(i), int(j), float(te[i, j]))
        for i, j in zip(*np.nonzero(mask))
        if i != j
    )
    return DirectedWeightedGraph(n_nodes=len(labels), node_labels=labels, edges=edges)


@dataclass(frozen=True)
class NetworkStats:
    n_edges: int
    density: float
    mean_te: float
    median_te: float
    max_te: float
    mean_clustering: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def network_stats(g: DirectedWeightedGraph) -> NetworkStats:
    """Edge-count/density/weight summaries plus mean undirected clustering.

    Clustering is computed on the undirected projection (a link exists if
    either direction does) and averaged over all nodes, counting degree-<2
    nodes as 0. An empty graph yields all zeros.
    """
    if g.n_edges == 0:
        return NetworkStats(0, 0.0, 0.0, 0.0, 0.0, 0.0)
    weights = np.array([w for _, _, w in g.edges])
    und = g.adjacency()
    und = (und | und.T).astype(float)
    deg = und.sum(axis=1)
    paths2 = und @ und
    coeffs = np.zeros(g.n_nodes)
    for v in range(g.n_nodes):
        if deg[v] < 2:
            continue
        triangles = float(paths2[v] @ und[v]) / 2.0  # closed pairs through v
        coeffs[v] = 2.0 * triangles / (deg[v] * (deg[v] - 1))
    return NetworkStats(
        n_edges=g.n_edges,
        density=g.density,
        mean_te=float(weights.mean()),
        median_te=float(np.median(weights)),
        max_te=float(weights.max()),
        mean_clustering=float(coeffs.mean()),
    )


@dataclass(frozen=True)
class CentralityTable:
    node_labels: tuple[str, ...]
    out_degree: np.ndarray
    in_degree: np.ndarray
    weighted_out_degree: np.ndarray
    betweenness: np.ndarray
    closeness: np.ndarray
    pagerank: np.ndarray

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "ticker": list(self.node_labels),
                "out_degree": self.out_degree,
                "in_degree": self.in_degree,
                "weighted_out_degree": self.weighted_out_degree,
                "betweenness": self.betweenness,
                "closeness": self.closeness,
                "pagerank": self.pagerank,
            }
        )


def _brandes_betweenness(succ: list[list[int]], n: int) -> np.ndarray:
    """Unnormalized directed betweenness via Brandes' accumulation."""
    bc = np.zeros(n)
    for s in range(n):
        stack: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        for w in reversed(stack):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def _bfs_distances(succ: list[list[int]], n: int) -> np.ndarray:
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dist[s, s] = 0.0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for w in succ[v]:
                if np.isinf(dist[s, w]):
                    dist[s, w] = dist[s, v] + 1.0
                    queue.append(w)
    return dist


def pagerank(adjacency: np.ndarray, damping: float = 0.85, tol: float = 1e-13,
             max_iter: int = 100_000) -> np.ndarray:
    """PageRank on a binary adjacency matrix.

    Uniform teleport, dangling mass spread uniformly, power iteration until
    the L1 change drops below ``tol``. The vector sums to 1.
    """
    adj = np.asarray(adjacency, dtype=float)
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    out_deg = adj.sum(axis=1)
    dangling = out_deg == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        transfer = np.where(out_deg[:, None] > 0, adj / np.maximum(out_deg[:, None], 1.0), 0.0)
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = (1.0 - damping) / n + damping * (transfer.T @ p + p[dangling].sum() / n)
        if np.abs(nxt - p).sum() < tol:
            p = nxt
            break
        p = nxt
    return p / p.sum()


def centralities(g: DirectedWeightedGraph) -> CentralityTable:
    """Six per-node centralities.

    Degrees are normalized by (n-1); betweenness uses unit edge lengths and
    the (n-1)(n-2) normalization; closeness is the harmonic variant over
    outgoing distances (unreachable nodes contribute 0), also scaled by
    1/(n-1); PageRank runs on the binary adjacency with damping 0.85.
    Weighted out-degree is the raw sum of outgoing TE.
    """
    n = g.n_nodes
    adj = g.adjacency()
    w = g.weight_matrix()
    succ = g.successors()
    denom = max(n - 1, 1)
    out_degree = adj.sum(axis=1) / denom
    in_degree = adj.sum(axis=0) / denom
    weighted_out = w.sum(axis=1)

    if n > 2:
        betweenness = _brandes_betweenness(succ, n) / ((n - 1) * (n - 2))
    else:
        betweenness = np.zeros(n)

    dist = _bfs_distances(succ, n)
    with np.errstate(divide="ignore"):
        inv = np.where(np.isfinite(dist) & (dist > 0), 1.0 / np.maximum(dist, 1e-300), 0.0)
    closeness = inv.sum(axis=1) / denom

    return CentralityTable(
        node_labels=g.node_labels,
        out_degree=out_degree.astype(float),
        in_degree=in_degree.astype(float),
        weighted_out_degree=weighted_out.astype(float),
        betweenness=betweenness.astype(float),
        closeness=closeness.astype(float),
        pagerank=pagerank(adj),
    )


def bellwether_ranking(table: CentralityTable, top_k: int) -> list[str]:
    """Top nodes by out-degree, ties by weighted out-degree, then label."""
    n = len(table.node_labels)
    if top_k > n:
        raise ValueError(f"top_k={top_k} exceeds node count {n}")
    order = sorted(
        range(n),
        key=lambda i: (-table.out_degree[i], -table.weighted_out_degree[i], table.node_labels[i]),
    )
    return [table.node_labels[i] for i in order[:top_k]]


def edge_weight_comparison(g1: DirectedWeightedGraph, g2: DirectedWeightedGraph) -> tuple[float, float]:
    """Mann-Whitney (U, p) comparing the two graphs' edge-weight samples."""
    if g1.n_edges == 0 or g2.n_edges == 0:
        raise SampleSizeError("edge weight comparison requires both graphs to have edges")
    res: MannWhitneyResult = mann_whitney_u(
        [w for _, _, w in g1.edges], [w for _, _, w in g2.edges]
    )
    return res.u_a, res.p_value


# ---------------------------------------------------------------------------
# panel-level scans
# ---------------------------------------------------------------------------


@dataclass
class PanelScan:
    """All ordered-pair surrogate tests of one investor type's signals."""

    investor_type: str
    signal: str
    tickers: list[str]
    te: np.ndarray  # (n, n), NaN where untested
    tested: np.ndarray  # bool (n, n)
    significant: np.ndarray  # bool (n, n)
    results: list[PairTestResult] = field(repr=False)
    skipped_pairs: list[tuple[str, str, str]]
    dropped_tickers: list[tuple[str, str]]

    def graph(self) -> DirectedWeightedGraph:
        te = np.where(self.significant, self.te, 0.0)
        return build_network(te, self.significant, self.tickers)

    def edges_frame(self) -> pd.DataFrame:
        rows = [
            {
                "source": r.source_id,
                "target": r.target_id,
                "te_bits": r.te,
                "p_value": r.p_value,
                "q_value": r.q_value,
                "threshold": r.threshold,
                "significant": r.significant,
            }
            for r in self.results
        ]
        return pd.DataFrame(
            rows,
            columns=["source", "target", "te_bits", "p_value", "q_value", "threshold", "significant"],
        )


def scan_panel(panel: FlowPanel, investor_type: str, config: TEConfig = TEConfig(),
               spec: SurrogateSpec = SurrogateSpec(), signal: str = "matched",
               zscore: bool = False, jobs: int = 1) -> PanelScan:
    """Surrogate-test every ordered ticker pair of one investor type.

    Each pair is aligned on the dates where both signals are observed before
    testing; pairs with too little overlap are skipped and recorded. The
    surrogate seed is re-derived per (scan, source, target), so the result is
    independent of pair order and of ``jobs``.
    """
    sym, dropped = symbol_matrix(panel, investor_type, signal=signal,
                                 zscore=zscore, n_symbols=config.n_symbols)
    tickers = list(panel.ticker_index)
    n = len(tickers)
    scan_spec = dataclasses.replace(
        spec, seed=derive_seed(spec.seed, "scan", investor_type, signal)
    )
    min_len = max(config.min_samples, 2) + config.lag + max(config.k, config.l) - 1

    tasks = []
    skipped: list[tuple[str, str, str]] = []
    for i, j in itertools.permutations(range(n), 2):
        common = (sym[i] >= 0) & (sym[j] >= 0)
        n_common = int(common.sum())
        if n_common < min_len:
            skipped.append((tickers[i], tickers[j], f"only {n_common} aligned observations"))
            continue
        tasks.append((i, j, sym[i, common], sym[j, common]))

    runner = Parallel(n_jobs=jobs, prefer="processes" if jobs != 1 else None)
    results = runner(
        delayed(surrogate_test)(
            src, tgt, config, scan_spec,
            source_id=tickers[i], target_id=tickers[j], keep_surrogates=False,
        )
        for i, j, src, tgt in tasks
    )
    results = apply_fdr(list(results), scan_spec.alpha)

    te = np.full((n, n), np.nan)
    tested = np.zeros((n, n), dtype=bool)
    significant = np.zeros((n, n), dtype=bool)
    index = {t: k for k, t in enumerate(tickers)}
    for r in results:
        i, j = index[r.source_id], index[r.target_id]
        te[i, j] = r.te
        tested[i, j] = True
        significant[i, j] = r.significant
    return PanelScan(
        investor_type=investor_type,
        signal=signal,
        tickers=tickers,
        te=te,
        tested=tested,
        significant=significant,
        results=results,
        skipped_pairs=skipped,
        dropped_tickers=dropped,
    )


def rolling_density(panel: FlowPanel, investor_type: str, config: TEConfig = TEConfig(),
                    spec: SurrogateSpec = SurrogateSpec(), window: int = 60,
                    step: int = 5, jobs: int = 1, signal: str = "matched") -> pd.DataFrame:
    """Significant-edge density re-estimated on sliding date windows.

    Returns a frame with one row per window (indexed by end date). Windows
    where no pair has enough data are skipped with a warning. Each window
    derives its own surrogate seed, so shifting the grid does not correlate
    the tests.
    """
    dates = panel.date_index
    if window > len(dates):
        raise ValueError(f"window {window} exceeds panel length {len(dates)}")
    rows = []
    for end in range(window - 1, len(dates), step):
        lo, hi = dates[end - window + 1], dates[end]
        sub = panel.slice_dates(lo, hi)
        win_spec = dataclasses.replace(
            spec, seed=derive_seed(spec.seed, "window", str(hi.date()))
        )
        scan = scan_panel(sub, investor_type, config, win_spec, signal=signal, jobs=jobs)
        if not scan.results:
            log.warning("window ending %s skipped: no pair had enough data", hi.date())
            continue
        n = len(scan.tickers)
        n_sig = int(scan.significant.sum())
        rows.append(
            {
                "end_date": hi,
                "density": n_sig / (n * (n - 1)) if n > 1 else 0.0,
                "n_significant": n_sig,
                "n_tested": len(scan.results),
            }
        )
    return pd.DataFrame(rows, columns=["end_date", "density", "n_significant", "n_tested"])
