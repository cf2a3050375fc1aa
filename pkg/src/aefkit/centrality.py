"""Comparison suite of classical centrality measures for weighted graphs.

Covers degree and weighted degree, eigenvector centrality (power iteration,
max-normalized), exact Brandes betweenness (weighted paths use length 1/w:
more seats, shorter effective distance), clustering coefficients (Barrat
intensity for the weighted form), and the triangle-participation core
number (t-core), a k-core variant peeled by within-subgraph triangle
counts.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .wan import WanGraph


@dataclass(frozen=True)
class CentralityReport:
    """All nine comparison measures, keyed by IATA code."""

    degree: dict[str, int]
    w_degree: dict[str, float]
    eigen: dict[str, float]
    w_eigen: dict[str, float]
    betweenness: dict[str, float]
    w_betweenness: dict[str, float]
    clustering: dict[str, float]
    w_clustering: dict[str, float]
    t_core: dict[str, int]

    COLUMNS = (
        "degree",
        "w_degree",
        "eigen",
        "w_eigen",
        "betweenness",
        "w_betweenness",
        "clustering",
        "w_clustering",
        "t_core",
    )

    def row(self, iata: str) -> tuple:
        return tuple(getattr(self, col)[iata] for col in self.COLUMNS)


def degree_centralities(graph: WanGraph) -> tuple[dict[str, int], dict[str, float]]:
    """Incident-edge counts and incident-weight sums."""
    deg = {iata: graph.degree(iata) for iata in graph.iatas}
    wdeg = {iata: graph.weighted_degree(iata) for iata in graph.iatas}
    return deg, wdeg


def _largest_component(graph: WanGraph) -> list[int]:
    nbr_idx, _, _ = graph.csr()
    n = graph.n_nodes
    seen = np.zeros(n, dtype=bool)
    best: list[int] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        head = 0
        while head < len(comp):
            v = comp[head]
            head += 1
            for u in nbr_idx[v]:
                if not seen[u]:
                    seen[u] = True
                    comp.append(int(u))
        if len(comp) > len(best):
            best = comp
    return sorted(best)


def eigenvector_centrality(
    graph: WanGraph, weighted: bool = False, tol: float = 1e-10, max_iter: int = 2000
) -> dict[str, float]:
    """Principal-eigenvector scores on the largest component, max = 1.

    Power iteration runs on A + sigma*I (same eigenvectors; the diagonal
    shift keeps bipartite components from oscillating) until successive
    max-normalized vectors agree within ``tol`` in max norm. Nodes outside
    the largest component score 0.
    """
    comp = _largest_component(graph)
    nbr_idx, nbr_w, wdeg = graph.csr()
    pos = {v: i for i, v in enumerate(comp)}
    m = len(comp)
    rows, cols, vals = [], [], []
    for v in comp:
        for u, w in zip(nbr_idx[v], nbr_w[v]):
            if int(u) in pos:
                rows.append(pos[v])
                cols.append(pos[int(u)])
                vals.append(w if weighted else 1.0)
    from scipy.sparse import csr_matrix

    a = csr_matrix((vals, (rows, cols)), shape=(m, m))
    shift = 0.05 * max(float(a.sum(axis=1).max()), 1.0)

    x = np.ones(m)
    for iteration in range(1, max_iter + 1):
        y = a.dot(x) + shift * x
        peak = y.max()
        if peak <= 0:
            break
        y /= peak
        residual = float(np.max(np.abs(y - x)))
        x = y
        if residual < tol:
            scores = {iata: 0.0 for iata in graph.iatas}
            for v, i in pos.items():
                scores[graph.iatas[v]] = float(x[i])
            return scores
    raise RuntimeError(
        f"eigenvector power iteration did not converge: {max_iter} iterations, residual {residual:.3e}"
    )


def betweenness_centrality(graph: WanGraph, weighted: bool = False, workers: int = 1) -> dict[str, float]:
    """Exact betweenness via Brandes accumulation over every source.

    Weighted shortest paths use edge length 1/weight. Scores are raw
    pair counts (unnormalized); each unordered pair contributes once.
    """
    n = graph.n_nodes
    nbr_idx, nbr_w, _ = graph.csr()
    if weighted:
        adj = [
            [(int(u), 1.0 / w) for u, w in zip(nbr_idx[v], nbr_w[v])]
            for v in range(n)
        ]
    else:
        adj = [[int(u) for u in nbr_idx[v]] for v in range(n)]

    if workers <= 1 or n < 256:
        totals = _brandes_range(adj, weighted, 0, n)
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if lo < hi]
        totals = np.zeros(n)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_brandes_task, [(adj, weighted, lo, hi) for lo, hi in chunks]):
                totals += part
    # Undirected: the source sweep sees every pair from both ends.
    totals /= 2.0
    return {graph.iatas[v]: float(totals[v]) for v in range(n)}


def _brandes_task(args):
    adj, weighted, lo, hi = args
    return _brandes_range(adj, weighted, lo, hi)


def _brandes_range(adj, weighted: bool, lo: int, hi: int) -> np.ndarray:
    n = len(adj)
    totals = np.zeros(n)
    sssp = _sssp_weighted if weighted else _sssp_unweighted
    for s in range(lo, hi):
        order, preds, sigma = sssp(adj, s)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                totals[w] += delta[w]
    return totals


def _sssp_unweighted(adj, s):
    n = len(adj)
    dist = [-1] * n
    sigma = [0] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    dist[s] = 0
    sigma[s] = 1
    order = [s]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        dv1 = dist[v] + 1
        sv = sigma[v]
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = dv1
                order.append(u)
            if dist[u] == dv1:
                sigma[u] += sv
                preds[u].append(v)
    return order, preds, sigma


def _sssp_weighted(adj, s):
    n = len(adj)
    inf = float("inf")
    seen = [inf] * n
    final = [False] * n
    sigma = [0] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    order: list[int] = []
    seen[s] = 0.0
    sigma[s] = 1
    heap = [(0.0, s)]
    while heap:
        d, v = heapq.heappop(heap)
        if final[v]:
            continue
        final[v] = True
        order.append(v)
        sv = sigma[v]
        for u, length in adj[v]:
            if final[u]:
                continue
            du = d + length
            if du < seen[u]:
                seen[u] = du
                sigma[u] = sv
                preds[u] = [v]
                heapq.heappush(heap, (du, u))
            elif du == seen[u]:
                sigma[u] += sv
                preds[u].append(v)
    return order, preds, sigma


def clustering_coefficient(graph: WanGraph, weighted: bool = False) -> dict[str, float]:
    """Neighborhood closure per node, in [0, 1].

    Unweighted: closed neighbor pairs over all pairs. Weighted: Barrat
    intensity, sum of (w_uv + w_uh)/2 over closed pairs relative to
    strength * (degree - 1). Degree < 2 scores 0.
    """
    nbr_idx, nbr_w, wdeg = graph.csr()
    adj_sets = [set(map(int, ix)) for ix in nbr_idx]
    out: dict[str, float] = {}
    for v in range(graph.n_nodes):
        k = len(nbr_idx[v])
        if k < 2:
            out[graph.iatas[v]] = 0.0
            continue
        nbrs = [int(u) for u in nbr_idx[v]]
        wts = nbr_w[v]
        closed = 0
        intensity = 0.0
        for i in range(k):
            ai = adj_sets[nbrs[i]]
            for j in range(i + 1, k):
                if nbrs[j] in ai:
                    closed += 1
                    intensity += wts[i] + wts[j]
        if weighted:
            out[graph.iatas[v]] = float(intensity / (wdeg[v] * (k - 1)))
        else:
            out[graph.iatas[v]] = float(closed / (k * (k - 1) / 2))
    return out


def t_core(graph: WanGraph) -> dict[str, int]:
    """Triangle-participation core number of every node.

    A node's t-core is the largest t such that it survives in the maximal
    subgraph where every node takes part in at least t triangles, counted
    within that subgraph. Peeling removes every under-threshold node of a
    round simultaneously and recounts before the next round.
    """
    nbr_idx, _, _ = graph.csr()
    adj: dict[int, set[int]] = {v: set(map(int, nbr_idx[v])) for v in range(graph.n_nodes)}
    tri = {v: 0 for v in adj}
    for v in adj:
        for u in adj[v]:
            if u > v:
                common = len(adj[v] & adj[u])
                tri[v] += common
                tri[u] += common
    for v in tri:
        tri[v] //= 2

    core: dict[int, int] = {}
    level = 0
    alive = set(adj)
    while alive:
        drop = [v for v in alive if tri[v] < level + 1]
        if not drop:
            level += 1
            continue
        while drop:
            for v in drop:
                core[v] = level
                alive.discard(v)
                nbrs = [u for u in adj.pop(v) if u in adj]
                for u in nbrs:
                    adj[u].discard(v)
                for i, u in enumerate(nbrs):
                    au = adj[u]
                    for w in nbrs[i + 1 :]:
                        if w in au:
                            tri[u] -= 1
                            tri[w] -= 1
            drop = [v for v in alive if tri[v] < level + 1]
    return {graph.iatas[v]: c for v, c in core.items()}


def full_report(graph: WanGraph, workers: int = 1) -> CentralityReport:
    """Compute the whole nine-measure suite in one pass."""
    deg, wdeg = degree_centralities(graph)
    return CentralityReport(
        degree=deg,
        w_degree=wdeg,
        eigen=eigenvector_centrality(graph, weighted=False),
        w_eigen=eigenvector_centrality(graph, weighted=True),
        betweenness=betweenness_centrality(graph, weighted=False, workers=workers),
        w_betweenness=betweenness_centrality(graph, weighted=True, workers=workers),
        clustering=clustering_coefficient(graph, weighted=False),
        w_clustering=clustering_coefficient(graph, weighted=True),
        t_core=t_core(graph),
    )
