"""Airport expected force: two-transmission spreading potential of a node.

Seeding an outbreak at an airport, the first two transmission events can
unfold in many ways; each way leaves a three-node infected cluster whose
force of infection is the total edge weight from the cluster to the rest of
the network. A node's expected force is the entropy of the distribution of
(cluster force x pattern probability) over every ordered way the first two
transmissions can occur. High scores mean many comparably-likely, highly
connected continuations; low scores mean few or weakly connected ones.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix

from .wan import WanGraph


@dataclass(frozen=True)
class TransmissionPattern:
    """One ordered two-transmission realization from a seed.

    The first event infects ``first_target``; the second travels the edge
    ``second_source -> second_target`` out of the infected pair. The cluster
    is {seed, first_target, second_target}.
    """

    first_target: str
    second_source: str
    second_target: str
    probability: float
    cluster_foi: float


@dataclass(frozen=True)
class AefScore:
    raw_entropy: float
    normalized: float  # [0, 100]
    degenerate: bool = False


def cluster_foi(graph: WanGraph, cluster: Iterable[str]) -> float:
    """Total weight of edges with exactly one endpoint inside the cluster."""
    members = set(cluster)
    if not members:
        raise ValueError("cluster must be non-empty")
    total = 0.0
    for u in members:
        for v in graph.neighbors(u):
            if v not in members:
                total += graph.weight(u, v)
    return total


def enumerate_patterns(graph: WanGraph, seed: str) -> list[TransmissionPattern]:
    """Every ordered two-transmission pattern seeded at ``seed``.

    First transmission seed->a has probability w(seed,a)/W(seed). The second
    travels any edge from the infected pair {seed, a} to an outside node,
    with probability proportional to that edge's share of all such
    outward-facing weight. Patterns reaching the same cluster along
    different edges or orders are distinct.

    Returns an empty list when the seed sits in an isolated dyad (no second
    transmission is possible); raises for a degree-0 seed.
    """
    if seed not in graph:
        raise KeyError(f"seed {seed!r} not in graph")
    if graph.degree(seed) == 0:
        raise ValueError(f"seed {seed!r} has no routes; expected force undefined")
    w_seed = graph.weighted_degree(seed)
    patterns: list[TransmissionPattern] = []
    for a in graph.neighbors(seed):
        p_first = graph.weight(seed, a) / w_seed
        second_edges = [
            (u, b, graph.weight(u, b))
            for u in (seed, a)
            for b in graph.neighbors(u)
            if b != seed and b != a
        ]
        omega = sum(w for _, _, w in second_edges)
        if omega == 0.0:
            continue  # isolated dyad: the pair has no outward edge
        for u, b, w in second_edges:
            patterns.append(
                TransmissionPattern(
                    first_target=a,
                    second_source=u,
                    second_target=b,
                    probability=p_first * (w / omega),
                    cluster_foi=cluster_foi(graph, (seed, a, b)),
                )
            )
    return patterns


def expected_force(graph: WanGraph, seed: str) -> float:
    """Raw expected force (natural-log entropy) of one seed airport.

    Degenerate seeds (isolated dyads, or clusters with no outward weight at
    all) score 0.0 rather than erroring; they still belong in rankings.
    """
    patterns = enumerate_patterns(graph, seed)
    return _entropy([p.probability * p.cluster_foi for p in patterns])


def _entropy(d_values: Iterable[float]) -> float:
    # Normalize before taking logs: shares are invariant under exact weight
    # rescaling, so the entropy is too. Zero terms follow x ln x -> 0.
    live = [d for d in d_values if d > 0.0]
    total = sum(live)
    if total <= 0.0:
        return 0.0
    acc = 0.0
    for d in live:
        share = d / total
        acc -= share * math.log(share)
    return acc


def normalize_scores(
    raw: Mapping[str, float], degenerate: Iterable[str] = ()
) -> dict[str, AefScore]:
    """Min-max rescale raw entropies onto [0, 100].

    A constant mapping (including a single node) rescales to all zeros.
    """
    if not raw:
        raise ValueError("no scores to normalize")
    lo = min(raw.values())
    hi = max(raw.values())
    span = hi - lo
    flagged = set(degenerate)
    out: dict[str, AefScore] = {}
    for node, value in raw.items():
        norm = 0.0 if span == 0.0 else 100.0 * (value - lo) / span
        out[node] = AefScore(raw_entropy=value, normalized=norm, degenerate=node in flagged)
    return out


def all_aef(graph: WanGraph, workers: int = 1) -> dict[str, AefScore]:
    """Expected force of every airport, normalized network-wide.

    Per-seed computations are independent; with ``workers > 1`` they are
    distributed over a process pool and merged in node order, so results do
    not depend on the worker count.
    """
    if graph.n_nodes == 0:
        raise ValueError("empty graph")
    n = graph.n_nodes
    if workers <= 1 or n < 64:
        raws, flags = _raw_scores_range(graph, 0, n)
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if lo < hi]
        raws, flags = {}, set()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part_raws, part_flags in pool.map(_raw_scores_task, [(graph, lo, hi) for lo, hi in chunks]):
                raws.update(part_raws)
                flags.update(part_flags)
    return normalize_scores(raws, degenerate=flags)


def _raw_scores_task(args):
    graph, lo, hi = args
    return _raw_scores_range(graph, lo, hi)


def _raw_scores_range(graph: WanGraph, lo: int, hi: int) -> tuple[dict[str, float], set[str]]:
    """Raw entropies for seeds ``lo..hi-1`` via the vectorized pattern sweep.

    Same quantity as :func:`expected_force`, computed from closed forms:
    with W(v) the weighted degree, the outward weight of the infected pair
    {s,a} is W(s)+W(a)-2w(s,a), and the cluster force of {s,a,b} is
    W(s)+W(a)+W(b) minus twice the weight of the cluster's internal edges.
    """
    nbr_idx, nbr_w, wdeg = graph.csr()
    n = graph.n_nodes
    adjacency = _sparse_adjacency(graph)
    raws: dict[str, float] = {}
    degenerate: set[str] = set()
    dense_row = np.zeros(n, dtype=np.float64)
    for s in range(lo, hi):
        iata = graph.iatas[s]
        nbrs = nbr_idx[s]
        k = len(nbrs)
        if k == 0:
            raws[iata] = 0.0
            degenerate.add(iata)
            continue
        w_s = wdeg[s]
        wts_s = nbr_w[s]
        dense_row[nbrs] = wts_s
        # w(a,b) for every pair of seed neighbors, needed for cluster FOIs
        sub = adjacency[nbrs][:, nbrs].toarray() if k > 1 else np.zeros((1, 1))
        branches: list[np.ndarray] = []
        for ai in range(k):
            a = int(nbrs[ai])
            w_sa = wts_s[ai]
            omega = w_s + wdeg[a] - 2.0 * w_sa
            if omega <= 0.0:
                continue  # isolated dyad
            scale = w_sa / (w_s * omega)
            # second edge from the seed: b in N(s), b != a
            foi_b = w_s + wdeg[a] + wdeg[nbrs] - 2.0 * (w_sa + wts_s + sub[ai])
            d_b = scale * wts_s * foi_b
            d_b[ai] = 0.0
            # second edge from a: y in N(a), y != s
            nbrs_a = nbr_idx[a]
            wts_a = nbr_w[a]
            foi_y = w_s + wdeg[a] + wdeg[nbrs_a] - 2.0 * (w_sa + dense_row[nbrs_a] + wts_a)
            d_y = scale * wts_a * foi_y
            d_y[nbrs_a == s] = 0.0
            branches.append(d_b)
            branches.append(d_y)
        dense_row[nbrs] = 0.0
        if branches:
            d = np.concatenate(branches)
            # exact FOI is never negative; clip pure roundoff residue
            np.maximum(d, 0.0, out=d)
            live = d[d > 0.0]
        else:
            live = np.empty(0)
        total = float(live.sum())
        if total > 0.0:
            shares = live / total
            raws[iata] = float(-(shares * np.log(shares)).sum())
        else:
            raws[iata] = 0.0
            degenerate.add(iata)
    return raws, degenerate


def _sparse_adjacency(graph: WanGraph) -> csr_matrix:
    nbr_idx, nbr_w, _ = graph.csr()
    indptr = np.zeros(graph.n_nodes + 1, dtype=np.int64)
    np.cumsum([len(ix) for ix in nbr_idx], out=indptr[1:])
    indices = np.concatenate(nbr_idx) if graph.n_nodes else np.empty(0, dtype=np.int64)
    data = np.concatenate(nbr_w) if graph.n_nodes else np.empty(0)
    return csr_matrix((data, indices, indptr), shape=(graph.n_nodes, graph.n_nodes))
