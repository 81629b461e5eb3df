"""Per-node graph metrics: degree, clustering coefficient, local efficiency.

These are the three quantities nodes can compute from their immediate
neighbourhood and then average across the network to predict convergence
speed. Clustering and efficiency are defined as 0 for nodes of degree < 2.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import Graph

__all__ = [
    "NodeMetrics",
    "MetricAverages",
    "clustering_coefficient",
    "local_efficiency",
    "node_metrics",
    "all_node_metrics",
    "graph_averages",
    "write_metrics_csv",
]


@dataclass(frozen=True)
class NodeMetrics:
    degree: int
    clustering: float
    efficiency: float


@dataclass(frozen=True)
class MetricAverages:
    mean_degree: float
    mean_clustering: float
    mean_efficiency: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_degree, self.mean_clustering, self.mean_efficiency])


def clustering_coefficient(g: Graph, v: int) -> float:
    """Fraction of the node's neighbour pairs that are themselves adjacent."""
    nbrs = g.adjacency[v]
    k = len(nbrs)
    if k < 2:
        return 0.0
    nbr_set = set(nbrs)
    links = 0
    for u in nbrs:
        # count each neighbour pair once via the sorted adjacency
        for w in g.adjacency[u]:
            if w > u and w in nbr_set:
                links += 1
    return 2.0 * links / (k * (k - 1))


def local_efficiency(g: Graph, v: int) -> float:
    """Mean inverse shortest-path distance between neighbours of v, measured
    in the subgraph induced by the neighbours (v removed); disconnected
    pairs contribute 0."""
    nbrs = g.adjacency[v]
    k = len(nbrs)
    if k < 2:
        return 0.0
    index = {u: idx for idx, u in enumerate(nbrs)}
    sub = [
        [index[w] for w in g.adjacency[u] if w in index]
        for u in nbrs
    ]
    total = 0.0
    for src in range(k):
        dist = _bfs_distances(sub, src, k)
        for dst in range(src + 1, k):
            if dist[dst] > 0:
                total += 1.0 / dist[dst]
    return total / (k * (k - 1) / 2.0)


def _bfs_distances(adj: list[list[int]], src: int, size: int) -> list[int]:
    dist = [-1] * size
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def node_metrics(g: Graph, v: int) -> NodeMetrics:
    return NodeMetrics(
        degree=len(g.adjacency[v]),
        clustering=clustering_coefficient(g, v),
        efficiency=local_efficiency(g, v),
    )


def all_node_metrics(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(degree, clustering, efficiency) arrays over all nodes."""
    deg = g.degrees().astype(np.float64)
    clu = np.array([clustering_coefficient(g, v) for v in range(g.n)])
    eff = np.array([local_efficiency(g, v) for v in range(g.n)])
    return deg, clu, eff


def graph_averages(g: Graph) -> MetricAverages:
    deg, clu, eff = all_node_metrics(g)
    return MetricAverages(
        mean_degree=float(deg.mean()),
        mean_clustering=float(clu.mean()),
        mean_efficiency=float(eff.mean()),
    )


def write_metrics_csv(g: Graph, path) -> None:
    deg, clu, eff = all_node_metrics(g)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("node,degree,clustering,efficiency\n")
        for v in range(g.n):
            fh.write(f"{v},{int(deg[v])},{clu[v]:.12g},{eff[v]:.12g}\n")
