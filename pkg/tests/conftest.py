import numpy as np
import pytest

from gossipnet.graph import Graph

# filled by tests/test_acceptance.py; echoed after the run so the per-criterion
# verdicts survive pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def k2():
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def k4():
    return Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


def random_small_graph(rng: np.random.Generator, n_max: int = 8) -> Graph:
    """Random graph with 2..n_max nodes and random edge density."""
    n = int(rng.integers(2, n_max + 1))
    p = rng.uniform(0.1, 0.9)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return Graph.from_edges(n, edges)


def brute_force_metrics(g: Graph):
    """Independent oracle for the three local metrics.

    Triangles by enumerating all vertex triples; neighbour-pair distances
    by Floyd-Warshall on the induced subgraph.
    """
    adj = [set(a) for a in g.adjacency]
    deg = np.array([len(a) for a in adj], dtype=float)
    clu = np.zeros(g.n)
    eff = np.zeros(g.n)
    for v in range(g.n):
        k = len(adj[v])
        if k < 2:
            continue
        tri = 0
        for a in range(g.n):
            for b in range(a + 1, g.n):
                for c in range(b + 1, g.n):
                    if v in (a, b, c):
                        x, y = [u for u in (a, b, c) if u != v]
                        if (
                            x in adj[v] and y in adj[v]
                            and y in adj[x]
                        ):
                            tri += 1
        clu[v] = 2.0 * tri / (k * (k - 1))
        nbrs = sorted(adj[v])
        size = len(nbrs)
        inf = float("inf")
        dist = [[inf] * size for _ in range(size)]
        for i in range(size):
            dist[i][i] = 0.0
        for i in range(size):
            for j in range(size):
                if nbrs[j] in adj[nbrs[i]]:
                    dist[i][j] = 1.0
        for m in range(size):
            for i in range(size):
                for j in range(size):
                    if dist[i][m] + dist[m][j] < dist[i][j]:
                        dist[i][j] = dist[i][m] + dist[m][j]
        total = 0.0
        for i in range(size):
            for j in range(i + 1, size):
                if dist[i][j] < inf:
                    total += 1.0 / dist[i][j]
        eff[v] = total / (size * (size - 1) / 2.0)
    return deg, clu, eff


def all_pairs_bfs_mean_distance(g: Graph) -> float:
    """Average shortest-path length over all connected ordered pairs."""
    from collections import deque

    total = 0.0
    pairs = 0
    for src in range(g.n):
        dist = [-1] * g.n
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in g.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        for dst in range(g.n):
            if dst != src and dist[dst] > 0:
                total += dist[dst]
                pairs += 1
    return total / pairs
