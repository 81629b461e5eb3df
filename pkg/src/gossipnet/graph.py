"""Undirected simple graphs, random-graph generators, and topology changes.

Graphs are immutable: ``n`` nodes labelled 0..n-1 and a per-node tuple of
sorted neighbour indices. Four random families are supported (Erdos-Renyi,
geometric random, Watts-Strogatz small world, Holme-Kim scale free with
tunable clustering), plus random rewiring and independent link failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Graph",
    "GraphSpec",
    "GraphError",
    "GenerationError",
    "DisconnectedGraphError",
    "generate",
    "rewire_random",
    "fail_links",
    "is_connected",
    "is_bipartite",
    "grg_radius_for_degree",
    "read_edgelist",
    "write_edgelist",
]

FAMILIES = ("er", "grg", "ws", "sf")

# attempts with fresh sub-seeds before giving up on a connected,
# non-bipartite sample
MAX_GENERATION_ATTEMPTS = 100


class GraphError(ValueError):
    """Invalid graph data or parameters."""


class GenerationError(GraphError):
    """No connected non-bipartite graph found within the retry budget."""


class DisconnectedGraphError(GraphError):
    """A topology change disconnected the graph.

    The resulting graph is attached as ``graph`` so the caller can inspect
    it or retry with another seed.
    """

    def __init__(self, message: str, graph: "Graph"):
        super().__init__(message)
        self.graph = graph


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph as adjacency lists.

    adjacency[i] is the sorted tuple of neighbours of node i; symmetry,
    absence of self-loops and of duplicates are enforced at construction.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"node count must be >= 1, got {self.n}")
        if len(self.adjacency) != self.n:
            raise GraphError("adjacency length does not match node count")
        for i, nbrs in enumerate(self.adjacency):
            prev = -1
            for j in nbrs:
                if j == i:
                    raise GraphError(f"self-loop at node {i}")
                if not 0 <= j < self.n:
                    raise GraphError(f"neighbour {j} of node {i} out of range")
                if j <= prev:
                    raise GraphError(f"adjacency[{i}] not sorted or has duplicates")
                prev = j
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i not in self.adjacency[j]:
                    raise GraphError(f"edge ({i},{j}) not symmetric")

    @staticmethod
    def from_edges(n: int, edges) -> "Graph":
        """Build a graph from an iterable of (i, j) pairs (duplicates merged)."""
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise GraphError(f"self-loop ({i},{j})")
            nbrs[i].add(j)
            nbrs[j].add(i)
        return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once, as (i, j) with i < j."""
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i < j:
                    yield (i, j)

    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency in CSR form: (indptr, neighbours), both int64."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, nbrs in enumerate(self.adjacency):
            indptr[i + 1] = indptr[i] + len(nbrs)
        flat = np.fromiter(
            (j for nbrs in self.adjacency for j in nbrs),
            dtype=np.int64,
            count=int(indptr[-1]),
        )
        return indptr, flat


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for one random graph: family, size, parameters, seed.

    Family parameters:
      er:  p (edge probability)
      grg: radius, or target_degree (radius back-solved)
      ws:  k (even ring degree), pr (rewire probability)
      sf:  m (attachments per node), pt (triad-formation probability)
    """

    family: str
    n: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GraphError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.n < 2:
            raise GraphError(f"need n >= 2, got {self.n}")
        p = self.params
        if self.family == "er":
            _check_prob(p.get("p"), "p")
        elif self.family == "grg":
            if "radius" in p:
                if p["radius"] <= 0:
                    raise GraphError("radius must be positive")
            elif "target_degree" in p:
                if p["target_degree"] <= 0:
                    raise GraphError("target_degree must be positive")
            else:
                raise GraphError("grg needs radius or target_degree")
        elif self.family == "ws":
            k = p.get("k")
            if k is None or k < 2 or k % 2 != 0 or k >= self.n:
                raise GraphError("ws needs even ring degree k with 2 <= k < n")
            _check_prob(p.get("pr"), "pr")
        elif self.family == "sf":
            m = p.get("m")
            if m is None or m < 1 or m >= self.n:
                raise GraphError("sf needs attachment count m with 1 <= m < n")
            _check_prob(p.get("pt"), "pt")


def _check_prob(value, name: str):
    if value is None or not 0.0 <= value <= 1.0:
        raise GraphError(f"{name} must be a probability in [0,1], got {value}")


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def generate(spec: GraphSpec) -> Graph:
    """Draw a connected, non-bipartite graph from the spec's family.

    Deterministic given the spec seed. Samples are retried with fresh
    sub-seeds until connected and non-bipartite; raises GenerationError
    once the attempt budget is exhausted (parameters too sparse).
    """
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _rng(spec.seed, attempt)
        g = _SAMPLERS[spec.family](spec, rng)
        if is_connected(g) and not is_bipartite(g):
            return g
    raise GenerationError(
        f"no connected non-bipartite {spec.family} graph in "
        f"{MAX_GENERATION_ATTEMPTS} attempts (n={spec.n}, params={spec.params})"
    )


def _sample_er(spec: GraphSpec, rng: np.random.Generator) -> Graph:
    n, p = spec.n, spec.params["p"]
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.shape[0]) < p
    return Graph.from_edges(n, zip(iu[mask].tolist(), ju[mask].tolist()))


def _sample_grg(spec: GraphSpec, rng: np.random.Generator) -> Graph:
    n = spec.n
    radius = spec.params.get("radius")
    if radius is None:
        radius = grg_radius_for_degree(n, spec.params["target_degree"])
    pts = rng.random((n, 2))
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    iu, ju = np.triu_indices(n, k=1)
    mask = d2[iu, ju] < radius * radius
    return Graph.from_edges(n, zip(iu[mask].tolist(), ju[mask].tolist()))


def _sample_ws(spec: GraphSpec, rng: np.random.Generator) -> Graph:
    n, k, pr = spec.n, spec.params["k"], spec.params["pr"]
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for d in range(1, k // 2 + 1):
            j = (i + d) % n
            nbrs[i].add(j)
            nbrs[j].add(i)
    # Watts-Strogatz pass: for each lattice edge keep the near endpoint and
    # rewire the far one with probability pr
    for d in range(1, k // 2 + 1):
        for i in range(n):
            j = (i + d) % n
            if rng.random() >= pr:
                continue
            if len(nbrs[i]) >= n - 1:
                continue
            w = int(rng.integers(0, n))
            while w == i or w in nbrs[i]:
                w = int(rng.integers(0, n))
            nbrs[i].discard(j)
            nbrs[j].discard(i)
            nbrs[i].add(w)
            nbrs[w].add(i)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


def _sample_sf(spec: GraphSpec, rng: np.random.Generator) -> Graph:
    """Growing scale-free graph: preferential attachment with a
    triad-formation step taken with probability pt (Holme-Kim)."""
    n, m, pt = spec.n, spec.params["m"], spec.params["pt"]
    nbrs: list[set[int]] = [set() for _ in range(n)]
    repeated: list[int] = []  # nodes repeated once per incident edge
    # seed clique on the first m+1 nodes
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            nbrs[i].add(j)
            nbrs[j].add(i)
            repeated.extend((i, j))
    for v in range(m + 1, n):
        targets: set[int] = set()
        last_pa = -1
        while len(targets) < m:
            do_triad = last_pa >= 0 and rng.random() < pt
            if do_triad:
                candidates = [u for u in nbrs[last_pa] if u != v and u not in targets]
                if candidates:
                    u = candidates[int(rng.integers(0, len(candidates)))]
                    targets.add(u)
                    continue
                # saturated neighbourhood: fall through to attachment
            u = repeated[int(rng.integers(0, len(repeated)))]
            if u != v and u not in targets:
                targets.add(u)
                last_pa = u
        for u in targets:
            nbrs[v].add(u)
            nbrs[u].add(v)
            repeated.extend((v, u))
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


_SAMPLERS = {"er": _sample_er, "grg": _sample_grg, "ws": _sample_ws, "sf": _sample_sf}


def grg_radius_for_degree(n: int, target_degree: float) -> float:
    """Radius giving the requested mean degree for n uniform points in the
    unit square.

    Uses the closed-form expected area of a radius-r disk around a uniform
    point clipped to the square, A(r) = pi r^2 - 8 r^3 / 3 + r^4 / 2
    (valid for r <= 1), and solves (n-1) A(r) = target_degree by bisection.
    """
    if not 0 < target_degree <= n - 1:
        raise GraphError(f"target degree must be in (0, n-1], got {target_degree}")

    def mean_deg(r: float) -> float:
        area = math.pi * r * r - (8.0 / 3.0) * r**3 + 0.5 * r**4
        return (n - 1) * area

    lo, hi = 0.0, 1.0
    if mean_deg(hi) < target_degree:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_deg(mid) < target_degree:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rewire_random(g: Graph, pr: float, seed: int) -> Graph:
    """Rewire each edge independently with probability pr, keeping the
    lower-index endpoint and moving the other to a uniform random node
    (no self-loops, no duplicate edges).

    Raises DisconnectedGraphError (carrying the result) if rewiring
    disconnects the graph; the caller may retry with another seed.
    """
    _check_prob(pr, "pr")
    rng = _rng(seed)
    nbrs = [set(a) for a in g.adjacency]
    for i, j in list(g.edges()):
        if rng.random() >= pr:
            continue
        if j not in nbrs[i]:  # already moved by an earlier rewire
            continue
        if len(nbrs[i]) >= g.n - 1:
            continue
        w = int(rng.integers(0, g.n))
        while w == i or w in nbrs[i]:
            w = int(rng.integers(0, g.n))
        nbrs[i].discard(j)
        nbrs[j].discard(i)
        nbrs[i].add(w)
        nbrs[w].add(i)
    out = Graph(g.n, tuple(tuple(sorted(s)) for s in nbrs))
    if not is_connected(out):
        raise DisconnectedGraphError("rewiring disconnected the graph", out)
    return out


def fail_links(g: Graph, f: float, seed: int) -> Graph:
    """Remove each edge independently with probability f.

    The result may be disconnected; callers check via is_connected.
    """
    _check_prob(f, "f")
    rng = _rng(seed)
    kept = [e for e in g.edges() if rng.random() >= f]
    return Graph.from_edges(g.n, kept)


def is_connected(g: Graph) -> bool:
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        i = stack.pop()
        for j in g.adjacency[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                stack.append(j)
    return count == g.n


def is_bipartite(g: Graph) -> bool:
    color = np.full(g.n, -1, dtype=np.int8)
    for start in range(g.n):
        if color[start] >= 0:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            i = stack.pop()
            for j in g.adjacency[i]:
                if color[j] < 0:
                    color[j] = 1 - color[i]
                    stack.append(j)
                elif color[j] == color[i]:
                    return False
    return True


def write_edgelist(g: Graph, path) -> None:
    """Write the `n <count>` header then one `i j` line per edge (i < j)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n {g.n}\n")
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")


def read_edgelist(path) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "n":
            raise GraphError(f"{path}: expected header 'n <count>'")
        n = int(header[1])
        edges = []
        seen = set()
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'i j'")
            i, j = int(parts[0]), int(parts[1])
            if not (0 <= i < j < n):
                raise GraphError(f"{path}:{lineno}: edge ({i},{j}) violates 0 <= i < j < n")
            if (i, j) in seen:
                raise GraphError(f"{path}:{lineno}: duplicate edge ({i},{j})")
            seen.add((i, j))
            edges.append((i, j))
    return Graph.from_edges(n, edges)
