import numpy as np
import pytest

from gossipnet.graph import Graph
from gossipnet.metrics import (
    all_node_metrics,
    clustering_coefficient,
    graph_averages,
    local_efficiency,
    node_metrics,
    write_metrics_csv,
)

from conftest import brute_force_metrics, random_small_graph


class TestClustering:
    def test_triangle(self, triangle):
        for v in range(3):
            assert clustering_coefficient(triangle, v) == 1.0

    def test_star_center(self):
        g = Graph.from_edges(6, [(0, i) for i in range(1, 6)])
        assert clustering_coefficient(g, 0) == 0.0

    def test_partial(self):
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
        assert clustering_coefficient(g, 0) == pytest.approx(1 / 3)

    def test_low_degree_zero(self, path3):
        assert clustering_coefficient(path3, 0) == 0.0


class TestLocalEfficiency:
    def test_k4_node(self, k4):
        assert local_efficiency(k4, 0) == 1.0

    def test_star_center(self):
        g = Graph.from_edges(6, [(0, i) for i in range(1, 6)])
        assert local_efficiency(g, 0) == 0.0

    def test_induced_path(self):
        # neighbours of 0 form the path 1-2-3: pair distances 1, 2, 1
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)])
        assert local_efficiency(g, 0) == pytest.approx(5 / 6)

    def test_low_degree_zero(self, path3):
        assert local_efficiency(path3, 0) == 0.0


class TestAverages:
    def test_k4(self, k4):
        av = graph_averages(k4)
        assert (av.mean_degree, av.mean_clustering, av.mean_efficiency) == (3.0, 1.0, 1.0)

    def test_path(self, path3):
        av = graph_averages(path3)
        assert av.mean_degree == pytest.approx(4 / 3)
        assert av.mean_clustering == 0.0
        assert av.mean_efficiency == 0.0


class TestOracle:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            g = random_small_graph(rng)
            deg, clu, eff = all_node_metrics(g)
            odeg, oclu, oeff = brute_force_metrics(g)
            np.testing.assert_allclose(deg, odeg, atol=1e-12)
            np.testing.assert_allclose(clu, oclu, atol=1e-12)
            np.testing.assert_allclose(eff, oeff, atol=1e-12)

    def test_ranges(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = random_small_graph(rng)
            deg, clu, eff = all_node_metrics(g)
            assert np.all((clu >= 0) & (clu <= 1))
            assert np.all((eff >= 0) & (eff <= 1))
            assert np.all((deg >= 0) & (deg <= g.n - 1))

    def test_edge_removal_monotonicity(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = random_small_graph(rng)
            edges = list(g.edges())
            if not edges:
                continue
            i, j = edges[int(rng.integers(len(edges)))]
            reduced = Graph.from_edges(g.n, [e for e in edges if e != (i, j)])
            assert len(reduced.adjacency[i]) == len(g.adjacency[i]) - 1
            assert len(reduced.adjacency[j]) == len(g.adjacency[j]) - 1


def test_node_metrics_record(k4):
    m = node_metrics(k4, 0)
    assert (m.degree, m.clustering, m.efficiency) == (3, 1.0, 1.0)


def test_csv_export(tmp_path, k4):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(k4, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "node,degree,clustering,efficiency"
    assert lines[1] == "0,3,1,1"
    assert len(lines) == 5
