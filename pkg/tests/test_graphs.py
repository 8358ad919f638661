"""Graph container, normalized Laplacian, and edge-list format."""

import numpy as np
import pytest

from wavegp import (
    Graph,
    build_graph,
    dirichlet_energy,
    eigendecompose,
    normalized_laplacian,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)
from conftest import random_connected_graph


def triangle():
    return build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


class TestBuildGraph:
    def test_counts_and_degrees(self):
        g = triangle()
        assert g.n_nodes == 3
        assert g.n_edges == 3
        np.testing.assert_allclose(g.degrees, [2.0, 2.0, 2.0])

    def test_edges_canonicalized(self):
        g = build_graph(3, [(2, 0, 1.5)])
        assert g.edges == ((0, 2, 1.5),)

    def test_adjacency_symmetric(self, rng):
        g = random_connected_graph(rng, 25, weighted=True)
        a = g.adjacency.toarray()
        np.testing.assert_allclose(a, a.T)

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            build_graph(3, [(1, 1, 1.0)])

    def test_rejects_duplicate_edge_either_orientation(self):
        with pytest.raises(ValueError):
            build_graph(3, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_rejects_bad_weight_and_range(self):
        with pytest.raises(ValueError):
            build_graph(3, [(0, 1, 0.0)])
        with pytest.raises(ValueError):
            build_graph(3, [(0, 5, 1.0)])

    def test_connectivity_flag(self):
        g = build_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        assert not g.is_connected()
        assert triangle().is_connected()


class TestNormalizedLaplacian:
    def test_triangle_spectrum(self):
        # complete graph K3: eigenvalues 0 and 3/2 twice
        lap = normalized_laplacian(triangle())
        dec = eigendecompose(lap)
        np.testing.assert_allclose(dec.eigenvalues, [0.0, 1.5, 1.5], atol=1e-12)

    def test_path_two_spectrum(self):
        g = build_graph(2, [(0, 1, 1.0)])
        dec = eigendecompose(normalized_laplacian(g))
        np.testing.assert_allclose(dec.eigenvalues, [0.0, 2.0], atol=1e-12)

    def test_spectrum_in_unit_to_two_band(self, rng):
        for _ in range(5):
            g = random_connected_graph(rng, 30, p=0.2, weighted=True)
            dec = eigendecompose(normalized_laplacian(g))
            assert dec.eigenvalues.min() >= -1e-10
            assert dec.eigenvalues.max() <= 2.0 + 1e-10

    def test_zero_eigenvalue_multiplicity_counts_components(self):
        g = build_graph(6, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)])
        dec = eigendecompose(normalized_laplacian(g))
        assert int(np.sum(np.abs(dec.eigenvalues) < 1e-10)) == 2

    def test_rejects_isolated_node(self):
        g = build_graph(3, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            normalized_laplacian(g)

    def test_matvec_matches_dense(self, rng):
        g = random_connected_graph(rng, 20, weighted=True)
        lap = normalized_laplacian(g)
        x = rng.normal(size=20)
        np.testing.assert_allclose(lap.matvec(x), lap.matrix @ x, atol=1e-12)

    def test_eigenvectors_orthonormal_and_reconstruct(self, rng):
        g = random_connected_graph(rng, 15)
        lap = normalized_laplacian(g)
        dec = eigendecompose(lap)
        u = dec.eigenvectors
        np.testing.assert_allclose(u.T @ u, np.eye(15), atol=1e-10)
        rebuilt = (u * dec.eigenvalues) @ u.T
        np.testing.assert_allclose(rebuilt, lap.matrix.toarray(), atol=1e-10)

    def test_size_guard(self, rng):
        g = random_connected_graph(rng, 12)
        with pytest.raises(ValueError):
            eigendecompose(normalized_laplacian(g), size_guard=10)


def test_dirichlet_energy_constant_vector_on_regular_graph():
    # on a regular graph D^{-1/2}1 is the null eigenvector
    lap = normalized_laplacian(triangle())
    assert dirichlet_energy(lap, np.ones(3)) == pytest.approx(0.0, abs=1e-12)


def test_dirichlet_energy_nonnegative(rng):
    g = random_connected_graph(rng, 18, weighted=True)
    lap = normalized_laplacian(g)
    for _ in range(10):
        assert dirichlet_energy(lap, rng.normal(size=18)) >= -1e-12


class TestEdgeListFormat:
    def test_parse_header_weights_comments(self):
        text = "# comment line\nn 3\n0 1\n1 2 2.5\n"
        g = parse_edge_list(text)
        assert g.n_nodes == 3
        assert g.edges == ((0, 1, 1.0), (1, 2, 2.5))

    def test_round_trip(self, tmp_path, rng):
        g = random_connected_graph(rng, 12, weighted=True)
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        back = read_edge_list(path)
        assert back.n_nodes == g.n_nodes
        assert back.edges == g.edges

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_edge_list("n 2\n0 1 2 3\n")  # too many fields
        with pytest.raises(ValueError):
            parse_edge_list("n\n0 1\n")  # malformed header
        with pytest.raises(ValueError):
            parse_edge_list("0 one\n")  # non-integer endpoint

    def test_parse_infers_node_count_without_header(self):
        g = parse_edge_list("0 1\n1 4 0.5\n")
        assert g.n_nodes == 5
        assert g.edges == ((0, 1, 1.0), (1, 4, 0.5))
