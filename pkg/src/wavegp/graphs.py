"""Graph containers, normalized Laplacians, and basic graph-signal utilities.

All spectral machinery in this package operates on the symmetric normalized
Laplacian ``L = D^{-1/2} (D - A) D^{-1/2}``, whose eigenvalues lie in
``[0, 2]``.  Graphs are undirected and weighted; the containers are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

Edge = tuple[int, int, float]

# Dense eigendecomposition is O(N^3); above this size callers should switch
# to the polynomial path.
DEFAULT_EIG_GUARD = 5000


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph with cached adjacency and degrees.

    Attributes:
        n_nodes: number of nodes; node ids are ``0 .. n_nodes - 1``.
        edges: canonical edge list of ``(i, j, weight)`` with ``i < j``.
        adjacency: sparse symmetric adjacency matrix with zero diagonal.
        degrees: weighted degree of each node (row sums of the adjacency).
    """

    n_nodes: int
    edges: tuple[Edge, ...]
    adjacency: sp.csr_array
    degrees: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        n_comp, _ = csgraph.connected_components(self.adjacency, directed=False)
        return bool(n_comp == 1)


@dataclass(frozen=True, eq=False)
class NormalizedLaplacian:
    """Symmetric normalized Laplacian of a graph, spectrum in [0, 2]."""

    matrix: sp.csr_array
    source: Graph

    @property
    def n_nodes(self) -> int:
        return self.source.n_nodes

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply the Laplacian to a vector or a matrix of column signals."""
        return self.matrix @ x


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Full eigendecomposition of a normalized Laplacian.

    Attributes:
        eigenvalues: ascending eigenvalues, length N.
        eigenvectors: orthonormal matrix with eigenvectors as columns, sign
            fixed so the largest-magnitude entry of each column is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.eigenvalues)


def build_graph(n_nodes: int, edges: list[Edge] | tuple[Edge, ...]) -> Graph:
    """Build a validated undirected graph from an edge list.

    Args:
        n_nodes: number of nodes.
        edges: iterable of ``(i, j, weight)``; each undirected pair may
            appear at most once, in either orientation.

    Raises:
        ValueError: on out-of-range indices, self-loops, duplicate edges,
            or non-positive weights.
    """
    if n_nodes <= 0:
        raise ValueError(f"n_nodes must be positive, got {n_nodes}")

    canonical: list[Edge] = []
    seen: set[tuple[int, int]] = set()
    for i, j, w in edges:
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise ValueError(f"edge ({i}, {j}) out of range for {n_nodes} nodes")
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        if w <= 0:
            raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate undirected edge {key}")
        seen.add(key)
        canonical.append((key[0], key[1], w))

    canonical.sort()
    if canonical:
        ii = np.array([e[0] for e in canonical])
        jj = np.array([e[1] for e in canonical])
        ww = np.array([e[2] for e in canonical])
        rows = np.concatenate([ii, jj])
        cols = np.concatenate([jj, ii])
        vals = np.concatenate([ww, ww])
    else:
        rows = cols = np.zeros(0, dtype=int)
        vals = np.zeros(0)
    adjacency = sp.csr_array(
        (vals, (rows, cols)), shape=(n_nodes, n_nodes), dtype=np.float64
    )
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    return Graph(
        n_nodes=n_nodes,
        edges=tuple(canonical),
        adjacency=adjacency,
        degrees=degrees,
    )


def normalized_laplacian(g: Graph) -> NormalizedLaplacian:
    """Compute ``D^{-1/2} (D - A) D^{-1/2}`` for a graph without isolated nodes.

    The result has unit diagonal and eigenvalues in ``[0, 2]``.

    Raises:
        ValueError: if any node has zero degree (``D^{-1/2}`` undefined).
    """
    if np.any(g.degrees <= 0):
        isolated = np.flatnonzero(g.degrees <= 0)
        raise ValueError(f"isolated nodes (zero degree): {isolated.tolist()}")
    d_inv_sqrt = 1.0 / np.sqrt(g.degrees)
    # L = I - D^{-1/2} A D^{-1/2}, built sparsely.
    a_norm = g.adjacency.multiply(d_inv_sqrt[:, None]).multiply(d_inv_sqrt[None, :])
    lap = sp.identity(g.n_nodes, format="csr") - a_norm
    return NormalizedLaplacian(matrix=sp.csr_array(lap), source=g)


def eigendecompose(
    lap: NormalizedLaplacian, size_guard: int = DEFAULT_EIG_GUARD
) -> SpectralDecomposition:
    """Dense symmetric eigendecomposition of the normalized Laplacian.

    Args:
        lap: the Laplacian to decompose.
        size_guard: maximum node count accepted for the O(N^3) dense solve;
            larger graphs must use the polynomial approximation path.

    Raises:
        ValueError: if the graph exceeds ``size_guard``.
    """
    n = lap.n_nodes
    if n > size_guard:
        raise ValueError(
            f"graph has {n} nodes, above the dense eigendecomposition guard "
            f"of {size_guard}; use the polynomial path instead"
        )
    dense = lap.matrix.toarray()
    eigenvalues, eigenvectors = np.linalg.eigh(dense)
    # Deterministic sign: largest-magnitude entry of each column positive.
    for col in range(n):
        u = eigenvectors[:, col]
        if u[np.argmax(np.abs(u))] < 0:
            eigenvectors[:, col] = -u
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def dirichlet_energy(lap: NormalizedLaplacian, f: np.ndarray) -> float:
    """Quadratic form ``f^T L f`` measuring the non-smoothness of a signal."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (lap.n_nodes,):
        raise ValueError(
            f"signal length {f.shape} does not match {lap.n_nodes} nodes"
        )
    return float(f @ (lap.matrix @ f))


def parse_edge_list(text: str) -> Graph:
    """Parse the plain-text edge-list format into a graph.

    Format: one edge per line, ``i j [weight]``, whitespace-delimited.
    ``#`` starts a comment.  A header line ``n <N>`` fixes the node count;
    otherwise it is inferred as the maximum index plus one.
    """
    n_nodes: int | None = None
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: malformed header {raw!r}")
            n_nodes = int(parts[1])
            continue
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'i j [weight]', got {raw!r}")
        i, j = int(parts[0]), int(parts[1])
        w = float(parts[2]) if len(parts) == 3 else 1.0
        edges.append((i, j, w))
    if n_nodes is None:
        if not edges:
            raise ValueError("empty edge list with no 'n <N>' header")
        n_nodes = max(max(i, j) for i, j, _ in edges) + 1
    return build_graph(n_nodes, edges)


def read_edge_list(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: Graph, include_header: bool = True) -> str:
    """Serialize a graph to the edge-list text format."""
    lines = []
    if include_header:
        lines.append(f"n {g.n_nodes}")
    for i, j, w in g.edges:
        if w == 1.0:
            lines.append(f"{i} {j}")
        else:
            lines.append(f"{i} {j} {w!r}")
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g))
