"""Nested random-graph generation and GP-prior label sampling.

Multi-scale graphs come from a recursive construction: sample a coarse
Erdos-Renyi graph, replace each node by a finer Erdos-Renyi block, realize
each coarse edge by connecting node pairs across the two blocks
independently (redrawn until at least one connection exists, so coarse edges
stay meaningful), and repeat per level. The block structure leaves visible
gaps in the Laplacian spectrum, which is what the multi-scale filters key on.

Labels are sampled from the filtered prior: y = W z with z standard normal,
which has the law N(0, W W^T) since W is symmetric.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filters import FilterLike, evaluate_filter
from .graphs import Graph, SpectralDecomposition, build_graph


@dataclass(frozen=True)
class MultiScaleSpec:
    """Nested Erdos-Renyi construction parameters.

    ``levels`` lists (block_size, intra_edge_prob) from finest to coarsest;
    the total node count is the product of the sizes. ``cross_probs[j]``
    is the connection probability for node pairs bridging two level-j blocks
    whose parents are adjacent, so it has one entry per level boundary.
    """

    levels: tuple[tuple[int, float], ...]
    cross_probs: tuple[float, ...]
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ValueError("need at least two levels")
        if len(self.cross_probs) != len(self.levels) - 1:
            raise ValueError(
                f"{len(self.levels)} levels need {len(self.levels) - 1} cross "
                f"probabilities, got {len(self.cross_probs)}"
            )
        for size, prob in self.levels:
            if size < 1:
                raise ValueError(f"block size must be positive, got {size}")
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"edge probability must be in (0, 1], got {prob}")
        for prob in self.cross_probs:
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"cross probability must be in (0, 1], got {prob}")
        probs = [p for _, p in self.levels]
        if probs[0] < max(probs):
            warnings.warn("finest level is usually the densest; check level order")

    @property
    def n_nodes(self) -> int:
        out = 1
        for size, _ in self.levels:
            out *= size
        return out


@dataclass(frozen=True, eq=False)
class LabelSample:
    """One label vector drawn from the filtered prior."""

    values: np.ndarray
    spec: FilterLike
    seed: int


def default_multiscale_spec(seed: int = 0) -> MultiScaleSpec:
    """Desk-scale default: 3 levels of sizes (4, 4, 8), 128 nodes."""
    return MultiScaleSpec(
        levels=((4, 0.9), (4, 0.3), (8, 0.6)),
        cross_probs=(0.15, 0.02),
        seed=seed,
    )


def _expand_level(rng, n_blocks, edges, size, intra_prob, cross_prob):
    """Replace each node by an ER block; bridge old edges by cross pairs."""
    new_edges: list[tuple[int, int, float]] = []
    for b in range(n_blocks):
        base = b * size
        mask = rng.random((size, size)) < intra_prob
        for u in range(size):
            for v in range(u + 1, size):
                if mask[u, v]:
                    new_edges.append((base + u, base + v, 1.0))
    for a, b, _ in edges:
        while True:
            mask = rng.random((size, size)) < cross_prob
            if mask.any():
                break
        us, vs = np.nonzero(mask)
        for u, v in zip(us, vs):
            new_edges.append((a * size + u, b * size + v, 1.0))
    return n_blocks * size, new_edges


def _generate_once(spec: MultiScaleSpec, rng) -> Graph:
    coarse_size, coarse_prob = spec.levels[-1]
    edges: list[tuple[int, int, float]] = []
    mask = rng.random((coarse_size, coarse_size)) < coarse_prob
    for u in range(coarse_size):
        for v in range(u + 1, coarse_size):
            if mask[u, v]:
                edges.append((u, v, 1.0))
    n = coarse_size
    for level_idx in range(len(spec.levels) - 2, -1, -1):
        size, intra_prob = spec.levels[level_idx]
        n, edges = _expand_level(
            rng, n, edges, size, intra_prob, spec.cross_probs[level_idx]
        )
    return build_graph(n, edges)


def generate_multiscale(spec: MultiScaleSpec) -> Graph:
    """Generate a connected nested-ER graph, retrying on disconnection."""
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        g = _generate_once(spec, rng)
        if g.is_connected():
            return g
    raise RuntimeError(
        f"no connected graph within {spec.max_retries} attempts; "
        "raise the edge probabilities"
    )


def sample_labels(
    dec: SpectralDecomposition, phi: FilterLike, seed: int
) -> LabelSample:
    """Draw y = W z with z ~ N(0, I), equal in law to N(0, W W^T)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dec.n_nodes)
    g = evaluate_filter(phi, dec.eigenvalues)
    values = (dec.eigenvectors * g) @ (dec.eigenvectors.T @ z)
    return LabelSample(values=values, spec=phi, seed=seed)


def split_nodes(
    n: int, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint train/test partition covering all nodes.

    Train size is the round-half-up of n * fraction, clamped so both sides
    keep at least one node.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    if n < 2:
        raise ValueError(f"cannot split {n} nodes into two nonempty sets")
    n_train = int(np.floor(n * train_fraction + 0.5))
    n_train = max(1, min(n - 1, n_train))
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def write_labels_csv(values: np.ndarray, path) -> None:
    """Write labels as 'node,value' rows."""
    lines = [f"{i},{v:.12g}" for i, v in enumerate(np.asarray(values))]
    Path(path).write_text("\n".join(lines) + "\n")
