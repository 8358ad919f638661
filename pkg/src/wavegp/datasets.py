"""Node-classification dataset ingestion and feature transforms.

Datasets load from a plain-text bundle directory:

    edges.txt      edge list in the graph text format ("n N" header, "i j [w]")
    features.csv   node_id, then dense comma-separated values or sparse
                   "col:val" pairs
    labels.csv     node_id, class index
    splits.json    {"train": [...], "val": [...], "test": [...]}
    meta.json      {"name": ..., "num_classes": ..., "num_features": optional}

Bag-of-words features are reweighted with a smoothed TFIDF (term frequency
normalized by row sum, idf = ln(N / (1 + df)) + 1, rows scaled to unit
Euclidean norm), and turned into a Gram matrix with a polynomial kernel.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .graphs import Graph, read_edge_list, write_edge_list


@dataclass(frozen=True, eq=False)
class NodeDataset:
    """A graph with node features, labels, and a train/val/test split."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train_indices: np.ndarray
    val_indices: np.ndarray
    test_indices: np.ndarray
    name: str
    n_classes: int

    def __post_init__(self):
        n = self.graph.n_nodes
        if self.features.shape[0] != n:
            raise ValueError(f"feature matrix has {self.features.shape[0]} rows for {n} nodes")
        if self.labels.shape != (n,):
            raise ValueError("labels must cover every node")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError("label outside [0, num_classes)")
        splits = [self.train_indices, self.val_indices, self.test_indices]
        combined = np.concatenate(splits)
        if combined.size and (combined.min() < 0 or combined.max() >= n):
            raise ValueError("split index out of range")
        if len(np.unique(combined)) != combined.size:
            raise ValueError("split sets must be disjoint")
        if self.train_indices.size == 0:
            raise ValueError("train split is empty")
        present = np.unique(self.labels[self.train_indices])
        if len(present) != self.n_classes:
            missing = sorted(set(range(self.n_classes)) - set(present.tolist()))
            raise ValueError(f"classes {missing} absent from the train split")

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def _parse_feature_rows(path: Path, n_nodes: int, n_features: int | None) -> np.ndarray:
    rows: dict[int, list[tuple[int, float]]] = {}
    max_col = -1
    dense_width: int | None = None
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        node = int(parts[0])
        if not 0 <= node < n_nodes:
            raise ValueError(f"feature row for node {node} out of range")
        if node in rows:
            raise ValueError(f"duplicate feature row for node {node}")
        if any(":" in p for p in parts[1:]):
            pairs = []
            for p in parts[1:]:
                if not p:
                    continue
                col_s, val_s = p.split(":")
                col = int(col_s)
                pairs.append((col, float(val_s)))
                max_col = max(max_col, col)
            rows[node] = pairs
        else:
            vals = [float(p) for p in parts[1:]]
            if dense_width is None:
                dense_width = len(vals)
            elif dense_width != len(vals):
                raise ValueError("dense feature rows have inconsistent width")
            rows[node] = list(enumerate(vals))
            max_col = max(max_col, len(vals) - 1)
    if len(rows) != n_nodes:
        raise ValueError(f"features cover {len(rows)} of {n_nodes} nodes")
    width = n_features if n_features is not None else max_col + 1
    x = np.zeros((n_nodes, width), dtype=np.float64)
    for node, pairs in rows.items():
        for col, val in pairs:
            if col >= width:
                raise ValueError(f"feature column {col} exceeds declared width {width}")
            x[node, col] = val
    return x


def load_dataset(path, format: str = "bundle") -> NodeDataset:
    """Load a dataset bundle directory; see the module docstring for layout."""
    if format != "bundle":
        raise ValueError(f"unknown dataset format {format!r}")
    root = Path(path)
    for fname in ("edges.txt", "features.csv", "labels.csv", "splits.json", "meta.json"):
        if not (root / fname).exists():
            raise FileNotFoundError(f"bundle is missing {fname}: {root / fname}")

    graph = read_edge_list(root / "edges.txt")
    meta = json.loads((root / "meta.json").read_text())
    n_classes = int(meta["num_classes"])
    n_features = meta.get("num_features")
    features = _parse_feature_rows(
        root / "features.csv", graph.n_nodes, None if n_features is None else int(n_features)
    )

    labels = np.full(graph.n_nodes, -1, dtype=np.int64)
    for line in (root / "labels.csv").read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        node_s, cls_s = [p.strip() for p in line.split(",")]
        node = int(node_s)
        if labels[node] != -1:
            raise ValueError(f"duplicate label for node {node}")
        labels[node] = int(cls_s)
    if np.any(labels == -1):
        raise ValueError("labels missing for some nodes")

    splits = json.loads((root / "splits.json").read_text())
    return NodeDataset(
        graph=graph,
        features=features,
        labels=labels,
        train_indices=np.asarray(sorted(splits["train"]), dtype=np.int64),
        val_indices=np.asarray(sorted(splits["val"]), dtype=np.int64),
        test_indices=np.asarray(sorted(splits["test"]), dtype=np.int64),
        name=str(meta.get("name", root.name)),
        n_classes=n_classes,
    )


def write_bundle(dataset: NodeDataset, path) -> None:
    """Write a dataset to the bundle directory format (inverse of load)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    write_edge_list(dataset.graph, root / "edges.txt")
    lines = []
    for node in range(dataset.graph.n_nodes):
        row = dataset.features[node]
        nz = np.nonzero(row)[0]
        # Sparse form when it pays off; loader accepts either.
        if len(nz) * 2 < len(row):
            cells = [f"{c}:{row[c]:.10g}" for c in nz]
        else:
            cells = [f"{v:.10g}" for v in row]
        lines.append(",".join([str(node)] + cells))
    (root / "features.csv").write_text("\n".join(lines) + "\n")
    (root / "labels.csv").write_text(
        "\n".join(f"{i},{int(c)}" for i, c in enumerate(dataset.labels)) + "\n"
    )
    (root / "splits.json").write_text(json.dumps({
        "train": dataset.train_indices.tolist(),
        "val": dataset.val_indices.tolist(),
        "test": dataset.test_indices.tolist(),
    }))
    (root / "meta.json").write_text(json.dumps({
        "name": dataset.name,
        "num_classes": dataset.n_classes,
        "num_features": dataset.n_features,
    }))


def tfidf(features: np.ndarray) -> np.ndarray:
    """Smoothed TFIDF with unit-norm rows.

    tf is the raw count divided by the row sum; idf_j = ln(N / (1 + df_j)) + 1
    where df_j counts rows with a nonzero entry in column j; the reweighted
    rows are scaled to unit Euclidean norm. All-zero rows stay zero (with a
    warning).
    """
    x = np.asarray(features, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("TFIDF input must be nonnegative")
    row_sums = x.sum(axis=1)
    zero_rows = row_sums == 0
    if np.any(zero_rows):
        warnings.warn(f"{int(zero_rows.sum())} all-zero feature rows kept as zeros")
    tf = np.divide(x, row_sums[:, None], out=np.zeros_like(x), where=row_sums[:, None] > 0)
    df = (x > 0).sum(axis=0)
    idf = np.log(x.shape[0] / (1.0 + df)) + 1.0
    out = tf * idf[None, :]
    norms = np.linalg.norm(out, axis=1)
    return np.divide(out, norms[:, None], out=np.zeros_like(out), where=norms[:, None] > 0)


def polynomial_feature_kernel(
    x: np.ndarray, degree: int, variance: float = 1.0, offset: float = 0.0
) -> np.ndarray:
    """Gram matrix K_ij = variance * (x_i . x_j + offset)^degree.

    Symmetric PSD for offset >= 0 since it is a sum of products of PSD Gram
    powers via the binomial expansion.
    """
    if degree < 1:
        raise ValueError(f"degree must be at least 1, got {degree}")
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    if offset < 0:
        raise ValueError(f"offset must be nonnegative, got {offset}")
    x = np.asarray(x, dtype=np.float64)
    gram = variance * (x @ x.T + offset) ** degree
    return 0.5 * (gram + gram.T)


def random_split(
    dataset: NodeDataset, per_class_train: int, val_size: int, seed: int
) -> NodeDataset:
    """Resample the split: per-class stratified train, uniform val, rest test."""
    rng = np.random.default_rng(seed)
    train: list[int] = []
    for cls in range(dataset.n_classes):
        members = np.nonzero(dataset.labels == cls)[0]
        if len(members) < per_class_train:
            raise ValueError(
                f"class {cls} has {len(members)} nodes, cannot draw {per_class_train}"
            )
        train.extend(rng.choice(members, size=per_class_train, replace=False).tolist())
    train_arr = np.asarray(sorted(train), dtype=np.int64)
    remainder = np.setdiff1d(np.arange(dataset.graph.n_nodes), train_arr)
    if len(remainder) < val_size:
        raise ValueError(f"only {len(remainder)} nodes left for a val split of {val_size}")
    val_arr = np.asarray(sorted(rng.choice(remainder, size=val_size, replace=False)), dtype=np.int64)
    test_arr = np.setdiff1d(remainder, val_arr)
    return replace(
        dataset, train_indices=train_arr, val_indices=val_arr, test_indices=test_arr
    )
