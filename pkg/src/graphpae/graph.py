"""Immutable CSR graph container, file loaders, and synthetic generators."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError, ParseError

MAGIC = b"PAEG"
VERSION = 1


@dataclass(frozen=True)
class Graph:
    """Undirected graph in CSR form; every undirected edge is stored in both
    directions, self-loops once. Immutable after construction."""

    num_nodes: int
    indptr: np.ndarray  # (N+1,) int64
    indices: np.ndarray  # (E,) int64, strictly increasing within a row
    node_features: np.ndarray  # (N, d) float64
    edge_feature_ids: np.ndarray | None = None  # (E,) int64
    labels: np.ndarray | None = None
    split: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.node_features):
            arr.setflags(write=False)

    @property
    def num_edges(self) -> int:
        """Number of stored (directed) edges."""
        return int(self.indices.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.node_features.shape[1])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr).astype(np.float64)

    def edge_endpoints(self):
        """(dst, src) index arrays, one entry per stored edge: row i holds
        edges (i, j) aggregating messages from each neighbor j."""
        dst = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.indptr))
        return dst, self.indices

    def has_edge(self, i: int, j: int) -> bool:
        row = self.indices[self.indptr[i]:self.indptr[i + 1]]
        k = np.searchsorted(row, j)
        return k < row.size and row[k] == j

    def validate(self):
        if np.any(np.diff(self.indptr) < 0):
            raise DataError("CSR row pointers not monotone")
        for i in range(self.num_nodes):
            row = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if row.size and np.any(np.diff(row) <= 0):
                raise DataError(f"column indices not strictly increasing in row {i}")
        if self.node_features.shape[0] != self.num_nodes:
            raise DataError("feature row count != num_nodes")
        if not np.all(np.isfinite(self.node_features)):
            raise DataError("NaN/Inf in node features")
        dst, src = self.edge_endpoints()
        for i, j in zip(dst, src):
            if i != j and not self.has_edge(int(j), int(i)):
                raise DataError(f"edge ({i},{j}) has no reverse")


@dataclass
class GraphCollection:
    """Ordered multi-graph dataset; all graphs share feature dimension."""

    graphs: list[Graph]
    task_kind: str = "graph-classification"
    labels: np.ndarray | None = None  # per-graph targets
    split: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        dims = {g.feature_dim for g in self.graphs}
        if len(dims) > 1:
            raise DataError(f"graphs disagree on feature dimension: {sorted(dims)}")

    def __len__(self):
        return len(self.graphs)


def build_csr(num_nodes: int, pairs, edge_ids=None):
    """Build symmetric CSR from (i, j) pairs. Deduplicates; adds the reverse
    of every non-self-loop edge; self-loops stored once.

    Returns (indptr, indices, dedup_count, edge_id_array).
    """
    seen = {}
    dup = 0
    for k, (i, j) in enumerate(pairs):
        for key in ((i, j), (j, i)) if i != j else ((i, i),):
            if key in seen:
                if key == (i, j):
                    dup += 1
            else:
                seen[key] = None if edge_ids is None else edge_ids[k]
    order = sorted(seen)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    indices = np.empty(len(order), dtype=np.int64)
    ids = np.empty(len(order), dtype=np.int64) if edge_ids is not None else None
    for k, (i, j) in enumerate(order):
        indptr[i + 1] += 1
        indices[k] = j
        if ids is not None:
            ids[k] = seen[(i, j)]
    np.cumsum(indptr, out=indptr)
    return indptr, indices, dup, ids


def load_edge_list(path):
    """Parse a text edge list: one `src dst` pair per line, `#` comments."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected two indices, got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer node index in {line!r}") from None
            if i < 0 or j < 0:
                raise ParseError(f"{path}:{lineno}: negative node index")
            pairs.append((i, j))
    return pairs


def load_csv_matrix(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(x) for x in line.split(",")]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    return np.asarray(rows, dtype=np.float64)


def load_split(path):
    split = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if ":" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'name: i,j,...'")
            name, rest = line.split(":", 1)
            name = name.strip()
            if name not in ("train", "valid", "test"):
                raise ParseError(f"{path}:{lineno}: unknown split name {name!r}")
            idx = [int(x) for x in rest.replace(",", " ").split()] if rest.strip() else []
            split[name] = np.asarray(idx, dtype=np.int64)
    return split


def load_graph(edge_list_path, feature_path, label_path=None, split_path=None):
    """Load a Graph from the text/CSV formats; symmetrizes undirected edges."""
    pairs = load_edge_list(edge_list_path)
    features = load_csv_matrix(feature_path)
    if not np.all(np.isfinite(features)):
        raise DataError(f"{feature_path}: NaN/Inf in features")
    n = features.shape[0]
    for i, j in pairs:
        if i >= n or j >= n:
            raise DataError(f"node index {max(i, j)} >= N={n} in {edge_list_path}")
    indptr, indices, _, _ = build_csr(n, pairs)
    labels = None
    if label_path is not None:
        lab = load_csv_matrix(label_path)
        labels = lab[:, 0] if lab.ndim == 2 and lab.shape[1] == 1 else lab
    split = load_split(split_path) if split_path is not None else None
    return Graph(n, indptr, indices, features, labels=labels, split=split)


def save_graph(g: Graph, path):
    """Canonical binary serialization: PAEG magic, version, N/E/d, CSR, features."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<QQQ", g.num_nodes, g.num_edges, g.feature_dim))
        fh.write(np.ascontiguousarray(g.indptr, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(g.indices, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(g.node_features, dtype="<f8").tobytes())


def load_graph_binary(path) -> Graph:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        n, e, d = struct.unpack("<QQQ", fh.read(24))
        indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<u8").astype(np.int64)
        indices = np.frombuffer(fh.read(8 * e), dtype="<u8").astype(np.int64)
        feats = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
    return Graph(int(n), indptr, indices, feats)


def make_sbm(block_sizes, p_in, p_out, seed, feature_mode="smooth", feature_dim=8):
    """Stochastic block model with block labels.

    `smooth` features are random combinations of the 5 lowest Laplacian
    eigenvectors plus N(0, 0.01) noise; `block-onehot` features are one-hot
    block indicators.
    """
    block_sizes = list(block_sizes)
    if not block_sizes:
        raise ArgumentError("block_sizes must be nonempty")
    if any(b < 0 for b in block_sizes):
        raise ArgumentError("negative block size")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ArgumentError("probabilities must be in [0, 1]")
    rng = np.random.default_rng(seed)
    n = int(sum(block_sizes))
    blocks = np.repeat(np.arange(len(block_sizes)), block_sizes)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(blocks[iu] == blocks[ju], p_in, p_out)
    keep = rng.random(iu.size) < p
    pairs = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    indptr, indices, _, _ = build_csr(n, pairs)

    if feature_mode == "block-onehot":
        feats = np.zeros((n, len(block_sizes)))
        feats[np.arange(n), blocks] = 1.0
    elif feature_mode == "smooth":
        from .spectral import normalized_laplacian

        g0 = Graph(n, indptr, indices, np.zeros((n, 1)))
        lap = normalized_laplacian(g0, dense=True)
        _, vecs = np.linalg.eigh(lap)
        k = min(5, n)
        coeff = rng.standard_normal((k, feature_dim))
        feats = vecs[:, :k] @ coeff + 0.01 * rng.standard_normal((n, feature_dim))
    else:
        raise ArgumentError(f"unknown feature_mode {feature_mode!r}")

    return Graph(n, indptr, indices, np.ascontiguousarray(feats, dtype=np.float64),
                 labels=blocks.astype(np.int64))


def degree_vector(g: Graph) -> np.ndarray:
    return g.degrees()


def permute_graph(g: Graph, perm: np.ndarray) -> Graph:
    """Relabel nodes: new index perm[i] for old node i (test utility)."""
    dst, src = g.edge_endpoints()
    pairs = [(int(perm[i]), int(perm[j])) for i, j in zip(dst, src) if perm[i] <= perm[j]]
    indptr, indices, _, _ = build_csr(g.num_nodes, pairs)
    feats = np.empty_like(g.node_features)
    feats[perm] = g.node_features
    labels = None
    if g.labels is not None:
        labels = np.empty_like(g.labels)
        labels[perm] = g.labels
    return Graph(g.num_nodes, indptr, indices, feats, labels=labels)
