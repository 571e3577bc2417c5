"""Undirected binary graphs with optional unknown-status (masked) node pairs.

A Graph stores, per node, the sorted array of known neighbours and the sorted
array of nodes whose edge status is unknown. Both relations are symmetric,
self-loop free, and disjoint, and node ids are dense 0-based integers so the
fitters can address rows in O(1). Graphs are immutable after construction;
masking returns a new Graph plus a MaskSet recording the hidden true
statuses.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

import numpy as np


def _canonical_pairs(pairs, num_nodes: int, what: str) -> np.ndarray:
    """Normalize (i, j) pairs to deduplicated, sorted rows with i < j."""
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{what} list must be an (M, 2) array of node ids")
    if arr.min() < 0 or arr.max() >= num_nodes:
        bad = arr[(arr < 0) | (arr >= num_nodes)][0]
        raise ValueError(f"{what} id {bad} out of range [0, {num_nodes})")
    if (arr[:, 0] == arr[:, 1]).any():
        i = int(arr[(arr[:, 0] == arr[:, 1]).argmax(), 0])
        raise ValueError(f"self-loop ({i}, {i}) not allowed")
    lo = arr.min(axis=1)
    hi = arr.max(axis=1)
    codes = np.unique(lo * num_nodes + hi)
    out = np.empty((codes.size, 2), dtype=np.int64)
    out[:, 0] = codes // num_nodes
    out[:, 1] = codes % num_nodes
    return out


def _pairs_to_csr(num_nodes: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build a CSR adjacency (indptr, indices) over both edge orientations."""
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst


class Graph:
    """Immutable undirected graph with known edges and masked (unknown) pairs."""

    __slots__ = ("num_nodes", "_eptr", "_eidx", "_mptr", "_midx")

    def __init__(self, num_nodes, edge_indptr, edge_indices, mask_indptr, mask_indices,
                 _validated: bool = False):
        self.num_nodes = int(num_nodes)
        self._eptr = np.asarray(edge_indptr, dtype=np.int64)
        self._eidx = np.asarray(edge_indices, dtype=np.int64)
        self._mptr = np.asarray(mask_indptr, dtype=np.int64)
        self._midx = np.asarray(mask_indices, dtype=np.int64)
        for a in (self._eptr, self._eidx, self._mptr, self._midx):
            a.setflags(write=False)
        if not _validated:
            self.validate()

    @classmethod
    def from_edge_pairs(cls, num_nodes: int, edges, masked=()) -> "Graph":
        """Build a Graph from (i, j) pair lists; duplicates and orientations are merged."""
        if num_nodes <= 0:
            raise ValueError("num_nodes must be positive")
        e = _canonical_pairs(edges, num_nodes, "edge")
        m = _canonical_pairs(masked, num_nodes, "masked pair")
        if e.size and m.size:
            overlap = np.intersect1d(e[:, 0] * num_nodes + e[:, 1],
                                     m[:, 0] * num_nodes + m[:, 1])
            if overlap.size:
                i, j = divmod(int(overlap[0]), num_nodes)
                raise ValueError(f"pair ({i}, {j}) is both a known edge and masked")
        eptr, eidx = _pairs_to_csr(num_nodes, e)
        mptr, midx = _pairs_to_csr(num_nodes, m)
        return cls(num_nodes, eptr, eidx, mptr, midx, _validated=True)

    # -- basic accessors -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self._eidx.size // 2

    @property
    def num_masked_pairs(self) -> int:
        return self._midx.size // 2

    def neighbors(self, i: int) -> np.ndarray:
        self._check_node(i)
        return self._eidx[self._eptr[i]:self._eptr[i + 1]]

    def masked_neighbors(self, i: int) -> np.ndarray:
        self._check_node(i)
        return self._midx[self._mptr[i]:self._mptr[i + 1]]

    def degree(self, i: int) -> int:
        self._check_node(i)
        return int(self._eptr[i + 1] - self._eptr[i])

    def num_known_pairs(self, i: int) -> int:
        """Count of nodes j != i whose edge status with i is known."""
        self._check_node(i)
        return self.num_nodes - 1 - int(self._mptr[i + 1] - self._mptr[i])

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbors(i)
        self._check_node(j)
        pos = np.searchsorted(row, j)
        return pos < row.size and row[pos] == j

    def is_masked(self, i: int, j: int) -> bool:
        row = self.masked_neighbors(i)
        self._check_node(j)
        pos = np.searchsorted(row, j)
        return pos < row.size and row[pos] == j

    def edge_pairs(self) -> np.ndarray:
        """All known edges as an (M, 2) array with i < j, lexicographically sorted."""
        return self._csr_pairs(self._eptr, self._eidx)

    def masked_pairs(self) -> np.ndarray:
        return self._csr_pairs(self._mptr, self._midx)

    def edge_csr(self) -> tuple[np.ndarray, np.ndarray]:
        return self._eptr, self._eidx

    def mask_csr(self) -> tuple[np.ndarray, np.ndarray]:
        return self._mptr, self._midx

    def _csr_pairs(self, ptr, idx) -> np.ndarray:
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(ptr))
        keep = src < idx
        out = np.empty((int(keep.sum()), 2), dtype=np.int64)
        out[:, 0] = src[keep]
        out[:, 1] = idx[keep]
        return out

    def _check_node(self, i) -> None:
        if not 0 <= int(i) < self.num_nodes:
            raise ValueError(f"node id {i} out of range [0, {self.num_nodes})")

    # -- invariants -------------------------------------------------------

    def validate(self) -> None:
        """Full-scan check of symmetry, sortedness, self-loops, and disjointness."""
        n = self.num_nodes
        for name, ptr, idx in (("edge", self._eptr, self._eidx),
                               ("mask", self._mptr, self._midx)):
            if ptr.shape != (n + 1,) or ptr[0] != 0 or ptr[-1] != idx.size:
                raise ValueError(f"{name} indptr malformed")
            if np.diff(ptr).min(initial=0) < 0:
                raise ValueError(f"{name} indptr not monotone")
            if idx.size:
                if idx.min() < 0 or idx.max() >= n:
                    raise ValueError(f"{name} index out of range")
            src = np.repeat(np.arange(n, dtype=np.int64), np.diff(ptr))
            if (src == idx).any():
                raise ValueError(f"{name} lists contain a self-loop")
            # strictly increasing within each row (sorted and deduplicated)
            same_row = src[1:] == src[:-1]
            if same_row.size and (np.diff(idx)[same_row] <= 0).any():
                raise ValueError(f"{name} lists not strictly sorted per node")
            fwd = np.sort(src * n + idx)
            rev = np.sort(idx * n + src)
            if not np.array_equal(fwd, rev):
                raise ValueError(f"{name} lists are not symmetric")
        if self._eidx.size and self._midx.size:
            esrc = np.repeat(np.arange(n, dtype=np.int64), np.diff(self._eptr))
            msrc = np.repeat(np.arange(n, dtype=np.int64), np.diff(self._mptr))
            if np.intersect1d(esrc * n + self._eidx, msrc * n + self._midx).size:
                raise ValueError("edge and mask lists are not disjoint")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self._eptr, other._eptr)
                and np.array_equal(self._eidx, other._eidx)
                and np.array_equal(self._mptr, other._mptr)
                and np.array_equal(self._midx, other._midx))

    def __hash__(self):
        return hash((self.num_nodes, self.num_edges, self.num_masked_pairs))

    def __repr__(self) -> str:
        return (f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges}, "
                f"num_masked_pairs={self.num_masked_pairs})")


@dataclasses.dataclass(frozen=True)
class MaskSet:
    """Held-out node pairs with their true edge status (1 edge, 0 non-edge)."""

    pairs: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j, s in self.pairs:
            if i == j:
                raise ValueError(f"mask pair ({i}, {j}) is a self-pair")
            if not (0 <= min(i, j) and i != j):
                raise ValueError(f"invalid mask pair ({i}, {j})")
            if s not in (0, 1):
                raise ValueError(f"mask status must be 0 or 1, got {s}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate mask pair {key}")
            seen.add(key)

    @property
    def num_edges(self) -> int:
        return sum(s for _, _, s in self.pairs)

    @property
    def num_nonedges(self) -> int:
        return len(self.pairs) - self.num_edges

    def pair_array(self) -> np.ndarray:
        if not self.pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.array([(i, j) for i, j, _ in self.pairs], dtype=np.int64)

    def labels(self) -> np.ndarray:
        return np.array([s for _, _, s in self.pairs], dtype=np.int64)

    def validate_against(self, g: Graph) -> None:
        for i, j, _ in self.pairs:
            if not g.is_masked(i, j):
                raise ValueError(f"mask pair ({i}, {j}) is absent from the graph's masked lists")


@dataclasses.dataclass(frozen=True)
class NodeMetadata:
    """Optional per-node categorical labels (for example an enrollment year)."""

    labels: dict[int, str]

    def label_of(self, i: int) -> str:
        return self.labels[i]

    def missing_nodes(self, num_nodes: int) -> list[int]:
        return [i for i in range(num_nodes) if i not in self.labels]


# -- file formats ----------------------------------------------------------
#
# Edge list:  "i j" per line, whitespace separated, 0-based ids, '#' comments.
# Mask file:  "i j status" per line with status in {0, 1}.
# Metadata:   "i label" per line.


def _parse_int_table(path, ncols: int, what: str) -> np.ndarray:
    """Parse a whitespace-separated integer table, reporting 1-based line numbers."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != ncols:
                raise ValueError(f"{path}:{lineno}: expected {ncols} fields, found {len(tokens)}")
            try:
                rows.append([int(t) for t in tokens])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer token in {tokens!r}") from None
            if rows[-1][0] == rows[-1][1] and ncols >= 2:
                i = rows[-1][0]
                raise ValueError(f"{path}:{lineno}: self-loop ({i}, {i}) rejected")
            if min(rows[-1][:2]) < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
    if not rows:
        raise ValueError(f"{path}: no {what} records found")
    return np.asarray(rows, dtype=np.int64)


def load_edge_list(path, num_nodes: int | None = None) -> Graph:
    """Load an undirected graph from an "i j" edge-list text file.

    Duplicate lines and both orientations are merged. The node count defaults
    to 1 + the largest id seen, unless an explicit num_nodes is given.
    """
    pairs = _parse_int_table(path, 2, "edge")
    inferred = int(pairs.max()) + 1
    if num_nodes is None:
        num_nodes = inferred
    elif num_nodes < inferred:
        raise ValueError(f"{path}: node id {inferred - 1} exceeds num_nodes={num_nodes}")
    return Graph.from_edge_pairs(num_nodes, pairs)


def save_edge_list(g: Graph, path) -> None:
    """Write the known edges as "i j" lines (canonical i < j order)."""
    pairs = g.edge_pairs()
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in pairs:
            fh.write(f"{i} {j}\n")


def load_mask_file(path) -> list[tuple[int, int, int]]:
    """Load "i j status" mask records."""
    rows = _parse_int_table(path, 3, "mask")
    bad = ~np.isin(rows[:, 2], (0, 1))
    if bad.any():
        raise ValueError(f"{path}: mask status must be 0 or 1")
    return [tuple(map(int, r)) for r in rows]


def save_mask_file(mask: MaskSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, s in mask.pairs:
            fh.write(f"{i} {j} {s}\n")


def load_metadata(path) -> NodeMetadata:
    """Load "i label" per-node metadata."""
    labels: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node label'")
            try:
                node = int(tokens[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer node id {tokens[0]!r}") from None
            if node in labels:
                raise ValueError(f"{path}:{lineno}: duplicate label for node {node}")
            labels[node] = tokens[1]
    return NodeMetadata(labels)


def save_metadata(meta: NodeMetadata, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for node in sorted(meta.labels):
            fh.write(f"{node} {meta.labels[node]}\n")


# -- masking ----------------------------------------------------------------


def degree(g: Graph, i: int) -> int:
    """Number of known neighbours of node i."""
    return g.degree(i)


def sample_pair_classes(g: Graph, seed: int, n_edges: int, n_nonedges: int
                        ) -> list[tuple[int, int, int]]:
    """Sample distinct known edges and known non-edges, uniformly per class.

    Masked pairs are never sampled. Non-edges are drawn by rejection from
    uniform random pairs, which is exact and cheap at realistic densities.
    """
    rng = np.random.default_rng(seed)
    n = g.num_nodes
    edges = g.edge_pairs()
    if n_edges > edges.shape[0]:
        raise ValueError(f"requested {n_edges} edges but only {edges.shape[0]} available "
                         f"(short by {n_edges - edges.shape[0]})")
    total_pairs = n * (n - 1) // 2
    avail_nonedges = total_pairs - g.num_edges - g.num_masked_pairs
    if n_nonedges > avail_nonedges:
        raise ValueError(f"requested {n_nonedges} non-edges but only {avail_nonedges} available "
                         f"(short by {n_nonedges - avail_nonedges})")
    out: list[tuple[int, int, int]] = []
    if n_edges:
        chosen = rng.choice(edges.shape[0], size=n_edges, replace=False)
        out.extend((int(edges[c, 0]), int(edges[c, 1]), 1) for c in chosen)
    picked: set[tuple[int, int]] = set()
    while len(picked) < n_nonedges:
        batch = max(64, 4 * (n_nonedges - len(picked)))
        cand = rng.integers(0, n, size=(batch, 2))
        for a, b in cand:
            if a == b:
                continue
            i, j = (int(a), int(b)) if a < b else (int(b), int(a))
            if (i, j) in picked or g.has_edge(i, j) or g.is_masked(i, j):
                continue
            picked.add((i, j))
            if len(picked) == n_nonedges:
                break
    out.extend((i, j, 0) for i, j in sorted(picked))
    return out


def mask_pairs(g: Graph, pairs: Iterable[tuple[int, int, int]]) -> tuple[Graph, MaskSet]:
    """Hide the given pairs: remove true edges from the edge lists, record all
    pairs in the masked lists, and return the new Graph plus the MaskSet."""
    norm = []
    for i, j, s in pairs:
        a, b = (int(i), int(j)) if i < j else (int(j), int(i))
        if a == b:
            raise ValueError(f"cannot mask self-pair ({a}, {b})")
        if g.is_masked(a, b):
            raise ValueError(f"pair ({a}, {b}) is already masked")
        actual = 1 if g.has_edge(a, b) else 0
        if actual != s:
            raise ValueError(f"pair ({a}, {b}) has status {actual}, mask record says {s}")
        norm.append((a, b, int(s)))
    mask = MaskSet(tuple(sorted(norm)))
    if not norm:
        return g, mask
    n = g.num_nodes
    drop = {(i, j) for i, j, s in norm if s == 1}
    old_edges = g.edge_pairs()
    if drop:
        codes = old_edges[:, 0] * n + old_edges[:, 1]
        drop_codes = np.array([i * n + j for i, j in drop], dtype=np.int64)
        keep = ~np.isin(codes, drop_codes)
        new_edges = old_edges[keep]
    else:
        new_edges = old_edges
    new_masked = [(i, j) for i, j, _ in norm]
    old_masked = g.masked_pairs()
    if old_masked.size:
        new_masked.extend((int(i), int(j)) for i, j in old_masked)
    out = Graph.from_edge_pairs(n, new_edges, new_masked)
    return out, mask


def apply_mask(g: Graph, seed: int, n_edges: int, n_nonedges: int) -> tuple[Graph, MaskSet]:
    """Uniformly mask n_edges known edges and n_nonedges known non-edges.

    Sampling is without replacement within each class and deterministic given
    the seed. The returned graph has the sampled pairs moved to its masked
    lists; the MaskSet records their true statuses for later evaluation.
    """
    return mask_pairs(g, sample_pair_classes(g, seed, n_edges, n_nonedges))
